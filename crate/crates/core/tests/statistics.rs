//! Distributional checks on the walk and the estimators, at fixed seeds.

use gfk_core::estimator::{gfk_expectation, WeightingMode, Window};
use gfk_core::model::{CouplingMode, ModelConfig};
use gfk_core::observables::{Observable, PairMode};
use gfk_core::sampler::{
    generate_trajectories, IncrementKind, InitMode, SamplerConfig, TrajectorySet,
};

fn column_stats(set: &TrajectorySet, record: usize, obs: usize) -> (f64, f64) {
    let v: Vec<f64> = set
        .trajectories
        .iter()
        .map(|t| t.value(record, obs))
        .collect();
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

#[test]
fn ou_walk_stays_stationary() {
    let model = ModelConfig {
        n_particles: 1,
        trap_enabled: false,
        trial_b: 0.5,
        ..ModelConfig::default()
    };
    let sampler = SamplerConfig {
        scale: 30,
        t_total: 2.0,
        burn_in: 0.0,
        init_mode: InitMode::TrialDensity,
        master_seed: 3,
        ..SamplerConfig::default()
    };
    let set = generate_trajectories(&model, &sampler, &[Observable::MeanXSq], None, 4000).unwrap();
    for (r, t) in set.times.iter().enumerate() {
        let (mean, se) = column_stats(&set, r, 0);
        assert!((mean - 0.5).abs() < 3.0 * se, "t = {t}: {mean} ± {se}");
    }
}

#[test]
fn free_walk_spreads_like_brownian_motion() {
    for kind in [IncrementKind::Binomial, IncrementKind::Gaussian] {
        let model = ModelConfig {
            n_particles: 1,
            trap_enabled: false,
            trial_b: 0.0,
            ..ModelConfig::default()
        };
        let sampler = SamplerConfig {
            scale: 10,
            t_total: 3.0,
            burn_in: 0.0,
            increment_kind: kind,
            master_seed: 8,
            ..SamplerConfig::default()
        };
        let set =
            generate_trajectories(&model, &sampler, &[Observable::MeanXSq], None, 4000).unwrap();
        for (r, &t) in set.times.iter().enumerate().skip(1) {
            let (mean, se) = column_stats(&set, r, 0);
            assert!((mean - t).abs() < 3.0 * se, "{kind} t = {t}: {mean} ± {se}");
        }
        // No drift: the final weight only carries the constant U = 0.
        assert!(set.trajectories.iter().all(|t| t.final_log_weight() == 0.0));
    }
}

#[test]
fn identical_particles_are_exchange_symmetric() {
    let model = ModelConfig {
        n_particles: 3,
        g_tilde: 0.6,
        sigma_tilde: 0.1,
        coupling_mode: CouplingMode::PostQuench,
        e0: 1.2,
        ..ModelConfig::default()
    };
    let sampler = SamplerConfig {
        scale: 10,
        t_total: 4.0,
        burn_in: 2.0,
        master_seed: 17,
        ..SamplerConfig::default()
    };
    let obs = [
        Observable::PairSq(0, 1),
        Observable::PairSq(1, 2),
        Observable::PairSq(0, 2),
    ];
    let set = generate_trajectories(&model, &sampler, &obs, None, 3000).unwrap();
    let w = Window::new(2.0, 4.0);
    let r: Vec<_> = (0..3)
        .map(|i| gfk_expectation(&set, i, w, WeightingMode::TimeAveraged).unwrap())
        .collect();
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        let tol = 3.0 * (r[a].std_error.powi(2) + r[b].std_error.powi(2)).sqrt();
        assert!((r[a].mean - r[b].mean).abs() < tol, "{a} {b}: {:?}", r);
    }
}

#[test]
fn free_pair_distance_is_twice_single_spread() {
    let model = ModelConfig {
        n_particles: 2,
        e0: 1.0,
        ..ModelConfig::default()
    };
    let sampler = SamplerConfig {
        scale: 10,
        t_total: 6.0,
        burn_in: 3.0,
        master_seed: 4,
        ..SamplerConfig::default()
    };
    let obs = [
        Observable::PairDistanceSq(PairMode::AllPairs),
        Observable::MeanXSq,
    ];
    let set = generate_trajectories(&model, &sampler, &obs, None, 3000).unwrap();
    let w = Window::new(3.0, 6.0);
    let pair = gfk_expectation(&set, 0, w, WeightingMode::TimeAveraged).unwrap();
    let single = gfk_expectation(&set, 1, w, WeightingMode::TimeAveraged).unwrap();
    let tol = 3.0 * (pair.std_error.powi(2) + 4.0 * single.std_error.powi(2)).sqrt();
    assert!(
        (pair.mean - 2.0 * single.mean).abs() < tol,
        "{pair:?} {single:?}"
    );
    assert!((single.mean - 0.5).abs() < 3.0 * single.std_error);
}
