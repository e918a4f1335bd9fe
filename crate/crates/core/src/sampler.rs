//! Drifted random walks Y(t) guided by the Gaussian trial function.
//!
//! Each coordinate moves by the Euler–Maruyama update
//!
//! ```text
//! y ← y + (∇φ₀/φ₀)(y)·Δs + ε/√n,   Δs = 1/n,  n = scale²
//! ```
//!
//! where ε is either a fair ±1 coin (binomial walk) or a standard normal.
//! After every move the action gains V_p(y)·Δs, evaluated at the new
//! position, so the trajectory weight at time s is exp(−action(s)).
//!
//! Trajectory `i` draws from a ChaCha8 stream seeded with the master seed and
//! selecting stream number `i`, so every trajectory can be regenerated on its
//! own and the set is identical for any thread count. Stream `u64::MAX` is
//! reserved for the pilot estimate of e₀.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{local_u, v_p, ModelConfig};
use crate::observables::{Observable, PairHistogramAccumulator};

/// Stream number used by [`pilot_e0`].
pub const PILOT_STREAM: u64 = u64::MAX;

/// Number of trial-density configurations averaged by [`pilot_e0`].
pub const PILOT_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementKind {
    /// ±1/√n with equal probability.
    #[default]
    Binomial,
    /// Normal with variance 1/n.
    Gaussian,
}

impl IncrementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IncrementKind::Binomial => "binomial",
            IncrementKind::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for IncrementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IncrementKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "binomial" => Ok(IncrementKind::Binomial),
            "gaussian" => Ok(IncrementKind::Gaussian),
            other => Err(format!(
                "unknown increment kind '{other}' (expected binomial or gaussian)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Every walker starts at the origin.
    #[default]
    Origin,
    /// Coordinates drawn from the stationary density ∝ φ₀².
    TrialDensity,
}

impl InitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::Origin => "origin",
            InitMode::TrialDensity => "trial_density",
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "origin" => Ok(InitMode::Origin),
            "trial_density" => Ok(InitMode::TrialDensity),
            other => Err(format!(
                "unknown init mode '{other}' (expected origin or trial_density)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// √(steps per unit imaginary time).
    pub scale: u32,
    pub t_total: f64,
    pub increment_kind: IncrementKind,
    pub init_mode: InitMode,
    pub master_seed: u64,
    /// Steps between recorded samples; `None` means ⌈n/10⌉.
    pub sample_stride: Option<u64>,
    /// Start of the measurement window; the window ends at `t_total`.
    pub burn_in: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            scale: 30,
            t_total: 10.0,
            increment_kind: IncrementKind::Binomial,
            init_mode: InitMode::Origin,
            master_seed: 1,
            sample_stride: None,
            burn_in: 5.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale < 1 {
            return Err(Error::range("scale", "must be at least 1"));
        }
        if !(self.t_total > 0.0 && self.t_total.is_finite()) {
            return Err(Error::range("t_total", "must be finite and positive"));
        }
        if self.total_steps() < 1 {
            return Err(Error::range("t_total", "shorter than one step"));
        }
        if self.sample_stride == Some(0) {
            return Err(Error::range("stride", "must be at least 1"));
        }
        if !(self.burn_in >= 0.0 && self.burn_in <= self.t_total) {
            return Err(Error::range("burn_in", "must lie within [0, t_total]"));
        }
        Ok(())
    }

    /// n = scale².
    pub fn steps_per_unit_time(&self) -> u64 {
        u64::from(self.scale) * u64::from(self.scale)
    }

    pub fn time_step(&self) -> f64 {
        1.0 / self.steps_per_unit_time() as f64
    }

    pub fn total_steps(&self) -> u64 {
        (self.steps_per_unit_time() as f64 * self.t_total).round() as u64
    }

    pub fn stride(&self) -> u64 {
        self.sample_stride
            .unwrap_or_else(|| self.steps_per_unit_time().div_ceil(10))
    }

    /// Step indices at which a trajectory records its state: 0, every
    /// stride, and always the final step.
    pub fn record_steps(&self) -> Vec<u64> {
        let total = self.total_steps();
        let stride = self.stride();
        let mut steps: Vec<u64> = (0..=total).step_by(stride as usize).collect();
        if steps.last() != Some(&total) {
            steps.push(total);
        }
        steps
    }

    pub fn record_times(&self) -> Vec<f64> {
        let n = self.steps_per_unit_time() as f64;
        self.record_steps().iter().map(|&s| s as f64 / n).collect()
    }
}

/// One point of configuration space plus the accumulated action.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerState {
    pub positions: Vec<f64>,
    /// Σ V_p·Δs so far.
    pub action: f64,
    pub step_index: u64,
}

impl WalkerState {
    pub fn log_weight(&self) -> f64 {
        -self.action
    }
}

/// The random stream owned by trajectory `index`.
pub fn trajectory_stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

pub fn increment<R: Rng + ?Sized>(rng: &mut R, n: u64, kind: IncrementKind) -> f64 {
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    match kind {
        IncrementKind::Binomial => {
            if rng.random::<bool>() {
                inv_sqrt_n
            } else {
                -inv_sqrt_n
            }
        }
        IncrementKind::Gaussian => rng.sample::<f64, _>(StandardNormal) * inv_sqrt_n,
    }
}

pub fn init_walker<R: Rng + ?Sized>(
    model: &ModelConfig,
    sampler: &SamplerConfig,
    rng: &mut R,
) -> Result<WalkerState> {
    let positions = match sampler.init_mode {
        InitMode::Origin => vec![0.0; model.n_particles],
        InitMode::TrialDensity => {
            let sd = trial_density_sd(model.trial_b)?;
            (0..model.n_particles)
                .map(|_| rng.sample::<f64, _>(StandardNormal) * sd)
                .collect()
        }
    };
    Ok(WalkerState {
        positions,
        action: 0.0,
        step_index: 0,
    })
}

/// Standard deviation of one coordinate under φ₀² ∝ exp(−2b x²).
fn trial_density_sd(b: f64) -> Result<f64> {
    if b > 0.0 {
        Ok((1.0 / (4.0 * b)).sqrt())
    } else {
        Err(Error::range("b", "trial density needs b > 0"))
    }
}

/// Moves the walker with the given diffusion increments (one per coordinate).
pub fn step_with_increments(
    state: &mut WalkerState,
    model: &ModelConfig,
    dt: f64,
    increments: &[f64],
) -> Result<()> {
    let b = model.trial_b;
    for (y, &dw) in state.positions.iter_mut().zip(increments) {
        *y += -2.0 * b * *y * dt + dw;
    }
    state.step_index += 1;
    if state.positions.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonFiniteWalker {
            trajectory: 0,
            step: state.step_index,
        });
    }
    state.action += v_p(&state.positions, model) * dt;
    Ok(())
}

/// One Euler–Maruyama step drawing fresh increments from `rng`.
pub fn step<R: Rng + ?Sized>(
    state: &mut WalkerState,
    model: &ModelConfig,
    sampler: &SamplerConfig,
    rng: &mut R,
) -> Result<()> {
    let n = sampler.steps_per_unit_time();
    let increments: Vec<f64> = (0..state.positions.len())
        .map(|_| increment(rng, n, sampler.increment_kind))
        .collect();
    step_with_increments(state, model, sampler.time_step(), &increments)
}

/// Optional pair-distance histogram collected inside the measurement window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bin_width: f64,
    pub r_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub index: u64,
    /// −action at each recorded step (see [`SamplerConfig::record_steps`]).
    pub log_weights: Vec<f64>,
    /// Observable values, one row of `n_observables` per recorded step.
    pub values: Vec<f64>,
    pub n_observables: usize,
    pub histogram: Option<PairHistogramAccumulator>,
}

impl Trajectory {
    /// Final weight Z = exp(−∫ V_p ds).
    pub fn final_weight(&self) -> f64 {
        self.final_log_weight().exp()
    }

    pub fn final_log_weight(&self) -> f64 {
        *self.log_weights.last().expect("trajectory has records")
    }

    pub fn value(&self, record: usize, observable: usize) -> f64 {
        self.values[record * self.n_observables + observable]
    }

    pub fn n_records(&self) -> usize {
        self.log_weights.len()
    }
}

/// Runs one trajectory from its own stream.
pub fn generate_trajectory(
    model: &ModelConfig,
    sampler: &SamplerConfig,
    observables: &[Observable],
    histogram: Option<&HistogramSpec>,
    index: u64,
) -> Result<Trajectory> {
    let mut rng = trajectory_stream(sampler.master_seed, index);
    let mut state = init_walker(model, sampler, &mut rng)?;
    let n = sampler.steps_per_unit_time();
    let dt = sampler.time_step();
    let record_steps = sampler.record_steps();
    let mut hist = histogram
        .map(|h| PairHistogramAccumulator::new(h.bin_width, h.r_max))
        .transpose()?;

    let mut log_weights = Vec::with_capacity(record_steps.len());
    let mut values = Vec::with_capacity(record_steps.len() * observables.len());
    let mut increments = vec![0.0; model.n_particles];
    let mut record = |state: &WalkerState, hist: &mut Option<PairHistogramAccumulator>| {
        log_weights.push(state.log_weight());
        values.extend(observables.iter().map(|o| o.evaluate(&state.positions)));
        if let Some(h) = hist.as_mut() {
            if state.step_index as f64 / n as f64 >= sampler.burn_in {
                h.add(&state.positions, state.log_weight());
            }
        }
    };

    record(&state, &mut hist);
    for &target in &record_steps[1..] {
        while state.step_index < target {
            for dw in increments.iter_mut() {
                *dw = increment(&mut rng, n, sampler.increment_kind);
            }
            step_with_increments(&mut state, model, dt, &increments).map_err(|e| match e {
                Error::NonFiniteWalker { step, .. } => Error::NonFiniteWalker {
                    trajectory: index,
                    step,
                },
                other => other,
            })?;
        }
        record(&state, &mut hist);
    }

    Ok(Trajectory {
        index,
        log_weights,
        values,
        n_observables: observables.len(),
        histogram: hist,
    })
}

/// All trajectories of a run together with the shared record schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub times: Vec<f64>,
    pub observables: Vec<Observable>,
    pub trajectories: Vec<Trajectory>,
}

impl TrajectorySet {
    pub fn observable_index(&self, observable: &Observable) -> Option<usize> {
        self.observables.iter().position(|o| o == observable)
    }
}

/// Generates trajectories `0..count` in parallel on the current rayon pool.
/// The result is ordered by trajectory index.
pub fn generate_trajectories(
    model: &ModelConfig,
    sampler: &SamplerConfig,
    observables: &[Observable],
    histogram: Option<&HistogramSpec>,
    count: u64,
) -> Result<TrajectorySet> {
    model.validate()?;
    sampler.validate()?;
    for o in observables {
        o.check(model.n_particles)?;
    }
    let trajectories = (0..count)
        .into_par_iter()
        .map(|i| generate_trajectory(model, sampler, observables, histogram, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectorySet {
        times: sampler.record_times(),
        observables: observables.to_vec(),
        trajectories,
    })
}

/// Variational energy of φ₀: the mean of U over configurations drawn from φ₀².
pub fn pilot_e0(model: &ModelConfig, master_seed: u64, samples: usize) -> Result<f64> {
    let sd = trial_density_sd(model.trial_b)?;
    let mut rng = trajectory_stream(master_seed, PILOT_STREAM);
    let mut x = vec![0.0; model.n_particles];
    let mut sum = 0.0;
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = rng.sample::<f64, _>(StandardNormal) * sd;
        }
        sum += local_u(&x, model);
    }
    Ok(sum / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_single() -> ModelConfig {
        ModelConfig {
            n_particles: 1,
            g_tilde: 0.0,
            trial_b: 0.5,
            e0: 0.5,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn binomial_increment_is_exactly_plus_minus() {
        let mut rng = trajectory_stream(3, 0);
        let step = 1.0 / 30.0;
        for _ in 0..1000 {
            let v = increment(&mut rng, 900, IncrementKind::Binomial);
            assert!(v == step || v == -step, "{v}");
        }
    }

    #[test]
    fn increment_moments() {
        let draws = 1_000_000;
        let n = 900;
        for kind in [IncrementKind::Binomial, IncrementKind::Gaussian] {
            let mut rng = trajectory_stream(5, 1);
            let xs: Vec<f64> = (0..draws).map(|_| increment(&mut rng, n, kind)).collect();
            let mean = xs.iter().sum::<f64>() / draws as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
            let se = (1.0 / n as f64 / draws as f64).sqrt();
            assert!(mean.abs() < 4.0 * se, "{kind}: mean {mean}");
            assert!((var * n as f64 - 1.0).abs() < 0.01, "{kind}: var {var}");
        }
    }

    #[test]
    fn drift_free_single_step() {
        let model = ModelConfig {
            n_particles: 1,
            trial_b: 0.0,
            trap_enabled: false,
            ..ModelConfig::default()
        };
        let sampler = SamplerConfig::default();
        let mut rng = trajectory_stream(9, 0);
        let mut state = init_walker(&model, &sampler, &mut rng).unwrap();
        assert_eq!(state.positions, vec![0.0]);
        step(&mut state, &model, &sampler, &mut rng).unwrap();
        assert_eq!(state.positions[0].abs(), 1.0 / 30.0);
        assert_eq!(state.step_index, 1);
    }

    #[test]
    fn pure_drift_contracts() {
        let model = ModelConfig {
            n_particles: 2,
            trial_b: 0.5,
            ..ModelConfig::default()
        };
        let n = 900.0;
        let mut state = WalkerState {
            positions: vec![1.0, -2.0],
            action: 0.0,
            step_index: 0,
        };
        let factor = 1.0 - 2.0 * 0.5 / n;
        for k in 1..=50 {
            step_with_increments(&mut state, &model, 1.0 / n, &[0.0, 0.0]).unwrap();
            let expected = factor.powi(k);
            assert!((state.positions[0] - expected).abs() < 1e-13);
            assert!((state.positions[1] + 2.0 * expected).abs() < 1e-13);
        }
    }

    #[test]
    fn exact_trial_keeps_zero_action() {
        let model = exact_single();
        let sampler = SamplerConfig {
            t_total: 2.0,
            ..SamplerConfig::default()
        };
        let mut rng = trajectory_stream(1, 4);
        let mut state = init_walker(&model, &sampler, &mut rng).unwrap();
        for _ in 0..sampler.total_steps() {
            step(&mut state, &model, &sampler, &mut rng).unwrap();
        }
        assert_eq!(state.action, 0.0);
        let traj = generate_trajectory(&model, &sampler, &[Observable::MeanXSq], None, 7).unwrap();
        assert_eq!(traj.final_weight(), 1.0);
    }

    #[test]
    fn non_finite_walker_is_an_error() {
        let model = ModelConfig {
            n_particles: 1,
            ..ModelConfig::default()
        };
        let mut state = WalkerState {
            positions: vec![0.0],
            action: 0.0,
            step_index: 0,
        };
        let err = step_with_increments(&mut state, &model, 0.01, &[f64::INFINITY]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteWalker { step: 1, .. }));
    }

    #[test]
    fn trial_density_variance() {
        for (b, expected) in [(0.5, 0.5), (0.25, 1.0)] {
            let model = ModelConfig {
                n_particles: 1,
                trial_b: b,
                ..ModelConfig::default()
            };
            let sampler = SamplerConfig {
                init_mode: InitMode::TrialDensity,
                ..SamplerConfig::default()
            };
            let mut rng = trajectory_stream(21, 0);
            let walkers = 100_000;
            let var = (0..walkers)
                .map(|_| init_walker(&model, &sampler, &mut rng).unwrap().positions[0].powi(2))
                .sum::<f64>()
                / walkers as f64;
            assert!((var / expected - 1.0).abs() < 0.02, "b {b}: {var}");
        }
    }

    #[test]
    fn deterministic_per_index() {
        let model = ModelConfig {
            n_particles: 3,
            g_tilde: 1.0,
            sigma_tilde: 0.05,
            trial_b: 0.3,
            e0: 0.1,
            ..ModelConfig::default()
        };
        let sampler = SamplerConfig {
            t_total: 1.0,
            increment_kind: IncrementKind::Gaussian,
            ..SamplerConfig::default()
        };
        let obs = [Observable::MeanXSq];
        let a = generate_trajectory(&model, &sampler, &obs, None, 12).unwrap();
        let b = generate_trajectory(&model, &sampler, &obs, None, 12).unwrap();
        let c = generate_trajectory(&model, &sampler, &obs, None, 13).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.log_weights, c.log_weights);
    }

    #[test]
    fn record_schedule() {
        let s = SamplerConfig {
            scale: 3,
            t_total: 1.0,
            ..SamplerConfig::default()
        };
        // n = 9, stride = 1
        assert_eq!(s.record_steps(), (0..=9).collect::<Vec<_>>());
        let s = SamplerConfig {
            scale: 30,
            t_total: 0.25,
            ..SamplerConfig::default()
        };
        assert_eq!(s.total_steps(), 225);
        assert_eq!(s.stride(), 90);
        assert_eq!(s.record_steps(), vec![0, 90, 180, 225]);
    }

    #[test]
    fn pilot_matches_closed_form() {
        // Trap on, no interaction: <U> = N b + (1/2 - 2b^2) N/(4b).
        let model = ModelConfig {
            n_particles: 4,
            trial_b: 0.3,
            ..ModelConfig::default()
        };
        let e0 = pilot_e0(&model, 2, 200_000).unwrap();
        let exact = 4.0 * 0.3 + (0.5 - 2.0 * 0.09) * 4.0 / (4.0 * 0.3);
        assert!((e0 - exact).abs() < 0.01, "{e0} vs {exact}");
        let flat = ModelConfig {
            trial_b: 0.0,
            ..model
        };
        assert!(pilot_e0(&flat, 2, 10).is_err());
    }
}
