//! Weighted-trajectory estimators.
//!
//! Expectation values are ratio estimators
//!
//! ```text
//! ⟨A⟩ = Σ_m Σ_s Z_m(s) A(Y_m(s)) / Σ_m Σ_s Z_m(s),   Z_m(s) = exp(−∫₀ˢ V_p)
//! ```
//!
//! over the recorded times s of a window. Each trajectory is one jackknife
//! block, which sidesteps estimating autocorrelation times inside a
//! trajectory. All weights are handled in log space relative to a common
//! maximum, and every reduction runs in trajectory-index order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::TrajectorySet;

/// Below this effective sample size the weights are considered collapsed.
pub const MIN_EFFECTIVE_SAMPLE_SIZE: f64 = 5.0;

// Recorded times are k/n in floating point.
const TIME_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub t_start: f64,
    pub t_end: f64,
}

impl Window {
    pub fn new(t_start: f64, t_end: f64) -> Self {
        Window { t_start, t_end }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start - TIME_TOLERANCE && t <= self.t_end + TIME_TOLERANCE
    }

    fn record_indices(&self, times: &[f64]) -> Vec<usize> {
        times
            .iter()
            .enumerate()
            .filter(|(_, &t)| self.contains(t))
            .map(|(i, _)| i)
            .collect()
    }
}

/// How samples inside the window enter the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    /// Every recorded time in the window.
    #[default]
    TimeAveraged,
    /// Only the last recorded time in the window.
    Endpoint,
}

impl WeightingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightingMode::TimeAveraged => "time_averaged",
            WeightingMode::Endpoint => "endpoint",
        }
    }
}

impl fmt::Display for WeightingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "time_averaged" => Ok(WeightingMode::TimeAveraged),
            "endpoint" => Ok(WeightingMode::Endpoint),
            other => Err(format!(
                "unknown weighting '{other}' (expected time_averaged or endpoint)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub mean: f64,
    /// One leave-one-trajectory-out jackknife standard error.
    pub std_error: f64,
    pub n_trajectories: usize,
    pub samples_per_trajectory: usize,
    /// (ΣW)²/ΣW² over trajectory-level weights.
    pub effective_sample_size: f64,
    pub window: Window,
    /// Variance of ln Z across trajectories at the end of the window.
    pub weight_dispersion: f64,
}

/// Per-trajectory block sums of a ratio estimator: Σ_s w and Σ_s w·A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSums {
    pub weight: f64,
    pub weighted_value: f64,
}

/// (Z₁ + … + Z_N) / N.
pub fn replica_average(weights: &[f64]) -> f64 {
    assert!(!weights.is_empty(), "replica_average of an empty list");
    weights.iter().sum::<f64>() / weights.len() as f64
}

/// Leave-one-out jackknife standard error of ΣS/ΣW over blocks.
pub fn jackknife_error(blocks: &[BlockSums]) -> f64 {
    let m = blocks.len();
    assert!(m >= 2, "jackknife needs at least two blocks");
    let total_w: f64 = blocks.iter().map(|b| b.weight).sum();
    let total_s: f64 = blocks.iter().map(|b| b.weighted_value).sum();
    let leave_out: Vec<f64> = blocks
        .iter()
        .map(|b| (total_s - b.weighted_value) / (total_w - b.weight))
        .collect();
    jackknife_spread(&leave_out)
}

/// √((m−1)/m · Σ (θ₍ₖ₎ − θ̄)²) for leave-one-out estimates θ₍ₖ₎.
fn jackknife_spread(leave_out: &[f64]) -> f64 {
    let m = leave_out.len() as f64;
    let mean = leave_out.iter().sum::<f64>() / m;
    let ss: f64 = leave_out.iter().map(|t| (t - mean).powi(2)).sum();
    ((m - 1.0) / m * ss).sqrt()
}

fn effective_sample_size(weights: &[f64]) -> f64 {
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    sum * sum / sum_sq
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)
}

fn check_ess(ess: f64) -> Result<()> {
    if ess < MIN_EFFECTIVE_SAMPLE_SIZE || !ess.is_finite() {
        return Err(Error::DegenerateWeights {
            effective_sample_size: ess,
            threshold: MIN_EFFECTIVE_SAMPLE_SIZE,
        });
    }
    Ok(())
}

fn check_trajectories(set: &TrajectorySet) -> Result<usize> {
    let m = set.trajectories.len();
    if m < 2 {
        return Err(Error::TooFewTrajectories(m));
    }
    Ok(m)
}

/// Weighted expectation of observable `observable` over `window`.
pub fn gfk_expectation(
    set: &TrajectorySet,
    observable: usize,
    window: Window,
    mode: WeightingMode,
) -> Result<EstimatorResult> {
    let m = check_trajectories(set)?;
    let mut records = window.record_indices(&set.times);
    if records.is_empty() {
        return Err(Error::EmptyWindow {
            t_start: window.t_start,
            t_end: window.t_end,
            found: 0,
            needed: 1,
        });
    }
    if mode == WeightingMode::Endpoint {
        records = vec![*records.last().expect("nonempty")];
    }
    let last = *records.last().expect("nonempty");

    let log_max = set
        .trajectories
        .iter()
        .flat_map(|t| records.iter().map(|&r| t.log_weights[r]))
        .fold(f64::NEG_INFINITY, f64::max);

    let blocks: Vec<BlockSums> = set
        .trajectories
        .iter()
        .map(|t| {
            let mut weight = 0.0;
            let mut weighted_value = 0.0;
            for &r in &records {
                let w = (t.log_weights[r] - log_max).exp();
                weight += w;
                weighted_value += w * t.value(r, observable);
            }
            BlockSums {
                weight,
                weighted_value,
            }
        })
        .collect();

    let block_weights: Vec<f64> = blocks.iter().map(|b| b.weight).collect();
    let ess = effective_sample_size(&block_weights);
    check_ess(ess)?;

    let total_w: f64 = blocks.iter().map(|b| b.weight).sum();
    let total_s: f64 = blocks.iter().map(|b| b.weighted_value).sum();
    let final_logs: Vec<f64> = set
        .trajectories
        .iter()
        .map(|t| t.log_weights[last])
        .collect();

    Ok(EstimatorResult {
        mean: total_s / total_w,
        std_error: jackknife_error(&blocks),
        n_trajectories: m,
        samples_per_trajectory: records.len(),
        effective_sample_size: ess,
        window,
        weight_dispersion: variance(&final_logs),
    })
}

/// Ground-state energy from the decay of the mean weight:
/// Z̄(t) ~ exp(−(E₀ − e₀) t), so E₀ = e₀ + slope of −ln Z̄(t), fitted by
/// least squares over the recorded times in `fit_window`.
pub fn ground_energy(set: &TrajectorySet, fit_window: Window, e0: f64) -> Result<EstimatorResult> {
    let m = check_trajectories(set)?;
    let records = fit_window.record_indices(&set.times);
    if records.len() < 2 {
        return Err(Error::EmptyWindow {
            t_start: fit_window.t_start,
            t_end: fit_window.t_end,
            found: records.len(),
            needed: 2,
        });
    }
    let last = *records.last().expect("nonempty");
    let times: Vec<f64> = records.iter().map(|&r| set.times[r]).collect();

    // Per record: common log offset and the shifted weights of every trajectory.
    let offsets: Vec<f64> = records
        .iter()
        .map(|&r| {
            set.trajectories
                .iter()
                .map(|t| t.log_weights[r])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let shifted =
        |traj: usize, k: usize| (set.trajectories[traj].log_weights[records[k]] - offsets[k]).exp();
    let totals: Vec<f64> = (0..records.len())
        .map(|k| (0..m).map(|j| shifted(j, k)).sum())
        .collect();

    let final_weights: Vec<f64> = (0..m).map(|j| shifted(j, records.len() - 1)).collect();
    let ess = effective_sample_size(&final_weights);
    check_ess(ess)?;

    let neg_log_mean = |sum: f64, k: usize, count: usize| -((sum / count as f64).ln() + offsets[k]);
    let full: Vec<f64> = totals
        .iter()
        .enumerate()
        .map(|(k, &s)| neg_log_mean(s, k, m))
        .collect();
    let slope = least_squares_slope(&times, &full);

    let leave_out: Vec<f64> = (0..m)
        .map(|j| {
            let ys: Vec<f64> = totals
                .iter()
                .enumerate()
                .map(|(k, &s)| neg_log_mean(s - shifted(j, k), k, m - 1))
                .collect();
            least_squares_slope(&times, &ys)
        })
        .collect();

    let final_logs: Vec<f64> = set
        .trajectories
        .iter()
        .map(|t| t.log_weights[last])
        .collect();

    Ok(EstimatorResult {
        mean: e0 + slope,
        std_error: jackknife_spread(&leave_out),
        n_trajectories: m,
        samples_per_trajectory: records.len(),
        effective_sample_size: ess,
        window: fit_window,
        weight_dispersion: variance(&final_logs),
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::Observable;
    use crate::sampler::Trajectory;

    /// Synthetic set: record times 0..k, log weights and one observable.
    fn synthetic(log_weights: Vec<Vec<f64>>, values: Vec<Vec<f64>>) -> TrajectorySet {
        let records = log_weights[0].len();
        TrajectorySet {
            times: (0..records).map(|k| k as f64).collect(),
            observables: vec![Observable::MeanXSq],
            trajectories: log_weights
                .into_iter()
                .zip(values)
                .enumerate()
                .map(|(i, (lw, v))| Trajectory {
                    index: i as u64,
                    log_weights: lw,
                    values: v,
                    n_observables: 1,
                    histogram: None,
                })
                .collect(),
        }
    }

    #[test]
    fn replica_average_values() {
        assert_eq!(replica_average(&[1.0, 1.0, 1.0]), 1.0);
        assert_eq!(replica_average(&[2.0, 0.0]), 1.0);
    }

    #[test]
    fn jackknife_values() {
        let same = BlockSums {
            weight: 2.0,
            weighted_value: 3.0,
        };
        assert_eq!(jackknife_error(&[same; 4]), 0.0);
        let two = [
            BlockSums {
                weight: 1.0,
                weighted_value: 0.0,
            },
            BlockSums {
                weight: 1.0,
                weighted_value: 2.0,
            },
        ];
        assert!((jackknife_error(&two) - 1.0).abs() < 1e-15);
        let mut blocks: Vec<BlockSums> = (0..7)
            .map(|k| BlockSums {
                weight: 1.0 + k as f64 * 0.3,
                weighted_value: (k as f64).sin(),
            })
            .collect();
        let before = jackknife_error(&blocks);
        blocks.reverse();
        blocks.swap(1, 4);
        assert!((jackknife_error(&blocks) - before).abs() < 1e-14);
    }

    #[test]
    fn constant_observable_is_exactly_one() {
        let m = 20;
        let lw: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..5).map(|k| -0.1 * (i * k) as f64).collect())
            .collect();
        let v = vec![vec![1.0; 5]; m];
        let set = synthetic(lw, v);
        for mode in [WeightingMode::TimeAveraged, WeightingMode::Endpoint] {
            let r = gfk_expectation(&set, 0, Window::new(1.0, 4.0), mode).unwrap();
            assert_eq!(r.mean, 1.0);
            assert_eq!(r.std_error, 0.0);
        }
    }

    #[test]
    fn collapsed_weights_are_rejected() {
        let mut lw = vec![vec![0.0, 0.0]; 10];
        lw[3] = vec![0.0, 50.0];
        let set = synthetic(lw, vec![vec![1.0, 1.0]; 10]);
        let err = gfk_expectation(&set, 0, Window::new(0.0, 1.0), WeightingMode::Endpoint);
        assert!(matches!(err, Err(Error::DegenerateWeights { .. })));
        assert!(matches!(
            ground_energy(&set, Window::new(0.0, 1.0), 0.0),
            Err(Error::DegenerateWeights { .. })
        ));
    }

    #[test]
    fn empty_window_and_single_trajectory() {
        let set = synthetic(vec![vec![0.0; 3]; 3], vec![vec![1.0; 3]; 3]);
        assert!(matches!(
            gfk_expectation(&set, 0, Window::new(5.0, 6.0), WeightingMode::TimeAveraged),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(matches!(
            ground_energy(&set, Window::new(2.0, 2.0), 0.0),
            Err(Error::EmptyWindow { needed: 2, .. })
        ));
        let one = synthetic(vec![vec![0.0; 3]], vec![vec![1.0; 3]]);
        assert!(matches!(
            ground_energy(&one, Window::new(0.0, 2.0), 0.0),
            Err(Error::TooFewTrajectories(1))
        ));
    }

    #[test]
    fn ground_energy_recovers_exponential_decay() {
        // Z_m(t) = c_m exp(-(E - e0) t) with trajectory-dependent prefactors.
        let e0 = 0.3;
        let energy = -0.7;
        let lw: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                (0..8)
                    .map(|k| (1.0 + 0.1 * i as f64).ln() - (energy - e0) * k as f64)
                    .collect()
            })
            .collect();
        let set = synthetic(lw, vec![vec![0.0; 8]; 12]);
        let r = ground_energy(&set, Window::new(2.0, 7.0), e0).unwrap();
        assert!((r.mean - energy).abs() < 1e-12, "{}", r.mean);
        assert!(r.std_error < 1e-12);
        assert_eq!(r.samples_per_trajectory, 6);
    }

    #[test]
    fn endpoint_uses_last_record_only() {
        let lw = vec![vec![0.0, 0.0, 0.0]; 6];
        let values: Vec<Vec<f64>> = (0..6).map(|i| vec![100.0, 100.0, i as f64]).collect();
        let set = synthetic(lw, values);
        let r = gfk_expectation(&set, 0, Window::new(0.0, 2.0), WeightingMode::Endpoint).unwrap();
        assert!((r.mean - 2.5).abs() < 1e-15);
        assert_eq!(r.samples_per_trajectory, 1);
    }
}
