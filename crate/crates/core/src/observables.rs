//! Observables evaluated on walker configurations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// (x₁ − x₂)² only.
    FirstPair,
    /// Mean of (xᵢ − xⱼ)² over all i < j. Same expectation for bosons,
    /// lower variance.
    #[default]
    AllPairs,
}

/// Second moment of the pair distance.
pub fn pair_distance_sq(x: &[f64], mode: PairMode) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewParticles(n));
    }
    Ok(match mode {
        PairMode::FirstPair => {
            let r = x[0] - x[1];
            r * r
        }
        PairMode::AllPairs => {
            let mut sum = 0.0;
            for (i, &xi) in x.iter().enumerate() {
                for &xj in &x[i + 1..] {
                    let r = xi - xj;
                    sum += r * r;
                }
            }
            sum / ((n * (n - 1) / 2) as f64)
        }
    })
}

/// (1/N) Σ xᵢ².
pub fn mean_x_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// An observable A(Y) that the sampler records along each trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    PairDistanceSq(PairMode),
    MeanXSq,
    /// (xᵢ − xⱼ)² for one specific pair, for exchange-symmetry checks.
    PairSq(usize, usize),
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::PairDistanceSq(PairMode::AllPairs) => "pair_distance_sq".into(),
            Observable::PairDistanceSq(PairMode::FirstPair) => "pair_distance_sq_first".into(),
            Observable::MeanXSq => "mean_x_sq".into(),
            Observable::PairSq(i, j) => format!("pair_sq_{i}_{j}"),
        }
    }

    /// Checks the observable is defined for `n_particles`.
    pub fn check(&self, n_particles: usize) -> Result<()> {
        match *self {
            Observable::PairDistanceSq(_) if n_particles < 2 => {
                Err(Error::TooFewParticles(n_particles))
            }
            Observable::PairSq(i, j) if i == j || i.max(j) >= n_particles => Err(Error::range(
                "observables",
                format!("pair ({i}, {j}) is not valid for N = {n_particles}"),
            )),
            _ => Ok(()),
        }
    }

    /// Evaluates the observable. The configuration must satisfy [`Observable::check`].
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match *self {
            Observable::PairDistanceSq(mode) => {
                pair_distance_sq(x, mode).expect("observable checked against N")
            }
            Observable::MeanXSq => mean_x_sq(x),
            Observable::PairSq(i, j) => {
                let r = x[i] - x[j];
                r * r
            }
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Observable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pair_distance_sq" => Ok(Observable::PairDistanceSq(PairMode::AllPairs)),
            "pair_distance_sq_first" => Ok(Observable::PairDistanceSq(PairMode::FirstPair)),
            "mean_x_sq" => Ok(Observable::MeanXSq),
            other => {
                let parsed = other.strip_prefix("pair_sq_").and_then(|rest| {
                    let (i, j) = rest.split_once('_')?;
                    Some((i.parse().ok()?, j.parse().ok()?))
                });
                match parsed {
                    Some((i, j)) => Ok(Observable::PairSq(i, j)),
                    None => Err(format!("unknown observable '{other}'")),
                }
            }
        }
    }
}

/// Normalized histogram of pair distances |xᵢ − xⱼ|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub r_max: f64,
    pub mass: Vec<f64>,
}

impl Histogram {
    pub fn bin_centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.mass.len()).map(move |k| (k as f64 + 0.5) * self.bin_width)
    }
}

fn bin_count(bin_width: f64, r_max: f64) -> Result<usize> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::range(
            "hist_bin_width",
            "must be finite and positive",
        ));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::range("hist_r_max", "must be finite and positive"));
    }
    Ok(((r_max / bin_width).ceil() as usize).max(1))
}

fn bin_index(r: f64, bin_width: f64, bins: usize) -> usize {
    // Distances beyond r_max land in the last bin so the mass stays 1.
    ((r.abs() / bin_width) as usize).min(bins - 1)
}

/// Weighted histogram of `(distance, weight)` samples, normalized to unit mass.
pub fn pair_histogram(samples: &[(f64, f64)], bin_width: f64, r_max: f64) -> Result<Histogram> {
    let bins = bin_count(bin_width, r_max)?;
    let mut mass = vec![0.0; bins];
    for &(r, w) in samples {
        mass[bin_index(r, bin_width, bins)] += w;
    }
    let total: f64 = mass.iter().sum();
    if total > 0.0 {
        mass.iter_mut().for_each(|m| *m /= total);
    }
    Ok(Histogram {
        bin_width,
        r_max,
        mass,
    })
}

/// Accumulates pair-distance histograms along one trajectory with weights
/// given in log space. The running reference keeps the bins finite when the
/// weights span hundreds of e-folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairHistogramAccumulator {
    pub bin_width: f64,
    pub mass: Vec<f64>,
    /// Every entry of `mass` is implicitly multiplied by exp(log_reference).
    pub log_reference: f64,
}

impl PairHistogramAccumulator {
    pub fn new(bin_width: f64, r_max: f64) -> Result<Self> {
        let bins = bin_count(bin_width, r_max)?;
        Ok(PairHistogramAccumulator {
            bin_width,
            mass: vec![0.0; bins],
            log_reference: f64::NEG_INFINITY,
        })
    }

    /// Adds every pair of `x` with total weight exp(log_weight), split evenly
    /// among the pairs.
    pub fn add(&mut self, x: &[f64], log_weight: f64) {
        let n = x.len();
        if n < 2 {
            return;
        }
        if log_weight > self.log_reference {
            if self.log_reference.is_finite() {
                let rescale = (self.log_reference - log_weight).exp();
                self.mass.iter_mut().for_each(|m| *m *= rescale);
            }
            self.log_reference = log_weight;
        }
        let w = (log_weight - self.log_reference).exp() / ((n * (n - 1) / 2) as f64);
        let bins = self.mass.len();
        for (i, &xi) in x.iter().enumerate() {
            for &xj in &x[i + 1..] {
                self.mass[bin_index(xi - xj, self.bin_width, bins)] += w;
            }
        }
    }
}

/// Combines per-trajectory accumulators (in index order) into one normalized
/// histogram.
pub fn combine_histograms(parts: &[&PairHistogramAccumulator], r_max: f64) -> Option<Histogram> {
    let first = parts.first()?;
    let global = parts
        .iter()
        .map(|p| p.log_reference)
        .fold(f64::NEG_INFINITY, f64::max);
    if !global.is_finite() {
        return None;
    }
    let mut mass = vec![0.0; first.mass.len()];
    for part in parts {
        if !part.log_reference.is_finite() {
            continue;
        }
        let scale = (part.log_reference - global).exp();
        for (acc, m) in mass.iter_mut().zip(&part.mass) {
            *acc += scale * m;
        }
    }
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    Some(Histogram {
        bin_width: first.bin_width,
        r_max,
        mass,
    })
}
