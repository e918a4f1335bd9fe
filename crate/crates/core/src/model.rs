//! Dimensionless N-boson Hamiltonian in a 1D harmonic trap (ħ = m = ω = 1).
//!
//! The contact attraction is replaced by a normalized Gaussian of width σ̃.
//! The trial function is the product Gaussian φ₀(x) = C·exp(−b Σ xᵢ²); the
//! normalization C is never needed because every quantity below is either a
//! logarithmic derivative of φ₀ or a ratio in which C cancels.
//!
//! The importance-sampled walk sees the potential
//!
//! ```text
//! U(x) = V(x) − ½ Δφ₀/φ₀ = V(x) − Σᵢ (2b² xᵢ² − b)
//! ```
//!
//! and trajectory weights are accumulated as exp(−∫ (U − e₀) ds).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ratio between post- and pre-quench couplings that turns a fundamental
/// soliton into a 3:1 breather.
pub const DEFAULT_QUENCH_DIVISOR: f64 = 4.0;

/// Width used when the coupling does not match one of the reference rows.
pub const DEFAULT_SIGMA_TILDE: f64 = 0.015;

/// Default variational parameter; exact for the trap-only problem.
pub const DEFAULT_TRIAL_B: f64 = 0.5;

// exp(-z) is exactly 0.0 in f64 for z above ~745.13, so skipping those pairs
// does not change any result.
const EXP_UNDERFLOW: f64 = 746.0;

/// Which coupling constant enters the sampled potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// g̃₀ = g̃ / quench_divisor, the Hamiltonian whose ground state is the
    /// initial soliton.
    #[default]
    PreQuench,
    /// The post-quench coupling g̃ itself.
    PostQuench,
}

impl CouplingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CouplingMode::PreQuench => "pre_quench",
            CouplingMode::PostQuench => "post_quench",
        }
    }
}

impl fmt::Display for CouplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CouplingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pre_quench" => Ok(CouplingMode::PreQuench),
            "post_quench" => Ok(CouplingMode::PostQuench),
            other => Err(format!(
                "unknown coupling mode '{other}' (expected pre_quench or post_quench)"
            )),
        }
    }
}

/// Physical and trial-function parameters of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_particles: usize,
    /// Post-quench dimensionless coupling g̃ (absolute value of an attractive
    /// coupling).
    pub g_tilde: f64,
    pub quench_divisor: f64,
    pub sigma_tilde: f64,
    pub trap_enabled: bool,
    pub trial_b: f64,
    /// Reference energy subtracted from U in the weight exponent.
    pub e0: f64,
    pub coupling_mode: CouplingMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_particles: 2,
            g_tilde: 0.0,
            quench_divisor: DEFAULT_QUENCH_DIVISOR,
            sigma_tilde: DEFAULT_SIGMA_TILDE,
            trap_enabled: true,
            trial_b: DEFAULT_TRIAL_B,
            e0: 0.0,
            coupling_mode: CouplingMode::PreQuench,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 1 {
            return Err(Error::range("N", "need at least one particle"));
        }
        if !(self.g_tilde >= 0.0 && self.g_tilde.is_finite()) {
            return Err(Error::range("g_tilde", "must be finite and non-negative"));
        }
        if !(self.quench_divisor > 0.0 && self.quench_divisor.is_finite()) {
            return Err(Error::range(
                "quench_divisor",
                "must be finite and positive",
            ));
        }
        if !(self.sigma_tilde > 0.0 && self.sigma_tilde.is_finite()) {
            return Err(Error::range("sigma_tilde", "must be finite and positive"));
        }
        if !(self.trial_b >= 0.0 && self.trial_b.is_finite()) {
            return Err(Error::range("b", "must be finite and non-negative"));
        }
        if !self.e0.is_finite() {
            return Err(Error::range("e0", "must be finite"));
        }
        Ok(())
    }

    pub fn pre_quench_coupling(&self) -> f64 {
        self.g_tilde / self.quench_divisor
    }

    /// Coupling that enters the sampled potential, per `coupling_mode`.
    pub fn sampled_coupling(&self) -> f64 {
        match self.coupling_mode {
            CouplingMode::PreQuench => self.pre_quench_coupling(),
            CouplingMode::PostQuench => self.g_tilde,
        }
    }

    pub fn trap_potential(&self, x: &[f64]) -> f64 {
        if self.trap_enabled {
            v_trap(x)
        } else {
            0.0
        }
    }

    /// Full potential V = V_trap + V_int with the sampled coupling.
    pub fn potential(&self, x: &[f64]) -> f64 {
        self.trap_potential(x) + v_int(x, self.sampled_coupling(), self.sigma_tilde)
    }
}

/// ½ Σ xᵢ².
pub fn v_trap(x: &[f64]) -> f64 {
    0.5 * x.iter().map(|v| v * v).sum::<f64>()
}

/// Normalized Gaussian stand-in for δ(r).
pub fn gaussian_delta(r: f64, sigma_tilde: f64) -> f64 {
    (-r * r / (2.0 * sigma_tilde * sigma_tilde)).exp() / ((2.0 * PI).sqrt() * sigma_tilde)
}

/// −g Σ_{i<j} δ_σ(xᵢ − xⱼ).
pub fn v_int(x: &[f64], g_eff: f64, sigma_tilde: f64) -> f64 {
    if x.len() < 2 || g_eff == 0.0 {
        return 0.0;
    }
    let inv_two_s2 = 1.0 / (2.0 * sigma_tilde * sigma_tilde);
    let norm = 1.0 / ((2.0 * PI).sqrt() * sigma_tilde);
    let mut sum = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        for &xj in &x[i + 1..] {
            let r = xi - xj;
            let z = r * r * inv_two_s2;
            if z < EXP_UNDERFLOW {
                sum += (-z).exp();
            }
        }
    }
    -g_eff * norm * sum
}

/// ln φ₀(x) − ln C = −b Σ xᵢ².
pub fn log_trial(x: &[f64], b: f64) -> f64 {
    -b * x.iter().map(|v| v * v).sum::<f64>()
}

/// ∇φ₀/φ₀ = −2b x.
pub fn drift(x: &[f64], b: f64) -> Vec<f64> {
    x.iter().map(|&v| -2.0 * b * v).collect()
}

/// U(x) = V(x) − ½ Δφ₀/φ₀.
///
/// Evaluated as Σ (c xᵢ²) + N b + V_int with c = ½·[trap] − 2b², which is
/// algebraically the same and makes U exactly constant when b = ½ and the
/// interaction is off.
pub fn local_u(x: &[f64], config: &ModelConfig) -> f64 {
    let b = config.trial_b;
    let trap = if config.trap_enabled { 0.5 } else { 0.0 };
    let c = trap - 2.0 * b * b;
    let quadratic = c * x.iter().map(|v| v * v).sum::<f64>();
    let kinetic_shift = x.len() as f64 * b;
    quadratic + kinetic_shift + v_int(x, config.sampled_coupling(), config.sigma_tilde)
}

/// The perturbed potential U − e₀ that is integrated into the weight exponent.
pub fn v_p(x: &[f64], config: &ModelConfig) -> f64 {
    local_u(x, config) - config.e0
}
