//! Conversions between the dimensionless model (ħ = m = ω = 1) and SI
//! parameters of a ⁷Li experiment.
//!
//! Frequencies are angular (rad/s) internally; `radial_trap_freq_hz` is the
//! one ordinary frequency and is multiplied by 2π on use.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s (CODATA 2018).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Unified atomic mass unit, kg (CODATA 2018).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Bohr radius, m (CODATA 2018).
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;

/// Prefactor of the 3D collapse threshold N_c = 0.67 a_r/|a_sc|.
pub const COLLAPSE_PREFACTOR: f64 = 0.67;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Atomic mass in u.
    pub atomic_mass_u: f64,
    /// Signed scattering length in Bohr radii.
    pub scattering_length_bohr: f64,
    /// Radial trap frequency in Hz (ordinary, not angular).
    pub radial_trap_freq_hz: f64,
}

impl PhysicalParams {
    /// ⁷Li with a_sc = −16.2 a₀ and a 297 Hz radial trap.
    pub fn lithium7() -> Self {
        PhysicalParams {
            atomic_mass_u: 7.016,
            scattering_length_bohr: -16.2,
            radial_trap_freq_hz: 297.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.atomic_mass_u > 0.0 && self.atomic_mass_u.is_finite()) {
            return Err(Error::range("mass", "must be finite and positive"));
        }
        if !(self.radial_trap_freq_hz > 0.0 && self.radial_trap_freq_hz.is_finite()) {
            return Err(Error::range("radial_freq", "must be finite and positive"));
        }
        if !self.scattering_length_bohr.is_finite() {
            return Err(Error::range("a_sc", "must be finite"));
        }
        Ok(())
    }

    /// kg.
    pub fn mass_kg(&self) -> f64 {
        self.atomic_mass_u * ATOMIC_MASS_UNIT
    }

    /// Signed, m.
    pub fn scattering_length_m(&self) -> f64 {
        self.scattering_length_bohr * BOHR_RADIUS
    }

    /// rad/s.
    pub fn radial_omega(&self) -> f64 {
        2.0 * PI * self.radial_trap_freq_hz
    }

    /// Radial oscillator length √(ħ/(m ω_r)), m.
    pub fn radial_length(&self) -> f64 {
        (HBAR / (self.mass_kg() * self.radial_omega())).sqrt()
    }
}

/// 1D coupling g = 2ħ ω_r |a_sc|, J·m.
pub fn coupling_si(params: &PhysicalParams) -> f64 {
    2.0 * HBAR * params.radial_omega() * params.scattering_length_m().abs()
}

/// Axial trap frequency ω = g² m / (g̃² ħ³), rad/s, for coupling `g` (J·m)
/// and mass `mass_kg`.
pub fn axial_omega(g: f64, mass_kg: f64, g_tilde: f64) -> f64 {
    g * g * mass_kg / (g_tilde * g_tilde * HBAR.powi(3))
}

/// Inverse of [`axial_omega`]: g̃ = |g| √(m / (ω ħ³)).
pub fn g_tilde_from_omega(g: f64, mass_kg: f64, omega: f64) -> f64 {
    g.abs() * (mass_kg / (omega * HBAR.powi(3))).sqrt()
}

/// T/4 = (2π/ω)/4, s.
pub fn quarter_period_seconds(omega: f64) -> f64 {
    2.0 * PI / omega / 4.0
}

/// Collapse threshold 0.67 a_r/|a_sc| (both lengths in m).
pub fn collapse_threshold(a_r: f64, a_sc: f64) -> Result<f64> {
    if a_sc == 0.0 {
        return Err(Error::DivisionByZero("collapse threshold with a_sc = 0"));
    }
    Ok(COLLAPSE_PREFACTOR * a_r / a_sc.abs())
}

/// Everything the `units` command prints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitsReport {
    pub coupling_j_m: f64,
    pub g_tilde: f64,
    pub axial_omega_rad_s: f64,
    pub axial_freq_hz: f64,
    pub quarter_period_s: f64,
    pub radial_length_m: f64,
    pub collapse_threshold: f64,
}

/// Either g̃ or ω (rad/s) fixes the axial trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxialSpec {
    GTilde(f64),
    OmegaRadPerSec(f64),
}

pub fn units_report(params: &PhysicalParams, axial: AxialSpec) -> Result<UnitsReport> {
    params.validate()?;
    let g = coupling_si(params);
    let m = params.mass_kg();
    let (g_tilde, omega) = match axial {
        AxialSpec::GTilde(gt) => {
            if !(gt > 0.0 && gt.is_finite()) {
                return Err(Error::range("g_tilde", "must be positive"));
            }
            (gt, axial_omega(g, m, gt))
        }
        AxialSpec::OmegaRadPerSec(w) => {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::range("omega", "must be positive"));
            }
            (g_tilde_from_omega(g, m, w), w)
        }
    };
    let a_r = params.radial_length();
    Ok(UnitsReport {
        coupling_j_m: g,
        g_tilde,
        axial_omega_rad_s: omega,
        axial_freq_hz: omega / (2.0 * PI),
        quarter_period_s: quarter_period_seconds(omega),
        radial_length_m: a_r,
        collapse_threshold: collapse_threshold(a_r, params.scattering_length_m())?,
    })
}
