//! Checks that the Gaussian pair well is a faithful stand-in for an
//! attractive delta: it should hold a single bound state whose binding energy
//! is smaller than the well depth.
//!
//! The pair well −g δ_σ(r) = −V₀ exp(−α r²/2) has V₀ = g/(√(2π) σ) and
//! α = 1/σ². The number of bound states is estimated by WKB at E = 0; the
//! binding energy itself comes from diagonalizing the relative-coordinate
//! Hamiltonian −d²/dr² + V(r) (reduced mass ½) on a uniform grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::gaussian_delta;

/// WKB count at or above which the well is taken to hold a second state.
pub const SINGLE_STATE_LIMIT: f64 = 1.5;

/// Relative energy shift under grid refinement accepted as converged.
pub const GRID_TOLERANCE: f64 = 1e-3;

const MAX_REFINEMENTS: usize = 6;

/// WKB quantum number of the last bound state of −V₀ exp(−α x²/2):
/// (2/√π) √(V₀/α) + ½.
pub fn wkb_bound_count(v0: f64, alpha: f64) -> f64 {
    2.0 / PI.sqrt() * (v0 / alpha).sqrt() + 0.5
}

/// The relative-coordinate well of one interacting pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairWell {
    pub coupling: f64,
    pub sigma: f64,
}

/// Lowest eigenpair of the discretized relative Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub energy: f64,
    pub spacing: f64,
    pub r: Vec<f64>,
    /// Normalized so that Σ ψ² h = 1.
    pub psi: Vec<f64>,
}

impl GridSolution {
    /// ⟨ψ|f|ψ⟩.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.spacing;
        self.r
            .iter()
            .zip(&self.psi)
            .map(|(&r, &p)| p * p * f(r) * h)
            .sum()
    }

    /// ⟨φ|f|ψ⟩ / ⟨φ|ψ⟩ for a trial function φ.
    pub fn mixed_expectation(&self, trial: impl Fn(f64) -> f64, f: impl Fn(f64) -> f64) -> f64 {
        let (num, den) = self
            .r
            .iter()
            .zip(&self.psi)
            .fold((0.0, 0.0), |(num, den), (&r, &p)| {
                let w = trial(r) * p;
                (num + w * f(r), den + w)
            });
        num / den
    }
}

impl PairWell {
    pub fn new(coupling: f64, sigma: f64) -> Result<Self> {
        if !(coupling > 0.0 && coupling.is_finite()) {
            return Err(Error::range("g_eff", "must be finite and positive"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::range("sigma_tilde", "must be finite and positive"));
        }
        Ok(PairWell { coupling, sigma })
    }

    pub fn depth(&self) -> f64 {
        self.coupling / ((2.0 * PI).sqrt() * self.sigma)
    }

    pub fn alpha(&self) -> f64 {
        1.0 / (self.sigma * self.sigma)
    }

    pub fn potential(&self, r: f64) -> f64 {
        -self.coupling * gaussian_delta(r, self.sigma)
    }

    /// Grid half-width: 20σ around the well, and at least 32/g so the
    /// exp(−g|r|/2) tail of the bound state has decayed by e⁻¹⁶.
    pub fn default_half_width(&self) -> f64 {
        (20.0 * self.sigma).max(32.0 / self.coupling)
    }

    /// Lowest eigenpair on a uniform grid of spacing `spacing` over
    /// [−half_width, half_width] with Dirichlet ends.
    pub fn solve(&self, spacing: f64, half_width: f64) -> GridSolution {
        let intervals = (2.0 * half_width / spacing).round() as usize;
        let h = 2.0 * half_width / intervals as f64;
        let r: Vec<f64> = (1..intervals).map(|i| -half_width + i as f64 * h).collect();
        let off = -1.0 / (h * h);
        let diag: Vec<f64> = r
            .iter()
            .map(|&x| 2.0 / (h * h) + self.potential(x))
            .collect();

        let energy = lowest_eigenvalue(&diag, off);
        let mut psi = inverse_iteration(&diag, off, energy);
        let norm = (psi.iter().map(|p| p * p).sum::<f64>() * h).sqrt();
        let sign = if psi[psi.len() / 2] < 0.0 { -1.0 } else { 1.0 };
        psi.iter_mut().for_each(|p| *p *= sign / norm);
        GridSolution {
            energy,
            spacing: h,
            r,
            psi,
        }
    }

    /// Ground state refined by halving the spacing (starting from σ/4) until
    /// the energy moves by less than [`GRID_TOLERANCE`] relative.
    pub fn ground_state(&self) -> Result<GridSolution> {
        let half_width = self.default_half_width();
        let mut spacing = self.sigma / 4.0;
        let mut previous = self.solve(spacing, half_width);
        let mut shift = f64::INFINITY;
        for _ in 0..MAX_REFINEMENTS {
            spacing /= 2.0;
            let next = self.solve(spacing, half_width);
            shift = ((next.energy - previous.energy) / next.energy).abs();
            if shift <= GRID_TOLERANCE {
                return Ok(next);
            }
            previous = next;
        }
        Err(Error::GridNotConverged {
            relative_shift: shift,
        })
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `lambda`
/// (Sturm sequence via the LDLᵀ pivots).
fn count_below(diag: &[f64], off: f64, lambda: f64) -> usize {
    let off2 = off * off;
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        d = if i == 0 {
            a - lambda
        } else {
            a - lambda - off2 / d
        };
        if d == 0.0 {
            d = f64::MIN_POSITIVE;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn lowest_eigenvalue(diag: &[f64], off: f64) -> f64 {
    // Gershgorin bracket.
    let mut lo = diag.iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * off.abs();
    let mut hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0 * off.abs();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvector for the eigenvalue `energy` by two sweeps of inverse iteration
/// with a shift just below it, so that H − μ stays positive definite.
fn inverse_iteration(diag: &[f64], off: f64, energy: f64) -> Vec<f64> {
    let shift = energy - 1e-9 * energy.abs().max(1.0);
    let shifted: Vec<f64> = diag.iter().map(|a| a - shift).collect();
    let mut v = vec![1.0; diag.len()];
    for _ in 0..3 {
        v = solve_tridiagonal(&shifted, off, &v);
        let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        v.iter_mut().for_each(|x| *x /= max);
    }
    v
}

/// Thomas algorithm for a symmetric tridiagonal system with constant
/// off-diagonal.
fn solve_tridiagonal(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationReport {
    pub g_eff: f64,
    pub sigma_tilde: f64,
    pub v0: f64,
    pub alpha: f64,
    /// WKB bound-state count.
    pub count: f64,
    /// Pair binding energy from the grid.
    pub bound_energy_estimate: f64,
    /// The grid ground state lies below zero.
    pub binds: bool,
    pub ok: bool,
}

/// Validates the Gaussian well for coupling `g_eff` and width `sigma_tilde`.
/// `ok` requires fewer than 1.5 WKB states and a bound state with
/// |E| < V₀.
pub fn check_regularization(g_eff: f64, sigma_tilde: f64) -> Result<RegularizationReport> {
    let well = PairWell::new(g_eff, sigma_tilde)?;
    let v0 = well.depth();
    let alpha = well.alpha();
    let count = wkb_bound_count(v0, alpha);
    let energy = well.ground_state()?.energy;
    let binds = energy < 0.0;
    Ok(RegularizationReport {
        g_eff,
        sigma_tilde,
        v0,
        alpha,
        count,
        bound_energy_estimate: energy,
        binds,
        ok: count < SINGLE_STATE_LIMIT && binds && energy.abs() < v0,
    })
}
