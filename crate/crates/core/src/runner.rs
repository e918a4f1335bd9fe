//! Runs a [`RunSpec`] end to end: regularization check, e₀, trajectories,
//! estimates.

use serde::{Deserialize, Serialize};

use crate::config::{E0Source, RunSpec};
use crate::error::{Error, Result};
use crate::estimator::{gfk_expectation, ground_energy, EstimatorResult};
use crate::observables::{combine_histograms, Histogram, Observable};
use crate::regularization::{check_regularization, RegularizationReport};
use crate::sampler::{generate_trajectories, pilot_e0, TrajectorySet, PILOT_SAMPLES};
use crate::theory::{pair_variance_prediction, reference_row, validity_conditions, ValidityReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub spec: RunSpec,
    /// The e₀ actually used.
    pub e0: f64,
    /// `None` when the sampled coupling is zero.
    pub regularization: Option<RegularizationReport>,
    pub results: Vec<(Observable, EstimatorResult)>,
    pub ground_energy: EstimatorResult,
    pub histogram: Option<Histogram>,
    pub theory_pair_variance: f64,
    pub validity: ValidityReport,
}

/// Regularization report for the coupling the walk samples, if nonzero.
pub fn regularization_for(spec: &RunSpec) -> Result<Option<RegularizationReport>> {
    let g = spec.model.sampled_coupling();
    if g > 0.0 {
        check_regularization(g, spec.model.sigma_tilde).map(Some)
    } else {
        Ok(None)
    }
}

/// Resolves e₀ from the spec.
pub fn resolve_e0(spec: &RunSpec) -> Result<f64> {
    match spec.e0 {
        E0Source::Fixed(v) => Ok(v),
        E0Source::Pilot => pilot_e0(&spec.model, spec.sampler.master_seed, PILOT_SAMPLES),
    }
}

/// Generates the trajectories of `spec` with a resolved `e0`.
pub fn simulate(spec: &RunSpec, e0: f64) -> Result<TrajectorySet> {
    let mut model = spec.model.clone();
    model.e0 = e0;
    let generate = || {
        generate_trajectories(
            &model,
            &spec.sampler,
            &spec.observables,
            spec.histogram.as_ref(),
            spec.n_trajectories as u64,
        )
    };
    if spec.threads == 0 {
        generate()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.threads)
            .build()
            .map_err(|e| Error::range("threads", e.to_string()))?
            .install(generate)
    }
}

/// Runs `spec`. A failed regularization check aborts the run unless `force`.
pub fn run(spec: &RunSpec, force: bool) -> Result<RunOutput> {
    spec.validate()?;
    let regularization = regularization_for(spec)?;
    if let Some(r) = &regularization {
        if !r.ok && !force {
            return Err(Error::RegularizationFailed(format!(
                "g_eff = {}, sigma_tilde = {}: WKB count {:.4}, bound energy {:.6}, depth {:.4}",
                r.g_eff, r.sigma_tilde, r.count, r.bound_energy_estimate, r.v0
            )));
        }
    }
    let e0 = resolve_e0(spec)?;
    let set = simulate(spec, e0)?;
    let window = spec.measurement_window();
    let results = spec
        .observables
        .iter()
        .enumerate()
        .map(|(i, o)| Ok((*o, gfk_expectation(&set, i, window, spec.weighting)?)))
        .collect::<Result<Vec<_>>>()?;
    let energy = ground_energy(&set, spec.energy_window(), e0)?;
    let histogram = spec.histogram.and_then(|h| {
        let parts: Vec<_> = set
            .trajectories
            .iter()
            .filter_map(|t| t.histogram.as_ref())
            .collect();
        combine_histograms(&parts, h.r_max)
    });
    let n = spec.model.n_particles as f64;
    Ok(RunOutput {
        spec: spec.clone(),
        e0,
        regularization,
        results,
        ground_energy: energy,
        histogram,
        theory_pair_variance: pair_variance_prediction(spec.model.g_tilde, n),
        validity: validity_conditions(spec.model.g_tilde, n),
    })
}

/// One line of a coupling sweep. Failures are recorded in `status`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_particles: usize,
    pub scale: u32,
    pub npi: usize,
    pub g_tilde: f64,
    pub sigma_tilde: f64,
    pub coupling_mode: String,
    pub observable: String,
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub effective_sample_size: Option<f64>,
    pub theory: f64,
    pub reference_mean: Option<f64>,
    pub reference_error: Option<f64>,
    pub printed_theory: Option<f64>,
    pub printed_theory_mismatch: Option<bool>,
    pub ratio_a: f64,
    pub ratio_b: f64,
    pub wkb_count: Option<f64>,
    pub regularization_ok: Option<bool>,
    pub status: String,
}

/// Runs `base` once per `(g_tilde, sigma_tilde)` pair.
pub fn table_sweep(base: &RunSpec, rows: &[(f64, f64)], force: bool) -> Vec<SweepRow> {
    rows.iter()
        .map(|&(g, sigma)| {
            let mut spec = base.clone();
            spec.model.g_tilde = g;
            spec.model.sigma_tilde = sigma;
            let n = spec.model.n_particles as f64;
            let validity = validity_conditions(g, n);
            let reference = reference_row(g).filter(|r| r.sigma_tilde == sigma);
            let mut row = SweepRow {
                n_particles: spec.model.n_particles,
                scale: spec.sampler.scale,
                npi: spec.n_trajectories,
                g_tilde: g,
                sigma_tilde: sigma,
                coupling_mode: spec.model.coupling_mode.to_string(),
                observable: spec.observables[0].name(),
                estimate: None,
                std_error: None,
                effective_sample_size: None,
                theory: pair_variance_prediction(g, n),
                reference_mean: reference.map(|r| r.numeric_mean),
                reference_error: reference.map(|r| r.numeric_error),
                printed_theory: reference.map(|r| r.printed_theory),
                printed_theory_mismatch: reference.map(|r| r.theory_discrepancy()),
                ratio_a: validity.ratio_a,
                ratio_b: validity.ratio_b,
                wkb_count: None,
                regularization_ok: None,
                status: "ok".to_string(),
            };
            if let Ok(Some(r)) = regularization_for(&spec) {
                row.wkb_count = Some(r.count);
                row.regularization_ok = Some(r.ok);
            }
            match run(&spec, force) {
                Ok(out) => {
                    let (_, first) = &out.results[0];
                    row.estimate = Some(first.mean);
                    row.std_error = Some(first.std_error);
                    row.effective_sample_size = Some(first.effective_sample_size);
                }
                Err(e) => row.status = e.to_string(),
            }
            row
        })
        .collect()
}
