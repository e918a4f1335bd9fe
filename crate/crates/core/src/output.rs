//! Long-format run output. Every row is `(section, key, value, …)`; CSV and
//! JSON carry the same rows in the same order. Nothing time- or
//! host-dependent is written, so a fixed seed gives identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;
use crate::error::Result;
use crate::estimator::EstimatorResult;
use crate::runner::{RunOutput, SweepRow};

pub const SCHEMA: &str = "gfk-run/1";

/// Crate version and the git revision it was built from.
pub const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (",
    env!("GFK_GIT_DESCRIBE"),
    ")"
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Num(f64),
    Bool(bool),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRow {
    pub section: String,
    pub key: String,
    pub value: Value,
    pub std_error: Option<f64>,
    pub effective_sample_size: Option<f64>,
    pub n_trajectories: Option<usize>,
    pub samples_per_trajectory: Option<usize>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub weight_dispersion: Option<f64>,
}

impl OutputRow {
    fn plain(section: &str, key: impl Into<String>, value: Value) -> Self {
        OutputRow {
            section: section.to_string(),
            key: key.into(),
            value,
            std_error: None,
            effective_sample_size: None,
            n_trajectories: None,
            samples_per_trajectory: None,
            t_start: None,
            t_end: None,
            weight_dispersion: None,
        }
    }

    fn estimate(section: &str, key: impl Into<String>, r: &EstimatorResult) -> Self {
        OutputRow {
            std_error: Some(r.std_error),
            effective_sample_size: Some(r.effective_sample_size),
            n_trajectories: Some(r.n_trajectories),
            samples_per_trajectory: Some(r.samples_per_trajectory),
            t_start: Some(r.window.t_start),
            t_end: Some(r.window.t_end),
            weight_dispersion: Some(r.weight_dispersion),
            ..Self::plain(section, key, Value::Num(r.mean))
        }
    }
}

/// Flattens a run into output rows.
pub fn run_rows(out: &RunOutput) -> Vec<OutputRow> {
    let mut rows = vec![
        OutputRow::plain("meta", "schema", Value::Text(SCHEMA.into())),
        OutputRow::plain("meta", "version", Value::Text(VERSION.into())),
        OutputRow::plain(
            "meta",
            "master_seed",
            Value::Text(out.spec.sampler.master_seed.to_string()),
        ),
    ];
    for (k, v) in out.spec.config_pairs() {
        rows.push(OutputRow::plain("config", k, Value::Text(v)));
    }
    let s = &out.spec.sampler;
    rows.push(OutputRow::plain("derived", "e0", Value::Num(out.e0)));
    rows.push(OutputRow::plain(
        "derived",
        "steps_per_unit_time",
        Value::Int(s.steps_per_unit_time() as i64),
    ));
    rows.push(OutputRow::plain(
        "derived",
        "total_steps",
        Value::Int(s.total_steps() as i64),
    ));
    rows.push(OutputRow::plain(
        "derived",
        "stride",
        Value::Int(s.stride() as i64),
    ));
    rows.push(OutputRow::plain(
        "derived",
        "sampled_coupling",
        Value::Num(out.spec.model.sampled_coupling()),
    ));
    if let Some(r) = &out.regularization {
        rows.push(OutputRow::plain(
            "regularization",
            "g_eff",
            Value::Num(r.g_eff),
        ));
        rows.push(OutputRow::plain(
            "regularization",
            "depth",
            Value::Num(r.v0),
        ));
        rows.push(OutputRow::plain(
            "regularization",
            "alpha",
            Value::Num(r.alpha),
        ));
        rows.push(OutputRow::plain(
            "regularization",
            "wkb_count",
            Value::Num(r.count),
        ));
        rows.push(OutputRow::plain(
            "regularization",
            "bound_energy",
            Value::Num(r.bound_energy_estimate),
        ));
        rows.push(OutputRow::plain("regularization", "ok", Value::Bool(r.ok)));
    }
    for (o, r) in &out.results {
        rows.push(OutputRow::estimate("result", o.name(), r));
    }
    rows.push(OutputRow::estimate(
        "result",
        "ground_energy",
        &out.ground_energy,
    ));
    rows.push(OutputRow::plain(
        "theory",
        "pair_variance",
        Value::Num(out.theory_pair_variance),
    ));
    rows.push(OutputRow::plain(
        "theory",
        "ratio_a",
        Value::Num(out.validity.ratio_a),
    ));
    rows.push(OutputRow::plain(
        "theory",
        "ratio_b",
        Value::Num(out.validity.ratio_b),
    ));
    if let Some(h) = &out.histogram {
        for (c, m) in h.bin_centers().zip(&h.mass) {
            rows.push(OutputRow::plain("histogram", c.to_string(), Value::Num(*m)));
        }
    }
    rows
}

/// Writes serializable rows as CSV (one header line) or a JSON array.
pub fn write_records<T: Serialize, W: Write>(
    rows: &[T],
    format: OutputFormat,
    mut w: W,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(w);
            for row in rows {
                writer.serialize(row)?;
            }
            writer.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
    }
    Ok(())
}

pub fn write_run(out: &RunOutput, path: &Path, format: OutputFormat) -> Result<()> {
    write_records(&run_rows(out), format, BufWriter::new(File::create(path)?))
}

pub fn write_sweep<W: Write>(rows: &[SweepRow], format: OutputFormat, w: W) -> Result<()> {
    write_records(rows, format, w)
}
