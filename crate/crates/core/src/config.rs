//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored,
//! keys are case-sensitive and unknown keys are errors. See [`KEYS`] for the
//! full list. [`RunSpec::to_config_text`] writes the canonical form that
//! [`parse_config`] reads back unchanged.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{WeightingMode, Window};
use crate::model::{
    CouplingMode, ModelConfig, DEFAULT_QUENCH_DIVISOR, DEFAULT_SIGMA_TILDE, DEFAULT_TRIAL_B,
};
use crate::observables::{Observable, PairMode};
use crate::sampler::{HistogramSpec, InitMode, SamplerConfig};
use crate::theory::reference_row;

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("N", "number of bosons"),
    ("scale", "sqrt(steps per unit time)"),
    ("npi", "number of trajectories"),
    ("g_tilde", "post-quench dimensionless coupling"),
    ("sigma_tilde", "width of the Gaussian pair potential"),
    ("quench_divisor", "post/pre-quench coupling ratio"),
    ("coupling", "pre_quench | post_quench"),
    ("trap", "true | false"),
    ("b", "trial-function parameter"),
    ("e0", "reference energy, or 'pilot'"),
    ("t_total", "imaginary time per trajectory"),
    ("burn_in", "start of the measurement window"),
    ("increment", "binomial | gaussian"),
    ("init", "origin | trial_density"),
    ("seed", "master seed"),
    ("stride", "steps between recorded samples"),
    ("observables", "comma-separated observable names"),
    ("weighting", "time_averaged | endpoint"),
    ("fit_start", "start of the energy fit window"),
    ("fit_end", "end of the energy fit window"),
    ("hist_bin_width", "pair histogram bin width"),
    ("hist_r_max", "pair histogram range"),
    ("threads", "worker threads, 0 = automatic"),
    ("output", "output file path"),
    ("format", "csv | json"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

/// Where the reference energy e₀ comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum E0Source {
    /// Mean of U over the trial density, estimated before the run.
    Pilot,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    /// `model.e0` is filled in from `e0` when the run starts.
    pub model: ModelConfig,
    pub e0: E0Source,
    pub sampler: SamplerConfig,
    pub observables: Vec<Observable>,
    pub n_trajectories: usize,
    pub weighting: WeightingMode,
    /// Energy fit window; the measurement window when `None`.
    pub fit_window: Option<Window>,
    pub histogram: Option<HistogramSpec>,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub threads: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

impl RunSpec {
    pub fn measurement_window(&self) -> Window {
        Window::new(self.sampler.burn_in, self.sampler.t_total)
    }

    pub fn energy_window(&self) -> Window {
        self.fit_window.unwrap_or_else(|| self.measurement_window())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.sampler.validate()?;
        if self.n_trajectories < 2 {
            return Err(Error::range("npi", "need at least 2 trajectories"));
        }
        if self.observables.is_empty() {
            return Err(Error::range("observables", "need at least one observable"));
        }
        for o in &self.observables {
            o.check(self.model.n_particles)?;
        }
        let needs_trial_density =
            self.sampler.init_mode == InitMode::TrialDensity || self.e0 == E0Source::Pilot;
        if needs_trial_density && self.model.trial_b <= 0.0 {
            return Err(Error::range(
                "b",
                "b = 0 needs init = origin and an explicit e0",
            ));
        }
        if let E0Source::Fixed(v) = self.e0 {
            if !v.is_finite() {
                return Err(Error::range("e0", "must be finite"));
            }
        }
        if let Some(w) = self.fit_window {
            if !(w.t_start >= 0.0 && w.t_start < w.t_end && w.t_end <= self.sampler.t_total) {
                return Err(Error::range(
                    "fit_start",
                    "fit window must satisfy 0 <= fit_start < fit_end <= t_total",
                ));
            }
        }
        Ok(())
    }

    /// Canonical configuration text; parses back to an identical spec.
    pub fn to_config_text(&self) -> String {
        self.config_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// Canonical `(key, value)` pairs in [`KEYS`] order.
    pub fn config_pairs(&self) -> Vec<(&'static str, String)> {
        let m = &self.model;
        let s = &self.sampler;
        let mut pairs = vec![
            ("N", m.n_particles.to_string()),
            ("scale", s.scale.to_string()),
            ("npi", self.n_trajectories.to_string()),
            ("g_tilde", m.g_tilde.to_string()),
            ("sigma_tilde", m.sigma_tilde.to_string()),
            ("quench_divisor", m.quench_divisor.to_string()),
            ("coupling", m.coupling_mode.to_string()),
            ("trap", m.trap_enabled.to_string()),
            ("b", m.trial_b.to_string()),
            (
                "e0",
                match self.e0 {
                    E0Source::Pilot => "pilot".to_string(),
                    E0Source::Fixed(v) => v.to_string(),
                },
            ),
            ("t_total", s.t_total.to_string()),
            ("burn_in", s.burn_in.to_string()),
            ("increment", s.increment_kind.to_string()),
            ("init", s.init_mode.to_string()),
            ("seed", s.master_seed.to_string()),
        ];
        if let Some(stride) = s.sample_stride {
            pairs.push(("stride", stride.to_string()));
        }
        pairs.push((
            "observables",
            self.observables
                .iter()
                .map(Observable::name)
                .collect::<Vec<_>>()
                .join(","),
        ));
        pairs.push(("weighting", self.weighting.to_string()));
        if let Some(w) = self.fit_window {
            pairs.push(("fit_start", w.t_start.to_string()));
            pairs.push(("fit_end", w.t_end.to_string()));
        }
        if let Some(h) = self.histogram {
            pairs.push(("hist_bin_width", h.bin_width.to_string()));
            pairs.push(("hist_r_max", h.r_max.to_string()));
        }
        pairs.push(("threads", self.threads.to_string()));
        if let Some(p) = &self.output_path {
            pairs.push(("output", p.display().to_string()));
        }
        pairs.push(("format", self.output_format.to_string()));
        pairs
    }
}

/// One `key = value` assignment and where it came from (line 0 for
/// command-line overrides).
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    pub key_column: usize,
    pub value_column: usize,
}

impl Entry {
    pub fn new(key: &str, value: &str) -> Self {
        Entry {
            key: key.to_string(),
            value: value.to_string(),
            line: 0,
            key_column: 1,
            value_column: 1,
        }
    }

    fn value_error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.value_column,
            message: format!("{}: {}", self.key, message.into()),
        }
    }
}

/// Splits configuration text into entries. Checks syntax, key names and
/// duplicates; values are checked by [`build_spec`].
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let known: HashSet<&str> = KEYS.iter().map(|(k, _)| *k).collect();
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            let column = content.len() - content.trim_start().len() + 1;
            return Err(Error::Parse {
                line,
                column,
                message: "expected 'key = value'".into(),
            });
        };
        let (key_part, value_part) = (&content[..eq], &content[eq + 1..]);
        let key = key_part.trim();
        let key_column = key_part.len() - key_part.trim_start().len() + 1;
        let value = value_part.trim();
        let value_column = eq + 2 + (value_part.len() - value_part.trim_start().len());
        if key.is_empty() {
            return Err(Error::Parse {
                line,
                column: key_column,
                message: "missing key".into(),
            });
        }
        if !known.contains(key) {
            return Err(Error::Parse {
                line,
                column: key_column,
                message: format!("unknown key '{key}'"),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Parse {
                line,
                column: key_column,
                message: format!("duplicate key '{key}'"),
            });
        }
        entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
            key_column,
            value_column,
        });
    }
    Ok(entries)
}

/// Replaces or appends `overrides` in `entries`, keeping the override.
pub fn apply_overrides(entries: &mut Vec<Entry>, overrides: Vec<Entry>) -> Result<()> {
    let known: HashSet<&str> = KEYS.iter().map(|(k, _)| *k).collect();
    for o in overrides {
        if !known.contains(o.key.as_str()) {
            return Err(Error::Parse {
                line: 0,
                column: 1,
                message: format!("unknown key '{}'", o.key),
            });
        }
        entries.retain(|e| e.key != o.key);
        entries.push(o);
    }
    Ok(())
}

fn parse_value<T: FromStr>(entry: &Entry) -> Result<T>
where
    T::Err: fmt::Display,
{
    entry
        .value
        .parse::<T>()
        .map_err(|e| entry.value_error(e.to_string()))
}

fn parse_bool(entry: &Entry) -> Result<bool> {
    match entry.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(entry.value_error("expected true or false")),
    }
}

/// Builds and validates a [`RunSpec`] from entries, filling defaults.
pub fn build_spec(entries: &[Entry]) -> Result<RunSpec> {
    let get = |key: &str| entries.iter().find(|e| e.key == key);

    let mut model = ModelConfig {
        n_particles: 100,
        g_tilde: 0.5,
        quench_divisor: DEFAULT_QUENCH_DIVISOR,
        sigma_tilde: DEFAULT_SIGMA_TILDE,
        trap_enabled: true,
        trial_b: DEFAULT_TRIAL_B,
        e0: 0.0,
        coupling_mode: CouplingMode::PreQuench,
    };
    let mut sampler = SamplerConfig::default();
    let mut spec_e0 = E0Source::Pilot;
    let mut observables = vec![Observable::PairDistanceSq(PairMode::AllPairs)];
    let mut n_trajectories = 50;
    let mut weighting = WeightingMode::TimeAveraged;
    let mut output_path = None;
    let mut output_format = OutputFormat::Csv;
    let mut threads = 0;

    if let Some(e) = get("N") {
        model.n_particles = parse_value(e)?;
    }
    if let Some(e) = get("g_tilde") {
        model.g_tilde = parse_value(e)?;
    }
    model.sigma_tilde = match get("sigma_tilde") {
        Some(e) => parse_value(e)?,
        None => reference_row(model.g_tilde)
            .map(|r| r.sigma_tilde)
            .unwrap_or(DEFAULT_SIGMA_TILDE),
    };
    if let Some(e) = get("quench_divisor") {
        model.quench_divisor = parse_value(e)?;
    }
    if let Some(e) = get("coupling") {
        model.coupling_mode = parse_value(e)?;
    }
    if let Some(e) = get("trap") {
        model.trap_enabled = parse_bool(e)?;
    }
    if let Some(e) = get("b") {
        model.trial_b = parse_value(e)?;
    }
    if let Some(e) = get("e0") {
        spec_e0 = if e.value == "pilot" {
            E0Source::Pilot
        } else {
            E0Source::Fixed(parse_value(e)?)
        };
    }
    if let Some(e) = get("scale") {
        sampler.scale = parse_value(e)?;
    }
    if let Some(e) = get("t_total") {
        sampler.t_total = parse_value(e)?;
    }
    sampler.burn_in = match get("burn_in") {
        Some(e) => parse_value(e)?,
        None => sampler.t_total / 2.0,
    };
    if let Some(e) = get("increment") {
        sampler.increment_kind = parse_value(e)?;
    }
    if let Some(e) = get("init") {
        sampler.init_mode = parse_value(e)?;
    }
    if let Some(e) = get("seed") {
        sampler.master_seed = parse_value(e)?;
    }
    if let Some(e) = get("stride") {
        sampler.sample_stride = Some(parse_value(e)?);
    }
    if let Some(e) = get("npi") {
        n_trajectories = parse_value(e)?;
    }
    if let Some(e) = get("observables") {
        observables = e
            .value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Observable>().map_err(|m| e.value_error(m)))
            .collect::<Result<_>>()?;
    }
    if let Some(e) = get("weighting") {
        weighting = parse_value(e)?;
    }
    let fit_window = match (get("fit_start"), get("fit_end")) {
        (None, None) => None,
        (Some(s), Some(e)) => Some(Window::new(parse_value(s)?, parse_value(e)?)),
        (Some(e), None) | (None, Some(e)) => {
            return Err(e.value_error("fit_start and fit_end must be given together"))
        }
    };
    let histogram = match (get("hist_bin_width"), get("hist_r_max")) {
        (None, None) => None,
        (Some(w), Some(r)) => {
            let h = HistogramSpec {
                bin_width: parse_value(w)?,
                r_max: parse_value(r)?,
            };
            if !(h.bin_width > 0.0 && h.r_max > 0.0) {
                return Err(Error::range(
                    "hist_bin_width",
                    "bin width and range must be positive",
                ));
            }
            Some(h)
        }
        (Some(e), None) | (None, Some(e)) => {
            return Err(e.value_error("hist_bin_width and hist_r_max must be given together"))
        }
    };
    if let Some(e) = get("threads") {
        threads = parse_value(e)?;
    }
    if let Some(e) = get("output") {
        output_path = Some(PathBuf::from(&e.value));
    }
    if let Some(e) = get("format") {
        output_format = parse_value(e)?;
    }

    let spec = RunSpec {
        model,
        e0: spec_e0,
        sampler,
        observables,
        n_trajectories,
        weighting,
        fit_window,
        histogram,
        output_path,
        output_format,
        threads,
    };
    spec.validate()?;
    Ok(spec)
}

/// Parses configuration text into a validated [`RunSpec`].
pub fn parse_config(text: &str) -> Result<RunSpec> {
    build_spec(&parse_entries(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_parameters_parse() {
        let spec = parse_config("N=100\nscale=30\nnpi=50\ng_tilde=0.5\nsigma_tilde=0.016").unwrap();
        assert_eq!(spec.model.n_particles, 100);
        assert_eq!(spec.sampler.scale, 30);
        assert_eq!(spec.sampler.steps_per_unit_time(), 900);
        assert_eq!(spec.n_trajectories, 50);
        assert_eq!(spec.model.g_tilde, 0.5);
        assert_eq!(spec.model.sigma_tilde, 0.016);
        assert_eq!(spec.model.coupling_mode, CouplingMode::PreQuench);
        assert_eq!(spec.measurement_window(), Window::new(5.0, 10.0));
    }

    #[test]
    fn range_and_parse_errors() {
        assert!(matches!(parse_config("N=0"), Err(Error::Range { .. })));
        assert!(matches!(parse_config("npi=1"), Err(Error::Range { .. })));
        match parse_config("# header\nunknown_key=1") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 1)),
            other => panic!("{other:?}"),
        }
        match parse_config("N = 10\n  scale =  abc") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 12)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_config("N=3\nN=4"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("just words"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_config("trap=yes"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_config("N=1"),
            Err(Error::TooFewParticles(1))
        ));
        assert!(parse_config("N=1\nobservables=mean_x_sq").is_ok());
        assert!(matches!(
            parse_config("b=0\ninit=trial_density\ne0=0"),
            Err(Error::Range { .. })
        ));
        assert!(matches!(
            parse_config("fit_start=3"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn comments_and_whitespace() {
        let spec = parse_config("  # comment\n\nN = 4   # trailing\n\tg_tilde=0.61\n").unwrap();
        assert_eq!(spec.model.n_particles, 4);
        // σ̃ defaults to the reference row for g̃ = 0.61.
        assert_eq!(spec.model.sigma_tilde, 0.015);
        let spec = parse_config("g_tilde=0.83").unwrap();
        assert_eq!(spec.model.sigma_tilde, 0.01);
        let spec = parse_config("g_tilde=0.9").unwrap();
        assert_eq!(spec.model.sigma_tilde, DEFAULT_SIGMA_TILDE);
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut entries = parse_entries("N=10\nnpi=4").unwrap();
        apply_overrides(
            &mut entries,
            vec![Entry::new("N", "6"), Entry::new("seed", "9")],
        )
        .unwrap();
        let spec = build_spec(&entries).unwrap();
        assert_eq!(spec.model.n_particles, 6);
        assert_eq!(spec.n_trajectories, 4);
        assert_eq!(spec.sampler.master_seed, 9);
        assert!(apply_overrides(&mut entries, vec![Entry::new("bogus", "1")]).is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = "N=3\ng_tilde=0.7\nsigma_tilde=0.02\ncoupling=post_quench\ntrap=false\nb=0.01\n\
                    e0=-0.25\nt_total=4\nburn_in=1.5\nincrement=gaussian\ninit=trial_density\n\
                    seed=77\nstride=45\nobservables=pair_distance_sq,pair_sq_0_2,mean_x_sq\n\
                    weighting=endpoint\nfit_start=2\nfit_end=4\nhist_bin_width=0.05\nhist_r_max=3\n\
                    threads=2\noutput=out.json\nformat=json\n";
        let spec = parse_config(text).unwrap();
        let again = parse_config(&spec.to_config_text()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(spec.to_config_text(), again.to_config_text());
    }
}
