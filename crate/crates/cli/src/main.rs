use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use gfk_core::config::{apply_overrides, build_spec, parse_entries, Entry, RunSpec, KEYS};
use gfk_core::output::{write_run, write_sweep, VERSION};
use gfk_core::runner::{regularization_for, run, table_sweep};
use gfk_core::theory::{
    pair_variance_prediction, soliton_size, validity_conditions, vrel_variance,
    zero_point_rel_fluct, REFERENCE_ROWS,
};
use gfk_core::units::{units_report, AxialSpec, PhysicalParams};
use gfk_core::Error;

#[derive(Parser)]
#[command(name = "gfk", version = VERSION, about = "Feynman-Kac ground-state sampler for attractive 1D bosons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        #[command(flatten)]
        source: ConfigSource,
        /// Run even if the regularization check fails.
        #[arg(long)]
        force: bool,
    },
    /// Run the six published couplings, or the ones given with --rows.
    Sweep {
        #[command(flatten)]
        source: ConfigSource,
        /// Comma-separated g_tilde:sigma_tilde pairs.
        #[arg(long)]
        rows: Option<String>,
        #[arg(long)]
        force: bool,
    },
    /// Print the large-N predictions and validity ratios.
    Theory {
        #[arg(long, default_value_t = 0.5)]
        g_tilde: f64,
        #[arg(long = "N", default_value_t = 100.0)]
        n: f64,
        /// Also print the published comparison table against the formula.
        #[arg(long)]
        table: bool,
    },
    /// Convert between dimensionless and SI parameters (7Li defaults).
    Units {
        #[arg(long, conflicts_with = "omega")]
        g_tilde: Option<f64>,
        /// Axial angular frequency, rad/s.
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        mass_u: Option<f64>,
        #[arg(long)]
        a_sc_bohr: Option<f64>,
        #[arg(long)]
        radial_hz: Option<f64>,
    },
    /// Check a configuration and its regularization without running.
    Validate {
        #[command(flatten)]
        source: ConfigSource,
    },
}

/// A config file plus per-key overrides. Every key accepts `--KEY VALUE`.
#[derive(Args)]
struct ConfigSource {
    /// key = value configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override any key, e.g. --set npi=200. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long = "N")]
    n: Option<String>,
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    npi: Option<String>,
    #[arg(long)]
    g_tilde: Option<String>,
    #[arg(long)]
    sigma_tilde: Option<String>,
    #[arg(long)]
    quench_divisor: Option<String>,
    #[arg(long)]
    coupling: Option<String>,
    #[arg(long)]
    trap: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    e0: Option<String>,
    #[arg(long)]
    t_total: Option<String>,
    #[arg(long)]
    burn_in: Option<String>,
    #[arg(long)]
    increment: Option<String>,
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    stride: Option<String>,
    #[arg(long)]
    observables: Option<String>,
    #[arg(long)]
    weighting: Option<String>,
    #[arg(long)]
    fit_start: Option<String>,
    #[arg(long)]
    fit_end: Option<String>,
    #[arg(long)]
    hist_bin_width: Option<String>,
    #[arg(long)]
    hist_r_max: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long, short)]
    output: Option<String>,
    #[arg(long)]
    format: Option<String>,
}

impl ConfigSource {
    fn overrides(&self) -> Result<Vec<Entry>, Error> {
        let flags = [
            ("N", &self.n),
            ("scale", &self.scale),
            ("npi", &self.npi),
            ("g_tilde", &self.g_tilde),
            ("sigma_tilde", &self.sigma_tilde),
            ("quench_divisor", &self.quench_divisor),
            ("coupling", &self.coupling),
            ("trap", &self.trap),
            ("b", &self.b),
            ("e0", &self.e0),
            ("t_total", &self.t_total),
            ("burn_in", &self.burn_in),
            ("increment", &self.increment),
            ("init", &self.init),
            ("seed", &self.seed),
            ("stride", &self.stride),
            ("observables", &self.observables),
            ("weighting", &self.weighting),
            ("fit_start", &self.fit_start),
            ("fit_end", &self.fit_end),
            ("hist_bin_width", &self.hist_bin_width),
            ("hist_r_max", &self.hist_r_max),
            ("threads", &self.threads),
            ("output", &self.output),
            ("format", &self.format),
        ];
        debug_assert_eq!(flags.len(), KEYS.len());
        let mut entries = Vec::new();
        for s in &self.set {
            let (k, v) = s.split_once('=').ok_or_else(|| Error::Parse {
                line: 0,
                column: 1,
                message: format!("--set expects KEY=VALUE, got '{s}'"),
            })?;
            entries.push(Entry::new(k.trim(), v.trim()));
        }
        for (k, v) in flags {
            if let Some(v) = v {
                entries.push(Entry::new(k, v));
            }
        }
        Ok(entries)
    }

    fn load(&self) -> Result<RunSpec, Error> {
        let text = match &self.config {
            Some(path) => fs::read_to_string(path)?,
            None => String::new(),
        };
        let mut entries = parse_entries(&text)?;
        apply_overrides(&mut entries, self.overrides()?)?;
        let spec = build_spec(&entries)?;
        if spec.threads == 0 {
            // The default pool reads RAYON_NUM_THREADS; the echoed config keeps threads=0.
            if let Ok(v) = std::env::var("GFK_THREADS") {
                v.trim().parse::<usize>().map_err(|_| {
                    Error::range("GFK_THREADS", format!("not a thread count: '{v}'"))
                })?;
                std::env::set_var("RAYON_NUM_THREADS", v.trim());
            }
        }
        Ok(spec)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
        Error::Parse { .. }
        | Error::Range { .. }
        | Error::TooFewParticles(_)
        | Error::TooFewTrajectories(_)
        | Error::EmptyWindow { .. } => 2,
        Error::RegularizationFailed(_) => 3,
        Error::NonFiniteWalker { .. }
        | Error::DegenerateWeights { .. }
        | Error::GridNotConverged { .. }
        | Error::DivisionByZero(_) => 4,
    }
}

fn cmd_run(source: &ConfigSource, force: bool) -> Result<(), Error> {
    let spec = source.load()?;
    let steps = spec.sampler.total_steps();
    eprintln!(
        "gfk: N={} g_tilde={} npi={} steps={} seed={}",
        spec.model.n_particles,
        spec.model.g_tilde,
        spec.n_trajectories,
        steps,
        spec.sampler.master_seed
    );
    let start = Instant::now();
    let out = run(&spec, force)?;
    let elapsed = start.elapsed().as_secs_f64();
    if let Some(path) = &spec.output_path {
        write_run(&out, path, spec.output_format)?;
        eprintln!("gfk: wrote {}", path.display());
    }
    let mut line = String::new();
    for (o, r) in &out.results {
        line.push_str(&format!("{}={:.6}±{:.6} ", o.name(), r.mean, r.std_error));
    }
    let first = &out.results[0].1;
    line.push_str(&format!(
        "E0={:.6}±{:.6} e0={:.6} ess={:.1} npi={} wall={:.2}s",
        out.ground_energy.mean,
        out.ground_energy.std_error,
        out.e0,
        first.effective_sample_size,
        first.n_trajectories,
        elapsed
    ));
    println!("{line}");
    Ok(())
}

fn parse_rows(text: &str) -> Result<Vec<(f64, f64)>, Error> {
    text.split(',')
        .map(|pair| {
            let bad = || Error::Parse {
                line: 0,
                column: 1,
                message: format!("--rows expects g_tilde:sigma_tilde, got '{pair}'"),
            };
            let (g, s) = pair.split_once(':').ok_or_else(bad)?;
            Ok((
                g.trim().parse().map_err(|_| bad())?,
                s.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn cmd_sweep(source: &ConfigSource, rows: Option<&str>, force: bool) -> Result<(), Error> {
    let spec = source.load()?;
    let rows = match rows {
        Some(text) => parse_rows(text)?,
        None => REFERENCE_ROWS
            .iter()
            .map(|r| (r.g_tilde, r.sigma_tilde))
            .collect(),
    };
    eprintln!("gfk: sweeping {} couplings", rows.len());
    let start = Instant::now();
    let table = table_sweep(&spec, &rows, force);
    match &spec.output_path {
        Some(path) => {
            write_sweep(
                &table,
                spec.output_format,
                io::BufWriter::new(fs::File::create(path)?),
            )?;
            let failed = table.iter().filter(|r| r.status != "ok").count();
            println!(
                "rows={} failed={} output={} wall={:.2}s",
                table.len(),
                failed,
                path.display(),
                start.elapsed().as_secs_f64()
            );
        }
        None => write_sweep(&table, spec.output_format, io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_theory(g_tilde: f64, n: f64, table: bool) -> Result<(), Error> {
    if !(g_tilde > 0.0 && n > 0.0) {
        return Err(Error::range("g_tilde", "g_tilde and N must be positive"));
    }
    let v = validity_conditions(g_tilde, n);
    let mut out = io::stdout().lock();
    writeln!(out, "g_tilde={g_tilde}")?;
    writeln!(out, "N={n}")?;
    writeln!(out, "vrel_variance={}", vrel_variance(g_tilde, n))?;
    writeln!(
        out,
        "pair_variance={}",
        pair_variance_prediction(g_tilde, n)
    )?;
    writeln!(out, "inverse_gn_squared={}", v.lhs)?;
    writeln!(out, "ratio_a={}", v.ratio_a)?;
    writeln!(out, "ratio_b={}", v.ratio_b)?;
    writeln!(out, "soliton_size_small={}", soliton_size(n / 4.0, g_tilde))?;
    writeln!(
        out,
        "soliton_size_large={}",
        soliton_size(3.0 * n / 4.0, g_tilde)
    )?;
    writeln!(out, "zero_point_rel_fluct={}", zero_point_rel_fluct(n))?;
    if table {
        writeln!(
            out,
            "g_tilde,sigma_tilde,numeric,error,printed_theory,formula_theory,mismatch"
        )?;
        for r in &REFERENCE_ROWS {
            writeln!(
                out,
                "{},{},{},{},{},{:.6},{}",
                r.g_tilde,
                r.sigma_tilde,
                r.numeric_mean,
                r.numeric_error,
                r.printed_theory,
                r.formula_theory(),
                r.theory_discrepancy()
            )?;
        }
    }
    Ok(())
}

fn cmd_units(
    g_tilde: Option<f64>,
    omega: Option<f64>,
    mass_u: Option<f64>,
    a_sc_bohr: Option<f64>,
    radial_hz: Option<f64>,
) -> Result<(), Error> {
    let li = PhysicalParams::lithium7();
    let params = PhysicalParams {
        atomic_mass_u: mass_u.unwrap_or(li.atomic_mass_u),
        scattering_length_bohr: a_sc_bohr.unwrap_or(li.scattering_length_bohr),
        radial_trap_freq_hz: radial_hz.unwrap_or(li.radial_trap_freq_hz),
    };
    let axial = match omega {
        Some(w) => AxialSpec::OmegaRadPerSec(w),
        None => AxialSpec::GTilde(g_tilde.unwrap_or(0.55)),
    };
    let r = units_report(&params, axial)?;
    let mut out = io::stdout().lock();
    writeln!(out, "coupling_j_m={:e}", r.coupling_j_m)?;
    writeln!(out, "g_tilde={}", r.g_tilde)?;
    writeln!(out, "axial_omega_rad_s={:e}", r.axial_omega_rad_s)?;
    writeln!(out, "axial_freq_hz={:e}", r.axial_freq_hz)?;
    writeln!(out, "quarter_period_s={}", r.quarter_period_s)?;
    writeln!(out, "radial_length_m={:e}", r.radial_length_m)?;
    writeln!(out, "collapse_threshold={}", r.collapse_threshold)?;
    Ok(())
}

fn cmd_validate(source: &ConfigSource) -> Result<(), Error> {
    let spec = source.load()?;
    let report = regularization_for(&spec)?;
    let v = validity_conditions(spec.model.g_tilde, spec.model.n_particles as f64);
    let mut out = io::stdout().lock();
    write!(out, "{}", spec.to_config_text())?;
    writeln!(out, "# ratio_a={} ratio_b={}", v.ratio_a, v.ratio_b)?;
    match report {
        Some(r) => {
            writeln!(
                out,
                "# regularization g_eff={} wkb_count={} bound_energy={} depth={} ok={}",
                r.g_eff, r.count, r.bound_energy_estimate, r.v0, r.ok
            )?;
            if !r.ok {
                return Err(Error::RegularizationFailed(format!(
                    "WKB count {:.4}, bound energy {:.6}, depth {:.4}",
                    r.count, r.bound_energy_estimate, r.v0
                )));
            }
        }
        None => writeln!(out, "# regularization not needed (no interaction)")?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { source, force } => cmd_run(source, *force),
        Command::Sweep {
            source,
            rows,
            force,
        } => cmd_sweep(source, rows.as_deref(), *force),
        Command::Theory { g_tilde, n, table } => cmd_theory(*g_tilde, *n, *table),
        Command::Units {
            g_tilde,
            omega,
            mass_u,
            a_sc_bohr,
            radial_hz,
        } => cmd_units(*g_tilde, *omega, *mass_u, *a_sc_bohr, *radial_hz),
        Command::Validate { source } => cmd_validate(source),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gfk: error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
