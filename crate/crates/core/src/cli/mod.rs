//! Command-line front end: `run`, `ensemble`, `sweep` and `noise-preview`.
//!
//! Every command renders a CSV table preceded by a `#` header that echoes
//! the fully resolved configuration; [`config_from_header`] recovers it so
//! a run can be repeated from its own output.

pub mod config;

use crate::experiment::{
    baseline_decay_metrics, ensemble_average, fit_ensemble, sweep_strength, with_parallelism, ExperimentError,
    RunMode,
};
use crate::monitor::{run_baseline, run_single, synthesize_noise, RunError, RunStreams};
use crate::noise::{band_average, empirical_spectrum, loglog_slope, periodogram_samples, GridSampler};
use crate::povm::measurement_strength;
use clap::{Args, Parser, Subcommand};
pub use config::{ConfigError, ExperimentConfigFile};
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Caps worker threads when `--parallel` is absent.
pub const THREADS_ENV: &str = "STATEMON_THREADS";

/// Largest sampled preview; finer grids are refused rather than allocated.
pub const MAX_PREVIEW_SAMPLES: usize = 1 << 22;

const CONFIG_BEGIN: &str = "# begin config";
const CONFIG_END: &str = "# end config";

#[derive(Debug, Parser)]
#[command(name = "statemon", version, about = "Monitor a noisy driven qubit with sequential unsharp measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single monitored run: true and estimated Bloch vectors and fidelity.
    Run(CommonArgs),
    /// Ensemble-averaged fidelity with a saturating-exponential fit.
    Ensemble(CommonArgs),
    /// Asymptotic fidelity and convergence time against measurement strength.
    Sweep(CommonArgs),
    /// Sampled noise trajectories and their band-averaged periodogram.
    NoisePreview(CommonArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct CommonArgs {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the number of runs of ensembles and sweep points.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Measurement-free runs.
    #[arg(long)]
    pub baseline: bool,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub parallel: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

/// 17 significant digits; parses back to the identical `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reads the config file (if any) and applies command-line overrides.
pub fn resolve_config(args: &CommonArgs) -> Result<ExperimentConfigFile, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
            ExperimentConfigFile::from_toml(&text)?
        }
        None => ExperimentConfigFile::default(),
    };
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.ensemble.n_runs = runs;
        cfg.sweep.n_runs = runs;
    }
    if args.baseline {
        cfg.ensemble.baseline = true;
    }
    Ok(cfg)
}

fn thread_count(args: &CommonArgs) -> usize {
    args.parallel
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .unwrap_or(0)
}

/// Recovers the resolved configuration echoed into an output header.
pub fn config_from_header(text: &str) -> Result<ExperimentConfigFile, ConfigError> {
    let mut inside = false;
    let mut toml = String::new();
    for line in text.lines() {
        if line == CONFIG_BEGIN {
            inside = true;
        } else if line == CONFIG_END {
            return ExperimentConfigFile::from_toml(&toml);
        } else if inside {
            let body = line.strip_prefix('#').ok_or_else(|| ConfigError::Parse("unterminated config block".into()))?;
            toml.push_str(body.strip_prefix(' ').unwrap_or(body));
            toml.push('\n');
        }
    }
    Err(ConfigError::Parse("no config block in header".into()))
}

/// Lines of the table that are not `#` metadata.
pub fn data_block(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

fn header(command: &str, cfg: &ExperimentConfigFile, notes: &[String]) -> String {
    let mut out = String::new();
    writeln!(out, "# statemon {VERSION}").unwrap();
    writeln!(out, "# command: {command}").unwrap();
    writeln!(out, "# seed: {}", cfg.run.seed).unwrap();
    writeln!(out, "# time column unit: T_R = 2*pi/rabi_frequency").unwrap();
    for note in notes {
        writeln!(out, "# note: {note}").unwrap();
    }
    writeln!(out, "{CONFIG_BEGIN}").unwrap();
    for line in cfg.to_toml().lines() {
        if line.is_empty() {
            writeln!(out, "#").unwrap();
        } else {
            writeln!(out, "# {line}").unwrap();
        }
    }
    writeln!(out, "{CONFIG_END}").unwrap();
    out
}

fn provenance_notes(cfg: &ExperimentConfigFile) -> Result<Vec<String>, CliError> {
    let mut notes = Vec::new();
    let m = cfg.measurement()?;
    if m.direction_was_normalized() {
        let [x, y, z] = m.direction();
        notes.push(format!(
            "measurement direction {:?} normalized to [{}, {}, {}]",
            m.raw_direction(),
            num(x),
            num(y),
            num(z)
        ));
    }
    if cfg.run.initial_state == config::RunSection::default().initial_state {
        notes.push("initial true state is the default +z eigenstate".into());
    }
    notes.push(format!("gamma_m = {}", num(measurement_strength(&m))));
    Ok(notes)
}

/// Runs a subcommand and returns the rendered table.
pub fn execute(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Ensemble(args) => cmd_ensemble(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::NoisePreview(args) => cmd_noise_preview(args),
    }
}

/// Executes and writes to `--out` or stdout.
pub fn execute_and_write(command: &Command) -> Result<(), CliError> {
    let args = match command {
        Command::Run(a) | Command::Ensemble(a) | Command::Sweep(a) | Command::NoisePreview(a) => a,
    };
    let table = execute(command)?;
    match &args.out {
        Some(path) => std::fs::write(path, table)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(table.as_bytes())?;
        }
    }
    Ok(())
}

pub fn cmd_run(args: &CommonArgs) -> Result<String, CliError> {
    let cfg = resolve_config(args)?;
    let run = cfg.run_config()?;
    let record = if cfg.ensemble.baseline { run_baseline(&run)? } else { run_single(&run)? };
    let mut notes = provenance_notes(&cfg)?;
    if cfg.ensemble.baseline {
        notes.push("measurement-free run; outcome column empty".into());
    }
    notes.push(format!(
        "noise scale factors: alpha = {}, beta = {}",
        num(record.noise_scales.0),
        num(record.noise_scales.1)
    ));
    let tr = run.drive.rabi_period();
    let mut out = header("run", &cfg, &notes);
    out.push_str("t_over_TR,outcome,sx_true,sy_true,sz_true,sx_est,sy_est,sz_est,fidelity\n");
    for k in 0..record.times.len() {
        let outcome = match k.checked_sub(1).and_then(|i| record.outcomes.get(i)) {
            Some(o) => o.index().to_string(),
            None => String::new(),
        };
        let (t, e) = (record.true_bloch[k], record.estimate_bloch[k]);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            num(record.times[k] / tr),
            outcome,
            num(t.x),
            num(t.y),
            num(t.z),
            num(e.x),
            num(e.y),
            num(e.z),
            num(record.fidelity[k])
        )
        .unwrap();
    }
    Ok(out)
}

pub fn cmd_ensemble(args: &CommonArgs) -> Result<String, CliError> {
    let cfg = resolve_config(args)?;
    let ensemble = cfg.ensemble_config()?;
    let mode = if cfg.ensemble.baseline { RunMode::Baseline } else { RunMode::Monitored };
    let curves = with_parallelism(thread_count(args), || ensemble_average(&ensemble, mode))??;
    let tr = ensemble.template.drive.rabi_period();

    let mut notes = provenance_notes(&cfg)?;
    if ensemble.n_runs == 1 {
        notes.push("single run: standard errors are zero".into());
    }
    if mode == RunMode::Baseline {
        notes.push("measurement-free ensemble; fidelity is against the undisturbed drive-only estimate".into());
    }
    let mut out = header("ensemble", &cfg, &notes);
    out.push_str("t_over_TR,mean_fidelity,se_fidelity,mean_sx,mean_sz\n");
    for k in 0..curves.times.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            num(curves.times[k] / tr),
            num(curves.mean_fidelity[k]),
            num(curves.se_fidelity[k]),
            num(curves.mean_sx[k]),
            num(curves.mean_sz[k])
        )
        .unwrap();
    }
    match fit_ensemble(&curves, tr) {
        Ok(fit) => {
            writeln!(out, "# fit_f0 = {}", num(fit.f0)).unwrap();
            writeln!(out, "# fit_tau_e_over_TR = {}", num(fit.tau_e)).unwrap();
            writeln!(out, "# fit_rms_residual = {}", num(fit.rms_residual)).unwrap();
            writeln!(out, "# fit_converged = {}", fit.converged).unwrap();
            writeln!(out, "# fit_tau_identifiable = {}", fit.tau_identifiable).unwrap();
        }
        Err(e) => writeln!(out, "# fit_failed = {e}").unwrap(),
    }
    if mode == RunMode::Baseline {
        let end = match cfg.decay_span()? {
            Some(span) => curves.times.iter().take_while(|&&t| t <= span * (1.0 + 1e-12)).count(),
            None => curves.times.len(),
        };
        match baseline_decay_metrics(&curves.times[..end], &curves.mean_sz[..end]) {
            Ok(m) => {
                writeln!(out, "# decay_span_over_TR = {}", num(curves.times[end - 1] / tr)).unwrap();
                writeln!(out, "# decay_ratio = {}", num(m.decay_ratio)).unwrap();
                let fmt = |t: Option<f64>| t.map_or("not_reached".to_string(), |t| num(t / tr));
                writeln!(out, "# half_amplitude_time_over_TR = {}", fmt(m.half_time)).unwrap();
                writeln!(out, "# e_fold_time_over_TR = {}", fmt(m.e_fold_time)).unwrap();
            }
            Err(e) => writeln!(out, "# decay_metrics_failed = {e}").unwrap(),
        }
    }
    Ok(out)
}

pub fn cmd_sweep(args: &CommonArgs) -> Result<String, CliError> {
    let cfg = resolve_config(args)?;
    let sweep = cfg.sweep_config()?;
    let tr = sweep.template.drive.rabi_period();
    let points = with_parallelism(thread_count(args), || sweep_strength(&sweep))??;
    let mut out = header("sweep", &cfg, &provenance_notes(&cfg)?);
    out.push_str("gamma_m,delta_p,tau,d_beta,d_alpha,f0,f0_se,conv_time,conv_convention\n");
    for p in &points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            num(p.gamma_m),
            num(p.delta_p),
            num(p.tau / tr),
            num(p.noise_level.0),
            num(p.noise_level.1),
            num(p.fit.f0),
            num(p.f0_se),
            num(p.convergence_time),
            p.convention.label()
        )
        .unwrap();
    }
    Ok(out)
}

pub fn cmd_noise_preview(args: &CommonArgs) -> Result<String, CliError> {
    let cfg = resolve_config(args)?;
    let run = cfg.run_config()?;
    let (alpha, beta) = synthesize_noise(&run, &mut RunStreams::new(run.seed))?;
    let window = run.duration();
    let tr = run.drive.rabi_period();
    let omega_max = run.noise_alpha.omega_max.max(run.noise_beta.omega_max);
    let samples = periodogram_samples(window, omega_max, 4096);
    if samples > MAX_PREVIEW_SAMPLES {
        return Err(CliError::Numerical(format!(
            "preview needs {samples} samples to resolve omega_max = {omega_max} over the run; limit is {MAX_PREVIEW_SAMPLES}"
        )));
    }
    let dt = window / samples as f64;

    let mut alpha_series = vec![0.0; samples];
    let mut beta_series = vec![0.0; samples];
    GridSampler::new(&alpha, dt).fill(0.0, &mut alpha_series);
    GridSampler::new(&beta, dt).fill(0.0, &mut beta_series);

    let numerical = |e: crate::noise::NoiseError| CliError::Numerical(e.to_string());
    let alpha_spec = empirical_spectrum(&alpha, window, samples).map_err(numerical)?;
    let beta_spec = empirical_spectrum(&beta, window, samples).map_err(numerical)?;
    let (lo, hi) = run.noise_beta.resolvable_band();
    let n_bands = 12;
    let alpha_bands = band_average(&alpha_spec, lo, hi, n_bands);
    let beta_bands = band_average(&beta_spec, lo, hi, n_bands);
    let slope = |bands: &[crate::noise::SpectrumBin]| loglog_slope(bands).map_or("nan".to_string(), num);

    let mut notes = provenance_notes(&cfg)?;
    notes.push(format!("window_over_TR = {}, samples = {samples}", num(window / tr)));
    let mut out = header("noise-preview", &cfg, &notes);
    out.push_str("t,alpha,beta\n");
    for k in 0..samples {
        writeln!(out, "{},{},{}", num(k as f64 * dt / tr), num(alpha_series[k]), num(beta_series[k])).unwrap();
    }
    writeln!(out, "# band-averaged periodogram over [{}, {}]", num(lo), num(hi)).unwrap();
    out.push_str("omega,power_alpha,power_beta\n");
    for (a, b) in alpha_bands.iter().zip(&beta_bands) {
        writeln!(out, "{},{},{}", num(a.omega), num(a.power), num(b.power)).unwrap();
    }
    writeln!(out, "# slope_alpha = {}", slope(&alpha_bands)).unwrap();
    writeln!(out, "# slope_beta = {}", slope(&beta_bands)).unwrap();
    Ok(out)
}
