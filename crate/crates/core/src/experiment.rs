//! Ensembles of runs, the saturating-exponential fidelity fit, measurement
//! strength sweeps and Rabi-decay metrics.

use crate::monitor::{run_baseline, run_single, RunConfig, RunError, RunStreams};
use crate::noise::NoiseSpec;
use crate::povm::{measurement_strength, MeasurementConfig};
use crate::qubit::PureState;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Decay(#[from] DecayError),
    #[error("ensemble needs at least one run")]
    NoRuns,
    #[error("sweep grid is empty")]
    EmptySweep,
    #[error("failed to build thread pool: {0}")]
    ThreadPool(String),
}

/// Per-run seed: SplitMix64 finalizer over `master + (index + 1)·φ`. For a
/// fixed master seed the map is injective in the index, and adding runs
/// never changes the seeds of existing ones.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f` on a dedicated pool of `threads` workers (0 = rayon default).
pub fn with_parallelism<T: Send>(
    threads: usize,
    f: impl FnOnce() -> T + Send,
) -> Result<T, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Monitored,
    /// No measurements; the reference estimate follows the bare drive.
    Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub template: RunConfig,
    pub n_runs: usize,
    pub master_seed: u64,
}

impl EnsembleConfig {
    pub fn run_config(&self, index: usize) -> RunConfig {
        RunConfig { seed: derive_seed(self.master_seed, index as u64), ..self.template.clone() }
    }
}

/// Pointwise ensemble statistics on the common `t = kτ` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleCurves {
    pub times: Vec<f64>,
    pub mean_fidelity: Vec<f64>,
    pub se_fidelity: Vec<f64>,
    pub mean_sx: Vec<f64>,
    pub mean_sy: Vec<f64>,
    pub mean_sz: Vec<f64>,
    /// Mean over runs of each run's time-averaged fidelity on the final 20%
    /// of the grid, with its standard error across runs.
    pub tail_fidelity: f64,
    pub tail_fidelity_se: f64,
    pub n_runs: usize,
}

/// Welford accumulator applied in run-index order.
#[derive(Debug, Clone)]
struct Moments {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self { count: 0.0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    fn add(&mut self, values: &[f64]) {
        self.count += 1.0;
        for ((mean, m2), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(values) {
            let delta = x - *mean;
            *mean += delta / self.count;
            *m2 += delta * (x - *mean);
        }
    }

    fn standard_errors(&self) -> Vec<f64> {
        if self.count < 2.0 {
            return vec![0.0; self.mean.len()];
        }
        self.m2
            .iter()
            .map(|m2| (m2 / (self.count - 1.0)).max(0.0).sqrt() / self.count.sqrt())
            .collect()
    }
}

/// Index of the first point of the trailing 20% of a series of `len`.
pub fn tail_start(len: usize) -> usize {
    let tail = ((len as f64) * 0.2).ceil().max(1.0) as usize;
    len.saturating_sub(tail)
}

struct RunSummary {
    fidelity: Vec<f64>,
    sx: Vec<f64>,
    sy: Vec<f64>,
    sz: Vec<f64>,
}

const CHUNK: usize = 256;

/// Runs the ensemble on the current rayon pool and reduces in index order,
/// so the result does not depend on the number of worker threads.
pub fn ensemble_average(config: &EnsembleConfig, mode: RunMode) -> Result<EnsembleCurves, ExperimentError> {
    if config.n_runs == 0 {
        return Err(ExperimentError::NoRuns);
    }
    let times = config.template.times();
    let len = times.len();
    let mut fid = Moments::new(len);
    let mut sx = Moments::new(len);
    let mut sy = Moments::new(len);
    let mut sz = Moments::new(len);
    let mut tail = Moments::new(1);
    let start = tail_start(len);

    for chunk_start in (0..config.n_runs).step_by(CHUNK) {
        let chunk_end = (chunk_start + CHUNK).min(config.n_runs);
        let summaries: Vec<RunSummary> = (chunk_start..chunk_end)
            .into_par_iter()
            .map(|i| {
                let run = config.run_config(i);
                let record = match mode {
                    RunMode::Monitored => run_single(&run)?,
                    RunMode::Baseline => run_baseline(&run)?,
                };
                Ok(RunSummary {
                    sx: record.true_bloch.iter().map(|b| b.x).collect(),
                    sy: record.true_bloch.iter().map(|b| b.y).collect(),
                    sz: record.true_bloch.iter().map(|b| b.z).collect(),
                    fidelity: record.fidelity,
                })
            })
            .collect::<Result<_, RunError>>()?;
        for s in &summaries {
            fid.add(&s.fidelity);
            sx.add(&s.sx);
            sy.add(&s.sy);
            sz.add(&s.sz);
            let tail_mean = s.fidelity[start..].iter().sum::<f64>() / (len - start) as f64;
            tail.add(&[tail_mean]);
        }
    }

    Ok(EnsembleCurves {
        times,
        se_fidelity: fid.standard_errors(),
        mean_fidelity: fid.mean,
        mean_sx: sx.mean,
        mean_sy: sy.mean,
        mean_sz: sz.mean,
        tail_fidelity: tail.mean[0],
        tail_fidelity_se: tail.standard_errors()[0],
        n_runs: config.n_runs,
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("times and values differ in length ({times} vs {values})")]
    LengthMismatch { times: usize, values: usize },
    #[error("times must be strictly increasing and finite")]
    NonIncreasingTimes,
    #[error("fidelity curve is identically zero; nothing to fit")]
    FlatZero,
}

/// Least-squares fit of `F(t) = F₀(1 − e^{−t/τ_E})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityCurveFit {
    pub f0: f64,
    pub tau_e: f64,
    pub rms_residual: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; the best iterate is returned.
    pub converged: bool,
    /// False when the curve is already saturated at the first sample, so the
    /// data carry no information about `τ_E`.
    pub tau_identifiable: bool,
}

pub const FIT_MIN_POINTS: usize = 10;
const FIT_MAX_ITERATIONS: usize = 200;
const FIT_RELATIVE_TOLERANCE: f64 = 1e-8;

/// First time the curve reaches `level`, linearly interpolated.
pub fn crossing_time(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    if values.first()? >= &level {
        return Some(times[0]);
    }
    times.windows(2).zip(values.windows(2)).find_map(|(t, v)| {
        (v[0] < level && v[1] >= level).then(|| t[0] + (t[1] - t[0]) * (level - v[0]) / (v[1] - v[0]))
    })
}

fn sse(times: &[f64], values: &[f64], f0: f64, tau: f64) -> f64 {
    times
        .iter()
        .zip(values)
        .map(|(t, y)| {
            let r = y - f0 * (1.0 - (-t / tau).exp());
            r * r
        })
        .sum()
}

/// Damped Gauss-Newton (Levenberg-Marquardt) in `(F₀, ln τ_E)`, started
/// from the tail mean and the `1 − e⁻¹` crossing time.
pub fn fit_fidelity(times: &[f64], values: &[f64]) -> Result<FidelityCurveFit, FitError> {
    if times.len() != values.len() {
        return Err(FitError::LengthMismatch { times: times.len(), values: values.len() });
    }
    if times.len() < FIT_MIN_POINTS {
        return Err(FitError::TooFewPoints { min: FIT_MIN_POINTS, got: times.len() });
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FitError::NonIncreasingTimes);
    }
    if values.iter().all(|v| v.abs() < 1e-12) {
        return Err(FitError::FlatZero);
    }

    let start = tail_start(values.len());
    let mut f0 = values[start..].iter().sum::<f64>() / (values.len() - start) as f64;
    let level = (1.0 - (-1.0f64).exp()) * f0;
    let first_t = times[0].max(f64::MIN_POSITIVE);
    let mut tau = match crossing_time(times, values, level) {
        Some(t) if t > times[0] => t,
        Some(_) => 0.5 * first_t,
        None => *times.last().unwrap(),
    }
    .max(1e-12);

    let mut current = sse(times, values, f0, tau);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < FIT_MAX_ITERATIONS {
        iterations += 1;
        // normal equations for (F₀, u = ln τ)
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (t, y) in times.iter().zip(values) {
            let decay = (-t / tau).exp();
            let model = f0 * (1.0 - decay);
            let r = y - model;
            let j1 = 1.0 - decay;
            let j2 = -f0 * (t / tau) * decay;
            a11 += j1 * j1;
            a12 += j1 * j2;
            a22 += j2 * j2;
            g1 += j1 * r;
            g2 += j2 * r;
        }
        if g1 == 0.0 && g2 == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let (d11, d22) = (a11 * (1.0 + lambda), a22 * (1.0 + lambda));
            let det = d11 * d22 - a12 * a12;
            let (df, du) = if det.abs() > 0.0 && det.is_finite() {
                ((d22 * g1 - a12 * g2) / det, (d11 * g2 - a12 * g1) / det)
            } else if d11 > 0.0 {
                (g1 / d11, 0.0)
            } else {
                (0.0, 0.0)
            };
            let new_f0 = f0 + df;
            let new_tau = tau * du.clamp(-20.0, 20.0).exp();
            let trial = sse(times, values, new_f0, new_tau);
            if trial <= current {
                let small = df.abs() <= FIT_RELATIVE_TOLERANCE * f0.abs().max(1e-300)
                    && (new_tau - tau).abs() <= FIT_RELATIVE_TOLERANCE * tau;
                f0 = new_f0;
                tau = new_tau;
                current = trial;
                lambda = (lambda * 0.1).max(1e-12);
                accepted = true;
                converged = small;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left at machine precision
            converged = true;
        }
        if converged {
            break;
        }
    }

    let sensitivity = times
        .iter()
        .map(|t| (f0 * (t / tau) * (-t / tau).exp()).abs())
        .fold(0.0, f64::max);
    Ok(FidelityCurveFit {
        f0: f0.clamp(0.0, 1.0),
        tau_e: tau,
        rms_residual: (current / times.len() as f64).sqrt(),
        iterations,
        converged,
        tau_identifiable: sensitivity > 1e-6,
    })
}

/// Fit of an ensemble's mean fidelity, excluding `t = 0`. Times are
/// converted to units of the Rabi period.
pub fn fit_ensemble(curves: &EnsembleCurves, rabi_period: f64) -> Result<FidelityCurveFit, FitError> {
    let times: Vec<f64> = curves.times[1..].iter().map(|t| t / rabi_period).collect();
    fit_fidelity(&times, &curves.mean_fidelity[1..])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceConvention {
    /// `τ_E` of the exponential fit.
    FitTime,
    /// Time to reach `(1 − e⁻¹)·F₀` on the mean curve.
    CrossingTime,
}

impl ConvergenceConvention {
    pub fn label(self) -> &'static str {
        match self {
            ConvergenceConvention::FitTime => "fit_tau_e",
            ConvergenceConvention::CrossingTime => "crossing_1_minus_inv_e",
        }
    }
}

/// Fits whose RMS residual exceeds this fraction of `F₀` are treated as
/// non-exponential and report the crossing time instead of `τ_E`.
pub const EXPONENTIAL_RESIDUAL_LIMIT: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub template: RunConfig,
    /// `(Δp, τ)` pairs, `τ` in units of `1/Ω_R`.
    pub strengths: Vec<(f64, f64)>,
    /// `(Δβ, Δα)` RMS noise levels.
    pub noise_levels: Vec<(f64, f64)>,
    pub n_runs: usize,
    pub master_seed: u64,
    /// Each point runs for at least this many collapse times `τ_m`.
    pub min_span_collapse_times: f64,
    /// Upper bound on the per-point run length, in periods.
    pub max_periods: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub gamma_m: f64,
    pub delta_p: f64,
    pub tau: f64,
    /// `(Δβ, Δα)`
    pub noise_level: (f64, f64),
    pub n_periods: usize,
    pub fit: FidelityCurveFit,
    pub f0_se: f64,
    /// In units of the Rabi period.
    pub convergence_time: f64,
    pub convention: ConvergenceConvention,
}

impl SweepConfig {
    fn point_config(&self, delta_p: f64, tau: f64, noise: (f64, f64)) -> Result<RunConfig, RunError> {
        let t = &self.template;
        let measurement = MeasurementConfig::new(t.measurement.raw_direction(), delta_p, tau)?;
        let span = (self.min_span_collapse_times * measurement.collapse_time() / tau).ceil();
        let n_periods = if span.is_finite() {
            (span as usize).max(t.n_periods).min(self.max_periods.max(1))
        } else {
            self.max_periods.max(1)
        };
        Ok(RunConfig {
            measurement,
            noise_beta: NoiseSpec { target_rms: noise.0, ..t.noise_beta },
            noise_alpha: NoiseSpec { target_rms: noise.1, ..t.noise_alpha },
            n_periods,
            ..t.clone()
        })
    }
}

/// One ensemble and fit per (noise level, strength) pair, noise-major.
pub fn sweep_strength(config: &SweepConfig) -> Result<Vec<SweepPoint>, ExperimentError> {
    if config.strengths.is_empty() || config.noise_levels.is_empty() {
        return Err(ExperimentError::EmptySweep);
    }
    let mut points = Vec::with_capacity(config.strengths.len() * config.noise_levels.len());
    for (level_index, &noise) in config.noise_levels.iter().enumerate() {
        for (strength_index, &(delta_p, tau)) in config.strengths.iter().enumerate() {
            let template = config.point_config(delta_p, tau, noise)?;
            let rabi_period = template.drive.rabi_period();
            let gamma_m = measurement_strength(&template.measurement);
            let n_periods = template.n_periods;
            let master_seed =
                derive_seed(config.master_seed, ((level_index as u64) << 32) | strength_index as u64);
            let ensemble = EnsembleConfig { template, n_runs: config.n_runs, master_seed };
            let curves = ensemble_average(&ensemble, RunMode::Monitored)?;
            let fit = fit_ensemble(&curves, rabi_period)?;
            let exponential =
                fit.converged && fit.tau_identifiable && fit.rms_residual <= EXPONENTIAL_RESIDUAL_LIMIT * fit.f0;
            let (convergence_time, convention) = if exponential {
                (fit.tau_e, ConvergenceConvention::FitTime)
            } else {
                let times: Vec<f64> = curves.times.iter().map(|t| t / rabi_period).collect();
                let level = (1.0 - (-1.0f64).exp()) * fit.f0;
                let crossing = crossing_time(&times, &curves.mean_fidelity, level).unwrap_or(f64::NAN);
                (crossing, ConvergenceConvention::CrossingTime)
            };
            points.push(SweepPoint {
                gamma_m,
                delta_p,
                tau,
                noise_level: noise,
                n_periods,
                fit,
                f0_se: curves.tail_fidelity_se,
                convergence_time,
                convention,
            });
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecayError {
    #[error("found {0} oscillation extrema, need at least 4")]
    TooFewExtrema(usize),
    #[error("times and values differ in length")]
    LengthMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayMetrics {
    /// `(t, |amplitude|)` at each extremum, parabola-refined.
    pub envelope: Vec<(f64, f64)>,
    /// Final over initial envelope amplitude.
    pub decay_ratio: f64,
    /// First time the envelope falls below half its initial value.
    pub half_time: Option<f64>,
    /// First time the envelope falls below `e⁻¹` of its initial value.
    pub e_fold_time: Option<f64>,
}

/// Envelope of an oscillating mean `⟨σz⟩` from its local extrema.
pub fn baseline_decay_metrics(times: &[f64], mean_sz: &[f64]) -> Result<DecayMetrics, DecayError> {
    if times.len() != mean_sz.len() {
        return Err(DecayError::LengthMismatch);
    }
    let n = mean_sz.len();
    let mut envelope = Vec::new();
    if n >= 2 && mean_sz[0].abs() >= mean_sz[1].abs() {
        envelope.push((times[0], mean_sz[0].abs()));
    }
    for k in 1..n.saturating_sub(1) {
        let (a, b, c) = (mean_sz[k - 1], mean_sz[k], mean_sz[k + 1]);
        let is_max = b > a && b >= c;
        let is_min = b < a && b <= c;
        if !(is_max || is_min) {
            continue;
        }
        // vertex of the parabola through the three samples
        let curvature = a - 2.0 * b + c;
        let (shift, peak) = if curvature != 0.0 {
            let s = 0.5 * (a - c) / curvature;
            (s, b - 0.25 * (a - c) * s)
        } else {
            (0.0, b)
        };
        let dt = times[k + 1] - times[k];
        envelope.push((times[k] + shift * dt, peak.abs()));
    }
    if envelope.len() < 4 {
        return Err(DecayError::TooFewExtrema(envelope.len()));
    }
    let initial = envelope[0].1;
    let last = envelope[envelope.len() - 1].1;
    let falls_below = |fraction: f64| {
        let level = fraction * initial;
        envelope.windows(2).find_map(|w| {
            let ((t0, a0), (t1, a1)) = (w[0], w[1]);
            (a0 >= level && a1 < level).then(|| t0 + (t1 - t0) * (a0 - level) / (a0 - a1))
        })
    };
    Ok(DecayMetrics {
        decay_ratio: last / initial,
        half_time: falls_below(0.5),
        e_fold_time: falls_below((-1.0f64).exp()),
        envelope,
    })
}

/// Time-averaged fidelity of a fixed Haar-random guess against the noisy,
/// unmeasured true state, averaged over runs: `(mean, standard error)`.
pub fn random_guess_fidelity(config: &EnsembleConfig) -> Result<(f64, f64), ExperimentError> {
    if config.n_runs == 0 {
        return Err(ExperimentError::NoRuns);
    }
    let per_run: Vec<f64> = (0..config.n_runs)
        .into_par_iter()
        .map(|i| {
            let run = config.run_config(i);
            let mut streams = RunStreams::new(run.seed);
            let guess = PureState::random(&mut streams.outcomes);
            let record = run_baseline(&run)?;
            let guess_bloch = guess.bloch();
            let total: f64 = record.true_bloch.iter().map(|b| 0.5 * (1.0 + b.dot(&guess_bloch))).sum();
            Ok(total / record.true_bloch.len() as f64)
        })
        .collect::<Result<_, RunError>>()?;
    let mut m = Moments::new(1);
    per_run.iter().for_each(|v| m.add(&[*v]));
    Ok((m.mean[0], m.standard_errors()[0]))
}
