//! One monitoring run: the true state evolves under drive and noise and is
//! measured once per period; the estimate replays the same outcomes under
//! the drive alone.

use crate::dynamics::{propagate_noiseless, DriveConfig, DynamicsError, NoisyPropagator, StepControl};
use crate::noise::{synthesize, NoiseError, NoiseSpec, NoiseTrajectory};
use crate::povm::{apply_measurement, build_kraus, sample_outcome, MeasurementConfig, Outcome, PovmError};
use crate::qubit::{BlochVector, PureState, QubitError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Qubit(#[from] QubitError),
    #[error(transparent)]
    Povm(#[from] PovmError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("run length must be at least one period")]
    EmptyRun,
}

/// Everything that determines a run, including its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub drive: DriveConfig,
    pub measurement: MeasurementConfig,
    pub noise_alpha: NoiseSpec,
    pub noise_beta: NoiseSpec,
    pub initial_state: PureState,
    pub initial_estimate: PureState,
    pub n_periods: usize,
    pub step_control: StepControl,
    pub seed: u64,
}

impl RunConfig {
    /// Noise-free unsharp σz monitoring: `Δp = 0.2`, `τ = T_R/10`, start in
    /// `|↑⟩` with the orthogonal estimate `|↓⟩`, 30 Rabi periods.
    pub fn noiseless_z() -> Self {
        let drive = DriveConfig::default();
        let period = drive.rabi_period() / 10.0;
        Self {
            drive,
            measurement: MeasurementConfig::new([0.0, 0.0, 1.0], 0.2, period)
                .expect("static measurement config"),
            noise_alpha: NoiseSpec::one_over_f(0.0),
            noise_beta: NoiseSpec::one_over_f(0.0),
            initial_state: PureState::up(),
            initial_estimate: PureState::down(),
            n_periods: 300,
            step_control: StepControl::default(),
            seed: 0,
        }
    }

    /// Tilted measurement axis `(0.43, 0, 0.9)` with 1/f amplitude noise of
    /// RMS `d_alpha` and dephasing noise of RMS `d_beta`.
    pub fn noisy_tilted(d_beta: f64, d_alpha: f64) -> Self {
        let base = Self::noiseless_z();
        Self {
            measurement: MeasurementConfig::new([0.43, 0.0, 0.9], 0.2, base.measurement.period())
                .expect("static measurement config"),
            noise_alpha: NoiseSpec::one_over_f(d_alpha),
            noise_beta: NoiseSpec::one_over_f(d_beta),
            ..base
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.n_periods == 0 {
            return Err(RunError::EmptyRun);
        }
        self.initial_state.check_normalized()?;
        self.initial_estimate.check_normalized()?;
        self.noise_alpha.validate()?;
        self.noise_beta.validate()?;
        StepControl::new(self.step_control.substeps_per_period)?;
        DriveConfig::new(self.drive.rabi_frequency)?;
        Ok(())
    }

    pub fn period(&self) -> f64 {
        self.measurement.period()
    }

    /// Total duration `N·τ`.
    pub fn duration(&self) -> f64 {
        self.n_periods as f64 * self.period()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_periods).map(|k| k as f64 * self.period()).collect()
    }
}

/// Independent random streams of one run: ChaCha8 keyed by the run seed,
/// with one stream each for outcomes, α and β.
pub struct RunStreams {
    pub outcomes: ChaCha8Rng,
    pub alpha: ChaCha8Rng,
    pub beta: ChaCha8Rng,
}

impl RunStreams {
    pub const OUTCOME_STREAM: u64 = 0;
    pub const ALPHA_STREAM: u64 = 1;
    pub const BETA_STREAM: u64 = 2;

    pub fn new(seed: u64) -> Self {
        let stream = |id| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Self {
            outcomes: stream(Self::OUTCOME_STREAM),
            alpha: stream(Self::ALPHA_STREAM),
            beta: stream(Self::BETA_STREAM),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// `t = kτ`, `k = 0..=N`, in units of `1/Ω_R`.
    pub times: Vec<f64>,
    /// Outcome of the measurement at `times[k + 1]`; empty for baseline runs.
    pub outcomes: Vec<Outcome>,
    pub true_bloch: Vec<BlochVector>,
    pub estimate_bloch: Vec<BlochVector>,
    pub fidelity: Vec<f64>,
    /// Realized RMS scale factors `(α, β)`.
    pub noise_scales: (f64, f64),
}

impl RunRecord {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            outcomes: Vec::with_capacity(n),
            true_bloch: Vec::with_capacity(n),
            estimate_bloch: Vec::with_capacity(n),
            fidelity: Vec::with_capacity(n),
            noise_scales: (0.0, 0.0),
        }
    }

    fn push(&mut self, t: f64, truth: &PureState, estimate: &PureState) {
        self.times.push(t);
        self.true_bloch.push(truth.bloch());
        self.estimate_bloch.push(estimate.bloch());
        self.fidelity.push(truth.inner(estimate).norm_sqr().clamp(0.0, 1.0));
    }

    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().expect("records hold at least t = 0")
    }
}

/// α and β realizations of a run, synthesized over `[0, N·τ]`.
pub fn synthesize_noise(
    config: &RunConfig,
    streams: &mut RunStreams,
) -> Result<(NoiseTrajectory, NoiseTrajectory), RunError> {
    let window = config.duration();
    let alpha = synthesize(&config.noise_alpha, window, &mut streams.alpha)?;
    let beta = synthesize(&config.noise_beta, window, &mut streams.beta)?;
    Ok((alpha, beta))
}

/// Monitored run: per period, propagate then measure, for both the true
/// state and the estimate, with the outcome sampled from the true state.
pub fn run_single(config: &RunConfig) -> Result<RunRecord, RunError> {
    config.validate()?;
    let mut streams = RunStreams::new(config.seed);
    let (alpha, beta) = synthesize_noise(config, &mut streams)?;
    let tau = config.period();
    let propagator = NoisyPropagator::new(config.drive, tau, &alpha, &beta, config.step_control)?;
    let kraus = build_kraus(&config.measurement);

    let mut record = RunRecord::with_capacity(config.n_periods + 1);
    record.noise_scales = (alpha.scale, beta.scale);
    let mut truth = config.initial_state.renormalize();
    let mut estimate = config.initial_estimate.renormalize();
    record.push(0.0, &truth, &estimate);
    for k in 0..config.n_periods {
        let t0 = k as f64 * tau;
        truth = propagator.advance(&truth, t0);
        estimate = propagate_noiseless(&estimate, tau, &config.drive);
        let outcome = sample_outcome(&truth, &kraus, &mut streams.outcomes);
        truth = apply_measurement(&truth, &kraus, outcome)?;
        estimate = apply_measurement(&estimate, &kraus, outcome)?;
        record.outcomes.push(outcome);
        record.push((k + 1) as f64 * tau, &truth, &estimate);
    }
    Ok(record)
}

/// Measurement-free run on the same noise realization; the reference
/// estimate follows the undisturbed drive.
pub fn run_baseline(config: &RunConfig) -> Result<RunRecord, RunError> {
    config.validate()?;
    let mut streams = RunStreams::new(config.seed);
    let (alpha, beta) = synthesize_noise(config, &mut streams)?;
    let tau = config.period();
    let propagator = NoisyPropagator::new(config.drive, tau, &alpha, &beta, config.step_control)?;

    let mut record = RunRecord::with_capacity(config.n_periods + 1);
    record.noise_scales = (alpha.scale, beta.scale);
    let mut truth = config.initial_state.renormalize();
    let mut estimate = config.initial_estimate.renormalize();
    record.push(0.0, &truth, &estimate);
    for k in 0..config.n_periods {
        truth = propagator.advance(&truth, k as f64 * tau);
        estimate = propagate_noiseless(&estimate, tau, &config.drive);
        record.push((k + 1) as f64 * tau, &truth, &estimate);
    }
    Ok(record)
}

/// Rebuilds the estimate trajectory from the outcome record alone.
pub fn replay_estimate(
    initial_estimate: &PureState,
    drive: &DriveConfig,
    measurement: &MeasurementConfig,
    outcomes: &[Outcome],
) -> Result<Vec<BlochVector>, RunError> {
    let kraus = build_kraus(measurement);
    let mut estimate = initial_estimate.renormalize();
    let mut out = Vec::with_capacity(outcomes.len() + 1);
    out.push(estimate.bloch());
    for &outcome in outcomes {
        estimate = propagate_noiseless(&estimate, measurement.period(), drive);
        estimate = apply_measurement(&estimate, &kraus, outcome)?;
        out.push(estimate.bloch());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_start_without_noise_stays_perfect() {
        let config = RunConfig { initial_estimate: PureState::up(), n_periods: 200, ..RunConfig::noiseless_z() };
        let rec = run_single(&config).unwrap();
        assert!(rec.fidelity.iter().all(|f| (f - 1.0).abs() < 1e-12));
    }

    #[test]
    fn uninformative_measurement_keeps_fidelity() {
        let mut config = RunConfig::noiseless_z();
        config.measurement = MeasurementConfig::new([0.0, 0.0, 1.0], 0.0, config.period()).unwrap();
        config.initial_estimate = PureState::from_bloch([1.0, 0.0, 0.0]).unwrap();
        let rec = run_single(&config).unwrap();
        assert!(rec.fidelity.iter().all(|f| (f - 0.5).abs() < 1e-12));
    }

    #[test]
    fn record_shapes() {
        let config = RunConfig { n_periods: 1, ..RunConfig::noisy_tilted(0.05, 0.005) };
        let rec = run_single(&config).unwrap();
        assert_eq!(rec.times.len(), 2);
        assert_eq!(rec.outcomes.len(), 1);
        assert_eq!(rec.true_bloch.len(), 2);
        assert_eq!(rec.times[1], config.period());
        assert!(matches!(
            run_single(&RunConfig { n_periods: 0, ..config }),
            Err(RunError::EmptyRun)
        ));
    }

    #[test]
    fn fidelity_matches_bloch_overlap() {
        let rec = run_single(&RunConfig { seed: 5, ..RunConfig::noisy_tilted(0.05, 0.005) }).unwrap();
        for k in 0..rec.times.len() {
            let via = 0.5 * (1.0 + rec.true_bloch[k].dot(&rec.estimate_bloch[k]));
            assert!((rec.fidelity[k] - via).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&rec.fidelity[k]));
            assert!((rec.true_bloch[k].norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let config = RunConfig { seed: 77, ..RunConfig::noisy_tilted(0.05, 0.005) };
        let a = run_single(&config).unwrap();
        let b = run_single(&config).unwrap();
        assert_eq!(a, b);
        let c = run_single(&RunConfig { seed: 78, ..config }).unwrap();
        assert_ne!(a.outcomes, c.outcomes);
    }

    #[test]
    fn estimate_is_recoverable_from_outcomes() {
        let config = RunConfig { seed: 3, ..RunConfig::noisy_tilted(0.05, 0.005) };
        let rec = run_single(&config).unwrap();
        let replayed =
            replay_estimate(&config.initial_estimate, &config.drive, &config.measurement, &rec.outcomes)
                .unwrap();
        assert_eq!(replayed, rec.estimate_bloch);
    }

    #[test]
    fn baseline_without_noise_is_exact_rabi() {
        let config = RunConfig::noiseless_z();
        let rec = run_baseline(&config).unwrap();
        assert!(rec.outcomes.is_empty());
        for (t, b) in rec.times.iter().zip(&rec.true_bloch) {
            assert!((b.z - t.cos()).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn baseline_stays_pure() {
        let rec = run_baseline(&RunConfig { seed: 9, ..RunConfig::noisy_tilted(0.1, 0.01) }).unwrap();
        assert!(rec.true_bloch.iter().all(|b| (b.norm() - 1.0).abs() < 1e-9));
        assert!(rec.noise_scales.0 > 0.0 && rec.noise_scales.1 > 0.0);
    }

    #[test]
    fn noiseless_run_converges() {
        let rec = run_single(&RunConfig { seed: 1, ..RunConfig::noiseless_z() }).unwrap();
        let tail = &rec.fidelity[rec.fidelity.len() - 50..];
        assert!(tail.iter().all(|&f| f > 0.95), "{:?}", &tail[..5]);
    }
}
