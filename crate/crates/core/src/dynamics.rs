//! Time evolution between measurements.
//!
//! The true state evolves under `H(t) = (Ω_R/2 + α(t))σx + β(t)σz` (ħ = 1).
//! The time-ordered exponential over one period is approximated by `n_sub`
//! piecewise-constant steps with the Hamiltonian frozen at each step's
//! midpoint; every step is applied as an exact SU(2) rotation. The estimate
//! evolves under the drive alone, in closed form.

use crate::noise::{GridSampler, NoiseTrajectory};
use crate::qubit::{rotation_unchecked, Operator2, PureState, Vec3};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("propagation interval must be positive, got {0}")]
    NonPositiveInterval(f64),
    #[error("rabi frequency must be positive, got {0}")]
    NonPositiveRabiFrequency(f64),
    #[error("substeps per period must be at least 1")]
    NoSubsteps,
}

const X_AXIS: Vec3 = [1.0, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    pub rabi_frequency: f64,
}

impl DriveConfig {
    pub fn new(rabi_frequency: f64) -> Result<Self, DynamicsError> {
        if !(rabi_frequency > 0.0 && rabi_frequency.is_finite()) {
            return Err(DynamicsError::NonPositiveRabiFrequency(rabi_frequency));
        }
        Ok(Self { rabi_frequency })
    }

    /// `T_R = 2π/Ω_R`.
    pub fn rabi_period(&self) -> f64 {
        TAU / self.rabi_frequency
    }
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self { rabi_frequency: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepControl {
    pub substeps_per_period: usize,
}

impl StepControl {
    pub const DEFAULT_SUBSTEPS: usize = 32;

    pub fn new(substeps_per_period: usize) -> Result<Self, DynamicsError> {
        if substeps_per_period == 0 {
            return Err(DynamicsError::NoSubsteps);
        }
        Ok(Self { substeps_per_period })
    }
}

impl Default for StepControl {
    fn default() -> Self {
        Self { substeps_per_period: Self::DEFAULT_SUBSTEPS }
    }
}

/// Exact propagator `exp(−i dt (h·σ))` for a constant field vector `h`.
pub fn constant_field_step(field: Vec3, dt: f64) -> Operator2 {
    let strength = crate::qubit::norm3(field);
    if strength == 0.0 {
        return Operator2::identity();
    }
    let axis = field.map(|c| c / strength);
    rotation_unchecked(axis, 2.0 * strength * dt)
}

/// Field vector `h` with `H = h·σ`.
fn field(drive: &DriveConfig, alpha: f64, beta: f64) -> Vec3 {
    [0.5 * drive.rabi_frequency + alpha, 0.0, beta]
}

/// Reusable propagator over intervals of fixed length `tau`, starting at
/// arbitrary times. Holds per-trajectory recurrence tables so a run does
/// not recompute them every period.
#[derive(Debug, Clone)]
pub struct NoisyPropagator<'a> {
    drive: DriveConfig,
    tau: f64,
    n_sub: usize,
    alpha: GridSampler<'a>,
    beta: GridSampler<'a>,
    noiseless: bool,
}

impl<'a> NoisyPropagator<'a> {
    pub fn new(
        drive: DriveConfig,
        tau: f64,
        alpha: &'a NoiseTrajectory,
        beta: &'a NoiseTrajectory,
        ctrl: StepControl,
    ) -> Result<Self, DynamicsError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(DynamicsError::NonPositiveInterval(tau));
        }
        let n_sub = ctrl.substeps_per_period.max(1);
        let dt = tau / n_sub as f64;
        Ok(Self {
            drive,
            tau,
            n_sub,
            alpha: GridSampler::new(alpha, dt),
            beta: GridSampler::new(beta, dt),
            noiseless: alpha.is_zero() && beta.is_zero(),
        })
    }

    /// Propagator for `[t0, t0 + tau]`.
    pub fn operator(&self, t0: f64) -> Operator2 {
        self.step_operators(t0).into_iter().fold(Operator2::identity(), |acc, u| u.mul(&acc))
    }

    /// The individual midpoint-frozen step propagators, in time order.
    pub fn step_operators(&self, t0: f64) -> Vec<Operator2> {
        if self.noiseless {
            return vec![rotation_unchecked(X_AXIS, self.drive.rabi_frequency * self.tau)];
        }
        let dt = self.alpha.dt();
        let mut alpha = vec![0.0; self.n_sub];
        let mut beta = vec![0.0; self.n_sub];
        self.alpha.fill(t0 + 0.5 * dt, &mut alpha);
        self.beta.fill(t0 + 0.5 * dt, &mut beta);
        alpha
            .iter()
            .zip(&beta)
            .map(|(&a, &b)| constant_field_step(field(&self.drive, a, b), dt))
            .collect()
    }

    pub fn advance(&self, state: &PureState, t0: f64) -> PureState {
        if self.noiseless {
            return propagate_noiseless(state, self.tau, &self.drive);
        }
        let dt = self.alpha.dt();
        let mut alpha = [0.0; 64];
        let mut beta = [0.0; 64];
        let mut current = *state;
        let mut done = 0;
        // Chunk the substeps so the sample buffers stay on the stack.
        while done < self.n_sub {
            let len = (self.n_sub - done).min(64);
            let start = t0 + (done as f64 + 0.5) * dt;
            self.alpha.fill(start, &mut alpha[..len]);
            self.beta.fill(start, &mut beta[..len]);
            for k in 0..len {
                let u = constant_field_step(field(&self.drive, alpha[k], beta[k]), dt);
                current = u.apply(&current);
            }
            done += len;
        }
        current.renormalize()
    }
}

/// Evolves `state` over `[t0, t0 + tau]` under drive plus noise.
pub fn propagate_noisy(
    state: &PureState,
    t0: f64,
    tau: f64,
    drive: &DriveConfig,
    alpha: &NoiseTrajectory,
    beta: &NoiseTrajectory,
    ctrl: StepControl,
) -> Result<PureState, DynamicsError> {
    Ok(NoisyPropagator::new(*drive, tau, alpha, beta, ctrl)?.advance(state, t0))
}

/// Exact drive-only evolution: rotation about x by `Ω_R·tau`.
pub fn propagate_noiseless(state: &PureState, tau: f64, drive: &DriveConfig) -> PureState {
    rotation_unchecked(X_AXIS, drive.rabi_frequency * tau).apply(state).renormalize()
}
