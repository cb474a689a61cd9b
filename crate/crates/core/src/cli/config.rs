//! TOML experiment configuration.
//!
//! Every section and key is optional; missing values take the defaults
//! below. Unknown keys are rejected. Physical quantities use `Ω_R = 1`
//! frequency units; times use `run.time_units`.

use crate::dynamics::{DriveConfig, StepControl};
use crate::experiment::{EnsembleConfig, SweepConfig};
use crate::monitor::RunConfig;
use crate::noise::{NoiseSpec, Spectrum};
use crate::povm::MeasurementConfig;
use crate::qubit::{PureState, Vec3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfigFile {
    pub drive: DriveSection,
    pub measurement: MeasurementSection,
    pub noise: NoiseSections,
    pub run: RunSection,
    pub ensemble: EnsembleSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveSection {
    pub rabi_frequency: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        Self { rabi_frequency: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementSection {
    /// Bloch direction of the measured observable; normalized if needed.
    pub direction: Vec3,
    pub delta_p: f64,
    /// Time between measurements, in `run.time_units`.
    pub period: f64,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self { direction: [0.0, 0.0, 1.0], delta_p: 0.2, period: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSections {
    pub alpha: NoiseSection,
    pub beta: NoiseSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub spectrum: Spectrum,
    pub amplitude: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_components: usize,
    /// RMS deviation in units of `Ω_R`.
    pub rms: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let spec = NoiseSpec::one_over_f(0.0);
        Self {
            spectrum: spec.spectrum,
            amplitude: spec.amplitude,
            omega_min: spec.omega_min,
            omega_max: spec.omega_max,
            n_components: spec.n_components,
            rms: 0.0,
        }
    }
}

impl NoiseSection {
    pub fn spec(&self) -> NoiseSpec {
        NoiseSpec {
            spectrum: self.spectrum,
            amplitude: self.amplitude,
            omega_min: self.omega_min,
            omega_max: self.omega_max,
            n_components: self.n_components,
            target_rms: self.rms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnits {
    /// Multiples of `T_R = 2π/Ω_R`.
    RabiPeriods,
    /// Multiples of `1/Ω_R`.
    InverseRabiFrequency,
}

impl TimeUnits {
    pub fn to_internal(self, value: f64, drive: &DriveConfig) -> f64 {
        match self {
            TimeUnits::RabiPeriods => value * drive.rabi_period(),
            TimeUnits::InverseRabiFrequency => value / drive.rabi_frequency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub time_units: TimeUnits,
    pub n_periods: usize,
    pub substeps_per_period: usize,
    /// Bloch vector of the true initial state.
    pub initial_state: Vec3,
    /// Bloch vector of the initial estimate.
    pub initial_estimate: Vec3,
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            time_units: TimeUnits::RabiPeriods,
            n_periods: 300,
            substeps_per_period: StepControl::DEFAULT_SUBSTEPS,
            initial_state: [0.0, 0.0, 1.0],
            initial_estimate: [0.0, 0.0, -1.0],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub n_runs: usize,
    /// Measurement-free ensemble.
    pub baseline: bool,
    /// Span, in `run.time_units`, at which baseline decay is evaluated;
    /// the full run when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_span: Option<f64>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { n_runs: 1000, baseline: false, decay_span: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub delta_p: Vec<f64>,
    /// Measurement periods in `run.time_units`: one value shared by every
    /// `delta_p`, or one per entry.
    pub period: Vec<f64>,
    /// `[Δβ, Δα]` pairs.
    pub noise_levels: Vec<[f64; 2]>,
    pub n_runs: usize,
    pub min_span_collapse_times: f64,
    pub max_periods: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            delta_p: vec![0.4, 0.28, 0.2, 0.14, 0.1, 0.07, 0.04, 0.02],
            period: vec![0.1],
            noise_levels: vec![[0.0, 0.0], [0.05, 0.005], [0.1, 0.01]],
            n_runs: 200,
            min_span_collapse_times: 2.0,
            max_periods: 3000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

impl ExperimentConfigFile {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().trim().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn drive(&self) -> Result<DriveConfig, ConfigError> {
        DriveConfig::new(self.drive.rabi_frequency).map_err(invalid)
    }

    fn time(&self, value: f64) -> Result<f64, ConfigError> {
        Ok(self.run.time_units.to_internal(value, &self.drive()?))
    }

    pub fn measurement(&self) -> Result<MeasurementConfig, ConfigError> {
        let m = &self.measurement;
        MeasurementConfig::new(m.direction, m.delta_p, self.time(m.period)?).map_err(invalid)
    }

    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        let r = &self.run;
        let config = RunConfig {
            drive: self.drive()?,
            measurement: self.measurement()?,
            noise_alpha: self.noise.alpha.spec(),
            noise_beta: self.noise.beta.spec(),
            initial_state: PureState::from_bloch(r.initial_state).map_err(invalid)?,
            initial_estimate: PureState::from_bloch(r.initial_estimate).map_err(invalid)?,
            n_periods: r.n_periods,
            step_control: StepControl::new(r.substeps_per_period).map_err(invalid)?,
            seed: r.seed,
        };
        config.validate().map_err(invalid)?;
        Ok(config)
    }

    pub fn ensemble_config(&self) -> Result<EnsembleConfig, ConfigError> {
        if self.ensemble.n_runs == 0 {
            return Err(invalid("ensemble.n_runs must be at least 1"));
        }
        Ok(EnsembleConfig {
            template: self.run_config()?,
            n_runs: self.ensemble.n_runs,
            master_seed: self.run.seed,
        })
    }

    pub fn decay_span(&self) -> Result<Option<f64>, ConfigError> {
        self.ensemble.decay_span.map(|s| self.time(s)).transpose()
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, ConfigError> {
        let s = &self.sweep;
        if s.delta_p.is_empty() || s.noise_levels.is_empty() {
            return Err(invalid("sweep.delta_p and sweep.noise_levels must be nonempty"));
        }
        if s.n_runs == 0 {
            return Err(invalid("sweep.n_runs must be at least 1"));
        }
        let periods = match s.period.len() {
            1 => vec![s.period[0]; s.delta_p.len()],
            n if n == s.delta_p.len() => s.period.clone(),
            n => {
                return Err(invalid(format!(
                    "sweep.period has {n} entries; expected 1 or {}",
                    s.delta_p.len()
                )))
            }
        };
        let strengths = s
            .delta_p
            .iter()
            .zip(&periods)
            .map(|(&dp, &p)| {
                let tau = self.time(p)?;
                MeasurementConfig::new(self.measurement.direction, dp, tau).map_err(invalid)?;
                Ok((dp, tau))
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        for level in &s.noise_levels {
            if level.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(invalid(format!("noise level {level:?} must be nonnegative")));
            }
        }
        Ok(SweepConfig {
            template: self.run_config()?,
            strengths,
            noise_levels: s.noise_levels.iter().map(|l| (l[0], l[1])).collect(),
            n_runs: s.n_runs,
            master_seed: self.run.seed,
            min_span_collapse_times: s.min_span_collapse_times,
            max_periods: s.max_periods,
        })
    }

    /// Rabi period in internal time units.
    pub fn rabi_period(&self) -> f64 {
        TAU / self.drive.rabi_frequency
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ExperimentConfigFile::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfigFile::default());
        let run = cfg.run_config().unwrap();
        assert!((run.period() - TAU / 10.0).abs() < 1e-15);
        assert_eq!(run.n_periods, 300);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfigFile::from_toml("[measurement]\nsharpness = 0.3\n").unwrap_err();
        assert!(err.to_string().contains("sharpness"), "{err}");
        let err = ExperimentConfigFile::from_toml("[bogus]\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn time_units() {
        let cfg = ExperimentConfigFile::from_toml(
            "[run]\ntime_units = \"inverse_rabi_frequency\"\n[measurement]\nperiod = 0.5\n[drive]\nrabi_frequency = 2.0\n",
        )
        .unwrap();
        assert!((cfg.run_config().unwrap().period() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn resolved_config_round_trips() {
        let text = "[measurement]\ndirection = [0.43, 0.0, 0.9]\n[noise.beta]\nrms = 0.05\n[noise.alpha]\nrms = 0.005\n";
        let cfg = ExperimentConfigFile::from_toml(text).unwrap();
        let back = ExperimentConfigFile::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let cfg = ExperimentConfigFile::from_toml("[measurement]\ndelta_p = 1.5\n").unwrap();
        assert!(matches!(cfg.run_config(), Err(ConfigError::Invalid(_))));
        let cfg = ExperimentConfigFile::from_toml("[sweep]\ndelta_p = [0.1, 0.2]\nperiod = [0.1, 0.2, 0.3]\n").unwrap();
        assert!(cfg.sweep_config().is_err());
    }
}
