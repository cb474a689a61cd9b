//! Classical noise fields as random-phase spectral sums.
//!
//! A trajectory is `ξ(t) = s · Σᵢ wᵢ cos(ωᵢ t + φᵢ)` with `wᵢ = √(P(ωᵢ)Δω)` on a
//! linear frequency grid, independent uniform phases, and a scale `s` chosen
//! so that the RMS over the synthesis window hits the requested value
//! exactly.

use rand::Rng;
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("invalid noise spec: {0}")]
    InvalidSpec(String),
    #[error("window must be positive and finite, got {0}")]
    DegenerateWindow(f64),
    #[error("lag {lag} must lie in [0, window = {window})")]
    LagOutOfRange { lag: f64, window: f64 },
    #[error("{samples} samples over {window} is fewer than 2 per period of omega = {omega_max}")]
    InsufficientSamples { samples: usize, window: f64, omega_max: f64 },
    #[error("malformed trajectory table: {0}")]
    Table(String),
}

/// Shape of the power spectral density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spectrum {
    /// `P(ω) = A/ω`
    OneOverF,
    /// `P(ω) = A`
    White,
}

impl Spectrum {
    pub fn power(self, amplitude: f64, omega: f64) -> f64 {
        match self {
            Spectrum::OneOverF => amplitude / omega,
            Spectrum::White => amplitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub spectrum: Spectrum,
    /// Overall spectral amplitude; cancels out after RMS normalization.
    pub amplitude: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_components: usize,
    pub target_rms: f64,
}

impl NoiseSpec {
    /// 1/f noise between the default cutoffs 0.01 and 10 with 200 components.
    pub fn one_over_f(target_rms: f64) -> Self {
        Self {
            spectrum: Spectrum::OneOverF,
            amplitude: 1.0,
            omega_min: 0.01,
            omega_max: 10.0,
            n_components: 200,
            target_rms,
        }
    }

    pub fn white(target_rms: f64) -> Self {
        Self { spectrum: Spectrum::White, ..Self::one_over_f(target_rms) }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let bad = |msg: String| Err(NoiseError::InvalidSpec(msg));
        if !(self.omega_min > 0.0 && self.omega_min < self.omega_max && self.omega_max.is_finite()) {
            return bad(format!(
                "need 0 < omega_min < omega_max, got [{}, {}]",
                self.omega_min, self.omega_max
            ));
        }
        if self.n_components == 0 {
            return bad("n_components must be at least 1".into());
        }
        if !(self.target_rms >= 0.0 && self.target_rms.is_finite()) {
            return bad(format!("target_rms must be >= 0, got {}", self.target_rms));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return bad(format!("amplitude must be > 0, got {}", self.amplitude));
        }
        Ok(())
    }

    /// Spacing of the linear frequency grid.
    pub fn grid_spacing(&self) -> f64 {
        if self.n_components == 1 {
            self.omega_max - self.omega_min
        } else {
            (self.omega_max - self.omega_min) / (self.n_components - 1) as f64
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let d = self.grid_spacing();
        (0..self.n_components).map(|i| self.omega_min + d * i as f64).collect()
    }

    /// Frequency band over which a band-averaged periodogram of this line
    /// spectrum is meaningful: bands must span several grid lines.
    pub fn resolvable_band(&self) -> (f64, f64) {
        let d = self.grid_spacing();
        let lo = self.omega_min.max(10.0 * d);
        let hi = self.omega_max + 0.5 * d;
        if lo * 4.0 < hi {
            (lo, hi)
        } else {
            (self.omega_min, hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseComponent {
    pub omega: f64,
    pub weight: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrajectory {
    pub components: Vec<NoiseComponent>,
    pub scale: f64,
    /// Duration over which the RMS was normalized.
    pub window: f64,
}

/// Draws phases and normalizes the RMS over `[0, window]`.
///
/// Phases are consumed from `rng` even when `target_rms` is zero, so the
/// random stream advances identically for every amplitude.
pub fn synthesize<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    window: f64,
    rng: &mut R,
) -> Result<NoiseTrajectory, NoiseError> {
    spec.validate()?;
    if !(window > 0.0 && window.is_finite()) {
        return Err(NoiseError::DegenerateWindow(window));
    }
    let d_omega = spec.grid_spacing();
    let components: Vec<NoiseComponent> = spec
        .grid()
        .into_iter()
        .map(|omega| NoiseComponent {
            omega,
            weight: (spec.spectrum.power(spec.amplitude, omega) * d_omega).sqrt(),
            phase: rng.random_range(0.0..TAU),
        })
        .collect();
    let mut traj = NoiseTrajectory { components, scale: 1.0, window };
    if spec.target_rms == 0.0 {
        traj.scale = 0.0;
        return Ok(traj);
    }
    let raw_rms = traj.mean_square(window).sqrt();
    traj.scale = spec.target_rms / raw_rms;
    Ok(traj)
}

/// `(1/T)∫₀ᵀ cos(Ωt + φ) dt`, stable for small `ΩT`.
fn mean_cos(omega: f64, phase: f64, window: f64) -> f64 {
    let half = 0.5 * omega * window;
    let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
    (phase + half).cos() * sinc
}

impl NoiseTrajectory {
    /// The identically-zero field.
    pub fn zero(window: f64) -> Self {
        Self { components: Vec::new(), scale: 0.0, window }
    }

    pub fn is_zero(&self) -> bool {
        self.scale == 0.0 || self.components.is_empty()
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.scale
            * self
                .components
                .iter()
                .map(|c| c.weight * (c.omega * t + c.phase).cos())
                .sum::<f64>()
    }

    pub fn max_omega(&self) -> Option<f64> {
        self.components.iter().map(|c| c.omega).reduce(f64::max)
    }

    /// Exact time average of `ξ(t)²` over `[0, window]`, from the closed-form
    /// integral of each product of cosines.
    pub fn mean_square(&self, window: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let mut total = 0.0;
        for (i, a) in self.components.iter().enumerate() {
            total += 0.5 * a.weight * a.weight * (1.0 + mean_cos(2.0 * a.omega, 2.0 * a.phase, window));
            for b in &self.components[i + 1..] {
                let ww = a.weight * b.weight;
                total += ww
                    * (mean_cos(a.omega - b.omega, a.phase - b.phase, window)
                        + mean_cos(a.omega + b.omega, a.phase + b.phase, window));
            }
        }
        self.scale * self.scale * total.max(0.0)
    }

    pub fn rms(&self, window: f64) -> f64 {
        self.mean_square(window).sqrt()
    }

    /// Serializes the component list as a CSV-like text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# scale {:.16e}", self.scale).unwrap();
        writeln!(out, "# window {:.16e}", self.window).unwrap();
        writeln!(out, "omega,weight,phase").unwrap();
        for c in &self.components {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", c.omega, c.weight, c.phase).unwrap();
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self, NoiseError> {
        let err = |m: &str| NoiseError::Table(m.to_string());
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| NoiseError::Table(e.to_string()));
        let mut scale = None;
        let mut window = None;
        let mut header_seen = false;
        let mut components = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(meta) = line.strip_prefix('#') {
                let mut parts = meta.split_whitespace();
                match (parts.next(), parts.next()) {
                    (Some("scale"), Some(v)) => scale = Some(parse(v)?),
                    (Some("window"), Some(v)) => window = Some(parse(v)?),
                    _ => {}
                }
            } else if !header_seen {
                if line != "omega,weight,phase" {
                    return Err(err("missing omega,weight,phase header"));
                }
                header_seen = true;
            } else {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != 3 {
                    return Err(err("expected three columns"));
                }
                components.push(NoiseComponent {
                    omega: parse(fields[0])?,
                    weight: parse(fields[1])?,
                    phase: parse(fields[2])?,
                });
            }
        }
        Ok(Self {
            components,
            scale: scale.ok_or_else(|| err("missing scale"))?,
            window: window.ok_or_else(|| err("missing window"))?,
        })
    }
}

/// Evaluates a trajectory on a uniform grid, anchoring every component with
/// one exact `sin_cos` per fill and advancing by the angle-addition
/// recurrence in between.
#[derive(Debug, Clone)]
pub struct GridSampler<'a> {
    traj: &'a NoiseTrajectory,
    step: Vec<(f64, f64)>,
    dt: f64,
}

impl<'a> GridSampler<'a> {
    pub fn new(traj: &'a NoiseTrajectory, dt: f64) -> Self {
        let step = if traj.is_zero() {
            Vec::new()
        } else {
            traj.components.iter().map(|c| (c.omega * dt).sin_cos()).collect()
        };
        Self { traj, step, dt }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Writes `ξ(t_first + k·dt)` into `out[k]`.
    pub fn fill(&self, t_first: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if self.traj.is_zero() {
            return;
        }
        for (c, &(step_sin, step_cos)) in self.traj.components.iter().zip(&self.step) {
            let (mut sin, mut cos) = (c.omega * t_first + c.phase).sin_cos();
            for v in out.iter_mut() {
                *v += c.weight * cos;
                let next_cos = cos * step_cos - sin * step_sin;
                sin = sin * step_cos + cos * step_sin;
                cos = next_cos;
            }
        }
        let scale = self.traj.scale;
        out.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Discretized autocorrelation: mean of `ξ(t)ξ(t+lag)` over
/// `t ∈ [0, window − lag]` at `samples` midpoints.
pub fn autocorrelation(
    traj: &NoiseTrajectory,
    lag: f64,
    window: f64,
    samples: usize,
) -> Result<f64, NoiseError> {
    if !(lag >= 0.0 && lag < window) {
        return Err(NoiseError::LagOutOfRange { lag, window });
    }
    if samples == 0 {
        return Err(NoiseError::InsufficientSamples { samples, window, omega_max: 0.0 });
    }
    let span = window - lag;
    let dt = span / samples as f64;
    let sum: f64 = (0..samples)
        .map(|k| {
            let t = (k as f64 + 0.5) * dt;
            traj.evaluate(t) * traj.evaluate(t + lag)
        })
        .sum();
    Ok(sum / samples as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumBin {
    pub omega: f64,
    pub power: f64,
}

/// Hann-windowed periodogram of `ξ` sampled at `samples` points over
/// `[0, window)`, at the positive Fourier frequencies `2πk/window`.
pub fn empirical_spectrum(
    traj: &NoiseTrajectory,
    window: f64,
    samples: usize,
) -> Result<Vec<SpectrumBin>, NoiseError> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(NoiseError::DegenerateWindow(window));
    }
    let omega_max = if traj.is_zero() { 0.0 } else { traj.max_omega().unwrap_or(0.0) };
    let dt = window / samples.max(1) as f64;
    if samples < 4 || dt * omega_max > PI {
        return Err(NoiseError::InsufficientSamples { samples, window, omega_max });
    }
    let mut signal = vec![0.0; samples];
    GridSampler::new(traj, dt).fill(0.0, &mut signal);
    let taper: Vec<f64> = (0..samples)
        .map(|k| 0.5 - 0.5 * (TAU * k as f64 / samples as f64).cos())
        .collect();
    let taper_power: f64 = taper.iter().map(|w| w * w).sum();
    let mut buffer: Vec<Complex64> =
        signal.iter().zip(&taper).map(|(x, w)| Complex64::new(x * w, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(samples).process(&mut buffer);
    let norm = dt / taper_power;
    Ok((1..samples / 2)
        .map(|k| SpectrumBin {
            omega: TAU * k as f64 / window,
            power: buffer[k].norm_sqr() * norm,
        })
        .collect())
}

/// Pointwise mean of periodograms sharing the same frequency grid.
pub fn average_spectra(spectra: &[Vec<SpectrumBin>]) -> Vec<SpectrumBin> {
    let Some(first) = spectra.first() else { return Vec::new() };
    let n = spectra.len() as f64;
    first
        .iter()
        .enumerate()
        .map(|(k, bin)| SpectrumBin {
            omega: bin.omega,
            power: spectra.iter().map(|s| s[k].power).sum::<f64>() / n,
        })
        .collect()
}

/// Mean power in `n_bands` logarithmically spaced bands over `[lo, hi]`,
/// reported at each band's geometric center. Empty bands are dropped.
pub fn band_average(spectrum: &[SpectrumBin], lo: f64, hi: f64, n_bands: usize) -> Vec<SpectrumBin> {
    let ratio = (hi / lo).powf(1.0 / n_bands as f64);
    (0..n_bands)
        .filter_map(|b| {
            let a = lo * ratio.powi(b as i32);
            let z = a * ratio;
            let (count, sum) = spectrum
                .iter()
                .filter(|bin| bin.omega >= a && bin.omega < z)
                .fold((0usize, 0.0), |(n, s), bin| (n + 1, s + bin.power));
            (count > 0).then(|| SpectrumBin { omega: (a * z).sqrt(), power: sum / count as f64 })
        })
        .collect()
}

/// Least-squares slope of `ln P` against `ln ω`. `None` with fewer than two
/// positive-power points.
pub fn loglog_slope(points: &[SpectrumBin]) -> Option<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.power > 0.0 && p.omega > 0.0)
        .map(|p| (p.omega.ln(), p.power.ln()))
        .collect();
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Smallest power of two giving at least four samples per period of the
/// highest frequency over `window`, and no fewer than `min_samples`.
pub fn periodogram_samples(window: f64, omega_max: f64, min_samples: usize) -> usize {
    let needed = (4.0 * window * omega_max / TAU).ceil() as usize;
    needed.max(min_samples).next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Midpoint-rule RMS, independent of the closed form.
    fn sampled_rms(traj: &NoiseTrajectory, window: f64, samples: usize) -> f64 {
        let dt = window / samples as f64;
        let ms: f64 = (0..samples)
            .map(|k| traj.evaluate((k as f64 + 0.5) * dt).powi(2))
            .sum::<f64>()
            / samples as f64;
        ms.sqrt()
    }

    #[test]
    fn spec_validation() {
        let mut s = NoiseSpec::one_over_f(0.05);
        assert!(s.validate().is_ok());
        s.omega_min = 0.0;
        assert!(s.validate().is_err());
        let mut s = NoiseSpec::one_over_f(0.05);
        s.n_components = 0;
        assert!(s.validate().is_err());
        let mut s = NoiseSpec::one_over_f(-1.0);
        assert!(s.validate().is_err());
        s.target_rms = 0.1;
        s.omega_max = 0.001;
        assert!(s.validate().is_err());
        assert!(matches!(
            synthesize(&NoiseSpec::one_over_f(0.1), 0.0, &mut rng(0)),
            Err(NoiseError::DegenerateWindow(_))
        ));
    }

    #[test]
    fn grid_is_linear_and_inclusive() {
        let g = NoiseSpec::one_over_f(1.0).grid();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.01);
        assert!((g[199] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rms_gives_zero_field() {
        let traj = synthesize(&NoiseSpec::one_over_f(0.0), 100.0, &mut rng(1)).unwrap();
        assert!(traj.is_zero());
        for t in [0.0, 1.0, 37.5, 1e4] {
            assert_eq!(traj.evaluate(t), 0.0);
        }
        assert_eq!(NoiseTrajectory::zero(5.0).evaluate(3.0), 0.0);
    }

    #[test]
    fn single_tone_amplitude() {
        let mut spec = NoiseSpec::white(0.3);
        spec.n_components = 1;
        spec.omega_min = 2.0;
        // window spanning many periods: amplitude ≈ rms·√2
        let window = 2000.0;
        let traj = synthesize(&spec, window, &mut rng(2)).unwrap();
        let amp = traj.scale * traj.components[0].weight;
        assert!((amp - 0.3 * 2f64.sqrt()).abs() < 1e-3 * 0.3, "{amp}");
        let c = traj.components[0];
        assert_eq!(traj.evaluate(0.0), traj.scale * c.weight * c.phase.cos());
    }

    #[test]
    fn single_component_at_phase_zero() {
        let traj = NoiseTrajectory {
            components: vec![NoiseComponent { omega: 1.3, weight: 0.7, phase: 0.0 }],
            scale: 2.0,
            window: 1.0,
        };
        assert_eq!(traj.evaluate(0.0), 1.4);
    }

    #[test]
    fn closed_form_mean_square_matches_quadrature() {
        for (seed, window) in [(3u64, 20.0), (4, 188.5), (5, 1000.0)] {
            let traj = synthesize(&NoiseSpec::one_over_f(1.0), window, &mut rng(seed)).unwrap();
            let closed = traj.rms(window);
            let sampled = sampled_rms(&traj, window, 100_000);
            assert!((closed - sampled).abs() < 1e-4 * closed, "{closed} vs {sampled}");
        }
    }

    #[test]
    fn default_band_rms_normalization() {
        let window = 30.0 * TAU;
        for seed in 0..5 {
            let traj = synthesize(&NoiseSpec::one_over_f(0.05), window, &mut rng(seed)).unwrap();
            let rms = sampled_rms(&traj, window, 20_000);
            assert!((rms - 0.05).abs() < 5e-4, "{rms}");
        }
    }

    #[test]
    fn grid_sampler_matches_direct_evaluation() {
        let traj = synthesize(&NoiseSpec::one_over_f(0.05), 300.0, &mut rng(6)).unwrap();
        let dt = TAU / 320.0;
        let sampler = GridSampler::new(&traj, dt);
        let mut out = vec![0.0; 32];
        for t0 in [0.0, 0.3, 17.0, 250.0] {
            sampler.fill(t0, &mut out);
            for (k, v) in out.iter().enumerate() {
                let direct = traj.evaluate(t0 + k as f64 * dt);
                assert!((v - direct).abs() < 1e-12, "{v} vs {direct}");
            }
        }
    }

    #[test]
    fn scaling_is_linear() {
        let a = synthesize(&NoiseSpec::one_over_f(0.05), 100.0, &mut rng(8)).unwrap();
        let b = synthesize(&NoiseSpec::one_over_f(0.1), 100.0, &mut rng(8)).unwrap();
        assert_eq!(a.components, b.components);
        for t in [0.0, 1.5, 42.0, 99.0] {
            assert_eq!(2.0 * a.evaluate(t), b.evaluate(t));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = synthesize(&NoiseSpec::one_over_f(0.05), 100.0, &mut rng(9)).unwrap();
        let b = synthesize(&NoiseSpec::one_over_f(0.05), 100.0, &mut rng(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.components.iter().all(|c| (0.0..TAU).contains(&c.phase)));
    }

    #[test]
    fn autocorrelation_examples() {
        let window = 400.0;
        let traj = synthesize(&NoiseSpec::one_over_f(0.05), window, &mut rng(10)).unwrap();
        let c0 = autocorrelation(&traj, 0.0, window, 20_000).unwrap();
        assert!((c0 - 0.05f64.powi(2)).abs() < 1e-3 * 0.0025, "{c0}");
        assert!(matches!(
            autocorrelation(&traj, window, window, 100),
            Err(NoiseError::LagOutOfRange { .. })
        ));
        let zero = NoiseTrajectory::zero(window);
        assert_eq!(autocorrelation(&zero, 3.0, window, 100).unwrap(), 0.0);
    }

    #[test]
    fn single_tone_autocorrelation() {
        let (amp, omega) = (0.8, 1.7);
        let traj = NoiseTrajectory {
            components: vec![NoiseComponent { omega, weight: amp, phase: 0.4 }],
            scale: 1.0,
            window: 2000.0,
        };
        for lag in [0.0, 0.5, 1.0, 3.3] {
            let c = autocorrelation(&traj, lag, 2000.0, 200_000).unwrap();
            let expected = amp * amp / 2.0 * (omega * lag).cos();
            assert!((c - expected).abs() < 2e-3, "lag {lag}: {c} vs {expected}");
        }
    }

    #[test]
    fn periodogram_of_zero_is_zero() {
        let zero = NoiseTrajectory::zero(100.0);
        let spec = empirical_spectrum(&zero, 100.0, 1024).unwrap();
        assert!(spec.iter().all(|b| b.power == 0.0));
    }

    #[test]
    fn periodogram_rejects_undersampling() {
        let traj = synthesize(&NoiseSpec::one_over_f(0.05), 100.0, &mut rng(12)).unwrap();
        // omega_max = 10 needs dt <= π/10 → more than 318 samples over 100
        assert!(matches!(
            empirical_spectrum(&traj, 100.0, 256),
            Err(NoiseError::InsufficientSamples { .. })
        ));
        assert!(empirical_spectrum(&traj, 100.0, 512).is_ok());
    }

    #[test]
    fn periodogram_peak_at_tone() {
        let traj = NoiseTrajectory {
            components: vec![NoiseComponent { omega: 2.0, weight: 1.0, phase: 0.0 }],
            scale: 1.0,
            window: 1.0,
        };
        let window = 100.0 * TAU;
        let spec = empirical_spectrum(&traj, window, 4096).unwrap();
        let peak = spec.iter().max_by(|a, b| a.power.total_cmp(&b.power)).unwrap();
        assert!((peak.omega - 2.0).abs() < 1e-9);
    }

    #[test]
    fn white_spectrum_is_flat() {
        let spec = NoiseSpec::white(0.05);
        let window = 3000.0;
        let samples = periodogram_samples(window, spec.omega_max, 4096);
        let spectra: Vec<_> = (0..20)
            .map(|s| {
                let traj = synthesize(&spec, window, &mut rng(100 + s)).unwrap();
                empirical_spectrum(&traj, window, samples).unwrap()
            })
            .collect();
        let (lo, hi) = spec.resolvable_band();
        let bands = band_average(&average_spectra(&spectra), lo, hi, 10);
        let slope = loglog_slope(&bands).unwrap();
        assert!(slope.abs() < 0.2, "{slope}");
    }

    #[test]
    fn table_round_trip() {
        let traj = synthesize(&NoiseSpec::one_over_f(0.05), 77.0, &mut rng(13)).unwrap();
        let back = NoiseTrajectory::from_table(&traj.to_table()).unwrap();
        assert_eq!(traj, back);
        assert!(NoiseTrajectory::from_table("omega,weight,phase\n1,2\n").is_err());
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let pts: Vec<_> = (1..20)
            .map(|k| {
                let w = k as f64 * 0.5;
                SpectrumBin { omega: w, power: 3.0 * w.powf(-1.0) }
            })
            .collect();
        assert!((loglog_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
        assert!(loglog_slope(&pts[..1]).is_none());
    }
}
