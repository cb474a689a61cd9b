//! Unsharp two-outcome measurement along a Bloch direction.
//!
//! With projectors `P± = (𝟙 ± r̂·σ̂)/2` and `p₀ = (1 − Δp)/2` the Kraus pair is
//!
//! ```text
//! M₀ = √p₀ P₊ + √(1−p₀) P₋
//! M₁ = √(1−p₀) P₊ + √p₀ P₋
//! ```
//!
//! which satisfies `M₀†M₀ + M₁†M₁ = 𝟙` for every `Δp ∈ [0, 1]`.

use crate::qubit::{norm3, Operator2, PureState, Vec3};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

/// Outcomes whose probability falls below this are treated as impossible.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PovmError {
    #[error("measurement sharpness delta_p = {0} outside [0, 1]")]
    SharpnessOutOfRange(f64),
    #[error("measurement period must be positive, got {0}")]
    NonPositivePeriod(f64),
    #[error("measurement direction must be a nonzero finite vector, got {0:?}")]
    DegenerateDirection(Vec3),
    #[error("invalid outcome index {0} (expected 0 or 1)")]
    InvalidOutcome(usize),
    #[error("outcome {outcome} has probability {probability:e}; branch is impossible")]
    ImpossibleOutcome { outcome: usize, probability: f64 },
}

/// Result of one measurement event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    pub fn from_index(index: usize) -> Result<Self, PovmError> {
        match index {
            0 => Ok(Outcome::Zero),
            1 => Ok(Outcome::One),
            other => Err(PovmError::InvalidOutcome(other)),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Outcome::Zero => 0,
            Outcome::One => 1,
        }
    }
}

/// Direction, sharpness and period of the sequential measurement.
///
/// The direction is normalized on ingestion; the supplied vector is kept in
/// `raw_direction` so the adjustment can be reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    raw_direction: Vec3,
    direction: Vec3,
    delta_p: f64,
    period: f64,
}

impl MeasurementConfig {
    pub fn new(direction: Vec3, delta_p: f64, period: f64) -> Result<Self, PovmError> {
        if !(0.0..=1.0).contains(&delta_p) {
            return Err(PovmError::SharpnessOutOfRange(delta_p));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(PovmError::NonPositivePeriod(period));
        }
        let norm = norm3(direction);
        if norm == 0.0 || !norm.is_finite() {
            return Err(PovmError::DegenerateDirection(direction));
        }
        Ok(Self {
            raw_direction: direction,
            direction: direction.map(|c| c / norm),
            delta_p,
            period,
        })
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn raw_direction(&self) -> Vec3 {
        self.raw_direction
    }

    /// True when the supplied direction was not unit length and got rescaled.
    pub fn direction_was_normalized(&self) -> bool {
        (norm3(self.raw_direction) - 1.0).abs() > crate::qubit::UNIT_TOLERANCE
    }

    pub fn delta_p(&self) -> f64 {
        self.delta_p
    }

    pub fn p0(&self) -> f64 {
        (1.0 - self.delta_p) / 2.0
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// `τ_m = 2τ/Δp²`; infinite for `Δp = 0`.
    pub fn collapse_time(&self) -> f64 {
        2.0 * self.period / (self.delta_p * self.delta_p)
    }
}

/// The Kraus pair `(M₀, M₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausPair {
    pub m0: Operator2,
    pub m1: Operator2,
}

impl KrausPair {
    pub fn operator(&self, outcome: Outcome) -> &Operator2 {
        match outcome {
            Outcome::Zero => &self.m0,
            Outcome::One => &self.m1,
        }
    }

    /// `‖M₀†M₀ + M₁†M₁ − 𝟙‖_max`.
    pub fn completeness_error(&self) -> f64 {
        let sum = self.m0.dagger().mul(&self.m0).add(&self.m1.dagger().mul(&self.m1));
        sum.max_abs_diff(&Operator2::identity())
    }
}

pub fn build_kraus(config: &MeasurementConfig) -> KrausPair {
    kraus_from_p0(config.direction, config.p0())
}

fn kraus_from_p0(direction: Vec3, p0: f64) -> KrausPair {
    kraus_from_amplitudes(direction, p0.sqrt(), (1.0 - p0).sqrt())
}

/// `w P₊ + s P₋ = ((w+s)/2)𝟙 + ((w−s)/2) r̂·σ̂`; exchanging `w` and `s`
/// exchanges `M₀` and `M₁` exactly.
fn kraus_from_amplitudes(direction: Vec3, weak: f64, strong: f64) -> KrausPair {
    let r_sigma = Operator2::pauli_combination(direction);
    let identity = Operator2::identity();
    let mix = |on_plus: f64, on_minus: f64| {
        identity
            .scale(Complex64::new(0.5 * (on_plus + on_minus), 0.0))
            .add(&r_sigma.scale(Complex64::new(0.5 * (on_plus - on_minus), 0.0)))
    };
    KrausPair { m0: mix(weak, strong), m1: mix(strong, weak) }
}

/// `p(n|ψ) = ⟨ψ|M_n†M_n|ψ⟩ = ‖M_n ψ‖²`.
pub fn outcome_probability(state: &PureState, kraus: &KrausPair, outcome: Outcome) -> f64 {
    kraus.operator(outcome).apply(state).norm_sqr()
}

/// Post-measurement state `M_n|ψ⟩ / √p(n|ψ)`.
pub fn apply_measurement(
    state: &PureState,
    kraus: &KrausPair,
    outcome: Outcome,
) -> Result<PureState, PovmError> {
    let unnormalized = kraus.operator(outcome).apply(state);
    let probability = unnormalized.norm_sqr();
    if !(probability > PROBABILITY_FLOOR) {
        return Err(PovmError::ImpossibleOutcome { outcome: outcome.index(), probability });
    }
    Ok(unnormalized.renormalize())
}

/// Draws one uniform variate `u` and returns outcome 0 iff `u < p(0|ψ)`.
pub fn sample_outcome<R: Rng + ?Sized>(state: &PureState, kraus: &KrausPair, rng: &mut R) -> Outcome {
    let u: f64 = rng.random();
    if u < outcome_probability(state, kraus, Outcome::Zero) {
        Outcome::Zero
    } else {
        Outcome::One
    }
}

/// Measurement strength `γ_m = Δp²/(2τ)`.
pub fn measurement_strength(config: &MeasurementConfig) -> f64 {
    config.delta_p * config.delta_p / (2.0 * config.period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{dot3, fidelity};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    const Z: Vec3 = [0.0, 0.0, 1.0];

    fn plus_x() -> PureState {
        PureState::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0))
            .unwrap()
    }

    fn diag(d0: f64, d1: f64) -> Operator2 {
        Operator2::new(
            Complex64::new(d0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(d1, 0.0),
        )
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            MeasurementConfig::new(Z, 1.5, 0.1),
            Err(PovmError::SharpnessOutOfRange(_))
        ));
        assert!(matches!(
            MeasurementConfig::new(Z, -0.1, 0.1),
            Err(PovmError::SharpnessOutOfRange(_))
        ));
        assert!(matches!(
            MeasurementConfig::new(Z, 0.2, 0.0),
            Err(PovmError::NonPositivePeriod(_))
        ));
        assert!(MeasurementConfig::new([0.0; 3], 0.2, 0.1).is_err());
    }

    #[test]
    fn tilted_direction_is_normalized_and_flagged() {
        let cfg = MeasurementConfig::new([0.43, 0.0, 0.9], 0.2, 0.1).unwrap();
        assert!(cfg.direction_was_normalized());
        assert!((norm3(cfg.direction()) - 1.0).abs() < 1e-15);
        assert_eq!(cfg.raw_direction(), [0.43, 0.0, 0.9]);
        assert!(!MeasurementConfig::new(Z, 0.2, 0.1).unwrap().direction_was_normalized());
    }

    #[test]
    fn projective_and_uninformative_limits() {
        // p₀ = 0: M₀ = P₋ and M₁ = P₊
        let k = build_kraus(&MeasurementConfig::new(Z, 1.0, 0.1).unwrap());
        assert!(k.m0.max_abs_diff(&diag(0.0, 1.0)) < 1e-15);
        assert!(k.m1.max_abs_diff(&diag(1.0, 0.0)) < 1e-15);
        let k = build_kraus(&MeasurementConfig::new([0.3, -0.2, 0.5], 0.0, 0.1).unwrap());
        assert!(k.m0.max_abs_diff(&diag(FRAC_1_SQRT_2, FRAC_1_SQRT_2)) < 1e-15);
        assert!(k.m1.max_abs_diff(&diag(FRAC_1_SQRT_2, FRAC_1_SQRT_2)) < 1e-15);
    }

    #[test]
    fn unsharp_z_kraus() {
        let k = build_kraus(&MeasurementConfig::new(Z, 0.2, 0.1).unwrap());
        assert!(k.m0.max_abs_diff(&diag(0.4f64.sqrt(), 0.6f64.sqrt())) < 1e-15);
        assert!(k.m1.max_abs_diff(&diag(0.6f64.sqrt(), 0.4f64.sqrt())) < 1e-15);
        assert!(k.m0.is_hermitian(1e-15) && k.m1.is_hermitian(1e-15));
    }

    #[test]
    fn swap_symmetry() {
        let r = [0.6, 0.0, 0.8];
        for p0 in [0.0f64, 0.1, 0.25, 0.4, 0.5] {
            let (w, s) = (p0.sqrt(), (1.0 - p0).sqrt());
            let k = kraus_from_amplitudes(r, w, s);
            let swapped = kraus_from_amplitudes(r, s, w);
            assert_eq!(k.m0, swapped.m1);
            assert_eq!(k.m1, swapped.m0);
        }
    }

    #[test]
    fn probability_examples() {
        let k = build_kraus(&MeasurementConfig::new(Z, 0.2, 0.1).unwrap());
        let p = outcome_probability(&PureState::up(), &k, Outcome::Zero);
        assert!((p - 0.4).abs() < 1e-15);
        for dp in [0.0, 0.2, 0.7, 1.0] {
            let k = build_kraus(&MeasurementConfig::new(Z, dp, 0.1).unwrap());
            assert!((outcome_probability(&plus_x(), &k, Outcome::Zero) - 0.5).abs() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = build_kraus(&MeasurementConfig::new([0.1, 0.7, -0.2], 0.0, 0.1).unwrap());
        for _ in 0..50 {
            let s = PureState::random(&mut rng);
            assert!((outcome_probability(&s, &k, Outcome::Zero) - 0.5).abs() < 1e-14);
            assert!((outcome_probability(&s, &k, Outcome::One) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_outcome_index() {
        assert_eq!(Outcome::from_index(2), Err(PovmError::InvalidOutcome(2)));
        assert_eq!(Outcome::from_index(1), Ok(Outcome::One));
    }

    #[test]
    fn measurement_examples() {
        for dp in [0.0, 0.2, 0.9, 1.0] {
            let k = build_kraus(&MeasurementConfig::new(Z, dp, 0.1).unwrap());
            let after = apply_measurement(&PureState::up(), &k, Outcome::One).unwrap();
            assert!((fidelity(&after, &PureState::up()).unwrap() - 1.0).abs() < 1e-15);
            if dp < 1.0 {
                let after = apply_measurement(&PureState::up(), &k, Outcome::Zero).unwrap();
                assert!((fidelity(&after, &PureState::up()).unwrap() - 1.0).abs() < 1e-15);
            }
        }
        let k = build_kraus(&MeasurementConfig::new(Z, 0.2, 0.1).unwrap());
        let after = apply_measurement(&plus_x(), &k, Outcome::Zero).unwrap();
        // amplitudes ∝ (√0.4, √0.6): ⟨σz⟩ = 0.4 − 0.6
        assert!((after.bloch().z + 0.2).abs() < 1e-14);
        assert!((after.norm_sqr() - 1.0).abs() < 1e-15);

        let k = build_kraus(&MeasurementConfig::new([0.2, 0.3, 0.1], 0.0, 0.1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = PureState::random(&mut rng);
        let after = apply_measurement(&s, &k, Outcome::One).unwrap();
        assert!((fidelity(&after, &s).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn impossible_branch_is_an_error() {
        let k = build_kraus(&MeasurementConfig::new(Z, 1.0, 0.1).unwrap());
        assert!(matches!(
            apply_measurement(&PureState::up(), &k, Outcome::Zero),
            Err(PovmError::ImpossibleOutcome { outcome: 0, .. })
        ));
    }

    #[test]
    fn sampling_frequencies() {
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let k = build_kraus(&MeasurementConfig::new(Z, 1.0, 0.1).unwrap());
        assert!((0..1000).all(|_| sample_outcome(&PureState::up(), &k, &mut rng) == Outcome::One));

        let k = build_kraus(&MeasurementConfig::new(Z, 0.2, 0.1).unwrap());
        let zeros = (0..n)
            .filter(|_| sample_outcome(&plus_x(), &k, &mut rng) == Outcome::Zero)
            .count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt(), "{freq}");

        let zeros = (0..n)
            .filter(|_| sample_outcome(&PureState::up(), &k, &mut rng) == Outcome::Zero)
            .count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.4).abs() < 5e-3, "{freq}");
    }

    #[test]
    fn strength_examples() {
        let cfg = MeasurementConfig::new(Z, 0.2, PI / 5.0).unwrap();
        assert!((measurement_strength(&cfg) - 1.0 / (10.0 * PI)).abs() < 1e-15);
        let cfg = MeasurementConfig::new(Z, 0.0, 0.3).unwrap();
        assert_eq!(measurement_strength(&cfg), 0.0);
        let cfg = MeasurementConfig::new(Z, 1.0, 0.5).unwrap();
        assert!((measurement_strength(&cfg) - 1.0).abs() < 1e-15);
        assert!((cfg.collapse_time() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn likelier_outcome_moves_toward_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let r = PureState::random(&mut rng).bloch().as_array();
            let dp = rng.random_range(0.0..1.0);
            let k = build_kraus(&MeasurementConfig::new(r, dp, 0.1).unwrap());
            let s = PureState::random(&mut rng);
            let p0 = outcome_probability(&s, &k, Outcome::Zero);
            let likely = if p0 >= 0.5 { Outcome::Zero } else { Outcome::One };
            let after = apply_measurement(&s, &k, likely).unwrap();
            let before_along = dot3(s.bloch().as_array(), r).abs();
            let after_along = dot3(after.bloch().as_array(), r).abs();
            assert!(after_along >= before_along - 1e-12);
        }
    }

    #[test]
    fn repeated_measurement_collapses() {
        // Collapse to an r̂ eigenstate takes of order τ_m/τ = 2/Δp² steps.
        let dp: f64 = 0.2;
        let steps_per_tm = (2.0 / (dp * dp)) as usize;
        let k = build_kraus(&MeasurementConfig::new(Z, dp, 0.1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let runs = 200;
        let mut collapsed = 0;
        let mut early = 0;
        for _ in 0..runs {
            let mut s = plus_x();
            for step in 0..20 * steps_per_tm {
                let n = sample_outcome(&s, &k, &mut rng);
                s = apply_measurement(&s, &k, n).unwrap();
                if step == steps_per_tm / 10 && s.bloch().z.abs() > 0.99 {
                    early += 1;
                }
            }
            if s.bloch().z.abs() > 0.99 {
                collapsed += 1;
            }
        }
        assert!(collapsed as f64 / runs as f64 > 0.95, "{collapsed}");
        assert!((early as f64) / (runs as f64) < 0.05, "{early}");
    }
}
