//! Two-level system algebra: pure states, Bloch vectors, 2×2 operators,
//! closed-form SU(2) rotations and state fidelity.
//!
//! States carry an arbitrary global phase. Compare them through
//! [`fidelity`] or their Bloch vectors, never component-wise.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Norm deviation tolerated on inputs that claim to be normalized.
pub const NORM_TOLERANCE: f64 = 1e-6;
/// Tolerance on the length of direction vectors.
pub const UNIT_TOLERANCE: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QubitError {
    #[error("state is not normalized (|a|^2 + |b|^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("direction vector is not a unit vector (|r| = {norm})")]
    NonUnitDirection { norm: f64 },
    #[error("state vector is zero or not finite")]
    Degenerate,
}

/// A direction or point in R³.
pub type Vec3 = [f64; 3];

pub fn norm3(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn check_unit(r: Vec3) -> Result<(), QubitError> {
    let norm = norm3(r);
    if (norm - 1.0).abs() > UNIT_TOLERANCE || !norm.is_finite() {
        return Err(QubitError::NonUnitDirection { norm });
    }
    Ok(())
}

/// Pure qubit state `a|↑⟩ + b|↓⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    pub a: Complex64,
    pub b: Complex64,
}

impl PureState {
    /// Builds a state from amplitudes that must already be normalized.
    pub fn new(a: Complex64, b: Complex64) -> Result<Self, QubitError> {
        let state = Self { a, b };
        state.check_normalized()?;
        Ok(state)
    }

    /// Builds a state from arbitrary (nonzero) amplitudes, normalizing them.
    pub fn normalized(a: Complex64, b: Complex64) -> Result<Self, QubitError> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QubitError::Degenerate);
        }
        Ok(Self { a: a / norm, b: b / norm })
    }

    /// `|↑⟩`, the +z eigenstate.
    pub fn up() -> Self {
        Self { a: ONE, b: ZERO }
    }

    /// `|↓⟩`, the −z eigenstate.
    pub fn down() -> Self {
        Self { a: ZERO, b: ONE }
    }

    /// The state whose Bloch vector points along `r`.
    pub fn from_bloch(r: Vec3) -> Result<Self, QubitError> {
        check_unit(r)?;
        let z = r[2].clamp(-1.0, 1.0);
        let theta = z.acos();
        let phi = r[1].atan2(r[0]);
        Ok(Self {
            a: Complex64::new((theta / 2.0).cos(), 0.0),
            b: Complex64::from_polar((theta / 2.0).sin(), phi),
        })
    }

    /// Haar-random state: two independent standard normals per complex
    /// amplitude, then normalization.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let a = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            let b = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            if let Ok(state) = Self::normalized(a, b) {
                return state;
            }
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    pub fn check_normalized(&self) -> Result<(), QubitError> {
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE || !norm_sqr.is_finite() {
            return Err(QubitError::NotNormalized { norm_sqr });
        }
        Ok(())
    }

    /// Rescales to unit norm, absorbing floating-point drift.
    pub fn renormalize(self) -> Self {
        let norm = self.norm_sqr().sqrt();
        Self { a: self.a / norm, b: self.b / norm }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.a.conj() * other.a + self.b.conj() * other.b
    }

    /// Bloch vector without the normalization check.
    pub fn bloch(&self) -> BlochVector {
        let ab = self.a.conj() * self.b;
        BlochVector {
            x: 2.0 * ab.re,
            y: 2.0 * ab.im,
            z: self.a.norm_sqr() - self.b.norm_sqr(),
        }
    }
}

/// Expectation values `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn as_array(&self) -> Vec3 {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        norm3(self.as_array())
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        dot3(self.as_array(), other.as_array())
    }
}

/// Bloch vector of a normalized state.
pub fn bloch_of(state: &PureState) -> Result<BlochVector, QubitError> {
    state.check_normalized()?;
    Ok(state.bloch())
}

/// A 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator2 {
    pub m: [[Complex64; 2]; 2],
}

impl Operator2 {
    pub fn new(m00: Complex64, m01: Complex64, m10: Complex64, m11: Complex64) -> Self {
        Self { m: [[m00, m01], [m10, m11]] }
    }

    pub fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn sigma_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub fn sigma_y() -> Self {
        Self::new(ZERO, -I, I, ZERO)
    }

    pub fn sigma_z() -> Self {
        Self::new(ONE, ZERO, ZERO, -ONE)
    }

    /// `r·σ` for any real vector, without a length check.
    pub fn pauli_combination(r: Vec3) -> Self {
        Self::new(
            Complex64::new(r[2], 0.0),
            Complex64::new(r[0], -r[1]),
            Complex64::new(r[0], r[1]),
            Complex64::new(-r[2], 0.0),
        )
    }

    pub fn dagger(&self) -> Self {
        let m = &self.m;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.m;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (p, q) = (&self.m, &other.m);
        Self::new(p[0][0] + q[0][0], p[0][1] + q[0][1], p[1][0] + q[1][0], p[1][1] + q[1][1])
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (p, q) = (&self.m, &other.m);
        Self::new(
            p[0][0] * q[0][0] + p[0][1] * q[1][0],
            p[0][0] * q[0][1] + p[0][1] * q[1][1],
            p[1][0] * q[0][0] + p[1][1] * q[1][0],
            p[1][0] * q[0][1] + p[1][1] * q[1][1],
        )
    }

    /// Applies the operator to a state vector. The result is not renormalized.
    pub fn apply(&self, state: &PureState) -> PureState {
        let m = &self.m;
        PureState {
            a: m[0][0] * state.a + m[0][1] * state.b,
            b: m[1][0] * state.a + m[1][1] * state.b,
        }
    }

    /// `‖self − other‖_max` over entries.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = self.sub(other);
        d.m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖U†U − 𝟙‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        self.dagger().mul(self).max_abs_diff(&Self::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() < tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.dagger()) < tol
    }
}

/// `r̂·σ̂` for a unit vector `r̂`.
pub fn pauli_along(r: Vec3) -> Result<Operator2, QubitError> {
    check_unit(r)?;
    Ok(Operator2::pauli_combination(r))
}

/// `exp(−i(angle/2) axis·σ̂) = cos(angle/2)𝟙 − i sin(angle/2) axis·σ̂`.
pub fn rotation(axis: Vec3, angle: f64) -> Result<Operator2, QubitError> {
    check_unit(axis)?;
    Ok(rotation_unchecked(axis, angle))
}

/// Closed-form rotation; `axis` must already be unit length.
pub(crate) fn rotation_unchecked(axis: Vec3, angle: f64) -> Operator2 {
    let (s, c) = (angle / 2.0).sin_cos();
    let [x, y, z] = axis;
    Operator2::new(
        Complex64::new(c, -s * z),
        Complex64::new(-s * y, -s * x),
        Complex64::new(s * y, -s * x),
        Complex64::new(c, s * z),
    )
}

/// `|⟨a|b⟩|²`, clamped to `[0, 1]`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64, QubitError> {
    a.check_normalized()?;
    b.check_normalized()?;
    Ok(a.inner(b).norm_sqr().clamp(0.0, 1.0))
}
