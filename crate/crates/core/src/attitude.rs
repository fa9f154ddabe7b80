//! Quaternion algebra, attitude matrices and cross-product operators.
//!
//! Quaternions are stored scalar-last, `[q1 q2 q3 q4]` with vector part
//! `n̂ sin(θ/2)` and scalar part `cos(θ/2)`. The attitude matrix `A(q)` maps
//! reference-frame vectors into the body frame, and the product is ordered so
//! that `A(a ⊗ b) = A(a) A(b)`.

use std::fmt;
use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Three-component real vector (rad/s, T, A·m², N·m depending on context).
pub type Vec3 = Vector3<f64>;
/// 3×3 real matrix.
pub type Mat3 = Matrix3<f64>;

/// Largest accepted deviation from unit norm for operations that require a
/// rotation quaternion.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AttitudeError {
    #[error("quaternion has non-finite components")]
    NonFinite,
    #[error("quaternion norm {0} is not within {UNIT_NORM_TOLERANCE} of one")]
    NotUnit(f64),
    #[error("rotation axis has zero length")]
    ZeroAxis,
}

/// Scalar-last attitude quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        q1: 0.0,
        q2: 0.0,
        q3: 0.0,
        q4: 1.0,
    };

    pub const fn new(q1: f64, q2: f64, q3: f64, q4: f64) -> Self {
        Quaternion { q1, q2, q3, q4 }
    }

    pub fn from_parts(vector: Vec3, scalar: f64) -> Self {
        Quaternion::new(vector.x, vector.y, vector.z, scalar)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.q1, self.q2, self.q3, self.q4]
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self, AttitudeError> {
        let n = axis.norm();
        if !n.is_finite() || !angle.is_finite() {
            return Err(AttitudeError::NonFinite);
        }
        if n == 0.0 {
            return Err(AttitudeError::ZeroAxis);
        }
        let half = 0.5 * angle;
        Ok(Quaternion::from_parts(axis * (half.sin() / n), half.cos()))
    }

    /// Quaternion for the rotation vector `phi` (axis times angle). Zero maps
    /// to the identity.
    pub fn from_rotation_vector(phi: Vec3) -> Self {
        let angle = phi.norm();
        if angle == 0.0 {
            return Quaternion::IDENTITY;
        }
        let half = 0.5 * angle;
        Quaternion::from_parts(phi * (half.sin() / angle), half.cos())
    }

    /// Quaternion whose vector part is `dq` and whose scalar part is
    /// `sqrt(1 - |dq|²)`. `|dq|` must not exceed one.
    pub fn from_error_vector(dq: Vec3) -> Self {
        let s = (1.0 - dq.norm_squared()).max(0.0).sqrt();
        Quaternion::from_parts(dq, s)
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.q1, self.q2, self.q3)
    }

    pub fn scalar(&self) -> f64 {
        self.q4
    }

    pub fn norm(&self) -> f64 {
        (self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3 + self.q4 * self.q4).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.q1.is_finite() && self.q2.is_finite() && self.q3.is_finite() && self.q4.is_finite()
    }

    pub fn normalize(self) -> Self {
        let n = self.norm();
        Quaternion::new(self.q1 / n, self.q2 / n, self.q3 / n, self.q4 / n)
    }

    pub fn conjugate(self) -> Self {
        Quaternion::new(-self.q1, -self.q2, -self.q3, self.q4)
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.q1 * other.q1 + self.q2 * other.q2 + self.q3 * other.q3 + self.q4 * other.q4
    }

    pub fn check_unit(&self) -> Result<(), AttitudeError> {
        if !self.is_finite() {
            return Err(AttitudeError::NonFinite);
        }
        let n = self.norm();
        if (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(AttitudeError::NotUnit(n));
        }
        Ok(())
    }

    /// Raw product without renormalization.
    pub fn product(self, rhs: Quaternion) -> Quaternion {
        let a = self.vector();
        let b = rhs.vector();
        let v = b * self.q4 + a * rhs.q4 - a.cross(&b);
        Quaternion::from_parts(v, self.q4 * rhs.q4 - a.dot(&b))
    }

    /// Attitude matrix, assuming the quaternion is already unit norm.
    pub fn to_dcm(&self) -> Mat3 {
        let v = self.vector();
        let s = self.q4;
        Mat3::identity() * (s * s - v.norm_squared()) + v * v.transpose() * 2.0 - skew(v) * (2.0 * s)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        2.0 * self.vector().norm().min(1.0).asin()
    }
}

impl Default for Quaternion {
    fn default() -> Self {
        Quaternion::IDENTITY
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.q1, self.q2, self.q3, self.q4)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.q1, -self.q2, -self.q3, -self.q4)
    }
}

/// Normalized product; non-finite inputs propagate as NaN. Use
/// [`quat_multiply`] for the checked form.
impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, rhs: Quaternion) -> Quaternion {
        self.product(rhs).normalize()
    }
}

/// Cross-product matrix: `skew(v) * w == v × w`.
pub fn skew(v: Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Checked quaternion product `a ⊗ b`, normalized.
pub fn quat_multiply(a: Quaternion, b: Quaternion) -> Result<Quaternion, AttitudeError> {
    if !a.is_finite() || !b.is_finite() {
        return Err(AttitudeError::NonFinite);
    }
    Ok(a * b)
}

pub fn quat_conjugate(q: Quaternion) -> Quaternion {
    q.conjugate()
}

/// `A(q) = (q4² − |q⃗|²) I + 2 q⃗ q⃗ᵀ − 2 q4 [q⃗]×`.
pub fn rotation_matrix(q: Quaternion) -> Result<Mat3, AttitudeError> {
    q.check_unit()?;
    Ok(q.to_dcm())
}

pub fn quat_from_axis_angle(axis: Vec3, angle: f64) -> Result<Quaternion, AttitudeError> {
    Quaternion::from_axis_angle(axis, angle)
}

/// `δq = q_true ⊗ q_est⁻¹`, so that `A(q_true) = A(δq) A(q_est)`.
pub fn error_quaternion(q_true: Quaternion, q_est: Quaternion) -> Quaternion {
    q_true * q_est.conjugate()
}

/// First-order attitude matrix `I − 2[δq⃗]×` for a small error vector.
pub fn small_angle_dcm(dq: Vec3) -> Mat3 {
    Mat3::identity() - skew(dq) * 2.0
}

/// Rotation angle of the error between two attitudes, radians in `[0, π]`.
pub fn attitude_error_angle(q_true: Quaternion, q_est: Quaternion) -> f64 {
    error_quaternion(q_true, q_est).angle()
}
