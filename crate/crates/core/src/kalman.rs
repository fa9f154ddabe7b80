//! Linear Kalman machinery shared by the attitude filters: covariance
//! discretization and propagation, and the Joseph-form measurement update.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Innovation covariances with a condition number above this are rejected.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KalmanError {
    #[error("innovation covariance is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// `(P + Pᵀ) / 2`.
pub fn symmetrize(p: &DMatrix<f64>) -> DMatrix<f64> {
    (p + p.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(p: &DMatrix<f64>) -> f64 {
    p.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Second-order transition matrix and first-order process noise:
/// `Φ_d = I + φ dt + ½ (φ dt)²`, `Q_d = G Q_c Gᵀ dt`.
pub fn discretize(phi: &DMatrix<f64>, g: &DMatrix<f64>, q_c: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = phi.nrows();
    let a = phi * dt;
    let phi_d = DMatrix::identity(n, n) + &a + (&a * &a) * 0.5;
    let q_d = g * q_c * g.transpose() * dt;
    (phi_d, q_d)
}

/// `Φ P Φᵀ + Q`, re-symmetrized.
pub fn propagate_covariance(p: &DMatrix<f64>, phi_d: &DMatrix<f64>, q_d: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(phi_d * p * phi_d.transpose() + q_d))
}

/// Result of a measurement update.
#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    /// Error-state estimate `K ν`.
    pub correction: DVector<f64>,
    /// Posterior covariance.
    pub covariance: DMatrix<f64>,
    /// `S = H P Hᵀ + R`.
    pub innovation_covariance: DMatrix<f64>,
    pub gain: DMatrix<f64>,
}

/// Joseph-form update: `K = P Hᵀ S⁻¹`, `P⁺ = (I − KH) P (I − KH)ᵀ + K R Kᵀ`.
pub fn joseph_update(
    p: &DMatrix<f64>,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
    innovation: &DVector<f64>,
) -> Result<UpdateOutcome, KalmanError> {
    let n = p.nrows();
    if h.ncols() != n || h.nrows() != r.nrows() || innovation.len() != h.nrows() {
        return Err(KalmanError::Dimension(format!(
            "P {}x{}, H {}x{}, R {}x{}, innovation {}",
            p.nrows(),
            p.ncols(),
            h.nrows(),
            h.ncols(),
            r.nrows(),
            r.ncols(),
            innovation.len()
        )));
    }
    let s = symmetrize(&(h * p * h.transpose() + r));
    let eig = s.clone().symmetric_eigenvalues();
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || max / min > MAX_INNOVATION_CONDITION {
        return Err(KalmanError::IllConditioned(if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }));
    }
    let chol = s.clone().cholesky().ok_or(KalmanError::IllConditioned(f64::INFINITY))?;
    // K = P Hᵀ S⁻¹ = (S⁻¹ H P)ᵀ since P and S are symmetric.
    let gain = chol.solve(&(h * p)).transpose();
    let correction = &gain * innovation;
    let ikh = DMatrix::identity(n, n) - &gain * h;
    let covariance = symmetrize(&(&ikh * p * ikh.transpose() + &gain * r * gain.transpose()));
    Ok(UpdateOutcome {
        correction,
        covariance,
        innovation_covariance: s,
        gain,
    })
}
