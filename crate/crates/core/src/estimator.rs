//! Body-referenced error-state Kalman filters driven only by magnetometer
//! measurements.
//!
//! The error state is `[δq⃗; Δω; (Δm)]`: the vector part of the
//! multiplicative attitude error `δq = q ⊗ q̂⁻¹`, the error in the inertial
//! body rate, and (nine-state variant) the error in the residual magnetic
//! moment. The reference trajectory `(q̂, ω̂)` is integrated with the full
//! nonlinear model, with the estimated moment applied as a known torque;
//! the linearized error dynamics only carry the covariance.
//!
//! The six-state variant keeps the moment fixed at a pre-calibrated value
//! and absorbs the mismatch in process noise on all six states. The
//! nine-state variant models the moment as a random walk and injects noise
//! into `Δm` alone.

use log::warn;
use nalgebra::{DMatrix, DVector, Matrix3x4, Matrix4, Matrix4x3, SMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{skew, Mat3, Quaternion, Vec3};
use crate::dynamics::{rk4_step, RigidBody, TruthState};
use crate::kalman::{self, KalmanError};

pub type Matrix6 = SMatrix<f64, 6, 6>;
pub type Matrix7 = SMatrix<f64, 7, 7>;
pub type Matrix9 = SMatrix<f64, 9, 9>;

/// Prediction fails when the propagated covariance has an eigenvalue below
/// this.
pub const PSD_FAILURE_THRESHOLD: f64 = -1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("inertia matrix is singular")]
    SingularInertia,
    #[error("covariance lost positive semi-definiteness (min eigenvalue {0:e})")]
    NonPsdCovariance(f64),
    #[error("measurement {index} at t = {t} s is not after the previous epoch ({previous} s)")]
    OutOfOrder { index: usize, t: f64, previous: f64 },
    #[error("invalid filter configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Kalman(#[from] KalmanError),
}

/// Failure part-way through [`run_filter`].
#[derive(Debug, Clone, PartialEq, Error)]
#[error("filter aborted at measurement {failed_index}: {source}")]
pub struct FilterRunError {
    /// Index of the last measurement that produced a record, if any.
    pub last_valid_index: Option<usize>,
    pub failed_index: usize,
    pub records: Vec<FilterRecord>,
    #[source]
    pub source: EstimatorError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterVariant {
    /// `[δq⃗; Δω]` with a constant assumed moment.
    SixState,
    /// `[δq⃗; Δω; Δm]` with a random-walk moment.
    NineState,
}

impl FilterVariant {
    pub fn dim(self) -> usize {
        match self {
            FilterVariant::SixState => 6,
            FilterVariant::NineState => 9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterVariant::SixState => "six_state",
            FilterVariant::NineState => "nine_state",
        }
    }
}

/// Filter tuning. Intensities are continuous-time PSDs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub variant: FilterVariant,
    /// Random-walk intensity on `Δm`, (A·m²)²/s. Nine-state only.
    pub q_rmm: f64,
    /// Process noise on `δq⃗`, 1/s. Six-state only.
    pub q_attitude: f64,
    /// Process noise on `Δω`, (rad/s)²/s. Six-state only.
    pub q_rate: f64,
    /// Per-axis magnetometer variance, T².
    pub r_meas: f64,
    /// Initial standard deviations of `δq⃗`, `Δω` (rad/s) and `Δm` (A·m²).
    pub p0_attitude: f64,
    pub p0_rate: f64,
    pub p0_rmm: f64,
    /// Pre-calibrated moment: the six-state model torque and the nine-state
    /// initial estimate, A·m².
    pub m_assumed: [f64; 3],
    /// Longest covariance/reference propagation substep, s.
    pub dt_propagation: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            variant: FilterVariant::NineState,
            q_rmm: 1e-6,
            q_attitude: 1e-10,
            q_rate: 1e-10,
            r_meas: 1e-14,
            p0_attitude: 0.1,
            p0_rate: 1e-3,
            p0_rmm: 0.3,
            m_assumed: [0.5, -0.3, 0.4],
            dt_propagation: 1.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        let checks = [
            ("q_rmm", self.q_rmm),
            ("q_attitude", self.q_attitude),
            ("q_rate", self.q_rate),
            ("r_meas", self.r_meas),
            ("p0_attitude", self.p0_attitude),
            ("p0_rate", self.p0_rate),
            ("p0_rmm", self.p0_rmm),
        ];
        for (name, v) in checks {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(EstimatorError::Config(format!(
                    "filter.{name} must be non-negative, got {v}"
                )));
            }
        }
        if !(self.dt_propagation > 0.0 && self.dt_propagation <= 1.0) {
            return Err(EstimatorError::Config(format!(
                "filter.dt_propagation must lie in (0, 1] s, got {}",
                self.dt_propagation
            )));
        }
        Ok(())
    }

    pub fn initial_covariance(&self) -> DMatrix<f64> {
        let mut d = vec![self.p0_attitude.powi(2); 3];
        d.extend([self.p0_rate.powi(2); 3]);
        if self.variant == FilterVariant::NineState {
            d.extend([self.p0_rmm.powi(2); 3]);
        }
        DMatrix::from_diagonal(&DVector::from_vec(d))
    }

    /// Noise input map `G` and continuous intensity `Q_c`.
    pub fn process_noise(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        match self.variant {
            FilterVariant::SixState => {
                let mut q = DMatrix::zeros(6, 6);
                for i in 0..3 {
                    q[(i, i)] = self.q_attitude;
                    q[(i + 3, i + 3)] = self.q_rate;
                }
                (DMatrix::identity(6, 6), q)
            }
            FilterVariant::NineState => {
                let mut g = DMatrix::zeros(9, 3);
                g.view_mut((6, 0), (3, 3)).fill_with_identity();
                (g, DMatrix::identity(3, 3) * self.q_rmm)
            }
        }
    }
}

/// Filter estimate and error covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub variant: FilterVariant,
    pub q_hat: Quaternion,
    /// Estimated `ω_ib^b`, rad/s.
    pub omega_hat: Vec3,
    /// Estimated moment (held at `m_assumed` in the six-state variant).
    pub m_hat: Vec3,
    pub p: DMatrix<f64>,
    pub t: f64,
}

impl FilterState {
    pub fn new(cfg: &FilterConfig, q_hat: Quaternion, omega_hat: Vec3, t: f64) -> Self {
        FilterState {
            variant: cfg.variant,
            q_hat: q_hat.normalize(),
            omega_hat,
            m_hat: Vec3::from(cfg.m_assumed),
            p: cfg.initial_covariance(),
            t,
        }
    }
}

/// Measurement epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub t: f64,
    /// Body-frame magnetometer reading, T.
    pub b_body: Vec3,
}

/// Per-measurement filter output.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRecord {
    pub t: f64,
    pub q_hat: Quaternion,
    pub omega_hat: Vec3,
    pub m_hat: Vec3,
    /// `B_b − A(q̂) B_o` before the correction, T.
    pub innovation: Vec3,
    pub innovation_cov_diag: Vec3,
    /// Posterior covariance and its diagonal.
    pub covariance: DMatrix<f64>,
    pub p_diag: Vec<f64>,
    pub p_min_eigenvalue: f64,
    pub measurement: Vec3,
    pub update_applied: bool,
}

fn inverse(j: &Mat3) -> Result<Mat3, EstimatorError> {
    j.try_inverse().ok_or(EstimatorError::SingularInertia)
}

/// `J⁻¹((Jω)× − ω×J)`, the linearized gyroscopic coupling.
pub fn gyroscopic_block(omega: &Vec3, j: &Mat3, j_inv: &Mat3) -> Mat3 {
    j_inv * (skew(j * omega) - skew(*omega) * j)
}

/// Six-state error dynamics `[[−ω×, ½I], [0, J⁻¹((Jω)× − ω×J)]]`.
pub fn build_phi_6(omega_hat: &Vec3, j: &Mat3) -> Result<Matrix6, EstimatorError> {
    let j_inv = inverse(j)?;
    let mut phi = Matrix6::zeros();
    phi.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-skew(*omega_hat)));
    phi.fixed_view_mut::<3, 3>(0, 3).copy_from(&(Mat3::identity() * 0.5));
    phi.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&gyroscopic_block(omega_hat, j, &j_inv));
    Ok(phi)
}

/// Nine-state error dynamics: the six-state blocks plus the `−J⁻¹B×`
/// coupling of `Δm` into `Δω̇`; `Δṁ = 0`.
pub fn build_phi_9(omega_hat: &Vec3, j: &Mat3, b_body_hat: &Vec3) -> Result<Matrix9, EstimatorError> {
    let j_inv = inverse(j)?;
    let phi6 = build_phi_6(omega_hat, j)?;
    let mut phi = Matrix9::zeros();
    phi.fixed_view_mut::<6, 6>(0, 0).copy_from(&phi6);
    phi.fixed_view_mut::<3, 3>(3, 6)
        .copy_from(&(-(j_inv * skew(*b_body_hat))));
    Ok(phi)
}

/// `Ω(ω)` such that `q̇ = ½ Ω(ω) q` (scalar-last).
pub fn omega_matrix(w: &Vec3) -> Matrix4<f64> {
    Matrix4::new(
        0.0, w.z, -w.y, w.x, //
        -w.z, 0.0, w.x, w.y, //
        w.y, -w.x, 0.0, w.z, //
        -w.x, -w.y, -w.z, 0.0,
    )
}

/// `Ξ(q)` such that `Ω(ω) q = Ξ(q) ω`.
pub fn xi_matrix(q: &Quaternion) -> Matrix4x3<f64> {
    Matrix4x3::new(
        q.q4, -q.q3, q.q2, //
        q.q3, q.q4, -q.q1, //
        -q.q2, q.q1, q.q4, //
        -q.q1, -q.q2, -q.q3,
    )
}

/// Jacobian of the seven-state model `[½Ω(ω)q̄; J⁻¹(τ − ω×Jω)]`.
/// Diagnostic only: its covariance is rank-deficient along `q̄`.
pub fn build_phi_full7(q_hat: &Quaternion, omega_hat: &Vec3, j: &Mat3) -> Result<Matrix7, EstimatorError> {
    let j_inv = inverse(j)?;
    let mut phi = Matrix7::zeros();
    phi.fixed_view_mut::<4, 4>(0, 0)
        .copy_from(&(omega_matrix(omega_hat) * 0.5));
    phi.fixed_view_mut::<4, 3>(0, 4).copy_from(&(xi_matrix(q_hat) * 0.5));
    phi.fixed_view_mut::<3, 3>(4, 4)
        .copy_from(&gyroscopic_block(omega_hat, j, &j_inv));
    Ok(phi)
}

/// Continuous error-dynamics matrix for the variant, as a dynamic matrix.
pub fn error_dynamics(
    variant: FilterVariant,
    omega_hat: &Vec3,
    j: &Mat3,
    b_body_hat: &Vec3,
) -> Result<DMatrix<f64>, EstimatorError> {
    Ok(match variant {
        FilterVariant::SixState => {
            let phi = build_phi_6(omega_hat, j)?;
            DMatrix::from_fn(6, 6, |r, c| phi[(r, c)])
        }
        FilterVariant::NineState => {
            let phi = build_phi_9(omega_hat, j, b_body_hat)?;
            DMatrix::from_fn(9, 9, |r, c| phi[(r, c)])
        }
    })
}

/// `C = [2 (A(q̂) B_o)× 0 (0)]`.
pub fn measurement_matrix(q_hat: &Quaternion, b_orbital: &Vec3, variant: FilterVariant) -> DMatrix<f64> {
    let block = skew(q_hat.to_dcm() * b_orbital) * 2.0;
    let mut c = DMatrix::zeros(3, variant.dim());
    c.view_mut((0, 0), (3, 3)).copy_from(&block);
    c
}

/// Propagates the estimate over `dt`: the reference `(q̂, ω̂)` by RK4 with
/// `τ = m̂ × A(q̂) B_o`, the covariance by `Φ_d P Φ_dᵀ + Q_d`.
pub fn predict<F>(
    fs: &FilterState,
    cfg: &FilterConfig,
    field: &F,
    body: &RigidBody,
    omega0: f64,
    dt: f64,
) -> Result<FilterState, EstimatorError>
where
    F: Fn(f64) -> Vec3 + ?Sized,
{
    let b_body = fs.q_hat.to_dcm() * field(fs.t);
    let phi = error_dynamics(fs.variant, &fs.omega_hat, &body.inertia, &b_body)?;
    let (g, q_c) = cfg.process_noise();
    let (phi_d, q_d) = kalman::discretize(&phi, &g, &q_c, dt);
    let p = kalman::propagate_covariance(&fs.p, &phi_d, &q_d);
    let min_eig = kalman::min_eigenvalue(&p);
    if min_eig < PSD_FAILURE_THRESHOLD || !min_eig.is_finite() {
        return Err(EstimatorError::NonPsdCovariance(min_eig));
    }

    let reference = TruthState {
        q: fs.q_hat,
        omega_ib_b: fs.omega_hat,
        m: fs.m_hat,
        t: fs.t,
    };
    let next = rk4_step(&reference, dt, field, body, omega0, &Vec3::zeros());
    Ok(FilterState {
        variant: fs.variant,
        q_hat: next.q,
        omega_hat: next.omega_ib_b,
        m_hat: fs.m_hat,
        p,
        t: fs.t + dt,
    })
}

/// Outcome of [`update`] besides the new state.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateInfo {
    pub innovation: Vec3,
    pub innovation_cov_diag: Vec3,
    pub applied: bool,
}

/// Magnetometer correction with multiplicative attitude reset.
pub fn update(
    fs: &FilterState,
    b_measured: &Vec3,
    b_orbital: &Vec3,
    cfg: &FilterConfig,
) -> Result<(FilterState, UpdateInfo), EstimatorError> {
    let predicted = fs.q_hat.to_dcm() * b_orbital;
    let innovation = b_measured - predicted;
    let c = measurement_matrix(&fs.q_hat, b_orbital, fs.variant);
    let r = DMatrix::identity(3, 3) * cfg.r_meas;
    let nu = DVector::from_column_slice(innovation.as_slice());

    let outcome = match kalman::joseph_update(&fs.p, &c, &r, &nu) {
        Ok(o) => o,
        Err(KalmanError::IllConditioned(cond)) => {
            warn!(
                "t = {}: skipping update, innovation covariance condition {cond:e}",
                fs.t
            );
            let s = &c * &fs.p * c.transpose() + &r;
            return Ok((
                fs.clone(),
                UpdateInfo {
                    innovation,
                    innovation_cov_diag: Vec3::new(s[(0, 0)], s[(1, 1)], s[(2, 2)]),
                    applied: false,
                },
            ));
        }
        Err(e) => return Err(e.into()),
    };

    let dx = &outcome.correction;
    let mut dq = Vec3::new(dx[0], dx[1], dx[2]);
    let n = dq.norm();
    if n >= 1.0 {
        warn!(
            "t = {}: attitude correction |δq| = {n} clamped (filter divergence)",
            fs.t
        );
        dq /= n;
    }
    let q_hat = Quaternion::from_error_vector(dq) * fs.q_hat;
    let omega_hat = fs.omega_hat + Vec3::new(dx[3], dx[4], dx[5]);
    let m_hat = match fs.variant {
        FilterVariant::NineState => fs.m_hat + Vec3::new(dx[6], dx[7], dx[8]),
        FilterVariant::SixState => fs.m_hat,
    };
    let s = &outcome.innovation_covariance;
    Ok((
        FilterState {
            variant: fs.variant,
            q_hat,
            omega_hat,
            m_hat,
            p: outcome.covariance,
            t: fs.t,
        },
        UpdateInfo {
            innovation,
            innovation_cov_diag: Vec3::new(s[(0, 0)], s[(1, 1)], s[(2, 2)]),
            applied: true,
        },
    ))
}

/// Alternates prediction (in substeps of at most `dt_propagation`) and
/// update, emitting one record per measurement.
pub fn run_filter<F>(
    measurements: &[Measurement],
    field: &F,
    cfg: &FilterConfig,
    body: &RigidBody,
    omega0: f64,
    initial: FilterState,
) -> Result<Vec<FilterRecord>, FilterRunError>
where
    F: Fn(f64) -> Vec3 + ?Sized,
{
    let mut records: Vec<FilterRecord> = Vec::with_capacity(measurements.len());
    let fail = |records: Vec<FilterRecord>, index: usize, source: EstimatorError| FilterRunError {
        last_valid_index: index.checked_sub(1),
        failed_index: index,
        records,
        source,
    };
    if let Err(e) = cfg.validate() {
        return Err(fail(records, 0, e));
    }
    let mut fs = initial;
    let mut previous = f64::NEG_INFINITY;
    for (index, meas) in measurements.iter().enumerate() {
        if !(meas.t > previous) || meas.t < fs.t {
            let e = EstimatorError::OutOfOrder {
                index,
                t: meas.t,
                previous: previous.max(fs.t),
            };
            return Err(fail(records, index, e));
        }
        previous = meas.t;

        let span = meas.t - fs.t;
        if span > 0.0 {
            let steps = (span / cfg.dt_propagation - 1e-9).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                fs = match predict(&fs, cfg, field, body, omega0, h) {
                    Ok(next) => next,
                    Err(e) => return Err(fail(records, index, e)),
                };
            }
            fs.t = meas.t;
        }

        let b_o = field(meas.t);
        let (next, info) = match update(&fs, &meas.b_body, &b_o, cfg) {
            Ok(r) => r,
            Err(e) => return Err(fail(records, index, e)),
        };
        fs = next;
        records.push(FilterRecord {
            t: fs.t,
            q_hat: fs.q_hat,
            omega_hat: fs.omega_hat,
            m_hat: fs.m_hat,
            innovation: info.innovation,
            innovation_cov_diag: info.innovation_cov_diag,
            p_diag: fs.p.diagonal().iter().copied().collect(),
            p_min_eigenvalue: kalman::min_eigenvalue(&fs.p),
            covariance: fs.p.clone(),
            measurement: meas.b_body,
            update_applied: info.applied,
        });
    }
    Ok(records)
}

/// Jacobian of `A(q) B` with respect to the four quaternion components.
pub fn dcm_times_vector_jacobian(q: &Quaternion, b: &Vec3) -> Matrix3x4<f64> {
    let v = q.vector();
    let s = q.q4;
    let dv = (v * b.transpose() - b * v.transpose()) * 2.0 + Mat3::identity() * (2.0 * v.dot(b)) + skew(*b) * (2.0 * s);
    let ds = b * (2.0 * s) - v.cross(b) * 2.0;
    let mut h = Matrix3x4::zeros();
    h.fixed_view_mut::<3, 3>(0, 0).copy_from(&dv);
    h.fixed_view_mut::<3, 1>(0, 3).copy_from(&ds);
    h
}

/// Per-epoch log of a seven-state (full quaternion) filter run.
#[derive(Debug, Clone, Default)]
pub struct SingularityDiagnostic {
    pub t: Vec<f64>,
    /// Smallest covariance eigenvalue after the update.
    pub min_eigenvalue: Vec<f64>,
    /// `q̂ᵀ P_qq q̂ / trace(P_qq)`: share of attitude variance along the
    /// norm direction, which the unit constraint makes unobservable.
    pub norm_direction_share: Vec<f64>,
    /// `|q̂| − 1` after the additive update, before renormalization.
    pub norm_defect: Vec<f64>,
}

/// Runs an additive seven-state EKF (`x = [q̄; ω]`) on the measurements and
/// logs how its covariance degenerates. No pass/fail semantics.
#[allow(clippy::too_many_arguments)]
pub fn full_state_covariance_diagnostic<F>(
    measurements: &[Measurement],
    field: &F,
    body: &RigidBody,
    omega0: f64,
    q0: Quaternion,
    omega_start: Vec3,
    p0_diag: [f64; 7],
    r_meas: f64,
) -> Result<SingularityDiagnostic, EstimatorError>
where
    F: Fn(f64) -> Vec3 + ?Sized,
{
    let mut q = q0.normalize();
    let mut w = omega_start;
    let mut t = measurements.first().map_or(0.0, |m| m.t);
    let mut p = DMatrix::from_diagonal(&DVector::from_column_slice(&p0_diag));
    let r = DMatrix::identity(3, 3) * r_meas;
    let mut out = SingularityDiagnostic::default();
    for meas in measurements {
        let dt = meas.t - t;
        if dt > 0.0 {
            let phi7 = build_phi_full7(&q, &w, &body.inertia)?;
            let phi = DMatrix::from_fn(7, 7, |i, j| phi7[(i, j)]);
            let (phi_d, q_d) = kalman::discretize(&phi, &DMatrix::zeros(7, 1), &DMatrix::zeros(1, 1), dt);
            p = kalman::propagate_covariance(&p, &phi_d, &q_d);
            let s = rk4_step(
                &TruthState {
                    q,
                    omega_ib_b: w,
                    m: Vec3::zeros(),
                    t,
                },
                dt,
                field,
                body,
                omega0,
                &Vec3::zeros(),
            );
            q = s.q;
            w = s.omega_ib_b;
            t = meas.t;
        }
        let b_o = field(meas.t);
        let hq = dcm_times_vector_jacobian(&q, &b_o);
        let mut h = DMatrix::zeros(3, 7);
        h.view_mut((0, 0), (3, 4)).copy_from(&hq);
        let nu = meas.b_body - q.to_dcm() * b_o;
        let nu = DVector::from_column_slice(nu.as_slice());
        let upd = match kalman::joseph_update(&p, &h, &r, &nu) {
            Ok(u) => u,
            Err(KalmanError::IllConditioned(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        p = upd.covariance;
        let dx = &upd.correction;
        let raw = Quaternion::new(q.q1 + dx[0], q.q2 + dx[1], q.q3 + dx[2], q.q4 + dx[3]);
        w += Vec3::new(dx[4], dx[5], dx[6]);
        out.norm_defect.push(raw.norm() - 1.0);
        q = raw.normalize();

        let qv = nalgebra::Vector4::new(q.q1, q.q2, q.q3, q.q4);
        let pqq = p.view((0, 0), (4, 4)).clone_owned();
        let along = (qv.transpose() * &pqq * qv)[(0, 0)];
        out.t.push(meas.t);
        out.min_eigenvalue.push(kalman::min_eigenvalue(&p));
        out.norm_direction_share.push(along / pqq.trace());
    }
    if let (Some(first), Some(last)) = (out.norm_direction_share.first(), out.norm_direction_share.last()) {
        log::info!(
            "seven-state diagnostic: norm-direction variance share {first:.3e} -> {last:.3e}, final min eigenvalue {:.3e}",
            out.min_eigenvalue.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(out)
}
