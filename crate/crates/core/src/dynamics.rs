//! Rigid-body attitude dynamics under the residual-magnetic-moment torque,
//! the discrete random walk of the true moment, and magnetometer sampling.
//!
//! Attitude `q` is the body frame relative to the orbital frame. The rate
//! carried in the state is `ω_ib^b`, body relative to inertial, expressed in
//! body axes; kinematics are driven by the orbital-relative rate
//! `ω_ob^b = ω_ib^b − A(q) ω_io^o` with `ω_io^o = (0, −ω₀, 0)`.

use nalgebra::Cholesky;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{Mat3, Quaternion, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("inertia matrix is not symmetric positive definite")]
    Inertia,
    #[error("{name} must be {requirement}, got {value}")]
    Parameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

/// Mass properties. Inertia in kg·m², body axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SatelliteParams {
    pub inertia: [[f64; 3]; 3],
    pub mass: f64,
    pub dims: [f64; 3],
}

impl SatelliteParams {
    /// Homogeneous box of the given mass and edge lengths.
    pub fn homogeneous_box(mass: f64, dims: [f64; 3]) -> Self {
        let [a, b, c] = dims;
        let k = mass / 12.0;
        SatelliteParams {
            inertia: [
                [k * (b * b + c * c), 0.0, 0.0],
                [0.0, k * (a * a + c * c), 0.0],
                [0.0, 0.0, k * (a * a + b * b)],
            ],
            mass,
            dims,
        }
    }

    pub fn inertia_matrix(&self) -> Mat3 {
        let j = &self.inertia;
        Mat3::new(
            j[0][0], j[0][1], j[0][2], j[1][0], j[1][1], j[1][2], j[2][0], j[2][1], j[2][2],
        )
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let j = self.inertia_matrix();
        if (j - j.transpose()).amax() > 1e-12 * j.amax() || Cholesky::new(j).is_none() {
            return Err(DynamicsError::Inertia);
        }
        Ok(())
    }
}

impl Default for SatelliteParams {
    /// 50 kg, 0.5 × 0.5 × 0.6 m.
    fn default() -> Self {
        SatelliteParams::homogeneous_box(50.0, [0.5, 0.5, 0.6])
    }
}

/// Inertia together with its inverse, computed once.
#[derive(Debug, Clone, Copy)]
pub struct RigidBody {
    pub inertia: Mat3,
    pub inertia_inv: Mat3,
}

impl RigidBody {
    pub fn new(params: &SatelliteParams) -> Result<Self, DynamicsError> {
        params.validate()?;
        let inertia = params.inertia_matrix();
        let inertia_inv = inertia.try_inverse().ok_or(DynamicsError::Inertia)?;
        Ok(RigidBody { inertia, inertia_inv })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthState {
    pub q: Quaternion,
    /// rad/s
    pub omega_ib_b: Vec3,
    /// A·m²
    pub m: Vec3,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    /// Per-axis white noise standard deviation, T.
    pub sigma_mag: f64,
    /// Sampling interval, s.
    pub sample_dt: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            sigma_mag: 100e-9,
            sample_dt: 1.0,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.sigma_mag >= 0.0 && self.sigma_mag.is_finite()) {
            return Err(DynamicsError::Parameter {
                name: "sensor.sigma_mag",
                requirement: "non-negative",
                value: self.sigma_mag,
            });
        }
        if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
            return Err(DynamicsError::Parameter {
                name: "sensor.sample_dt",
                requirement: "positive",
                value: self.sample_dt,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RmmWalkConfig {
    /// Per-axis random-walk intensity, (A·m²)²/s.
    pub q_m: f64,
    /// Initial moment, A·m².
    pub m0: [f64; 3],
}

impl Default for RmmWalkConfig {
    fn default() -> Self {
        RmmWalkConfig {
            q_m: 1e-6,
            m0: [0.5, -0.3, 0.4],
        }
    }
}

impl RmmWalkConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.q_m >= 0.0 && self.q_m.is_finite()) {
            return Err(DynamicsError::Parameter {
                name: "rmm_walk.q_m",
                requirement: "non-negative",
                value: self.q_m,
            });
        }
        Ok(())
    }
}

/// Time derivative of the deterministic part of the state. `ṁ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRate {
    pub q_dot: [f64; 4],
    pub omega_dot: Vec3,
}

/// `M = m × B`.
pub fn magnetic_torque(m: &Vec3, b_body: &Vec3) -> Vec3 {
    m.cross(b_body)
}

/// `ω_ob^b = ω_ib^b − A(q) (0, −ω₀, 0)`.
pub fn omega_orbital_relative(q: &Quaternion, omega_ib_b: &Vec3, omega0: f64) -> Vec3 {
    omega_ib_b - q.to_dcm() * Vec3::new(0.0, -omega0, 0.0)
}

/// `½ Ω(ω) q`, the quaternion kinematics for a rate `ω` relative to the
/// reference frame of `q`.
pub fn quaternion_rate(q: &Quaternion, omega: &Vec3) -> [f64; 4] {
    let v = q.vector();
    let d = (omega * q.q4 - omega.cross(&v)) * 0.5;
    [d.x, d.y, d.z, -0.5 * omega.dot(&v)]
}

/// Euler's equation, `J⁻¹(τ − ω × Jω)`.
pub fn euler_rate(body: &RigidBody, omega: &Vec3, torque: &Vec3) -> Vec3 {
    body.inertia_inv * (torque - omega.cross(&(body.inertia * omega)))
}

pub fn state_derivative(
    s: &TruthState,
    b_orbital: &Vec3,
    body: &RigidBody,
    omega0: f64,
    extra_torque: &Vec3,
) -> StateRate {
    let a = s.q.to_dcm();
    let w_ob = s.omega_ib_b - a * Vec3::new(0.0, -omega0, 0.0);
    let torque = magnetic_torque(&s.m, &(a * b_orbital)) + extra_torque;
    StateRate {
        q_dot: quaternion_rate(&s.q, &w_ob),
        omega_dot: euler_rate(body, &s.omega_ib_b, &torque),
    }
}

/// One classical RK4 step of `(q, ω)` over `dt`. The reference field is
/// re-evaluated at the stage times; `m` is held fixed; the quaternion is
/// renormalized after the step.
pub fn rk4_step<F>(s: &TruthState, dt: f64, field: &F, body: &RigidBody, omega0: f64, extra_torque: &Vec3) -> TruthState
where
    F: Fn(f64) -> Vec3 + ?Sized,
{
    let stage = |base: &TruthState, k: &StateRate, h: f64| -> TruthState {
        TruthState {
            q: Quaternion::new(
                base.q.q1 + h * k.q_dot[0],
                base.q.q2 + h * k.q_dot[1],
                base.q.q3 + h * k.q_dot[2],
                base.q.q4 + h * k.q_dot[3],
            ),
            omega_ib_b: base.omega_ib_b + k.omega_dot * h,
            m: base.m,
            t: base.t + h,
        }
    };
    let t = s.t;
    let b0 = field(t);
    let bh = field(t + 0.5 * dt);
    let b1 = field(t + dt);
    let k1 = state_derivative(s, &b0, body, omega0, extra_torque);
    let k2 = state_derivative(&stage(s, &k1, 0.5 * dt), &bh, body, omega0, extra_torque);
    let k3 = state_derivative(&stage(s, &k2, 0.5 * dt), &bh, body, omega0, extra_torque);
    let k4 = state_derivative(&stage(s, &k3, dt), &b1, body, omega0, extra_torque);

    let w = dt / 6.0;
    let mut q = [s.q.q1, s.q.q2, s.q.q3, s.q.q4];
    for (i, qi) in q.iter_mut().enumerate() {
        *qi += w * (k1.q_dot[i] + 2.0 * k2.q_dot[i] + 2.0 * k3.q_dot[i] + k4.q_dot[i]);
    }
    let omega = s.omega_ib_b + (k1.omega_dot + k2.omega_dot * 2.0 + k3.omega_dot * 2.0 + k4.omega_dot) * w;
    TruthState {
        q: Quaternion::from_array(q).normalize(),
        omega_ib_b: omega,
        m: s.m,
        t: t + dt,
    }
}

fn gaussian3<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Vec3 {
    let mut draw = || -> f64 { StandardNormal.sample(rng) };
    let (x, y, z) = (draw(), draw(), draw());
    Vec3::new(x, y, z) * sigma
}

/// `m⁺ = m + n`, `n ~ N(0, q_m dt I₃)`. No draw is made when `q_m = 0`.
pub fn rmm_walk_step<R: Rng + ?Sized>(m: &Vec3, dt: f64, cfg: &RmmWalkConfig, rng: &mut R) -> Vec3 {
    if cfg.q_m == 0.0 {
        return *m;
    }
    m + gaussian3(rng, (cfg.q_m * dt).sqrt())
}

/// `B_b = A(q) B_o + v`, `v ~ N(0, σ² I₃)`.
pub fn sample_magnetometer<R: Rng + ?Sized>(
    q_true: &Quaternion,
    b_orbital: &Vec3,
    cfg: &SensorConfig,
    rng: &mut R,
) -> Vec3 {
    let clean = q_true.to_dcm() * b_orbital;
    if cfg.sigma_mag == 0.0 {
        return clean;
    }
    clean + gaussian3(rng, cfg.sigma_mag)
}
