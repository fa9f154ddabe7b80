//! Magnetometer-only attitude, rate and residual-magnetic-moment estimation
//! for small LEO satellites.
//!
//! Modules are layered bottom-up: [`attitude`] quaternion algebra,
//! [`orbit`] and [`geomag`] for the reference field along a circular orbit,
//! [`dynamics`] for truth simulation, [`kalman`] and [`estimator`] for the
//! filters, and [`harness`] for scenario runs, metrics and Monte Carlo.

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attitude;
pub mod dynamics;
pub mod estimator;
pub mod geomag;
pub mod harness;
pub mod kalman;
pub mod orbit;

pub use attitude::{Mat3, Quaternion, Vec3};
