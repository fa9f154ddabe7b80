//! Circular Keplerian orbit and the frame chain ECI → ECEF → geocentric
//! position, plus the orbital (velocity / nadir) frame used as the attitude
//! reference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{Mat3, Vec3};

/// Earth gravitational parameter, m³/s².
pub const GM_EARTH: f64 = 3.986004418e14;
/// Mean equatorial radius, m.
pub const R_EARTH: f64 = 6378.137e3;
/// Earth rotation rate, rad/s.
pub const OMEGA_EARTH: f64 = 7.2921159e-5;
/// Seconds in a Julian year, used to advance decimal-year dates.
pub const SECONDS_PER_YEAR: f64 = 365.25 * 86400.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error("altitude must be positive and finite, got {0} m")]
    Altitude(f64),
    #[error("inclination must lie in [0, π], got {0} rad")]
    Inclination(f64),
    #[error("time must be non-negative, got {0} s")]
    NegativeTime(f64),
}

/// Circular orbit definition. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    /// Height above the mean equatorial radius, m.
    pub altitude: f64,
    pub inclination: f64,
    pub raan: f64,
    /// Argument of latitude at t = 0.
    pub arg_latitude0: f64,
    /// Epoch as a decimal year (drives the geomagnetic model date).
    pub epoch: f64,
    /// Greenwich sidereal angle at t = 0.
    pub gmst0: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            altitude: 400e3,
            inclination: 40f64.to_radians(),
            raan: 0.0,
            arg_latitude0: 0.0,
            epoch: 2018.0,
            gmst0: 0.0,
        }
    }
}

impl OrbitConfig {
    pub fn validate(&self) -> Result<(), OrbitError> {
        if !(self.altitude > 0.0 && self.altitude.is_finite()) {
            return Err(OrbitError::Altitude(self.altitude));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.inclination) {
            return Err(OrbitError::Inclination(self.inclination));
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        R_EARTH + self.altitude
    }

    /// Decimal-year date at `t` seconds after epoch.
    pub fn date_at(&self, t: f64) -> f64 {
        self.epoch + t / SECONDS_PER_YEAR
    }
}

/// Geocentric spherical position. Latitude and longitude in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPosition {
    pub latitude: f64,
    pub longitude: f64,
    pub radius: f64,
}

/// `ω₀ = sqrt(GM / R³)`.
pub fn orbital_rate(orbit: &OrbitConfig) -> f64 {
    let r = orbit.radius();
    (GM_EARTH / (r * r * r)).sqrt()
}

/// Position (m) and velocity (m/s) in ECI at time `t`.
pub fn propagate_circular_orbit(orbit: &OrbitConfig, t: f64) -> Result<(Vec3, Vec3), OrbitError> {
    if t < 0.0 {
        return Err(OrbitError::NegativeTime(t));
    }
    let r = orbit.radius();
    let w0 = orbital_rate(orbit);
    let u = orbit.arg_latitude0 + w0 * t;
    let rot = plane_to_eci(orbit);
    let pos = rot * Vec3::new(u.cos(), u.sin(), 0.0) * r;
    let vel = rot * Vec3::new(-u.sin(), u.cos(), 0.0) * (r * w0);
    Ok((pos, vel))
}

/// Rotation from orbit-plane coordinates (x to ascending node) into ECI:
/// `R3(-Ω) R1(-i)`.
fn plane_to_eci(orbit: &OrbitConfig) -> Mat3 {
    let (si, ci) = orbit.inclination.sin_cos();
    let (so, co) = orbit.raan.sin_cos();
    let r1 = Mat3::new(1.0, 0.0, 0.0, 0.0, ci, -si, 0.0, si, ci);
    let r3 = Mat3::new(co, -so, 0.0, so, co, 0.0, 0.0, 0.0, 1.0);
    r3 * r1
}

/// Greenwich sidereal angle for the linear Earth-rotation model.
pub fn sidereal_angle(gmst0: f64, t: f64) -> f64 {
    gmst0 + OMEGA_EARTH * t
}

/// ECI → ECEF rotation at sidereal angle `theta`.
pub fn eci_to_ecef(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    Mat3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Geocentric latitude, longitude and radius of an ECI position. At the
/// poles the longitude is reported as zero.
pub fn eci_to_geoposition(position_eci: &Vec3, t: f64, gmst0: f64) -> GeoPosition {
    let ecef = eci_to_ecef(sidereal_angle(gmst0, t)) * position_eci;
    ecef_to_geoposition(&ecef)
}

pub fn ecef_to_geoposition(ecef: &Vec3) -> GeoPosition {
    let radius = ecef.norm();
    let latitude = (ecef.z / radius).clamp(-1.0, 1.0).asin();
    let longitude = if ecef.x == 0.0 && ecef.y == 0.0 {
        0.0
    } else {
        ecef.y.atan2(ecef.x)
    };
    GeoPosition {
        latitude,
        longitude,
        radius,
    }
}

/// Columns are the local north, east and down unit vectors in ECEF.
pub fn ned_basis_ecef(pos: &GeoPosition) -> Mat3 {
    let (sl, cl) = pos.latitude.sin_cos();
    let (so, co) = pos.longitude.sin_cos();
    let north = Vec3::new(-sl * co, -sl * so, cl);
    let east = Vec3::new(-so, co, 0.0);
    let down = Vec3::new(-cl * co, -cl * so, -sl);
    Mat3::from_columns(&[north, east, down])
}

/// Rotation taking ECI vectors into the orbital frame: x along velocity,
/// z toward the Earth centre, y completing the right-handed triad (the
/// negative orbit normal).
pub fn eci_to_orbital(position_eci: &Vec3, velocity_eci: &Vec3) -> Mat3 {
    let z = -position_eci.normalize();
    let x = velocity_eci.normalize();
    let y = z.cross(&x);
    Mat3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])
}
