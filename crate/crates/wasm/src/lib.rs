//! Browser bindings for the static demo page in `www/`.
//!
//! Each export has a plain Rust counterpart returning `Result<_, String>` so
//! the logic can be tested natively.

use wasm_bindgen::prelude::*;

use satmag::attitude::Vec3;
use satmag::estimator::FilterVariant;
use satmag::geomag::{igrf_field_ned, GeomagCoefficients};
use satmag::harness::{compute_metrics, run_scenario, Environment, ScenarioConfig};
use satmag::orbit::{GeoPosition, R_EARTH};

const MAX_GRID: usize = 720;
const MAX_DURATION: f64 = 3.0 * 3600.0;

/// Field intensity (nT) on a latitude/longitude grid, row-major from the
/// northernmost row. Rows span ±89°, columns −180° to 180°.
pub fn field_map_grid(date: f64, altitude_km: f64, n_lat: usize, n_lon: usize) -> Result<Vec<f64>, String> {
    if !(2..=MAX_GRID).contains(&n_lat) || !(2..=MAX_GRID).contains(&n_lon) {
        return Err(format!("grid size must be 2..={MAX_GRID} per axis"));
    }
    if !(0.0..=50_000.0).contains(&altitude_km) {
        return Err(format!("altitude {altitude_km} km out of range"));
    }
    let coeffs = GeomagCoefficients::igrf13();
    let set = coeffs.at_date(date).map_err(|e| e.to_string())?;
    let radius = R_EARTH + altitude_km * 1e3;
    let mut out = Vec::with_capacity(n_lat * n_lon);
    for i in 0..n_lat {
        let lat = 89.0 - 178.0 * i as f64 / (n_lat - 1) as f64;
        for j in 0..n_lon {
            let lon = -180.0 + 360.0 * j as f64 / (n_lon - 1) as f64;
            let pos = GeoPosition {
                latitude: lat.to_radians(),
                longitude: lon.to_radians(),
                radius,
            };
            out.push(satmag::geomag::synthesize_ned(&set, &pos).norm());
        }
    }
    Ok(out)
}

/// Orbital-frame reference field along a circular orbit, interleaved as
/// `[t, Bx, By, Bz, |B|]` per sample, nT.
pub fn orbit_field_series(
    altitude_km: f64,
    inclination_deg: f64,
    duration_s: f64,
    step_s: f64,
) -> Result<Vec<f64>, String> {
    if !(step_s > 0.0 && (0.0..=MAX_DURATION * 4.0).contains(&duration_s)) {
        return Err("duration must be non-negative and step positive".into());
    }
    let mut cfg = ScenarioConfig::default();
    cfg.orbit.altitude = altitude_km * 1e3;
    cfg.orbit.inclination = inclination_deg.to_radians();
    let env = Environment::new(&cfg).map_err(|e| e.to_string())?;
    let n = (duration_s / step_s).floor() as usize;
    let mut out = Vec::with_capacity(5 * (n + 1));
    for k in 0..=n {
        let t = k as f64 * step_s;
        let b: Vec3 = env.field_at(t) * 1e9;
        out.extend([t, b.x, b.y, b.z, b.norm()]);
    }
    Ok(out)
}

/// Point query, `[north, east, down, |B|]` in nT at geocentric latitude and
/// longitude (deg) and altitude above the equatorial radius (km).
pub fn field_at_point(lat_deg: f64, lon_deg: f64, altitude_km: f64, date: f64) -> Result<Vec<f64>, String> {
    if !(-90.0..=90.0).contains(&lat_deg) {
        return Err(format!("latitude {lat_deg} deg outside [-90, 90]"));
    }
    let pos = GeoPosition {
        latitude: lat_deg.to_radians(),
        longitude: lon_deg.to_radians(),
        radius: R_EARTH + altitude_km * 1e3,
    };
    let b = igrf_field_ned(&GeomagCoefficients::igrf13(), &pos, date).map_err(|e| e.to_string())?;
    Ok(vec![b.x, b.y, b.z, b.norm()])
}

/// Result of one estimation run, flattened for plotting.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct DemoRun {
    t: Vec<f64>,
    err_angle_deg: Vec<f64>,
    m_true: Vec<f64>,
    m_est: Vec<f64>,
    innovation_nt: Vec<f64>,
    b_body_nt: Vec<f64>,
    summary: String,
}

#[wasm_bindgen]
impl DemoRun {
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }

    pub fn err_angle_deg(&self) -> Vec<f64> {
        self.err_angle_deg.clone()
    }

    /// `[m1, m2, m3]` per epoch, A·m².
    pub fn m_true(&self) -> Vec<f64> {
        self.m_true.clone()
    }

    pub fn m_est(&self) -> Vec<f64> {
        self.m_est.clone()
    }

    /// `|innovation|` per epoch, nT.
    pub fn innovation_nt(&self) -> Vec<f64> {
        self.innovation_nt.clone()
    }

    /// `|B_b|` per epoch, nT.
    pub fn b_body_nt(&self) -> Vec<f64> {
        self.b_body_nt.clone()
    }

    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

/// Default scenario with the given filter variant, seed, duration and
/// residual-moment walk intensity.
pub fn demo_run(variant: &str, seed: u32, duration_s: f64, q_m: f64) -> Result<DemoRun, String> {
    if !(0.0..=MAX_DURATION).contains(&duration_s) {
        return Err(format!("duration must lie in [0, {MAX_DURATION}] s"));
    }
    let mut cfg = ScenarioConfig::default();
    cfg.filter.variant = match variant {
        "six_state" => FilterVariant::SixState,
        "nine_state" => FilterVariant::NineState,
        other => return Err(format!("unknown variant '{other}'")),
    };
    cfg.seed = u64::from(seed);
    cfg.duration = duration_s;
    cfg.rmm_walk.q_m = q_m;
    let run = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let metrics = compute_metrics(&run, cfg.convergence_threshold_deg).map_err(|e| e.to_string())?;
    let summary = format!(
        "{}: attitude RMSE {:.2} deg (final third {:.2} deg), RMM RMSE {:.3} A m^2, mean |innovation| {:.0} nT",
        variant,
        metrics.attitude_rmse_deg,
        metrics.attitude_rmse_final_third_deg,
        metrics.rmm_rmse,
        metrics.mean_innovation * 1e9
    );
    Ok(DemoRun {
        t: run.filter.iter().map(|f| f.t).collect(),
        err_angle_deg: run.err_angle_deg.clone(),
        m_true: run
            .truth
            .iter()
            .flat_map(|s| s.m.iter().copied().collect::<Vec<_>>())
            .collect(),
        m_est: run
            .filter
            .iter()
            .flat_map(|f| f.m_hat.iter().copied().collect::<Vec<_>>())
            .collect(),
        innovation_nt: run.filter.iter().map(|f| f.innovation.norm() * 1e9).collect(),
        b_body_nt: run.filter.iter().map(|f| f.measurement.norm() * 1e9).collect(),
        summary,
    })
}

#[wasm_bindgen]
pub fn field_map(date: f64, altitude_km: f64, n_lat: usize, n_lon: usize) -> Result<Vec<f64>, JsError> {
    field_map_grid(date, altitude_km, n_lat, n_lon).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn orbit_field(altitude_km: f64, inclination_deg: f64, duration_s: f64, step_s: f64) -> Result<Vec<f64>, JsError> {
    orbit_field_series(altitude_km, inclination_deg, duration_s, step_s).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn field_point(lat_deg: f64, lon_deg: f64, altitude_km: f64, date: f64) -> Result<Vec<f64>, JsError> {
    field_at_point(lat_deg, lon_deg, altitude_km, date).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn run_estimation(variant: &str, seed: u32, duration_s: f64, q_m: f64) -> Result<DemoRun, JsError> {
    demo_run(variant, seed, duration_s, q_m).map_err(|e| JsError::new(&e))
}
