//! End-to-end runs: truth propagation, magnetometer sampling, filtering.

use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::attitude::{attitude_error_angle, Quaternion, Vec3};
use crate::dynamics::{rk4_step, rmm_walk_step, sample_magnetometer, RigidBody, TruthState};
use crate::estimator::{run_filter, FilterConfig, FilterRecord, FilterState, FilterVariant, Measurement};
use crate::geomag::{load_igrf_coefficients, GeomagCoefficients, ReferenceField};
use crate::orbit::orbital_rate;

use super::{HarnessError, ScenarioConfig};

const SENSOR_STREAM: u64 = 1;
const WALK_STREAM: u64 = 2;
const INIT_STREAM: u64 = 3;

/// Independent generator for one purpose within a seeded run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn bundled_igrf() -> Arc<GeomagCoefficients> {
    static TABLE: OnceLock<Arc<GeomagCoefficients>> = OnceLock::new();
    TABLE.get_or_init(|| Arc::new(GeomagCoefficients::igrf13())).clone()
}

/// Loads the configured coefficient table, or the bundled one.
pub fn load_coefficients(cfg: &ScenarioConfig) -> Result<Arc<GeomagCoefficients>, HarnessError> {
    match &cfg.igrf_file {
        None => Ok(bundled_igrf()),
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            let coeffs =
                load_igrf_coefficients(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            Ok(Arc::new(coeffs))
        }
    }
}

/// Field provider, rigid body and orbital rate shared by truth and filter.
#[derive(Debug, Clone)]
pub struct Environment {
    pub field: ReferenceField,
    pub body: RigidBody,
    pub omega0: f64,
}

impl Environment {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let coeffs = load_coefficients(cfg)?;
        let field = ReferenceField::new(coeffs, cfg.orbit).map_err(|e| HarnessError::Config(e.to_string()))?;
        let body = RigidBody::new(&cfg.params).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(Environment {
            field,
            body,
            omega0: orbital_rate(&cfg.orbit),
        })
    }

    pub fn field_at(&self, t: f64) -> Vec3 {
        self.field.at(t)
    }
}

/// Truth sampled at the measurement epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRun {
    pub states: Vec<TruthState>,
    /// Orbital-frame reference field, T.
    pub b_orbital: Vec<Vec3>,
    pub measurements: Vec<Measurement>,
}

impl TruthRun {
    /// SHA-256 over the bit patterns of the measurement stream.
    pub fn stream_hash(&self) -> String {
        hash_measurements(&self.measurements)
    }
}

pub fn hash_measurements(measurements: &[Measurement]) -> String {
    let mut h = Sha256::new();
    for m in measurements {
        h.update(m.t.to_le_bytes());
        for c in m.b_body.iter() {
            h.update(c.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Initial truth state from the configuration.
pub fn initial_truth(cfg: &ScenarioConfig, omega0: f64) -> TruthState {
    let q = Quaternion::from_array(cfg.initial.q).normalize();
    let omega = match cfg.initial.omega_ib_b {
        Some(w) => Vec3::from(w),
        None => q.to_dcm() * Vec3::new(0.0, -omega0, 0.0),
    };
    TruthState {
        q,
        omega_ib_b: omega,
        m: Vec3::from(cfg.rmm_walk.m0),
        t: 0.0,
    }
}

/// Propagates the truth at `truth_dt` and samples the magnetometer every
/// `sensor.sample_dt`, starting at t = 0.
pub fn simulate_truth(cfg: &ScenarioConfig, env: &Environment) -> Result<TruthRun, HarnessError> {
    let substeps = cfg.substeps_per_sample()?;
    let n = cfg.sample_count();
    let mut sensor_rng = stream_rng(cfg.seed, SENSOR_STREAM);
    let mut walk_rng = stream_rng(cfg.seed, WALK_STREAM);
    let field = |t: f64| env.field_at(t);

    let mut state = initial_truth(cfg, env.omega0);
    let mut out = TruthRun {
        states: Vec::with_capacity(n + 1),
        b_orbital: Vec::with_capacity(n + 1),
        measurements: Vec::with_capacity(n + 1),
    };
    for k in 0..=n {
        if k > 0 {
            for j in 1..=substeps {
                state = rk4_step(&state, cfg.truth_dt, &field, &env.body, env.omega0, &Vec3::zeros());
                state.m = rmm_walk_step(&state.m, cfg.truth_dt, &cfg.rmm_walk, &mut walk_rng);
                // Pin epochs to the grid so timestamps do not accumulate rounding.
                state.t = ((k - 1) * substeps + j) as f64 * cfg.truth_dt;
            }
            state.t = k as f64 * cfg.sensor.sample_dt;
        }
        if !(state.q.is_finite() && state.omega_ib_b.iter().all(|x| x.is_finite())) {
            return Err(HarnessError::Numerical {
                label: cfg.label.clone(),
                message: format!("truth state became non-finite at t = {} s", state.t),
            });
        }
        let b_o = env.field_at(state.t);
        let b_b = sample_magnetometer(&state.q, &b_o, &cfg.sensor, &mut sensor_rng);
        out.states.push(state);
        out.b_orbital.push(b_o);
        out.measurements.push(Measurement {
            t: state.t,
            b_body: b_b,
        });
    }
    Ok(out)
}

/// Filter initial estimate: truth perturbed by the configured spreads.
pub fn initial_estimate(cfg: &ScenarioConfig, truth0: &TruthState) -> (Quaternion, Vec3) {
    let mut rng = stream_rng(cfg.seed, INIT_STREAM);
    let mut draw = |sigma: f64| {
        let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        Vec3::from(v) * sigma
    };
    let phi = draw(cfg.init_error.attitude_sigma);
    let dw = draw(cfg.init_error.rate_sigma);
    let q_hat = (Quaternion::from_rotation_vector(phi) * truth0.q).normalize();
    (q_hat, truth0.omega_ib_b + dw)
}

/// Truth and filter output aligned per measurement epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub label: String,
    pub variant: FilterVariant,
    pub truth: Vec<TruthState>,
    pub b_orbital: Vec<Vec3>,
    pub filter: Vec<FilterRecord>,
    /// Angle of `q_true ⊗ q̂⁻¹`, deg.
    pub err_angle_deg: Vec<f64>,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.filter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filter.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.variant.dim()
    }
}

/// Runs the filter in `filter_cfg` over an existing truth run.
pub fn estimate_on(
    cfg: &ScenarioConfig,
    filter_cfg: &FilterConfig,
    env: &Environment,
    truth: &TruthRun,
) -> Result<RunRecord, HarnessError> {
    let field = |t: f64| env.field_at(t);
    let start = truth
        .states
        .first()
        .copied()
        .unwrap_or_else(|| initial_truth(cfg, env.omega0));
    let (q_hat, omega_hat) = initial_estimate(cfg, &start);
    let initial = FilterState::new(filter_cfg, q_hat, omega_hat, start.t);
    let records = run_filter(&truth.measurements, &field, filter_cfg, &env.body, env.omega0, initial).map_err(|e| {
        HarnessError::Numerical {
            label: cfg.label.clone(),
            message: format!(
                "{e} (last valid record: {})",
                e.last_valid_index.map_or("none".to_string(), |i| i.to_string())
            ),
        }
    })?;
    let err_angle_deg = truth
        .states
        .iter()
        .zip(&records)
        .map(|(s, r)| attitude_error_angle(s.q, r.q_hat).to_degrees())
        .collect();
    Ok(RunRecord {
        label: cfg.label.clone(),
        variant: filter_cfg.variant,
        truth: truth.states.clone(),
        b_orbital: truth.b_orbital.clone(),
        filter: records,
        err_angle_deg,
    })
}

/// Truth simulation followed by the configured filter.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunRecord, HarnessError> {
    let env = Environment::new(cfg)?;
    let truth = simulate_truth(cfg, &env)?;
    estimate_on(cfg, &cfg.filter, &env, &truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(duration: f64) -> ScenarioConfig {
        ScenarioConfig {
            duration,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn zero_duration_keeps_initial_epoch_only() {
        let r = run_scenario(&short(0.0)).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.truth[0].t, 0.0);
        assert_eq!(r.truth[0].m, Vec3::from(ScenarioConfig::default().rmm_walk.m0));
    }

    #[test]
    fn epochs_on_sample_grid() {
        let cfg = short(20.0);
        let env = Environment::new(&cfg).unwrap();
        let truth = simulate_truth(&cfg, &env).unwrap();
        assert_eq!(truth.measurements.len(), 21);
        for (k, m) in truth.measurements.iter().enumerate() {
            assert_eq!(m.t, k as f64);
        }
    }

    #[test]
    fn same_seed_same_stream_different_seed_differs() {
        let cfg = short(30.0);
        let env = Environment::new(&cfg).unwrap();
        let a = simulate_truth(&cfg, &env).unwrap();
        let b = simulate_truth(&cfg, &env).unwrap();
        assert_eq!(a, b);
        let c = simulate_truth(&ScenarioConfig { seed: 2, ..cfg }, &env).unwrap();
        assert_ne!(a.stream_hash(), c.stream_hash());
    }

    #[test]
    fn zero_init_spread_starts_on_truth() {
        let mut cfg = short(0.0);
        cfg.init_error.attitude_sigma = 0.0;
        cfg.init_error.rate_sigma = 0.0;
        let s = initial_truth(&cfg, 1e-3);
        let (q, w) = initial_estimate(&cfg, &s);
        assert!(attitude_error_angle(s.q, q) < 1e-12);
        assert_eq!(w, s.omega_ib_b);
    }

    #[test]
    fn default_start_is_orbit_synchronous() {
        let cfg = short(0.0);
        let s = initial_truth(&cfg, 1.1e-3);
        let w_ob = crate::dynamics::omega_orbital_relative(&s.q, &s.omega_ib_b, 1.1e-3);
        assert!(w_ob.norm() < 1e-18);
    }

    #[test]
    fn missing_coefficient_file_is_config_error() {
        let cfg = ScenarioConfig {
            igrf_file: Some("/nonexistent/igrf.txt".into()),
            ..short(1.0)
        };
        let err = Environment::new(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("/nonexistent/igrf.txt"));
    }
}
