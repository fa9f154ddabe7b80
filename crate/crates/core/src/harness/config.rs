//! Scenario files: TOML with sections mirroring [`ScenarioConfig`], unknown
//! keys rejected, and dotted `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{RmmWalkConfig, SatelliteParams, SensorConfig};
use crate::estimator::FilterConfig;
use crate::orbit::OrbitConfig;

use super::HarnessError;

/// Initial truth state. Without `omega_ib_b` the body starts
/// orbit-synchronous, `ω_ib^b = A(q)(0, −ω₀, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialState {
    /// Scalar-last attitude, body relative to orbital.
    pub q: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_ib_b: Option<[f64; 3]>,
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState {
            q: [0.0, 0.0, 0.0, 1.0],
            omega_ib_b: None,
        }
    }
}

/// Spread of the filter's initial estimate around the truth, drawn per seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitErrorConfig {
    /// Per-axis rotation-vector standard deviation, rad.
    pub attitude_sigma: f64,
    /// Per-axis rate standard deviation, rad/s.
    pub rate_sigma: f64,
}

impl Default for InitErrorConfig {
    fn default() -> Self {
        InitErrorConfig {
            attitude_sigma: 0.1,
            rate_sigma: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub label: String,
    /// Simulated span, s.
    pub duration: f64,
    /// Truth integration step, s. Must divide `sensor.sample_dt`.
    pub truth_dt: f64,
    pub seed: u64,
    /// Coefficient table in the IGRF text layout; the bundled IGRF-13 table
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub igrf_file: Option<PathBuf>,
    /// Attitude error below which a run counts as converged, deg.
    pub convergence_threshold_deg: f64,
    pub orbit: OrbitConfig,
    pub params: SatelliteParams,
    pub sensor: SensorConfig,
    pub rmm_walk: RmmWalkConfig,
    pub filter: FilterConfig,
    pub initial: InitialState,
    pub init_error: InitErrorConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            label: "default".into(),
            duration: 1800.0,
            truth_dt: 0.1,
            seed: 1,
            igrf_file: None,
            convergence_threshold_deg: 5.0,
            orbit: OrbitConfig::default(),
            params: SatelliteParams::default(),
            sensor: SensorConfig::default(),
            rmm_walk: RmmWalkConfig::default(),
            filter: FilterConfig::default(),
            initial: InitialState::default(),
            init_error: InitErrorConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a scenario file and applies `key=value` overrides.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let cfg: ScenarioConfig =
            toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        cfg.with_overrides(overrides)
    }

    /// Applies dotted-path overrides such as `filter.variant=six_state`.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, HarnessError> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut root = toml::Value::try_from(self).map_err(|e| HarnessError::Config(e.to_string()))?;
        for entry in overrides {
            apply_override(&mut root, entry)?;
        }
        root.try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(format!("after overrides: {e}")))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be non-negative, got {}", self.duration));
        }
        if !(self.truth_dt > 0.0 && self.truth_dt <= 1.0) {
            return bad(format!("truth_dt must lie in (0, 1] s, got {}", self.truth_dt));
        }
        if !(self.convergence_threshold_deg > 0.0) {
            return bad("convergence_threshold_deg must be positive".into());
        }
        self.orbit.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.params
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.sensor
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.rmm_walk
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.filter
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.substeps_per_sample()?;
        let q = self.initial.q;
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !((n - 1.0).abs() <= crate::attitude::UNIT_NORM_TOLERANCE) {
            return bad(format!("initial.q must be a unit quaternion, norm is {n}"));
        }
        if !(self.init_error.attitude_sigma >= 0.0 && self.init_error.rate_sigma >= 0.0) {
            return bad("init_error sigmas must be non-negative".into());
        }
        Ok(())
    }

    /// Truth steps between magnetometer samples.
    pub fn substeps_per_sample(&self) -> Result<usize, HarnessError> {
        let ratio = self.sensor.sample_dt / self.truth_dt;
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * ratio {
            return Err(HarnessError::Config(format!(
                "sensor.sample_dt ({}) must be a whole multiple of truth_dt ({})",
                self.sensor.sample_dt, self.truth_dt
            )));
        }
        Ok(k as usize)
    }

    /// Measurement epochs after t = 0.
    pub fn sample_count(&self) -> usize {
        (self.duration / self.sensor.sample_dt + 1e-9).floor() as usize
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Integers written where the existing value is a float become floats.
fn coerce_like(existing: Option<&toml::Value>, new: toml::Value) -> toml::Value {
    use toml::Value;
    match (existing, new) {
        (Some(Value::Float(_)), Value::Integer(i)) => Value::Float(i as f64),
        (Some(Value::Array(old)), Value::Array(items)) => Value::Array(
            items
                .into_iter()
                .enumerate()
                .map(|(i, v)| coerce_like(old.get(i).or(old.first()), v))
                .collect(),
        ),
        (None, Value::Array(items)) => Value::Array(
            items
                .into_iter()
                .map(|v| match v {
                    Value::Integer(i) => Value::Float(i as f64),
                    v => v,
                })
                .collect(),
        ),
        (_, v) => v,
    }
}

fn apply_override(root: &mut toml::Value, entry: &str) -> Result<(), HarnessError> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override '{entry}' is not key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(HarnessError::Config(format!("override key '{key}' is malformed")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("override key '{key}': '{part}' is not a section")))?;
        node = table
            .get_mut(*part)
            .ok_or_else(|| HarnessError::Config(format!("override key '{key}': unknown section '{part}'")))?;
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| HarnessError::Config(format!("override key '{key}' does not name a field")))?;
    let last = parts[parts.len() - 1];
    let value = coerce_like(table.get(last), parse_override_value(raw.trim()));
    // Absent optional fields may be set; typos are rejected when the table
    // is deserialized with unknown keys denied.
    table.insert(last.to_string(), value);
    Ok(())
}
