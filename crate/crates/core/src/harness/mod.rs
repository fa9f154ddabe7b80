//! Scenario configuration, end-to-end runs, metrics, Monte Carlo campaigns
//! and CSV export.

use thiserror::Error;

pub mod config;
pub mod csv;
pub mod metrics;
pub mod monte_carlo;
pub mod run;

pub use config::{InitErrorConfig, InitialState, ScenarioConfig};
pub use metrics::{compute_metrics, Metrics};
pub use monte_carlo::{compare_variants, monte_carlo, Comparison, MonteCarloResult};
pub use run::{run_scenario, simulate_truth, Environment, RunRecord, TruthRun};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    /// Unreadable, malformed or invalid configuration or input.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("scenario '{label}': {message}")]
    Numerical { label: String, message: String },
    /// Output could not be written.
    #[error("output error: {0}")]
    Output(String),
}

impl HarnessError {
    /// Process exit code: 1 for configuration/usage, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Numerical { .. } | HarnessError::Output(_) => 2,
        }
    }
}
