//! Seeded Monte Carlo campaigns and paired six- versus nine-state
//! comparisons on shared truth.

use rayon::prelude::*;

use crate::estimator::{FilterConfig, FilterVariant};

use super::metrics::{compute_metrics, Metrics};
use super::run::{estimate_on, hash_measurements, simulate_truth, Environment};
use super::{HarnessError, ScenarioConfig};

/// Trials whose final-third attitude RMSE exceeds this are flagged diverged.
pub const DIVERGENCE_RMSE_DEG: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub metrics: Option<Metrics>,
    pub diverged: bool,
    pub failure: Option<String>,
}

impl TrialOutcome {
    fn from_result(result: Result<Metrics, HarnessError>) -> Self {
        match result {
            Ok(m) => {
                let diverged = !m.is_finite() || m.attitude_rmse_final_third_deg > DIVERGENCE_RMSE_DEG;
                TrialOutcome {
                    metrics: Some(m),
                    diverged,
                    failure: None,
                }
            }
            Err(e) => TrialOutcome {
                metrics: None,
                diverged: true,
                failure: Some(e.to_string()),
            },
        }
    }

    /// Metrics of a non-diverged trial.
    pub fn usable(&self) -> Option<&Metrics> {
        if self.diverged {
            None
        } else {
            self.metrics.as_ref()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub seed: u64,
    pub outcome: TrialOutcome,
}

/// Mean and sample standard deviation per metric over non-diverged trials.
/// Non-finite values (a run that never converged) are left out per metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub mean: [f64; 14],
    pub std: [f64; 14],
    pub used: usize,
    pub diverged: Vec<usize>,
}

impl Aggregate {
    pub fn from_outcomes<'a>(outcomes: impl Iterator<Item = (usize, &'a TrialOutcome)>) -> Self {
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); 14];
        let mut used = 0;
        let mut diverged = Vec::new();
        for (index, o) in outcomes {
            match o.usable() {
                Some(m) => {
                    used += 1;
                    for (col, v) in columns.iter_mut().zip(m.scalars()) {
                        if v.is_finite() {
                            col.push(v);
                        }
                    }
                }
                None => diverged.push(index),
            }
        }
        let mut mean = [f64::NAN; 14];
        let mut std = [f64::NAN; 14];
        for (k, col) in columns.iter().enumerate() {
            if col.is_empty() {
                continue;
            }
            let n = col.len() as f64;
            let mu = col.iter().sum::<f64>() / n;
            mean[k] = mu;
            std[k] = if col.len() > 1 {
                (col.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
        }
        Aggregate {
            mean,
            std,
            used,
            diverged,
        }
    }

    pub fn mean_of(&self, name: &str) -> f64 {
        Metrics::NAMES
            .iter()
            .position(|n| *n == name)
            .map_or(f64::NAN, |k| self.mean[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub trials: Vec<Trial>,
    pub aggregate: Aggregate,
}

fn trial_config(cfg: &ScenarioConfig, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        seed,
        label: format!("{}#{seed}", cfg.label),
        ..cfg.clone()
    }
}

fn check_trials(n_trials: usize) -> Result<(), HarnessError> {
    if n_trials == 0 {
        return Err(HarnessError::Config("trial count must be at least 1".into()));
    }
    Ok(())
}

/// Runs `n_trials` seeded scenarios (seeds `seed0 + i`) in parallel.
pub fn monte_carlo(cfg: &ScenarioConfig, n_trials: usize, seed0: u64) -> Result<MonteCarloResult, HarnessError> {
    check_trials(n_trials)?;
    let env = Environment::new(cfg)?;
    let trials: Vec<Trial> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let seed = seed0.wrapping_add(i as u64);
            let tc = trial_config(cfg, seed);
            let result = simulate_truth(&tc, &env)
                .and_then(|truth| estimate_on(&tc, &tc.filter, &env, &truth))
                .and_then(|r| compute_metrics(&r, tc.convergence_threshold_deg));
            Trial {
                index: i,
                seed,
                outcome: TrialOutcome::from_result(result),
            }
        })
        .collect();
    let aggregate = Aggregate::from_outcomes(trials.iter().map(|t| (t.index, &t.outcome)));
    Ok(MonteCarloResult { trials, aggregate })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedTrial {
    pub index: usize,
    pub seed: u64,
    /// SHA-256 of the measurement stream given to both filters.
    pub stream_hash: String,
    pub six: TrialOutcome,
    pub nine: TrialOutcome,
    /// Six-state minus nine-state final-third attitude RMSE, deg; NaN when
    /// either diverged.
    pub rmse_diff_deg: f64,
    pub nine_wins: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub pairs: Vec<PairedTrial>,
    pub six: Aggregate,
    pub nine: Aggregate,
    /// Fraction of all pairs won by the nine-state filter.
    pub win_rate: f64,
}

impl Comparison {
    pub fn summary(&self) -> String {
        let key = "attitude_rmse_final_third_deg";
        format!(
            "nine-state wins {}/{} pairs ({:.0}%); final-third attitude RMSE six-state {:.3} deg, nine-state {:.3} deg; nine-state final-third RMM RMSE {:.4} A m^2; diverged six/nine: {}/{}",
            self.pairs.iter().filter(|p| p.nine_wins).count(),
            self.pairs.len(),
            100.0 * self.win_rate,
            self.six.mean_of(key),
            self.nine.mean_of(key),
            self.nine.mean_of("rmm_rmse_final_third"),
            self.six.diverged.len(),
            self.nine.diverged.len(),
        )
    }
}

/// Runs both filter variants on each seeded truth realization.
pub fn compare_variants(cfg: &ScenarioConfig, n_trials: usize, seed0: u64) -> Result<Comparison, HarnessError> {
    check_trials(n_trials)?;
    let env = Environment::new(cfg)?;
    let six_cfg = FilterConfig {
        variant: FilterVariant::SixState,
        ..cfg.filter.clone()
    };
    let nine_cfg = FilterConfig {
        variant: FilterVariant::NineState,
        ..cfg.filter.clone()
    };
    let pairs: Vec<PairedTrial> = (0..n_trials)
        .into_par_iter()
        .map(|i| -> Result<PairedTrial, HarnessError> {
            let seed = seed0.wrapping_add(i as u64);
            let tc = trial_config(cfg, seed);
            let truth = simulate_truth(&tc, &env)?;
            let run = |fc: &FilterConfig| {
                let hash = hash_measurements(&truth.measurements);
                let outcome = TrialOutcome::from_result(
                    estimate_on(&tc, fc, &env, &truth).and_then(|r| compute_metrics(&r, tc.convergence_threshold_deg)),
                );
                (hash, outcome)
            };
            let (hash_six, six) = run(&six_cfg);
            let (hash_nine, nine) = run(&nine_cfg);
            if hash_six != hash_nine {
                return Err(HarnessError::Numerical {
                    label: tc.label.clone(),
                    message: "paired filters saw different measurement streams".into(),
                });
            }
            let (rmse_diff_deg, nine_wins) = match (six.usable(), nine.usable()) {
                (Some(a), Some(b)) => (
                    a.attitude_rmse_final_third_deg - b.attitude_rmse_final_third_deg,
                    b.attitude_rmse_final_third_deg < a.attitude_rmse_final_third_deg,
                ),
                (None, Some(_)) => (f64::NAN, true),
                _ => (f64::NAN, false),
            };
            Ok(PairedTrial {
                index: i,
                seed,
                stream_hash: hash_six,
                six,
                nine,
                rmse_diff_deg,
                nine_wins,
            })
        })
        .collect::<Result<_, _>>()?;
    let six = Aggregate::from_outcomes(pairs.iter().map(|p| (p.index, &p.six)));
    let nine = Aggregate::from_outcomes(pairs.iter().map(|p| (p.index, &p.nine)));
    let win_rate = pairs.iter().filter(|p| p.nine_wins).count() as f64 / pairs.len() as f64;
    Ok(Comparison {
        pairs,
        six,
        nine,
        win_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> ScenarioConfig {
        ScenarioConfig {
            duration: 60.0,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn zero_trials_rejected() {
        assert_eq!(monte_carlo(&short(), 0, 1).unwrap_err().exit_code(), 1);
        assert!(compare_variants(&short(), 0, 1).is_err());
    }

    #[test]
    fn single_trial_aggregate_is_the_trial() {
        let r = monte_carlo(&short(), 1, 5).unwrap();
        let m = r.trials[0].outcome.metrics.as_ref().unwrap();
        for (a, b) in r.aggregate.mean.iter().zip(m.scalars()) {
            assert!(a == &b || (a.is_nan() && b.is_nan()));
        }
        assert!(r.aggregate.std.iter().all(|s| *s == 0.0 || s.is_nan()));
    }

    #[test]
    fn repeated_campaigns_identical() {
        let a = monte_carlo(&short(), 3, 11).unwrap();
        let b = monte_carlo(&short(), 3, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials[2].seed, 13);
    }

    #[test]
    fn one_pair_comparison() {
        let c = compare_variants(&short(), 1, 3).unwrap();
        assert_eq!(c.pairs.len(), 1);
        assert_eq!(c.pairs[0].stream_hash.len(), 64);
        assert!(c.summary().contains("1 pairs"));
    }

    #[test]
    fn aggregate_skips_diverged() {
        let failed = TrialOutcome::from_result(Err(HarnessError::Config("x".into())));
        assert!(failed.diverged);
        let agg = Aggregate::from_outcomes([(0usize, &failed)].into_iter());
        assert_eq!(agg.used, 0);
        assert_eq!(agg.diverged, vec![0]);
        assert!(agg.mean[0].is_nan());
    }
}
