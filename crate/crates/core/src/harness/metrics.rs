//! Run metrics: RMSEs, innovation statistics, NEES and convergence time.

use nalgebra::{DMatrix, DVector};

use crate::attitude::error_quaternion;
use crate::estimator::FilterVariant;

use super::{HarnessError, RunRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub epochs: usize,
    /// Attitude error RMSE, deg.
    pub attitude_rmse_deg: f64,
    pub attitude_rmse_final_third_deg: f64,
    pub max_attitude_error_deg: f64,
    /// RMS of `|ω − ω̂|`, rad/s.
    pub rate_rmse: f64,
    pub rate_rmse_final_third: f64,
    /// RMS of `|m − m̂|`, A·m².
    pub rmm_rmse: f64,
    pub rmm_rmse_final_third: f64,
    /// Mean `|ΔB|` and mean `|B_b|`, T.
    pub mean_innovation: f64,
    pub mean_b_body: f64,
    pub mean_innovation_final_third: f64,
    pub mean_b_body_final_third: f64,
    /// Mean NEES over epochs with a factorizable covariance.
    pub nees_mean: f64,
    pub nees_skipped: usize,
    /// First time after which the attitude error stays below the threshold.
    pub convergence_time: Option<f64>,
}

impl Metrics {
    pub const NAMES: [&'static str; 14] = [
        "attitude_rmse_deg",
        "attitude_rmse_final_third_deg",
        "max_attitude_error_deg",
        "rate_rmse",
        "rate_rmse_final_third",
        "rmm_rmse",
        "rmm_rmse_final_third",
        "mean_innovation",
        "mean_b_body",
        "mean_innovation_final_third",
        "mean_b_body_final_third",
        "nees_mean",
        "nees_skipped",
        "convergence_time",
    ];

    /// Values in [`Metrics::NAMES`] order; a run that never converges
    /// reports NaN convergence time.
    pub fn scalars(&self) -> [f64; 14] {
        [
            self.attitude_rmse_deg,
            self.attitude_rmse_final_third_deg,
            self.max_attitude_error_deg,
            self.rate_rmse,
            self.rate_rmse_final_third,
            self.rmm_rmse,
            self.rmm_rmse_final_third,
            self.mean_innovation,
            self.mean_b_body,
            self.mean_innovation_final_third,
            self.mean_b_body_final_third,
            self.nees_mean,
            self.nees_skipped as f64,
            self.convergence_time.unwrap_or(f64::NAN),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.scalars()[..13].iter().all(|x| x.is_finite())
    }
}

fn rms(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// `eᵀ P⁻¹ e`, or `None` when `P` is not positive definite.
pub fn nees(error: &DVector<f64>, p: &DMatrix<f64>) -> Option<f64> {
    let chol = p.clone().cholesky()?;
    let v = error.dot(&chol.solve(error));
    v.is_finite().then_some(v)
}

/// First index of the final third.
pub fn final_third_start(n: usize) -> usize {
    2 * n / 3
}

pub fn compute_metrics(r: &RunRecord, convergence_threshold_deg: f64) -> Result<Metrics, HarnessError> {
    let n = r.len();
    if n == 0 || r.truth.len() != n || r.err_angle_deg.len() != n {
        return Err(HarnessError::Config(format!(
            "cannot compute metrics for run '{}': {} filter records, {} truth states",
            r.label,
            n,
            r.truth.len()
        )));
    }
    let k0 = final_third_start(n);
    let rate_err = |i: usize| (r.truth[i].omega_ib_b - r.filter[i].omega_hat).norm();
    let rmm_err = |i: usize| (r.truth[i].m - r.filter[i].m_hat).norm();
    let innov = |i: usize| r.filter[i].innovation.norm();
    let bmag = |i: usize| r.filter[i].measurement.norm();

    let mut nees_sum = 0.0;
    let mut nees_used = 0usize;
    for (s, f) in r.truth.iter().zip(&r.filter) {
        let dq = error_quaternion(s.q, f.q_hat);
        let dq = if dq.q4 < 0.0 { -dq } else { dq };
        let dw = s.omega_ib_b - f.omega_hat;
        let mut e = vec![dq.q1, dq.q2, dq.q3, dw.x, dw.y, dw.z];
        if r.variant == FilterVariant::NineState {
            let dm = s.m - f.m_hat;
            e.extend([dm.x, dm.y, dm.z]);
        }
        if let Some(v) = nees(&DVector::from_vec(e), &f.covariance) {
            nees_sum += v;
            nees_used += 1;
        }
    }

    let convergence_time = match r.err_angle_deg.iter().rposition(|&e| !(e < convergence_threshold_deg)) {
        None => Some(r.filter[0].t),
        Some(last_bad) if last_bad + 1 < n => Some(r.filter[last_bad + 1].t),
        Some(_) => None,
    };

    Ok(Metrics {
        epochs: n,
        attitude_rmse_deg: rms(r.err_angle_deg.iter().copied()),
        attitude_rmse_final_third_deg: rms(r.err_angle_deg[k0..].iter().copied()),
        max_attitude_error_deg: r.err_angle_deg.iter().copied().fold(0.0, f64::max),
        rate_rmse: rms((0..n).map(rate_err)),
        rate_rmse_final_third: rms((k0..n).map(rate_err)),
        rmm_rmse: rms((0..n).map(rmm_err)),
        rmm_rmse_final_third: rms((k0..n).map(rmm_err)),
        mean_innovation: mean((0..n).map(innov)),
        mean_b_body: mean((0..n).map(bmag)),
        mean_innovation_final_third: mean((k0..n).map(innov)),
        mean_b_body_final_third: mean((k0..n).map(bmag)),
        nees_mean: if nees_used > 0 {
            nees_sum / nees_used as f64
        } else {
            f64::NAN
        },
        nees_skipped: n - nees_used,
        convergence_time,
    })
}
