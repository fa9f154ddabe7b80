//! CSV artifacts. Floats are written with 17 significant digits so a parse
//! of the file reproduces the exported values exactly.
//!
//! Run files have `28 + N` columns for an `N`-state filter:
//!
//! ```text
//! t, q1_true..q4_true, w1_true..w3_true, m1_true..m3_true,
//! q1_est..q4_est, w1_est..w3_est, m1_est..m3_est,
//! Bb1..Bb3, innov1..innov3, Pdiag1..PdiagN, err_angle_deg
//! ```
//!
//! Truth files (`simulate`) have 17 columns:
//! `t, q1..q4, w1..w3, m1..m3, Bo1..Bo3, Bb1..Bb3`.

use std::fs::File;
use std::path::Path;

use super::metrics::Metrics;
use super::monte_carlo::{Comparison, TrialOutcome};
use super::run::{RunRecord, TruthRun};
use super::HarnessError;

/// Column count of a run file for an `n`-state filter.
pub fn run_column_count(n: usize) -> usize {
    28 + n
}

/// Numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn names(prefix: &str, range: std::ops::RangeInclusive<usize>, suffix: &str) -> Vec<String> {
    range.map(|i| format!("{prefix}{i}{suffix}")).collect()
}

pub fn run_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(names("q", 1..=4, "_true"));
    h.extend(names("w", 1..=3, "_true"));
    h.extend(names("m", 1..=3, "_true"));
    h.extend(names("q", 1..=4, "_est"));
    h.extend(names("w", 1..=3, "_est"));
    h.extend(names("m", 1..=3, "_est"));
    h.extend(names("Bb", 1..=3, ""));
    h.extend(names("innov", 1..=3, ""));
    h.extend(names("Pdiag", 1..=n, ""));
    h.push("err_angle_deg".into());
    h
}

pub fn truth_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(names("q", 1..=4, ""));
    h.extend(names("w", 1..=3, ""));
    h.extend(names("m", 1..=3, ""));
    h.extend(names("Bo", 1..=3, ""));
    h.extend(names("Bb", 1..=3, ""));
    h
}

pub fn run_table(r: &RunRecord) -> CsvTable {
    let rows = r
        .truth
        .iter()
        .zip(&r.filter)
        .zip(&r.err_angle_deg)
        .map(|((s, f), e)| {
            let mut row = vec![f.t];
            row.extend(s.q.to_array());
            row.extend(s.omega_ib_b.iter());
            row.extend(s.m.iter());
            row.extend(f.q_hat.to_array());
            row.extend(f.omega_hat.iter());
            row.extend(f.m_hat.iter());
            row.extend(f.measurement.iter());
            row.extend(f.innovation.iter());
            row.extend(&f.p_diag);
            row.push(*e);
            row
        })
        .collect();
    CsvTable {
        header: run_header(r.state_dim()),
        rows,
    }
}

pub fn truth_table(truth: &TruthRun) -> CsvTable {
    let rows = truth
        .states
        .iter()
        .zip(&truth.b_orbital)
        .zip(&truth.measurements)
        .map(|((s, bo), m)| {
            let mut row = vec![s.t];
            row.extend(s.q.to_array());
            row.extend(s.omega_ib_b.iter());
            row.extend(s.m.iter());
            row.extend(bo.iter());
            row.extend(m.b_body.iter());
            row
        })
        .collect();
    CsvTable {
        header: truth_header(),
        rows,
    }
}

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Output(format!("{}: {e}", path.display()))
}

fn writer(path: &Path) -> Result<csv::Writer<File>, HarnessError> {
    csv::WriterBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| io_err(path, e))
}

pub fn write_table(table: &CsvTable, path: &Path) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    w.write_record(&table.header).map_err(|e| io_err(path, e))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|x| format_float(*x)))
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_table(path: &Path) -> Result<CsvTable, HarnessError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| io_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| io_err(path, format!("row {}: {e}", i + 2)))?;
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

pub fn export_run_csv(r: &RunRecord, path: &Path) -> Result<(), HarnessError> {
    write_table(&run_table(r), path)
}

pub fn export_truth_csv(truth: &TruthRun, path: &Path) -> Result<(), HarnessError> {
    write_table(&truth_table(truth), path)
}

/// One row per labelled metrics set.
pub fn export_metrics_csv(rows: &[(String, Metrics)], path: &Path) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    let mut header = vec!["label", "epochs"];
    header.extend(Metrics::NAMES);
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for (label, m) in rows {
        let mut rec = vec![label.clone(), m.epochs.to_string()];
        rec.extend(m.scalars().iter().map(|x| format_float(*x)));
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn outcome_fields(o: &TrialOutcome) -> [String; 4] {
    let get = |f: fn(&Metrics) -> f64| o.metrics.as_ref().map_or(f64::NAN, f);
    [
        (o.diverged as u8).to_string(),
        format_float(get(|m| m.attitude_rmse_final_third_deg)),
        format_float(get(|m| m.rate_rmse_final_third)),
        format_float(get(|m| m.rmm_rmse_final_third)),
    ]
}

/// Paired comparison table, one row per trial.
pub fn export_comparison_csv(c: &Comparison, path: &Path) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    w.write_record([
        "trial",
        "seed",
        "six_diverged",
        "six_att_rmse_final_third_deg",
        "six_rate_rmse_final_third",
        "six_rmm_rmse_final_third",
        "nine_diverged",
        "nine_att_rmse_final_third_deg",
        "nine_rate_rmse_final_third",
        "nine_rmm_rmse_final_third",
        "att_rmse_diff_deg",
        "nine_wins",
        "stream_sha256",
    ])
    .map_err(|e| io_err(path, e))?;
    for p in &c.pairs {
        let mut rec = vec![p.index.to_string(), p.seed.to_string()];
        rec.extend(outcome_fields(&p.six));
        rec.extend(outcome_fields(&p.nine));
        rec.push(format_float(p.rmse_diff_deg));
        rec.push((p.nine_wins as u8).to_string());
        rec.push(p.stream_hash.clone());
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
