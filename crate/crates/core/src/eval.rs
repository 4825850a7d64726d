//! RMSE / RER metrics and the evaluation matrix over a dataset split.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::hybrid::{HybridModel, Wiring};
use crate::profile::{CurrentProfile, ProfileKind};
use crate::truth::{Dataset, AMBIENT};

/// Root-mean-square difference in millivolts.
pub fn rmse(v_true: &[f64], v_model: &[f64]) -> Result<f64, EvalError> {
    if v_true.len() != v_model.len() {
        return Err(EvalError::LengthMismatch(v_true.len(), v_model.len()));
    }
    if v_true.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(1e3 * (sum_sq(v_true, v_model) / v_true.len() as f64).sqrt())
}

fn sum_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Relative error reduction in percent; `None` when the SPMT error is zero.
pub fn rer(rmse_spmt: f64, rmse_hybrid: f64) -> Option<f64> {
    if rmse_spmt > 0.0 {
        Some((rmse_spmt - rmse_hybrid) / rmse_spmt * 100.0)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub profile: String,
    /// `None` for rows pooled over every soc0 of a profile.
    pub soc0: Option<f64>,
    pub samples: usize,
    pub rmse_spmt: f64,
    pub rmse_hybrid: f64,
    pub rer: Option<f64>,
    /// Set when the prediction failed; the metrics are then NaN.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub wiring: Wiring,
    pub split: String,
    pub model_hash: String,
    pub rows: Vec<EvalRow>,
    pub pooled: Vec<EvalRow>,
    /// Mean RER of pooled constant-current rows at 3C and above.
    pub mean_high_c_rer: Option<f64>,
    /// Mean hybrid RMSE of the same rows (mV).
    pub mean_high_c_rmse: Option<f64>,
}

/// Voltages of one evaluated (profile, soc0) pair, aligned with the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub profile: String,
    pub soc0: f64,
    pub t: Vec<f64>,
    pub v_true: Vec<f64>,
    pub v_spmt: Vec<f64>,
    pub v_hybrid: Vec<f64>,
}

impl PlotSeries {
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["t", "V_true", "V_spmt", "V_hybrid"])?;
        for k in 0..self.t.len() {
            csv.write_record([
                self.t[k].to_string(),
                self.v_true[k].to_string(),
                self.v_spmt[k].to_string(),
                self.v_hybrid[k].to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn stem(&self) -> String {
        format!("{}_soc{}", self.profile, self.soc0)
    }
}

/// C-rate of a constant-current profile.
pub fn c_rate(kind: &ProfileKind) -> Option<f64> {
    match kind {
        ProfileKind::Constant { c_rate } => Some(*c_rate),
        _ => None,
    }
}

/// The dataset's own current column as a profile.
fn replay_profile(ds: &Dataset) -> CurrentProfile {
    CurrentProfile {
        label: ds.label.clone(),
        kind: ds.profile.clone(),
        samples: ds.column(|r| r.current),
    }
}

fn evaluate_one(model: &HybridModel, ds: &Dataset) -> Result<PlotSeries, String> {
    if ds.is_empty() {
        return Err("dataset has no rows".into());
    }
    let prediction = model
        .predict(ds.soc0, &replay_profile(ds), AMBIENT, AMBIENT)
        .map_err(|e| e.to_string())?;
    let n = prediction.v_hybrid.len().min(ds.len());
    if n == 0 {
        return Err("prediction has no rows inside the voltage window".into());
    }
    Ok(PlotSeries {
        profile: ds.label.clone(),
        soc0: ds.soc0,
        t: ds.records[..n].iter().map(|r| r.t).collect(),
        v_true: ds.records[..n].iter().map(|r| r.v_true).collect(),
        v_spmt: prediction.v_spmt()[..n].to_vec(),
        v_hybrid: prediction.v_hybrid[..n].to_vec(),
    })
}

fn failed_row(profile: &str, soc0: Option<f64>, error: String) -> EvalRow {
    EvalRow {
        profile: profile.into(),
        soc0,
        samples: 0,
        rmse_spmt: f64::NAN,
        rmse_hybrid: f64::NAN,
        rer: None,
        error: Some(error),
    }
}

/// Predict every dataset with `model`, score it against the truth, and pool
/// the rows of each profile label. Failed predictions become error rows.
pub fn run_matrix(
    model: &HybridModel,
    datasets: &[Dataset],
    split: &str,
) -> (EvalReport, Vec<PlotSeries>) {
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for ds in datasets {
        match evaluate_one(model, ds) {
            Ok(s) => {
                let rmse_spmt = rmse(&s.v_true, &s.v_spmt).expect("aligned series");
                let rmse_hybrid = rmse(&s.v_true, &s.v_hybrid).expect("aligned series");
                rows.push(EvalRow {
                    profile: ds.label.clone(),
                    soc0: Some(ds.soc0),
                    samples: s.t.len(),
                    rmse_spmt,
                    rmse_hybrid,
                    rer: rer(rmse_spmt, rmse_hybrid),
                    error: None,
                });
                series.push(s);
            }
            Err(e) => rows.push(failed_row(&ds.label, Some(ds.soc0), e)),
        }
    }

    let mut labels: Vec<(&str, &ProfileKind)> = Vec::new();
    for ds in datasets {
        if !labels.iter().any(|(l, _)| *l == ds.label) {
            labels.push((&ds.label, &ds.profile));
        }
    }
    let mut pooled = Vec::new();
    let mut high_c = Vec::new();
    for (label, kind) in labels {
        let parts: Vec<&PlotSeries> = series.iter().filter(|s| s.profile == label).collect();
        let samples: usize = parts.iter().map(|s| s.t.len()).sum();
        if samples == 0 {
            pooled.push(failed_row(label, None, "no successful predictions".into()));
            continue;
        }
        let pool = |f: fn(&PlotSeries) -> &Vec<f64>| {
            let ss: f64 = parts.iter().map(|s| sum_sq(&s.v_true, f(s))).sum();
            1e3 * (ss / samples as f64).sqrt()
        };
        let rmse_spmt = pool(|s| &s.v_spmt);
        let rmse_hybrid = pool(|s| &s.v_hybrid);
        let row = EvalRow {
            profile: label.into(),
            soc0: None,
            samples,
            rmse_spmt,
            rmse_hybrid,
            rer: rer(rmse_spmt, rmse_hybrid),
            error: None,
        };
        if c_rate(kind).is_some_and(|c| c >= 3.0) {
            high_c.push(row.clone());
        }
        pooled.push(row);
    }
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let all_rer: Option<Vec<f64>> = high_c.iter().map(|r| r.rer).collect();
    let report = EvalReport {
        wiring: model.wiring,
        split: split.into(),
        model_hash: model.hash(),
        rows,
        pooled,
        mean_high_c_rer: all_rer.and_then(mean),
        mean_high_c_rmse: mean(high_c.iter().map(|r| r.rmse_hybrid).collect()),
    };
    (report, series)
}

fn two(v: f64) -> String {
    if v.is_nan() {
        "n/a".into()
    } else {
        format!("{v:.2}")
    }
}

fn opt_two(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), two)
}

impl EvalReport {
    /// Per-pair rows followed by pooled rows; metrics to two decimals.
    pub fn to_csv(&self) -> String {
        let mut csv = csv::Writer::from_writer(Vec::new());
        csv.write_record([
            "profile",
            "soc0",
            "samples",
            "rmse_spmt_mV",
            "rmse_hybrid_mV",
            "rer_pct",
            "error",
        ])
        .expect("in-memory write");
        for row in self.rows.iter().chain(&self.pooled) {
            csv.write_record([
                row.profile.clone(),
                row.soc0.map_or_else(|| "pooled".into(), |s| s.to_string()),
                row.samples.to_string(),
                two(row.rmse_spmt),
                two(row.rmse_hybrid),
                opt_two(row.rer),
                row.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(csv.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Plain-text table of the pooled rows.
    pub fn to_table(&self) -> String {
        let hybrid = match self.wiring {
            Wiring::Residual => "RMSE (HYBRID-I)",
            Wiring::Cascade => "RMSE (HYBRID-II)",
        };
        let mut out = String::new();
        let _ = writeln!(out, "{} split, {}", self.split, self.wiring);
        let _ = writeln!(
            out,
            "{:<14} {:>14} {:>17} {:>9}",
            "Input profile", "RMSE (SPMT)", hybrid, "RER (%)"
        );
        for row in &self.pooled {
            let _ = writeln!(
                out,
                "{:<14} {:>11} mV {:>14} mV {:>9}",
                row.profile,
                two(row.rmse_spmt),
                two(row.rmse_hybrid),
                opt_two(row.rer)
            );
        }
        if let Some(m) = self.mean_high_c_rer {
            let _ = writeln!(out, "mean RER over CC >= 3C: {m:.2} %");
        }
        for row in self.rows.iter().filter(|r| r.error.is_some()) {
            let _ = writeln!(
                out,
                "failed: {} soc0={}: {}",
                row.profile,
                opt_two(row.soc0),
                row.error.as_deref().unwrap_or("")
            );
        }
        out
    }

    pub fn pooled_row(&self, profile: &str) -> Option<&EvalRow> {
        self.pooled.iter().find(|r| r.profile == profile)
    }

    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.error.is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_arithmetic() {
        let v = [3.7, 3.8, 3.9];
        assert_eq!(rmse(&v, &v).unwrap(), 0.0);
        let shifted: Vec<f64> = v.iter().map(|x| x + 0.005).collect();
        assert!((rmse(&v, &shifted).unwrap() - 5.0).abs() < 1e-9);
        let r = rmse(&[0.0, 0.0], &[0.003, 0.004]).unwrap();
        assert!((r - 3.535_533_905_932_738).abs() < 1e-9);
        assert_eq!(rmse(&[1.0], &[]), Err(EvalError::LengthMismatch(1, 0)));
        assert_eq!(rmse(&[], &[]), Err(EvalError::Empty));
    }

    #[test]
    fn rer_values() {
        assert!((rer(21.59, 2.87).unwrap() - 86.71).abs() < 0.01);
        assert!((rer(10.92, 15.35).unwrap() + 40.57).abs() < 0.01);
        assert_eq!(rer(7.0, 7.0), Some(0.0));
        assert_eq!(rer(0.0, 1.0), None);
    }
}
