//! Metrics and the three experiment harnesses: per-building report, forecast
//! horizon study, and training-size ablation, plus overlay plot data.
//!
//! R-squared is affine invariant, so it is reported once; MAE is reported in
//! both normalized units and Wh because the two differ by the fitted energy
//! range.

use crate::align::AlignedDataset;
use crate::features::chronological_split;
use crate::pipeline::{
    predict_pairs, train_on_range, train_pipeline, PipelineConfig, PipelineError, PredictionPair,
    DEFAULT_SPLIT,
};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("target variance is zero")]
    ZeroVarianceTarget,
    #[error("need at least two points")]
    TooShort,
    #[error("span {0} exceeds the available test rows")]
    SpanExceedsData(String),
    #[error("training length {0} exceeds the available training rows")]
    LengthExceedsData(String),
    #[error("requested {k} overlay rows but only {available} are available")]
    KTooLarge { k: usize, available: usize },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Coefficient of determination: `1 - sum((y - yhat)^2) / sum((y - mean)^2)`.
pub fn r2(y: &[f64], yhat: &[f64]) -> Result<f64, EvalError> {
    if y.len() != yhat.len() {
        return Err(EvalError::LengthMismatch(y.len(), yhat.len()));
    }
    if y.len() < 2 {
        return Err(EvalError::TooShort);
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(EvalError::ZeroVarianceTarget);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Mean absolute error: `mean(|y - yhat|)`.
pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64, EvalError> {
    if y.len() != yhat.len() {
        return Err(EvalError::LengthMismatch(y.len(), yhat.len()));
    }
    if y.is_empty() {
        return Err(EvalError::TooShort);
    }
    Ok(y.iter().zip(yhat).map(|(a, p)| (a - p).abs()).sum::<f64>() / y.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    pub label: String,
    pub r2: f64,
    pub mae_norm: f64,
    pub mae_wh: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub entries: Vec<EvalEntry>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,r2,mae_norm,mae_wh\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{}\n", e.label, e.r2, e.mae_norm, e.mae_wh));
        }
        out
    }
}

fn entry_from_pairs(label: &str, pairs: &[PredictionPair]) -> Result<EvalEntry, EvalError> {
    let actual_n: Vec<f64> = pairs.iter().map(|p| p.actual_norm).collect();
    let pred_n: Vec<f64> = pairs.iter().map(|p| p.predicted_norm).collect();
    let actual_wh: Vec<f64> = pairs.iter().map(|p| p.actual_wh).collect();
    let pred_wh: Vec<f64> = pairs.iter().map(|p| p.predicted_wh).collect();
    Ok(EvalEntry {
        label: label.to_string(),
        r2: r2(&actual_n, &pred_n)?,
        mae_norm: mae(&actual_n, &pred_n)?,
        mae_wh: mae(&actual_wh, &pred_wh)?,
    })
}

/// Evaluate a trained model over one row range as a single labelled entry.
pub fn evaluate_range(
    artifact: &crate::models::ModelArtifact,
    data: &AlignedDataset,
    range: Range<usize>,
    label: &str,
) -> Result<EvalEntry, EvalError> {
    let pairs = predict_pairs(artifact, data, range)?;
    entry_from_pairs(label, &pairs)
}

/// Default horizon spans in seconds, longest last.
pub fn default_horizon_spans() -> Vec<(String, i64)> {
    vec![
        ("1_day".into(), 86_400),
        ("1_week".into(), 7 * 86_400),
        ("1_month".into(), 30 * 86_400),
        ("6_months".into(), 182 * 86_400),
        ("1_year".into(), 365 * 86_400),
    ]
}

/// Default training-size ablation lengths in seconds, longest first.
pub fn default_ablation_lengths() -> Vec<(String, i64)> {
    vec![
        ("1_year".into(), 365 * 86_400),
        ("6_months".into(), 182 * 86_400),
        ("3_months".into(), 91 * 86_400),
        ("2_months".into(), 61 * 86_400),
        ("1_month".into(), 30 * 86_400),
    ]
}

/// Evaluate one trained model on the first span-worth of test rows, per span.
pub fn horizon_report(
    artifact: &crate::models::ModelArtifact,
    data: &AlignedDataset,
    test_range: Range<usize>,
    spans: &[(String, i64)],
) -> Result<EvalReport, EvalError> {
    let mut entries = Vec::with_capacity(spans.len());
    for (label, secs) in spans {
        let rows = (*secs / data.grid_interval) as usize;
        if rows > test_range.len() || rows == 0 {
            return Err(EvalError::SpanExceedsData(label.clone()));
        }
        let span_range = test_range.start..test_range.start + rows;
        entries.push(evaluate_range(artifact, data, span_range, label)?);
    }
    Ok(EvalReport { entries })
}

/// Retrain with shrinking training windows that end where training data ends,
/// always evaluating on the unchanged test split.
pub fn ablation_report(
    data: &AlignedDataset,
    cfg: &PipelineConfig,
    lengths: &[(String, i64)],
) -> Result<EvalReport, EvalError> {
    let split = chronological_split(data.rows.len(), DEFAULT_SPLIT)
        .map_err(PipelineError::Feature)?;
    let mut entries = Vec::with_capacity(lengths.len());
    for (label, secs) in lengths {
        let rows = (*secs / data.grid_interval) as usize;
        if rows > split.train.len() || rows == 0 {
            return Err(EvalError::LengthExceedsData(label.clone()));
        }
        let train_range = split.train.end - rows..split.train.end;
        let artifact = train_on_range(data, cfg, train_range)?;
        entries.push(evaluate_range(&artifact, data, split.test.clone(), label)?);
    }
    Ok(EvalReport { entries })
}

/// Train and evaluate per building; append the arithmetic average row.
pub fn building_report(
    buildings: &[(String, AlignedDataset)],
    cfg: &PipelineConfig,
) -> Result<EvalReport, EvalError> {
    let mut entries = Vec::with_capacity(buildings.len() + 1);
    for (name, data) in buildings {
        let (artifact, split) = train_pipeline(data, cfg)?;
        entries.push(evaluate_range(&artifact, data, split.test, name)?);
    }
    if entries.is_empty() {
        return Err(EvalError::TooShort);
    }
    let n = entries.len() as f64;
    let avg = EvalEntry {
        label: "average".into(),
        r2: entries.iter().map(|e| e.r2).sum::<f64>() / n,
        mae_norm: entries.iter().map(|e| e.mae_norm).sum::<f64>() / n,
        mae_wh: entries.iter().map(|e| e.mae_wh).sum::<f64>() / n,
    };
    entries.push(avg);
    Ok(EvalReport { entries })
}

/// Actual-vs-predicted rows for the first `k` evaluable test rows
/// (300 rows = 50 hours at the 10-minute grid).
pub const DEFAULT_OVERLAY_ROWS: usize = 300;

pub fn forecast_overlay(
    artifact: &crate::models::ModelArtifact,
    data: &AlignedDataset,
    test_range: Range<usize>,
    k: usize,
) -> Result<Vec<PredictionPair>, EvalError> {
    let pairs = predict_pairs(artifact, data, test_range)?;
    if k == 0 || k > pairs.len() {
        return Err(EvalError::KTooLarge {
            k,
            available: pairs.len(),
        });
    }
    Ok(pairs[..k].to_vec())
}

/// Overlay CSV: `timestamp,actual_wh,predicted_wh`.
pub fn overlay_csv(pairs: &[PredictionPair]) -> String {
    let mut out = String::from("timestamp,actual_wh,predicted_wh\n");
    for p in pairs {
        let dt = DateTime::<Utc>::from_timestamp(p.timestamp, 0).expect("valid timestamp");
        out.push_str(&format!(
            "{},{},{}\n",
            dt.format("%Y-%m-%dT%H:%M:%SZ"),
            p.actual_wh,
            p.predicted_wh
        ));
    }
    out
}

/// MAE bar-chart CSV: `building,model,mae_norm`.
pub fn mae_bar_csv(rows: &[(String, String, f64)]) -> String {
    let mut out = String::from("building,model,mae_norm\n");
    for (building, model, mae_norm) in rows {
        out.push_str(&format!("{building},{model},{mae_norm}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{synth_fused, BuildingKind, BuildingProfile};
    use crate::pipeline::ModelSpec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn r2_trivial_cases() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r2(&y, &y).unwrap(), 1.0);
        let mean = [2.0, 2.0, 2.0];
        assert_abs_diff_eq!(r2(&y, &mean).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r2(&[0.0, 1.0], &[0.0, 0.5]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn r2_error_cases() {
        assert_eq!(r2(&[1.0], &[1.0]), Err(EvalError::TooShort));
        assert_eq!(r2(&[1.0, 1.0], &[1.0, 2.0]), Err(EvalError::ZeroVarianceTarget));
        assert_eq!(r2(&[1.0, 2.0], &[1.0]), Err(EvalError::LengthMismatch(2, 1)));
    }

    #[test]
    fn mae_hand_values() {
        assert_eq!(mae(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            mae(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-15
        );
    }

    fn trained() -> (crate::models::ModelArtifact, AlignedDataset, Range<usize>) {
        let d = synth_fused(&BuildingProfile::new(BuildingKind::Academic, 0.02), 21, 5);
        let cfg = PipelineConfig::new(ModelSpec::Ridge { alpha: 1.0 }, 42);
        let (artifact, split) = train_pipeline(&d, &cfg).unwrap();
        (artifact, d, split.test)
    }

    #[test]
    fn horizon_identity_span_matches_whole_test() {
        let (artifact, d, test) = trained();
        let whole_secs = test.len() as i64 * d.grid_interval;
        let spans = vec![("whole".to_string(), whole_secs)];
        let report = horizon_report(&artifact, &d, test.clone(), &spans).unwrap();
        let direct = evaluate_range(&artifact, &d, test, "whole").unwrap();
        assert_eq!(report.entries[0], direct);
    }

    #[test]
    fn horizon_day_span_row_count_and_nesting() {
        let (artifact, d, test) = trained();
        assert_eq!((86_400 / d.grid_interval) as usize, 144);
        let spans = vec![("1_day".to_string(), 86_400), ("2_days".to_string(), 2 * 86_400)];
        let report = horizon_report(&artifact, &d, test.clone(), &spans).unwrap();
        assert_eq!(report.entries.len(), 2);
        // Nested spans cover nested row sets: day-1 pairs prefix day-2 pairs.
        let p1 = predict_pairs(&artifact, &d, test.start..test.start + 144).unwrap();
        let p2 = predict_pairs(&artifact, &d, test.start..test.start + 288).unwrap();
        assert_eq!(&p2[..p1.len()], &p1[..]);
    }

    #[test]
    fn horizon_span_too_long() {
        let (artifact, d, test) = trained();
        let spans = vec![("1_year".to_string(), 365 * 86_400)];
        assert_eq!(
            horizon_report(&artifact, &d, test, &spans),
            Err(EvalError::SpanExceedsData("1_year".into()))
        );
    }

    #[test]
    fn ablation_produces_one_entry_per_length() {
        let d = synth_fused(&BuildingProfile::new(BuildingKind::Academic, 0.02), 21, 5);
        let cfg = PipelineConfig::new(ModelSpec::Ridge { alpha: 1.0 }, 42);
        let lengths = vec![
            ("10_days".to_string(), 10 * 86_400),
            ("5_days".to_string(), 5 * 86_400),
        ];
        let report = ablation_report(&d, &cfg, &lengths).unwrap();
        assert_eq!(report.entries.len(), 2);
        assert_eq!(report.entries[0].label, "10_days");
        let too_long = vec![("1_year".to_string(), 365 * 86_400)];
        assert_eq!(
            ablation_report(&d, &cfg, &too_long),
            Err(EvalError::LengthExceedsData("1_year".into()))
        );
    }

    #[test]
    fn building_average_is_exact_mean() {
        let cfg = PipelineConfig::new(ModelSpec::Ridge { alpha: 1.0 }, 42);
        let buildings = vec![
            (
                "acad".to_string(),
                synth_fused(&BuildingProfile::new(BuildingKind::Academic, 0.02), 14, 1),
            ),
            (
                "hostel".to_string(),
                synth_fused(&BuildingProfile::new(BuildingKind::Hostel, 0.02), 14, 2),
            ),
        ];
        let report = building_report(&buildings, &cfg).unwrap();
        assert_eq!(report.entries.len(), 3);
        let avg = report.entries.last().unwrap();
        assert_eq!(avg.label, "average");
        assert_abs_diff_eq!(
            avg.r2,
            (report.entries[0].r2 + report.entries[1].r2) / 2.0,
            epsilon = 1e-15
        );

        let single = building_report(&buildings[..1], &cfg).unwrap();
        assert_eq!(single.entries[0].r2, single.entries[1].r2);
    }

    #[test]
    fn overlay_passes_actuals_through() {
        let (artifact, d, test) = trained();
        let overlay = forecast_overlay(&artifact, &d, test.clone(), 10).unwrap();
        assert_eq!(overlay.len(), 10);
        for p in &overlay {
            let row = d.rows.iter().find(|r| r.timestamp == p.timestamp).unwrap();
            assert_eq!(p.actual_wh, row.energy);
        }
        let one = forecast_overlay(&artifact, &d, test.clone(), 1).unwrap();
        assert_eq!(one.len(), 1);
        assert!(matches!(
            forecast_overlay(&artifact, &d, test, 1_000_000),
            Err(EvalError::KTooLarge { .. })
        ));
    }

    #[test]
    fn csv_shapes() {
        let report = EvalReport {
            entries: vec![EvalEntry {
                label: "acad".into(),
                r2: 0.95,
                mae_norm: 0.01,
                mae_wh: 120.5,
            }],
        };
        assert_eq!(report.to_csv(), "label,r2,mae_norm,mae_wh\nacad,0.95,0.01,120.5\n");
        assert_eq!(
            mae_bar_csv(&[("acad".into(), "ridge".into(), 0.01)]),
            "building,model,mae_norm\nacad,ridge,0.01\n"
        );
    }

    proptest! {
        #[test]
        fn r2_affine_invariant(
            vals in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
            c in proptest::sample::select(vec![-3.0f64, 0.5, 2.0, 10.0]),
            d in -50.0f64..50.0,
        ) {
            let y: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let yhat: Vec<f64> = vals.iter().map(|v| v.1).collect();
            prop_assume!(r2(&y, &yhat).is_ok());
            let ty: Vec<f64> = y.iter().map(|v| c * v + d).collect();
            let tyhat: Vec<f64> = yhat.iter().map(|v| c * v + d).collect();
            let a = r2(&y, &yhat).unwrap();
            let b = r2(&ty, &tyhat).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn mae_triangle_bound(
            vals in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0, -100.0f64..100.0), 1..40),
        ) {
            let y: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let h: Vec<f64> = vals.iter().map(|v| v.1).collect();
            let z: Vec<f64> = vals.iter().map(|v| v.2).collect();
            let lhs = mae(&y, &z).unwrap();
            let rhs = mae(&y, &h).unwrap() + mae(&h, &z).unwrap();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn mae_homogeneous(
            vals in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..20),
            c in -5.0f64..5.0,
        ) {
            let y: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let yhat: Vec<f64> = vals.iter().map(|v| v.1).collect();
            let base = mae(&y, &yhat).unwrap();
            let sy: Vec<f64> = y.iter().map(|v| c * v).collect();
            let syhat: Vec<f64> = yhat.iter().map(|v| c * v).collect();
            let scaled = mae(&sy, &syhat).unwrap();
            prop_assert!((scaled - c.abs() * base).abs() < 1e-9);
        }
    }
}
