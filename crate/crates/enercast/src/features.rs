//! Feature engineering: min-max normalization, chronological splitting,
//! calendar-matched lag features, LSTM sequence assembly, and univariate
//! feature scoring against the energy target.

use crate::align::{AlignedDataset, AlignedRow, FEATURE_NAMES};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Score cap used when a feature correlates perfectly with the target and
/// the F-statistic diverges.
pub const SCORE_CAP: f64 = 1e15;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("empty input slice")]
    EmptyInput,
    #[error("need at least {0} rows")]
    TooFewRows(usize),
    #[error("no row has enough lag history")]
    InsufficientHistory,
    #[error("window of {window} steps too long for {rows} rows")]
    WindowTooLong { window: usize, rows: usize },
    #[error("target variance is zero")]
    ZeroVarianceTarget,
    #[error("feature {0} has zero variance")]
    ZeroVariance(String),
}

/// Per-column min/max, fitted on the training slice only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub energy: (f64, f64),
    pub occupancy: (f64, f64),
    pub temperature: (f64, f64),
    pub humidity: (f64, f64),
    pub calendar: (f64, f64),
}

fn scale(x: f64, (min, max): (f64, f64)) -> f64 {
    if max == min {
        0.0
    } else {
        (x - min) / (max - min)
    }
}

fn unscale(x: f64, (min, max): (f64, f64)) -> f64 {
    if max == min {
        min
    } else {
        min + x * (max - min)
    }
}

impl NormalizationParams {
    pub fn scale_energy(&self, x: f64) -> f64 {
        scale(x, self.energy)
    }

    pub fn unscale_energy(&self, x: f64) -> f64 {
        unscale(x, self.energy)
    }
}

/// Compute per-column extremes over a slice of rows.
pub fn fit_scaler(rows: &[AlignedRow]) -> Result<NormalizationParams, FeatureError> {
    if rows.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let minmax = |f: fn(&AlignedRow) -> f64| {
        rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(f(r)), hi.max(f(r)))
        })
    };
    Ok(NormalizationParams {
        energy: minmax(|r| r.energy),
        occupancy: minmax(|r| r.occupancy),
        temperature: minmax(|r| r.temperature),
        humidity: minmax(|r| r.humidity),
        calendar: minmax(|r| r.calendar),
    })
}

/// Map every column of every row through `(x - min) / (max - min)`.
/// Values outside the fitted range map outside [0, 1]; a degenerate column
/// (max == min) maps to 0.
pub fn transform(rows: &[AlignedRow], p: &NormalizationParams) -> Vec<AlignedRow> {
    rows.iter()
        .map(|r| AlignedRow {
            timestamp: r.timestamp,
            energy: scale(r.energy, p.energy),
            occupancy: scale(r.occupancy, p.occupancy),
            temperature: scale(r.temperature, p.temperature),
            humidity: scale(r.humidity, p.humidity),
            calendar: scale(r.calendar, p.calendar),
        })
        .collect()
}

/// Exact inverse of [`transform`] for non-degenerate columns.
pub fn inverse_transform(rows: &[AlignedRow], p: &NormalizationParams) -> Vec<AlignedRow> {
    rows.iter()
        .map(|r| AlignedRow {
            timestamp: r.timestamp,
            energy: unscale(r.energy, p.energy),
            occupancy: unscale(r.occupancy, p.occupancy),
            temperature: unscale(r.temperature, p.temperature),
            humidity: unscale(r.humidity, p.humidity),
            calendar: unscale(r.calendar, p.calendar),
        })
        .collect()
}

/// Contiguous, ordered train/validation/test row ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: std::ops::Range<usize>,
    pub val: std::ops::Range<usize>,
    pub test: std::ops::Range<usize>,
}

impl SplitIndices {
    pub fn has_empty_validation(&self) -> bool {
        self.val.is_empty()
    }
}

/// Split `n` rows chronologically: `floor(r_train*n)` train, `floor(r_val*n)`
/// validation, remainder test.
pub fn chronological_split(
    n: usize,
    ratios: (f64, f64),
) -> Result<SplitIndices, FeatureError> {
    if n < 3 {
        return Err(FeatureError::TooFewRows(3));
    }
    let train = (ratios.0 * n as f64).floor() as usize;
    let val = (ratios.1 * n as f64).floor() as usize;
    Ok(SplitIndices {
        train: 0..train,
        val: train..train + val,
        test: train + val..n,
    })
}

/// One model-ready tabular row: current features plus `k` lagged energies.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedRow {
    /// Index of the target row in the source dataset.
    pub row_index: usize,
    pub timestamp: i64,
    /// occupancy, temperature, humidity, calendar, lag_1 .. lag_k
    /// (lag_1 is the most recent matching day).
    pub features: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedTable {
    pub lag_count: usize,
    pub rows: Vec<SupervisedRow>,
}

impl SupervisedTable {
    pub fn x(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features.clone()).collect()
    }

    pub fn y(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.target).collect()
    }
}

/// Build lag features: for each row, the energies at the same clock time on
/// the `k` most recent earlier days that share the row's calendar flag. Rows
/// without `k` such days are dropped; days missing the exact clock time are
/// skipped rather than nearest-matched.
pub fn lag_features(d: &AlignedDataset, k: usize) -> Result<SupervisedTable, FeatureError> {
    assert!(k >= 1, "lag count must be >= 1");
    use std::collections::HashMap;
    // Per clock-time, per calendar-flag history of energies in day order.
    let mut history: HashMap<(i64, bool), Vec<f64>> = HashMap::new();
    let mut rows = Vec::new();
    for (idx, r) in d.rows.iter().enumerate() {
        let tod = r.timestamp.rem_euclid(86_400);
        let flag = r.calendar != 0.0;
        let hist = history.entry((tod, flag)).or_default();
        if hist.len() >= k {
            let mut features = vec![r.occupancy, r.temperature, r.humidity, r.calendar];
            // Most recent matching day first.
            features.extend(hist.iter().rev().take(k));
            rows.push(SupervisedRow {
                row_index: idx,
                timestamp: r.timestamp,
                features,
                target: r.energy,
            });
        }
        hist.push(r.energy);
    }
    if rows.is_empty() {
        return Err(FeatureError::InsufficientHistory);
    }
    Ok(SupervisedTable { lag_count: k, rows })
}

/// One LSTM sample: a window of consecutive 5-feature steps and the energy
/// at the step after the window.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSample {
    /// Index of the target row in the source dataset.
    pub target_row: usize,
    /// Per step: energy, occupancy, temperature, humidity, calendar.
    pub sequence: Vec<[f64; 5]>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    pub window: usize,
    pub samples: Vec<SequenceSample>,
}

/// Slide a window of `w` steps over the dataset; sample `i` covers rows
/// `i..i+w` and targets the energy at row `i+w`. Produces `n - w` samples.
pub fn windowize(d: &AlignedDataset, w: usize) -> Result<SequenceDataset, FeatureError> {
    let n = d.rows.len();
    if w < 1 || w >= n {
        return Err(FeatureError::WindowTooLong { window: w, rows: n });
    }
    let step = |r: &AlignedRow| [r.energy, r.occupancy, r.temperature, r.humidity, r.calendar];
    let samples = (0..n - w)
        .map(|i| SequenceSample {
            target_row: i + w,
            sequence: d.rows[i..i + w].iter().map(step).collect(),
            target: d.rows[i + w].energy,
        })
        .collect();
    Ok(SequenceDataset { window: w, samples })
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Univariate F-statistic `r^2 (n-2) / (1 - r^2)` of each input feature
/// against energy, sorted descending. A perfectly correlated feature scores
/// the [`SCORE_CAP`] sentinel.
pub fn feature_scores(d: &AlignedDataset) -> Result<Vec<(String, f64)>, FeatureError> {
    if d.rows.len() < 3 {
        return Err(FeatureError::TooFewRows(3));
    }
    let y: Vec<f64> = d.rows.iter().map(|r| r.energy).collect();
    let my = y.iter().sum::<f64>() / y.len() as f64;
    if y.iter().all(|&v| v == my) {
        return Err(FeatureError::ZeroVarianceTarget);
    }
    let n = d.rows.len() as f64;
    let mut scored: Vec<(String, f64)> = FEATURE_NAMES
        .iter()
        .enumerate()
        .map(|(j, &name)| {
            let col: Vec<f64> = d.rows.iter().map(|r| r.feature(j)).collect();
            let score = match pearson(&col, &y) {
                Some(r) => {
                    let r2 = r * r;
                    if 1.0 - r2 <= 1e-15 {
                        SCORE_CAP
                    } else {
                        (r2 * (n - 2.0) / (1.0 - r2)).min(SCORE_CAP)
                    }
                }
                None => 0.0,
            };
            (name.to_string(), score)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(scored)
}

/// Pearson correlation of each input feature with energy, in feature order.
pub fn correlations(d: &AlignedDataset) -> Result<Vec<(String, f64)>, FeatureError> {
    if d.rows.len() < 3 {
        return Err(FeatureError::TooFewRows(3));
    }
    let y: Vec<f64> = d.rows.iter().map(|r| r.energy).collect();
    FEATURE_NAMES
        .iter()
        .enumerate()
        .map(|(j, &name)| {
            let col: Vec<f64> = d.rows.iter().map(|r| r.feature(j)).collect();
            pearson(&col, &y)
                .map(|r| (name.to_string(), r))
                .ok_or_else(|| FeatureError::ZeroVariance(name.to_string()))
        })
        .collect()
}
