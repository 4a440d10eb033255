//! Ridge regression solved in closed form on centered data.
//!
//! Minimizes `||y - Xw - b||^2 + alpha * ||w||^2` with the intercept left
//! unpenalized: center the columns and the target, solve
//! `(Xc'Xc + alpha I) w = Xc'y`, then recover `b = mean(y) - mean(X) . w`.

use super::ModelError;
use crate::linalg::{solve, Mat};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
}

fn check_xy(x: &[Vec<f64>], y: &[f64]) -> Result<usize, ModelError> {
    if x.is_empty() || y.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(ModelError::DimensionMismatch(format!(
            "{} rows vs {} targets",
            x.len(),
            y.len()
        )));
    }
    let p = x[0].len();
    if x.iter().any(|r| r.len() != p) {
        return Err(ModelError::DimensionMismatch("ragged feature rows".into()));
    }
    Ok(p)
}

fn solve_normal_equations(
    x: &[Vec<f64>],
    y: &[f64],
    alpha: f64,
    col_shift: &[f64],
    y_shift: f64,
) -> Result<Vec<f64>, ModelError> {
    let p = col_shift.len();
    let mut gram = Mat::zeros(p, p);
    let mut rhs = vec![0.0; p];
    for (row, &target) in x.iter().zip(y) {
        for j in 0..p {
            let xj = row[j] - col_shift[j];
            rhs[j] += xj * (target - y_shift);
            for l in j..p {
                let v = gram.get(j, l) + xj * (row[l] - col_shift[l]);
                gram.set(j, l, v);
            }
        }
    }
    for j in 0..p {
        for l in 0..j {
            gram.set(j, l, gram.get(l, j));
        }
        gram.set(j, j, gram.get(j, j) + alpha);
    }
    solve(&gram, &rhs).ok_or(ModelError::SingularSystem)
}

/// Fit with an unpenalized intercept.
pub fn ridge_fit(x: &[Vec<f64>], y: &[f64], alpha: f64) -> Result<RidgeModel, ModelError> {
    assert!(alpha >= 0.0, "alpha must be non-negative");
    let p = check_xy(x, y)?;
    let n = x.len() as f64;
    let col_means: Vec<f64> = (0..p)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let y_mean = y.iter().sum::<f64>() / n;
    let weights = solve_normal_equations(x, y, alpha, &col_means, y_mean)?;
    let intercept = y_mean
        - col_means
            .iter()
            .zip(&weights)
            .map(|(m, w)| m * w)
            .sum::<f64>();
    Ok(RidgeModel {
        weights,
        intercept,
        alpha,
    })
}

/// Fit through the origin (no intercept, nothing centered).
pub fn ridge_fit_no_intercept(
    x: &[Vec<f64>],
    y: &[f64],
    alpha: f64,
) -> Result<RidgeModel, ModelError> {
    assert!(alpha >= 0.0, "alpha must be non-negative");
    let p = check_xy(x, y)?;
    let weights = solve_normal_equations(x, y, alpha, &vec![0.0; p], 0.0)?;
    Ok(RidgeModel {
        weights,
        intercept: 0.0,
        alpha,
    })
}

pub fn ridge_predict(m: &RidgeModel, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
    if x.iter().any(|r| r.len() != m.weights.len()) {
        return Err(ModelError::DimensionMismatch(format!(
            "model has {} weights",
            m.weights.len()
        )));
    }
    Ok(x.iter()
        .map(|r| m.intercept + r.iter().zip(&m.weights).map(|(a, w)| a * w).sum::<f64>())
        .collect())
}
