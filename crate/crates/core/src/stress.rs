//! Held-out normalized stress.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmdsError};
use crate::geometry::{distance_matrix_resolved, Label};
use crate::projection::{project, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressReport {
    pub stress: f64,
    pub neg_log_stress: f64,
    pub n_holdout: usize,
    pub fold: Option<usize>,
}

impl StressReport {
    pub fn new(stress: f64, n_holdout: usize, fold: Option<usize>) -> Self {
        StressReport {
            stress,
            neg_log_stress: -stress.ln(),
            n_holdout,
            fold,
        }
    }
}

/// Stress between projected pairwise distances and ideal distances:
/// `sum_{i<j} (|z_i - z_j| - d_ij)^2 / sum_{i<j} d_ij^2`.
pub fn stress_from_coords(coords: &DMatrix<f64>, ideal: &DMatrix<f64>) -> Result<f64> {
    let n = coords.nrows();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            let mut sq = 0.0;
            for c in 0..coords.ncols() {
                let diff = coords[(i, c)] - coords[(j, c)];
                sq += diff * diff;
            }
            let target = ideal[(i, j)];
            let resid = sq.sqrt() - target;
            num += resid * resid;
            den += target * target;
        }
    }
    if den <= 0.0 {
        return Err(SmdsError::DegenerateHoldout(
            "all ideal distances are zero (every held-out label is equal)".into(),
        ));
    }
    Ok(num / den)
}

/// Scores a projection on held-out points and labels.
pub fn stress_score(
    p: &Projection,
    x_hold: &DMatrix<f64>,
    labels_hold: &[Label],
) -> Result<StressReport> {
    let k = x_hold.nrows();
    if labels_hold.len() != k {
        return Err(SmdsError::DimensionMismatch(format!(
            "{} held-out labels for {k} rows",
            labels_hold.len()
        )));
    }
    if k < 2 {
        return Err(SmdsError::InvalidInput(format!(
            "need at least 2 held-out points, got {k}"
        )));
    }
    let spec = p.spec.resolve(labels_hold)?;
    let ideal = distance_matrix_resolved(labels_hold, &spec);
    let coords = project(p, x_hold)?;
    let s = stress_from_coords(&coords, &ideal)?;
    if !s.is_finite() {
        return Err(SmdsError::InvalidInput("stress is not finite".into()));
    }
    Ok(StressReport::new(s, k, None))
}
