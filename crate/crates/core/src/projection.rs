//! Closed-form ridge fit of the linear map from activations onto an ideal
//! embedding, and its application to new points.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmdsError};
use crate::geometry::{distance_matrix_resolved, DistanceSpec, Label};
use crate::mds::classical_mds;

pub const DEFAULT_M: usize = 3;
pub const DEFAULT_ALPHA: f64 = 0.1;

/// Where a projection (or bundle) came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub task: String,
    pub site: String,
    pub layer: u32,
    pub model_id: String,
}

/// A fitted linear projection `x -> W (x - train_mean)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `m x d`.
    pub w: DMatrix<f64>,
    pub train_mean: DVector<f64>,
    pub embed_mean: DVector<f64>,
    pub alpha: f64,
    pub spec: DistanceSpec,
    pub provenance: Provenance,
}

impl Projection {
    pub fn m(&self) -> usize {
        self.w.nrows()
    }

    pub fn d(&self) -> usize {
        self.w.ncols()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.m() > self.d() {
            return Err(SmdsError::InvalidInput(format!(
                "projection has m={} > d={}",
                self.m(),
                self.d()
            )));
        }
        if self.train_mean.len() != self.d() || self.embed_mean.len() != self.m() {
            return Err(SmdsError::DimensionMismatch(format!(
                "stored means have lengths {}/{} for a {}x{} projection",
                self.train_mean.len(),
                self.embed_mean.len(),
                self.m(),
                self.d()
            )));
        }
        if self.w.iter().any(|v| !v.is_finite()) {
            return Err(SmdsError::InvalidInput(
                "projection has non-finite entries".into(),
            ));
        }
        Ok(())
    }
}

fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    x.row_mean().transpose()
}

fn center(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for mut row in c.row_iter_mut() {
        row -= mean.transpose();
    }
    c
}

/// Ridge regression `W = Yc^T Xc (Xc^T Xc + alpha I)^-1`.
///
/// Solved by Cholesky, never by explicit inversion. With `alpha > 0` and
/// fewer rows than columns the equivalent `n x n` system
/// `W = Yc^T (Xc Xc^T + alpha I)^-1 Xc` is solved instead.
pub fn fit_projection(x: &DMatrix<f64>, y: &DMatrix<f64>, alpha: f64) -> Result<Projection> {
    let (n, d) = x.shape();
    if y.nrows() != n {
        return Err(SmdsError::DimensionMismatch(format!(
            "activations have {n} rows but embedding has {}",
            y.nrows()
        )));
    }
    if n < 2 {
        return Err(SmdsError::InvalidInput(format!(
            "need at least 2 rows, got {n}"
        )));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(SmdsError::InvalidInput(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SmdsError::InvalidInput(
            "activations contain non-finite values".into(),
        ));
    }
    let train_mean = column_means(x);
    let embed_mean = column_means(y);
    let xc = center(x, &train_mean);
    let yc = center(y, &embed_mean);

    // Without regularization, reject numerically rank-deficient systems.
    let pivot_floor = if alpha > 0.0 { 0.0 } else { 1e-12 };
    let solved = if alpha > 0.0 && n < d {
        let mut gram = &xc * xc.transpose();
        for i in 0..n {
            gram[(i, i)] += alpha;
        }
        // gram is symmetric, so (gram^-1 Yc)^T = Yc^T gram^-1.
        crate::linalg::spd_solve(gram, &yc, pivot_floor).map(|coef| coef.transpose() * &xc)
    } else {
        let mut gram = xc.transpose() * &xc;
        for i in 0..d {
            gram[(i, i)] += alpha;
        }
        let rhs = xc.transpose() * &yc;
        crate::linalg::spd_solve(gram, &rhs, pivot_floor).map(|w| w.transpose())
    };
    let w = match solved {
        Ok(w) => w,
        Err(SmdsError::Singular(_)) if alpha > 0.0 => ridge_svd(&xc, &yc, alpha),
        Err(SmdsError::Singular(msg)) => {
            return Err(SmdsError::Singular(format!(
                "X_c^T X_c + {alpha} I is singular ({msg}); use alpha > 0"
            )))
        }
        Err(e) => return Err(e),
    };
    Ok(Projection {
        w,
        train_mean,
        embed_mean,
        alpha,
        spec: DistanceSpec::new(crate::geometry::DistanceKind::Linear),
        provenance: Provenance::default(),
    })
}

/// `Yc^T U diag(s / (s^2 + alpha)) V^T` from the thin SVD of `Xc`; used when
/// the Gram matrix is too badly scaled for Cholesky in floating point.
fn ridge_svd(xc: &DMatrix<f64>, yc: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let svd = xc.clone().svd(true, true);
    let u = svd.u.expect("requested u");
    let v_t = svd.v_t.expect("requested v_t");
    let shrink = svd.singular_values.map(|s| s / (s * s + alpha));
    let mut coef = yc.transpose() * u;
    for (j, mut col) in coef.column_iter_mut().enumerate() {
        col *= shrink[j];
    }
    coef * v_t
}

/// `(X - train_mean) W^T`, one row per input row.
pub fn project(p: &Projection, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != p.d() {
        return Err(SmdsError::DimensionMismatch(format!(
            "points have {} columns, projection expects {}",
            x.ncols(),
            p.d()
        )));
    }
    Ok(center(x, &p.train_mean) * p.w.transpose())
}

/// Full SMDS fit: ideal distances, classical MDS, ridge projection.
pub fn fit_smds(
    x: &DMatrix<f64>,
    labels: &[Label],
    spec: &DistanceSpec,
    m: usize,
    alpha: f64,
) -> Result<Projection> {
    if labels.len() != x.nrows() {
        return Err(SmdsError::DimensionMismatch(format!(
            "{} labels for {} rows",
            labels.len(),
            x.nrows()
        )));
    }
    if labels.len() < 2 {
        return Err(SmdsError::InvalidInput("need at least 2 points".into()));
    }
    if m > x.ncols() {
        return Err(SmdsError::InvalidInput(format!(
            "m={m} exceeds ambient dimension {}",
            x.ncols()
        )));
    }
    let spec = spec.resolve(labels)?;
    let d = distance_matrix_resolved(labels, &spec);
    let embedding = classical_mds(&d, m)?;
    let mut p = fit_projection(x, &embedding.coords, alpha)?;
    p.spec = spec;
    Ok(p)
}
