//! Dense linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SmdsError};

/// Eigenpairs sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// Columns are unit eigenvectors, in the order of `values`.
    pub vectors: DMatrix<f64>,
}

/// Full symmetric eigendecomposition, sorted descending.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> EigenPairs {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    EigenPairs { values, vectors }
}

/// Below this size a dense solve is cheaper than iterating.
const DENSE_CUTOFF: usize = 64;
const EXTRA_BLOCK: usize = 4;
const RESIDUAL_TOL: f64 = 1e-11;
const LANCZOS_SEED: u64 = 0x5eed_5eed;

/// The `k` algebraically largest eigenpairs of a symmetric matrix.
///
/// Uses block Lanczos with full reorthogonalization and Rayleigh-Ritz
/// extraction. A Ritz pair is accepted once `||A u - t u|| <= 1e-11 * |A|`
/// where `|A|` is the largest Ritz value magnitude. If the Krylov basis grows
/// to a third of the dimension without converging, falls back to
/// [`symmetric_eigen`]. The start block is drawn from a fixed seed, so the
/// result is deterministic.
pub fn top_eigenpairs(a: &DMatrix<f64>, k: usize) -> EigenPairs {
    let n = a.nrows();
    assert!(k <= n, "requested {k} eigenpairs of a {n}x{n} matrix");
    if n <= DENSE_CUTOFF || k == 0 {
        return truncate(symmetric_eigen(a), k);
    }
    let block = (k + EXTRA_BLOCK).min(n);
    let max_basis = (n / 3).max(block * 2);
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);

    let mut basis = DMatrix::<f64>::zeros(n, 0);
    let mut image = DMatrix::<f64>::zeros(n, 0);
    let mut next = random_block(n, block, &mut rng);

    loop {
        let fresh = orthonormalize_against(&basis, next, &mut rng);
        if fresh.ncols() == 0 {
            break;
        }
        let fresh_image = a * &fresh;
        basis = hstack(&basis, &fresh);
        image = hstack(&image, &fresh_image);

        let projected = basis.transpose() * &image;
        let projected = (&projected + projected.transpose()) * 0.5;
        let ritz = symmetric_eigen(&projected);
        let scale = ritz.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let coeffs = ritz.vectors.columns(0, k).into_owned();
        let vectors = &basis * &coeffs;
        let images = &image * &coeffs;
        let converged = (0..k).all(|j| {
            let r = images.column(j) - vectors.column(j) * ritz.values[j];
            r.norm() <= RESIDUAL_TOL * scale.max(f64::MIN_POSITIVE)
        });
        if converged || scale == 0.0 {
            return EigenPairs {
                values: ritz.values[..k].to_vec(),
                vectors,
            };
        }
        if basis.ncols() + block > max_basis {
            break;
        }
        next = fresh_image;
    }
    truncate(symmetric_eigen(a), k)
}

fn truncate(e: EigenPairs, k: usize) -> EigenPairs {
    EigenPairs {
        values: e.values[..k].to_vec(),
        vectors: e.vectors.columns(0, k).into_owned(),
    }
}

fn random_block(n: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, cols, |_, _| StandardNormal.sample(rng))
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Orthonormalizes the columns of `block` against `basis` and each other
/// (two passes of classical Gram-Schmidt). Columns that vanish are replaced by
/// random directions so the Krylov space keeps growing past invariant
/// subspaces; returns fewer columns only once the whole space is spanned.
fn orthonormalize_against(
    basis: &DMatrix<f64>,
    mut block: DMatrix<f64>,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    let n = block.nrows();
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(block.ncols());
    for c in 0..block.ncols() {
        if basis.ncols() + kept.len() >= n {
            break;
        }
        let mut v = block.column(c).into_owned();
        let mut attempts = 0;
        loop {
            let original = v.norm();
            for _ in 0..2 {
                if basis.ncols() > 0 {
                    let coeff = basis.tr_mul(&v);
                    v -= basis * coeff;
                }
                for q in &kept {
                    let dot = q.dot(&v);
                    v.axpy(-dot, q, 1.0);
                }
            }
            let norm = v.norm();
            if norm > 1e-8 * original && norm > 0.0 {
                kept.push(v / norm);
                break;
            }
            attempts += 1;
            if attempts > 3 {
                break;
            }
            v = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        }
    }
    block = DMatrix::zeros(n, kept.len());
    for (c, q) in kept.iter().enumerate() {
        block.set_column(c, q);
    }
    block
}

/// Flips each column so its largest-magnitude entry is positive.
pub fn fix_column_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        let mut best = 0.0f64;
        for x in col.iter() {
            if x.abs() > best.abs() {
                best = *x;
            }
        }
        if best < 0.0 {
            col.neg_mut();
        }
    }
}

/// A `rows x cols` matrix with orthonormal columns, from the QR of a
/// seeded Gaussian matrix.
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> DMatrix<f64> {
    assert!(cols <= rows);
    let g = DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    // Make the factorization unique: positive diagonal in R.
    let r = qr.r();
    for c in 0..cols {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Solves `A X = B` for symmetric positive definite `A` via Cholesky.
///
/// Rejects matrices whose squared pivot ratio indicates numerical
/// singularity.
pub fn spd_solve(a: DMatrix<f64>, b: &DMatrix<f64>, pivot_floor: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0f64, f64::max);
    let chol = a
        .cholesky()
        .ok_or_else(|| SmdsError::Singular("matrix is not positive definite".into()))?;
    let l = chol.l_dirty();
    let min_pivot = (0..n)
        .map(|i| l[(i, i)] * l[(i, i)])
        .fold(f64::INFINITY, f64::min);
    if !(min_pivot > pivot_floor * max_diag) {
        return Err(SmdsError::Singular(format!(
            "pivot ratio {:.3e} below {pivot_floor:e}",
            min_pivot / max_diag
        )));
    }
    Ok(chol.solve(b))
}
