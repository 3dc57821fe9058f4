//! Classical (Torgerson) multidimensional scaling of an ideal distance matrix.

use nalgebra::DMatrix;

use crate::error::{Result, SmdsError};
use crate::linalg::{fix_column_signs, top_eigenpairs};

/// Ideal manifold coordinates recovered from a distance matrix.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// `n x m` coordinates, one row per point.
    pub coords: DMatrix<f64>,
    /// The `m` largest eigenvalues of the double-centered matrix, descending,
    /// with negative values clamped to zero.
    pub eigenvalues: Vec<f64>,
    /// How many of the retained eigenvalues were negative beyond roundoff.
    pub clipped_count: usize,
}

/// `-1/2 H D2 H` with `D2` the elementwise square of `d` and `H` the
/// centering matrix.
pub fn double_center(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let sq = d.map(|v| v * v);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    })
}

fn validate_distances(d: &DMatrix<f64>) -> Result<()> {
    let n = d.nrows();
    if d.ncols() != n {
        return Err(SmdsError::DimensionMismatch(format!(
            "distance matrix is {}x{}",
            d.nrows(),
            d.ncols()
        )));
    }
    let scale = d.amax().max(1.0);
    for i in 0..n {
        if d[(i, i)] != 0.0 {
            return Err(SmdsError::InvalidInput(format!(
                "distance matrix diagonal ({i},{i}) is {}",
                d[(i, i)]
            )));
        }
        for j in 0..i {
            let (a, b) = (d[(i, j)], d[(j, i)]);
            if !(a >= 0.0 && b >= 0.0 && a.is_finite()) {
                return Err(SmdsError::InvalidInput(format!(
                    "distance ({i},{j}) is negative or non-finite"
                )));
            }
            if (a - b).abs() > 1e-12 * scale {
                return Err(SmdsError::InvalidInput(format!(
                    "distance matrix not symmetric at ({i},{j}): {a} vs {b}"
                )));
            }
        }
    }
    Ok(())
}

/// Embeds `d` into `m` dimensions.
///
/// Uses the `m` largest eigenpairs of the double-centered squared-distance
/// matrix; coordinates are `V_m * sqrt(max(L_m, 0))`. Each eigenvector is
/// oriented with its largest-magnitude entry positive.
pub fn classical_mds(d: &DMatrix<f64>, m: usize) -> Result<Embedding> {
    validate_distances(d)?;
    let n = d.nrows();
    if m == 0 || m >= n {
        return Err(SmdsError::InvalidInput(format!(
            "target dimension m={m} must satisfy 1 <= m < n={n}"
        )));
    }
    let b = double_center(d);
    let pairs = top_eigenpairs(&b, m);
    let scale = pairs.values.first().map_or(0.0, |v| v.abs()).max(b.amax());
    let mut vectors = pairs.vectors;
    fix_column_signs(&mut vectors);

    let mut clipped_count = 0;
    let eigenvalues: Vec<f64> = pairs
        .values
        .iter()
        .map(|&v| {
            if v < -1e-12 * scale {
                clipped_count += 1;
            }
            v.max(0.0)
        })
        .collect();
    let mut coords = vectors;
    for (j, lambda) in eigenvalues.iter().enumerate() {
        coords.column_mut(j).scale_mut(lambda.sqrt());
    }
    Ok(Embedding {
        coords,
        eigenvalues,
        clipped_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pairwise_distance_matrix, DistanceKind, DistanceSpec, Label};
    use crate::linalg::symmetric_eigen;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn pairwise(y: &DMatrix<f64>) -> DMatrix<f64> {
        let n = y.nrows();
        DMatrix::from_fn(n, n, |i, j| (y.row(i) - y.row(j)).norm())
    }

    #[test]
    fn collinear_labels() {
        let labels: Vec<Label> = [0.0, 0.5, 1.0].map(Label::Scalar).to_vec();
        let d =
            pairwise_distance_matrix(&labels, &DistanceSpec::new(DistanceKind::Linear)).unwrap();
        let e = classical_mds(&d, 1).unwrap();
        let got = pairwise(&e.coords);
        assert!((got - d).amax() < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let e = classical_mds(&DMatrix::zeros(3, 3), 2).unwrap();
        assert_eq!(e.coords, DMatrix::zeros(3, 2));
        assert_eq!(e.eigenvalues, vec![0.0, 0.0]);
    }

    #[test]
    fn circle_square() {
        // Oracle: place the four labels directly on the unit circle.
        let ys = [0.0, 0.25, 0.5, 0.75];
        let placed = DMatrix::from_fn(4, 2, |i, j| {
            let t = 2.0 * std::f64::consts::PI * ys[i];
            if j == 0 {
                t.cos()
            } else {
                t.sin()
            }
        });
        let oracle = pairwise(&placed);
        let labels: Vec<Label> = ys.map(Label::Scalar).to_vec();
        let d =
            pairwise_distance_matrix(&labels, &DistanceSpec::new(DistanceKind::Circular)).unwrap();
        assert!((&d - &oracle).amax() < 1e-12);
        let e = classical_mds(&d, 2).unwrap();
        assert!((pairwise(&e.coords) - oracle).amax() < 1e-9);
        for i in 0..4 {
            assert!((e.coords.row(i).norm() - 1.0).abs() < 1e-9);
        }
        let centroid = e.coords.row_mean();
        assert!(centroid.norm() < 1e-12);
    }

    #[test]
    fn double_centering_rows_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = DMatrix::from_fn(30, 4, |_, _| StandardNormal.sample(&mut rng));
        let b = double_center(&pairwise(&pts));
        let norm = b.norm();
        for i in 0..30 {
            assert!(b.row(i).sum().abs() <= 1e-9 * norm);
            assert!(b.column(i).sum().abs() <= 1e-9 * norm);
        }
        let e = symmetric_eigen(&b);
        let recon = &e.vectors
            * DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()))
            * e.vectors.transpose();
        assert!((recon - &b).norm() <= 1e-8 * norm);
    }

    #[test]
    fn euclidean_input_is_reproduced_large() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = DMatrix::from_fn(200, 3, |_, _| StandardNormal.sample(&mut rng));
        let d = pairwise(&pts);
        let e = classical_mds(&d, 3).unwrap();
        assert!((pairwise(&e.coords) - d).amax() < 1e-9);
        assert_eq!(e.clipped_count, 0);
        assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn non_euclidean_clips() {
        // Hop distances on a 5-cycle give Gram eigenvalues {a, a, 0, -b, -b},
        // so the top four include a negative one.
        let labels: Vec<Label> = [0.0, 1.0, 2.0, 3.0, 4.0].map(Label::Scalar).to_vec();
        let spec = DistanceSpec::new(DistanceKind::DiscreteCircular);
        let d = pairwise_distance_matrix(&labels, &spec).unwrap();
        let e = classical_mds(&d, 4).unwrap();
        assert!(e.clipped_count >= 1);
        assert!(e.eigenvalues.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        let mut d = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(classical_mds(&d, 1).is_err());
        d[(1, 0)] = 1.0;
        assert!(classical_mds(&d, 2).is_err());
        assert!(classical_mds(&d, 0).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!(classical_mds(&neg, 1).is_err());
    }
}
