//! Noise interventions in the located subspace, the full space or a random
//! subspace, and a nearest-neighbour readout to measure their effect.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bundle::{common_label_kind, LabelKind, LabeledActivations};
use crate::error::{Result, SmdsError};
use crate::geometry::{geo_distance, DistanceKind, DistanceSpec, Label};
use crate::linalg::{random_orthonormal, spd_solve};
use crate::projection::{fit_smds, project, Projection};
use crate::stress::stress_score;

/// Largest condition number of `W` accepted for the pseudoinverse.
pub const MAX_CONDITION: f64 = 1e8;
/// Default decode tolerance as a fraction of the label range.
pub const DEFAULT_TOLERANCE: f64 = 1.0 / 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Manifold,
    Full,
    RandomSubspace,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Manifold => "manifold",
            Mode::Full => "full",
            Mode::RandomSubspace => "random_subspace",
        })
    }
}

impl FromStr for Mode {
    type Err = SmdsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "manifold" => Ok(Mode::Manifold),
            "full" => Ok(Mode::Full),
            "random" | "random_subspace" => Ok(Mode::RandomSubspace),
            other => Err(SmdsError::InvalidInput(format!(
                "unknown intervention mode `{other}` (expected manifold, full or random)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct InterventionSpec {
    pub mode: Mode,
    pub sigma2: f64,
    /// Dimension of the random subspace; ignored by the other modes.
    pub subspace_dim: usize,
    pub seed: u64,
    /// Required in manifold mode.
    pub projection: Option<Projection>,
}

impl InterventionSpec {
    pub fn manifold(p: Projection, sigma2: f64, seed: u64) -> Self {
        InterventionSpec {
            mode: Mode::Manifold,
            sigma2,
            subspace_dim: p.m(),
            seed,
            projection: Some(p),
        }
    }

    pub fn full(sigma2: f64, seed: u64) -> Self {
        InterventionSpec {
            mode: Mode::Full,
            sigma2,
            subspace_dim: 0,
            seed,
            projection: None,
        }
    }

    pub fn random_subspace(subspace_dim: usize, sigma2: f64, seed: u64) -> Self {
        InterventionSpec {
            mode: Mode::RandomSubspace,
            sigma2,
            subspace_dim,
            seed,
            projection: None,
        }
    }
}

/// Ratio of the largest to smallest singular value of `w`.
pub fn condition_number(w: &DMatrix<f64>) -> f64 {
    let sv = w.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Minimum-norm right inverse `W^T (W W^T)^-1` of a full-row-rank `W`.
pub fn pseudoinverse(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let cond = condition_number(w);
    if !(cond <= MAX_CONDITION) {
        return Err(SmdsError::IllConditioned(cond));
    }
    let gram = w * w.transpose();
    // gram is symmetric, so ((W W^T)^-1 W)^T = W^T (W W^T)^-1.
    Ok(spd_solve(gram, w, 0.0)?.transpose())
}

fn gaussian_rows(rows: usize, cols: usize, sigma: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut noise = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let z: f64 = StandardNormal.sample(rng);
            noise[(i, j)] = sigma * z;
        }
    }
    noise
}

/// Adds seeded Gaussian noise to every row of `x`.
///
/// Noise is drawn row by row from a single stream, so results depend only
/// on the spec and the shape of `x`.
pub fn perturb(x: &DMatrix<f64>, spec: &InterventionSpec) -> Result<DMatrix<f64>> {
    if !(spec.sigma2 >= 0.0 && spec.sigma2.is_finite()) {
        return Err(SmdsError::InvalidInput(format!(
            "sigma2 must be >= 0, got {}",
            spec.sigma2
        )));
    }
    let (n, d) = x.shape();
    let sigma = spec.sigma2.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let delta = match spec.mode {
        Mode::Manifold => {
            let p = spec.projection.as_ref().ok_or_else(|| {
                SmdsError::InvalidInput("manifold mode needs a projection".into())
            })?;
            if p.d() != d {
                return Err(SmdsError::DimensionMismatch(format!(
                    "projection expects {} dimensions, activations have {d}",
                    p.d()
                )));
            }
            let pinv = pseudoinverse(&p.w)?;
            gaussian_rows(n, p.m(), sigma, &mut rng) * pinv.transpose()
        }
        Mode::Full => gaussian_rows(n, d, sigma, &mut rng),
        Mode::RandomSubspace => {
            let k = spec.subspace_dim;
            if k == 0 || k > d {
                return Err(SmdsError::InvalidInput(format!(
                    "subspace dimension must be in 1..={d}, got {k}"
                )));
            }
            let basis = random_orthonormal(d, k, &mut rng);
            gaussian_rows(n, k, sigma, &mut rng) * basis.transpose()
        }
    };
    if spec.sigma2 == 0.0 {
        return Ok(x.clone());
    }
    Ok(x + delta)
}

/// How a predicted label is compared with the true one.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Matcher {
    Exact,
    /// Within `tol`, measured around a cycle of length `period` when set.
    Scalar {
        tol: f64,
        period: Option<f64>,
    },
    Vector {
        tol: f64,
    },
    /// Great-circle angle within `tol` radians.
    Geo {
        tol: f64,
    },
}

fn matcher(train: &[Label], spec: &DistanceSpec, tolerance: f64) -> Result<Matcher> {
    Ok(match common_label_kind(train)? {
        LabelKind::Class => Matcher::Exact,
        LabelKind::Scalar if spec.kind == DistanceKind::Cluster => Matcher::Exact,
        LabelKind::Scalar => {
            let vals: Vec<f64> = train
                .iter()
                .map(|l| match l {
                    Label::Scalar(v) => *v,
                    _ => unreachable!(),
                })
                .collect();
            let (lo, hi) = vals
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                    (a.min(*v), b.max(*v))
                });
            let period = match spec.kind {
                DistanceKind::Circular => Some(1.0),
                DistanceKind::DiscreteCircular => Some(spec.max_label.unwrap_or(hi) + 1.0),
                _ => None,
            };
            Matcher::Scalar {
                tol: tolerance * (hi - lo),
                period,
            }
        }
        LabelKind::Vector(k) => {
            let range = (0..k)
                .map(|c| {
                    let col = train.iter().map(|l| match l {
                        Label::Vector(v) => v[c],
                        _ => unreachable!(),
                    });
                    let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                        (a.min(v), b.max(v))
                    });
                    hi - lo
                })
                .fold(0.0, f64::max);
            Matcher::Vector {
                tol: tolerance * range,
            }
        }
        LabelKind::Geo => Matcher::Geo {
            tol: tolerance * std::f64::consts::PI,
        },
    })
}

fn matches(m: Matcher, predicted: &Label, truth: &Label) -> bool {
    match (m, predicted, truth) {
        (Matcher::Scalar { tol, period }, Label::Scalar(a), Label::Scalar(b)) => {
            let mut diff = (a - b).abs();
            if let Some(p) = period {
                diff = diff.rem_euclid(p);
                diff = diff.min(p - diff);
            }
            diff <= tol
        }
        (Matcher::Vector { tol }, Label::Vector(a), Label::Vector(b)) => {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
                <= tol
        }
        (Matcher::Geo { tol }, Label::Geo(a), Label::Geo(b)) => {
            let spec = DistanceSpec::new(DistanceKind::GeoGeodesic);
            geo_distance(&spec, *a, *b).is_ok_and(|angle| angle <= tol)
        }
        _ => predicted == truth,
    }
}

/// Fraction of test points whose nearest projected training point carries
/// a matching label.
///
/// Classes must match exactly. Scalars must lie within `tolerance` times the
/// training label range (around the cycle for circular specs), vectors within
/// `tolerance` times the widest coordinate range, and geo labels within a
/// great-circle angle of `tolerance * pi`.
pub fn decode_accuracy(
    train: &LabeledActivations,
    test: &LabeledActivations,
    p: &Projection,
    tolerance: f64,
) -> Result<f64> {
    if train.n() == 0 {
        return Err(SmdsError::InvalidInput("empty training set".into()));
    }
    if test.n() == 0 {
        return Err(SmdsError::InvalidInput("empty test set".into()));
    }
    if !(tolerance >= 0.0) {
        return Err(SmdsError::InvalidInput(format!(
            "tolerance must be >= 0, got {tolerance}"
        )));
    }
    if train.label_kind()? != test.label_kind()? {
        return Err(SmdsError::InvalidLabel(
            "train and test labels differ in kind".into(),
        ));
    }
    let zt = project(p, &train.x)?;
    let zs = project(p, &test.x)?;
    let m = matcher(&train.labels, &p.spec, tolerance)?;
    let mut hits = 0usize;
    for i in 0..zs.nrows() {
        let mut best = (f64::INFINITY, 0usize);
        for j in 0..zt.nrows() {
            let mut sq = 0.0;
            for c in 0..zt.ncols() {
                let diff = zs[(i, c)] - zt[(j, c)];
                sq += diff * diff;
            }
            if sq < best.0 {
                best = (sq, j);
            }
        }
        if matches(m, &train.labels[best.1], &test.labels[i]) {
            hits += 1;
        }
    }
    Ok(hits as f64 / zs.nrows() as f64)
}

/// Seeded 50/50 split; the first half (rounded down) trains.
pub fn split_half(
    bundle: &LabeledActivations,
    seed: u64,
) -> (LabeledActivations, LabeledActivations) {
    let mut idx: Vec<usize> = (0..bundle.n()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let half = bundle.n() / 2;
    (bundle.select(&idx[..half]), bundle.select(&idx[half..]))
}

/// One point of an accuracy-versus-noise curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub mode: Mode,
    pub sigma2: f64,
    pub subspace_dim: usize,
    pub seed: u64,
    pub accuracy: f64,
}

/// Decode accuracy of `test` after perturbing its activations, with the
/// clean `train` points as the reference.
pub fn perturbed_accuracy(
    train: &LabeledActivations,
    test: &LabeledActivations,
    p: &Projection,
    spec: &InterventionSpec,
    tolerance: f64,
) -> Result<CurvePoint> {
    let noisy = LabeledActivations {
        x: perturb(&test.x, spec)?,
        labels: test.labels.clone(),
        meta: test.meta.clone(),
    };
    Ok(CurvePoint {
        mode: spec.mode,
        sigma2: spec.sigma2,
        subspace_dim: match spec.mode {
            Mode::Manifold => p.m(),
            Mode::Full => test.d(),
            Mode::RandomSubspace => spec.subspace_dim,
        },
        seed: spec.seed,
        accuracy: decode_accuracy(train, &noisy, p, tolerance)?,
    })
}

pub const CURVE_HEADER: [&str; 5] = ["mode", "sigma2", "subspace_dim", "seed", "accuracy"];

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for pt in points {
        w.write_record([
            pt.mode.to_string(),
            format!("{:?}", pt.sigma2),
            pt.subspace_dim.to_string(),
            pt.seed.to_string(),
            format!("{:?}", pt.accuracy),
        ])?;
    }
    w.flush().map_err(|e| SmdsError::io("<csv>", e))?;
    Ok(())
}

/// Held-out stress after perturbing both halves, either scoring the
/// original projection or refitting on the perturbed training half.
pub fn perturbed_stress(
    train: &LabeledActivations,
    test: &LabeledActivations,
    p: &Projection,
    spec: &InterventionSpec,
    refit: bool,
) -> Result<f64> {
    let test_x = perturb(&test.x, spec)?;
    if !refit {
        return Ok(stress_score(p, &test_x, &test.labels)?.stress);
    }
    let mut train_spec = spec.clone();
    train_spec.seed = spec.seed.wrapping_add(1);
    let train_x = perturb(&train.x, &train_spec)?;
    let refitted = fit_smds(&train_x, &train.labels, &p.spec, p.m(), p.alpha)?;
    Ok(stress_score(&refitted, &test_x, &test.labels)?.stress)
}
