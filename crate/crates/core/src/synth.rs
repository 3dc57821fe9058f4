//! Synthetic activation bundles lying on known manifolds.
//!
//! Labels are sampled uniformly, mapped to unit-scale intrinsic coordinates,
//! and placed in the ambient space through a seeded random orthonormal frame
//! plus a random offset. Both the manifold and the isotropic noise are
//! multiplied by `scale`, so `noise_sigma` is always relative to a
//! unit-size manifold.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bundle::{BundleMeta, Dtype, LabeledActivations};
use crate::error::{Result, SmdsError};
use crate::geometry::{DistanceKind, GeoPoint, Label};
use crate::linalg::random_orthonormal;

/// Smallest label drawn for the log-line shape.
pub const LOG_LINE_MIN: f64 = 0.01;
pub const DEFAULT_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Circle,
    Semicircle,
    Line,
    LogLine,
    Clusters(usize),
    Sphere,
    Plane2d,
}

impl Shape {
    pub fn intrinsic_dim(self) -> usize {
        match self {
            Shape::Circle | Shape::Semicircle | Shape::Plane2d => 2,
            Shape::Line | Shape::LogLine => 1,
            Shape::Clusters(k) => k.saturating_sub(1),
            Shape::Sphere => 3,
        }
    }

    /// The hypothesis whose ideal distances this shape realizes exactly.
    pub fn matching_kind(self) -> DistanceKind {
        match self {
            Shape::Circle => DistanceKind::Circular,
            Shape::Semicircle => DistanceKind::Semicircular,
            Shape::Line => DistanceKind::Linear,
            Shape::LogLine => DistanceKind::LogLinear,
            Shape::Clusters(_) => DistanceKind::Cluster,
            Shape::Sphere => DistanceKind::GeoSphere,
            Shape::Plane2d => DistanceKind::EuclideanVector,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Circle => f.write_str("circle"),
            Shape::Semicircle => f.write_str("semicircle"),
            Shape::Line => f.write_str("line"),
            Shape::LogLine => f.write_str("log_line"),
            Shape::Clusters(k) => write!(f, "clusters:{k}"),
            Shape::Sphere => f.write_str("sphere"),
            Shape::Plane2d => f.write_str("plane2d"),
        }
    }
}

impl FromStr for Shape {
    type Err = SmdsError;

    /// Accepts the display names; `clusters` alone means four clusters.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "circle" => Shape::Circle,
            "semicircle" => Shape::Semicircle,
            "line" => Shape::Line,
            "log_line" => Shape::LogLine,
            "clusters" => Shape::Clusters(4),
            "sphere" => Shape::Sphere,
            "plane2d" => Shape::Plane2d,
            other => {
                let k = other
                    .strip_prefix("clusters:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| SmdsError::InvalidInput(format!("unknown shape `{other}`")))?;
                Shape::Clusters(k)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub shape: Shape,
    pub n: usize,
    pub ambient_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub scale: f64,
}

impl SyntheticSpec {
    pub fn new(shape: Shape, n: usize, ambient_dim: usize, noise_sigma: f64, seed: u64) -> Self {
        SyntheticSpec {
            shape,
            n,
            ambient_dim,
            noise_sigma,
            seed,
            scale: DEFAULT_SCALE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(SmdsError::InvalidInput(format!(
                "n must be >= 10, got {}",
                self.n
            )));
        }
        if let Shape::Clusters(k) = self.shape {
            if k < 2 {
                return Err(SmdsError::InvalidInput(format!(
                    "clusters needs k >= 2, got {k}"
                )));
            }
        }
        if self.ambient_dim < self.shape.intrinsic_dim().max(1) {
            return Err(SmdsError::InvalidInput(format!(
                "ambient dimension {} below intrinsic dimension {} of {}",
                self.ambient_dim,
                self.shape.intrinsic_dim(),
                self.shape
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(SmdsError::InvalidInput(format!(
                "noise sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(SmdsError::InvalidInput(format!(
                "scale must be > 0, got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

/// Orthonormal coordinates of the vertices of a regular simplex with unit
/// edges, one row per vertex (Helmert basis of the sum-zero subspace).
fn simplex_vertices(k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, k - 1, |vertex, j| {
        // Basis vector j: 1 on the first j+1 entries, -(j+1) on entry j+1.
        let norm = (((j + 1) * (j + 2)) as f64).sqrt();
        let entry = if vertex <= j {
            1.0
        } else if vertex == j + 1 {
            -((j + 1) as f64)
        } else {
            0.0
        };
        entry / norm / std::f64::consts::SQRT_2
    })
}

fn sample_point(shape: Shape, rng: &mut ChaCha8Rng, simplex: &DMatrix<f64>) -> (Label, Vec<f64>) {
    match shape {
        Shape::Circle => {
            let y: f64 = rng.random();
            let t = 2.0 * PI * y;
            (Label::Scalar(y), vec![t.cos(), t.sin()])
        }
        Shape::Semicircle => {
            let y: f64 = rng.random_range(0.0..=1.0);
            let t = PI * y;
            (Label::Scalar(y), vec![t.cos(), t.sin()])
        }
        Shape::Line => {
            let y: f64 = rng.random_range(0.0..=1.0);
            (Label::Scalar(y), vec![y])
        }
        Shape::LogLine => {
            let y: f64 = rng.random_range(LOG_LINE_MIN..=1.0);
            (Label::Scalar(y), vec![y.ln() / (1.0 / LOG_LINE_MIN).ln()])
        }
        Shape::Clusters(k) => {
            let c = rng.random_range(0..k);
            (
                Label::Class(c as u32),
                simplex.row(c).iter().copied().collect(),
            )
        }
        Shape::Sphere => {
            let lat = rng.random_range(-90.0..=90.0);
            let lon = 180.0 - 360.0 * rng.random::<f64>();
            let (phi, lambda) = (f64::to_radians(lat), f64::to_radians(lon));
            let coords = vec![
                phi.cos() * lambda.cos(),
                phi.cos() * lambda.sin(),
                phi.sin(),
            ];
            (Label::Geo(GeoPoint::new(lat, lon)), coords)
        }
        Shape::Plane2d => {
            let a: f64 = rng.random_range(0.0..=1.0);
            let b: f64 = rng.random_range(0.0..=1.0);
            (Label::Vector(vec![a, b]), vec![a, b])
        }
    }
}

/// Generates a bundle on `spec.shape`, deterministic in `spec.seed`.
pub fn embed_manifold(spec: &SyntheticSpec) -> Result<LabeledActivations> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let q = spec.shape.intrinsic_dim();
    let simplex = match spec.shape {
        Shape::Clusters(k) => simplex_vertices(k),
        _ => DMatrix::zeros(0, 0),
    };

    let mut labels = Vec::with_capacity(spec.n);
    let mut intrinsic = DMatrix::zeros(spec.n, q);
    for i in 0..spec.n {
        let (label, coords) = sample_point(spec.shape, &mut rng, &simplex);
        labels.push(label);
        for (j, c) in coords.into_iter().enumerate() {
            intrinsic[(i, j)] = c;
        }
    }

    let d = spec.ambient_dim;
    let frame = random_orthonormal(d, q, &mut rng);
    let offset: Vec<f64> = (0..d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.scale * z
        })
        .collect();
    let mut x = (intrinsic * frame.transpose()) * spec.scale;
    for mut row in x.row_iter_mut() {
        for (v, o) in row.iter_mut().zip(&offset) {
            *v += o;
        }
    }
    if spec.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sigma * spec.scale)
            .map_err(|e| SmdsError::InvalidInput(e.to_string()))?;
        // Row-major draw order so the stream does not depend on storage.
        for i in 0..spec.n {
            for j in 0..d {
                x[(i, j)] += noise.sample(&mut rng);
            }
        }
    }

    let meta = BundleMeta {
        task: format!("synthetic_{}", spec.shape),
        site: "synthetic".into(),
        layer: 0,
        model_id: "synthetic".into(),
        dtype: Dtype::F64,
    };
    LabeledActivations::new(x, labels, meta)
}
