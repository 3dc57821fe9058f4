//! Hypothesis-manifold distance functions.
//!
//! Every candidate geometry is expressed purely as a distance between two
//! labels. The scalar kinds cover lines, log-lines, (semi)circles, discrete
//! cycles and clusters; the geo kinds embed latitude/longitude pairs on a
//! plane, sphere or cylinder, or measure great-circle distance.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmdsError};

/// Latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lat.is_finite() && self.lon.is_finite()) {
            return Err(SmdsError::InvalidLabel(format!(
                "non-finite coordinate ({}, {})",
                self.lat, self.lon
            )));
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(SmdsError::InvalidLabel(format!(
                "latitude {} outside [-90, 90]",
                self.lat
            )));
        }
        if !(self.lon > -180.0 && self.lon <= 180.0) {
            return Err(SmdsError::InvalidLabel(format!(
                "longitude {} outside (-180, 180]",
                self.lon
            )));
        }
        Ok(())
    }
}

/// A normalized label attached to one activation row.
#[derive(Debug, Clone, PartialEq)]
pub enum Label {
    Scalar(f64),
    Vector(Vec<f64>),
    Class(u32),
    Geo(GeoPoint),
}

impl Label {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Label::Scalar(_) => "scalar",
            Label::Vector(_) => "vector",
            Label::Class(_) => "class",
            Label::Geo(_) => "geo",
        }
    }

    /// Numeric value for kinds that treat labels as points on a line.
    fn ordinal(&self) -> Option<f64> {
        match self {
            Label::Scalar(v) => Some(*v),
            Label::Class(c) => Some(*c as f64),
            _ => None,
        }
    }
}

/// A raw task quantity before normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum RawLabel {
    Scalar(f64),
    Vector(Vec<f64>),
    Class(String),
    Geo(GeoPoint),
}

impl From<&Label> for RawLabel {
    fn from(label: &Label) -> Self {
        match label {
            Label::Scalar(v) => RawLabel::Scalar(*v),
            Label::Vector(v) => RawLabel::Vector(v.clone()),
            Label::Class(c) => RawLabel::Class(c.to_string()),
            Label::Geo(p) => RawLabel::Geo(*p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    Linear,
    LogLinear,
    Semicircular,
    LogSemicircular,
    Circular,
    DiscreteCircular,
    Cluster,
    EuclideanVector,
    GeoFlat,
    GeoSphere,
    GeoCylinder,
    GeoGeodesic,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 12] = [
        DistanceKind::Linear,
        DistanceKind::LogLinear,
        DistanceKind::Semicircular,
        DistanceKind::LogSemicircular,
        DistanceKind::Circular,
        DistanceKind::DiscreteCircular,
        DistanceKind::Cluster,
        DistanceKind::EuclideanVector,
        DistanceKind::GeoFlat,
        DistanceKind::GeoSphere,
        DistanceKind::GeoCylinder,
        DistanceKind::GeoGeodesic,
    ];

    /// The seven single-quantity hypotheses.
    pub const SCALAR: [DistanceKind; 7] = [
        DistanceKind::Linear,
        DistanceKind::LogLinear,
        DistanceKind::Semicircular,
        DistanceKind::LogSemicircular,
        DistanceKind::Circular,
        DistanceKind::DiscreteCircular,
        DistanceKind::Cluster,
    ];

    pub const GEO: [DistanceKind; 4] = [
        DistanceKind::GeoFlat,
        DistanceKind::GeoSphere,
        DistanceKind::GeoCylinder,
        DistanceKind::GeoGeodesic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::Linear => "linear",
            DistanceKind::LogLinear => "log_linear",
            DistanceKind::Semicircular => "semicircular",
            DistanceKind::LogSemicircular => "log_semicircular",
            DistanceKind::Circular => "circular",
            DistanceKind::DiscreteCircular => "discrete_circular",
            DistanceKind::Cluster => "cluster",
            DistanceKind::EuclideanVector => "euclidean_vector",
            DistanceKind::GeoFlat => "geo_flat",
            DistanceKind::GeoSphere => "geo_sphere",
            DistanceKind::GeoCylinder => "geo_cylinder",
            DistanceKind::GeoGeodesic => "geo_geodesic",
        }
    }

    pub fn is_geo(self) -> bool {
        Self::GEO.contains(&self)
    }

    /// Kinds whose labels wrap around (0 and 1 coincide, or 0 and M+1).
    pub fn is_cyclic(self) -> bool {
        matches!(
            self,
            DistanceKind::Circular | DistanceKind::DiscreteCircular
        )
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKind {
    type Err = SmdsError;

    fn from_str(s: &str) -> Result<Self> {
        DistanceKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| SmdsError::InvalidInput(format!("unknown distance kind `{s}`")))
    }
}

/// A named hypothesis geometry plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSpec {
    pub kind: DistanceKind,
    /// Sphere/cylinder/geodesic radius.
    pub radius: f64,
    /// Cylinder height scale.
    pub height_scale: f64,
    /// Largest label for `discrete_circular`; filled from data when `None`.
    pub max_label: Option<f64>,
}

impl DistanceSpec {
    pub fn new(kind: DistanceKind) -> Self {
        DistanceSpec {
            kind,
            radius: 1.0,
            height_scale: 1.0,
            max_label: None,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_height_scale(mut self, height_scale: f64) -> Self {
        self.height_scale = height_scale;
        self
    }

    pub fn with_max_label(mut self, max_label: f64) -> Self {
        self.max_label = Some(max_label);
        self
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(SmdsError::InvalidInput(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.height_scale > 0.0 && self.height_scale.is_finite()) {
            return Err(SmdsError::InvalidInput(format!(
                "height scale must be positive, got {}",
                self.height_scale
            )));
        }
        if let Some(m) = self.max_label {
            if !(m >= 0.0 && m.fract() == 0.0) {
                return Err(SmdsError::InvalidInput(format!(
                    "discrete_circular max label must be a non-negative integer, got {m}"
                )));
            }
        }
        Ok(())
    }

    /// Checks that `label` is legal for this kind.
    pub fn check_label(&self, label: &Label) -> Result<()> {
        let bad = |why: &str| {
            Err(SmdsError::InvalidLabel(format!(
                "{} label {:?} not legal for {}: {why}",
                label.kind_name(),
                label,
                self.kind
            )))
        };
        match (self.kind, label) {
            (DistanceKind::Linear, Label::Scalar(v)) => {
                if !v.is_finite() {
                    return bad("non-finite");
                }
            }
            (DistanceKind::Linear, Label::Class(_)) => {}
            (DistanceKind::LogLinear | DistanceKind::LogSemicircular, Label::Scalar(v)) => {
                if !(*v > 0.0 && v.is_finite()) {
                    return bad("log variants need strictly positive labels");
                }
            }
            (DistanceKind::Semicircular | DistanceKind::Circular, Label::Scalar(v)) => {
                if !(0.0..=1.0).contains(v) {
                    return bad("(semi)circular labels must lie in [0, 1]");
                }
            }
            (DistanceKind::DiscreteCircular, Label::Scalar(_) | Label::Class(_)) => {
                let v = label.ordinal().unwrap_or(f64::NAN);
                if !(v >= 0.0 && v.fract() == 0.0) {
                    return bad("discrete_circular needs non-negative integer labels");
                }
                if let Some(m) = self.max_label {
                    if v > m {
                        return bad("label exceeds the declared maximum M");
                    }
                }
            }
            (DistanceKind::Cluster, Label::Class(_)) => {}
            (DistanceKind::EuclideanVector, Label::Vector(v)) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return bad("non-finite component");
                }
            }
            (k, Label::Geo(p)) if k.is_geo() => p.validate()?,
            _ => return bad("wrong label type"),
        }
        Ok(())
    }

    pub fn check_labels(&self, labels: &[Label]) -> Result<()> {
        self.validate()?;
        for (i, l) in labels.iter().enumerate() {
            self.check_label(l).map_err(|e| match e {
                SmdsError::InvalidLabel(msg) => {
                    SmdsError::InvalidLabel(format!("label {i}: {msg}"))
                }
                other => other,
            })?;
        }
        if self.kind == DistanceKind::EuclideanVector {
            if let Some(Label::Vector(first)) = labels.first() {
                for (i, l) in labels.iter().enumerate() {
                    if let Label::Vector(v) = l {
                        if v.len() != first.len() {
                            return Err(SmdsError::DimensionMismatch(format!(
                                "vector label {i} has {} components, expected {}",
                                v.len(),
                                first.len()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// True when every label is legal for this kind.
    pub fn accepts(&self, labels: &[Label]) -> bool {
        self.check_labels(labels).is_ok()
    }

    /// Fills data-derived parameters (the `discrete_circular` maximum).
    pub fn resolve(&self, labels: &[Label]) -> Result<DistanceSpec> {
        let mut spec = self.clone();
        if spec.kind == DistanceKind::DiscreteCircular && spec.max_label.is_none() {
            let max = labels
                .iter()
                .filter_map(Label::ordinal)
                .fold(f64::NEG_INFINITY, f64::max);
            if !max.is_finite() {
                return Err(SmdsError::InvalidLabel(
                    "discrete_circular needs at least one integer label".into(),
                ));
            }
            spec.max_label = Some(max);
        }
        spec.check_labels(labels)?;
        Ok(spec)
    }
}

/// Table of scalar hypothesis distances. Labels must already be checked.
fn scalar_unchecked(spec: &DistanceSpec, a: f64, b: f64) -> f64 {
    let delta = (a - b).abs();
    match spec.kind {
        DistanceKind::Linear => delta,
        DistanceKind::LogLinear => (a.ln() - b.ln()).abs(),
        DistanceKind::Semicircular => 2.0 * (PI / 2.0 * delta).sin(),
        DistanceKind::LogSemicircular => 2.0 * (PI / 2.0 * (a.ln() - b.ln()).abs()).sin().abs(),
        DistanceKind::Circular => 2.0 * (PI * delta.min(1.0 - delta)).sin(),
        DistanceKind::DiscreteCircular => {
            let m = spec.max_label.unwrap_or(0.0);
            delta.min(m + 1.0 - delta)
        }
        DistanceKind::Cluster => {
            if a == b {
                0.0
            } else {
                1.0
            }
        }
        _ => unreachable!("not a scalar kind"),
    }
}

/// Distance between two labels under one of the seven scalar hypotheses.
pub fn scalar_distance(spec: &DistanceSpec, a: &Label, b: &Label) -> Result<f64> {
    if !DistanceKind::SCALAR.contains(&spec.kind) {
        return Err(SmdsError::InvalidInput(format!(
            "{} is not a scalar kind",
            spec.kind
        )));
    }
    if spec.kind == DistanceKind::DiscreteCircular && spec.max_label.is_none() {
        return Err(SmdsError::InvalidInput(
            "discrete_circular needs M; resolve the spec against the dataset first".into(),
        ));
    }
    spec.validate()?;
    spec.check_label(a)?;
    spec.check_label(b)?;
    let (x, y) = (a.ordinal().unwrap(), b.ordinal().unwrap());
    Ok(scalar_unchecked(spec, x, y))
}

fn sphere_point(p: GeoPoint, r: f64) -> [f64; 3] {
    let (phi, lambda) = (p.lat.to_radians(), p.lon.to_radians());
    [
        r * phi.cos() * lambda.cos(),
        r * phi.cos() * lambda.sin(),
        r * phi.sin(),
    ]
}

fn cylinder_point(p: GeoPoint, r: f64, s: f64) -> [f64; 3] {
    let lambda = p.lon.to_radians();
    [r * lambda.cos(), r * lambda.sin(), p.lat.to_radians() * s]
}

fn euclid3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn haversine(a: GeoPoint, b: GeoPoint, r: f64) -> f64 {
    let (phi_a, phi_b) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi_a - phi_b;
    let dlambda = a.lon.to_radians() - b.lon.to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi_a.cos() * phi_b.cos() * (dlambda / 2.0).sin().powi(2);
    r * 2.0 * h.clamp(0.0, 1.0).sqrt().asin()
}

fn geo_unchecked(spec: &DistanceSpec, a: GeoPoint, b: GeoPoint) -> f64 {
    match spec.kind {
        DistanceKind::GeoFlat => ((a.lat - b.lat).powi(2) + (a.lon - b.lon).powi(2)).sqrt(),
        DistanceKind::GeoSphere => {
            euclid3(sphere_point(a, spec.radius), sphere_point(b, spec.radius))
        }
        DistanceKind::GeoCylinder => euclid3(
            cylinder_point(a, spec.radius, spec.height_scale),
            cylinder_point(b, spec.radius, spec.height_scale),
        ),
        DistanceKind::GeoGeodesic => haversine(a, b, spec.radius),
        _ => unreachable!("not a geo kind"),
    }
}

/// Distance between two coordinates under a geo hypothesis.
pub fn geo_distance(spec: &DistanceSpec, a: GeoPoint, b: GeoPoint) -> Result<f64> {
    if !spec.kind.is_geo() {
        return Err(SmdsError::InvalidInput(format!(
            "{} is not a geo kind",
            spec.kind
        )));
    }
    spec.validate()?;
    a.validate()?;
    b.validate()?;
    Ok(geo_unchecked(spec, a, b))
}

/// Euclidean distance between two vector labels.
pub fn vector_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SmdsError::DimensionMismatch(format!(
            "vector labels of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt())
}

fn distance_unchecked(spec: &DistanceSpec, a: &Label, b: &Label) -> f64 {
    match (a, b) {
        (Label::Geo(p), Label::Geo(q)) => geo_unchecked(spec, *p, *q),
        (Label::Vector(u), Label::Vector(v)) => u
            .iter()
            .zip(v)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt(),
        _ => scalar_unchecked(spec, a.ordinal().unwrap(), b.ordinal().unwrap()),
    }
}

/// Distance under any kind, dispatching on the spec.
pub fn distance(spec: &DistanceSpec, a: &Label, b: &Label) -> Result<f64> {
    match spec.kind {
        DistanceKind::EuclideanVector => match (a, b) {
            (Label::Vector(u), Label::Vector(v)) => vector_distance(u, v),
            _ => Err(SmdsError::InvalidLabel(
                "euclidean_vector needs vector labels".into(),
            )),
        },
        k if k.is_geo() => match (a, b) {
            (Label::Geo(p), Label::Geo(q)) => geo_distance(spec, *p, *q),
            _ => Err(SmdsError::InvalidLabel(format!("{k} needs geo labels"))),
        },
        _ => scalar_distance(spec, a, b),
    }
}

/// Symmetric matrix of unsquared ideal distances between all label pairs.
///
/// Data-derived parameters are resolved against `labels` when unset.
pub fn pairwise_distance_matrix(labels: &[Label], spec: &DistanceSpec) -> Result<DMatrix<f64>> {
    if labels.len() < 2 {
        return Err(SmdsError::InvalidInput(format!(
            "need at least 2 labels, got {}",
            labels.len()
        )));
    }
    let spec = spec.resolve(labels)?;
    Ok(distance_matrix_resolved(labels, &spec))
}

/// Same as [`pairwise_distance_matrix`] for a spec already resolved and
/// labels already checked.
pub(crate) fn distance_matrix_resolved(labels: &[Label], spec: &DistanceSpec) -> DMatrix<f64> {
    let n = labels.len();
    let mut d = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in (j + 1)..n {
            let v = distance_unchecked(spec, &labels[i], &labels[j]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Declared range of a scalar task quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelRange {
    pub min: f64,
    pub max: f64,
}

impl LabelRange {
    pub fn new(min: f64, max: f64) -> Self {
        LabelRange { min, max }
    }
}

/// Maps raw task quantities onto the conventions each kind expects.
///
/// Linear and (semi)circular kinds map the declared range affinely onto
/// [0, 1]; log kinds divide by the range maximum; `discrete_circular` shifts
/// integers so the range starts at 0; classes get first-appearance ids.
/// Vector and geo labels pass through.
pub fn normalize_labels(
    raw: &[RawLabel],
    spec: &DistanceSpec,
    range: Option<LabelRange>,
) -> Result<Vec<Label>> {
    if raw.is_empty() {
        return Err(SmdsError::InvalidInput("no labels to normalize".into()));
    }
    let scalars = || -> Result<Vec<f64>> {
        raw.iter()
            .enumerate()
            .map(|(i, r)| match r {
                RawLabel::Scalar(v) if v.is_finite() => Ok(*v),
                other => Err(SmdsError::InvalidLabel(format!(
                    "raw label {i} ({other:?}) is not a finite scalar"
                ))),
            })
            .collect()
    };
    let need_range = || -> Result<LabelRange> {
        let r = range.ok_or_else(|| {
            SmdsError::InvalidInput(format!("{} normalization needs a task range", spec.kind))
        })?;
        if !(r.max > r.min) {
            return Err(SmdsError::InvalidInput(format!(
                "zero-width or inverted range [{}, {}]",
                r.min, r.max
            )));
        }
        Ok(r)
    };

    let labels: Vec<Label> = match spec.kind {
        DistanceKind::Linear | DistanceKind::Semicircular | DistanceKind::Circular => {
            let r = need_range()?;
            let width = r.max - r.min;
            scalars()?
                .into_iter()
                .map(|v| Label::Scalar((v - r.min) / width))
                .collect()
        }
        DistanceKind::LogLinear | DistanceKind::LogSemicircular => {
            let r = need_range()?;
            if r.max <= 0.0 {
                return Err(SmdsError::InvalidInput(format!(
                    "log normalization needs a positive range maximum, got {}",
                    r.max
                )));
            }
            let vals = scalars()?;
            if let Some(bad) = vals.iter().find(|v| **v <= 0.0) {
                return Err(SmdsError::InvalidLabel(format!(
                    "non-positive value {bad} cannot be used with {}",
                    spec.kind
                )));
            }
            vals.into_iter().map(|v| Label::Scalar(v / r.max)).collect()
        }
        DistanceKind::DiscreteCircular => {
            let r = need_range()?;
            let vals = scalars()?;
            if let Some(bad) = vals.iter().find(|v| v.fract() != 0.0) {
                return Err(SmdsError::InvalidLabel(format!(
                    "discrete_circular needs integer values, got {bad}"
                )));
            }
            vals.into_iter().map(|v| Label::Scalar(v - r.min)).collect()
        }
        DistanceKind::Cluster => encode_classes(raw)?,
        DistanceKind::EuclideanVector => raw
            .iter()
            .map(|r| match r {
                RawLabel::Vector(v) => Ok(Label::Vector(v.clone())),
                other => Err(SmdsError::InvalidLabel(format!(
                    "expected vector, got {other:?}"
                ))),
            })
            .collect::<Result<_>>()?,
        _ => raw
            .iter()
            .map(|r| match r {
                RawLabel::Geo(p) => Ok(Label::Geo(*p)),
                other => Err(SmdsError::InvalidLabel(format!(
                    "expected geo, got {other:?}"
                ))),
            })
            .collect::<Result<_>>()?,
    };
    spec.check_labels(&labels)?;
    Ok(labels)
}

/// Stable integer ids in order of first appearance.
fn encode_classes(raw: &[RawLabel]) -> Result<Vec<Label>> {
    let mut seen: Vec<String> = Vec::new();
    raw.iter()
        .map(|r| {
            let key = match r {
                RawLabel::Class(s) => s.clone(),
                RawLabel::Scalar(v) if v.fract() == 0.0 => format!("{v}"),
                other => {
                    return Err(SmdsError::InvalidLabel(format!(
                        "cluster needs class or integer labels, got {other:?}"
                    )))
                }
            };
            let id = match seen.iter().position(|s| *s == key) {
                Some(i) => i,
                None => {
                    seen.push(key);
                    seen.len() - 1
                }
            };
            Ok(Label::Class(id as u32))
        })
        .collect()
}
