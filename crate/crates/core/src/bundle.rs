//! Labeled activation matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmdsError};
use crate::geometry::Label;
use crate::projection::Provenance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    #[default]
    F64,
}

impl Dtype {
    pub fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

impl FromStr for Dtype {
    type Err = SmdsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Dtype::F32),
            "f64" => Ok(Dtype::F64),
            other => Err(SmdsError::InvalidInput(format!("unknown dtype `{other}`"))),
        }
    }
}

/// The label variant shared by every row of a bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Scalar,
    Vector(usize),
    Class,
    Geo,
}

impl LabelKind {
    /// f64 values stored per label.
    pub fn width(self) -> usize {
        match self {
            LabelKind::Scalar | LabelKind::Class => 1,
            LabelKind::Vector(k) => k,
            LabelKind::Geo => 2,
        }
    }

    pub fn of(label: &Label) -> LabelKind {
        match label {
            Label::Scalar(_) => LabelKind::Scalar,
            Label::Vector(v) => LabelKind::Vector(v.len()),
            Label::Class(_) => LabelKind::Class,
            Label::Geo(_) => LabelKind::Geo,
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelKind::Scalar => f.write_str("scalar"),
            LabelKind::Vector(k) => write!(f, "vector({k})"),
            LabelKind::Class => f.write_str("class"),
            LabelKind::Geo => f.write_str("geo"),
        }
    }
}

impl FromStr for LabelKind {
    type Err = SmdsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(LabelKind::Scalar),
            "class" => Ok(LabelKind::Class),
            "geo" => Ok(LabelKind::Geo),
            _ => s
                .strip_prefix("vector(")
                .and_then(|rest| rest.strip_suffix(')'))
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|k| *k > 0)
                .map(LabelKind::Vector)
                .ok_or_else(|| SmdsError::InvalidInput(format!("unknown label kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BundleMeta {
    pub task: String,
    pub site: String,
    pub layer: u32,
    pub model_id: String,
    /// Storage width on disk; computation is always f64.
    pub dtype: Dtype,
}

impl BundleMeta {
    pub fn provenance(&self) -> Provenance {
        Provenance {
            task: self.task.clone(),
            site: self.site.clone(),
            layer: self.layer,
            model_id: self.model_id.clone(),
        }
    }
}

/// The label variant shared by every label; errors on a mixed or empty list.
pub fn common_label_kind(labels: &[Label]) -> Result<LabelKind> {
    let first = labels
        .first()
        .map(LabelKind::of)
        .ok_or_else(|| SmdsError::InvalidInput("bundle has no rows".into()))?;
    if let Some((i, l)) = labels
        .iter()
        .enumerate()
        .find(|(_, l)| LabelKind::of(l) != first)
    {
        return Err(SmdsError::InvalidLabel(format!(
            "label {i} is {} but bundle labels are {first}",
            LabelKind::of(l)
        )));
    }
    Ok(first)
}

/// `n` activation rows in `d` dimensions, each with one label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledActivations {
    pub x: DMatrix<f64>,
    pub labels: Vec<Label>,
    pub meta: BundleMeta,
}

impl LabeledActivations {
    pub fn new(x: DMatrix<f64>, labels: Vec<Label>, meta: BundleMeta) -> Result<Self> {
        let b = LabeledActivations { x, labels, meta };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.x.nrows() {
            return Err(SmdsError::DimensionMismatch(format!(
                "{} labels for {} rows",
                self.labels.len(),
                self.x.nrows()
            )));
        }
        if let Some(i) = self.x.iter().position(|v| !v.is_finite()) {
            return Err(SmdsError::InvalidInput(format!(
                "non-finite activation at row {}",
                i % self.x.nrows().max(1)
            )));
        }
        self.label_kind()?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// The common label variant; errors on a mixed or empty label list.
    pub fn label_kind(&self) -> Result<LabelKind> {
        common_label_kind(&self.labels)
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> LabeledActivations {
        let x = self.x.select_rows(indices);
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        LabeledActivations {
            x,
            labels,
            meta: self.meta.clone(),
        }
    }

    pub fn with_labels(&self, labels: Vec<Label>) -> Result<LabeledActivations> {
        LabeledActivations::new(self.x.clone(), labels, self.meta.clone())
    }
}
