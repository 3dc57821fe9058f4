//! On-disk bundles and projections.
//!
//! A bundle is a directory holding `manifest.json`, `activations.bin` and
//! `labels.bin`; a projection is a directory holding `proj.json` and
//! `proj.bin`. Every payload is little-endian and checksummed with SHA-256.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bundle::{common_label_kind, BundleMeta, Dtype, LabelKind, LabeledActivations};
use crate::error::{Result, SmdsError};
use crate::geometry::{DistanceSpec, GeoPoint, Label};
use crate::projection::{Projection, Provenance};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ACTIVATIONS_FILE: &str = "activations.bin";
pub const LABELS_FILE: &str = "labels.bin";
pub const PROJECTION_JSON: &str = "proj.json";
pub const PROJECTION_BIN: &str = "proj.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub version: u32,
    pub n: usize,
    pub d: usize,
    pub dtype: Dtype,
    pub label_kind: String,
    pub task: String,
    pub site: String,
    pub layer: u32,
    pub model_id: String,
    pub files: Vec<String>,
    pub checksum: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionManifest {
    pub version: u32,
    pub m: usize,
    pub d: usize,
    pub alpha: f64,
    pub spec: DistanceSpec,
    pub provenance: Provenance,
    pub files: Vec<String>,
    pub checksum: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| SmdsError::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| SmdsError::io(path, e))
}

fn read_manifest<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_file(path)?;
    let malformed = |e: serde_json::Error| SmdsError::Manifest {
        path: path.to_path_buf(),
        msg: e.to_string(),
    };
    let probe: VersionProbe = serde_json::from_slice(&bytes).map_err(malformed)?;
    if probe.version != FORMAT_VERSION {
        return Err(SmdsError::UnsupportedVersion(probe.version));
    }
    serde_json::from_slice(&bytes).map_err(malformed)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| SmdsError::Manifest {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// Reads a payload listed in a manifest, enforcing its length and checksum.
fn read_payload(
    dir: &Path,
    name: &str,
    files: &[String],
    checksum: &BTreeMap<String, String>,
    len: usize,
) -> Result<Vec<u8>> {
    let path = dir.join(name);
    if !files.iter().any(|f| f == name) {
        return Err(SmdsError::Manifest {
            path: dir.join(MANIFEST_FILE),
            msg: format!("`{name}` is not listed in files"),
        });
    }
    let expected = checksum.get(name).ok_or_else(|| SmdsError::Manifest {
        path: dir.join(MANIFEST_FILE),
        msg: format!("no checksum for `{name}`"),
    })?;
    let bytes = read_file(&path)?;
    if bytes.len() < len {
        return Err(SmdsError::TruncatedPayload {
            path,
            expected: len,
            found: bytes.len(),
        });
    }
    if bytes.len() > len {
        return Err(SmdsError::Manifest {
            path,
            msg: format!("payload has {} bytes, manifest implies {len}", bytes.len()),
        });
    }
    let found = sha256_hex(&bytes);
    if !found.eq_ignore_ascii_case(expected) {
        return Err(SmdsError::ChecksumMismatch {
            path,
            expected: expected.clone(),
            found,
        });
    }
    Ok(bytes)
}

/// Populates a fresh sibling directory and renames it onto `path`, replacing
/// any previous directory there.
fn write_dir_atomically(path: &Path, fill: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| SmdsError::io(&parent, e))?;
    let tmp = tempfile::Builder::new()
        .prefix(".smds-write-")
        .tempdir_in(&parent)
        .map_err(|e| SmdsError::io(&parent, e))?;
    fill(tmp.path())?;
    let mut stale = None;
    if path.exists() {
        let old = tempfile::Builder::new()
            .prefix(".smds-old-")
            .tempdir_in(&parent)
            .map_err(|e| SmdsError::io(&parent, e))?;
        let old_path = old.path().join("previous");
        fs::rename(path, &old_path).map_err(|e| SmdsError::io(path, e))?;
        stale = Some(old);
    }
    fs::rename(tmp.path(), path).map_err(|e| SmdsError::io(path, e))?;
    drop(stale);
    Ok(())
}

fn label_values(label: &Label, out: &mut Vec<f64>) {
    match label {
        Label::Scalar(v) => out.push(*v),
        Label::Vector(v) => out.extend_from_slice(v),
        Label::Class(c) => out.push(f64::from(*c)),
        Label::Geo(g) => out.extend_from_slice(&[g.lat, g.lon]),
    }
}

fn decode_labels(values: &[f64], kind: LabelKind) -> Result<Vec<Label>> {
    let w = kind.width();
    values
        .chunks_exact(w)
        .enumerate()
        .map(|(i, c)| match kind {
            LabelKind::Scalar => Ok(Label::Scalar(c[0])),
            LabelKind::Vector(_) => Ok(Label::Vector(c.to_vec())),
            LabelKind::Geo => Ok(Label::Geo(GeoPoint {
                lat: c[0],
                lon: c[1],
            })),
            LabelKind::Class => {
                let v = c[0];
                if v.fract() == 0.0 && (0.0..=f64::from(u32::MAX)).contains(&v) {
                    Ok(Label::Class(v as u32))
                } else {
                    Err(SmdsError::InvalidLabel(format!(
                        "class label {i} is {v}, not a non-negative integer"
                    )))
                }
            }
        })
        .collect()
}

fn f64_bytes(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    values.into_iter().flat_map(f64::to_le_bytes).collect()
}

fn f64_values(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect()
}

fn encode_activations(x: &DMatrix<f64>, dtype: Dtype) -> Vec<u8> {
    let rows = (0..x.nrows()).flat_map(|i| (0..x.ncols()).map(move |j| x[(i, j)]));
    match dtype {
        Dtype::F64 => f64_bytes(rows),
        Dtype::F32 => rows.flat_map(|v| (v as f32).to_le_bytes()).collect(),
    }
}

fn decode_activations(bytes: &[u8], n: usize, d: usize, dtype: Dtype) -> DMatrix<f64> {
    let values: Vec<f64> = match dtype {
        Dtype::F64 => f64_values(bytes),
        Dtype::F32 => bytes
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4-byte chunk"))))
            .collect(),
    };
    DMatrix::from_row_slice(n, d, &values)
}

pub fn write_bundle(bundle: &LabeledActivations, path: impl AsRef<Path>) -> Result<()> {
    bundle.validate()?;
    let kind = bundle.label_kind()?;
    if bundle.meta.dtype == Dtype::F32 {
        if let Some(v) = bundle.x.iter().find(|v| v.abs() > f64::from(f32::MAX)) {
            return Err(SmdsError::InvalidInput(format!(
                "activation {v} overflows f32 storage"
            )));
        }
    }
    let activations = encode_activations(&bundle.x, bundle.meta.dtype);
    let mut values = Vec::with_capacity(bundle.n() * kind.width());
    for l in &bundle.labels {
        label_values(l, &mut values);
    }
    let labels = f64_bytes(values);
    let meta = &bundle.meta;
    let manifest = BundleManifest {
        version: FORMAT_VERSION,
        n: bundle.n(),
        d: bundle.d(),
        dtype: meta.dtype,
        label_kind: kind.to_string(),
        task: meta.task.clone(),
        site: meta.site.clone(),
        layer: meta.layer,
        model_id: meta.model_id.clone(),
        files: vec![ACTIVATIONS_FILE.into(), LABELS_FILE.into()],
        checksum: BTreeMap::from([
            (ACTIVATIONS_FILE.to_string(), sha256_hex(&activations)),
            (LABELS_FILE.to_string(), sha256_hex(&labels)),
        ]),
    };
    write_dir_atomically(path.as_ref(), |dir| {
        write_file(&dir.join(ACTIVATIONS_FILE), &activations)?;
        write_file(&dir.join(LABELS_FILE), &labels)?;
        write_json(&dir.join(MANIFEST_FILE), &manifest)
    })
}

pub fn read_bundle_manifest(path: impl AsRef<Path>) -> Result<BundleManifest> {
    read_manifest(&path.as_ref().join(MANIFEST_FILE))
}

pub fn read_bundle(path: impl AsRef<Path>) -> Result<LabeledActivations> {
    let dir = path.as_ref();
    let manifest = read_bundle_manifest(dir)?;
    let kind: LabelKind = manifest
        .label_kind
        .parse()
        .map_err(|_| SmdsError::Manifest {
            path: dir.join(MANIFEST_FILE),
            msg: format!("unknown label_kind `{}`", manifest.label_kind),
        })?;
    let (n, d) = (manifest.n, manifest.d);
    let x_bytes = read_payload(
        dir,
        ACTIVATIONS_FILE,
        &manifest.files,
        &manifest.checksum,
        n * d * manifest.dtype.width(),
    )?;
    let l_bytes = read_payload(
        dir,
        LABELS_FILE,
        &manifest.files,
        &manifest.checksum,
        n * kind.width() * 8,
    )?;
    let x = decode_activations(&x_bytes, n, d, manifest.dtype);
    let labels = decode_labels(&f64_values(&l_bytes), kind)?;
    if n > 0 && common_label_kind(&labels)? != kind {
        return Err(SmdsError::InvalidLabel(format!(
            "labels do not decode as {kind}"
        )));
    }
    LabeledActivations::new(
        x,
        labels,
        BundleMeta {
            task: manifest.task,
            site: manifest.site,
            layer: manifest.layer,
            model_id: manifest.model_id,
            dtype: manifest.dtype,
        },
    )
}

/// Bundle directories directly under `dir` (those holding a manifest), sorted
/// by path.
pub fn list_bundles(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| SmdsError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| SmdsError::io(dir, e))?;
        let p = entry.path();
        let hidden = p
            .file_name()
            .and_then(|s| s.to_str())
            .is_some_and(|s| s.starts_with('.'));
        if !hidden && p.join(MANIFEST_FILE).is_file() {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub fn write_projection(p: &Projection, path: impl AsRef<Path>) -> Result<()> {
    p.validate()?;
    let bin = f64_bytes(
        (0..p.m())
            .flat_map(|i| (0..p.d()).map(move |j| p.w[(i, j)]))
            .chain(p.train_mean.iter().copied())
            .chain(p.embed_mean.iter().copied()),
    );
    let manifest = ProjectionManifest {
        version: FORMAT_VERSION,
        m: p.m(),
        d: p.d(),
        alpha: p.alpha,
        spec: p.spec.clone(),
        provenance: p.provenance.clone(),
        files: vec![PROJECTION_BIN.into()],
        checksum: BTreeMap::from([(PROJECTION_BIN.to_string(), sha256_hex(&bin))]),
    };
    write_dir_atomically(path.as_ref(), |dir| {
        write_file(&dir.join(PROJECTION_BIN), &bin)?;
        write_json(&dir.join(PROJECTION_JSON), &manifest)
    })
}

pub fn read_projection(path: impl AsRef<Path>) -> Result<Projection> {
    let dir = path.as_ref();
    let manifest: ProjectionManifest = read_manifest(&dir.join(PROJECTION_JSON))?;
    let (m, d) = (manifest.m, manifest.d);
    let len = (m * d + d + m) * 8;
    let bytes = read_payload(
        dir,
        PROJECTION_BIN,
        &manifest.files,
        &manifest.checksum,
        len,
    )?;
    let values = f64_values(&bytes);
    let p = Projection {
        w: DMatrix::from_row_slice(m, d, &values[..m * d]),
        train_mean: DVector::from_column_slice(&values[m * d..m * d + d]),
        embed_mean: DVector::from_column_slice(&values[m * d + d..]),
        alpha: manifest.alpha,
        spec: manifest.spec,
        provenance: manifest.provenance,
    };
    p.validate()?;
    Ok(p)
}
