//! Cross-validated stress, hypothesis sweeps and shuffled-label controls.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::LabeledActivations;
use crate::error::{Result, SmdsError};
use crate::geometry::{normalize_labels, DistanceKind, DistanceSpec, Label, LabelRange, RawLabel};
use crate::projection::{fit_smds, DEFAULT_ALPHA, DEFAULT_M};
use crate::stress::{stress_score, StressReport};

/// Near-equal stresses closer than this are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub m: usize,
    pub alpha: f64,
    pub k_folds: usize,
    pub seed: u64,
}

impl CvConfig {
    pub fn new(seed: u64) -> Self {
        CvConfig {
            m: DEFAULT_M,
            alpha: DEFAULT_ALPHA,
            k_folds: 5,
            seed,
        }
    }
}

/// Seeded permutation of `0..n` cut into `k` contiguous blocks whose sizes
/// differ by at most one.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(SmdsError::InvalidInput(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    if n < 2 * k {
        return Err(SmdsError::InvalidInput(format!(
            "{n} samples are too few for {k} folds (need at least {})",
            2 * k
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(perm[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in fold {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}

/// One fit per fold on the complement, scored on the fold.
pub fn cv_with_folds(
    bundle: &LabeledActivations,
    spec: &DistanceSpec,
    m: usize,
    alpha: f64,
    folds: &[Vec<usize>],
) -> Result<Vec<StressReport>> {
    // Data-derived parameters come from the whole bundle so every fold
    // shares them.
    let spec = spec.resolve(&bundle.labels)?;
    folds
        .iter()
        .enumerate()
        .map(|(f, fold)| {
            let train = bundle.select(&complement(bundle.n(), fold));
            let hold = bundle.select(fold);
            let p = fit_smds(&train.x, &train.labels, &spec, m, alpha)?;
            let report = stress_score(&p, &hold.x, &hold.labels).map_err(|e| match e {
                SmdsError::DegenerateHoldout(msg) => {
                    SmdsError::DegenerateHoldout(format!("fold {f}: {msg}"))
                }
                other => other,
            })?;
            Ok(StressReport {
                fold: Some(f),
                ..report
            })
        })
        .collect()
}

pub fn cross_validated_stress(
    bundle: &LabeledActivations,
    spec: &DistanceSpec,
    cfg: &CvConfig,
) -> Result<Vec<StressReport>> {
    let folds = fold_assignment(bundle.n(), cfg.k_folds, cfg.seed)?;
    cv_with_folds(bundle, spec, cfg.m, cfg.alpha, &folds)
}

pub fn mean_stress(reports: &[StressReport]) -> f64 {
    reports.iter().map(|r| r.stress).sum::<f64>() / reports.len() as f64
}

/// Treats the stored labels as raw task quantities and normalizes them for
/// `spec` over the declared `range`.
pub fn normalize_bundle(
    bundle: &LabeledActivations,
    spec: &DistanceSpec,
    range: LabelRange,
) -> Result<LabeledActivations> {
    let raw: Vec<RawLabel> = bundle.labels.iter().map(RawLabel::from).collect();
    bundle.with_labels(normalize_labels(&raw, spec, Some(range))?)
}

/// Every kind whose label requirements the labels satisfy, either as stored
/// or after normalization over `range`.
pub fn applicable_kinds(labels: &[Label], range: Option<LabelRange>) -> Vec<DistanceKind> {
    let raw: Vec<RawLabel> = labels.iter().map(RawLabel::from).collect();
    DistanceKind::ALL
        .into_iter()
        .filter(|k| {
            let spec = DistanceSpec::new(*k);
            match range {
                None => spec.resolve(labels).is_ok(),
                Some(r) => normalize_labels(&raw, &spec, Some(r))
                    .and_then(|l| spec.resolve(&l))
                    .is_ok(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub spec: String,
    pub site: String,
    pub layer: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub fold_stress: Vec<f64>,
    pub mean_stress: f64,
    /// Population standard deviation over folds.
    pub std_stress: f64,
    /// `-ln(mean_stress)`.
    pub neg_log_mean: f64,
}

impl CellStats {
    pub fn from_stress(fold_stress: Vec<f64>) -> Self {
        let k = fold_stress.len() as f64;
        let mean = fold_stress.iter().sum::<f64>() / k;
        let var = fold_stress.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / k;
        CellStats {
            fold_stress,
            mean_stress: mean,
            std_stress: var.sqrt(),
            neg_log_mean: -mean.ln(),
        }
    }

    pub fn neg_log_folds(&self) -> Vec<f64> {
        self.fold_stress.iter().map(|s| -s.ln()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: BTreeMap<CellKey, CellStats>,
    pub best: CellKey,
    pub seed: u64,
    pub m: usize,
    pub alpha: f64,
    pub k_folds: usize,
}

/// Lowest mean stress; near-ties go to the first key in (spec, site, layer)
/// order.
pub fn select_best<'a, I>(cells: I) -> Option<CellKey>
where
    I: IntoIterator<Item = (&'a CellKey, f64)>,
{
    let mut sorted: Vec<(&CellKey, f64)> = cells.into_iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(b.0));
    let mut best: Option<(&CellKey, f64)> = None;
    for (key, mean) in sorted {
        match best {
            Some((_, b)) if !(mean < b - TIE_TOLERANCE) => {}
            _ => best = Some((key, mean)),
        }
    }
    best.map(|(k, _)| k.clone())
}

/// Cross-validated stress for every (bundle, spec) cell.
///
/// All specs on one bundle share the same folds. Cells are evaluated in
/// parallel (on a pool of `jobs` threads when given) and keyed, so the
/// result does not depend on scheduling.
pub fn sweep(
    bundles: &[LabeledActivations],
    specs: &[DistanceSpec],
    cfg: &CvConfig,
    jobs: Option<usize>,
) -> Result<SweepResult> {
    sweep_impl(bundles, specs, cfg, jobs, None)
}

/// [`sweep`] over bundles holding raw task quantities; each spec sees the
/// labels normalized for it over `range`.
pub fn sweep_normalized(
    bundles: &[LabeledActivations],
    specs: &[DistanceSpec],
    cfg: &CvConfig,
    jobs: Option<usize>,
    range: LabelRange,
) -> Result<SweepResult> {
    sweep_impl(bundles, specs, cfg, jobs, Some(range))
}

fn sweep_impl(
    bundles: &[LabeledActivations],
    specs: &[DistanceSpec],
    cfg: &CvConfig,
    jobs: Option<usize>,
    range: Option<LabelRange>,
) -> Result<SweepResult> {
    if specs.is_empty() {
        return Err(SmdsError::InvalidInput("no distance specs to sweep".into()));
    }
    if bundles.is_empty() {
        return Err(SmdsError::InvalidInput("no bundles to sweep".into()));
    }
    let mut work = Vec::new();
    let mut folds = Vec::with_capacity(bundles.len());
    for (b, bundle) in bundles.iter().enumerate() {
        folds.push(fold_assignment(bundle.n(), cfg.k_folds, cfg.seed)?);
        for spec in specs {
            let inapplicable = |e: SmdsError| {
                SmdsError::InvalidInput(format!(
                    "{} is not applicable to bundle {} (site {}, layer {}): {e}",
                    spec.name(),
                    bundle.meta.task,
                    bundle.meta.site,
                    bundle.meta.layer
                ))
            };
            let prepared = match range {
                None => None,
                Some(r) => Some(normalize_bundle(bundle, spec, r).map_err(inapplicable)?),
            };
            spec.resolve(&prepared.as_ref().unwrap_or(bundle).labels)
                .map_err(inapplicable)?;
            work.push((b, spec, prepared));
        }
    }

    let run = || -> Vec<Result<(CellKey, CellStats)>> {
        work.par_iter()
            .map(|(b, spec, prepared)| {
                let b = *b;
                let bundle = prepared.as_ref().unwrap_or(&bundles[b]);
                let reports = cv_with_folds(bundle, spec, cfg.m, cfg.alpha, &folds[b])?;
                let key = CellKey {
                    spec: spec.name().to_string(),
                    site: bundle.meta.site.clone(),
                    layer: bundle.meta.layer,
                };
                Ok((
                    key,
                    CellStats::from_stress(reports.iter().map(|r| r.stress).collect()),
                ))
            })
            .collect()
    };
    let results = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| SmdsError::InvalidInput(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mut cells = BTreeMap::new();
    for r in results {
        let (key, stats) = r?;
        if cells.contains_key(&key) {
            return Err(SmdsError::InvalidInput(format!(
                "duplicate sweep cell ({}, {}, {}); bundles must differ in site or layer",
                key.spec, key.site, key.layer
            )));
        }
        cells.insert(key, stats);
    }
    let best = select_best(cells.iter().map(|(k, c)| (k, c.mean_stress))).expect("non-empty sweep");
    Ok(SweepResult {
        cells,
        best,
        seed: cfg.seed,
        m: cfg.m,
        alpha: cfg.alpha,
        k_folds: cfg.k_folds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlReport {
    pub true_reports: Vec<StressReport>,
    pub shuffled_reports: Vec<StressReport>,
}

impl ControlReport {
    pub fn true_mean(&self) -> f64 {
        mean_stress(&self.true_reports)
    }

    pub fn shuffled_mean(&self) -> f64 {
        mean_stress(&self.shuffled_reports)
    }
}

/// Labels permuted by a seeded shuffle.
pub fn shuffle_labels(labels: &[Label], shuffle_seed: u64) -> Vec<Label> {
    let mut perm: Vec<usize> = (0..labels.len()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
    perm.into_iter().map(|i| labels[i].clone()).collect()
}

/// The same cross-validation run on true and on shuffled labels, with the
/// same folds.
pub fn control_shuffle(
    bundle: &LabeledActivations,
    spec: &DistanceSpec,
    cfg: &CvConfig,
    shuffle_seed: u64,
) -> Result<ControlReport> {
    let folds = fold_assignment(bundle.n(), cfg.k_folds, cfg.seed)?;
    let true_reports = cv_with_folds(bundle, spec, cfg.m, cfg.alpha, &folds)?;
    let shuffled = bundle.with_labels(shuffle_labels(&bundle.labels, shuffle_seed))?;
    let shuffled_reports = cv_with_folds(&shuffled, spec, cfg.m, cfg.alpha, &folds)?;
    Ok(ControlReport {
        true_reports,
        shuffled_reports,
    })
}

/// One per-fold row of a sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub spec: String,
    pub site: String,
    pub layer: u32,
    pub fold: usize,
    #[serde(rename = "S")]
    pub stress: f64,
    #[serde(rename = "neg_log_S")]
    pub neg_log_stress: f64,
}

/// One per-cell row of a summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub spec: String,
    pub site: String,
    pub layer: u32,
    pub n_folds: usize,
    #[serde(rename = "mean_S")]
    pub mean_stress: f64,
    #[serde(rename = "std_S")]
    pub std_stress: f64,
    #[serde(rename = "neg_log_mean_S")]
    pub neg_log_mean: f64,
    #[serde(rename = "mean_neg_log_S")]
    pub mean_neg_log: f64,
    #[serde(rename = "std_neg_log_S")]
    pub std_neg_log: f64,
    pub best: bool,
}

pub const SWEEP_HEADER: [&str; 6] = ["spec", "site", "layer", "fold", "S", "neg_log_S"];
pub const SUMMARY_HEADER: [&str; 10] = [
    "spec",
    "site",
    "layer",
    "n_folds",
    "mean_S",
    "std_S",
    "neg_log_mean_S",
    "mean_neg_log_S",
    "std_neg_log_S",
    "best",
];

/// Shortest round-tripping float text (scientific for tiny values).
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

impl SweepResult {
    pub fn fold_rows(&self) -> Vec<FoldRow> {
        self.cells
            .iter()
            .flat_map(|(key, stats)| {
                stats
                    .fold_stress
                    .iter()
                    .enumerate()
                    .map(move |(f, s)| FoldRow {
                        spec: key.spec.clone(),
                        site: key.site.clone(),
                        layer: key.layer,
                        fold: f,
                        stress: *s,
                        neg_log_stress: -s.ln(),
                    })
            })
            .collect()
    }

    pub fn best_stats(&self) -> &CellStats {
        &self.cells[&self.best]
    }
}

pub fn write_fold_csv<W: Write>(rows: &[FoldRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.spec.clone(),
            r.site.clone(),
            r.layer.to_string(),
            r.fold.to_string(),
            fmt_f64(r.stress),
            fmt_f64(r.neg_log_stress),
        ])?;
    }
    w.flush().map_err(|e| SmdsError::io("<csv>", e))?;
    Ok(())
}

pub fn read_fold_csv<R: Read>(input: R) -> Result<Vec<FoldRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_HEADER {
        return Err(SmdsError::InvalidInput(format!(
            "sweep CSV header must be {}, found {}",
            SWEEP_HEADER.join(","),
            header.join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(SmdsError::from))
        .collect()
}

/// Per-cell means and spreads with the best cell flagged.
pub fn summarize(rows: &[FoldRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<CellKey, Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry(CellKey {
                spec: r.spec.clone(),
                site: r.site.clone(),
                layer: r.layer,
            })
            .or_default()
            .push(r.stress);
    }
    let stats: BTreeMap<CellKey, CellStats> = groups
        .into_iter()
        .map(|(k, s)| (k, CellStats::from_stress(s)))
        .collect();
    let best = select_best(stats.iter().map(|(k, c)| (k, c.mean_stress)));
    stats
        .iter()
        .map(|(key, c)| {
            let logs = c.neg_log_folds();
            let k = logs.len() as f64;
            let mean_log = logs.iter().sum::<f64>() / k;
            let std_log = (logs.iter().map(|v| (v - mean_log).powi(2)).sum::<f64>() / k).sqrt();
            SummaryRow {
                spec: key.spec.clone(),
                site: key.site.clone(),
                layer: key.layer,
                n_folds: c.fold_stress.len(),
                mean_stress: c.mean_stress,
                std_stress: c.std_stress,
                neg_log_mean: c.neg_log_mean,
                mean_neg_log: mean_log,
                std_neg_log: std_log,
                best: best.as_ref() == Some(key),
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.spec.clone(),
            r.site.clone(),
            r.layer.to_string(),
            r.n_folds.to_string(),
            fmt_f64(r.mean_stress),
            fmt_f64(r.std_stress),
            fmt_f64(r.neg_log_mean),
            fmt_f64(r.mean_neg_log),
            fmt_f64(r.std_neg_log),
            r.best.to_string(),
        ])?;
    }
    w.flush().map_err(|e| SmdsError::io("<csv>", e))?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|row| row.map_err(SmdsError::from))
        .collect()
}
