use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use smds::intervention::{self, InterventionSpec, Mode};
use smds::prompts::{self, Task};
use smds::selection::{self, CvConfig};
use smds::synth::{Shape, SyntheticSpec};
use smds::{
    io as bundle_io, DistanceKind, DistanceSpec, Dtype, LabelKind, LabelRange, LabeledActivations,
    Projection,
};

use crate::{
    svg, CorrelateArgs, DecodeArgs, FitArgs, GenPromptsArgs, InterveneArgs, ReportArgs,
    SweepOptions, SynthArgs,
};

/// A problem with the command line itself rather than with the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeArg {
    Auto,
    Off,
    Fixed(LabelRange),
}

pub fn parse_range(s: &str) -> Result<RangeArg, String> {
    match s {
        "auto" => Ok(RangeArg::Auto),
        "none" => Ok(RangeArg::Off),
        _ => {
            let (lo, hi) = s
                .split_once(',')
                .ok_or_else(|| format!("expected auto, none or MIN,MAX, got `{s}`"))?;
            let lo: f64 = lo.trim().parse().map_err(|e| format!("MIN: {e}"))?;
            let hi: f64 = hi.trim().parse().map_err(|e| format!("MAX: {e}"))?;
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(format!("range {lo},{hi} must be finite with MAX > MIN"));
            }
            Ok(RangeArg::Fixed(LabelRange::new(lo, hi)))
        }
    }
}

impl RangeArg {
    /// The range to normalize `bundle`'s labels over, if any.
    fn resolve(self, bundle: &LabeledActivations) -> Option<LabelRange> {
        match self {
            RangeArg::Off => None,
            RangeArg::Fixed(r) => Some(r),
            RangeArg::Auto => {
                if bundle.label_kind().ok()? != LabelKind::Scalar {
                    return None;
                }
                bundle.meta.task.parse::<Task>().ok()?.label_range()
            }
        }
    }
}

fn read_bundle(path: &Path) -> Result<LabeledActivations> {
    bundle_io::read_bundle(path).with_context(|| format!("reading bundle {}", path.display()))
}

fn read_projection(path: &Path) -> Result<Projection> {
    bundle_io::read_projection(path)
        .with_context(|| format!("reading projection {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn prepare(
    bundle: &LabeledActivations,
    spec: &DistanceSpec,
    range: Option<LabelRange>,
) -> Result<LabeledActivations> {
    match range {
        Some(r) => selection::normalize_bundle(bundle, spec, r).with_context(|| {
            format!(
                "normalizing labels of {} for {}",
                bundle.meta.task,
                spec.name()
            )
        }),
        None => Ok(bundle.clone()),
    }
}

fn parse_kind(name: &str) -> Result<DistanceKind> {
    name.trim()
        .parse::<DistanceKind>()
        .map_err(|e| usage(e.to_string()))
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let shape: Shape = a
        .shape
        .parse()
        .map_err(|e: smds::SmdsError| usage(e.to_string()))?;
    let dtype: Dtype = a
        .dtype
        .parse()
        .map_err(|e: smds::SmdsError| usage(e.to_string()))?;
    let mut spec = SyntheticSpec::new(shape, a.n, a.dim, a.noise, a.seed);
    spec.scale = a.scale;
    let mut bundle = smds::embed_manifold(&spec)?;
    bundle.meta.dtype = dtype;
    bundle_io::write_bundle(&bundle, &a.out)?;
    println!(
        "wrote {} ({} x {}, {} labels) to {}",
        shape,
        bundle.n(),
        bundle.d(),
        bundle.label_kind()?,
        a.out.display()
    );
    Ok(())
}

pub fn gen_prompts(a: GenPromptsArgs) -> Result<()> {
    let task: Task = a
        .task
        .parse()
        .map_err(|e: smds::SmdsError| usage(e.to_string()))?;
    let records = prompts::gen_prompts(task, a.n, a.seed)?;
    prompts::write_jsonl(&records, create(&a.out)?)?;
    let note = if records.iter().any(|r| r.with_replacement) {
        " (drawn with replacement)"
    } else {
        ""
    };
    println!(
        "wrote {} {task} prompts to {}{note}",
        records.len(),
        a.out.display()
    );
    Ok(())
}

pub fn fit(a: FitArgs) -> Result<()> {
    let kind = parse_kind(&a.distance)?;
    let bundle = read_bundle(&a.bundle)?;
    let spec = DistanceSpec::new(kind);
    let prepared = prepare(&bundle, &spec, a.fit.label_range.resolve(&bundle))?;
    let mut p = smds::fit_smds(&prepared.x, &prepared.labels, &spec, a.fit.m, a.fit.alpha)
        .with_context(|| format!("fitting {} on {}", kind, a.bundle.display()))?;
    p.provenance = bundle.meta.provenance();
    bundle_io::write_projection(&p, &a.out)?;
    println!(
        "fitted {} (m={}, d={}, alpha={}) to {}",
        kind,
        p.m(),
        p.d(),
        p.alpha,
        a.out.display()
    );
    if let Some(path) = a.svg {
        let z = smds::project(&p, &prepared.x)?;
        let mut w = create(&path)?;
        svg::scatter(&z, &prepared.labels, &mut w)?;
        w.flush()?;
        println!("drew {}", path.display());
    }
    Ok(())
}

fn load_bundles(dir: &Path) -> Result<Vec<LabeledActivations>> {
    let paths = if dir.join(bundle_io::MANIFEST_FILE).is_file() {
        vec![dir.to_path_buf()]
    } else {
        bundle_io::list_bundles(dir).with_context(|| format!("listing {}", dir.display()))?
    };
    if paths.is_empty() {
        bail!(
            "no bundles (directories with {}) in {}",
            bundle_io::MANIFEST_FILE,
            dir.display()
        );
    }
    paths.iter().map(|p| read_bundle(p)).collect()
}

fn common_range(bundles: &[LabeledActivations], arg: RangeArg) -> Result<Option<LabelRange>> {
    let first = arg.resolve(&bundles[0]);
    for b in &bundles[1..] {
        if arg.resolve(b) != first {
            bail!(
                "bundles {} and {} need different label ranges; sweep them separately",
                bundles[0].meta.task,
                b.meta.task
            );
        }
    }
    Ok(first)
}

fn sweep_specs(
    names: &str,
    bundles: &[LabeledActivations],
    range: Option<LabelRange>,
) -> Result<Vec<DistanceSpec>> {
    let kinds = if names.trim() == "all" {
        let mut kinds = selection::applicable_kinds(&bundles[0].labels, range);
        for b in &bundles[1..] {
            let ok = selection::applicable_kinds(&b.labels, range);
            kinds.retain(|k| ok.contains(k));
        }
        if kinds.is_empty() {
            bail!("no distance applies to every bundle's labels");
        }
        kinds
    } else {
        let mut kinds = Vec::new();
        for name in names.split(',') {
            let k = parse_kind(name)?;
            if !kinds.contains(&k) {
                kinds.push(k);
            }
        }
        kinds
    };
    Ok(kinds.into_iter().map(DistanceSpec::new).collect())
}

fn cv_config(o: &SweepOptions) -> CvConfig {
    CvConfig {
        m: o.fit.m,
        alpha: o.fit.alpha,
        k_folds: o.folds,
        seed: o.seed,
    }
}

/// `s.csv` -> `s.summary.csv`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.csv"))
}

pub fn sweep(o: SweepOptions) -> Result<()> {
    let bundles = load_bundles(&o.bundle_dir)?;
    let range = common_range(&bundles, o.fit.label_range)?;
    let specs = sweep_specs(&o.distances, &bundles, range)?;
    let cfg = cv_config(&o);
    let result = match range {
        Some(r) => selection::sweep_normalized(&bundles, &specs, &cfg, o.jobs, r)?,
        None => selection::sweep(&bundles, &specs, &cfg, o.jobs)?,
    };
    let rows = result.fold_rows();
    selection::write_fold_csv(&rows, create(&o.out)?)?;
    let summary = summary_path(&o.out);
    selection::write_summary_csv(&selection::summarize(&rows), create(&summary)?)?;
    let best = result.best_stats();
    println!(
        "best: {} (site {}, layer {}) mean S {:.4e}, -log mean S {:.3}",
        result.best.spec, result.best.site, result.best.layer, best.mean_stress, best.neg_log_mean
    );
    println!("wrote {} and {}", o.out.display(), summary.display());
    Ok(())
}

pub const CONTROL_HEADER: [&str; 8] = [
    "spec",
    "site",
    "layer",
    "true_mean_S",
    "shuffled_mean_S",
    "true_neg_log_S",
    "shuffled_neg_log_S",
    "drop",
];

pub fn control(o: SweepOptions, shuffle_seed: u64) -> Result<()> {
    let bundles = load_bundles(&o.bundle_dir)?;
    let range = common_range(&bundles, o.fit.label_range)?;
    let specs = sweep_specs(&o.distances, &bundles, range)?;
    let cfg = cv_config(&o);
    let mut rows = Vec::new();
    for bundle in &bundles {
        for spec in &specs {
            let prepared = prepare(bundle, spec, range)?;
            let r = selection::control_shuffle(&prepared, spec, &cfg, shuffle_seed).with_context(
                || {
                    format!(
                        "{} on {} (site {}, layer {})",
                        spec.name(),
                        bundle.meta.task,
                        bundle.meta.site,
                        bundle.meta.layer
                    )
                },
            )?;
            let (t, s) = (r.true_mean(), r.shuffled_mean());
            rows.push((
                spec.name(),
                bundle.meta.site.clone(),
                bundle.meta.layer,
                t,
                s,
            ));
        }
    }
    let mut w = csv::Writer::from_writer(create(&o.out)?);
    w.write_record(CONTROL_HEADER)?;
    for (spec, site, layer, t, s) in &rows {
        let (nt, ns) = (-t.ln(), -s.ln());
        w.write_record([
            spec.to_string(),
            site.clone(),
            layer.to_string(),
            format!("{t:?}"),
            format!("{s:?}"),
            format!("{nt:?}"),
            format!("{ns:?}"),
            format!("{:?}", nt - ns),
        ])?;
        println!("{spec} (site {site}, layer {layer}): -log S true {nt:.3}, shuffled {ns:.3}, drop {:.3}", nt - ns);
    }
    w.flush()?;
    println!("wrote {}", o.out.display());
    Ok(())
}

pub fn intervene(a: InterveneArgs) -> Result<()> {
    let mode: Mode = a
        .mode
        .parse()
        .map_err(|e: smds::SmdsError| usage(e.to_string()))?;
    let projection = a.projection.as_deref().map(read_projection).transpose()?;
    if mode == Mode::Manifold && projection.is_none() {
        return Err(usage("--mode manifold needs --projection"));
    }
    if mode == Mode::RandomSubspace && a.subspace_dim.is_none() {
        return Err(usage("--mode random needs --subspace-dim"));
    }
    if a.curve.is_some() && (a.train.is_none() || projection.is_none()) {
        return Err(usage("--curve needs --train and --projection"));
    }
    let bundle = read_bundle(&a.bundle)?;
    let spec_for = |sigma2: f64| match mode {
        Mode::Manifold => {
            InterventionSpec::manifold(projection.clone().expect("checked"), sigma2, a.seed)
        }
        Mode::Full => InterventionSpec::full(sigma2, a.seed),
        Mode::RandomSubspace => {
            InterventionSpec::random_subspace(a.subspace_dim.expect("checked"), sigma2, a.seed)
        }
    };

    for &sigma2 in &a.sigma2 {
        let x = intervention::perturb(&bundle.x, &spec_for(sigma2))?;
        let out = if a.sigma2.len() == 1 {
            a.out.clone()
        } else {
            a.out.join(format!("sigma2-{sigma2:?}"))
        };
        let perturbed = LabeledActivations::new(x, bundle.labels.clone(), bundle.meta.clone())?;
        bundle_io::write_bundle(&perturbed, &out)?;
        println!("wrote {mode} sigma2={sigma2} to {}", out.display());
    }

    if let (Some(curve), Some(train_path), Some(p)) = (&a.curve, &a.train, &projection) {
        let train = read_bundle(train_path)?;
        let range = a.label_range.resolve(&train);
        let train = prepare(&train, &p.spec, range)?;
        let test = prepare(&bundle, &p.spec, range)?;
        let points = a
            .sigma2
            .iter()
            .map(|&s| intervention::perturbed_accuracy(&train, &test, p, &spec_for(s), a.tolerance))
            .collect::<smds::Result<Vec<_>>>()?;
        intervention::write_curve_csv(&points, create(curve)?)?;
        println!("wrote {}", curve.display());
    }
    Ok(())
}

pub fn decode(a: DecodeArgs) -> Result<()> {
    let p = read_projection(&a.projection)?;
    let train = read_bundle(&a.train)?;
    let test = read_bundle(&a.test)?;
    let range = a.label_range.resolve(&train);
    let train = prepare(&train, &p.spec, range)?;
    let test = prepare(&test, &p.spec, range)?;
    let acc = intervention::decode_accuracy(&train, &test, &p, a.tolerance)?;
    println!(
        "accuracy {acc:?} ({} test points, tolerance {})",
        test.n(),
        a.tolerance
    );
    Ok(())
}

/// Rows of `path` keyed by their first column, with values from `column`
/// (or the last column).
fn keyed_values(path: &Path, column: Option<&str>) -> Result<Vec<(String, f64)>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    if headers.len() < 2 {
        bail!("{} needs a key column and a value column", path.display());
    }
    let idx = match column {
        Some(c) => headers
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| anyhow!("{} has no column `{c}`", path.display()))?,
        None => headers.len() - 1,
    };
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let key = rec.get(0).unwrap_or_default().to_string();
        let raw = rec.get(idx).unwrap_or_default();
        let v: f64 = raw.trim().parse().map_err(|_| {
            anyhow!(
                "{} row {}: `{}` in column `{}` is not a number",
                path.display(),
                line + 1,
                raw,
                &headers[idx]
            )
        })?;
        if seen.insert(key.clone(), ()).is_some() {
            bail!("{} repeats key `{key}`", path.display());
        }
        out.push((key, v));
    }
    Ok(out)
}

pub const CORRELATION_HEADER: [&str; 5] =
    ["n", "spearman_rho", "spearman_p", "pearson_r", "pearson_p"];

pub fn correlate(a: CorrelateArgs) -> Result<()> {
    let scores = keyed_values(&a.scores, a.score_column.as_deref())?;
    let accs: BTreeMap<String, f64> = keyed_values(&a.accuracies, a.accuracy_column.as_deref())?
        .into_iter()
        .collect();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (k, v) in &scores {
        if let Some(acc) = accs.get(k) {
            x.push(*v);
            y.push(*acc);
        }
    }
    if x.len() < scores.len() || x.len() < accs.len() {
        eprintln!(
            "note: {} of {} score keys and {} accuracy keys matched",
            x.len(),
            scores.len(),
            accs.len()
        );
    }
    let r = smds::rank_correlation(&x, &y)?;
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    w.write_record(CORRELATION_HEADER)?;
    w.write_record([
        r.n.to_string(),
        format!("{:?}", r.spearman_rho),
        format!("{:?}", r.spearman_p),
        format!("{:?}", r.pearson_r),
        format!("{:?}", r.pearson_p),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<()> {
    let f = File::open(&a.sweep).with_context(|| format!("opening {}", a.sweep.display()))?;
    let rows = selection::read_fold_csv(BufReader::new(f))
        .with_context(|| format!("reading {}", a.sweep.display()))?;
    if rows.is_empty() {
        bail!("{} has no rows", a.sweep.display());
    }
    selection::write_summary_csv(&selection::summarize(&rows), output(a.out.as_deref())?)?;
    Ok(())
}
