//! End-to-end acceptance checks on synthetic ground truth. Each test prints a
//! single `PASS`/`FAIL` line; run with `--nocapture` to see them.

use std::fs;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use smds::intervention::{perturbed_accuracy, split_half, InterventionSpec, DEFAULT_TOLERANCE};
use smds::io::{ACTIVATIONS_FILE, MANIFEST_FILE, PROJECTION_BIN, PROJECTION_JSON};
use smds::selection::{applicable_kinds, control_shuffle, cross_validated_stress, sweep, CvConfig};
use smds::synth::{Shape, SyntheticSpec};
use smds::{
    classical_mds, distance, embed_manifold, fit_projection, fit_smds, rank_correlation,
    read_bundle, read_projection, stress_score, write_bundle, write_projection, DistanceKind,
    DistanceSpec, GeoPoint, Label, SmdsError,
};

fn verdict(name: &str, pass: bool, detail: String) {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

const SCALAR_SHAPES: [Shape; 5] = [
    Shape::Circle,
    Shape::Semicircle,
    Shape::Line,
    Shape::LogLine,
    Shape::Clusters(4),
];

const ALL_SHAPES: [Shape; 7] = [
    Shape::Circle,
    Shape::Semicircle,
    Shape::Line,
    Shape::LogLine,
    Shape::Clusters(4),
    Shape::Sphere,
    Shape::Plane2d,
];

fn bundle(shape: Shape, n: usize, d: usize, sigma: f64, seed: u64) -> smds::LabeledActivations {
    embed_manifold(&SyntheticSpec::new(shape, n, d, sigma, seed)).unwrap()
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

#[test]
fn manifold_recovery() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for shape in SCALAR_SHAPES {
        let mut wins = 0;
        for seed in 0..20 {
            let b = bundle(shape, 600, 128, 0.02, seed);
            let specs: Vec<DistanceSpec> = applicable_kinds(&b.labels, None)
                .into_iter()
                .filter(|k| DistanceKind::SCALAR.contains(k))
                .map(DistanceSpec::new)
                .collect();
            let r = sweep(&[b], &specs, &CvConfig::new(seed), Some(1)).unwrap();
            if r.best.spec == shape.matching_kind().name() {
                wins += 1;
            }
        }
        pass &= wins >= 19;
        lines.push(format!("{shape} {wins}/20"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    verdict(
        "manifold recovery",
        pass,
        format!("{} in {secs:.1} s on one thread", lines.join(", ")),
    );
}

#[test]
fn noiseless_exactness() {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for shape in ALL_SHAPES {
        for seed in 0..20 {
            let b = bundle(shape, 600, 128, 0.0, seed);
            let spec = DistanceSpec::new(shape.matching_kind());
            let reports = cross_validated_stress(&b, &spec, &CvConfig::new(seed)).unwrap();
            let max = reports.iter().map(|r| r.stress).fold(0.0, f64::max);
            worst = worst.max(max);
            if max > 1e-6 {
                failures.push(format!("{shape}/{seed}"));
            }
        }
    }
    verdict(
        "noiseless exactness",
        failures.is_empty(),
        format!("worst per-fold S {worst:.2e} over 7 shapes x 20 seeds; failing {failures:?}"),
    );
}

#[test]
fn mds_distance_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pts = DMatrix::from_fn(50, 3, |_, _| rng.random_range(-1.0..1.0));
    let d = DMatrix::from_fn(50, 50, |i, j| (pts.row(i) - pts.row(j)).norm());
    let coords = classical_mds(&d, 3).unwrap().coords;
    let mut worst = 0.0f64;
    for i in 0..50 {
        for j in 0..50 {
            let mut sq = 0.0;
            for c in 0..3 {
                sq += (coords[(i, c)] - coords[(j, c)]).powi(2);
            }
            worst = worst.max((sq.sqrt() - d[(i, j)]).abs());
        }
    }
    verdict(
        "MDS distance oracle",
        worst <= 1e-9,
        format!("max |reconstructed - true| distance {worst:.2e} on 50 points in R^3"),
    );
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn naive_solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            for k in 0..b[row].len() {
                b[row][k] -= f * b[col][k];
            }
        }
    }
    let mut x = vec![vec![0.0; b[0].len()]; n];
    for row in (0..n).rev() {
        for k in 0..b[0].len() {
            let mut s = b[row][k];
            for j in row + 1..n {
                s -= a[row][j] * x[j][k];
            }
            x[row][k] = s / a[row][row];
        }
    }
    x
}

/// `W = Yc^T Xc (Xc^T Xc + alpha I)^-1` straight from the normal equations.
fn naive_ridge(x: &DMatrix<f64>, y: &DMatrix<f64>, alpha: f64) -> Vec<Vec<f64>> {
    let (n, d) = x.shape();
    let m = y.ncols();
    let mean = |z: &DMatrix<f64>, c: usize| (0..n).map(|i| z[(i, c)]).sum::<f64>() / n as f64;
    let xm: Vec<f64> = (0..d).map(|c| mean(x, c)).collect();
    let ym: Vec<f64> = (0..m).map(|c| mean(y, c)).collect();
    let mut gram = vec![vec![0.0; d]; d];
    let mut rhs = vec![vec![0.0; m]; d];
    for i in 0..n {
        for a in 0..d {
            let xa = x[(i, a)] - xm[a];
            for b in 0..d {
                gram[a][b] += xa * (x[(i, b)] - xm[b]);
            }
            for k in 0..m {
                rhs[a][k] += xa * (y[(i, k)] - ym[k]);
            }
        }
    }
    for (a, row) in gram.iter_mut().enumerate() {
        row[a] += alpha;
    }
    let wt = naive_solve(gram, rhs);
    (0..m).map(|k| (0..d).map(|a| wt[a][k]).collect()).collect()
}

#[test]
fn ridge_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut dual = 0;
    for _ in 0..20 {
        let n = rng.random_range(8..60);
        let d = rng.random_range(2..40);
        let m = rng.random_range(1..=3.min(d));
        let alpha = if n > d + 2 && rng.random_bool(0.25) {
            0.0
        } else {
            rng.random_range(0.01..2.0)
        };
        if alpha > 0.0 && n < d {
            dual += 1;
        }
        let x = gaussian(n, d, &mut rng);
        let y = gaussian(n, m, &mut rng);
        let p = fit_projection(&x, &y, alpha).unwrap();
        let w = naive_ridge(&x, &y, alpha);
        for k in 0..m {
            for a in 0..d {
                worst = worst.max((p.w[(k, a)] - w[k][a]).abs());
            }
        }
    }
    verdict(
        "ridge oracle",
        worst <= 1e-9,
        format!("max elementwise |W - W_naive| {worst:.2e} on 20 instances ({dual} via the n x n system)"),
    );
}

fn naive_scalar_distance(kind: DistanceKind, a: f64, b: f64) -> f64 {
    let delta = (a - b).abs();
    match kind {
        DistanceKind::Linear => delta,
        DistanceKind::Circular => 2.0 * (std::f64::consts::PI * delta.min(1.0 - delta)).sin(),
        DistanceKind::Semicircular => 2.0 * (std::f64::consts::FRAC_PI_2 * delta).sin(),
        DistanceKind::LogLinear => (a.ln() - b.ln()).abs(),
        _ => unreachable!(),
    }
}

#[test]
fn stress_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let kinds = [
        DistanceKind::Linear,
        DistanceKind::Circular,
        DistanceKind::Semicircular,
        DistanceKind::LogLinear,
    ];
    let mut worst = 0.0f64;
    for t in 0..40 {
        let kind = kinds[t % kinds.len()];
        let (k, d, m) = (
            rng.random_range(3..40),
            rng.random_range(2..20),
            rng.random_range(1..4),
        );
        let mut p =
            fit_projection(&gaussian(30, d, &mut rng), &gaussian(30, m, &mut rng), 0.1).unwrap();
        p.w = gaussian(m, d, &mut rng) * 0.3;
        p.spec = DistanceSpec::new(kind);
        let x = gaussian(k, d, &mut rng);
        let y: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..0.99)).collect();
        let labels: Vec<Label> = y.iter().map(|&v| Label::Scalar(v)).collect();
        let got = stress_score(&p, &x, &labels).unwrap().stress;

        let z: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                (0..m)
                    .map(|r| {
                        (0..d)
                            .map(|c| p.w[(r, c)] * (x[(i, c)] - p.train_mean[c]))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..k {
            for j in 0..i {
                let dz = (0..m)
                    .map(|r| (z[i][r] - z[j][r]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let target = naive_scalar_distance(kind, y[i], y[j]);
                num += (dz - target).powi(2);
                den += target * target;
            }
        }
        worst = worst.max((got - num / den).abs());
    }
    let mut p =
        fit_projection(&gaussian(30, 6, &mut rng), &gaussian(30, 2, &mut rng), 0.1).unwrap();
    p.w = DMatrix::zeros(2, 6);
    p.spec = DistanceSpec::new(DistanceKind::Linear);
    let labels: Vec<Label> = (0..12).map(|i| Label::Scalar(i as f64 / 11.0)).collect();
    let zero_w = stress_score(&p, &gaussian(12, 6, &mut rng), &labels)
        .unwrap()
        .stress;
    verdict(
        "stress oracle",
        worst <= 1e-12 && zero_w == 1.0,
        format!("max |S - S_naive| {worst:.2e} on 40 instances; W = 0 gives S = {zero_w}"),
    );
}

#[test]
fn shuffled_label_control() {
    let mut failures = Vec::new();
    let mut min_ratio = f64::INFINITY;
    for shape in ALL_SHAPES {
        for seed in 0..20 {
            let b = bundle(shape, 600, 128, 0.0, seed);
            let spec = DistanceSpec::new(shape.matching_kind());
            let r = control_shuffle(&b, &spec, &CvConfig::new(seed), 1000 + seed).unwrap();
            let ratio = r.shuffled_mean() / r.true_mean();
            min_ratio = min_ratio.min(ratio);
            if !(ratio >= 5.0) {
                failures.push(format!("{shape}/{seed}"));
            }
        }
    }
    verdict(
        "shuffled-label control",
        failures.is_empty(),
        format!("min shuffled/true mean S ratio {min_ratio:.2e} over 7 shapes x 20 seeds; failing {failures:?}"),
    );
}

#[test]
fn intervention_asymmetry() {
    let grid = [0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0];
    let random_dims = [3, 10, 30, 99];
    let (d, m) = (128.0, 3.0);
    let seeds = 10;
    // Seed-averaged accuracy: base, manifold, full, full at sigma2 * d / m, then one per random dim.
    let mut mean = vec![vec![0.0; 4 + random_dims.len()]; grid.len()];
    for seed in 0..seeds {
        let b = bundle(Shape::Circle, 600, 128, 0.02, seed);
        let (train, test) = split_half(&b, seed);
        let p = fit_smds(
            &train.x,
            &train.labels,
            &DistanceSpec::new(DistanceKind::Circular),
            3,
            0.1,
        )
        .unwrap();
        let acc = |spec: InterventionSpec| {
            perturbed_accuracy(&train, &test, &p, &spec, DEFAULT_TOLERANCE)
                .unwrap()
                .accuracy
                / seeds as f64
        };
        let base = acc(InterventionSpec::full(0.0, seed));
        for (g, &s2) in grid.iter().enumerate() {
            let noise_seed = 100 + seed;
            let row = &mut mean[g];
            row[0] += base;
            row[1] += acc(InterventionSpec::manifold(p.clone(), s2, noise_seed));
            row[2] += acc(InterventionSpec::full(s2, noise_seed));
            row[3] += acc(InterventionSpec::full(s2 * d / m, noise_seed));
            for (i, &k) in random_dims.iter().enumerate() {
                row[4 + i] += acc(InterventionSpec::random_subspace(k, s2, noise_seed));
            }
        }
    }
    println!("  mean decode accuracy over {seeds} seeds");
    println!(
        "  sigma2  base   manifold full   full*d/m random(3) random(10) random(30) random(99)"
    );
    let mut checked = 0;
    let mut problems = Vec::new();
    for (g, &s2) in grid.iter().enumerate() {
        let r = &mean[g];
        println!(
            "  {s2:<6}  {:.3}  {:.3}    {:.3}  {:.3}    {:.3}     {:.3}      {:.3}      {:.3}",
            r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7]
        );
        let (base, man) = (r[0], r[1]);
        if base - man < 0.20 {
            continue;
        }
        checked += 1;
        if !(base - man > base - r[4]) {
            problems.push(format!(
                "s2 {s2}: manifold {man:.3} vs random(3) {:.3}",
                r[4]
            ));
        }
        for (i, &k) in random_dims.iter().enumerate() {
            if (r[4 + i] - base).abs() >= 0.05 {
                problems.push(format!("s2 {s2}: random({k}) moved {:.3}", r[4 + i] - base));
            }
        }
        if !(r[2] > man) {
            problems.push(format!(
                "s2 {s2}: full {:.3} not above manifold {man:.3}",
                r[2]
            ));
        }
    }
    verdict(
        "intervention asymmetry",
        checked > 0 && problems.is_empty(),
        format!(
            "{checked} sigma2 values with mean manifold drop >= 20 points; violations {problems:?}"
        ),
    );
}

#[test]
fn chord_geodesic_identity() {
    let sphere = DistanceSpec::new(DistanceKind::GeoSphere);
    let geodesic = DistanceSpec::new(DistanceKind::GeoGeodesic);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let geo = |lat: f64, lon: f64| Label::Geo(GeoPoint { lat, lon });
    for _ in 0..10_000 {
        let a = geo(
            rng.random_range(-90.0..=90.0),
            rng.random_range(-180.0..=180.0),
        );
        let b = geo(
            rng.random_range(-90.0..=90.0),
            rng.random_range(-180.0..=180.0),
        );
        let chord = distance(&sphere, &a, &b).unwrap();
        let g = distance(&geodesic, &a, &b).unwrap();
        worst = worst.max((chord - 2.0 * (g / 2.0).sin()).abs());
    }
    let p = geo(0.0, 0.0);
    let q = geo(0.0, 180.0);
    let exact = distance(&sphere, &p, &p).unwrap() == 0.0
        && distance(&geodesic, &p, &p).unwrap() == 0.0
        && distance(&sphere, &p, &q).unwrap() == 2.0
        && distance(&geodesic, &p, &q).unwrap() == std::f64::consts::PI
        && distance(&geodesic, &geo(90.0, 0.0), &geo(-90.0, 0.0)).unwrap() == std::f64::consts::PI;
    verdict(
        "chord-geodesic identity",
        worst <= 1e-12 && exact,
        format!("max |chord - 2 sin(g/2)| {worst:.2e} over 10^4 pairs; identity/antipodal exact: {exact}"),
    );
}

fn naive_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for i in 0..x.len() {
        sx += x[i];
        sy += y[i];
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut cxy, mut cxx, mut cyy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        cxy += (x[i] - mx) * (y[i] - my);
        cxx += (x[i] - mx) * (x[i] - mx);
        cyy += (y[i] - my) * (y[i] - my);
    }
    cxy / (cxx * cyy).sqrt()
}

#[test]
fn rank_correlation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0f64;
    for t in 0..100 {
        let n = rng.random_range(3..60);
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = rng.random_range(-5.0..5.0);
                if t % 2 == 0 {
                    v.round()
                } else {
                    v
                }
            })
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| v * 0.5 + rng.random_range(-3.0..3.0))
            .collect();
        if x.iter().all(|v| *v == x[0]) {
            continue;
        }
        let r = rank_correlation(&x, &y).unwrap();
        let rho = naive_pearson(&naive_ranks(&x), &naive_ranks(&y));
        worst = worst
            .max((r.spearman_rho - rho).abs())
            .max((r.pearson_r - naive_pearson(&x, &y)).abs());
    }
    let x: Vec<f64> = (1..=15).map(f64::from).collect();
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let rev: Vec<f64> = x.iter().map(|v| -v.exp()).collect();
    let up = rank_correlation(&x, &sq).unwrap().spearman_rho;
    let down = rank_correlation(&x, &rev).unwrap().spearman_rho;
    verdict(
        "rank-correlation oracle",
        worst <= 1e-12 && up == 1.0 && down == -1.0,
        format!("max coefficient error {worst:.2e} on 100 instances; monotone rho {up}, {down}"),
    );
}

#[test]
fn geo_selection() {
    let specs: Vec<DistanceSpec> = DistanceKind::GEO
        .into_iter()
        .map(DistanceSpec::new)
        .collect();
    let mut wins = 0;
    let mut others = Vec::new();
    for seed in 0..20 {
        let b = bundle(Shape::Sphere, 500, 128, 0.02, seed);
        let r = sweep(&[b], &specs, &CvConfig::new(seed), None).unwrap();
        if r.best.spec == "geo_sphere" {
            wins += 1;
        } else {
            others.push(r.best.spec);
        }
    }
    verdict(
        "geo model selection",
        wins >= 19,
        format!("geo_sphere selected in {wins}/20 seeds; others {others:?}"),
    );
}

#[test]
fn plane_exactness() {
    let spec = DistanceSpec::new(DistanceKind::EuclideanVector);
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let b = bundle(Shape::Plane2d, 600, 128, 0.0, seed);
        for r in cross_validated_stress(&b, &spec, &CvConfig::new(seed)).unwrap() {
            worst = worst.max(r.stress);
        }
    }
    verdict(
        "2D plane exactness",
        worst <= 1e-6,
        format!("worst per-fold S {worst:.2e} over 20 noiseless plane2d bundles"),
    );
}

#[test]
fn format_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let b = bundle(Shape::Circle, 120, 32, 0.02, 4);
    let p = fit_smds(
        &b.x,
        &b.labels,
        &DistanceSpec::new(DistanceKind::Circular),
        3,
        0.1,
    )
    .unwrap();
    let mut stable = true;
    for run in ["a", "b"] {
        write_bundle(&b, dir.path().join(run).join("bundle")).unwrap();
        write_projection(&p, dir.path().join(run).join("proj")).unwrap();
    }
    for file in [
        format!("bundle/{MANIFEST_FILE}"),
        format!("bundle/{ACTIVATIONS_FILE}"),
        "bundle/labels.bin".to_string(),
        format!("proj/{PROJECTION_JSON}"),
        format!("proj/{PROJECTION_BIN}"),
    ] {
        stable &= fs::read(dir.path().join("a").join(&file)).unwrap()
            == fs::read(dir.path().join("b").join(&file)).unwrap();
    }
    let rb = read_bundle(dir.path().join("a/bundle")).unwrap();
    let rp = read_projection(dir.path().join("a/proj")).unwrap();
    let bits = |m: &DMatrix<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let vbits = |v: &DVector<f64>| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    stable &= bits(&rb.x) == bits(&b.x) && rb.labels == b.labels;
    stable &= bits(&rp.w) == bits(&p.w)
        && vbits(&rp.train_mean) == vbits(&p.train_mean)
        && vbits(&rp.embed_mean) == vbits(&p.embed_mean)
        && rp.alpha.to_bits() == p.alpha.to_bits()
        && rp.spec == p.spec;
    let probe = gaussian(7, 32, &mut ChaCha8Rng::seed_from_u64(1));
    stable &=
        bits(&smds::project(&rp, &probe).unwrap()) == bits(&smds::project(&p, &probe).unwrap());

    let act = dir.path().join("a/bundle").join(ACTIVATIONS_FILE);
    let bytes = fs::read(&act).unwrap();
    fs::write(&act, &bytes[..bytes.len() - 8 * 32]).unwrap();
    let truncated = matches!(
        read_bundle(dir.path().join("a/bundle")),
        Err(SmdsError::TruncatedPayload { .. })
    );
    let mut flipped = bytes.clone();
    flipped[100] ^= 1;
    fs::write(&act, &flipped).unwrap();
    let checksum = matches!(
        read_bundle(dir.path().join("a/bundle")),
        Err(SmdsError::ChecksumMismatch { .. })
    );
    let manifest = dir.path().join("b/bundle").join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest)
        .unwrap()
        .replace("\"version\": 1", "\"version\": 7");
    fs::write(&manifest, text).unwrap();
    let version = matches!(
        read_bundle(dir.path().join("b/bundle")),
        Err(SmdsError::UnsupportedVersion(7))
    );
    let bin = dir.path().join("b/proj").join(PROJECTION_BIN);
    let pb = fs::read(&bin).unwrap();
    fs::write(&bin, &pb[..pb.len() - 3]).unwrap();
    let short_proj = read_projection(dir.path().join("b/proj")).is_err();

    verdict(
        "format round trips",
        stable && truncated && checksum && version && short_proj,
        format!(
            "bitwise stable {stable}; truncated {truncated}; checksum {checksum}; version {version}; short proj.bin {short_proj}"
        ),
    );
}
