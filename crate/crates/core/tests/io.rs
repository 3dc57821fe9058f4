use std::fs;

use nalgebra::DMatrix;
use proptest::prelude::*;
use smds::io::{list_bundles, read_bundle_manifest};
use smds::{
    fit_projection, read_bundle, read_projection, write_bundle, write_projection, BundleMeta,
    DistanceKind, DistanceSpec, Dtype, Label, LabeledActivations,
};

fn bundle_from(
    rows: usize,
    cols: usize,
    values: &[f64],
    labels: Vec<Label>,
    dtype: Dtype,
) -> LabeledActivations {
    let meta = BundleMeta {
        dtype,
        task: "t".into(),
        site: "te".into(),
        layer: 3,
        model_id: "synthetic".into(),
    };
    LabeledActivations::new(DMatrix::from_row_slice(rows, cols, values), labels, meta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn f64_bundles_round_trip_bitwise(
        (rows, cols, values) in (1usize..12, 1usize..9).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), prop::collection::vec(-1e300f64..1e300, r * c))
        }),
        scale in prop::num::f64::NORMAL,
    ) {
        let labels = (0..rows).map(|i| Label::Scalar(scale * i as f64)).collect();
        let b = bundle_from(rows, cols, &values, labels, Dtype::F64);
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&b, dir.path().join("b")).unwrap();
        let back = read_bundle(dir.path().join("b")).unwrap();
        let bits = |m: &DMatrix<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.x), bits(&b.x));
        prop_assert_eq!(&back.labels, &b.labels);
        prop_assert_eq!(&back.meta, &b.meta);
    }

    #[test]
    fn f32_bundles_round_trip_within_precision(
        values in prop::collection::vec(-1e6f64..1e6, 24),
        classes in prop::collection::vec(0u32..50, 4),
    ) {
        let labels = classes.into_iter().map(Label::Class).collect();
        let b = bundle_from(4, 6, &values, labels, Dtype::F32);
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&b, dir.path()).unwrap();
        let back = read_bundle(dir.path()).unwrap();
        for (a, e) in back.x.iter().zip(b.x.iter()) {
            prop_assert!((a - e).abs() <= 1e-6 * e.abs().max(1e-30));
        }
        prop_assert_eq!(&back.labels, &b.labels);
    }

    #[test]
    fn rewriting_is_byte_identical(values in prop::collection::vec(-10.0f64..10.0, 30)) {
        let labels = (0..5).map(|i| Label::Vector(vec![i as f64, -(i as f64)])).collect();
        let b = bundle_from(5, 6, &values, labels, Dtype::F64);
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&b, dir.path().join("one")).unwrap();
        write_bundle(&read_bundle(dir.path().join("one")).unwrap(), dir.path().join("two")).unwrap();
        for entry in fs::read_dir(dir.path().join("one")).unwrap() {
            let name = entry.unwrap().file_name();
            prop_assert_eq!(
                fs::read(dir.path().join("one").join(&name)).unwrap(),
                fs::read(dir.path().join("two").join(&name)).unwrap()
            );
        }
    }

    #[test]
    fn projections_round_trip_bitwise(
        values in prop::collection::vec(-5.0f64..5.0, 40),
        alpha in 0.001f64..10.0,
    ) {
        let x = DMatrix::from_row_slice(10, 4, &values);
        let y = DMatrix::from_fn(10, 2, |i, j| (i * (j + 1)) as f64);
        let mut p = fit_projection(&x, &y, alpha).unwrap();
        p.spec = DistanceSpec::new(DistanceKind::Linear);
        let dir = tempfile::tempdir().unwrap();
        write_projection(&p, dir.path()).unwrap();
        let back = read_projection(dir.path()).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(back.w.as_slice()), bits(p.w.as_slice()));
        prop_assert_eq!(bits(back.train_mean.as_slice()), bits(p.train_mean.as_slice()));
        prop_assert_eq!(bits(back.embed_mean.as_slice()), bits(p.embed_mean.as_slice()));
        prop_assert_eq!(back.alpha.to_bits(), p.alpha.to_bits());
    }
}

#[test]
fn directories_of_bundles_are_listed_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let b = bundle_from(
        2,
        2,
        &[1.0, 2.0, 3.0, 4.0],
        vec![Label::Scalar(0.0), Label::Scalar(1.0)],
        Dtype::F32,
    );
    for name in ["layer10", "layer02", ".hidden"] {
        write_bundle(&b, dir.path().join(name)).unwrap();
    }
    fs::create_dir(dir.path().join("empty")).unwrap();
    let found = list_bundles(dir.path()).unwrap();
    let names: Vec<_> = found
        .iter()
        .map(|p| p.file_name().unwrap().to_str().unwrap())
        .collect();
    assert_eq!(names, ["layer02", "layer10"]);
    let manifest = read_bundle_manifest(&found[0]).unwrap();
    assert_eq!((manifest.n, manifest.d), (2, 2));
}
