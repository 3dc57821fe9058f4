use std::io::{self, Write};

use nalgebra::DMatrix;
use smds::Label;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 24.0;

/// Hue in degrees for each label: scalars and vectors along a ramp, classes
/// spread around the wheel, geo points by longitude.
fn hues(labels: &[Label]) -> Vec<f64> {
    let key = |l: &Label| match l {
        Label::Scalar(v) => *v,
        Label::Vector(v) => v.first().copied().unwrap_or(0.0),
        Label::Class(c) => f64::from(*c),
        Label::Geo(g) => g.lon,
    };
    let lo = labels.iter().map(key).fold(f64::INFINITY, f64::min);
    let hi = labels.iter().map(key).fold(f64::NEG_INFINITY, f64::max);
    labels
        .iter()
        .map(|l| match l {
            Label::Class(c) => (f64::from(*c) * 137.508) % 360.0,
            _ if hi > lo => 280.0 * (key(l) - lo) / (hi - lo),
            _ => 0.0,
        })
        .collect()
}

/// Scatter of the first two columns of `z` (the second axis is flat when
/// `z` has one column).
pub fn scatter<W: Write>(z: &DMatrix<f64>, labels: &[Label], out: &mut W) -> io::Result<()> {
    let ys: Vec<f64> = if z.ncols() > 1 {
        z.column(1).iter().copied().collect()
    } else {
        vec![0.0; z.nrows()]
    };
    let xs: Vec<f64> = z.column(0).iter().copied().collect();
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, if hi > lo { hi - lo } else { 1.0 })
    };
    let (x0, xw) = span(&xs);
    let (y0, yw) = span(&ys);
    let w = xw.max(yw);
    let inner = SIZE - 2.0 * MARGIN;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )?;
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    for ((x, y), hue) in xs.iter().zip(&ys).zip(hues(labels)) {
        let cx = MARGIN + inner * (x - x0 + (w - xw) / 2.0) / w;
        let cy = SIZE - MARGIN - inner * (y - y0 + (w - yw) / 2.0) / w;
        writeln!(
            out,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="hsl({hue:.0},70%,45%)" fill-opacity="0.8"/>"#
        )?;
    }
    writeln!(out, "</svg>")
}
