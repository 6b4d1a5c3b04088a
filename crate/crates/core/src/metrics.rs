//! Objective comparison tools: per-plane PSNR and Bjøntegaard deltas over
//! rate-distortion curves, plus the CSV format the curves travel in.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::yuv::{Channel, Plane};

/// Narrowest overlap (in the integration variable) accepted before the
/// curves are treated as disjoint.
pub const MIN_OVERLAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    /// The planes are identical.
    Infinite,
}

impl Psnr {
    pub fn value(self) -> f64 {
        match self {
            Psnr::Finite(db) => db,
            Psnr::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Psnr::Infinite)
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(db) => write!(f, "{db:.4}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

/// Sum of squared sample differences, exact.
pub fn sse(reference: &Plane, test: &Plane) -> Result<u64> {
    if reference.width() != test.width() || reference.height() != test.height() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            test.width(),
            test.height()
        )));
    }
    Ok(reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(&a, &b)| {
            let d = u64::from(a.abs_diff(b));
            d * d
        })
        .sum())
}

pub fn psnr(reference: &Plane, test: &Plane, bit_depth: u8) -> Result<Psnr> {
    let sse = sse(reference, test)?;
    if sse == 0 {
        return Ok(Psnr::Infinite);
    }
    let peak = f64::from((1u32 << bit_depth) - 1);
    let mse = sse as f64 / reference.data().len() as f64;
    Ok(Psnr::Finite(10.0 * (peak * peak / mse).log10()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    /// kbit/s
    pub bitrate: f64,
    /// dB
    pub psnr: f64,
}

impl RdPoint {
    pub fn new(bitrate: f64, psnr: f64) -> Self {
        RdPoint { bitrate, psnr }
    }
}

/// At least four points, strictly increasing in both bitrate and PSNR.
#[derive(Debug, Clone, PartialEq)]
pub struct RdCurve {
    points: Vec<RdPoint>,
}

impl RdCurve {
    /// Points are sorted by bitrate before validation, so input order does
    /// not matter.
    pub fn new(mut points: Vec<RdPoint>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::InvalidCurve(format!(
                "need at least 4 points for a cubic fit, got {}",
                points.len()
            )));
        }
        for p in &points {
            if !(p.bitrate.is_finite() && p.bitrate > 0.0) {
                return Err(Error::InvalidCurve(format!("bitrate must be positive, got {}", p.bitrate)));
            }
            if !p.psnr.is_finite() {
                return Err(Error::InvalidCurve(format!("PSNR must be finite, got {}", p.psnr)));
            }
        }
        points.sort_by(|a, b| a.bitrate.total_cmp(&b.bitrate));
        for w in points.windows(2) {
            if !(w[1].bitrate > w[0].bitrate && w[1].psnr > w[0].psnr) {
                return Err(Error::DegenerateFit(format!(
                    "points ({}, {}) and ({}, {}) are not strictly increasing in rate and PSNR",
                    w[0].bitrate, w[0].psnr, w[1].bitrate, w[1].psnr
                )));
            }
        }
        Ok(RdCurve { points })
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    /// Every bitrate multiplied by `factor`.
    pub fn scale_rates(&self, factor: f64) -> Result<Self> {
        RdCurve::new(
            self.points
                .iter()
                .map(|p| RdPoint::new(p.bitrate * factor, p.psnr))
                .collect(),
        )
    }

    /// Every PSNR shifted by `offset` dB.
    pub fn shift_psnr(&self, offset: f64) -> Result<Self> {
        RdCurve::new(
            self.points
                .iter()
                .map(|p| RdPoint::new(p.bitrate, p.psnr + offset))
                .collect(),
        )
    }

    fn log_rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.bitrate.log10()).collect()
    }

    fn psnrs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.psnr).collect()
    }
}

/// Least-squares cubic `y(x)`, held in a normalized variable
/// `u = (x - center) / scale` to keep the normal equations well conditioned.
#[derive(Debug, Clone, Copy)]
struct Cubic {
    coeffs: [f64; 4],
    center: f64,
    scale: f64,
}

impl Cubic {
    fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let center = 0.5 * (lo + hi);
        let scale = 0.5 * (hi - lo);
        if !(scale > 0.0) {
            return Err(Error::DegenerateFit("abscissae span no interval".into()));
        }

        // Normal equations A^T A c = A^T y for the Vandermonde matrix A.
        let mut m = [[0.0f64; 5]; 4];
        for (&x, &y) in xs.iter().zip(ys) {
            let u = (x - center) / scale;
            let pow = [1.0, u, u * u, u * u * u];
            for r in 0..4 {
                for c in 0..4 {
                    m[r][c] += pow[r] * pow[c];
                }
                m[r][4] += pow[r] * y;
            }
        }

        // Gaussian elimination with partial pivoting.
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
                .unwrap();
            if m[pivot][col].abs() < 1e-12 {
                return Err(Error::DegenerateFit("singular normal equations".into()));
            }
            m.swap(col, pivot);
            for r in col + 1..4 {
                let k = m[r][col] / m[col][col];
                for c in col..5 {
                    m[r][c] -= k * m[col][c];
                }
            }
        }
        let mut coeffs = [0.0; 4];
        for r in (0..4).rev() {
            let tail: f64 = (r + 1..4).map(|c| m[r][c] * coeffs[c]).sum();
            coeffs[r] = (m[r][4] - tail) / m[r][r];
        }
        Ok(Cubic { coeffs, center, scale })
    }

    #[cfg(test)]
    fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.scale;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// Exact integral of the fitted polynomial over `[a, b]` in `x`.
    fn integral(&self, a: f64, b: f64) -> f64 {
        let antideriv = |x: f64| {
            let u = (x - self.center) / self.scale;
            let [c0, c1, c2, c3] = self.coeffs;
            u * (c0 + u * (c1 / 2.0 + u * (c2 / 3.0 + u * c3 / 4.0)))
        };
        (antideriv(b) - antideriv(a)) * self.scale
    }
}

/// Mean of `test_fit - anchor_fit` over the overlap of the two abscissa
/// ranges.
fn mean_fit_difference(anchor_x: &[f64], anchor_y: &[f64], test_x: &[f64], test_y: &[f64]) -> Result<f64> {
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = min(anchor_x).max(min(test_x));
    let hi = max(anchor_x).min(max(test_x));
    if !(hi - lo >= MIN_OVERLAP) {
        return Err(Error::NoOverlap { lo, hi });
    }
    let anchor = Cubic::fit(anchor_x, anchor_y)?;
    let test = Cubic::fit(test_x, test_y)?;
    Ok((test.integral(lo, hi) - anchor.integral(lo, hi)) / (hi - lo))
}

/// Average bitrate difference of `test` against `anchor` at equal PSNR, in
/// percent. Negative means the test curve spends fewer bits.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve) -> Result<f64> {
    let avg_log_diff = mean_fit_difference(&anchor.psnrs(), &anchor.log_rates(), &test.psnrs(), &test.log_rates())?;
    Ok((10f64.powf(avg_log_diff) - 1.0) * 100.0)
}

/// Average PSNR difference of `test` against `anchor` at equal bitrate, in
/// dB.
pub fn bd_psnr(anchor: &RdCurve, test: &RdCurve) -> Result<f64> {
    mean_fit_difference(&anchor.log_rates(), &anchor.psnrs(), &test.log_rates(), &test.psnrs())
}

/// One encoded operating point: the QP that produced it and its measured
/// rate and quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpPoint {
    pub qp: i32,
    pub point: RdPoint,
}

/// Rate-quality points for one label (a method or encoder setting) and one
/// channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCurve {
    pub label: String,
    pub channel: Channel,
    pub points: Vec<QpPoint>,
}

impl LabeledCurve {
    pub fn to_curve(&self) -> Result<RdCurve> {
        RdCurve::new(self.points.iter().map(|p| p.point).collect())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RdRow {
    label: String,
    channel: String,
    qp: i32,
    bitrate_kbps: f64,
    psnr_db: f64,
}

/// Serializes curves as `label,channel,qp,bitrate_kbps,psnr_db`, sorted by
/// label, then channel (Y, Cb, Cr), then ascending QP.
pub fn emit_rd_csv(curves: &[LabeledCurve]) -> Result<String> {
    let mut rows: Vec<(&str, Channel, QpPoint)> = curves
        .iter()
        .flat_map(|c| c.points.iter().map(move |p| (c.label.as_str(), c.channel, *p)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(b.0).then(a.1.cmp(&b.1)).then(a.2.qp.cmp(&b.2.qp)));

    let mut writer = csv::Writer::from_writer(Vec::new());
    for (label, channel, p) in rows {
        writer.serialize(RdRow {
            label: label.to_string(),
            channel: channel.to_string(),
            qp: p.qp,
            bitrate_kbps: p.point.bitrate,
            psnr_db: p.point.psnr,
        })?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    // Every field is plain ASCII or a number, so the bytes are UTF-8.
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Parses the format written by [`emit_rd_csv`]. Curves come back grouped
/// by (label, channel) with points in ascending QP order.
pub fn parse_rd_csv(text: &str) -> Result<Vec<LabeledCurve>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut groups: BTreeMap<(String, Channel), Vec<QpPoint>> = BTreeMap::new();
    for row in reader.deserialize::<RdRow>() {
        let row = row?;
        let channel: Channel = row.channel.parse()?;
        groups.entry((row.label, channel)).or_default().push(QpPoint {
            qp: row.qp,
            point: RdPoint::new(row.bitrate_kbps, row.psnr_db),
        });
    }
    Ok(groups
        .into_iter()
        .map(|((label, channel), mut points)| {
            points.sort_by_key(|p| p.qp);
            LabeledCurve { label, channel, points }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(points: &[(f64, f64)]) -> RdCurve {
        RdCurve::new(points.iter().map(|&(r, p)| RdPoint::new(r, p)).collect()).unwrap()
    }

    fn anchor() -> RdCurve {
        curve(&[(1000.0, 32.1), (1800.0, 34.9), (3100.0, 37.2), (5600.0, 39.8)])
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let p = Plane::new(3, 2, vec![1, 2, 3, 4, 5, 6], 8).unwrap();
        assert_eq!(psnr(&p, &p, 8).unwrap(), Psnr::Infinite);
        assert_eq!(psnr(&p, &p, 8).unwrap().to_string(), "inf");
    }

    #[test]
    fn psnr_off_by_one() {
        let a = Plane::filled(16, 16, 100);
        let b = Plane::filled(16, 16, 101);
        let db = psnr(&a, &b, 8).unwrap().value();
        assert!((db - 48.1308036086791).abs() < 1e-9, "{db}");
        let db10 = psnr(&a, &b, 10).unwrap().value();
        assert!((db10 - 10.0 * (1023.0f64 * 1023.0).log10()).abs() < 1e-9);
    }

    #[test]
    fn psnr_dimension_mismatch() {
        let a = Plane::filled(4, 4, 0);
        let b = Plane::filled(4, 2, 0);
        assert!(matches!(psnr(&a, &b, 8), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn curve_validation() {
        assert!(matches!(
            RdCurve::new(vec![RdPoint::new(1.0, 30.0); 3]),
            Err(Error::InvalidCurve(_))
        ));
        let flat = [(100.0, 30.0), (200.0, 31.0), (300.0, 31.0), (400.0, 33.0)];
        assert!(matches!(
            RdCurve::new(flat.iter().map(|&(r, p)| RdPoint::new(r, p)).collect()),
            Err(Error::DegenerateFit(_))
        ));
        assert!(RdCurve::new(vec![RdPoint::new(-1.0, 30.0); 4]).is_err());
        // Order of input does not matter.
        let shuffled = curve(&[(3100.0, 37.2), (1000.0, 32.1), (5600.0, 39.8), (1800.0, 34.9)]);
        assert_eq!(shuffled, anchor());
    }

    #[test]
    fn cubic_interpolates_four_points() {
        let xs = [30.0, 33.0, 36.5, 40.0];
        let ys = [2.9, 3.3, 3.6, 3.95];
        let fit = Cubic::fit(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(ys) {
            assert!((fit.eval(*x) - y).abs() < 1e-10);
        }
    }

    #[test]
    fn cubic_integral_matches_known_polynomial() {
        // y = 1 - 2x + 0.5x^2 + 0.1x^3; integral over [0, 3] = 3 - 9 + 4.5 + 2.025
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x + 0.1 * x * x * x;
        let xs = [0.0, 1.0, 2.5, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|&x| p(x)).collect();
        let fit = Cubic::fit(&xs, &ys).unwrap();
        assert!((fit.integral(0.0, 3.0) - 0.525).abs() < 1e-10);
    }

    #[test]
    fn bd_rate_identity_and_shifts() {
        let a = anchor();
        assert!(bd_rate(&a, &a).unwrap().abs() < 1e-12);
        assert!(bd_psnr(&a, &a).unwrap().abs() < 1e-12);
        assert!((bd_rate(&a, &a.scale_rates(1.10).unwrap()).unwrap() - 10.0).abs() < 1e-6);
        assert!((bd_rate(&a, &a.scale_rates(0.85).unwrap()).unwrap() + 15.0).abs() < 1e-6);
        assert!((bd_psnr(&a, &a.shift_psnr(0.5).unwrap()).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn disjoint_curves_rejected() {
        let a = anchor();
        let b = a.shift_psnr(20.0).unwrap();
        assert!(matches!(bd_rate(&a, &b), Err(Error::NoOverlap { .. })));
        let c = a.scale_rates(1e4).unwrap();
        assert!(matches!(bd_psnr(&a, &c), Err(Error::NoOverlap { .. })));
    }

    #[test]
    fn rd_csv_shape_and_order() {
        let pts = |base: f64| {
            [37, 22, 32, 27]
                .iter()
                .map(|&qp| QpPoint {
                    qp,
                    point: RdPoint::new(base * f64::from(60 - qp), 60.0 - f64::from(qp) / 2.0),
                })
                .collect::<Vec<_>>()
        };
        let one = vec![LabeledCurve { label: "cbaq".into(), channel: Channel::Y, points: pts(10.0) }];
        let text = emit_rd_csv(&one).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "label,channel,qp,bitrate_kbps,psnr_db");
        assert!(lines[1].starts_with("cbaq,Y,22,"));

        let two = vec![
            LabeledCurve { label: "cbaq".into(), channel: Channel::Cb, points: pts(3.0) },
            LabeledCurve { label: "adaptiveqp".into(), channel: Channel::Y, points: pts(10.0) },
        ];
        let text = emit_rd_csv(&two).unwrap();
        let keys: Vec<(String, i32)> = text
            .lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[0].to_string(), f[2].parse().unwrap())
            })
            .collect();
        let expected: Vec<(String, i32)> = ["adaptiveqp", "cbaq"]
            .iter()
            .flat_map(|l| [22, 27, 32, 37].map(|q| (l.to_string(), q)))
            .collect();
        assert_eq!(keys, expected);
        assert_eq!(parse_rd_csv(&text).unwrap().len(), 2);
    }

    #[test]
    fn parse_rejects_bad_channel() {
        let text = "label,channel,qp,bitrate_kbps,psnr_db\nx,Q,22,100,30\n";
        assert!(matches!(parse_rd_csv(text), Err(Error::Csv(_))));
    }
}
