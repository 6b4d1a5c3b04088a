//! Test-only helpers: random frame generators and brute-force oracles that
//! recompute activities straight from raw samples, without going through
//! the crate's partition or block-statistics code.

#![allow(dead_code)]

use percept_qp::{Channel, ChromaFormat, Frame, Plane, VideoFormat};
use rand::Rng;

pub fn random_format<R: Rng>(rng: &mut R, max_w: usize, max_h: usize) -> VideoFormat {
    let chroma = ChromaFormat::ALL[rng.gen_range(0..3)];
    let bit_depth = if rng.gen_bool(0.5) { 8 } else { 10 };
    let (sx, sy) = chroma.shifts();
    let mut w = rng.gen_range(1..=max_w);
    let mut h = rng.gen_range(1..=max_h);
    if sx == 1 && w % 2 == 1 {
        w += 1;
    }
    if sy == 1 && h % 2 == 1 {
        h += 1;
    }
    VideoFormat::new(w, h, bit_depth, chroma).unwrap()
}

pub fn random_plane<R: Rng>(rng: &mut R, w: usize, h: usize, bit_depth: u8) -> Plane {
    let max = (1u16 << bit_depth) - 1;
    Plane::new(w, h, (0..w * h).map(|_| rng.gen_range(0..=max)).collect(), bit_depth).unwrap()
}

/// Planes mixing flat areas, smooth ramps and noise so activities vary
/// across CUs.
pub fn textured_plane<R: Rng>(rng: &mut R, w: usize, h: usize, bit_depth: u8) -> Plane {
    let max = i32::from((1u16 << bit_depth) - 1);
    let base = rng.gen_range(0..=max);
    let amp = rng.gen_range(0..=max / 2);
    let tile = [8usize, 16, 24][rng.gen_range(0..3)];
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let v = match ((x / tile) + (y / tile)) % 3 {
                0 => base,
                1 => base + (x as i32 * 3 + y as i32) % (amp + 1),
                _ => base + rng.gen_range(-amp..=amp),
            };
            v.clamp(0, max) as u16
        })
        .collect();
    Plane::new(w, h, data, bit_depth).unwrap()
}

pub fn random_frame<R: Rng>(rng: &mut R, format: VideoFormat) -> Frame {
    let plane = |rng: &mut R, c| {
        let (w, h) = percept_qp::plane_dims(&format, c);
        if rng.gen_bool(0.5) {
            textured_plane(rng, w, h, format.bit_depth)
        } else {
            random_plane(rng, w, h, format.bit_depth)
        }
    };
    let y = plane(rng, Channel::Y);
    let cb = plane(rng, Channel::Cb);
    let cr = plane(rng, Channel::Cr);
    Frame::new(format, y, cb, cr).unwrap()
}

/// Two-pass population variance straight from the definition.
pub fn naive_variance(samples: &[u16]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    samples.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n
}

pub fn naive_mean(samples: &[u16]) -> f64 {
    samples.iter().map(|&v| f64::from(v)).sum::<f64>() / samples.len() as f64
}

/// Samples of `plane` in the half-open rectangle.
pub fn region(plane: &Plane, x0: usize, y0: usize, x1: usize, y1: usize) -> Vec<u16> {
    let mut v = Vec::new();
    for y in y0..y1 {
        for x in x0..x1 {
            v.push(plane.get(x, y));
        }
    }
    v
}

/// 1 + min quadrant variance of the block `[x0, x1) x [y0, y1)`, splitting
/// at the ceiling midpoint.
fn oracle_block_activity(plane: &Plane, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
    let mx = x0 + (x1 - x0 + 1) / 2;
    let my = y0 + (y1 - y0 + 1) / 2;
    let mut best = f64::INFINITY;
    for (qx0, qx1) in [(x0, mx), (mx, x1)] {
        for (qy0, qy1) in [(y0, my), (my, y1)] {
            if qx1 > qx0 && qy1 > qy0 {
                best = best.min(naive_variance(&region(plane, qx0, qy0, qx1, qy1)));
            }
        }
    }
    1.0 + best
}

#[derive(Debug, Clone, Copy)]
pub struct OracleRecord {
    pub x: usize,
    pub y: usize,
    pub l: f64,
    pub b: f64,
    pub d: f64,
}

/// Activities of every CU, raster order, recomputed from raw samples.
pub fn oracle_activity(frame: &Frame, cu_size: usize) -> (Vec<OracleRecord>, f64, f64) {
    let fmt = frame.format;
    let (sx, sy) = match fmt.chroma_format {
        ChromaFormat::Cf444 => (1, 1),
        ChromaFormat::Cf422 => (2, 1),
        ChromaFormat::Cf420 => (2, 2),
    };
    let mut recs = Vec::new();
    let mut y = 0;
    while y < fmt.height {
        let mut x = 0;
        while x < fmt.width {
            let xe = (x + cu_size).min(fmt.width);
            let ye = (y + cu_size).min(fmt.height);
            let l = oracle_block_activity(&frame.y, x, y, xe, ye);
            let b = oracle_block_activity(&frame.cb, x / sx, y / sy, xe / sx, ye / sy);
            let d = oracle_block_activity(&frame.cr, x / sx, y / sy, xe / sx, ye / sy);
            recs.push(OracleRecord { x, y, l, b, d });
            x += cu_size;
        }
        y += cu_size;
    }
    let n = recs.len() as f64;
    let t_luma = recs.iter().map(|r| r.l).sum::<f64>() / n;
    let t_cross = recs.iter().map(|r| r.l + r.b + r.d).sum::<f64>() / n;
    (recs, t_luma, t_cross)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Per-sample checkerboard of `lo` and `hi`; any quadrant with an even
/// sample count has variance `((hi - lo) / 2)^2`.
pub fn checker_plane(w: usize, h: usize, lo: u16, hi: u16, bit_depth: u8) -> Plane {
    let data = (0..w * h)
        .map(|i| if ((i % w) + (i / w)) % 2 == 0 { lo } else { hi })
        .collect();
    Plane::new(w, h, data, bit_depth).unwrap()
}

pub fn write_clip(path: &std::path::Path, frames: &[Frame]) {
    let mut bytes = Vec::new();
    for f in frames {
        percept_qp::write_frame(&mut bytes, f).unwrap();
    }
    std::fs::write(path, bytes).unwrap();
}

pub fn frame_from_planes(format: VideoFormat, y: Plane, cb: Plane, cr: Plane) -> Frame {
    Frame::new(format, y, cb, cr).unwrap()
}

/// Two 4:4:4 frames of two 64x64 CUs with identical luma (left CU flat,
/// right CU a checkerboard) and different chroma: constant in the first,
/// high-variance Cb over the left CU in the second.
pub fn chroma_sensitivity_pair() -> (Frame, Frame) {
    let format = VideoFormat::new(128, 64, 8, ChromaFormat::Cf444).unwrap();
    let luma: Vec<u16> = (0..128 * 64)
        .map(|i| {
            let (x, y) = (i % 128, i / 128);
            if x < 64 {
                120
            } else if (x + y) % 2 == 0 {
                110
            } else {
                130
            }
        })
        .collect();
    let y = Plane::new(128, 64, luma, 8).unwrap();
    let flat = Plane::filled(128, 64, 128);
    let busy_cb: Vec<u16> = (0..128 * 64)
        .map(|i| {
            let (x, y) = (i % 128, i / 128);
            if x < 64 && (x + y) % 2 == 0 {
                50
            } else if x < 64 {
                150
            } else {
                128
            }
        })
        .collect();
    let a = Frame::new(format, y.clone(), flat.clone(), flat.clone()).unwrap();
    let b = Frame::new(format, y, Plane::new(128, 64, busy_cb, 8).unwrap(), flat).unwrap();
    (a, b)
}
