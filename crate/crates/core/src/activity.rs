//! Spatial activity of coding blocks.
//!
//! A channel's activity for a CU is one plus the smallest population variance
//! among the four quadrants of its coding block. Luma gives `l`, Cb `b` and
//! Cr `d`. The frame keeps two means: `t_luma` over `l` and `t_cross` over
//! `l + b + d`.
//!
//! Block statistics use exact integer sums of samples and squared samples,
//! so results are the same whatever order CUs are visited in.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::{cb_rects, cu_grid_sized, grid_dims, sub_blocks, CbRect, CuRect, CuSize, SubBlock};
use crate::yuv::{Frame, Plane};

/// Exact running sums over a block of samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlockSums {
    pub count: u64,
    pub sum: u64,
    pub sum_sq: u64,
}

impl BlockSums {
    pub fn of(plane: &Plane, rect: &SubBlock) -> Result<Self> {
        if rect.is_empty() {
            return Err(Error::EmptyBlock);
        }
        if rect.x + rect.w > plane.width() || rect.y + rect.h > plane.height() {
            return Err(Error::DimensionMismatch(format!(
                "block {}x{} at ({}, {}) exceeds {}x{} plane",
                rect.w,
                rect.h,
                rect.x,
                rect.y,
                plane.width(),
                plane.height()
            )));
        }
        let mut sums = BlockSums::default();
        for y in rect.y..rect.y + rect.h {
            for &v in &plane.row(y)[rect.x..rect.x + rect.w] {
                let v = u64::from(v);
                sums.sum += v;
                sums.sum_sq += v * v;
            }
        }
        sums.count = rect.count() as u64;
        Ok(sums)
    }

    pub fn mean(&self) -> f64 {
        self.sum as f64 / self.count as f64
    }

    /// Population variance. `count * sum_sq - sum^2` is formed exactly in
    /// integers, which also keeps the result non-negative.
    pub fn variance(&self) -> f64 {
        let n = u128::from(self.count);
        let num = n * u128::from(self.sum_sq) - u128::from(self.sum) * u128::from(self.sum);
        num as f64 / (n * n) as f64
    }
}

pub fn block_mean(plane: &Plane, rect: &SubBlock) -> Result<f64> {
    Ok(BlockSums::of(plane, rect)?.mean())
}

pub fn block_variance(plane: &Plane, rect: &SubBlock) -> Result<f64> {
    Ok(BlockSums::of(plane, rect)?.variance())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityRecord {
    pub cu: CuRect,
    pub l: f64,
    pub b: f64,
    pub d: f64,
}

impl ActivityRecord {
    /// Combined luma and chroma activity, `l + b + d`.
    pub fn cross(&self) -> f64 {
        self.l + self.b + self.d
    }
}

/// 1 + min variance over the non-empty quadrants.
fn cb_activity(plane: &Plane, cb: &CbRect) -> f64 {
    let min_var = sub_blocks(cb)
        .iter()
        .filter(|sb| !sb.is_empty())
        .map(|sb| {
            BlockSums::of(plane, sb)
                .expect("sub-block of a clipped coding block lies inside its plane")
                .variance()
        })
        .fold(f64::INFINITY, f64::min);
    debug_assert!(min_var.is_finite(), "coding block has no samples");
    1.0 + min_var
}

pub fn cu_activity(frame: &Frame, cu: &CuRect) -> ActivityRecord {
    let [y, cb, cr] = cb_rects(cu, &frame.format);
    ActivityRecord {
        cu: *cu,
        l: cb_activity(&frame.y, &y),
        b: cb_activity(&frame.cb, &cb),
        d: cb_activity(&frame.cr, &cr),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameActivity {
    pub cols: usize,
    pub rows: usize,
    pub records: Vec<ActivityRecord>,
    pub t_luma: f64,
    pub t_cross: f64,
}

/// Activities of every CU in raster order plus the frame means. Records may
/// be computed on the current rayon pool; the means are summed in raster
/// order.
pub fn frame_activity(frame: &Frame, cu_size: CuSize) -> FrameActivity {
    let grid = cu_grid_sized(&frame.format, cu_size);
    let (cols, rows) = grid_dims(&frame.format, cu_size);
    let records: Vec<ActivityRecord> = grid.par_iter().map(|cu| cu_activity(frame, cu)).collect();
    let count = records.len() as f64;
    let t_luma = records.iter().map(|r| r.l).sum::<f64>() / count;
    let t_cross = records.iter().map(ActivityRecord::cross).sum::<f64>() / count;
    FrameActivity {
        cols,
        rows,
        records,
        t_luma,
        t_cross,
    }
}
