//! CU grid and per-channel coding-block geometry.
//!
//! CUs are square in luma samples and never shrink with chroma subsampling;
//! each CU owns one coding block per channel whose extent follows the chroma
//! format. Every coding block is split into four quadrant sub-blocks, which
//! are the units the activity measure takes variances over.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::yuv::{plane_dims, Channel, ChromaFormat, VideoFormat};

/// CU side length in luma samples. Quadtree depths 0, 1 and 2 give 64, 32
/// and 16; 8x8 CUs are not adapted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "u32")]
pub struct CuSize(u32);

impl CuSize {
    pub const S64: CuSize = CuSize(64);
    pub const S32: CuSize = CuSize(32);
    pub const S16: CuSize = CuSize(16);
    pub const ALL: [CuSize; 3] = [CuSize::S64, CuSize::S32, CuSize::S16];

    pub fn new(size: u32) -> Result<Self> {
        match size {
            16 | 32 | 64 => Ok(CuSize(size)),
            _ => Err(Error::InvalidCuSize(size)),
        }
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }

    pub fn depth(self) -> u8 {
        match self.0 {
            64 => 0,
            32 => 1,
            _ => 2,
        }
    }
}

impl From<CuSize> for u32 {
    fn from(s: CuSize) -> u32 {
        s.0
    }
}

impl Default for CuSize {
    fn default() -> Self {
        CuSize::S64
    }
}

impl fmt::Display for CuSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A CU located in luma coordinates. `clipped_w`/`clipped_h` are the parts
/// that lie inside the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CuRect {
    pub x: usize,
    pub y: usize,
    pub size: CuSize,
    pub clipped_w: usize,
    pub clipped_h: usize,
}

impl CuRect {
    pub fn is_clipped(&self) -> bool {
        self.clipped_w < self.size.get() || self.clipped_h < self.size.get()
    }
}

/// Number of CU columns and rows covering the frame.
pub fn grid_dims(format: &VideoFormat, cu_size: CuSize) -> (usize, usize) {
    let s = cu_size.get();
    (format.width.div_ceil(s), format.height.div_ceil(s))
}

/// The CU grid in raster order. Right and bottom CUs are clipped when the
/// frame is not a multiple of the CU size.
pub fn cu_grid(format: &VideoFormat, cu_size: u32) -> Result<Vec<CuRect>> {
    let size = CuSize::new(cu_size)?;
    Ok(cu_grid_sized(format, size))
}

pub fn cu_grid_sized(format: &VideoFormat, size: CuSize) -> Vec<CuRect> {
    let s = size.get();
    let (cols, rows) = grid_dims(format, size);
    let mut cus = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        let y = row * s;
        for col in 0..cols {
            let x = col * s;
            cus.push(CuRect {
                x,
                y,
                size,
                clipped_w: s.min(format.width - x),
                clipped_h: s.min(format.height - y),
            });
        }
    }
    cus
}

/// One channel's coding block of a CU, in that channel's plane coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CbRect {
    pub channel: Channel,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl CbRect {
    pub fn area(&self) -> usize {
        self.w * self.h
    }
}

pub fn cb_rect(cu: &CuRect, channel: Channel, chroma_format: ChromaFormat) -> CbRect {
    let (sx, sy) = if channel.is_chroma() {
        chroma_format.shifts()
    } else {
        (0, 0)
    };
    let x = cu.x >> sx;
    let y = cu.y >> sy;
    // Clipped extents are even whenever the axis is subsampled (the format
    // requires even frame dimensions there), so the ceiling never overshoots.
    CbRect {
        channel,
        x,
        y,
        w: cu.clipped_w.div_ceil(1 << sx),
        h: cu.clipped_h.div_ceil(1 << sy),
    }
}

/// All three coding blocks of a CU, clipped to their planes.
pub fn cb_rects(cu: &CuRect, format: &VideoFormat) -> [CbRect; 3] {
    Channel::ALL.map(|c| {
        let mut cb = cb_rect(cu, c, format.chroma_format);
        let (pw, ph) = plane_dims(format, c);
        cb.w = cb.w.min(pw.saturating_sub(cb.x));
        cb.h = cb.h.min(ph.saturating_sub(cb.y));
        cb
    })
}

/// Quadrant `k` (1 = top-left, 2 = top-right, 3 = bottom-left,
/// 4 = bottom-right) of a coding block. A quadrant clipped away entirely
/// has zero width or height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubBlock {
    pub parent: CbRect,
    pub k: u8,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl SubBlock {
    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn count(&self) -> usize {
        self.w * self.h
    }

    /// Plane coordinates of every sample in the sub-block, row-major.
    pub fn coords(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y..self.y + self.h).flat_map(move |y| (self.x..self.x + self.w).map(move |x| (x, y)))
    }
}

/// Splits a coding block into quadrants at `ceil(w/2)` and `ceil(h/2)`.
pub fn sub_blocks(cb: &CbRect) -> [SubBlock; 4] {
    let left = cb.w.div_ceil(2);
    let top = cb.h.div_ceil(2);
    let right = cb.w - left;
    let bottom = cb.h - top;
    let make = |k, dx, dy, w, h| SubBlock {
        parent: *cb,
        k,
        x: cb.x + dx,
        y: cb.y + dy,
        w,
        h,
    };
    [
        make(1, 0, 0, left, top),
        make(2, left, 0, right, top),
        make(3, 0, top, left, bottom),
        make(4, left, top, right, bottom),
    ]
}
