//! CU-level QP selection.
//!
//! Both modes map an activity `s` and a frame mean `t` to a normalized
//! activity
//!
//! ```text
//! n = (f*s + t) / (s + f*t),   f = 2^(a/6)
//! ```
//!
//! and offset the slice QP by `6*log2(n)`. The luma-only mode uses `s = l`
//! against `t_luma`; the cross-channel mode uses `s = l + b + d` against
//! `t_cross` (or `t_luma` when asked). Since `n` lies in `[1/f, f]`, the
//! offset lies in `[-a, a]`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::activity::{frame_activity, ActivityRecord, FrameActivity};
use crate::error::{Error, Result};
use crate::partition::CuSize;
use crate::yuv::Frame;

pub const MIN_QP: i32 = 0;
pub const MAX_QP: i32 = 51;
pub const DEFAULT_QP_RANGE: u32 = 6;

macro_rules! str_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($ty::$variant),)+
                    _ => Err(Error::InvalidConfig(format!(
                        concat!("unknown ", stringify!($ty), " '{}'"), s
                    ))),
                }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Luma-only adaptation.
    #[serde(rename = "adaptiveqp")]
    AdaptiveQp,
    /// Cross-channel adaptation over `l + b + d`.
    #[default]
    Cbaq,
}
str_enum!(Mode { AdaptiveQp => "adaptiveqp", Cbaq => "cbaq" });

/// Which frame mean the cross-channel mode normalizes against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TMode {
    Luma,
    #[default]
    Cross,
}
str_enum!(TMode { Luma => "luma", Cross => "cross" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    /// Round half away from zero.
    #[default]
    Nearest,
    Ceiling,
}
str_enum!(Rounding { Nearest => "nearest", Ceiling => "ceiling" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QpConfig {
    pub slice_qp: i32,
    pub qp_range: u32,
    pub mode: Mode,
    pub cu_size: CuSize,
    pub t_mode: TMode,
    pub rounding: Rounding,
}

impl Default for QpConfig {
    fn default() -> Self {
        QpConfig {
            slice_qp: 32,
            qp_range: DEFAULT_QP_RANGE,
            mode: Mode::default(),
            cu_size: CuSize::default(),
            t_mode: TMode::default(),
            rounding: Rounding::default(),
        }
    }
}

impl QpConfig {
    pub fn new(slice_qp: i32, mode: Mode) -> Result<Self> {
        let config = QpConfig {
            slice_qp,
            mode,
            ..QpConfig::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_QP..=MAX_QP).contains(&self.slice_qp) {
            return Err(Error::InvalidConfig(format!(
                "slice QP {} outside {MIN_QP}..={MAX_QP}",
                self.slice_qp
            )));
        }
        // Anything wider than the legal QP span only saturates the clip.
        if self.qp_range > MAX_QP as u32 {
            return Err(Error::InvalidConfig(format!(
                "QP adaptation range {} exceeds {MAX_QP}",
                self.qp_range
            )));
        }
        Ok(())
    }

    pub fn scaling_factor(&self) -> f64 {
        scaling_factor(self.qp_range)
    }

    /// Smallest and largest QP a map under this configuration can contain.
    pub fn qp_bounds(&self) -> (i32, i32) {
        let a = self.qp_range as i32;
        ((self.slice_qp - a).max(MIN_QP), (self.slice_qp + a).min(MAX_QP))
    }
}

/// `f = 2^(a/6)`: QP rises by 6 for every doubling of the quantizer step,
/// so `f` is the step ratio spanned by the adaptation range.
pub fn scaling_factor(qp_range: u32) -> f64 {
    (f64::from(qp_range) / 6.0).exp2()
}

pub fn normalized_activity(s: f64, t: f64, f: f64) -> f64 {
    (f * s + t) / (s + f * t)
}

pub fn delta_qp(n: f64, rounding: Rounding) -> i32 {
    let x = 6.0 * n.log2();
    match rounding {
        Rounding::Nearest => x.round() as i32,
        Rounding::Ceiling => x.ceil() as i32,
    }
}

/// The activity and frame mean a record is judged by under `config`.
pub fn activity_pair(config: &QpConfig, record: &ActivityRecord, fa: &FrameActivity) -> (f64, f64) {
    match config.mode {
        Mode::AdaptiveQp => (record.l, fa.t_luma),
        Mode::Cbaq => {
            let t = match config.t_mode {
                TMode::Cross => fa.t_cross,
                TMode::Luma => fa.t_luma,
            };
            (record.cross(), t)
        }
    }
}

pub fn cu_qp(config: &QpConfig, record: &ActivityRecord, fa: &FrameActivity) -> i32 {
    let (s, t) = activity_pair(config, record, fa);
    qp_for_activity(config, s, t)
}

/// QP for activity `s` against mean `t`. The offset is held to `±a` so a
/// last-ulp overshoot of `n` past `f` cannot round out of range.
pub fn qp_for_activity(config: &QpConfig, s: f64, t: f64) -> i32 {
    let a = config.qp_range as i32;
    let n = normalized_activity(s, t, config.scaling_factor());
    let dqp = delta_qp(n, config.rounding).clamp(-a, a);
    (config.slice_qp + dqp).clamp(MIN_QP, MAX_QP)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QpMap {
    pub frame: usize,
    pub cols: usize,
    pub rows: usize,
    /// Row-major, `cols * rows` entries.
    pub qps: Vec<i32>,
    #[serde(skip)]
    pub config: QpConfig,
}

impl QpMap {
    pub fn get(&self, col: usize, row: usize) -> i32 {
        self.qps[row * self.cols + col]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[i32]> {
        self.qps.chunks(self.cols)
    }

    pub fn min_qp(&self) -> i32 {
        self.qps.iter().copied().min().unwrap_or(self.config.slice_qp)
    }

    pub fn max_qp(&self) -> i32 {
        self.qps.iter().copied().max().unwrap_or(self.config.slice_qp)
    }

    pub fn delta_sum(&self) -> i64 {
        self.qps.iter().map(|&q| i64::from(q - self.config.slice_qp)).sum()
    }
}

pub fn qp_map_from_activity(fa: &FrameActivity, config: &QpConfig, frame_index: usize) -> QpMap {
    let qps = fa.records.par_iter().map(|r| cu_qp(config, r, fa)).collect();
    QpMap {
        frame: frame_index,
        cols: fa.cols,
        rows: fa.rows,
        qps,
        config: *config,
    }
}

/// Two passes: frame activity first, then every CU's QP.
pub fn qp_map(frame: &Frame, config: &QpConfig, frame_index: usize) -> Result<QpMap> {
    config.validate()?;
    let fa = frame_activity(frame, config.cu_size);
    Ok(qp_map_from_activity(&fa, config, frame_index))
}
