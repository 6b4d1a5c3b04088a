//! Perceptually adaptive CU-level quantization for raw YCbCr video.
//!
//! The crate reads raw planar 4:4:4, 4:2:2 and 4:2:0 clips, measures the
//! spatial activity of every CU's coding blocks, and turns it into a QP map
//! using either the luma-only rule or the cross-channel rule that also
//! weighs the Cb and Cr blocks. [`metrics`] holds the PSNR and BD-Rate tools
//! used to compare encodes made with the two maps.

pub mod activity;
pub mod cli;
pub mod error;
pub mod metrics;
pub mod partition;
pub mod qp;
pub mod report;
pub mod yuv;

pub use activity::{block_mean, block_variance, cu_activity, frame_activity, ActivityRecord, FrameActivity};
pub use error::{Error, Result};
pub use metrics::{bd_psnr, bd_rate, emit_rd_csv, parse_rd_csv, psnr, Psnr, RdCurve, RdPoint};
pub use partition::{cb_rect, cu_grid, sub_blocks, CbRect, CuRect, CuSize, SubBlock};
pub use qp::{cu_qp, delta_qp, normalized_activity, qp_map, scaling_factor, Mode, QpConfig, QpMap, Rounding, TMode};
pub use yuv::{plane_dims, read_frame, write_frame, Channel, ChromaFormat, Frame, FrameReader, Plane, VideoFormat};
