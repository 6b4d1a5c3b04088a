//! File formats for analysis results.
//!
//! CSV outputs start with `#` comment lines echoing the run configuration,
//! followed by a header row. JSON outputs carry the configuration as a
//! top-level `config` object.

use std::io::Write;

use serde::Serialize;

use crate::activity::FrameActivity;
use crate::error::{Error, Result};
use crate::qp::{QpConfig, QpMap};
use crate::yuv::VideoFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MapFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for MapFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(MapFormat::Csv),
            "json" => Ok(MapFormat::Json),
            _ => Err(Error::InvalidConfig(format!("unknown output format '{s}'"))),
        }
    }
}

pub fn describe_format(format: &VideoFormat) -> String {
    format!(
        "width={} height={} bit_depth={} chroma={}",
        format.width, format.height, format.bit_depth, format.chroma_format
    )
}

pub fn describe_config(config: &QpConfig) -> String {
    format!(
        "mode={} qp={} qp_range={} t_mode={} rounding={} cu_size={}",
        config.mode, config.slice_qp, config.qp_range, config.t_mode, config.rounding, config.cu_size
    )
}

/// Luma coordinates of a CU from its raster index.
fn cu_origin(map_cols: usize, cu_size: usize, index: usize) -> (usize, usize) {
    ((index % map_cols) * cu_size, (index / map_cols) * cu_size)
}

#[derive(Serialize)]
struct JsonFrame<'a> {
    frame: usize,
    cols: usize,
    rows: usize,
    qp: Vec<&'a [i32]>,
}

#[derive(Serialize)]
struct JsonConfig<'a> {
    #[serde(flatten)]
    qp: &'a QpConfig,
    width: usize,
    height: usize,
    bit_depth: u8,
    chroma: String,
}

#[derive(Serialize)]
struct JsonMaps<'a> {
    config: JsonConfig<'a>,
    frames: Vec<JsonFrame<'a>>,
}

pub fn write_qp_maps<W: Write>(
    out: &mut W,
    format: &VideoFormat,
    config: &QpConfig,
    maps: &[QpMap],
    kind: MapFormat,
) -> Result<()> {
    match kind {
        MapFormat::Csv => {
            writeln!(out, "# percept-qp qp map")?;
            writeln!(out, "# {}", describe_format(format))?;
            writeln!(out, "# {}", describe_config(config))?;
            writeln!(out, "frame,cu_x,cu_y,qp")?;
            let size = config.cu_size.get();
            for map in maps {
                for (i, qp) in map.qps.iter().enumerate() {
                    let (x, y) = cu_origin(map.cols, size, i);
                    writeln!(out, "{},{},{},{}", map.frame, x, y, qp)?;
                }
            }
        }
        MapFormat::Json => {
            let doc = JsonMaps {
                config: JsonConfig {
                    qp: config,
                    width: format.width,
                    height: format.height,
                    bit_depth: format.bit_depth,
                    chroma: format.chroma_format.to_string(),
                },
                frames: maps
                    .iter()
                    .map(|m| JsonFrame {
                        frame: m.frame,
                        cols: m.cols,
                        rows: m.rows,
                        qp: m.rows_iter().collect(),
                    })
                    .collect(),
            };
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn write_activity_header<W: Write>(out: &mut W, format: &VideoFormat, cu_size: usize) -> Result<()> {
    writeln!(out, "# percept-qp activity")?;
    writeln!(out, "# {} cu_size={}", describe_format(format), cu_size)?;
    writeln!(out, "frame,cu_x,cu_y,l,b,d,t_luma,t_cross")?;
    Ok(())
}

pub fn write_activity_rows<W: Write>(out: &mut W, frame: usize, fa: &FrameActivity) -> Result<()> {
    for r in &fa.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            frame, r.cu.x, r.cu.y, r.l, r.b, r.d, fa.t_luma, fa.t_cross
        )?;
    }
    Ok(())
}

/// Per-CU differences between two maps of the same frame (`b - a`).
pub fn write_compare_rows<W: Write>(out: &mut W, a: &QpMap, b: &QpMap) -> Result<()> {
    if (a.cols, a.rows) != (b.cols, b.rows) || a.config.cu_size != b.config.cu_size {
        return Err(Error::Geometry(format!(
            "frame {}: {}x{} CUs of {} vs {}x{} CUs of {}",
            a.frame, a.cols, a.rows, a.config.cu_size, b.cols, b.rows, b.config.cu_size
        )));
    }
    let size = a.config.cu_size.get();
    for (i, (qa, qb)) in a.qps.iter().zip(&b.qps).enumerate() {
        let (x, y) = cu_origin(a.cols, size, i);
        writeln!(out, "{},{},{},{},{},{}", a.frame, x, y, qa, qb, qb - qa)?;
    }
    Ok(())
}
