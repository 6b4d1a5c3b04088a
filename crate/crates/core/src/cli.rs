//! Command-line front end.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::activity::frame_activity;
use crate::error::{Error, Result};
use crate::metrics::{bd_psnr, bd_rate, parse_rd_csv, LabeledCurve};
use crate::partition::CuSize;
use crate::qp::{qp_map_from_activity, Mode, QpConfig, QpMap, Rounding, TMode, DEFAULT_QP_RANGE};
use crate::report::{self, MapFormat};
use crate::yuv::{ChromaFormat, Frame, FrameReader, VideoFormat};

pub const THREADS_ENV: &str = "PERCEPT_QP_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "percept-qp", version, about = "Perceptual CU-level QP maps for raw YCbCr video")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a QP map for every selected frame.
    Analyze(AnalyzeArgs),
    /// Compute two QP maps per frame and report per-CU differences.
    Compare(CompareArgs),
    /// BD-Rate and BD-PSNR between two RD curve files, per channel.
    Bdrate(BdrateArgs),
    /// Write per-CU spatial activities without computing QPs.
    DumpActivity(DumpActivityArgs),
}

#[derive(Debug, Clone, Args)]
pub struct VideoArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    #[arg(long, default_value_t = 8)]
    pub bit_depth: u8,
    #[arg(long, default_value = "420")]
    pub chroma: ChromaFormat,
    /// Number of frames to process (default: all after --skip).
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub skip: usize,
}

impl VideoArgs {
    pub fn format(&self) -> Result<VideoFormat> {
        VideoFormat::new(self.width, self.height, self.bit_depth, self.chroma)
    }
}

#[derive(Debug, Clone, Args)]
pub struct QpArgs {
    #[arg(long, default_value = "cbaq")]
    pub mode: Mode,
    #[arg(long = "qp", default_value_t = 32)]
    pub qp: i32,
    #[arg(long, default_value_t = DEFAULT_QP_RANGE)]
    pub qp_range: u32,
    #[arg(long, default_value = "cross")]
    pub t_mode: TMode,
    #[arg(long, default_value = "nearest")]
    pub rounding: Rounding,
    #[arg(long, default_value_t = 64)]
    pub cu_size: u32,
}

impl QpArgs {
    pub fn config(&self) -> Result<QpConfig> {
        let config = QpConfig {
            slice_qp: self.qp,
            qp_range: self.qp_range,
            mode: self.mode,
            cu_size: CuSize::new(self.cu_size)?,
            t_mode: self.t_mode,
            rounding: self.rounding,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub video: VideoArgs,
    #[command(flatten)]
    pub qp: QpArgs,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "csv")]
    pub format: MapFormat,
    /// Also write per-CU activities as CSV.
    #[arg(long)]
    pub dump_activity: Option<PathBuf>,
}

/// Run B inherits every setting of run A unless overridden by a `--b-*`
/// flag.
#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub video: VideoArgs,
    #[command(flatten)]
    pub qp: QpArgs,
    #[arg(long)]
    pub b_input: Option<PathBuf>,
    #[arg(long)]
    pub b_mode: Option<Mode>,
    #[arg(long)]
    pub b_qp: Option<i32>,
    #[arg(long)]
    pub b_qp_range: Option<u32>,
    #[arg(long)]
    pub b_t_mode: Option<TMode>,
    #[arg(long)]
    pub b_rounding: Option<Rounding>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BdrateArgs {
    #[arg(long)]
    pub anchor: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
}

#[derive(Debug, Args)]
pub struct DumpActivityArgs {
    #[command(flatten)]
    pub video: VideoArgs,
    #[arg(long, default_value_t = 64)]
    pub cu_size: u32,
    #[arg(long)]
    pub output: PathBuf,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

/// Worker count from the environment; unset or 0 lets rayon decide.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'"))),
        _ => Ok(0),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::Io(io::Error::other(e)))?;
    pool.install(|| {
        let mut stdout = io::stdout().lock();
        match cli.command {
            Command::Analyze(args) => cmd_analyze(&args, &mut stdout),
            Command::Compare(args) => cmd_compare(&args, &mut stdout),
            Command::Bdrate(args) => cmd_bdrate(&args, &mut stdout),
            Command::DumpActivity(args) => cmd_dump_activity(&args, &mut stdout),
        }
    })
}

/// Opens a raw clip and positions it at the first selected frame. The file
/// size must be a whole number of frames.
fn open_clip(video: &VideoArgs, format: &VideoFormat) -> Result<(FrameReader<BufReader<File>>, usize)> {
    let file = File::open(&video.input)?;
    let len = file.metadata()?.len() as usize;
    let frame_bytes = format.frame_bytes();
    if !len.is_multiple_of(frame_bytes) {
        return Err(Error::Geometry(format!(
            "{}: size {} is not a multiple of the {}-byte frame implied by {}",
            video.input.display(),
            len,
            frame_bytes,
            report::describe_format(format)
        )));
    }
    let total = len / frame_bytes;
    let available = total.saturating_sub(video.skip);
    let count = match video.frames {
        Some(n) if n > available => {
            return Err(Error::Geometry(format!(
                "{}: requested {} frames after skipping {}, file holds {}",
                video.input.display(),
                n,
                video.skip,
                total
            )))
        }
        Some(n) => n,
        None => available,
    };
    let mut reader = BufReader::new(file);
    reader.seek(SeekFrom::Start((video.skip * frame_bytes) as u64))?;
    let format = format.with_frame_count_hint(total);
    Ok((FrameReader::new(reader, format)?, count))
}

/// Reads `count` frames, handing each to `f` with its index in the file.
fn for_each_frame(
    video: &VideoArgs,
    format: &VideoFormat,
    mut f: impl FnMut(usize, &Frame) -> Result<()>,
) -> Result<usize> {
    let (mut reader, count) = open_clip(video, format)?;
    for i in 0..count {
        let frame = reader.next_frame()?.ok_or(Error::Truncated {
            frame: video.skip + i,
            expected: format.frame_bytes(),
            available: 0,
        })?;
        f(video.skip + i, &frame)?;
    }
    Ok(count)
}

fn create_output(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

#[derive(Debug, Default)]
struct MapStats {
    frames: usize,
    cus: usize,
    delta_sum: i64,
    min_qp: Option<i32>,
    max_qp: Option<i32>,
}

impl MapStats {
    fn add(&mut self, map: &QpMap) {
        self.frames += 1;
        self.cus += map.qps.len();
        self.delta_sum += map.delta_sum();
        self.min_qp = Some(self.min_qp.map_or(map.min_qp(), |m| m.min(map.min_qp())));
        self.max_qp = Some(self.max_qp.map_or(map.max_qp(), |m| m.max(map.max_qp())));
    }

    fn summary(&self) -> String {
        let mean = if self.cus == 0 { 0.0 } else { self.delta_sum as f64 / self.cus as f64 };
        let show = |q: Option<i32>| q.map_or_else(|| "-".to_string(), |q| q.to_string());
        format!(
            "frames={} cus={} mean_dqp={:.4} min_qp={} max_qp={}",
            self.frames,
            self.cus,
            mean,
            show(self.min_qp),
            show(self.max_qp)
        )
    }
}

pub fn cmd_analyze<W: Write>(args: &AnalyzeArgs, stdout: &mut W) -> Result<()> {
    let format = args.video.format()?;
    let config = args.qp.config()?;
    let mut activity_out = match &args.dump_activity {
        Some(path) => {
            let mut out = create_output(path)?;
            report::write_activity_header(&mut out, &format, config.cu_size.get())?;
            Some(out)
        }
        None => None,
    };

    let mut maps = Vec::new();
    let mut stats = MapStats::default();
    for_each_frame(&args.video, &format, |index, frame| {
        let fa = frame_activity(frame, config.cu_size);
        if let Some(out) = activity_out.as_mut() {
            report::write_activity_rows(out, index, &fa)?;
        }
        let map = qp_map_from_activity(&fa, &config, index);
        stats.add(&map);
        maps.push(map);
        Ok(())
    })?;

    let mut out = create_output(&args.output)?;
    report::write_qp_maps(&mut out, &format, &config, &maps, args.format)?;
    out.flush()?;
    if let Some(mut a) = activity_out {
        a.flush()?;
    }
    writeln!(stdout, "{}", stats.summary())?;
    Ok(())
}

pub fn cmd_compare<W: Write>(args: &CompareArgs, stdout: &mut W) -> Result<()> {
    let format = args.video.format()?;
    let config_a = args.qp.config()?;
    let mut config_b = config_a;
    if let Some(m) = args.b_mode {
        config_b.mode = m;
    }
    if let Some(q) = args.b_qp {
        config_b.slice_qp = q;
    }
    if let Some(a) = args.b_qp_range {
        config_b.qp_range = a;
    }
    if let Some(t) = args.b_t_mode {
        config_b.t_mode = t;
    }
    if let Some(r) = args.b_rounding {
        config_b.rounding = r;
    }
    config_b.validate()?;

    let maps_for = |video: &VideoArgs, config: &QpConfig| -> Result<Vec<QpMap>> {
        let mut maps = Vec::new();
        for_each_frame(video, &format, |index, frame| {
            let fa = frame_activity(frame, config.cu_size);
            maps.push(qp_map_from_activity(&fa, config, index));
            Ok(())
        })?;
        Ok(maps)
    };
    let maps_a = maps_for(&args.video, &config_a)?;
    let video_b = VideoArgs {
        input: args.b_input.clone().unwrap_or_else(|| args.video.input.clone()),
        ..args.video.clone()
    };
    let maps_b = maps_for(&video_b, &config_b)?;
    if maps_a.len() != maps_b.len() {
        return Err(Error::Geometry(format!(
            "run A has {} frames, run B has {}",
            maps_a.len(),
            maps_b.len()
        )));
    }

    let mut out = create_output(&args.output)?;
    writeln!(out, "# percept-qp compare")?;
    writeln!(out, "# {}", report::describe_format(&format))?;
    writeln!(out, "# a: input={} {}", args.video.input.display(), report::describe_config(&config_a))?;
    writeln!(out, "# b: input={} {}", video_b.input.display(), report::describe_config(&config_b))?;
    writeln!(out, "frame,cu_x,cu_y,qp_a,qp_b,delta")?;
    let mut histogram: BTreeMap<i32, usize> = BTreeMap::new();
    for (a, b) in maps_a.iter().zip(&maps_b) {
        report::write_compare_rows(&mut out, a, b)?;
        for (qa, qb) in a.qps.iter().zip(&b.qps) {
            *histogram.entry(qb - qa).or_default() += 1;
        }
    }
    out.flush()?;

    let total: usize = histogram.values().sum();
    let changed: usize = histogram.iter().filter(|(&d, _)| d != 0).map(|(_, &n)| n).sum();
    writeln!(stdout, "frames={} cus={} changed={}", maps_a.len(), total, changed)?;
    writeln!(stdout, "delta,count")?;
    for (d, n) in histogram {
        writeln!(stdout, "{d},{n}")?;
    }
    Ok(())
}

fn single_label(curves: &[LabeledCurve], path: &Path) -> Result<String> {
    let mut labels: Vec<&str> = curves.iter().map(|c| c.label.as_str()).collect();
    labels.dedup();
    match labels.as_slice() {
        [one] => Ok(one.to_string()),
        [] => Err(Error::Csv(format!("{}: no RD points", path.display()))),
        _ => Err(Error::Csv(format!(
            "{}: expected a single label, found {}",
            path.display(),
            labels.join(", ")
        ))),
    }
}

pub fn cmd_bdrate<W: Write>(args: &BdrateArgs, stdout: &mut W) -> Result<()> {
    let anchor = parse_rd_csv(&fs::read_to_string(&args.anchor)?)?;
    let test = parse_rd_csv(&fs::read_to_string(&args.test)?)?;
    let anchor_label = single_label(&anchor, &args.anchor)?;
    let test_label = single_label(&test, &args.test)?;

    writeln!(stdout, "channel,anchor,test,bd_rate_pct,bd_psnr_db")?;
    let mut matched = 0;
    for a in &anchor {
        let Some(t) = test.iter().find(|t| t.channel == a.channel) else {
            continue;
        };
        let (ca, ct) = (a.to_curve()?, t.to_curve()?);
        writeln!(
            stdout,
            "{},{},{},{:.6},{:.6}",
            a.channel,
            anchor_label,
            test_label,
            bd_rate(&ca, &ct)?,
            bd_psnr(&ca, &ct)?
        )?;
        matched += 1;
    }
    if matched == 0 {
        return Err(Error::Csv("anchor and test share no channel".into()));
    }
    Ok(())
}

pub fn cmd_dump_activity<W: Write>(args: &DumpActivityArgs, stdout: &mut W) -> Result<()> {
    let format = args.video.format()?;
    let cu_size = CuSize::new(args.cu_size)?;
    let mut out = create_output(&args.output)?;
    report::write_activity_header(&mut out, &format, cu_size.get())?;
    let frames = for_each_frame(&args.video, &format, |index, frame| {
        report::write_activity_rows(&mut out, index, &frame_activity(frame, cu_size))
    })?;
    out.flush()?;
    writeln!(stdout, "frames={frames}")?;
    Ok(())
}
