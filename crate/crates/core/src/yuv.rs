//! Raw planar YCbCr frames: geometry, in-memory planes and the on-disk
//! layout.
//!
//! A frame on disk is the Y plane followed by Cb and Cr, each row-major with
//! no padding. 8-bit samples take one byte; 10-bit samples take two bytes,
//! little-endian, with the value in the low 10 bits.

use std::fmt;
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ChromaFormat {
    #[serde(rename = "444")]
    Cf444,
    #[serde(rename = "422")]
    Cf422,
    #[serde(rename = "420")]
    Cf420,
}

impl ChromaFormat {
    pub const ALL: [ChromaFormat; 3] = [ChromaFormat::Cf444, ChromaFormat::Cf422, ChromaFormat::Cf420];

    /// Horizontal and vertical chroma decimation as right-shift amounts.
    pub const fn shifts(self) -> (u32, u32) {
        match self {
            ChromaFormat::Cf444 => (0, 0),
            ChromaFormat::Cf422 => (1, 0),
            ChromaFormat::Cf420 => (1, 1),
        }
    }
}

impl fmt::Display for ChromaFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChromaFormat::Cf444 => "444",
            ChromaFormat::Cf422 => "422",
            ChromaFormat::Cf420 => "420",
        })
    }
}

impl FromStr for ChromaFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "444" => Ok(ChromaFormat::Cf444),
            "422" => Ok(ChromaFormat::Cf422),
            "420" => Ok(ChromaFormat::Cf420),
            _ => Err(Error::InvalidFormat(format!("unknown chroma format '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Channel {
    Y,
    Cb,
    Cr,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Y, Channel::Cb, Channel::Cr];

    pub fn is_chroma(self) -> bool {
        self != Channel::Y
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Y => "Y",
            Channel::Cb => "Cb",
            Channel::Cr => "Cr",
        })
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Y" | "y" => Ok(Channel::Y),
            "Cb" | "cb" | "CB" | "U" | "u" => Ok(Channel::Cb),
            "Cr" | "cr" | "CR" | "V" | "v" => Ok(Channel::Cr),
            _ => Err(Error::Csv(format!("unknown channel '{s}'"))),
        }
    }
}

/// Geometry and sample format of a raw clip. Raw files carry no header, so
/// every field comes from the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VideoFormat {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub chroma_format: ChromaFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_count_hint: Option<usize>,
}

impl VideoFormat {
    pub fn new(width: usize, height: usize, bit_depth: u8, chroma_format: ChromaFormat) -> Result<Self> {
        let format = VideoFormat {
            width,
            height,
            bit_depth,
            chroma_format,
            frame_count_hint: None,
        };
        format.validate()?;
        Ok(format)
    }

    pub fn with_frame_count_hint(mut self, frames: usize) -> Self {
        self.frame_count_hint = Some(frames);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidFormat(format!(
                "dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        if self.bit_depth != 8 && self.bit_depth != 10 {
            return Err(Error::InvalidFormat(format!(
                "bit depth must be 8 or 10, got {}",
                self.bit_depth
            )));
        }
        let (sx, sy) = self.chroma_format.shifts();
        if sx == 1 && !self.width.is_multiple_of(2) {
            return Err(Error::InvalidFormat(format!(
                "{} chroma requires an even width, got {}",
                self.chroma_format, self.width
            )));
        }
        if sy == 1 && !self.height.is_multiple_of(2) {
            return Err(Error::InvalidFormat(format!(
                "{} chroma requires an even height, got {}",
                self.chroma_format, self.height
            )));
        }
        Ok(())
    }

    pub fn max_sample(&self) -> u16 {
        (1u16 << self.bit_depth) - 1
    }

    pub fn bytes_per_sample(&self) -> usize {
        if self.bit_depth > 8 {
            2
        } else {
            1
        }
    }

    pub fn samples_per_frame(&self) -> usize {
        Channel::ALL
            .iter()
            .map(|&c| {
                let (w, h) = plane_dims(self, c);
                w * h
            })
            .sum()
    }

    pub fn frame_bytes(&self) -> usize {
        self.bytes_per_sample() * self.samples_per_frame()
    }
}

/// Dimensions of one channel's plane.
pub fn plane_dims(format: &VideoFormat, channel: Channel) -> (usize, usize) {
    if channel.is_chroma() {
        let (sx, sy) = format.chroma_format.shifts();
        (format.width >> sx, format.height >> sy)
    } else {
        (format.width, format.height)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl Plane {
    /// Builds a plane, checking the sample count and that every sample fits
    /// in `bit_depth` bits.
    pub fn new(width: usize, height: usize, data: Vec<u16>, bit_depth: u8) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidPlane(format!("empty plane {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::InvalidPlane(format!(
                "{}x{} plane needs {} samples, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        let max = (1u32 << bit_depth) - 1;
        if let Some(&value) = data.iter().find(|&&v| u32::from(v) > max) {
            return Err(Error::SampleOutOfRange { value, bit_depth });
        }
        Ok(Plane { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u16] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn into_data(self) -> Vec<u16> {
        self.data
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub y: Plane,
    pub cb: Plane,
    pub cr: Plane,
    pub format: VideoFormat,
}

impl Frame {
    /// Assembles a frame after checking each plane against the format.
    /// Sample ranges are checked when the planes are built.
    pub fn new(format: VideoFormat, y: Plane, cb: Plane, cr: Plane) -> Result<Self> {
        format.validate()?;
        for (channel, plane) in [(Channel::Y, &y), (Channel::Cb, &cb), (Channel::Cr, &cr)] {
            let expected = plane_dims(&format, channel);
            if (plane.width, plane.height) != expected {
                return Err(Error::InvalidPlane(format!(
                    "{channel} plane is {}x{}, format requires {}x{}",
                    plane.width, plane.height, expected.0, expected.1
                )));
            }
            if let Some(&value) = plane.data.iter().find(|&&v| v > format.max_sample()) {
                return Err(Error::SampleOutOfRange {
                    value,
                    bit_depth: format.bit_depth,
                });
            }
        }
        Ok(Frame { y, cb, cr, format })
    }

    /// A frame with every sample of every plane set to `value`.
    pub fn constant(format: VideoFormat, value: u16) -> Result<Self> {
        let plane = |c| {
            let (w, h) = plane_dims(&format, c);
            Plane::new(w, h, vec![value; w * h], format.bit_depth)
        };
        Frame::new(format, plane(Channel::Y)?, plane(Channel::Cb)?, plane(Channel::Cr)?)
    }

    pub fn plane(&self, channel: Channel) -> &Plane {
        match channel {
            Channel::Y => &self.y,
            Channel::Cb => &self.cb,
            Channel::Cr => &self.cr,
        }
    }
}

fn decode_plane(bytes: &[u8], width: usize, height: usize, bit_depth: u8) -> Result<Plane> {
    let data: Vec<u16> = if bit_depth > 8 {
        bytes
            .chunks_exact(2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
            .collect()
    } else {
        bytes.iter().map(|&b| u16::from(b)).collect()
    };
    Plane::new(width, height, data, bit_depth)
}

/// Reads exactly `buf.len()` bytes, returning how many were available if the
/// stream ends first.
fn read_full<R: Read>(source: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

fn decode_frame(bytes: &[u8], format: &VideoFormat) -> Result<Frame> {
    let bps = format.bytes_per_sample();
    let mut offset = 0;
    let mut planes = Vec::with_capacity(3);
    for channel in Channel::ALL {
        let (w, h) = plane_dims(format, channel);
        let len = w * h * bps;
        planes.push(decode_plane(&bytes[offset..offset + len], w, h, format.bit_depth)?);
        offset += len;
    }
    let cr = planes.pop().unwrap();
    let cb = planes.pop().unwrap();
    let y = planes.pop().unwrap();
    Frame::new(*format, y, cb, cr)
}

/// Reads frame `index` (zero-based) from a seekable raw stream.
pub fn read_frame<R: Read + Seek>(source: &mut R, format: &VideoFormat, index: usize) -> Result<Frame> {
    format.validate()?;
    let frame_bytes = format.frame_bytes();
    source.seek(SeekFrom::Start((index * frame_bytes) as u64))?;
    let mut buf = vec![0u8; frame_bytes];
    let available = read_full(source, &mut buf)?;
    if available < frame_bytes {
        return Err(Error::Truncated {
            frame: index,
            expected: frame_bytes,
            available,
        });
    }
    decode_frame(&buf, format)
}

/// Writes one frame in the raw planar layout and returns the byte count.
pub fn write_frame<W: Write>(sink: &mut W, frame: &Frame) -> Result<usize> {
    let wide = frame.format.bytes_per_sample() == 2;
    let mut buf = Vec::with_capacity(frame.format.frame_bytes());
    for channel in Channel::ALL {
        let plane = frame.plane(channel);
        if wide {
            buf.extend(plane.data.iter().flat_map(|v| v.to_le_bytes()));
        } else {
            buf.extend(plane.data.iter().map(|&v| v as u8));
        }
    }
    sink.write_all(&buf)?;
    Ok(buf.len())
}

/// Sequential reader over a raw stream, one frame per call.
pub struct FrameReader<R> {
    source: R,
    format: VideoFormat,
    next_index: usize,
    buf: Vec<u8>,
}

impl<R: Read> FrameReader<R> {
    pub fn new(source: R, format: VideoFormat) -> Result<Self> {
        format.validate()?;
        Ok(FrameReader {
            source,
            buf: vec![0u8; format.frame_bytes()],
            format,
            next_index: 0,
        })
    }

    pub fn format(&self) -> &VideoFormat {
        &self.format
    }

    /// Returns `Ok(None)` on a clean end of stream and a truncation error if
    /// the stream stops part-way through a frame.
    pub fn next_frame(&mut self) -> Result<Option<Frame>> {
        let available = read_full(&mut self.source, &mut self.buf)?;
        if available == 0 {
            return Ok(None);
        }
        if available < self.buf.len() {
            return Err(Error::Truncated {
                frame: self.next_index,
                expected: self.buf.len(),
                available,
            });
        }
        self.next_index += 1;
        decode_frame(&self.buf, &self.format).map(Some)
    }
}

impl<R: Read> Iterator for FrameReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}
