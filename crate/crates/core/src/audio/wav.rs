//! RIFF/WAVE input and output.
//!
//! 32-bit float is the canonical on-disk format and round-trips bit-exactly
//! through `f32`. Integer PCM is scaled symmetrically: full scale `1.0` maps to
//! `32767` (16-bit) or `8388607` (24-bit), and reading divides by the same
//! constant. Writing integer PCM clamps to `[-1, 1]` and rounds to nearest.

use std::io::{Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::buffer::AudioBuffer;
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

pub const I16_FULL_SCALE: f64 = 32767.0;
pub const I24_FULL_SCALE: f64 = 8_388_607.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavFormat {
    #[default]
    Float32,
    Int16,
    Int24,
}

fn map_hound(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        hound::Error::FormatError(msg) => Error::Format(msg.to_string()),
        hound::Error::Unsupported => Error::UnsupportedFormat("unsupported WAV encoding".into()),
        hound::Error::TooWide => Error::UnsupportedFormat("sample width too large".into()),
        hound::Error::UnfinishedSample => Error::Format("file ends inside a sample".into()),
        hound::Error::InvalidSampleFormat => {
            Error::UnsupportedFormat("sample format does not match bit depth".into())
        }
    }
}

// While decoding, an I/O failure means the stream ended early.
fn map_read(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Format(format!("truncated or unreadable data: {io}")),
        other => map_hound(other),
    }
}

pub fn read_wav_from<T: Real, R: Read>(reader: R) -> Result<AudioBuffer<T>> {
    let mut r = WavReader::new(reader).map_err(map_read)?;
    let spec = r.spec();
    let nch = spec.channels as usize;
    if nch == 0 {
        return Err(Error::Format("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => r
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_read)?,
        (SampleFormat::Int, 16) => r
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / I16_FULL_SCALE))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_read)?,
        (SampleFormat::Int, 24) => r
            .samples::<i32>()
            .map(|s| s.map(|v| v as f64 / I24_FULL_SCALE))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_read)?,
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat(format!("{bits}-bit {fmt:?} samples")));
        }
    };
    if interleaved.len() % nch != 0 {
        return Err(Error::Format("sample count is not a multiple of the channel count".into()));
    }
    let frames = interleaved.len() / nch;
    let mut channels = vec![Vec::with_capacity(frames); nch];
    for frame in interleaved.chunks_exact(nch) {
        for (c, &v) in frame.iter().enumerate() {
            channels[c].push(T::lit(v));
        }
    }
    AudioBuffer::new(channels, spec.sample_rate)
}

pub fn read_wav<T: Real>(path: impl AsRef<Path>) -> Result<AudioBuffer<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_wav_from(std::io::BufReader::new(file))
}

pub fn write_wav_to<T: Real, W: Write + Seek>(
    writer: W,
    buf: &AudioBuffer<T>,
    format: WavFormat,
) -> Result<()> {
    if !buf.is_finite() {
        return Err(invalid("cannot write non-finite samples"));
    }
    let (bits, sample_format) = match format {
        WavFormat::Float32 => (32, SampleFormat::Float),
        WavFormat::Int16 => (16, SampleFormat::Int),
        WavFormat::Int24 => (24, SampleFormat::Int),
    };
    let channels = u16::try_from(buf.num_channels())
        .map_err(|_| invalid("too many channels for a WAV file"))?;
    let spec = WavSpec { channels, sample_rate: buf.sample_rate(), bits_per_sample: bits, sample_format };
    let mut w = WavWriter::new(writer, spec).map_err(map_hound)?;
    for t in 0..buf.len() {
        for c in 0..buf.num_channels() {
            let v = buf.channel(c)[t].to_f64_lossy();
            match format {
                WavFormat::Float32 => w.write_sample(v as f32),
                WavFormat::Int16 => w.write_sample((v.clamp(-1.0, 1.0) * I16_FULL_SCALE).round() as i16),
                WavFormat::Int24 => w.write_sample((v.clamp(-1.0, 1.0) * I24_FULL_SCALE).round() as i32),
            }
            .map_err(map_hound)?;
        }
    }
    w.finalize().map_err(map_hound)
}

/// Writes a 32-bit float WAV.
pub fn write_wav<T: Real>(path: impl AsRef<Path>, buf: &AudioBuffer<T>) -> Result<()> {
    write_wav_as(path, buf, WavFormat::Float32)
}

pub fn write_wav_as<T: Real>(path: impl AsRef<Path>, buf: &AudioBuffer<T>, format: WavFormat) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    write_wav_to(file, buf, format)
}
