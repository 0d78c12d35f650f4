//! 16-bit PCM WAV files.

use std::io;
use std::path::Path;

use cepstra_core::AudioBuffer;
use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

const SCALE: f64 = 32768.0;

fn map_read_error(path: &Path, e: hound::Error) -> Error {
    let path = path.to_path_buf();
    match e {
        // hound reports short reads as a custom `Other` error.
        hound::Error::IoError(io) if matches!(io.kind(), io::ErrorKind::UnexpectedEof | io::ErrorKind::Other) => {
            Error::TruncatedWav { path, detail: io.to_string() }
        }
        hound::Error::IoError(io) => Error::Io { path, cause: io },
        hound::Error::FormatError(msg) => Error::TruncatedWav { path, detail: msg.to_string() },
        hound::Error::UnfinishedSample => Error::TruncatedWav { path, detail: "partial trailing sample".into() },
        other => Error::UnsupportedWav { path, detail: other.to_string() },
    }
}

/// Reads 16-bit PCM, averaging channels to mono and scaling by 1/32768.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| map_read_error(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedWav {
            path: path.to_path_buf(),
            detail: format!("{:?} {}-bit", spec.sample_format, spec.bits_per_sample),
        });
    }
    let channels = spec.channels.max(1) as usize;
    let raw = reader
        .into_samples::<i16>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| map_read_error(path, e))?;
    if raw.is_empty() {
        return Err(Error::EmptyWav { path: path.to_path_buf() });
    }
    if raw.len() % channels != 0 {
        return Err(Error::TruncatedWav { path: path.to_path_buf(), detail: "partial trailing frame".into() });
    }
    let samples = raw
        .chunks_exact(channels)
        .map(|frame| frame.iter().map(|&s| s as f64).sum::<f64>() / (channels as f64 * SCALE))
        .collect();
    AudioBuffer::new(samples, spec.sample_rate).map_err(|e| Error::from(e).at(path))
}

/// Writes mono 16-bit PCM. Samples outside [-1, 1] are rejected, not clipped.
pub fn save_wav(buffer: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some((index, &value)) = buffer.samples().iter().enumerate().find(|(_, v)| v.abs() > 1.0) {
        return Err(Error::OutOfRange { index, value }.at(path));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let write = || -> std::result::Result<(), hound::Error> {
        let mut w = WavWriter::create(path, spec)?;
        for &s in buffer.samples() {
            w.write_sample((s * SCALE).round().clamp(-SCALE, SCALE - 1.0) as i16)?;
        }
        w.finalize()
    };
    write().map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    })
}
