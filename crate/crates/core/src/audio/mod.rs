//! Audio buffers, pre-emphasis, framing and sample-rate conversion.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

mod resample;

pub use resample::resample;

/// Default pre-emphasis coefficient.
pub const DEFAULT_PRE_EMPHASIS: f64 = 0.97;

/// Mono sample sequence at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Validates that the rate is positive and every sample finite.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidSampleRate);
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample(i));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(alloc::vec![0.0; len], sample_rate)
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    #[inline]
    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Multiplies every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(self.samples.iter().map(|s| s * gain).collect(), self.sample_rate)
    }

    /// Joins buffers end to end. All inputs must share one sample rate.
    pub fn concat<'a, I>(parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a AudioBuffer>,
    {
        let mut rate = None;
        let mut samples = Vec::new();
        for p in parts {
            match rate {
                None => rate = Some(p.sample_rate),
                Some(r) if r != p.sample_rate => {
                    return Err(Error::SampleRateMismatch { expected: r, actual: p.sample_rate })
                }
                _ => {}
            }
            samples.extend_from_slice(&p.samples);
        }
        Self::new(samples, rate.ok_or(Error::Empty)?)
    }
}

/// First-order pre-emphasis: `y[0] = x[0]`, `y[n] = x[n] - alpha * x[n-1]`.
pub fn pre_emphasize(buffer: &AudioBuffer, alpha: f64) -> Result<AudioBuffer> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(alloc::format!("pre-emphasis coefficient {alpha} outside [0, 1)")));
    }
    let x = buffer.samples();
    let mut y = Vec::with_capacity(x.len());
    if let Some(&first) = x.first() {
        y.push(first);
    }
    y.extend(x.windows(2).map(|w| w[1] - alpha * w[0]));
    AudioBuffer::new(y, buffer.sample_rate)
}

/// Analysis window shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Hamming,
    Hann,
    Rect,
}

impl Window {
    /// Symmetric window coefficients of length `len`.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        if len == 1 {
            return alloc::vec![1.0];
        }
        let denom = (len - 1) as f64;
        (0..len)
            .map(|n| {
                let phase = 2.0 * PI * n as f64 / denom;
                match self {
                    Window::Hamming => 0.54 - 0.46 * phase.cos(),
                    Window::Hann => 0.5 - 0.5 * phase.cos(),
                    Window::Rect => 1.0,
                }
            })
            .collect()
    }
}

/// One recording of one speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub speaker: alloc::string::String,
    pub id: alloc::string::String,
    pub audio: AudioBuffer,
}

/// Windowed frames cut from a buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Matrix,
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl FrameSequence {
    #[inline]
    pub fn n_frames(&self) -> usize {
        self.frames.rows()
    }

    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop as f64
    }
}

/// Number of complete frames of `frame_len` samples at stride `hop`.
pub fn frame_count(n_samples: usize, frame_len: usize, hop: usize) -> usize {
    if n_samples < frame_len || hop == 0 {
        0
    } else {
        (n_samples - frame_len) / hop + 1
    }
}

/// Converts a duration in milliseconds to a sample count at `sample_rate`.
pub fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

/// Cuts `buffer` into windowed frames; a trailing partial frame is dropped.
pub fn frame_signal(buffer: &AudioBuffer, frame_ms: f64, hop_ms: f64, window: Window) -> Result<FrameSequence> {
    if !(hop_ms > 0.0 && frame_ms >= hop_ms) {
        return Err(Error::InvalidArgument(alloc::format!(
            "frame {frame_ms} ms / hop {hop_ms} ms: need frame >= hop > 0"
        )));
    }
    let frame_len = ms_to_samples(frame_ms, buffer.sample_rate);
    let hop = ms_to_samples(hop_ms, buffer.sample_rate);
    frame_samples(buffer, frame_len, hop, window)
}

/// Sample-count variant of [`frame_signal`].
pub fn frame_samples(buffer: &AudioBuffer, frame_len: usize, hop: usize, window: Window) -> Result<FrameSequence> {
    if hop == 0 || frame_len < hop {
        return Err(Error::InvalidArgument(alloc::format!(
            "frame {frame_len} / hop {hop} samples: need frame >= hop > 0"
        )));
    }
    let win = window.coefficients(frame_len);
    let x = buffer.samples();
    let n = frame_count(x.len(), frame_len, hop);
    let mut frames = Matrix::zeros(n, frame_len);
    for i in 0..n {
        let src = &x[i * hop..i * hop + frame_len];
        for ((dst, s), w) in frames.row_mut(i).iter_mut().zip(src).zip(&win) {
            *dst = s * w;
        }
    }
    Ok(FrameSequence { frames, frame_len, hop, sample_rate: buffer.sample_rate })
}
