//! Shared transforms: STFT power spectra, DCT-II, frequency scales,
//! filterbanks and linear prediction.

use alloc::vec;

use crate::audio::FrameSequence;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

mod dct;
mod fft;
mod filterbank;
mod lpc;
mod scales;

pub use dct::{dct_ii, Dct};
pub use fft::Fft;
pub use filterbank::{
    apply_filterbank, bark_filterbank, gammatone_filterbank, gammatone_magnitude, mel_filterbank, FilterBank,
    FilterKind,
};
pub use lpc::{autocorrelation, levinson_durbin, lpc_to_cepstrum, Lpc};
pub use scales::{bark_scale, erb, erb_rate, erb_rate_inverse, mel_scale, mel_to_hz};

/// Whether the filterbank sees `|X|²` or `|X|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumMode {
    #[default]
    Power,
    Magnitude,
}

/// Per-frame one-sided spectra, `fft_size / 2 + 1` bins each.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrumSequence {
    pub values: Matrix,
    pub bin_hz: f64,
}

impl PowerSpectrumSequence {
    pub fn n_bins(&self) -> usize {
        self.values.cols()
    }
}

/// `|DFT|²` of every frame, zero-padded to `fft_size`.
pub fn power_spectrum(frames: &FrameSequence, fft_size: usize) -> Result<PowerSpectrumSequence> {
    spectrum(frames, fft_size, SpectrumMode::Power)
}

pub fn spectrum(frames: &FrameSequence, fft_size: usize, mode: SpectrumMode) -> Result<PowerSpectrumSequence> {
    if !fft_size.is_power_of_two() {
        return Err(Error::InvalidArgument(alloc::format!("FFT size {fft_size} is not a power of two")));
    }
    if fft_size < frames.frame_len {
        return Err(Error::InvalidArgument(alloc::format!(
            "FFT size {fft_size} shorter than frame length {}",
            frames.frame_len
        )));
    }
    let fft = Fft::new(fft_size);
    let n_bins = fft_size / 2 + 1;
    let mut values = Matrix::zeros(frames.n_frames(), n_bins);
    let mut re = vec![0.0; fft_size];
    let mut im = vec![0.0; fft_size];
    for (i, frame) in frames.frames.iter_rows().enumerate() {
        re[..frame.len()].copy_from_slice(frame);
        re[frame.len()..].fill(0.0);
        im.fill(0.0);
        fft.forward(&mut re, &mut im);
        for (k, v) in values.row_mut(i).iter_mut().enumerate() {
            let p = re[k] * re[k] + im[k] * im[k];
            *v = match mode {
                SpectrumMode::Power => p,
                SpectrumMode::Magnitude => num_traits::Float::sqrt(p),
            };
        }
    }
    Ok(PowerSpectrumSequence { values, bin_hz: frames.sample_rate as f64 / fft_size as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{frame_samples, AudioBuffer, Window};
    use alloc::vec::Vec;
    use core::f64::consts::PI;

    fn frames_of(x: Vec<f64>) -> FrameSequence {
        let n = x.len();
        frame_samples(&AudioBuffer::new(x, 16000).unwrap(), n, n, Window::Rect).unwrap()
    }

    #[test]
    fn constant_frame_puts_everything_in_dc() {
        let c = 0.3;
        let spec = power_spectrum(&frames_of(vec![c; 400]), 512).unwrap();
        let row = spec.values.row(0);
        assert!((row[0] - (c * 400.0) * (c * 400.0)).abs() < 1e-9);
        assert_eq!(spec.n_bins(), 257);
        assert!((spec.bin_hz - 31.25).abs() < 1e-12);
    }

    #[test]
    fn bin_centred_sine() {
        let k = 19;
        let x = (0..512).map(|n| (2.0 * PI * k as f64 * n as f64 / 512.0).sin()).collect();
        let spec = power_spectrum(&frames_of(x), 512).unwrap();
        let row = spec.values.row(0);
        let peak = row[k];
        for (i, v) in row.iter().enumerate() {
            if i != k {
                assert!(v / peak < 1e-10, "bin {i}: {}", v / peak);
            }
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        let f = frames_of(vec![0.0; 400]);
        assert!(power_spectrum(&f, 256).is_err());
        assert!(power_spectrum(&f, 600).is_err());
    }

    #[test]
    fn magnitude_mode_is_sqrt_of_power() {
        let x: Vec<f64> = (0..400).map(|n| ((n * 7919) % 13) as f64 / 13.0 - 0.5).collect();
        let f = frames_of(x);
        let p = power_spectrum(&f, 512).unwrap();
        let m = spectrum(&f, 512, SpectrumMode::Magnitude).unwrap();
        for (a, b) in p.values.as_slice().iter().zip(m.values.as_slice()) {
            assert!((num_traits::Float::sqrt(*a) - b).abs() < 1e-12);
        }
    }
}
