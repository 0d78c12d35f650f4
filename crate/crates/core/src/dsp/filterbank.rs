use alloc::vec::Vec;

use num_traits::Float;

use super::scales::{bark_scale, erb, erb_rate, erb_rate_inverse, mel_scale, mel_to_hz};
use super::PowerSpectrumSequence;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    MelTriangular,
    GammatoneMagnitude,
    /// Critical-band masking curves on the Bark scale.
    BarkTrapezoid,
}

/// Frequency-domain weights, one row per channel over the one-sided FFT bins.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    weights: Matrix,
    center_freqs: Vec<f64>,
    kind: FilterKind,
}

impl FilterBank {
    /// Checks non-negative weights, a positive entry per row and strictly
    /// increasing centres.
    pub fn new(weights: Matrix, center_freqs: Vec<f64>, kind: FilterKind) -> Result<Self> {
        if weights.rows() != center_freqs.len() || weights.rows() == 0 {
            return Err(Error::DimensionMismatch { expected: weights.rows(), actual: center_freqs.len() });
        }
        if center_freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("filterbank centre frequencies must be strictly increasing".into()));
        }
        for (i, row) in weights.iter_rows().enumerate() {
            if row.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                return Err(Error::InvalidArgument(alloc::format!("filter {i} has a negative or non-finite weight")));
            }
            if !row.iter().any(|&w| w > 0.0) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "filter {i} (centre {:.1} Hz) covers no FFT bin; use fewer channels or a larger FFT",
                    center_freqs[i]
                )));
            }
        }
        Ok(Self { weights, center_freqs, kind })
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn center_freqs(&self) -> &[f64] {
        &self.center_freqs
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn n_channels(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.cols()
    }
}

fn check_band(fft_size: usize, sample_rate: u32, f_min: f64, f_max: f64) -> Result<()> {
    if !fft_size.is_power_of_two() || fft_size < 2 {
        return Err(Error::InvalidArgument(alloc::format!("FFT size {fft_size} is not a power of two")));
    }
    let nyquist = sample_rate as f64 / 2.0;
    if !(f_min >= 0.0 && f_min < f_max && f_max <= nyquist) {
        return Err(Error::InvalidArgument(alloc::format!(
            "band {f_min}..{f_max} Hz invalid for Nyquist {nyquist} Hz"
        )));
    }
    Ok(())
}

fn bin_freqs(fft_size: usize, sample_rate: u32) -> impl Iterator<Item = f64> {
    let hz = sample_rate as f64 / fft_size as f64;
    (0..=fft_size / 2).map(move |k| k as f64 * hz)
}

/// Triangular filters with apexes equally spaced in mel between
/// `mel(f_min)` and `mel(f_max)`; each triangle reaches the neighbouring
/// apexes, so the outermost ones end at the band edges.
pub fn mel_filterbank(
    n_filters: usize,
    fft_size: usize,
    sample_rate: u32,
    f_min: f64,
    f_max: f64,
) -> Result<FilterBank> {
    if n_filters == 0 {
        return Err(Error::InvalidArgument("need at least one mel filter".into()));
    }
    check_band(fft_size, sample_rate, f_min, f_max)?;
    let lo = mel_scale(f_min)?;
    let hi = mel_scale(f_max)?;
    let step = (hi - lo) / (n_filters + 1) as f64;
    let edges: Vec<f64> = (0..n_filters + 2).map(|i| mel_to_hz(lo + step * i as f64)).collect();
    let freqs: Vec<f64> = bin_freqs(fft_size, sample_rate).collect();
    let mut weights = Matrix::zeros(n_filters, freqs.len());
    for m in 0..n_filters {
        let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for (k, &f) in freqs.iter().enumerate() {
            let w = if f > left && f <= centre {
                (f - left) / (centre - left)
            } else if f > centre && f < right {
                (right - f) / (right - centre)
            } else {
                0.0
            };
            weights.set(m, k, w);
        }
    }
    FilterBank::new(weights, edges[1..=n_filters].to_vec(), FilterKind::MelTriangular)
}

/// Relative magnitude response of an order-`order` gammatone filter centred
/// at `fc` with decay `1.019 ERB(fc)`, zero carrier phase. Includes the
/// negative-frequency image; not normalized.
pub fn gammatone_magnitude(f: f64, fc: f64, order: u32) -> f64 {
    // erb() only rejects negative input and fc >= 0 by construction.
    let b = 1.019 * erb(fc.max(0.0)).unwrap_or(24.7);
    let n = order as f64;
    let term = |d: f64| {
        let r = (b * b + d * d).sqrt();
        let theta = d.atan2(b);
        let mag = r.powf(-n);
        (mag * (n * theta).cos(), -mag * (n * theta).sin())
    };
    let (ar, ai) = term(f - fc);
    let (br, bi) = term(f + fc);
    ((ar + br).powi(2) + (ai + bi).powi(2)).sqrt()
}

/// Gammatone magnitude responses sampled on the FFT bin grid, each row
/// peak-normalized to 1. Centres are equally spaced on the ERB-rate scale
/// from `f_min` to `f_max`; a single channel sits at the ERB-rate midpoint.
pub fn gammatone_filterbank(
    n_channels: usize,
    fft_size: usize,
    sample_rate: u32,
    f_min: f64,
    f_max: f64,
    order: u32,
) -> Result<FilterBank> {
    if n_channels == 0 {
        return Err(Error::InvalidArgument("need at least one gammatone channel".into()));
    }
    if order == 0 {
        return Err(Error::InvalidArgument("gammatone order must be at least 1".into()));
    }
    check_band(fft_size, sample_rate, f_min, f_max)?;
    let (lo, hi) = (erb_rate(f_min), erb_rate(f_max));
    let centres: Vec<f64> = if n_channels == 1 {
        alloc::vec![erb_rate_inverse(0.5 * (lo + hi))]
    } else {
        let step = (hi - lo) / (n_channels - 1) as f64;
        (0..n_channels).map(|i| erb_rate_inverse(lo + step * i as f64)).collect()
    };
    let freqs: Vec<f64> = bin_freqs(fft_size, sample_rate).collect();
    let mut weights = Matrix::zeros(n_channels, freqs.len());
    for (c, &fc) in centres.iter().enumerate() {
        let row = weights.row_mut(c);
        for (w, &f) in row.iter_mut().zip(&freqs) {
            *w = gammatone_magnitude(f, fc, order);
        }
        let peak = row.iter().fold(0.0f64, |m, &v| m.max(v));
        if peak > 0.0 {
            row.iter_mut().for_each(|w| *w /= peak);
        }
    }
    FilterBank::new(weights, centres, FilterKind::GammatoneMagnitude)
}

/// Critical-band masking curve: flat over ±0.5 Bark, rising 25 dB/Bark
/// below and falling 10 dB/Bark above.
fn bark_mask(z: f64) -> f64 {
    if !(-1.3..=2.5).contains(&z) {
        0.0
    } else if z < -0.5 {
        10.0.powf(2.5 * (z + 0.5))
    } else if z <= 0.5 {
        1.0
    } else {
        10.0.powf(-(z - 0.5))
    }
}

/// Critical-band integration curves with centres spaced one Bark or less
/// apart from 0 Hz to Nyquist.
pub fn bark_filterbank(n_bands: usize, fft_size: usize, sample_rate: u32) -> Result<FilterBank> {
    if n_bands < 2 {
        return Err(Error::InvalidArgument("need at least two Bark bands".into()));
    }
    let nyquist = sample_rate as f64 / 2.0;
    check_band(fft_size, sample_rate, 0.0, nyquist)?;
    let top = bark_scale(nyquist);
    let step = top / (n_bands - 1) as f64;
    let centres_bark: Vec<f64> = (0..n_bands).map(|i| step * i as f64).collect();
    let freqs: Vec<f64> = bin_freqs(fft_size, sample_rate).collect();
    let mut weights = Matrix::zeros(n_bands, freqs.len());
    for (b, &zc) in centres_bark.iter().enumerate() {
        for (k, &f) in freqs.iter().enumerate() {
            weights.set(b, k, bark_mask(bark_scale(f) - zc));
        }
    }
    let centres = centres_bark.iter().map(|z| 600.0 * (z / 6.0).sinh()).collect();
    FilterBank::new(weights, centres, FilterKind::BarkTrapezoid)
}

/// Channel energies: the spectrum matrix times the transposed weights.
pub fn apply_filterbank(spec: &PowerSpectrumSequence, bank: &FilterBank) -> Result<Matrix> {
    if spec.n_bins() != bank.n_bins() {
        return Err(Error::DimensionMismatch { expected: bank.n_bins(), actual: spec.n_bins() });
    }
    let mut out = Matrix::zeros(spec.values.rows(), bank.n_channels());
    for (i, frame) in spec.values.iter_rows().enumerate() {
        for (o, w) in out.row_mut(i).iter_mut().zip(bank.weights.iter_rows()) {
            *o = w.iter().zip(frame).map(|(a, b)| a * b).sum();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_apexes_equally_spaced() {
        let bank = mel_filterbank(26, 512, 16000, 0.0, 8000.0).unwrap();
        let mels: Vec<f64> = bank.center_freqs().iter().map(|&f| mel_scale(f).unwrap()).collect();
        let d0 = mels[1] - mels[0];
        for w in mels.windows(2) {
            assert!((w[1] - w[0] - d0).abs() < 1e-9);
        }
        assert_eq!(bank.n_bins(), 257);
        assert_eq!(bank.kind(), FilterKind::MelTriangular);
    }

    #[test]
    fn mel_bank_has_no_holes() {
        let bank = mel_filterbank(26, 512, 16000, 0.0, 8000.0).unwrap();
        let first = bank.center_freqs()[0];
        let last = bank.center_freqs()[25];
        for (k, f) in bin_freqs(512, 16000).enumerate() {
            if f >= first && f <= last {
                let covered = bank.weights().iter_rows().any(|r| r[k] > 0.0);
                assert!(covered, "bin {k} ({f} Hz) uncovered");
            }
        }
    }

    #[test]
    fn single_mel_filter_spans_band() {
        let bank = mel_filterbank(1, 512, 16000, 300.0, 3000.0).unwrap();
        let row = bank.weights().row(0);
        for (k, f) in bin_freqs(512, 16000).enumerate() {
            if f <= 300.0 || f >= 3000.0 {
                assert_eq!(row[k], 0.0);
            } else {
                assert!(row[k] > 0.0);
            }
        }
        let apex = mel_to_hz(0.5 * (mel_scale(300.0).unwrap() + mel_scale(3000.0).unwrap()));
        assert!((bank.center_freqs()[0] - apex).abs() < 1e-9);
    }

    #[test]
    fn bad_band_rejected() {
        assert!(mel_filterbank(26, 512, 16000, 100.0, 9000.0).is_err());
        assert!(mel_filterbank(26, 512, 16000, 500.0, 500.0).is_err());
        assert!(mel_filterbank(0, 512, 16000, 0.0, 8000.0).is_err());
        assert!(gammatone_filterbank(64, 512, 16000, 50.0, 8000.0, 0).is_err());
        // Filters narrower than a bin leave empty rows.
        assert!(mel_filterbank(200, 64, 16000, 0.0, 8000.0).is_err());
    }

    #[test]
    fn gammatone_peaks_at_centre() {
        let bank = gammatone_filterbank(64, 512, 16000, 50.0, 8000.0, 4).unwrap();
        let hz = 16000.0 / 512.0;
        for (row, &fc) in bank.weights().iter_rows().zip(bank.center_freqs()) {
            let (arg, peak) =
                row.iter().enumerate().fold((0, 0.0), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
            assert!((peak - 1.0).abs() < 1e-12);
            assert!((arg as f64 * hz - fc).abs() <= hz, "fc {fc}: peak bin {arg}");
        }
    }

    #[test]
    fn gammatone_bandwidth_tracks_erb() {
        // Measure the -3 dB width from the sampled rows with linear
        // interpolation between bins.
        let bank = gammatone_filterbank(64, 512, 16000, 50.0, 8000.0, 4).unwrap();
        let hz = 16000.0 / 512.0;
        let cut = 10.0f64.powf(-3.0 / 20.0);
        for c in 16..48 {
            let row = bank.weights().row(c);
            let fc = bank.center_freqs()[c];
            let peak = (0..row.len()).max_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap()).unwrap();
            let mut lo = peak;
            while row[lo - 1] >= cut {
                lo -= 1;
            }
            let mut hi = peak;
            while row[hi + 1] >= cut {
                hi += 1;
            }
            let f_lo = (lo as f64 - (row[lo] - cut) / (row[lo] - row[lo - 1])) * hz;
            let f_hi = (hi as f64 + (row[hi] - cut) / (row[hi] - row[hi + 1])) * hz;
            let target = 1.019 * erb(fc).unwrap();
            let rel = ((f_hi - f_lo) - target).abs() / target;
            assert!(rel < 0.15, "channel {c} ({fc:.0} Hz): width {} vs {target}", f_hi - f_lo);
        }
    }

    #[test]
    fn single_gammatone_channel_sits_mid_band() {
        let bank = gammatone_filterbank(1, 512, 16000, 100.0, 4000.0, 4).unwrap();
        let mid = erb_rate_inverse(0.5 * (erb_rate(100.0) + erb_rate(4000.0)));
        assert_eq!(bank.n_channels(), 1);
        assert!((bank.center_freqs()[0] - mid).abs() < 1e-9);
    }

    #[test]
    fn bark_bank_shape() {
        let bank = bark_filterbank(21, 512, 16000).unwrap();
        assert_eq!(bank.n_channels(), 21);
        assert_eq!(bank.center_freqs()[0], 0.0);
        assert!((bank.center_freqs()[20] - 8000.0).abs() < 1e-6);
        assert_eq!(bark_mask(0.0), 1.0);
        assert!((bark_mask(1.5) - 0.1).abs() < 1e-12);
        assert!((bark_mask(-1.0) - 10.0f64.powf(-1.25)).abs() < 1e-12);
    }

    #[test]
    fn apply_simple_cases() {
        let bank = mel_filterbank(10, 64, 8000, 0.0, 4000.0).unwrap();
        let zero = PowerSpectrumSequence { values: Matrix::zeros(3, 33), bin_hz: 125.0 };
        assert!(apply_filterbank(&zero, &bank).unwrap().as_slice().iter().all(|&v| v == 0.0));
        let ones =
            PowerSpectrumSequence { values: Matrix::from_vec(1, 33, alloc::vec![1.0; 33]).unwrap(), bin_hz: 125.0 };
        let e = apply_filterbank(&ones, &bank).unwrap();
        for (c, row) in bank.weights().iter_rows().enumerate() {
            let s: f64 = row.iter().sum();
            assert!((e.get(0, c) - s).abs() < 1e-12);
        }
        let wrong = PowerSpectrumSequence { values: Matrix::zeros(1, 32), bin_hz: 125.0 };
        assert!(apply_filterbank(&wrong, &bank).is_err());
    }
}
