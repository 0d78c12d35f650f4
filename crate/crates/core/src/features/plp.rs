use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use super::{analyze, Extractor, FeatureConfig, FeatureKind, FeatureMatrix, LpcStats, STATIC_DIM};
use crate::audio::AudioBuffer;
use crate::dsp::{apply_filterbank, levinson_durbin, lpc_to_cepstrum};
use crate::error::Result;
use crate::matrix::Matrix;

/// Equal-loudness weight at `f` Hz (rational approximation of the
/// 40 dB equal-loudness contour, valid up to about 5 kHz).
pub fn equal_loudness(f: f64) -> f64 {
    let w2 = (2.0 * PI * f).powi(2);
    (w2 + 56.8e6) * w2 * w2 / ((w2 + 6.3e6).powi(2) * (w2 + 0.38e9))
}

/// Intensity-to-loudness compression.
pub fn intensity_to_loudness(x: f64, exponent: f64) -> f64 {
    x.max(0.0).powf(exponent)
}

/// Autocorrelation lags `0..=order` of the auditory spectrum of each frame,
/// obtained by an inverse DFT of the even extension of the band values.
pub fn plp_autocorrelation(audio: &AudioBuffer, cfg: &FeatureConfig) -> Result<Matrix> {
    autocorrelation(&Extractor::new(cfg.clone())?, audio)
}

fn autocorrelation(ex: &Extractor, audio: &AudioBuffer) -> Result<Matrix> {
    let cfg = &ex.cfg;
    let a = analyze(audio, cfg)?;
    let bands = apply_filterbank(&a.spectrum, &ex.bark)?;
    let nb = bands.cols();
    let weights: Vec<f64> = ex.bark.center_freqs().iter().map(|&f| equal_loudness(f)).collect();
    let lags = cfg.plp_order + 1;
    let span = (nb - 1) as f64;
    let cosines: Vec<f64> =
        (0..lags).flat_map(|k| (0..nb).map(move |j| (PI * j as f64 * k as f64 / span).cos())).collect();

    let mut out = Matrix::zeros(bands.rows(), lags);
    let mut loud = alloc::vec![0.0; nb];
    for (i, row) in bands.iter_rows().enumerate() {
        for ((l, b), w) in loud.iter_mut().zip(row).zip(&weights) {
            *l = intensity_to_loudness(b * w, cfg.plp_loudness_exponent);
        }
        // Edge bands are poorly defined; copy their neighbours.
        loud[0] = loud[1];
        loud[nb - 1] = loud[nb - 2];
        for (k, r) in out.row_mut(i).iter_mut().enumerate() {
            let cos = &cosines[k * nb..(k + 1) * nb];
            let inner: f64 = (1..nb - 1).map(|j| loud[j] * cos[j]).sum();
            *r = (loud[0] + loud[nb - 1] * cos[nb - 1] + 2.0 * inner) / (2.0 * span);
        }
    }
    Ok(out)
}

/// 13 PLP cepstra (c0..c12) from an order-12 all-pole model.
pub fn extract_plp(audio: &AudioBuffer, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    extract_plp_with_stats(audio, cfg).map(|(m, _)| m)
}

/// Like [`extract_plp`], also reporting frames whose recursion failed. Such
/// frames repeat the previous frame's cepstra (zeros for the first frame).
pub fn extract_plp_with_stats(audio: &AudioBuffer, cfg: &FeatureConfig) -> Result<(FeatureMatrix, LpcStats)> {
    run(&Extractor::new(cfg.clone())?, audio)
}

pub(super) fn run(ex: &Extractor, audio: &AudioBuffer) -> Result<(FeatureMatrix, LpcStats)> {
    let r = autocorrelation(ex, audio)?;
    let mut out = Matrix::zeros(r.rows(), STATIC_DIM);
    let mut stats = LpcStats { frames: r.rows(), substituted: 0 };
    let mut prev = [0.0; STATIC_DIM];
    for (i, lags) in r.iter_rows().enumerate() {
        match levinson_durbin(lags, ex.cfg.plp_order) {
            Ok(lpc) => {
                let c = lpc_to_cepstrum(&lpc, STATIC_DIM);
                prev.copy_from_slice(&c);
            }
            Err(_) => stats.substituted += 1,
        }
        out.row_mut(i).copy_from_slice(&prev);
    }
    Ok((FeatureMatrix::new(out, FeatureKind::Plp, false, ex.cfg.frame_rate())?, stats))
}
