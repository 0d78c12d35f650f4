//! Power-normalized cepstral coefficients.
//!
//! Initial stage: gammatone-weighted short-time power. Environmental stage:
//! medium-time averaging, asymmetric noise-floor tracking and subtraction,
//! temporal masking, channel-smoothed transfer ratios and running
//! mean-power normalization. Final stage: power-law compression and DCT.

use alloc::vec::Vec;

use num_traits::Float;

use super::{analyze, Extractor, FeatureConfig, FeatureKind, FeatureMatrix, STATIC_DIM};
use crate::audio::AudioBuffer;
use crate::dsp::apply_filterbank;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PnccParams {
    /// Half-width M of the medium-time window (2M + 1 frames).
    pub medium_window: usize,
    /// Floor tracker coefficient while the input rises above the floor.
    pub lambda_a: f64,
    /// Floor tracker coefficient while the input falls below the floor.
    pub lambda_b: f64,
    /// Medium-time power above this multiple of the floor counts as excitation.
    pub excitation_threshold: f64,
    /// Per-frame decay of the temporal-masking peak tracker.
    pub peak_decay: f64,
    /// Level of masked frames relative to the decayed peak.
    pub masking_scale: f64,
    /// Half-width S of the channel smoothing window.
    pub smoothing_channels: usize,
    /// Forgetting factor of the running mean power.
    pub mean_forgetting: f64,
    pub power_exponent: f64,
}

impl Default for PnccParams {
    fn default() -> Self {
        Self {
            medium_window: 2,
            lambda_a: 0.999,
            lambda_b: 0.5,
            excitation_threshold: 2.0,
            peak_decay: 0.85,
            masking_scale: 0.2,
            smoothing_channels: 4,
            mean_forgetting: 0.999,
            power_exponent: 1.0 / 15.0,
        }
    }
}

impl PnccParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..1.0).contains(&v);
        if !(unit(self.lambda_a) && unit(self.lambda_b) && unit(self.peak_decay) && unit(self.mean_forgetting)) {
            return Err(Error::InvalidArgument("PNCC forgetting factors must lie in [0, 1)".into()));
        }
        if !(self.power_exponent > 0.0 && self.masking_scale >= 0.0 && self.excitation_threshold > 0.0) {
            return Err(Error::InvalidArgument("PNCC exponent/threshold must be positive".into()));
        }
        Ok(())
    }
}

/// Every intermediate of the environmental stage, `n_frames × n_channels`.
#[derive(Debug, Clone, PartialEq)]
pub struct PnccStages {
    /// Short-time gammatone channel power.
    pub power: Matrix,
    /// Medium-time average power.
    pub medium: Matrix,
    /// Lower-envelope noise floor of `medium`.
    pub noise_floor: Matrix,
    /// `medium` minus the floor, half-wave rectified.
    pub rectified: Matrix,
    /// Short-time power weighted by the smoothed transfer ratio.
    pub enhanced: Matrix,
    /// `enhanced` divided by the running mean power.
    pub normalized: Matrix,
}

impl PnccStages {
    /// Fraction of short-time power left after noise suppression.
    pub fn retained_power_ratio(&self) -> f64 {
        let p: f64 = self.power.as_slice().iter().sum();
        let t: f64 = self.enhanced.as_slice().iter().sum();
        if p > 0.0 {
            t / p
        } else {
            0.0
        }
    }
}

/// `x^exponent` for non-negative `x`.
pub fn power_law(x: f64, exponent: f64) -> f64 {
    x.max(0.0).powf(exponent)
}

fn asymmetric_lowpass(input: &[f64], lambda_a: f64, lambda_b: f64, out: &mut [f64]) {
    let mut prev = 0.9 * input.first().copied().unwrap_or(0.0);
    for (o, &x) in out.iter_mut().zip(input) {
        prev = if x >= prev { lambda_a * prev + (1.0 - lambda_a) * x } else { lambda_b * prev + (1.0 - lambda_b) * x };
        *o = prev;
    }
}

fn column(m: &Matrix, c: usize) -> Vec<f64> {
    (0..m.rows()).map(|i| m.get(i, c)).collect()
}

fn set_column(m: &mut Matrix, c: usize, v: &[f64]) {
    for (i, x) in v.iter().enumerate() {
        m.set(i, c, *x);
    }
}

fn check_finite(m: &Matrix, stage: &'static str) -> Result<()> {
    match m.as_slice().iter().position(|v| !v.is_finite()) {
        Some(pos) => Err(Error::NonFinite { stage, frame: pos / m.cols().max(1) }),
        None => Ok(()),
    }
}

pub fn pncc_stages(audio: &AudioBuffer, cfg: &FeatureConfig) -> Result<PnccStages> {
    stages(&Extractor::new(cfg.clone())?, audio)
}

fn stages(ex: &Extractor, audio: &AudioBuffer) -> Result<PnccStages> {
    let prm = &ex.cfg.pncc;
    let a = analyze(audio, &ex.cfg)?;
    let power = apply_filterbank(&a.spectrum, &ex.pncc)?;
    check_finite(&power, "pncc short-time power")?;
    let (n, ch) = (power.rows(), power.cols());

    let mut medium = Matrix::zeros(n, ch);
    for m in 0..n {
        let lo = m.saturating_sub(prm.medium_window);
        let hi = (m + prm.medium_window).min(n.saturating_sub(1));
        let count = (hi - lo + 1) as f64;
        for c in 0..ch {
            let s: f64 = (lo..=hi).map(|k| power.get(k, c)).sum();
            medium.set(m, c, s / count);
        }
    }

    let mut noise_floor = Matrix::zeros(n, ch);
    let mut rectified = Matrix::zeros(n, ch);
    let mut suppressed = Matrix::zeros(n, ch);
    let mut buf = alloc::vec![0.0; n];
    for c in 0..ch {
        let q = column(&medium, c);
        asymmetric_lowpass(&q, prm.lambda_a, prm.lambda_b, &mut buf);
        set_column(&mut noise_floor, c, &buf);
        let floor = buf.clone();
        let q0: Vec<f64> = q.iter().zip(&floor).map(|(x, f)| (x - f).max(0.0)).collect();
        set_column(&mut rectified, c, &q0);

        // Floor level of the rectified signal, used outside excitation.
        let mut q_floor = alloc::vec![0.0; n];
        asymmetric_lowpass(&q0, prm.lambda_a, prm.lambda_b, &mut q_floor);

        let mut peak = 0.0f64;
        for m in 0..n {
            let decayed = prm.peak_decay * peak;
            let masked = if q0[m] >= decayed { q0[m] } else { prm.masking_scale * peak };
            peak = decayed.max(q0[m]);
            let r = if q[m] >= prm.excitation_threshold * floor[m] { masked.max(q_floor[m]) } else { q_floor[m] };
            buf[m] = r;
        }
        set_column(&mut suppressed, c, &buf);
    }

    let mut enhanced = Matrix::zeros(n, ch);
    let mut ratio = alloc::vec![0.0; ch];
    for m in 0..n {
        for (c, r) in ratio.iter_mut().enumerate() {
            let q = medium.get(m, c);
            *r = if q > 0.0 { suppressed.get(m, c) / q } else { 0.0 };
        }
        for c in 0..ch {
            let lo = c.saturating_sub(prm.smoothing_channels);
            let hi = (c + prm.smoothing_channels).min(ch - 1);
            let smooth = ratio[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
            enhanced.set(m, c, power.get(m, c) * smooth);
        }
    }
    check_finite(&enhanced, "pncc noise suppression")?;

    // Running mean starts from the utterance average so the first frames are
    // normalized on the same scale as the rest.
    let frame_means: Vec<f64> = enhanced.iter_rows().map(|r| r.iter().sum::<f64>() / ch as f64).collect();
    let mut mean = if n > 0 { frame_means.iter().sum::<f64>() / n as f64 } else { 0.0 };
    let mut normalized = Matrix::zeros(n, ch);
    for m in 0..n {
        mean = prm.mean_forgetting * mean + (1.0 - prm.mean_forgetting) * frame_means[m];
        if mean > 0.0 {
            for c in 0..ch {
                normalized.set(m, c, enhanced.get(m, c) / mean);
            }
        }
    }
    check_finite(&normalized, "pncc mean normalization")?;

    Ok(PnccStages { power, medium, noise_floor, rectified, enhanced, normalized })
}

/// 13-dim PNCC, c0..c12.
pub fn extract_pncc(audio: &AudioBuffer, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    run(&Extractor::new(cfg.clone())?, audio)
}

pub(super) fn run(ex: &Extractor, audio: &AudioBuffer) -> Result<FeatureMatrix> {
    let st = stages(ex, audio)?;
    let exponent = ex.cfg.pncc.power_exponent;
    let mut out = Matrix::zeros(st.normalized.rows(), STATIC_DIM);
    let mut compressed = alloc::vec![0.0; st.normalized.cols()];
    for (i, row) in st.normalized.iter_rows().enumerate() {
        for (v, x) in compressed.iter_mut().zip(row) {
            *v = power_law(*x, exponent);
        }
        ex.pncc_dct.apply(&compressed, out.row_mut(i));
    }
    FeatureMatrix::new(out, FeatureKind::Pncc, false, ex.cfg.frame_rate())
}
