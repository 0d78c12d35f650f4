use num_traits::Float;

use super::{analyze, Extractor, FeatureConfig, FeatureKind, FeatureMatrix, STATIC_DIM};
use crate::audio::AudioBuffer;
use crate::dsp::apply_filterbank;
use crate::error::Result;
use crate::matrix::Matrix;

/// Cube-root compressed gammatone channel energies at the frame rate.
pub fn gfcc_cochleagram(audio: &AudioBuffer, cfg: &FeatureConfig) -> Result<Matrix> {
    cochleagram(&Extractor::new(cfg.clone())?, audio)
}

fn cochleagram(ex: &Extractor, audio: &AudioBuffer) -> Result<Matrix> {
    let a = analyze(audio, &ex.cfg)?;
    let mut energies = apply_filterbank(&a.spectrum, &ex.gfcc)?;
    energies.map_inplace(f64::cbrt);
    Ok(energies)
}

/// 13-dim GFCC, c0..c12 of the DCT of the cochleagram.
pub fn extract_gfcc(audio: &AudioBuffer, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    run(&Extractor::new(cfg.clone())?, audio)
}

pub(super) fn run(ex: &Extractor, audio: &AudioBuffer) -> Result<FeatureMatrix> {
    let cg = cochleagram(ex, audio)?;
    let mut out = Matrix::zeros(cg.rows(), STATIC_DIM);
    for (i, row) in cg.iter_rows().enumerate() {
        ex.gfcc_dct.apply(row, out.row_mut(i));
    }
    FeatureMatrix::new(out, FeatureKind::Gfcc, false, ex.cfg.frame_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SpeakerVoice;

    #[test]
    fn frame_rate_is_100_hz() {
        let cfg = FeatureConfig::default();
        let audio = SpeakerVoice::random(1, 16000).utterance(0.5, 2).unwrap();
        let g = extract_gfcc(&audio, &cfg).unwrap();
        assert_eq!(g.frame_rate(), 100.0);
        assert_eq!(g.dim(), 13);
        assert_eq!(g.n_frames(), (8000 - 400) / 160 + 1);
    }

    #[test]
    fn amplitude_scaling_law() {
        let cfg = FeatureConfig::default();
        let audio = SpeakerVoice::random(4, 16000).utterance(0.4, 5).unwrap();
        let base = gfcc_cochleagram(&audio, &cfg).unwrap();
        for g in [0.25, 3.0] {
            let scaled = gfcc_cochleagram(&audio.scaled(g).unwrap(), &cfg).unwrap();
            let factor = g.powf(2.0 / 3.0);
            for (a, b) in base.as_slice().iter().zip(scaled.as_slice()) {
                assert!((a * factor - b).abs() <= 1e-9 * b.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn silence_gives_constant_rows() {
        let g = extract_gfcc(&AudioBuffer::silence(4000, 16000).unwrap(), &FeatureConfig::default()).unwrap();
        for i in 0..g.n_frames() {
            assert_eq!(g.row(i), g.row(0));
        }
    }
}
