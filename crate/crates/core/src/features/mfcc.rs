use num_traits::Float;

use super::{analyze, Extractor, FeatureConfig, FeatureKind, FeatureMatrix, STATIC_DIM};
use crate::audio::AudioBuffer;
use crate::dsp::apply_filterbank;
use crate::error::Result;
use crate::matrix::Matrix;

/// 13-dim MFCC: log frame energy followed by cepstra c1..c12 of the
/// floored natural-log mel energies.
pub fn extract_mfcc(audio: &AudioBuffer, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    run(&Extractor::new(cfg.clone())?, audio)
}

pub(super) fn run(ex: &Extractor, audio: &AudioBuffer) -> Result<FeatureMatrix> {
    let cfg = &ex.cfg;
    let a = analyze(audio, cfg)?;
    let mut energies = apply_filterbank(&a.spectrum, &ex.mel)?;
    energies.map_inplace(|e| e.max(cfg.log_floor).ln());

    let mut out = Matrix::zeros(energies.rows(), STATIC_DIM);
    let mut ceps = [0.0; STATIC_DIM];
    for (i, (log_mel, frame)) in energies.iter_rows().zip(a.frames.frames.iter_rows()).enumerate() {
        ex.mel_dct.apply(log_mel, &mut ceps);
        let energy: f64 = frame.iter().map(|s| s * s).sum();
        let row = out.row_mut(i);
        row[0] = energy.max(cfg.log_floor).ln();
        row[1..].copy_from_slice(&ceps[1..]);
    }
    FeatureMatrix::new(out, FeatureKind::Mfcc, false, cfg.frame_rate())
}
