//! The five front-ends (MFCC, GFCC, PNCC, PLP, LSF), dynamic features and
//! static-feature fusion. Every extractor shares one framing, so all of them
//! return the same number of frames for the same audio.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::audio::{frame_signal, pre_emphasize, AudioBuffer, FrameSequence, Window};
use crate::dsp::{self, FilterBank, PowerSpectrumSequence, SpectrumMode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

mod deltas;
mod gfcc;
mod lsf;
mod mfcc;
mod plp;
mod pncc;

pub use deltas::{add_deltas, concat_static};
pub use gfcc::{extract_gfcc, gfcc_cochleagram};
pub use lsf::{extract_lsf, extract_lsf_with_stats, lpc_to_lsf, lsf_to_lpc};
pub use mfcc::extract_mfcc;
pub use plp::{equal_loudness, extract_plp, extract_plp_with_stats, intensity_to_loudness, plp_autocorrelation};
pub use pncc::{extract_pncc, pncc_stages, power_law, PnccParams, PnccStages};

/// Static coefficient count of MFCC, GFCC, PNCC and PLP.
pub const STATIC_DIM: usize = 13;

/// Feature family tag carried by a [`FeatureMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKind {
    Mfcc,
    Gfcc,
    Pncc,
    Plp,
    Lsf,
    Combo,
}

impl FeatureKind {
    pub const BASE: [FeatureKind; 5] =
        [FeatureKind::Mfcc, FeatureKind::Gfcc, FeatureKind::Pncc, FeatureKind::Plp, FeatureKind::Lsf];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Mfcc => "mfcc",
            FeatureKind::Gfcc => "gfcc",
            FeatureKind::Pncc => "pncc",
            FeatureKind::Plp => "plp",
            FeatureKind::Lsf => "lsf",
            FeatureKind::Combo => "combo",
        }
    }

    /// Wire tag used by the feature file format.
    pub fn tag(self) -> u8 {
        match self {
            FeatureKind::Mfcc => 1,
            FeatureKind::Gfcc => 2,
            FeatureKind::Pncc => 3,
            FeatureKind::Plp => 4,
            FeatureKind::Lsf => 5,
            FeatureKind::Combo => 6,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            1 => FeatureKind::Mfcc,
            2 => FeatureKind::Gfcc,
            3 => FeatureKind::Pncc,
            4 => FeatureKind::Plp,
            5 => FeatureKind::Lsf,
            6 => FeatureKind::Combo,
            _ => return None,
        })
    }

    /// Expected width of a matrix with this label.
    pub fn dim(self, dynamic: bool, cfg: &FeatureConfig) -> usize {
        let base = match self {
            FeatureKind::Lsf => cfg.lsf_order,
            FeatureKind::Combo => 2 * STATIC_DIM,
            _ => STATIC_DIM,
        };
        if dynamic {
            3 * base
        } else {
            base
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-frame feature vectors, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Matrix,
    kind: FeatureKind,
    dynamic: bool,
    frame_rate: f64,
}

impl FeatureMatrix {
    /// Rejects non-finite values.
    pub fn new(values: Matrix, kind: FeatureKind, dynamic: bool, frame_rate: f64) -> Result<Self> {
        if let Some(pos) = values.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { stage: "feature matrix", frame: pos / values.cols().max(1) });
        }
        Ok(Self { values, kind, dynamic, frame_rate })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    /// Whether Δ and ΔΔ columns are appended.
    pub fn is_dynamic(&self) -> bool {
        self.dynamic
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn n_frames(&self) -> usize {
        self.values.rows()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// Stacks matrices of the same label and width in time order.
    pub fn concat_frames<'a, I>(parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a FeatureMatrix>,
    {
        let mut iter = parts.into_iter();
        let first = iter.next().ok_or(Error::Empty)?;
        let mut values = first.values.clone();
        for p in iter {
            values.append_rows(&p.values)?;
        }
        Ok(Self { values, kind: first.kind, dynamic: first.dynamic, frame_rate: first.frame_rate })
    }
}

/// What to compute for one column of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureSpec {
    /// A base front-end; 13-dim statics get Δ and ΔΔ, LSF stays static.
    Single(FeatureKind),
    /// Frame-wise concatenation of two 13-dim static front-ends.
    Pair(FeatureKind, FeatureKind),
}

impl FeatureSpec {
    pub const NAMES: [&'static str; 8] = ["mfcc", "gfcc", "pncc", "plp", "lsf", "gfcc+pncc", "plp+gfcc", "plp+pncc"];

    /// Base front-ends this spec needs.
    pub fn components(self) -> Vec<FeatureKind> {
        match self {
            FeatureSpec::Single(k) => alloc::vec![k],
            FeatureSpec::Pair(a, b) => alloc::vec![a, b],
        }
    }

    /// Builds the final matrix from already extracted static matrices.
    pub fn assemble(
        self,
        statics: impl Fn(FeatureKind) -> Option<FeatureMatrix>,
        cfg: &FeatureConfig,
    ) -> Result<FeatureMatrix> {
        let get =
            |k: FeatureKind| statics(k).ok_or_else(|| Error::InvalidArgument(alloc::format!("missing {k} statics")));
        match self {
            FeatureSpec::Single(FeatureKind::Lsf) => get(FeatureKind::Lsf),
            FeatureSpec::Single(k) => add_deltas(&get(k)?, cfg.delta_window),
            FeatureSpec::Pair(a, b) => concat_static(&get(a)?, &get(b)?),
        }
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSpec::Single(k) => write!(f, "{k}"),
            FeatureSpec::Pair(a, b) => write!(f, "{a}+{b}"),
        }
    }
}

impl FromStr for FeatureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let base = |name: &str| -> Result<FeatureKind> {
            FeatureKind::BASE.iter().copied().find(|k| k.name() == name.trim()).ok_or_else(|| {
                Error::InvalidArgument(alloc::format!(
                    "unknown feature `{s}`; valid: {}",
                    FeatureSpec::NAMES.join(", ")
                ))
            })
        };
        match s.split_once('+') {
            None => Ok(FeatureSpec::Single(base(s)?)),
            Some((a, b)) => {
                let (a, b) = (base(a)?, base(b)?);
                if a == FeatureKind::Lsf || b == FeatureKind::Lsf || a == b {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "`{s}`: combinations pair two different 13-dim front-ends"
                    )));
                }
                Ok(FeatureSpec::Pair(a, b))
            }
        }
    }
}

/// Front-end parameters shared by every extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub sample_rate: u32,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub window: Window,
    pub pre_emphasis: f64,
    pub fft_size: usize,
    pub spectrum_mode: SpectrumMode,
    pub mel_channels: usize,
    pub mel_f_min: f64,
    pub mel_f_max: f64,
    /// Floor applied before the MFCC logarithm.
    pub log_floor: f64,
    pub gfcc_channels: usize,
    pub gfcc_f_min: f64,
    pub gfcc_f_max: f64,
    pub gammatone_order: u32,
    pub pncc_channels: usize,
    pub pncc_f_min: f64,
    pub pncc_f_max: f64,
    pub pncc: PnccParams,
    pub plp_order: usize,
    pub plp_loudness_exponent: f64,
    pub lsf_order: usize,
    pub delta_window: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16000,
            frame_ms: 25.0,
            hop_ms: 10.0,
            window: Window::Hamming,
            pre_emphasis: crate::audio::DEFAULT_PRE_EMPHASIS,
            fft_size: 512,
            spectrum_mode: SpectrumMode::Power,
            mel_channels: 26,
            mel_f_min: 0.0,
            mel_f_max: 8000.0,
            log_floor: 1e-10,
            gfcc_channels: 64,
            gfcc_f_min: 50.0,
            gfcc_f_max: 8000.0,
            gammatone_order: 4,
            pncc_channels: 40,
            pncc_f_min: 200.0,
            pncc_f_max: 8000.0,
            pncc: PnccParams::default(),
            plp_order: 12,
            plp_loudness_exponent: 1.0 / 3.0,
            lsf_order: 10,
            delta_window: 2,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.sample_rate == 0 {
            return Err(Error::InvalidSampleRate);
        }
        if !(self.hop_ms > 0.0 && self.frame_ms >= self.hop_ms) {
            return bad("need frame_ms >= hop_ms > 0");
        }
        if self.mel_channels < STATIC_DIM || self.gfcc_channels < STATIC_DIM || self.pncc_channels < STATIC_DIM {
            return bad("channel counts must be at least the 13 coefficients kept");
        }
        if self.plp_order + 1 < STATIC_DIM {
            return bad("PLP order must be at least 12 to give 13 cepstra");
        }
        if self.lsf_order == 0 || !self.lsf_order.is_multiple_of(2) {
            return bad("LSF order must be even and positive");
        }
        if self.delta_window == 0 {
            return bad("delta window must be positive");
        }
        if !(self.log_floor > 0.0) {
            return bad("log floor must be positive");
        }
        if !(self.plp_loudness_exponent > 0.0) {
            return bad("loudness exponent must be positive");
        }
        self.pncc.validate()
    }

    pub fn frame_len(&self) -> usize {
        crate::audio::ms_to_samples(self.frame_ms, self.sample_rate)
    }

    pub fn hop(&self) -> usize {
        crate::audio::ms_to_samples(self.hop_ms, self.sample_rate)
    }

    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop() as f64
    }
}

/// Pre-emphasized, windowed frames and their spectra.
pub(crate) struct Analysis {
    pub frames: FrameSequence,
    pub spectrum: PowerSpectrumSequence,
}

pub(crate) fn analyze(audio: &AudioBuffer, cfg: &FeatureConfig) -> Result<Analysis> {
    cfg.validate()?;
    if audio.is_empty() {
        return Err(Error::Empty);
    }
    if audio.sample_rate() != cfg.sample_rate {
        return Err(Error::SampleRateMismatch { expected: cfg.sample_rate, actual: audio.sample_rate() });
    }
    let emphasized = pre_emphasize(audio, cfg.pre_emphasis)?;
    let frames = frame_signal(&emphasized, cfg.frame_ms, cfg.hop_ms, cfg.window)?;
    let spectrum = dsp::spectrum(&frames, cfg.fft_size, cfg.spectrum_mode)?;
    Ok(Analysis { frames, spectrum })
}

/// Filterbanks and transforms built once from a config and reused across
/// utterances.
#[derive(Debug, Clone)]
pub struct Extractor {
    cfg: FeatureConfig,
    mel: FilterBank,
    gfcc: FilterBank,
    pncc: FilterBank,
    bark: FilterBank,
    mel_dct: dsp::Dct,
    gfcc_dct: dsp::Dct,
    pncc_dct: dsp::Dct,
}

impl Extractor {
    pub fn new(cfg: FeatureConfig) -> Result<Self> {
        cfg.validate()?;
        let sr = cfg.sample_rate;
        let nyquist = sr as f64 / 2.0;
        let mel = dsp::mel_filterbank(cfg.mel_channels, cfg.fft_size, sr, cfg.mel_f_min, cfg.mel_f_max.min(nyquist))?;
        let gfcc = dsp::gammatone_filterbank(
            cfg.gfcc_channels,
            cfg.fft_size,
            sr,
            cfg.gfcc_f_min,
            cfg.gfcc_f_max.min(nyquist),
            cfg.gammatone_order,
        )?;
        let pncc = dsp::gammatone_filterbank(
            cfg.pncc_channels,
            cfg.fft_size,
            sr,
            cfg.pncc_f_min,
            cfg.pncc_f_max.min(nyquist),
            cfg.gammatone_order,
        )?;
        let n_bark = num_traits::Float::ceil(dsp::bark_scale(nyquist)) as usize + 1;
        let bark = dsp::bark_filterbank(n_bark, cfg.fft_size, sr)?;
        Ok(Self {
            mel_dct: dsp::Dct::new(cfg.mel_channels, STATIC_DIM)?,
            gfcc_dct: dsp::Dct::new(cfg.gfcc_channels, STATIC_DIM)?,
            pncc_dct: dsp::Dct::new(cfg.pncc_channels, STATIC_DIM)?,
            cfg,
            mel,
            gfcc,
            pncc,
            bark,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    pub fn mel_bank(&self) -> &FilterBank {
        &self.mel
    }

    pub fn gfcc_bank(&self) -> &FilterBank {
        &self.gfcc
    }

    pub fn pncc_bank(&self) -> &FilterBank {
        &self.pncc
    }

    pub fn bark_bank(&self) -> &FilterBank {
        &self.bark
    }

    /// Static features of one front-end. `Combo` is not a front-end.
    pub fn extract(&self, kind: FeatureKind, audio: &AudioBuffer) -> Result<FeatureMatrix> {
        match kind {
            FeatureKind::Mfcc => mfcc::run(self, audio),
            FeatureKind::Gfcc => gfcc::run(self, audio),
            FeatureKind::Pncc => pncc::run(self, audio),
            FeatureKind::Plp => plp::run(self, audio).map(|(m, _)| m),
            FeatureKind::Lsf => lsf::run(self, audio).map(|(m, _)| m),
            FeatureKind::Combo => {
                Err(Error::InvalidArgument("combo features are assembled from two front-ends".into()))
            }
        }
    }

    /// Full feature matrix for an experiment column.
    pub fn extract_spec(&self, spec: FeatureSpec, audio: &AudioBuffer) -> Result<FeatureMatrix> {
        let comps = spec.components();
        let mut statics = Vec::with_capacity(comps.len());
        for k in comps {
            statics.push((k, self.extract(k, audio)?));
        }
        spec.assemble(|k| statics.iter().find(|(s, _)| *s == k).map(|(_, m)| m.clone()), &self.cfg)
    }
}

/// Counts of frames where the all-pole fit failed and was substituted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LpcStats {
    pub frames: usize,
    pub substituted: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_names_round_trip() {
        for name in FeatureSpec::NAMES {
            let spec: FeatureSpec = name.parse().unwrap();
            assert_eq!(alloc::format!("{spec}"), name);
        }
        assert!("bogus".parse::<FeatureSpec>().is_err());
        assert!("lsf+gfcc".parse::<FeatureSpec>().is_err());
        assert!("gfcc+gfcc".parse::<FeatureSpec>().is_err());
    }

    #[test]
    fn tags_round_trip() {
        for k in FeatureKind::BASE.iter().chain([FeatureKind::Combo].iter()) {
            assert_eq!(FeatureKind::from_tag(k.tag()), Some(*k));
        }
        assert_eq!(FeatureKind::from_tag(0), None);
    }

    #[test]
    fn dims() {
        let cfg = FeatureConfig::default();
        assert_eq!(FeatureKind::Mfcc.dim(true, &cfg), 39);
        assert_eq!(FeatureKind::Lsf.dim(false, &cfg), 10);
        assert_eq!(FeatureKind::Combo.dim(false, &cfg), 26);
    }

    #[test]
    fn config_validation() {
        assert!(FeatureConfig::default().validate().is_ok());
        let cfg = FeatureConfig { lsf_order: 9, ..FeatureConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = FeatureConfig { mel_channels: 12, ..FeatureConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
