//! Additive noise corruption at an exact target SNR.
//!
//! Power is the mean square over the whole utterance (no active-speech
//! weighting). A noise segment as long as the speech is cut at a random,
//! seed-determined offset, wrapping around when the noise is shorter.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;
use rand::Rng;

use crate::audio::{AudioBuffer, Utterance};
use crate::error::{Error, Result};
use crate::seed;

/// Reserved condition name for uncorrupted copies.
pub const CLEAN: &str = "clean";

/// Mean-square level of a buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerDb {
    /// Every sample is zero.
    Silent,
    Level(f64),
}

impl PowerDb {
    pub fn db(self) -> Option<f64> {
        match self {
            PowerDb::Silent => None,
            PowerDb::Level(db) => Some(db),
        }
    }
}

fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|s| s * s).sum::<f64>() / x.len() as f64
}

/// `10 log10(mean(x²))`, or [`PowerDb::Silent`] for an all-zero buffer.
pub fn measure_power_db(buffer: &AudioBuffer) -> Result<PowerDb> {
    measure_samples_db(buffer.samples())
}

pub fn measure_samples_db(x: &[f64]) -> Result<PowerDb> {
    if x.is_empty() {
        return Err(Error::Empty);
    }
    let ms = mean_square(x);
    Ok(if ms > 0.0 { PowerDb::Level(10.0 * ms.log10()) } else { PowerDb::Silent })
}

/// Strictly increasing list of SNR levels in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrGrid(Vec<f64>);

impl SnrGrid {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument("SNR levels must be finite".into()));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("SNR levels must be strictly increasing".into()));
        }
        Ok(Self(levels))
    }

    /// -6 to 18 dB in 6 dB steps.
    pub fn standard() -> Self {
        Self(alloc::vec![-6.0, 0.0, 6.0, 12.0, 18.0])
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }
}

impl Default for SnrGrid {
    fn default() -> Self {
        Self::standard()
    }
}

/// Result of one mixing operation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub audio: AudioBuffer,
    /// Linear gain applied to the noise segment.
    pub gain: f64,
    /// Start of the noise segment within the noise buffer.
    pub offset: usize,
}

/// Adds noise to `speech` so that speech power over scaled-noise power is
/// `snr_db`. The output is not renormalized and may exceed [-1, 1].
pub fn mix_at_snr(speech: &AudioBuffer, noise: &AudioBuffer, snr_db: f64, seed: u64) -> Result<AudioBuffer> {
    mix_at_snr_detailed(speech, noise, snr_db, seed).map(|m| m.audio)
}

pub fn mix_at_snr_detailed(speech: &AudioBuffer, noise: &AudioBuffer, snr_db: f64, seed: u64) -> Result<Mixture> {
    if speech.sample_rate() != noise.sample_rate() {
        return Err(Error::SampleRateMismatch { expected: speech.sample_rate(), actual: noise.sample_rate() });
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument("target SNR must be finite".into()));
    }
    let speech_db = measure_power_db(speech)?.db().ok_or(Error::Silent("speech"))?;
    if matches!(measure_power_db(noise)?, PowerDb::Silent) {
        return Err(Error::Silent("noise"));
    }
    let n = noise.samples();
    let offset = seed::rng(seed).gen_range(0..n.len());
    let segment: Vec<f64> = (0..speech.len()).map(|i| n[(offset + i) % n.len()]).collect();
    let segment_db = measure_samples_db(&segment)?.db().ok_or(Error::Silent("noise segment"))?;
    let gain = 10.0.powf((speech_db - segment_db - snr_db) / 20.0);
    let mixed = speech.samples().iter().zip(&segment).map(|(s, v)| s + gain * v).collect();
    Ok(Mixture { audio: AudioBuffer::new(mixed, speech.sample_rate())?, gain, offset })
}

/// Named noise recordings sharing one sample rate, each at least 1 s long.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseInventory {
    sample_rate: u32,
    entries: BTreeMap<String, AudioBuffer>,
}

impl NoiseInventory {
    pub fn new(sample_rate: u32) -> Self {
        Self { sample_rate, entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, name: &str, noise: AudioBuffer) -> Result<()> {
        if name.is_empty() || name == CLEAN {
            return Err(Error::InvalidArgument(alloc::format!("`{name}` is not a valid noise name")));
        }
        if noise.sample_rate() != self.sample_rate {
            return Err(Error::SampleRateMismatch { expected: self.sample_rate, actual: noise.sample_rate() });
        }
        if noise.len() < self.sample_rate as usize {
            return Err(Error::InvalidArgument(alloc::format!("noise `{name}` is shorter than one second")));
        }
        self.entries.insert(name.to_string(), noise);
        Ok(())
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn get(&self, name: &str) -> Option<&AudioBuffer> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Test condition: clean, or a noise type at an SNR.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Clean,
    Noisy { noise: String, snr_db: f64 },
}

impl Condition {
    pub fn noise_name(&self) -> &str {
        match self {
            Condition::Clean => CLEAN,
            Condition::Noisy { noise, .. } => noise,
        }
    }

    /// SNR label: `clean`, or the level without trailing zeros (`-6`, `2.5`).
    pub fn snr_label(&self) -> String {
        match self {
            Condition::Clean => CLEAN.to_string(),
            Condition::Noisy { snr_db, .. } => format_db(*snr_db),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Clean => f.write_str(CLEAN),
            Condition::Noisy { noise, snr_db } => write!(f, "{noise}@{}dB", format_db(*snr_db)),
        }
    }
}

pub fn format_db(db: f64) -> String {
    if db == db.trunc() && db.abs() < 1e15 {
        alloc::format!("{}", db as i64)
    } else {
        alloc::format!("{db}")
    }
}

/// Per-utterance mixing seed; independent of processing order.
pub fn utterance_seed(seed: u64, speaker: &str, utterance: &str) -> u64 {
    seed::derive_seed(seed, &[speaker, utterance])
}

/// Every (noise, SNR) corruption of `corpus`, preceded by the clean copy.
/// Noise types follow inventory order, then ascending SNR.
pub fn corrupt_corpus(
    corpus: &[Utterance],
    inventory: &NoiseInventory,
    grid: &SnrGrid,
    seed: u64,
) -> Result<Vec<(Condition, Vec<Utterance>)>> {
    let mut out = Vec::with_capacity(1 + inventory.len() * grid.levels().len());
    out.push((Condition::Clean, corpus.to_vec()));
    for (name, noise) in &inventory.entries {
        for &snr in grid.levels() {
            let set = corpus
                .iter()
                .map(|u| {
                    let s = utterance_seed(seed, &u.speaker, &u.id);
                    Ok(Utterance {
                        speaker: u.speaker.clone(),
                        id: u.id.clone(),
                        audio: mix_at_snr(&u.audio, noise, snr, s)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out.push((Condition::Noisy { noise: name.clone(), snr_db: snr }, set));
        }
    }
    Ok(out)
}
