//! Synthetic speech-like corpus and noise generators.
//!
//! Each speaker is a fixed order-10 all-pole vocal tract (five resonances
//! with poles inside the unit circle) driven by a glottal pulse train at a
//! speaker-specific pitch plus aspiration noise. Utterances are sequences
//! of syllables separated by short pauses, so they carry the on/off energy
//! modulation of running speech.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::audio::{AudioBuffer, Utterance};
use crate::error::{Error, Result};
use crate::seed;

pub const VOCAL_TRACT_ORDER: usize = 10;
const TARGET_RMS: f64 = 0.05;
const MAX_PEAK: f64 = 0.95;
const FLOOR_NOISE: f64 = 1e-4;

/// Shape of a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub n_speakers: usize,
    pub utterances_per_speaker: usize,
    pub duration_s: f64,
    pub sample_rate: u32,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self { n_speakers: 10, utterances_per_speaker: 3, duration_s: 2.0, sample_rate: 16000 }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_speakers < 2 {
            return Err(Error::InvalidArgument(alloc::format!(
                "a corpus needs at least 2 speakers, got {}",
                self.n_speakers
            )));
        }
        if self.utterances_per_speaker == 0 {
            return Err(Error::InvalidArgument("need at least one utterance per speaker".into()));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::InvalidArgument("duration must be positive".into()));
        }
        if self.sample_rate < 8000 {
            return Err(Error::InvalidArgument("synthetic corpus needs a sample rate of at least 8 kHz".into()));
        }
        Ok(())
    }
}

/// Standard normal deviate (Box-Muller).
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Fixed voice parameters of one synthetic speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerVoice {
    /// Resonance (frequency Hz, pole radius) pairs.
    pub resonances: Vec<(f64, f64)>,
    pub pitch_hz: f64,
    /// Aspiration noise level relative to the pulse train.
    pub aspiration: f64,
    pub sample_rate: u32,
}

impl SpeakerVoice {
    pub fn random(seed: u64, sample_rate: u32) -> Self {
        let mut rng = seed::rng(seed);
        let nyquist = sample_rate as f64 / 2.0;
        let band = (nyquist - 400.0) / (VOCAL_TRACT_ORDER / 2) as f64;
        let resonances = (0..VOCAL_TRACT_ORDER / 2)
            .map(|j| {
                let f = 250.0 + band * (j as f64 + rng.gen_range(0.1..0.9));
                let r = rng.gen_range(0.86..0.97);
                (f, r)
            })
            .collect();
        Self { resonances, pitch_hz: rng.gen_range(90.0..260.0), aspiration: rng.gen_range(0.05..0.2), sample_rate }
    }

    /// Denominator `[1, c1, …, c10]` of the vocal-tract filter with every
    /// resonance frequency multiplied by `warp`.
    pub fn polynomial(&self, warp: f64) -> Vec<f64> {
        let mut poly = alloc::vec![1.0];
        for &(f, r) in &self.resonances {
            let theta = (2.0 * PI * f * warp / self.sample_rate as f64).min(PI * 0.98);
            let section = [1.0, -2.0 * r * theta.cos(), r * r];
            let mut next = alloc::vec![0.0; poly.len() + 2];
            for (i, p) in poly.iter().enumerate() {
                for (j, s) in section.iter().enumerate() {
                    next[i + j] += p * s;
                }
            }
            poly = next;
        }
        poly
    }

    fn excitation(&self, rng: &mut ChaCha8Rng, len: usize, f0_start: f64, f0_end: f64, out: &mut Vec<f64>) {
        let sr = self.sample_rate as f64;
        let mut phase: f64 = rng.gen();
        for n in 0..len {
            let t = n as f64 / len.max(1) as f64;
            let f0 = f0_start + (f0_end - f0_start) * t;
            phase += f0 / sr;
            let pulse = if phase >= 1.0 {
                phase -= 1.0;
                1.0
            } else {
                0.0
            };
            out.push(pulse + self.aspiration * gaussian(rng));
        }
    }

    /// Steady vowel: constant pitch, constant vocal tract, no pauses.
    pub fn sustained(&self, duration_s: f64, seed: u64) -> Result<AudioBuffer> {
        let mut rng = seed::rng(seed);
        let len = (duration_s * self.sample_rate as f64).round() as usize;
        let mut e = Vec::with_capacity(len);
        self.excitation(&mut rng, len, self.pitch_hz, self.pitch_hz, &mut e);
        let mut y = all_pole(&self.polynomial(1.0), &e);
        normalize(&mut y, &mut rng);
        AudioBuffer::new(y, self.sample_rate)
    }

    /// Syllables of 120-300 ms separated by 30-120 ms pauses, with small
    /// per-syllable pitch glides and resonance shifts.
    pub fn utterance(&self, duration_s: f64, seed: u64) -> Result<AudioBuffer> {
        let mut rng = seed::rng(seed);
        let sr = self.sample_rate as f64;
        let total = (duration_s * sr).round() as usize;
        let mut y = Vec::with_capacity(total + self.sample_rate as usize);
        let ramp = (0.02 * sr) as usize;
        while y.len() < total {
            let syl = (rng.gen_range(0.12..0.30) * sr) as usize;
            let gap = (rng.gen_range(0.03..0.12) * sr) as usize;
            let f0a = self.pitch_hz * rng.gen_range(0.94..1.06);
            let f0b = self.pitch_hz * rng.gen_range(0.94..1.06);
            let warp = rng.gen_range(0.97..1.03);
            let mut e = Vec::with_capacity(syl + gap);
            self.excitation(&mut rng, syl, f0a, f0b, &mut e);
            for (n, v) in e.iter_mut().enumerate() {
                let edge = n.min(syl - 1 - n);
                if edge < ramp {
                    let w = (0.5 * PI * edge as f64 / ramp as f64).sin();
                    *v *= w * w;
                }
            }
            e.resize(syl + gap, 0.0);
            y.extend(all_pole(&self.polynomial(warp), &e));
        }
        y.truncate(total);
        normalize(&mut y, &mut rng);
        AudioBuffer::new(y, self.sample_rate)
    }
}

/// `y[n] = x[n] - Σ_{k≥1} a[k] y[n-k]` with `a[0] = 1`.
fn all_pole(a: &[f64], x: &[f64]) -> Vec<f64> {
    let mut y: Vec<f64> = Vec::with_capacity(x.len());
    for (n, &v) in x.iter().enumerate() {
        let mut acc = v;
        for k in 1..a.len().min(n + 1) {
            acc -= a[k] * y[n - k];
        }
        y.push(acc);
    }
    y
}

fn normalize(y: &mut [f64], rng: &mut ChaCha8Rng) {
    if y.is_empty() {
        return;
    }
    let rms = (y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64).sqrt();
    if rms > 0.0 {
        let mut g = TARGET_RMS / rms;
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak * g > MAX_PEAK {
            g = MAX_PEAK / peak;
        }
        y.iter_mut().for_each(|v| *v *= g);
    }
    for v in y.iter_mut() {
        *v += FLOOR_NOISE * gaussian(rng);
    }
}

pub fn speaker_id(index: usize, n_speakers: usize) -> String {
    let width = (n_speakers.max(2) - 1).ilog10() as usize + 1;
    alloc::format!("spk{index:0width$}")
}

pub fn utterance_id(index: usize, n_utterances: usize) -> String {
    let width = (n_utterances.max(2) - 1).ilog10() as usize + 1;
    alloc::format!("utt{index:0width$}")
}

/// Deterministic synthetic corpus, speakers in order, utterances in order.
pub fn synth_corpus(spec: &CorpusSpec, seed: u64) -> Result<Vec<Utterance>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.n_speakers * spec.utterances_per_speaker);
    for s in 0..spec.n_speakers {
        let speaker = speaker_id(s, spec.n_speakers);
        let voice = SpeakerVoice::random(seed::derive_seed(seed, &["voice", &speaker]), spec.sample_rate);
        for u in 0..spec.utterances_per_speaker {
            let id = utterance_id(u, spec.utterances_per_speaker);
            let audio = voice.utterance(spec.duration_s, seed::derive_seed(seed, &["utterance", &speaker, &id]))?;
            out.push(Utterance { speaker: speaker.clone(), id, audio });
        }
    }
    Ok(out)
}

/// Gaussian white noise with the given RMS.
pub fn white_noise(len: usize, sample_rate: u32, rms: f64, seed: u64) -> Result<AudioBuffer> {
    let mut rng = seed::rng(seed);
    AudioBuffer::new((0..len).map(|_| rms * gaussian(&mut rng)).collect(), sample_rate)
}

/// Pink (1/f) noise from white noise through Kellet's six-pole filter,
/// scaled to the given RMS.
pub fn pink_noise(len: usize, sample_rate: u32, rms: f64, seed: u64) -> Result<AudioBuffer> {
    const POLES: [(f64, f64); 6] = [
        (0.99886, 0.0555179),
        (0.99332, 0.0750759),
        (0.96900, 0.1538520),
        (0.86650, 0.3104856),
        (0.55000, 0.5329522),
        (-0.7616, -0.0168980),
    ];
    let mut rng = seed::rng(seed);
    let mut state = [0.0; 6];
    let mut prev = 0.0;
    let mut out: Vec<f64> = (0..len)
        .map(|_| {
            let w = gaussian(&mut rng);
            let mut y = prev + 0.5362 * w;
            for (s, (a, b)) in state.iter_mut().zip(POLES) {
                *s = a * *s + b * w;
                y += *s;
            }
            prev = 0.115926 * w;
            y
        })
        .collect();
    let actual = (out.iter().map(|v| v * v).sum::<f64>() / len.max(1) as f64).sqrt();
    if actual > 0.0 {
        out.iter_mut().for_each(|v| *v *= rms / actual);
    }
    AudioBuffer::new(out, sample_rate)
}

/// Babble: the sum of `n_talkers` synthetic talkers unrelated to any corpus
/// speaker, scaled to the corpus speech level.
pub fn babble_noise(n_talkers: usize, duration_s: f64, sample_rate: u32, seed: u64) -> Result<AudioBuffer> {
    if n_talkers == 0 {
        return Err(Error::InvalidArgument("babble needs at least one talker".into()));
    }
    let len = (duration_s * sample_rate as f64).round() as usize;
    let mut sum = alloc::vec![0.0; len];
    for t in 0..n_talkers {
        let tag = alloc::format!("talker{t}");
        let voice = SpeakerVoice::random(seed::derive_seed(seed, &["babble", &tag]), sample_rate);
        let u = voice.utterance(duration_s, seed::derive_seed(seed, &["babble-utt", &tag]))?;
        for (s, v) in sum.iter_mut().zip(u.samples()) {
            *s += v;
        }
    }
    let rms = (sum.iter().map(|v| v * v).sum::<f64>() / len.max(1) as f64).sqrt();
    if rms > 0.0 {
        sum.iter_mut().for_each(|v| *v *= TARGET_RMS / rms);
    }
    AudioBuffer::new(sum, sample_rate)
}
