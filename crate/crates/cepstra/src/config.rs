//! Experiment configuration (TOML).
//!
//! ```toml
//! seed = 7
//! components = 16
//! features = ["mfcc", "gfcc", "gfcc+pncc"]
//!
//! [corpus]
//! synth = { speakers = 10, utterances = 3, duration_s = 2.0 }
//!
//! [noise]
//! white = "synth:white"
//! car = "noise/car.wav"
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cepstra_core::features::FeatureSpec;
use cepstra_core::gmm::EmConfig;
use cepstra_core::noise::{SnrGrid, CLEAN};
use cepstra_core::synth::CorpusSpec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_COMPONENTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; drawn at random and recorded in `config.lock` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_components")]
    pub components: usize,
    pub features: Vec<String>,
    #[serde(default)]
    pub trials: TrialMode,
    /// Output directory; relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub corpus: CorpusSource,
    #[serde(default)]
    pub split: Split,
    /// Noise name to a WAV path or `synth:white`, `synth:pink`, `synth:babble`.
    #[serde(default)]
    pub noise: BTreeMap<String, String>,
    #[serde(default)]
    pub snr: SnrSection,
    #[serde(default)]
    pub em: EmSection,
}

fn default_components() -> usize {
    DEFAULT_COMPONENTS
}

/// How test utterances become identification trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialMode {
    /// One trial per speaker: all of that speaker's test utterances joined.
    #[default]
    Concatenated,
    PerUtterance,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub speakers: usize,
    pub utterances: usize,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_rate")]
    pub sample_rate: u32,
}

fn default_duration() -> f64 {
    CorpusSpec::default().duration_s
}

fn default_rate() -> u32 {
    CorpusSpec::default().sample_rate
}

impl From<&SynthSection> for CorpusSpec {
    fn from(s: &SynthSection) -> Self {
        CorpusSpec {
            n_speakers: s.speakers,
            utterances_per_speaker: s.utterances,
            duration_s: s.duration_s,
            sample_rate: s.sample_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Split {
    /// Leading utterances of each speaker used for training; the rest test.
    pub train_per_speaker: usize,
}

impl Default for Split {
    fn default() -> Self {
        Self { train_per_speaker: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSection {
    pub levels: Vec<f64>,
}

impl Default for SnrSection {
    fn default() -> Self {
        Self { levels: SnrGrid::standard().levels().to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmSection {
    pub max_iter: usize,
    pub tol: f64,
    pub var_floor: f64,
}

impl Default for EmSection {
    fn default() -> Self {
        let d = EmConfig::default();
        Self { max_iter: d.max_iter, tol: d.tol, var_floor: d.var_floor }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthNoise {
    White,
    Pink,
    Babble,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSource {
    Synth(SynthNoise),
    File(PathBuf),
}

impl FromStr for NoiseSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("synth:") {
            Some("white") => Ok(NoiseSource::Synth(SynthNoise::White)),
            Some("pink") => Ok(NoiseSource::Synth(SynthNoise::Pink)),
            Some("babble") => Ok(NoiseSource::Synth(SynthNoise::Babble)),
            Some(other) => Err(Error::Config(format!(
                "unknown synthetic noise `{other}`; use synth:white, synth:pink or synth:babble"
            ))),
            None if s.is_empty() => Err(Error::Config("empty noise path".into())),
            None => Ok(NoiseSource::File(PathBuf::from(s))),
        }
    }
}

impl fmt::Display for NoiseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSource::Synth(SynthNoise::White) => f.write_str("synth:white"),
            NoiseSource::Synth(SynthNoise::Pink) => f.write_str("synth:pink"),
            NoiseSource::Synth(SynthNoise::Babble) => f.write_str("synth:babble"),
            NoiseSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name != CLEAN && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses, makes relative paths relative to the file, and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.rebase(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    /// Joins relative corpus, noise and output paths onto `base`.
    pub fn rebase(&mut self, base: &Path) {
        let join = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
        if let Some(dir) = &self.corpus.dir {
            self.corpus.dir = Some(join(dir));
        }
        if let Some(out) = &self.out {
            self.out = Some(join(out));
        }
        for src in self.noise.values_mut() {
            if let Ok(NoiseSource::File(p)) = src.parse::<NoiseSource>() {
                *src = join(&p).to_string_lossy().into_owned();
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.feature_specs()?;
        if self.components == 0 {
            return Err(Error::Config("components must be at least 1".into()));
        }
        match (&self.corpus.dir, &self.corpus.synth) {
            (Some(_), None) => {}
            (None, Some(s)) => CorpusSpec::from(s).validate()?,
            _ => return Err(Error::Config("[corpus] needs exactly one of `dir` or `synth`".into())),
        }
        if self.split.train_per_speaker == 0 {
            return Err(Error::Config("split.train_per_speaker must be at least 1".into()));
        }
        if let Some(s) = &self.corpus.synth {
            if s.utterances <= self.split.train_per_speaker {
                return Err(Error::Config(format!(
                    "{} utterances per speaker with {} for training leaves none to test",
                    s.utterances, self.split.train_per_speaker
                )));
            }
        }
        for (name, src) in &self.noise {
            if !valid_name(name) {
                return Err(Error::Config(format!(
                    "noise name `{name}`: use letters, digits and '-', and not `{CLEAN}`"
                )));
            }
            src.parse::<NoiseSource>()?;
        }
        self.snr_grid()?;
        let em = &self.em;
        if em.max_iter == 0 || !(0.0..).contains(&em.tol) || em.var_floor.is_nan() || em.var_floor <= 0.0 {
            return Err(Error::Config("[em] needs max_iter >= 1, tol >= 0 and var_floor > 0".into()));
        }
        Ok(())
    }

    pub fn feature_specs(&self) -> Result<Vec<FeatureSpec>> {
        if self.features.is_empty() {
            return Err(Error::Config("feature list is empty".into()));
        }
        let mut out: Vec<FeatureSpec> = Vec::new();
        for name in &self.features {
            let spec: FeatureSpec = name.parse()?;
            if out.contains(&spec) {
                return Err(Error::Config(format!("feature `{name}` listed twice")));
            }
            out.push(spec);
        }
        Ok(out)
    }

    pub fn snr_grid(&self) -> Result<SnrGrid> {
        SnrGrid::new(self.snr.levels.clone()).map_err(|e| Error::Config(format!("snr.levels: {e}")))
    }

    pub fn noise_sources(&self) -> Result<Vec<(String, NoiseSource)>> {
        self.noise.iter().map(|(k, v)| Ok((k.clone(), v.parse()?))).collect()
    }

    pub fn em_config(&self, seed: u64) -> EmConfig {
        EmConfig {
            components: self.components,
            seed,
            max_iter: self.em.max_iter,
            tol: self.em.tol,
            var_floor: self.em.var_floor,
        }
    }

    /// The fully resolved configuration as written to `config.lock`: seed
    /// filled in, defaults spelled out, feature names normalized, output
    /// location omitted.
    pub fn lock(&self, seed: u64) -> Result<String> {
        let mut locked = self.clone();
        locked.seed = Some(seed);
        locked.out = None;
        locked.features = self.feature_specs()?.iter().map(|s| s.to_string()).collect();
        let body = toml::to_string(&locked).map_err(|e| Error::Config(e.to_string()))?;
        Ok(format!("# Resolved experiment configuration.\n{body}"))
    }
}
