//! The `cepstra` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use cepstra_core::eval::{identification_rate, identify, render_report, ReportFormat};
use cepstra_core::features::{Extractor, FeatureSpec};
use cepstra_core::gmm::train_em;
use cepstra_core::noise::{format_db, mix_at_snr_detailed, utterance_seed};
use cepstra_core::synth::{babble_noise, pink_noise, synth_corpus, white_noise, CorpusSpec};
use cepstra_core::{FeatureConfig, Matrix, Utterance};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, NoiseSource, SynthNoise};
use crate::corpus::{list_corpus, load_corpus, write_corpus, write_utterances};
use crate::feature_io::{load_features, save_features, save_features_csv, EXTENSION as FEATURE_EXT};
use crate::grid::{rebuild_report, run_grid, write_outputs, SYNTH_NOISE_SECONDS};
use crate::model_io::{load_model_dir, save_model, EXTENSION as MODEL_EXT};
use crate::wav::load_wav;

/// Error caused by the invocation rather than by the data; exits with 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "cepstra", version, about = "Speaker identification with auditory front-ends and GMM speaker models")]
#[command(after_help = "Verbosity on standard error is set with CEPSTRA_LOG=error|warn|info|debug.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic multi-speaker corpus
    Synth(SynthArgs),
    /// Add noise to a corpus at a list of SNRs
    Mix(MixArgs),
    /// Compute feature files for every recording
    Extract(ExtractArgs),
    /// Train one GMM per speaker from feature files
    Train(TrainArgs),
    /// Identify the speaker of feature files against trained models
    Identify(IdentifyArgs),
    /// Run the noise x SNR x feature grid described by a config file
    Evaluate(EvaluateArgs),
    /// Re-render the report of a finished evaluation from its decision logs
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Corpus shape SPEAKERSxUTTERANCES[:SECONDS], e.g. 10x3:2.0
    #[arg(long)]
    pub spec: String,
    /// Sample rate of the generated recordings in Hz
    #[arg(long, default_value_t = 16000)]
    pub sample_rate: u32,
    /// Random seed; drawn and printed when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// Corpus directory with clean speech
    #[arg(long)]
    pub speech_dir: PathBuf,
    /// Noise WAV file, or synth:white, synth:pink, synth:babble
    #[arg(long)]
    pub noise: String,
    /// Name of the noise in the output tree (default: file stem or synthetic kind)
    #[arg(long)]
    pub name: Option<String>,
    /// Comma-separated target SNRs in dB
    #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr: Vec<f64>,
    /// Random seed; drawn and printed when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; recordings go to <out>/<noise>/<snr>dB/
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// A WAV file or a corpus directory
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Front-end: mfcc, gfcc, pncc, plp, lsf, gfcc+pncc, plp+gfcc or plp+pncc
    #[arg(long, value_parser = parse_feature)]
    pub feature: FeatureSpec,
    /// Output directory, mirroring <speaker>/<utterance>
    #[arg(long)]
    pub out: PathBuf,
    /// Write CSV tables with a header line instead of binary .cbfm files
    #[arg(long)]
    pub csv: bool,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of <speaker>/<utterance>.cbfm feature files
    #[arg(long)]
    pub features: PathBuf,
    /// Mixture components per speaker
    #[arg(long, default_value_t = crate::config::DEFAULT_COMPONENTS)]
    pub components: usize,
    /// Use only the first N utterances of each speaker (in name order)
    #[arg(long)]
    pub utterances: Option<usize>,
    /// Maximum EM iterations
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Random seed; drawn and printed when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for <speaker>.cbgm model files
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// Directory of <speaker>.cbgm model files
    #[arg(long)]
    pub models: PathBuf,
    /// A .cbfm file or a directory of <speaker>/<utterance>.cbfm files
    #[arg(long)]
    pub features: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Experiment config file (TOML)
    pub config: PathBuf,
    /// Output directory (overrides `out` in the config)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed (overrides `seed` in the config); drawn and printed when both are absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism); results do not depend on it
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directory of a finished `evaluate` run
    #[arg(long)]
    pub run: PathBuf,
    /// Table format printed on standard output
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    pub format: Format,
}

fn parse_feature(s: &str) -> std::result::Result<FeatureSpec, String> {
    s.parse::<FeatureSpec>().map_err(|e| e.to_string())
}

/// `SPEAKERSxUTTERANCES[:SECONDS]`.
pub fn parse_corpus_spec(s: &str, sample_rate: u32) -> Result<CorpusSpec> {
    let bad = || usage(format!("invalid --spec `{s}`; expected SPEAKERSxUTTERANCES[:SECONDS], e.g. 10x3:2.0"));
    let (shape, secs) = match s.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let (n, u) = shape.split_once(['x', 'X']).ok_or_else(bad)?;
    let mut spec = CorpusSpec {
        n_speakers: n.trim().parse().map_err(|_| bad())?,
        utterances_per_speaker: u.trim().parse().map_err(|_| bad())?,
        sample_rate,
        ..CorpusSpec::default()
    };
    if let Some(secs) = secs {
        spec.duration_s = secs.trim().parse().map_err(|_| bad())?;
    }
    spec.validate().map_err(|e| usage(format!("invalid --spec `{s}`: {e}")))?;
    Ok(spec)
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    let seed = seed.unwrap_or_else(rand::random);
    eprintln!("seed: {seed}");
    seed
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
    Ok(pool.install(f))
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec = parse_corpus_spec(&a.spec, a.sample_rate)?;
    let seed = resolve_seed(a.seed);
    let utts = synth_corpus(&spec, seed)?;
    write_corpus(&a.out, &utts)?;
    log::info!("wrote {} recordings to {}", utts.len(), a.out.display());
    Ok(())
}

fn noise_name(source: &NoiseSource) -> String {
    match source {
        NoiseSource::Synth(SynthNoise::White) => "white".into(),
        NoiseSource::Synth(SynthNoise::Pink) => "pink".into(),
        NoiseSource::Synth(SynthNoise::Babble) => "babble".into(),
        NoiseSource::File(p) => {
            p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "noise".into())
        }
    }
}

fn cmd_mix(a: MixArgs) -> Result<()> {
    let source: NoiseSource = a.noise.parse().map_err(|e: crate::Error| usage(e.to_string()))?;
    let name = a.name.clone().unwrap_or_else(|| noise_name(&source));
    if a.snr.iter().any(|v| !v.is_finite()) {
        return Err(usage("--snr values must be finite"));
    }
    let seed = resolve_seed(a.seed);
    let rate = FeatureConfig::default().sample_rate;
    let speech = load_corpus(&a.speech_dir, rate)?;
    let len = (SYNTH_NOISE_SECONDS * rate as f64) as usize;
    let noise_seed = cepstra_core::seed::derive_seed(seed, &["noise", &name]);
    let noise = match &source {
        NoiseSource::Synth(SynthNoise::White) => white_noise(len, rate, 0.05, noise_seed)?,
        NoiseSource::Synth(SynthNoise::Pink) => pink_noise(len, rate, 0.05, noise_seed)?,
        NoiseSource::Synth(SynthNoise::Babble) => babble_noise(6, SYNTH_NOISE_SECONDS, rate, noise_seed)?,
        NoiseSource::File(p) => {
            let n = load_wav(p)?;
            if n.sample_rate() == rate {
                n
            } else {
                cepstra_core::audio::resample(&n, rate)?
            }
        }
    };
    for &snr in &a.snr {
        let dir = a.out.join(&name).join(format!("{}dB", format_db(snr)));
        let mut mixed = Vec::with_capacity(speech.len());
        let mut log_rows = Vec::with_capacity(speech.len());
        for u in &speech {
            let m = mix_at_snr_detailed(&u.audio, &noise, snr, utterance_seed(seed, &u.speaker, &u.id))
                .with_context(|| format!("mixing {}/{} at {snr} dB", u.speaker, u.id))?;
            // Scaling speech and noise together keeps the SNR and avoids clipping.
            let peak = m.audio.peak();
            let scale = if peak > 1.0 { 32767.0 / 32768.0 / peak } else { 1.0 };
            if scale < 1.0 {
                log::warn!("{}/{} at {snr} dB peaks at {peak:.3}; scaled by {scale:.4}", u.speaker, u.id);
            }
            log_rows.push([
                u.speaker.clone(),
                u.id.clone(),
                m.gain.to_string(),
                m.offset.to_string(),
                scale.to_string(),
            ]);
            mixed.push(Utterance { speaker: u.speaker.clone(), id: u.id.clone(), audio: m.audio.scaled(scale)? });
        }
        write_utterances(&dir, &mixed, |u| PathBuf::from(format!("{}_{}.wav", u.speaker, u.id)))?;
        let mut w = csv::Writer::from_path(dir.join("mix.csv"))?;
        w.write_record(["speaker", "utterance", "noise_gain", "noise_offset", "output_scale"])?;
        for row in log_rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_extract(a: ExtractArgs) -> Result<()> {
    let rate = FeatureConfig::default().sample_rate;
    let ex = Extractor::new(FeatureConfig::default())?;
    let items: Vec<(PathBuf, PathBuf)> = if a.input.is_dir() {
        list_corpus(&a.input)?.into_iter().map(|(speaker, id, path)| (path, Path::new(&speaker).join(id))).collect()
    } else {
        let stem = a.input.file_stem().context("input has no file name")?;
        vec![(a.input.clone(), PathBuf::from(stem))]
    };
    let ext = if a.csv { "csv" } else { FEATURE_EXT };
    let results: Vec<Result<()>> = with_pool(a.jobs, || {
        items
            .par_iter()
            .map(|(src, rel)| -> Result<()> {
                let audio = load_wav(src)?;
                let audio =
                    if audio.sample_rate() == rate { audio } else { cepstra_core::audio::resample(&audio, rate)? };
                let m = ex.extract_spec(a.feature, &audio).with_context(|| format!("{}", src.display()))?;
                let dst = a.out.join(rel).with_extension(ext);
                if let Some(parent) = dst.parent() {
                    std::fs::create_dir_all(parent).with_context(|| parent.display().to_string())?;
                }
                if a.csv {
                    save_features_csv(&dst, &m)?;
                } else {
                    save_features(&dst, &m)?;
                }
                Ok(())
            })
            .collect()
    })?;
    results.into_iter().collect::<Result<Vec<_>>>()?;
    log::info!("wrote {} feature files to {}", items.len(), a.out.display());
    Ok(())
}

fn is_feature_file(p: &Path) -> bool {
    p.extension().and_then(|e| e.to_str()) == Some(FEATURE_EXT)
}

fn sorted_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v = std::fs::read_dir(dir)
        .with_context(|| dir.display().to_string())?
        .map(|e| Ok(e?.path()))
        .collect::<Result<Vec<_>>>()?;
    v.sort();
    Ok(v)
}

/// `(speaker, utterance, path)` for `<dir>/<speaker>/<utterance>.cbfm`.
fn list_feature_dir(dir: &Path) -> Result<Vec<(String, String, PathBuf)>> {
    let mut out = Vec::new();
    for sub in sorted_dir(dir)?.into_iter().filter(|p| p.is_dir()) {
        let speaker = sub.file_name().unwrap_or_default().to_string_lossy().into_owned();
        for f in sorted_dir(&sub)?.into_iter().filter(|p| is_feature_file(p)) {
            let id = f.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            out.push((speaker.clone(), id, f));
        }
    }
    Ok(out)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    if a.components == 0 {
        return Err(usage("--components must be at least 1"));
    }
    let seed = resolve_seed(a.seed);
    let mut per_speaker: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for (speaker, _, path) in list_feature_dir(&a.features)? {
        per_speaker.entry(speaker).or_default().push(path);
    }
    if per_speaker.is_empty() {
        anyhow::bail!("{}: no <speaker>/*.{FEATURE_EXT} feature files", a.features.display());
    }
    std::fs::create_dir_all(&a.out).with_context(|| a.out.display().to_string())?;
    let jobs: Vec<(String, Vec<PathBuf>)> = per_speaker
        .into_iter()
        .map(|(s, mut files)| {
            if let Some(n) = a.utterances {
                files.truncate(n);
            }
            (s, files)
        })
        .collect();
    let results: Vec<Result<String>> = with_pool(a.jobs, || {
        jobs.par_iter()
            .map(|(speaker, files)| -> Result<String> {
                let mut data: Option<Matrix> = None;
                for f in files {
                    let m = load_features(f)?.into_values();
                    match &mut data {
                        None => data = Some(m),
                        Some(d) => d.append_rows(&m).with_context(|| f.display().to_string())?,
                    }
                }
                let data = data.with_context(|| format!("speaker {speaker} has no feature files"))?;
                let cfg = cepstra_core::gmm::EmConfig {
                    components: a.components,
                    seed: cepstra_core::seed::derive_seed(seed, &[speaker]),
                    max_iter: a.max_iter,
                    ..Default::default()
                };
                let (model, report) = train_em(&data, &cfg).with_context(|| format!("training {speaker}"))?;
                save_model(a.out.join(format!("{speaker}.{MODEL_EXT}")), &model)?;
                Ok(format!(
                    "{speaker},{},{},{},{}",
                    data.rows(),
                    report.iterations,
                    report.converged,
                    report.log_likelihood.last().copied().unwrap_or(f64::NAN)
                ))
            })
            .collect()
    })?;
    println!("speaker,frames,iterations,converged,avg_log_likelihood");
    for line in results {
        println!("{}", line?);
    }
    Ok(())
}

fn cmd_identify(a: IdentifyArgs) -> Result<()> {
    let models = load_model_dir(&a.models)?;
    if models.len() < 2 {
        anyhow::bail!("{}: need at least two .{MODEL_EXT} models, found {}", a.models.display(), models.len());
    }
    let items: Vec<(Option<String>, PathBuf)> = if a.features.is_dir() {
        list_feature_dir(&a.features)?.into_iter().map(|(s, _, p)| (Some(s), p)).collect()
    } else {
        vec![(None, a.features.clone())]
    };
    println!("file,speaker,predicted,margin");
    let mut pairs = Vec::new();
    for (speaker, path) in items {
        let feats = load_features(&path)?;
        let d = identify(&models, feats.values()).map_err(|e| match e {
            cepstra_core::Error::DimensionMismatch { expected, actual } => anyhow::anyhow!(
                "{}: features have {actual} dimensions but the models expect {expected}",
                path.display()
            ),
            other => anyhow::Error::from(other).context(path.display().to_string()),
        })?;
        println!("{},{},{},{}", path.display(), speaker.as_deref().unwrap_or(""), d.speaker, d.margin);
        if let Some(s) = speaker {
            pairs.push((d.speaker, s));
        }
    }
    if !pairs.is_empty() {
        let known: Vec<_> = pairs.into_iter().filter(|(_, t)| models.contains_key(t)).collect();
        if let Ok(ir) = identification_rate(&known) {
            eprintln!("identification rate: {ir:.2}% over {} trials", known.len());
        }
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config).map_err(|e| match e {
        crate::Error::Io { .. } => anyhow::Error::from(e),
        other => usage(other.to_string()),
    })?;
    if let Some(out) = a.out {
        cfg.out = Some(out);
    }
    let out = cfg.out.clone().ok_or_else(|| usage("no output directory: pass --out or set `out` in the config"))?;
    let seed = resolve_seed(a.seed.or(cfg.seed));
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).ok();
    let mut result = with_pool(a.jobs, || run_grid(&cfg, seed))??;
    result.report.meta.timestamp = started.map(|t| t.to_string());
    write_outputs(&out, &result, started)?;
    print!("{}", render_report(&result.report, ReportFormat::Markdown));
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let report = rebuild_report(&a.run)?;
    let format = match a.format {
        Format::Markdown => ReportFormat::Markdown,
        Format::Csv => ReportFormat::Csv,
    };
    print!("{}", render_report(&report, format));
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Mix(a) => cmd_mix(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Train(a) => cmd_train(a),
        Command::Identify(a) => cmd_identify(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses `args`, runs, and returns the process exit code: 0 on success,
/// 1 on runtime failure, 2 on usage errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("CEPSTRA_LOG", "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn corpus_spec_parsing() {
        let s = parse_corpus_spec("10x3:2.5", 16000).unwrap();
        assert_eq!((s.n_speakers, s.utterances_per_speaker, s.duration_s), (10, 3, 2.5));
        assert_eq!(parse_corpus_spec("4X2", 8000).unwrap().duration_s, 2.0);
        for bad in ["", "10", "x3", "1x3", "10x0", "10x3:-1", "10x3:abc"] {
            assert!(parse_corpus_spec(bad, 16000).unwrap_err().downcast_ref::<UsageError>().is_some(), "{bad}");
        }
    }
}
