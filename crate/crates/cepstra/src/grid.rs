//! The noise × SNR × feature evaluation grid.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use cepstra_core::audio::resample;
use cepstra_core::eval::{
    enroll_speaker, render_report, run_trials, Cell, EvalReport, ReportFormat, ReportMeta, TrialOutcome,
};
use cepstra_core::features::{Extractor, FeatureSpec};
use cepstra_core::noise::{corrupt_corpus, Condition, NoiseInventory};
use cepstra_core::seed::derive_seed;
use cepstra_core::synth::{babble_noise, pink_noise, synth_corpus, white_noise, CorpusSpec};
use cepstra_core::{AudioBuffer, FeatureConfig, FeatureKind, FeatureMatrix, GmmModel, Utterance};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, NoiseSource, SynthNoise, TrialMode};
use crate::corpus::{load_corpus, split_corpus};
use crate::error::{Error, Result};
use crate::wav::load_wav;

/// Length of generated noise recordings.
pub const SYNTH_NOISE_SECONDS: f64 = 10.0;
const SYNTH_NOISE_RMS: f64 = 0.05;
const BABBLE_TALKERS: usize = 6;

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_MD: &str = "report.md";
pub const CONFIG_LOCK: &str = "config.lock";
pub const RUN_INFO: &str = "run.toml";
pub const DECISIONS_DIR: &str = "decisions";

/// Identification outcomes of one grid cell, in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDecisions {
    pub condition: Condition,
    pub feature: String,
    pub outcomes: Vec<TrialOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub report: EvalReport,
    pub decisions: Vec<CellDecisions>,
    pub lock: String,
}

/// Short hash of the locked configuration text.
pub fn config_hash(lock: &str) -> String {
    let digest = Sha256::digest(lock.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn decisions_file_name(condition: &Condition, feature: &str) -> String {
    format!("{}_{}_{}.csv", condition.noise_name(), condition.snr_label(), feature)
}

fn feature_config(sample_rate: u32) -> FeatureConfig {
    FeatureConfig { sample_rate, ..FeatureConfig::default() }
}

fn load_inventory(cfg: &ExperimentConfig, seed: u64, sample_rate: u32) -> Result<NoiseInventory> {
    let mut inv = NoiseInventory::new(sample_rate);
    let len = (SYNTH_NOISE_SECONDS * sample_rate as f64) as usize;
    for (name, src) in cfg.noise_sources()? {
        let s = derive_seed(seed, &["noise", &name]);
        let audio = match src {
            NoiseSource::Synth(SynthNoise::White) => white_noise(len, sample_rate, SYNTH_NOISE_RMS, s)?,
            NoiseSource::Synth(SynthNoise::Pink) => pink_noise(len, sample_rate, SYNTH_NOISE_RMS, s)?,
            NoiseSource::Synth(SynthNoise::Babble) => {
                babble_noise(BABBLE_TALKERS, SYNTH_NOISE_SECONDS, sample_rate, s)?
            }
            NoiseSource::File(path) => {
                let a = load_wav(&path)?;
                if a.sample_rate() == sample_rate {
                    a
                } else {
                    resample(&a, sample_rate).map_err(|e| Error::from(e).at(&path))?
                }
            }
        };
        inv.insert(&name, audio).map_err(|e| Error::Config(format!("noise `{name}`: {e}")))?;
    }
    Ok(inv)
}

/// Corpus utterances; synthetic corpora use the master seed directly so they
/// match `cepstra synth --seed` output.
pub fn load_experiment_corpus(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Utterance>> {
    let rate = FeatureConfig::default().sample_rate;
    match (&cfg.corpus.dir, &cfg.corpus.synth) {
        (Some(dir), _) => load_corpus(dir, rate),
        (None, Some(spec)) => {
            let utts = synth_corpus(&CorpusSpec::from(spec), seed)?;
            if spec.sample_rate == rate {
                return Ok(utts);
            }
            utts.into_iter().map(|u| Ok(Utterance { audio: resample(&u.audio, rate)?, ..u })).collect()
        }
        (None, None) => Err(Error::Config("no corpus configured".into())),
    }
}

fn build_trials(test: BTreeMap<String, Vec<Utterance>>, mode: TrialMode) -> Result<Vec<Utterance>> {
    let mut out = Vec::new();
    for (speaker, utts) in test {
        match mode {
            TrialMode::PerUtterance => out.extend(utts),
            TrialMode::Concatenated => {
                let id = utts.iter().map(|u| u.id.as_str()).collect::<Vec<_>>().join("+");
                let audio = AudioBuffer::concat(utts.iter().map(|u| &u.audio))?;
                out.push(Utterance { speaker, id, audio });
            }
        }
    }
    Ok(out)
}

type Statics = BTreeMap<FeatureKind, FeatureMatrix>;

fn extract_statics(ex: &Extractor, audio: &AudioBuffer, kinds: &[FeatureKind]) -> Result<Statics> {
    kinds.iter().map(|&k| Ok((k, ex.extract(k, audio)?))).collect()
}

fn assemble(spec: FeatureSpec, statics: &Statics, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    Ok(spec.assemble(|k| statics.get(&k).cloned(), cfg)?)
}

fn cell_error(condition: &Condition, feature: &str, e: impl Into<Error>) -> Error {
    Error::Cell { condition: condition.to_string(), feature: feature.to_string(), cause: Box::new(e.into()) }
}

/// Runs the whole grid on the current rayon pool. Results do not depend on
/// the number of worker threads.
pub fn run_grid(cfg: &ExperimentConfig, seed: u64) -> Result<GridResult> {
    cfg.validate()?;
    let lock = cfg.lock(seed)?;
    let specs = cfg.feature_specs()?;
    let fcfg = feature_config(FeatureConfig::default().sample_rate);
    let ex = Extractor::new(fcfg.clone())?;
    let mut kinds: Vec<FeatureKind> = specs.iter().flat_map(|s| s.components()).collect();
    kinds.sort();
    kinds.dedup();

    let corpus = load_experiment_corpus(cfg, seed)?;
    let (train, test) = split_corpus(corpus, cfg.split.train_per_speaker)?;
    let trials = build_trials(test, cfg.trials)?;
    let inventory = load_inventory(cfg, seed, fcfg.sample_rate)?;
    let conditions = corrupt_corpus(&trials, &inventory, &cfg.snr_grid()?, derive_seed(seed, &["mix"]))?;
    log::info!(
        "{} speakers, {} trials per cell, {} conditions, features {:?}",
        train.len(),
        trials.len(),
        conditions.len(),
        cfg.features
    );

    let train_utts: Vec<&Utterance> = train.values().flatten().collect();
    let train_statics: Vec<Statics> = train_utts
        .par_iter()
        .map(|u| extract_statics(&ex, &u.audio, &kinds).map_err(|e| e.at(format!("{}/{}", u.speaker, u.id))))
        .collect::<Result<_>>()?;

    let test_jobs: Vec<(usize, &Utterance)> =
        conditions.iter().enumerate().flat_map(|(c, (_, utts))| utts.iter().map(move |u| (c, u))).collect();
    let test_statics: Vec<Statics> = test_jobs
        .par_iter()
        .map(|&(c, u)| {
            extract_statics(&ex, &u.audio, &kinds)
                .map_err(|e| cell_error(&conditions[c].0, &format!("{}/{}", u.speaker, u.id), e))
        })
        .collect::<Result<_>>()?;
    log::info!("extracted {} training and {} test feature sets", train_statics.len(), test_statics.len());

    let enroll_jobs: Vec<(usize, &String)> =
        (0..specs.len()).flat_map(|s| train.keys().map(move |spk| (s, spk))).collect();
    let trained: Vec<GmmModel> = enroll_jobs
        .par_iter()
        .map(|&(s, speaker)| {
            let spec = specs[s];
            let name = spec.to_string();
            let parts = train_utts
                .iter()
                .zip(&train_statics)
                .filter(|(u, _)| &u.speaker == speaker)
                .map(|(_, st)| assemble(spec, st, &fcfg).map(FeatureMatrix::into_values))
                .collect::<Result<Vec<_>>>()?;
            let em = cfg.em_config(derive_seed(seed, &["em", &name]));
            let (model, report) = enroll_speaker(speaker, &parts, &em)
                .map_err(|e| Error::Config(format!("enrolling {speaker} with {name}: {e}")))?;
            log::debug!("{name}/{speaker}: {} EM iterations, converged {}", report.iterations, report.converged);
            Ok(model)
        })
        .collect::<Result<_>>()?;
    let mut models: Vec<BTreeMap<String, &GmmModel>> = vec![BTreeMap::new(); specs.len()];
    for (&(s, speaker), m) in enroll_jobs.iter().zip(&trained) {
        models[s].insert(speaker.clone(), m);
    }
    let models = Arc::new(models);

    let mut offsets = Vec::with_capacity(conditions.len());
    let mut acc = 0;
    for (_, utts) in &conditions {
        offsets.push(acc);
        acc += utts.len();
    }
    let cell_jobs: Vec<(usize, usize)> =
        (0..conditions.len()).flat_map(|c| (0..specs.len()).map(move |s| (c, s))).collect();
    let decisions: Vec<CellDecisions> = cell_jobs
        .par_iter()
        .map(|&(c, s)| {
            let (condition, utts) = &conditions[c];
            let name = specs[s].to_string();
            let run = || -> Result<Vec<TrialOutcome>> {
                let trials = utts
                    .iter()
                    .enumerate()
                    .map(|(i, u)| {
                        Ok((u.speaker.clone(), assemble(specs[s], &test_statics[offsets[c] + i], &fcfg)?.into_values()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(run_trials(&models[s], &trials)?)
            };
            let outcomes = run().map_err(|e| cell_error(condition, &name, e))?;
            Ok(CellDecisions { condition: condition.clone(), feature: name, outcomes })
        })
        .collect::<Result<_>>()?;

    let meta = ReportMeta { config_hash: config_hash(&lock), seed, timestamp: None };
    let mut report = EvalReport::new(specs.iter().map(|s| s.to_string()).collect(), meta);
    for d in &decisions {
        report.insert(Cell::from_outcomes(d.condition.clone(), &d.feature, &d.outcomes)?)?;
    }
    Ok(GridResult { report, decisions, lock })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_decisions(path: &Path, outcomes: &[TrialOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::from(e).at(path))?;
    w.write_record(["speaker", "predicted", "margin"])?;
    for o in outcomes {
        w.write_record([o.speaker.as_str(), o.predicted.as_str(), &o.margin.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the reports, `config.lock`, per-cell decision logs and `run.toml`
/// (hash, seed and start time in Unix seconds).
pub fn write_outputs(out: &Path, result: &GridResult, started_unix: Option<u64>) -> Result<()> {
    let dir = out.join(DECISIONS_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write(&out.join(REPORT_CSV), &render_report(&result.report, ReportFormat::Csv))?;
    write(&out.join(REPORT_MD), &render_report(&result.report, ReportFormat::Markdown))?;
    write(&out.join(CONFIG_LOCK), &result.lock)?;
    for d in &result.decisions {
        write_decisions(&dir.join(decisions_file_name(&d.condition, &d.feature)), &d.outcomes)?;
    }
    let meta = &result.report.meta;
    let mut info = format!("config_hash = \"{}\"\nseed = {}\n", meta.config_hash, meta.seed);
    if let Some(t) = started_unix {
        info.push_str(&format!("started_unix = {t}\n"));
    }
    write(&out.join(RUN_INFO), &info)
}

fn read_decisions(path: &Path) -> Result<Vec<TrialOutcome>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::from(e).at(path))?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::from(e).at(path))?;
            let margin = rec.get(2).and_then(|m| m.parse().ok());
            match (rec.get(0), rec.get(1), margin) {
                (Some(s), Some(p), Some(margin)) => {
                    Ok(TrialOutcome { speaker: s.to_string(), predicted: p.to_string(), margin })
                }
                _ => Err(Error::format(path, format!("malformed row {rec:?}"))),
            }
        })
        .collect()
}

/// Rebuilds the report of a finished run from `config.lock` and the
/// decision logs.
pub fn rebuild_report(out: &Path) -> Result<EvalReport> {
    let lock_path = out.join(CONFIG_LOCK);
    let lock = fs::read_to_string(&lock_path).map_err(|e| Error::io(&lock_path, e))?;
    let cfg = ExperimentConfig::from_toml(&lock)?;
    let seed = cfg.seed.ok_or_else(|| Error::format(&lock_path, "no seed recorded"))?;
    let features: Vec<String> = cfg.feature_specs()?.iter().map(|s| s.to_string()).collect();
    let mut conditions = vec![Condition::Clean];
    for name in cfg.noise.keys() {
        for &snr_db in cfg.snr_grid()?.levels() {
            conditions.push(Condition::Noisy { noise: name.clone(), snr_db });
        }
    }
    let meta = ReportMeta { config_hash: config_hash(&lock), seed, timestamp: None };
    let mut report = EvalReport::new(features.clone(), meta);
    for condition in conditions {
        for feature in &features {
            let path = out.join(DECISIONS_DIR).join(decisions_file_name(&condition, feature));
            let outcomes = read_decisions(&path)?;
            let cell =
                Cell::from_outcomes(condition.clone(), feature, &outcomes).map_err(|e| Error::from(e).at(&path))?;
            report.insert(cell)?;
        }
    }
    Ok(report)
}
