//! Corpus directories: `<dir>/<speaker>/<utterance>.wav` plus `manifest.csv`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cepstra_core::audio::resample;
use cepstra_core::Utterance;

use crate::error::{Error, Result};
use crate::wav::{load_wav, save_wav};

pub const MANIFEST: &str = "manifest.csv";
const MANIFEST_HEADER: [&str; 5] = ["speaker", "utterance", "path", "samples", "sample_rate"];

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes each utterance under `relative(u)` and lists it in the manifest.
pub fn write_utterances(dir: &Path, utts: &[Utterance], relative: impl Fn(&Utterance) -> PathBuf) -> Result<()> {
    create_dir(dir)?;
    let manifest = dir.join(MANIFEST);
    let mut w = csv::Writer::from_path(&manifest).map_err(|e| Error::from(e).at(&manifest))?;
    w.write_record(MANIFEST_HEADER)?;
    for u in utts {
        let rel = relative(u);
        let path = dir.join(&rel);
        if let Some(parent) = path.parent() {
            create_dir(parent)?;
        }
        save_wav(&u.audio, &path)?;
        let rel = rel.to_string_lossy().replace('\\', "/");
        w.write_record([
            u.speaker.as_str(),
            u.id.as_str(),
            &rel,
            &u.audio.len().to_string(),
            &u.audio.sample_rate().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&manifest, e))
}

/// Nested layout `<speaker>/<utterance>.wav`.
pub fn write_corpus(dir: &Path, utts: &[Utterance]) -> Result<()> {
    write_utterances(dir, utts, |u| Path::new(&u.speaker).join(format!("{}.wav", u.id)))
}

fn is_wav(p: &Path) -> bool {
    p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

/// `(speaker, utterance, path)` for every recording under `dir`.
///
/// The manifest is authoritative when present. Otherwise each subdirectory
/// is a speaker, and loose files are named `<speaker>_<utterance>.wav`.
pub fn list_corpus(dir: &Path) -> Result<Vec<(String, String, PathBuf)>> {
    let manifest = dir.join(MANIFEST);
    if manifest.is_file() {
        let mut r = csv::Reader::from_path(&manifest).map_err(|e| Error::from(e).at(&manifest))?;
        let mut out = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::from(e).at(&manifest))?;
            if rec.len() < 3 {
                return Err(Error::format(
                    &manifest,
                    format!("row {:?} has fewer than 3 fields", rec.position().map(|p| p.line())),
                ));
            }
            out.push((rec[0].to_string(), rec[1].to_string(), dir.join(&rec[2])));
        }
        return Ok(out);
    }
    let mut out = Vec::new();
    for entry in sorted_entries(dir)? {
        if entry.is_dir() {
            let speaker = entry.file_name().unwrap_or_default().to_string_lossy().into_owned();
            for f in sorted_entries(&entry)?.into_iter().filter(|p| is_wav(p)) {
                let id = f.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                out.push((speaker.clone(), id, f));
            }
        } else if is_wav(&entry) {
            let stem = entry.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let (speaker, id) = stem
                .split_once('_')
                .ok_or_else(|| Error::format(&entry, "loose recordings must be named <speaker>_<utterance>.wav"))?;
            out.push((speaker.to_string(), id.to_string(), entry.clone()));
        }
    }
    if out.is_empty() {
        return Err(Error::format(dir, "no WAV recordings found"));
    }
    Ok(out)
}

/// Loads every recording, resampling to `sample_rate`.
pub fn load_corpus(dir: &Path, sample_rate: u32) -> Result<Vec<Utterance>> {
    list_corpus(dir)?
        .into_iter()
        .map(|(speaker, id, path)| {
            let audio = load_wav(&path)?;
            let audio = if audio.sample_rate() == sample_rate {
                audio
            } else {
                log::info!("{}: resampling {} Hz to {sample_rate} Hz", path.display(), audio.sample_rate());
                resample(&audio, sample_rate).map_err(|e| Error::from(e).at(&path))?
            };
            Ok(Utterance { speaker, id, audio })
        })
        .collect()
}

/// Per-speaker utterances in corpus order.
pub fn group_by_speaker(utts: Vec<Utterance>) -> BTreeMap<String, Vec<Utterance>> {
    let mut out: BTreeMap<String, Vec<Utterance>> = BTreeMap::new();
    for u in utts {
        out.entry(u.speaker.clone()).or_default().push(u);
    }
    out
}

pub type SpeakerSets = BTreeMap<String, Vec<Utterance>>;

/// The first `train_per_speaker` utterances of each speaker train, the rest test.
pub fn split_corpus(utts: Vec<Utterance>, train_per_speaker: usize) -> Result<(SpeakerSets, SpeakerSets)> {
    if train_per_speaker == 0 {
        return Err(Error::Config("train_per_speaker must be at least 1".into()));
    }
    let mut train = BTreeMap::new();
    let mut test = BTreeMap::new();
    for (speaker, mut list) in group_by_speaker(utts) {
        if list.len() <= train_per_speaker {
            return Err(Error::Config(format!(
                "speaker {speaker} has {} utterances; {train_per_speaker} for training leaves none to test",
                list.len()
            )));
        }
        let rest = list.split_off(train_per_speaker);
        train.insert(speaker.clone(), list);
        test.insert(speaker, rest);
    }
    if train.len() < 2 {
        return Err(Error::Config(format!("identification needs at least 2 speakers, corpus has {}", train.len())));
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cepstra_core::synth::{synth_corpus, CorpusSpec};

    fn small() -> Vec<Utterance> {
        let spec = CorpusSpec { n_speakers: 3, utterances_per_speaker: 3, duration_s: 0.2, sample_rate: 16000 };
        synth_corpus(&spec, 5).unwrap()
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let utts = small();
        write_corpus(dir.path(), &utts).unwrap();
        assert!(dir.path().join("spk0/utt1.wav").is_file());
        let back = load_corpus(dir.path(), 16000).unwrap();
        assert_eq!(back.len(), 9);
        for (a, b) in utts.iter().zip(&back) {
            assert_eq!((&a.speaker, &a.id), (&b.speaker, &b.id));
            assert!(a.audio.samples().iter().zip(b.audio.samples()).all(|(x, y)| (x - y).abs() <= 1.0 / 32768.0));
        }
        // Same listing without the manifest.
        fs::remove_file(dir.path().join(MANIFEST)).unwrap();
        let scanned: Vec<_> = list_corpus(dir.path()).unwrap().into_iter().map(|(s, u, _)| (s, u)).collect();
        let want: Vec<_> = utts.iter().map(|u| (u.speaker.clone(), u.id.clone())).collect();
        assert_eq!(scanned, want);
    }

    #[test]
    fn splits() {
        let (train, test) = split_corpus(small(), 2).unwrap();
        assert_eq!(train["spk1"].iter().map(|u| u.id.as_str()).collect::<Vec<_>>(), ["utt0", "utt1"]);
        assert_eq!(test["spk1"].iter().map(|u| u.id.as_str()).collect::<Vec<_>>(), ["utt2"]);
        assert!(split_corpus(small(), 3).is_err());
        assert!(split_corpus(small(), 0).is_err());
    }
}
