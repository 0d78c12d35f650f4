use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cepstra::corpus::MANIFEST;
use cepstra::feature_io::load_features;
use cepstra::wav::load_wav;
use cepstra_core::noise::measure_samples_db;

fn cepstra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cepstra")).args(args).output().expect("spawn cepstra")
}

fn ok(args: &[&str]) -> String {
    let out = cepstra(args);
    assert!(out.status.success(), "cepstra {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == ext) {
                found.push(p);
            }
        }
    }
    found.sort();
    found
}

fn synth(dir: &Path, spec: &str) -> PathBuf {
    let out = dir.join("corpus");
    ok(&["synth", "--spec", spec, "--seed", "7", "--out", s(&out)]);
    out
}

#[test]
fn synth_writes_corpus_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "10x3:2.0");
    assert_eq!(files_with_ext(&corpus, "wav").len(), 30);
    let manifest = std::fs::read_to_string(corpus.join(MANIFEST)).unwrap();
    assert_eq!(manifest.lines().count(), 31);

    let again = dir.path().join("again");
    ok(&["synth", "--spec", "10x3:2.0", "--seed", "7", "--out", s(&again)]);
    assert_eq!(manifest, std::fs::read_to_string(again.join(MANIFEST)).unwrap());
    let a = files_with_ext(&corpus, "wav");
    let b = files_with_ext(&again, "wav");
    assert_eq!(std::fs::read(&a[4]).unwrap(), std::fs::read(&b[4]).unwrap());

    let audio = load_wav(&a[0]).unwrap();
    assert_eq!(audio.sample_rate(), 16000);
    assert_eq!(audio.len(), 32000);
}

#[test]
fn synth_without_seed_reports_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = cepstra(&["synth", "--spec", "2x1:0.5", "--out", s(&dir.path().join("c"))]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("seed: "), "{}", stderr(&out));
}

#[test]
fn synth_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = cepstra(&["synth", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--spec"));

    for bad in ["10by3", "1x3", "10x0", "10x3:-1"] {
        let out = cepstra(&["synth", "--spec", bad, "--out", s(dir.path())]);
        assert_eq!(out.status.code(), Some(2), "{bad}: {}", stderr(&out));
    }
}

#[test]
fn mix_creates_one_tree_per_snr_at_the_requested_level() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "3x2:1.0");
    let out = dir.path().join("noisy");
    ok(&[
        "mix",
        "--speech-dir",
        s(&corpus),
        "--noise",
        "synth:white",
        "--snr",
        "-6,0,6,12,18",
        "--seed",
        "3",
        "--out",
        s(&out),
    ]);
    let white = out.join("white");
    let mut levels: Vec<String> = std::fs::read_dir(&white)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with("dB"))
        .collect();
    levels.sort();
    assert_eq!(levels, ["-6dB", "0dB", "12dB", "18dB", "6dB"]);
    for level in &levels {
        assert_eq!(files_with_ext(&white.join(level), "wav").len(), 6);
    }

    // Clean and noisy files share the 16-bit grid, so the level survives quantization to ~0.01 dB.
    let clean = load_wav(corpus.join("spk0").join("utt0.wav")).unwrap();
    let noisy = load_wav(white.join("6dB").join("spk0_utt0.wav")).unwrap();
    let scale = noisy.samples().iter().zip(clean.samples()).map(|(n, c)| n * c).sum::<f64>()
        / noisy.samples().iter().zip(clean.samples()).map(|(_, c)| c * c).sum::<f64>();
    let speech: Vec<f64> = clean.samples().iter().map(|c| c * scale).collect();
    let residual: Vec<f64> = noisy.samples().iter().zip(&speech).map(|(n, c)| n - c).collect();
    let snr = measure_samples_db(&speech).unwrap().db().unwrap() - measure_samples_db(&residual).unwrap().db().unwrap();
    assert!((snr - 6.0).abs() < 0.1, "{snr}");
}

#[test]
fn mix_rejects_non_numeric_snr() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "2x1:0.5");
    let out = cepstra(&[
        "mix",
        "--speech-dir",
        s(&corpus),
        "--noise",
        "synth:white",
        "--snr",
        "0,loud",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn extract_rejects_unknown_feature_and_lists_valid_ones() {
    let dir = tempfile::tempdir().unwrap();
    let out = cepstra(&["extract", "--in", s(dir.path()), "--feature", "bogus", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    for name in ["mfcc", "gfcc", "pncc", "plp", "lsf", "gfcc+pncc"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn extract_train_identify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "10x3:2.0");

    let feats = dir.path().join("gfcc");
    ok(&["extract", "--in", s(&corpus), "--feature", "gfcc", "--out", s(&feats)]);
    let files = files_with_ext(&feats, "cbfm");
    assert_eq!(files.len(), 30);
    let m = load_features(&files[0]).unwrap();
    assert_eq!(m.dim(), 39);
    assert_eq!(m.n_frames(), 198);

    let models = dir.path().join("models");
    let summary = ok(&[
        "train",
        "--features",
        s(&feats),
        "--components",
        "16",
        "--utterances",
        "2",
        "--seed",
        "1",
        "--out",
        s(&models),
    ]);
    assert_eq!(files_with_ext(&models, "cbgm").len(), 10);
    assert_eq!(summary.lines().count(), 11, "{summary}");

    // Third utterances were held out of training.
    let held_out = dir.path().join("held_out");
    for f in files.iter().filter(|f| f.file_stem().unwrap() == "utt2") {
        let spk = f.parent().unwrap().file_name().unwrap();
        std::fs::create_dir_all(held_out.join(spk)).unwrap();
        std::fs::copy(f, held_out.join(spk).join("utt2.cbfm")).unwrap();
    }
    let out = cepstra(&["identify", "--models", s(&models), "--features", s(&held_out)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().next(), Some("file,speaker,predicted,margin"));
    assert_eq!(table.lines().count(), 11);
    let correct = table
        .lines()
        .skip(1)
        .filter(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            cols[1] == cols[2]
        })
        .count();
    assert!(correct >= 8, "{table}");
}

#[test]
fn extract_csv_has_header_and_39_columns() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "2x1:1.0");
    let out = dir.path().join("csv");
    ok(&["extract", "--in", s(&corpus), "--feature", "mfcc", "--out", s(&out), "--csv"]);
    let files = files_with_ext(&out, "csv");
    assert_eq!(files.len(), 2);
    let text = std::fs::read_to_string(&files[0]).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 39);
    assert_eq!((header[0], header[13], header[26]), ("c0", "d0", "dd0"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 98);
    assert!(rows.iter().all(|r| r.split(',').count() == 39));
}

#[test]
fn identify_reports_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "3x2:1.0");
    let lsf = dir.path().join("lsf");
    let mfcc = dir.path().join("mfcc");
    ok(&["extract", "--in", s(&corpus), "--feature", "lsf", "--out", s(&lsf)]);
    ok(&["extract", "--in", s(&corpus), "--feature", "mfcc", "--out", s(&mfcc)]);
    let models = dir.path().join("models");
    ok(&["train", "--features", s(&lsf), "--components", "4", "--seed", "1", "--out", s(&models)]);
    let out = cepstra(&["identify", "--models", s(&models), "--features", s(&mfcc)]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("39") && err.contains("10"), "{err}");
}

const SMALL_CONFIG: &str = r#"
seed = 5
components = 4
features = ["mfcc", "lsf"]

[corpus]
synth = { speakers = 4, utterances = 3, duration_s = 1.0 }

[noise]
white = "synth:white"
babble = "synth:babble"

[snr]
levels = [0, 12]
"#;

#[test]
fn evaluate_is_independent_of_jobs_and_report_rebuilds() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let table = ok(&["evaluate", s(&config), "--out", s(&a), "--jobs", "1"]);
    ok(&["evaluate", s(&config), "--out", s(&b), "--jobs", "3"]);
    let csv = std::fs::read(a.join("report.csv")).unwrap();
    assert_eq!(csv, std::fs::read(b.join("report.csv")).unwrap());
    assert_eq!(table, std::fs::read_to_string(a.join("report.md")).unwrap());
    assert_eq!(String::from_utf8_lossy(&csv).lines().count(), 1 + 1 + 2 * 2);

    assert_eq!(ok(&["report", "--run", s(&a), "--format", "csv"]).as_bytes(), &csv[..]);
    assert_eq!(ok(&["report", "--run", s(&a)]), table);
    assert_eq!(files_with_ext(&a.join("decisions"), "csv").len(), 5 * 2);
}

#[test]
fn evaluate_demo_config_covers_every_condition() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/demo.toml");
    let out = dir.path().join("demo");
    let table = ok(&["evaluate", s(&config), "--out", s(&out)]);
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 1 + 3 * 5);
    assert!(rows[0].starts_with("clean,clean,"));
    for noise in ["babble", "pink", "white"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(&format!("{noise},"))).count(), 5);
    }
    assert!(table.contains("| clean | clean |"));
    assert!(table.contains("seed 20240611"));
}

#[test]
fn evaluate_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "features = [\"mfcc\"]\ncolour = \"blue\"\n").unwrap();
    let out = cepstra(&["evaluate", s(&config), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn every_subcommand_has_help() {
    for cmd in ["synth", "mix", "extract", "train", "identify", "evaluate", "report"] {
        let out = cepstra(&[cmd, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
    }
    assert_eq!(cepstra(&["--help"]).status.code(), Some(0));
}
