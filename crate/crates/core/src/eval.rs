//! Enrollment, closed-set identification and identification-rate tables.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::gmm::{score_utterance, train_em, EmConfig, GmmModel, TrainReport};
use crate::matrix::Matrix;
use crate::noise::Condition;
use crate::seed;

/// Trains one model per speaker on the concatenation of that speaker's
/// training matrices. Each speaker's EM seed is derived from `cfg.seed`
/// and the speaker id, so the result does not depend on map order.
pub fn enroll(
    train: &BTreeMap<String, Vec<Matrix>>,
    cfg: &EmConfig,
) -> Result<BTreeMap<String, (GmmModel, TrainReport)>> {
    if train.is_empty() {
        return Err(Error::NoTrainingData("no speakers to enroll".into()));
    }
    train.iter().map(|(speaker, parts)| Ok((speaker.clone(), enroll_speaker(speaker, parts, cfg)?))).collect()
}

/// Trains one speaker's model; the EM seed is `cfg.seed` mixed with the id.
pub fn enroll_speaker(speaker: &str, parts: &[Matrix], cfg: &EmConfig) -> Result<(GmmModel, TrainReport)> {
    let data = concat(parts).ok_or_else(|| Error::NoTrainingData(speaker.to_string()))??;
    let speaker_cfg = EmConfig { seed: seed::derive_seed(cfg.seed, &[speaker]), ..cfg.clone() };
    train_em(&data, &speaker_cfg).map_err(|e| match e {
        Error::InsufficientFrames { .. } | Error::Empty => Error::NoTrainingData(alloc::format!("{speaker}: {e}")),
        other => other,
    })
}

fn concat(parts: &[Matrix]) -> Option<Result<Matrix>> {
    let (first, rest) = parts.split_first()?;
    let mut data = first.clone();
    for p in rest {
        if let Err(e) = data.append_rows(p) {
            return Some(Err(e));
        }
    }
    Some(Ok(data))
}

/// Winning speaker and its lead over the runner-up in average log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub speaker: String,
    pub margin: f64,
}

/// Argmax of [`score_utterance`] over the enrolled models. Ties go to the
/// lexicographically smallest speaker id.
pub fn identify<M: core::borrow::Borrow<GmmModel>>(
    models: &BTreeMap<String, M>,
    features: &Matrix,
) -> Result<Decision> {
    if models.len() < 2 {
        return Err(Error::TooFewModels(models.len()));
    }
    let mut best: Option<(&str, f64)> = None;
    let mut second = f64::NEG_INFINITY;
    for (speaker, model) in models {
        let model = model.borrow();
        if model.dim() != features.cols() {
            return Err(Error::DimensionMismatch { expected: model.dim(), actual: features.cols() });
        }
        let score = score_utterance(model, features)?;
        if score.is_nan() {
            return Err(Error::NonFinite { stage: "utterance score", frame: 0 });
        }
        match best {
            Some((_, b)) if score <= b => second = second.max(score),
            Some((_, b)) => {
                second = b;
                best = Some((speaker, score));
            }
            None => best = Some((speaker, score)),
        }
    }
    let (speaker, score) = best.expect("at least two models");
    let margin = score - second;
    Ok(Decision {
        speaker: speaker.to_string(),
        // inf - inf when every model rejects the utterance outright.
        margin: if margin.is_nan() { 0.0 } else { margin },
    })
}

/// `100 · correct / total` over (predicted, true) pairs.
pub fn identification_rate<P: AsRef<str>, T: AsRef<str>>(decisions: &[(P, T)]) -> Result<f64> {
    if decisions.is_empty() {
        return Err(Error::Empty);
    }
    let correct = decisions.iter().filter(|(p, t)| p.as_ref() == t.as_ref()).count();
    Ok(rate(correct, decisions.len()))
}

fn rate(correct: usize, trials: usize) -> f64 {
    100.0 * correct as f64 / trials as f64
}

/// One identification trial of a grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub speaker: String,
    pub predicted: String,
    pub margin: f64,
}

/// Identifies every trial against `models`. Output follows input order.
pub fn run_trials<M: core::borrow::Borrow<GmmModel>>(
    models: &BTreeMap<String, M>,
    trials: &[(String, Matrix)],
) -> Result<Vec<TrialOutcome>> {
    trials
        .iter()
        .map(|(speaker, features)| {
            let d = identify(models, features)?;
            Ok(TrialOutcome { speaker: speaker.clone(), predicted: d.speaker, margin: d.margin })
        })
        .collect()
}

/// Identification result for one (condition, feature) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub condition: Condition,
    pub feature: String,
    pub trials: usize,
    pub correct: usize,
}

impl Cell {
    pub fn from_outcomes(condition: Condition, feature: &str, outcomes: &[TrialOutcome]) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Self {
            condition,
            feature: feature.to_string(),
            trials: outcomes.len(),
            correct: outcomes.iter().filter(|o| o.speaker == o.predicted).count(),
        })
    }

    pub fn ir(&self) -> f64 {
        rate(self.correct, self.trials)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportMeta {
    pub config_hash: String,
    pub seed: u64,
    pub timestamp: Option<String>,
}

/// Condition × feature grid of identification rates.
///
/// Rows keep insertion order of conditions, columns keep the feature order
/// given at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    features: Vec<String>,
    conditions: Vec<Condition>,
    cells: Vec<Cell>,
    pub meta: ReportMeta,
}

impl EvalReport {
    pub fn new(features: Vec<String>, meta: ReportMeta) -> Self {
        Self { features, conditions: Vec::new(), cells: Vec::new(), meta }
    }

    /// Adds a cell, registering its condition as a new row when unseen.
    pub fn insert(&mut self, cell: Cell) -> Result<()> {
        if !self.features.contains(&cell.feature) {
            return Err(Error::InvalidArgument(alloc::format!("feature `{}` is not a report column", cell.feature)));
        }
        if cell.correct > cell.trials || cell.trials == 0 {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} correct out of {} trials",
                cell.correct,
                cell.trials
            )));
        }
        if self.cell(&cell.condition, &cell.feature).is_some() {
            return Err(Error::InvalidArgument(alloc::format!("duplicate cell {} / {}", cell.condition, cell.feature)));
        }
        if !self.conditions.contains(&cell.condition) {
            self.conditions.push(cell.condition.clone());
        }
        self.cells.push(cell);
        Ok(())
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, condition: &Condition, feature: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| &c.condition == condition && c.feature == feature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

fn csv_field(out: &mut String, s: &str) {
    if s.contains([',', '"', '\n', '\r']) {
        out.push('"');
        out.push_str(&s.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(s);
    }
}

/// Renders one row per condition and one column per feature with
/// two-decimal percentages. Missing cells are left blank. Markdown bolds the
/// largest value in each row (every tied value).
pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    let mut out = String::new();
    let values = |cond: &Condition| -> Vec<Option<String>> {
        report.features.iter().map(|f| report.cell(cond, f).map(|c| alloc::format!("{:.2}", c.ir()))).collect()
    };
    match format {
        ReportFormat::Csv => {
            out.push_str("noise,snr_db");
            for f in &report.features {
                out.push(',');
                csv_field(&mut out, f);
            }
            out.push('\n');
            for cond in &report.conditions {
                csv_field(&mut out, cond.noise_name());
                out.push(',');
                csv_field(&mut out, &cond.snr_label());
                for v in values(cond) {
                    out.push(',');
                    out.push_str(v.as_deref().unwrap_or(""));
                }
                out.push('\n');
            }
        }
        ReportFormat::Markdown => {
            out.push_str("| noise | SNR (dB) |");
            for f in &report.features {
                let _ = write!(out, " {f} |");
            }
            out.push_str("\n|---|---:|");
            for _ in &report.features {
                out.push_str("---:|");
            }
            out.push('\n');
            for cond in &report.conditions {
                let vals = values(cond);
                // Compare the rendered values so that bolding agrees with what is shown.
                let max = vals.iter().flatten().filter_map(|v| v.parse::<f64>().ok()).fold(f64::NEG_INFINITY, f64::max);
                let _ = write!(out, "| {} | {} |", cond.noise_name(), cond.snr_label());
                for v in vals {
                    match v {
                        Some(v) if v.parse::<f64>().ok() == Some(max) => {
                            let _ = write!(out, " **{v}** |");
                        }
                        Some(v) => {
                            let _ = write!(out, " {v} |");
                        }
                        None => out.push_str("  |"),
                    }
                }
                out.push('\n');
            }
            let trials: Vec<usize> = report.cells.iter().map(|c| c.trials).collect();
            let _ = write!(out, "\nIdentification rate (%). seed {}", report.meta.seed);
            if !report.meta.config_hash.is_empty() {
                let _ = write!(out, ", config {}", report.meta.config_hash);
            }
            match (trials.iter().min(), trials.iter().max()) {
                (Some(lo), Some(hi)) if lo == hi => {
                    let _ = write!(out, ", {lo} trials per cell");
                }
                (Some(lo), Some(hi)) => {
                    let _ = write!(out, ", {lo}-{hi} trials per cell");
                }
                _ => {}
            }
            out.push_str(".\n");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gaussian;
    use alloc::vec;

    fn blob(center: f64, n: usize, seed: u64) -> Matrix {
        let mut rng = seed::rng(seed);
        Matrix::from_rows(2, (0..n).map(|_| [center + gaussian(&mut rng), -center + gaussian(&mut rng)])).unwrap()
    }

    fn unit_model(mean: f64) -> GmmModel {
        GmmModel::new(vec![1.0], Matrix::from_rows(1, [[mean]]).unwrap(), Matrix::from_rows(1, [[1.0]]).unwrap())
            .unwrap()
    }

    #[test]
    fn rates() {
        let all: Vec<(&str, &str)> = (0..62).map(|_| ("a", "a")).collect();
        assert_eq!(identification_rate(&all).unwrap(), 100.0);
        let mut one = vec![("b", "a"); 61];
        one.push(("a", "a"));
        assert!((identification_rate(&one).unwrap() - 1.6129).abs() < 1e-4);
        let mut most = vec![("a", "a"); 45];
        most.extend(vec![("b", "a"); 17]);
        assert_eq!(alloc::format!("{:.2}", identification_rate(&most).unwrap()), "72.58");
        let none: [(&str, &str); 0] = [];
        assert_eq!(identification_rate(&none), Err(Error::Empty));
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let mut models = BTreeMap::new();
        models.insert("spk2".to_string(), unit_model(0.0));
        models.insert("spk1".to_string(), unit_model(0.0));
        let d = identify(&models, &Matrix::from_rows(1, [[0.3]]).unwrap()).unwrap();
        assert_eq!(d, Decision { speaker: "spk1".into(), margin: 0.0 });
    }

    #[test]
    fn identify_checks() {
        let mut models = BTreeMap::new();
        models.insert("a".to_string(), unit_model(0.0));
        let x = Matrix::from_rows(1, [[0.0]]).unwrap();
        assert_eq!(identify(&models, &x), Err(Error::TooFewModels(1)));
        models.insert("b".to_string(), unit_model(3.0));
        assert_eq!(identify(&models, &Matrix::zeros(1, 2)), Err(Error::DimensionMismatch { expected: 1, actual: 2 }));
        let d = identify(&models, &Matrix::from_rows(1, [[2.9]]).unwrap()).unwrap();
        assert_eq!(d.speaker, "b");
        // 0.5 (2.9² - 0.1²) = 4.2
        assert!((d.margin - 4.2).abs() < 1e-12);
    }

    #[test]
    fn enroll_and_identify_own_data() {
        let mut train = BTreeMap::new();
        for (i, c) in [-4.0, 0.0, 4.0].iter().enumerate() {
            train.insert(alloc::format!("s{i}"), vec![blob(*c, 60, i as u64), blob(*c, 60, 10 + i as u64)]);
        }
        let cfg = EmConfig { components: 2, seed: 7, ..EmConfig::default() };
        let models = enroll(&train, &cfg).unwrap();
        assert_eq!(models.len(), 3);
        assert_eq!(models, enroll(&train, &cfg).unwrap());
        let models: BTreeMap<String, GmmModel> = models.into_iter().map(|(k, (m, _))| (k, m)).collect();
        for (speaker, parts) in &train {
            let d = identify(&models, &parts[0]).unwrap();
            assert_eq!(&d.speaker, speaker);
            assert!(d.margin > 0.0);
        }
        let few: BTreeMap<String, Vec<Matrix>> = [("x".to_string(), vec![blob(0.0, 5, 1)])].into();
        assert!(matches!(enroll(&few, &cfg), Err(Error::NoTrainingData(_))));
        let nothing: BTreeMap<String, Vec<Matrix>> = [("x".to_string(), vec![])].into();
        assert!(matches!(enroll(&nothing, &cfg), Err(Error::NoTrainingData(_))));
    }

    fn sample_report() -> EvalReport {
        let mut r = EvalReport::new(vec!["mfcc".into(), "gfcc".into()], ReportMeta { seed: 3, ..Default::default() });
        let noisy = Condition::Noisy { noise: "white".into(), snr_db: -6.0 };
        for (cond, feat, correct) in [
            (Condition::Clean, "mfcc", 62),
            (Condition::Clean, "gfcc", 62),
            (noisy.clone(), "mfcc", 3),
            (noisy, "gfcc", 45),
        ] {
            r.insert(Cell { condition: cond, feature: feat.into(), trials: 62, correct }).unwrap();
        }
        r
    }

    #[test]
    fn csv_layout() {
        let csv = render_report(&sample_report(), ReportFormat::Csv);
        assert_eq!(csv, "noise,snr_db,mfcc,gfcc\nclean,clean,100.00,100.00\nwhite,-6,4.84,72.58\n");
    }

    #[test]
    fn markdown_bolds_row_max() {
        let md = render_report(&sample_report(), ReportFormat::Markdown);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[2], "| clean | clean | **100.00** | **100.00** |");
        assert_eq!(lines[3], "| white | -6 | 4.84 | **72.58** |");
    }

    #[test]
    fn single_cell_and_quoting() {
        let mut r = EvalReport::new(vec!["a,b".into()], ReportMeta::default());
        r.insert(Cell { condition: Condition::Clean, feature: "a,b".into(), trials: 3, correct: 1 }).unwrap();
        let csv = render_report(&r, ReportFormat::Csv);
        assert_eq!(csv, "noise,snr_db,\"a,b\"\nclean,clean,33.33\n");
        assert!(r.insert(Cell { condition: Condition::Clean, feature: "a,b".into(), trials: 3, correct: 1 }).is_err());
        assert!(r.insert(Cell { condition: Condition::Clean, feature: "zz".into(), trials: 3, correct: 1 }).is_err());
    }
}
