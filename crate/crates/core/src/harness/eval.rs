//! Detection, correction and per-signal evaluation.

use serde::{Deserialize, Serialize};

use super::dataset::Label;
use super::metrics::{auc, binary_metrics, mean_std, stratified_folds, BinaryMetrics};
use crate::aggregate::{
    fit_label_model, registry_names, train_classifier, DecisionVector, FitConfig, FitError, TrainConfig, TrainMode,
};
use crate::signals::{SignalId, SignalOutcome};

/// Everything detection evaluation needs about one query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub query_id: String,
    pub vector: DecisionVector,
    /// Ids of the signals that fired.
    pub flagged: Vec<SignalId>,
    /// Self-check probability of correctness, when run in probability mode.
    pub self_check_probability: Option<f64>,
    pub incorrect: bool,
}

impl DetectionRecord {
    pub fn from_outcomes(query_id: &str, outcomes: &[SignalOutcome], incorrect: bool) -> Self {
        DetectionRecord {
            query_id: query_id.to_string(),
            vector: crate::aggregate::build_decision_vector(query_id, outcomes),
            flagged: outcomes.iter().filter(|o| o.flagged).map(|o| o.signal_id).collect(),
            self_check_probability: outcomes
                .iter()
                .find(|o| o.signal_id == SignalId::LlmSelfCheck)
                .and_then(|o| o.probability),
            incorrect,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMode {
    Weak,
    Supervised,
    SelfBool,
    SelfProb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub size: usize,
    pub metrics: BinaryMetrics,
    pub auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub mode: DetectionMode,
    pub accuracy: f64,
    pub auc: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub std: BinaryMetrics,
    pub auc_std: Option<f64>,
    pub folds: Vec<FoldMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub folds: usize,
    pub seed: u64,
    pub label_model: FitConfig,
    pub classifier: TrainConfig,
    pub self_check_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 5,
            seed: 7,
            label_model: FitConfig::default(),
            classifier: TrainConfig::default(),
            self_check_threshold: 0.5,
        }
    }
}

/// Scores (higher means more likely incorrect) and verdicts for the test fold.
fn fold_predictions(
    train: &[&DetectionRecord],
    test: &[&DetectionRecord],
    mode: DetectionMode,
    cfg: &EvalConfig,
) -> Result<(Vec<bool>, Option<Vec<f64>>), FitError> {
    match mode {
        DetectionMode::Weak | DetectionMode::Supervised => {
            let vectors: Vec<DecisionVector> = train.iter().map(|r| r.vector.clone()).collect();
            let labels: Vec<f64> = if mode == DetectionMode::Weak {
                let names = if vectors[0].votes.len() == crate::aggregate::REGISTRY_LEN {
                    registry_names()
                } else {
                    (0..vectors[0].votes.len()).map(|i| format!("lf{i}")).collect()
                };
                let params = fit_label_model(&vectors, &names, &cfg.label_model)?;
                vectors.iter().map(|v| params.posterior(&v.votes)).collect()
            } else {
                train.iter().map(|r| if r.incorrect { 1.0 } else { 0.0 }).collect()
            };
            let tm = if mode == DetectionMode::Weak {
                TrainMode::Weak
            } else {
                TrainMode::Supervised
            };
            let clf = train_classifier(&vectors, &labels, tm, &cfg.classifier)?;
            let preds: Vec<_> = test.iter().map(|r| clf.predict(&r.vector)).collect();
            Ok((
                preds.iter().map(|p| p.verdict == crate::aggregate::Verdict::Incorrect).collect(),
                Some(preds.iter().map(|p| p.probability).collect()),
            ))
        }
        DetectionMode::SelfBool => Ok((
            test.iter().map(|r| r.flagged.contains(&SignalId::LlmSelfCheck)).collect(),
            None,
        )),
        DetectionMode::SelfProb => {
            let scores: Vec<f64> = test.iter().map(|r| 1.0 - r.self_check_probability.unwrap_or(0.5)).collect();
            let verdicts = scores.iter().map(|s| 1.0 - s < cfg.self_check_threshold).collect();
            Ok((verdicts, Some(scores)))
        }
    }
}

/// K-fold evaluation with "incorrect" as the positive class.
pub fn eval_detection(
    records: &[DetectionRecord],
    mode: DetectionMode,
    cfg: &EvalConfig,
) -> Result<DetectionSummary, FitError> {
    let gold: Vec<bool> = records.iter().map(|r| r.incorrect).collect();
    let k = cfg.folds.max(2);
    let assignment = stratified_folds(&gold, k, cfg.seed);
    let mut folds = Vec::new();
    for f in 0..k {
        let test: Vec<&DetectionRecord> = records.iter().zip(&assignment).filter(|(_, a)| **a == f).map(|(r, _)| r).collect();
        let train: Vec<&DetectionRecord> = records.iter().zip(&assignment).filter(|(_, a)| **a != f).map(|(r, _)| r).collect();
        if test.is_empty() {
            continue;
        }
        let (verdicts, scores) = fold_predictions(&train, &test, mode, cfg)?;
        let tg: Vec<bool> = test.iter().map(|r| r.incorrect).collect();
        folds.push(FoldMetrics {
            fold: f,
            size: test.len(),
            metrics: binary_metrics(&verdicts, &tg),
            auc: scores.and_then(|s| auc(&s, &tg)),
        });
    }
    let col = |get: fn(&BinaryMetrics) -> f64| mean_std(&folds.iter().map(|f| get(&f.metrics)).collect::<Vec<_>>());
    let (accuracy, acc_sd) = col(|m| m.accuracy);
    let (precision, p_sd) = col(|m| m.precision);
    let (recall, r_sd) = col(|m| m.recall);
    let (f1, f_sd) = col(|m| m.f1);
    let aucs: Vec<f64> = folds.iter().filter_map(|f| f.auc).collect();
    let (auc_mean, auc_sd) = if aucs.is_empty() || mode == DetectionMode::SelfBool {
        (None, None)
    } else {
        let (m, s) = mean_std(&aucs);
        (Some(m), Some(s))
    };
    Ok(DetectionSummary {
        mode,
        accuracy,
        auc: auc_mean,
        precision,
        recall,
        f1,
        std: BinaryMetrics {
            accuracy: acc_sd,
            precision: p_sd,
            recall: r_sd,
            f1: f_sd,
        },
        auc_std: auc_sd,
        folds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRecord {
    pub query_id: String,
    pub before: Label,
    pub after: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSummary {
    pub examples: usize,
    pub initial_acc: f64,
    pub final_acc: f64,
    pub delta_acc: f64,
    /// Accuracy change if only fixes counted (every query assumed incorrect).
    pub delta_acc_fix_only: f64,
    pub n_fix: usize,
    pub n_break: usize,
    pub n_net: i64,
    /// Accuracy over queries whose original prediction executes.
    pub initial_acc_valid: f64,
    pub final_acc_valid: f64,
}

pub fn eval_correction(records: &[CorrectionRecord]) -> CorrectionSummary {
    let n = records.len();
    let div = |a: usize, b: usize| if b > 0 { a as f64 / b as f64 } else { 0.0 };
    let before_ok = records.iter().filter(|r| !r.before.is_wrong()).count();
    let after_ok = records.iter().filter(|r| !r.after.is_wrong()).count();
    let n_fix = records.iter().filter(|r| r.before.is_wrong() && !r.after.is_wrong()).count();
    let n_break = records.iter().filter(|r| !r.before.is_wrong() && r.after.is_wrong()).count();
    let valid: Vec<&CorrectionRecord> = records.iter().filter(|r| r.before != Label::Invalid).collect();
    let n_net = n_fix as i64 - n_break as i64;
    CorrectionSummary {
        examples: n,
        initial_acc: div(before_ok, n),
        final_acc: div(after_ok, n),
        delta_acc: if n > 0 { n_net as f64 / n as f64 } else { 0.0 },
        delta_acc_fix_only: div(n_fix, n),
        n_fix,
        n_break,
        n_net,
        initial_acc_valid: div(valid.iter().filter(|r| !r.before.is_wrong()).count(), valid.len()),
        final_acc_valid: div(valid.iter().filter(|r| !r.after.is_wrong()).count(), valid.len()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalBenchRow {
    pub signal: SignalId,
    pub flagged: usize,
    pub precision: Option<f64>,
    pub recall: f64,
    /// Incorrect queries the signal flagged.
    pub n_w: usize,
    pub note: Option<String>,
}

pub const NO_QUERIES_DETECTED: &str = "No queries detected";

/// Per-signal precision and recall against gold correctness.
pub fn signal_microbench(records: &[DetectionRecord], signals: &[SignalId]) -> Vec<SignalBenchRow> {
    let total_incorrect = records.iter().filter(|r| r.incorrect).count();
    signals
        .iter()
        .map(|s| {
            let flagged: Vec<&DetectionRecord> = records.iter().filter(|r| r.flagged.contains(s)).collect();
            let n_w = flagged.iter().filter(|r| r.incorrect).count();
            SignalBenchRow {
                signal: *s,
                flagged: flagged.len(),
                precision: (!flagged.is_empty()).then(|| n_w as f64 / flagged.len() as f64),
                recall: if total_incorrect > 0 {
                    n_w as f64 / total_incorrect as f64
                } else {
                    0.0
                },
                n_w,
                note: flagged.is_empty().then(|| NO_QUERIES_DETECTED.to_string()),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::Vote;

    fn rec(id: usize, flags: &[SignalId], incorrect: bool) -> DetectionRecord {
        DetectionRecord {
            query_id: id.to_string(),
            vector: DecisionVector::new(id.to_string(), vec![Vote::Abstain]),
            flagged: flags.to_vec(),
            self_check_probability: None,
            incorrect,
        }
    }

    #[test]
    fn microbench_rows() {
        let recs = vec![
            rec(0, &[SignalId::AbnormalResult], true),
            rec(1, &[SignalId::AbnormalResult], false),
            rec(2, &[], true),
        ];
        let rows = signal_microbench(&recs, &[SignalId::AbnormalResult, SignalId::TableSimilarity]);
        assert_eq!(rows[0].n_w, 1);
        assert_eq!(rows[0].precision, Some(0.5));
        assert_eq!(rows[0].recall, 0.5);
        assert_eq!(rows[1].note.as_deref(), Some(NO_QUERIES_DETECTED));
        assert_eq!(rows[1].precision, None);
    }

    #[test]
    fn correction_identities() {
        let r = |b, a| CorrectionRecord {
            query_id: String::new(),
            before: b,
            after: a,
        };
        let s = eval_correction(&[
            r(Label::Incorrect, Label::Correct),
            r(Label::Correct, Label::Incorrect),
            r(Label::Invalid, Label::Correct),
            r(Label::Correct, Label::Correct),
        ]);
        assert_eq!((s.n_fix, s.n_break, s.n_net), (2, 1, 1));
        assert_eq!(s.delta_acc, 0.25);
        assert_eq!(s.initial_acc, 0.5);
        assert_eq!(s.final_acc, 0.75);
        assert!((s.initial_acc_valid - 2.0 / 3.0).abs() < 1e-12);
    }
}
