//! Weak supervision over signal votes: decision vectors, the generative
//! label model, the downstream classifier and confidence buckets.

pub mod classifier;
pub mod label_model;
pub mod synthetic;
pub mod votes;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use classifier::{train_classifier, CorrectnessClassifier, Prediction, TrainConfig, TrainMode, Verdict};
pub use label_model::{fit_label_model, FitConfig, FitError, LabelModelParams};
pub use synthetic::{majority_score, SyntheticConfig, SyntheticCorpus};
pub use votes::{build_decision_vector, DecisionVector, Labeler, Vote, REGISTRY_LEN};

use crate::signals::SignalId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    High,
    Medium,
    Low,
}

impl Confidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::High => "high",
            Confidence::Medium => "medium",
            Confidence::Low => "low",
        }
    }
}

/// Buckets a set of labeler weights into tertiles.
///
/// A labeler's rank is the number of labelers with a strictly greater
/// weight, so equal weights share a bucket.
pub fn bucketize(weights: &[f64]) -> Vec<Confidence> {
    let n = weights.len();
    weights
        .iter()
        .map(|w| {
            let rank = weights.iter().filter(|o| *o > w).count();
            match rank * 3 / n {
                0 => Confidence::High,
                1 => Confidence::Medium,
                _ => Confidence::Low,
            }
        })
        .collect()
}

/// Per-signal confidence buckets from a fitted model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceTable(pub BTreeMap<SignalId, Confidence>);

impl ConfidenceTable {
    /// Every signal at `high`, used when no model has been fitted.
    pub fn uniform() -> Self {
        ConfidenceTable(SignalId::ALL.iter().map(|s| (*s, Confidence::High)).collect())
    }

    pub fn from_params(params: &LabelModelParams) -> Self {
        let present: Vec<(SignalId, usize)> = SignalId::ALL
            .iter()
            .filter_map(|s| params.index_of(&s.key()).map(|j| (*s, j)))
            .collect();
        let weights: Vec<f64> = present.iter().map(|(_, j)| params.incorrect_rate(*j)).collect();
        let buckets = bucketize(&weights);
        ConfidenceTable(present.into_iter().map(|(s, _)| s).zip(buckets).collect())
    }

    pub fn get(&self, signal: SignalId) -> Confidence {
        self.0.get(&signal).copied().unwrap_or(Confidence::Low)
    }
}

pub fn confidence_bucket(params: &LabelModelParams, signal: SignalId) -> Confidence {
    ConfidenceTable::from_params(params).get(signal)
}

/// Labeler names in registry order.
pub fn registry_names() -> Vec<String> {
    Labeler::registry().iter().map(|l| l.key()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tertiles() {
        assert_eq!(
            bucketize(&[0.9, 0.7, 0.5]),
            [Confidence::High, Confidence::Medium, Confidence::Low]
        );
        assert_eq!(bucketize(&[0.4; 5]), [Confidence::High; 5]);
        assert!(Confidence::High < Confidence::Low);
    }
}
