//! Corpora sampled from a planted conditionally independent voting model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::label_model::LabelModelParams;
use super::votes::{DecisionVector, Vote};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    /// P(vote matches the true label | vote cast), per labeler.
    pub accuracies: Vec<f64>,
    /// P(vote cast), per labeler.
    pub coverages: Vec<f64>,
    pub prior: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let k = 8;
        SyntheticConfig {
            accuracies: (0..k).map(|i| 0.6 + 0.3 * i as f64 / (k - 1) as f64).collect(),
            coverages: vec![0.8, 0.75, 0.7, 0.6, 0.5, 0.4, 0.35, 0.3],
            prior: 0.4,
            n: 2000,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub vectors: Vec<DecisionVector>,
    /// True when the query is incorrect.
    pub gold: Vec<bool>,
    pub labelers: Vec<String>,
    /// The generating model in fitted-parameter form.
    pub planted: LabelModelParams,
}

impl SyntheticConfig {
    pub fn planted(&self) -> LabelModelParams {
        let emissions = self
            .accuracies
            .iter()
            .zip(&self.coverages)
            .map(|(&a, &b)| [[b * (1.0 - a), b * a, 1.0 - b], [b * a, b * (1.0 - a), 1.0 - b]])
            .collect();
        LabelModelParams {
            version: 1,
            labelers: self.names(),
            class_prior: self.prior,
            emissions,
            log_likelihood: Vec::new(),
            iterations: 0,
        }
    }

    fn names(&self) -> Vec<String> {
        (0..self.accuracies.len()).map(|i| format!("lf{i}")).collect()
    }

    pub fn generate(&self) -> SyntheticCorpus {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut vectors = Vec::with_capacity(self.n);
        let mut gold = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let incorrect = rng.gen_bool(self.prior);
            let votes = self
                .accuracies
                .iter()
                .zip(&self.coverages)
                .map(|(&a, &b)| {
                    if !rng.gen_bool(b) {
                        return Vote::Abstain;
                    }
                    let right = rng.gen_bool(a);
                    match (incorrect, right) {
                        (true, true) | (false, false) => Vote::Incorrect,
                        _ => Vote::Correct,
                    }
                })
                .collect();
            vectors.push(DecisionVector::new(format!("s{i}"), votes));
            gold.push(incorrect);
        }
        SyntheticCorpus {
            vectors,
            gold,
            labelers: self.names(),
            planted: self.planted(),
        }
    }
}

/// Majority-vote score: incorrect votes minus correct votes.
pub fn majority_score(votes: &[Vote]) -> f64 {
    votes
        .iter()
        .map(|v| match v {
            Vote::Incorrect => 1.0,
            Vote::Correct => -1.0,
            Vote::Abstain => 0.0,
        })
        .sum()
}
