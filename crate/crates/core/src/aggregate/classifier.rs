use serde::{Deserialize, Serialize};

use super::label_model::{sigmoid, FitError};
use super::votes::{DecisionVector, Vote};

const MIN_EXAMPLES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Soft labels from the label model posterior.
    Weak,
    /// Gold 0/1 correctness labels.
    Supervised,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub l2: f64,
    pub learning_rate: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2: 1e-3,
            learning_rate: 1.0,
            max_iter: 5000,
            tol: 1e-7,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Incorrect,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub verdict: Verdict,
    pub probability: f64,
}

/// Logistic regression over one-hot (labeler, vote) features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessClassifier {
    pub version: u32,
    pub mode: TrainMode,
    pub labelers: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
}

fn features(votes: &[Vote], labelers: usize) -> impl Iterator<Item = usize> + '_ {
    votes.iter().take(labelers).enumerate().map(|(j, v)| 3 * j + v.index())
}

impl CorrectnessClassifier {
    pub fn probability(&self, votes: &[Vote]) -> f64 {
        let z: f64 = self.bias + features(votes, self.labelers).map(|f| self.weights[f]).sum::<f64>();
        sigmoid(z)
    }

    pub fn predict(&self, v: &DecisionVector) -> Prediction {
        let probability = self.probability(&v.votes);
        let verdict = if probability >= self.threshold {
            Verdict::Incorrect
        } else {
            Verdict::Correct
        };
        Prediction { verdict, probability }
    }
}

/// Trains on `labels` = P(incorrect) per vector (0/1 in supervised mode).
pub fn train_classifier(
    vectors: &[DecisionVector],
    labels: &[f64],
    mode: TrainMode,
    config: &TrainConfig,
) -> Result<CorrectnessClassifier, FitError> {
    if vectors.len() != labels.len() {
        return Err(FitError::Degenerate(format!(
            "{} vectors but {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    if vectors.len() < MIN_EXAMPLES {
        return Err(FitError::TooFew(vectors.len()));
    }
    if mode == TrainMode::Supervised {
        let pos = labels.iter().filter(|l| **l >= 0.5).count();
        if pos == 0 || pos == labels.len() {
            return Err(FitError::Degenerate("gold labels contain a single class".into()));
        }
    }
    let m = vectors[0].votes.len();
    let dim = 3 * m;
    let n = vectors.len() as f64;
    let rows: Vec<Vec<usize>> = vectors.iter().map(|v| features(&v.votes, m).collect()).collect();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut grad = vec![0.0; dim];
    for _ in 0..config.max_iter {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (row, y) in rows.iter().zip(labels) {
            let p = sigmoid(b + row.iter().map(|f| w[*f]).sum::<f64>());
            let d = (p - y) / n;
            gb += d;
            for f in row {
                grad[*f] += d;
            }
        }
        let mut norm = gb * gb;
        for (g, wi) in grad.iter_mut().zip(&w) {
            *g += config.l2 * wi;
            norm += *g * *g;
        }
        b -= config.learning_rate * gb;
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= config.learning_rate * g;
        }
        if norm.sqrt() < config.tol {
            break;
        }
    }
    Ok(CorrectnessClassifier {
        version: 1,
        mode,
        labelers: m,
        weights: w,
        bias: b,
        threshold: 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_votes_fit_exactly() {
        let mut vs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..40 {
            let bad = i % 3 == 0;
            let v = if bad { Vote::Incorrect } else { Vote::Abstain };
            vs.push(DecisionVector::new(i.to_string(), vec![v, Vote::Abstain]));
            ys.push(if bad { 1.0 } else { 0.0 });
        }
        let c = train_classifier(&vs, &ys, TrainMode::Supervised, &TrainConfig::default()).unwrap();
        for (v, y) in vs.iter().zip(&ys) {
            let incorrect = c.predict(v).verdict == Verdict::Incorrect;
            assert_eq!(incorrect, *y == 1.0);
        }
        let single = vec![0.0; 40];
        assert!(train_classifier(&vs, &single, TrainMode::Supervised, &TrainConfig::default()).is_err());
    }

    #[test]
    fn threshold_is_inclusive() {
        let c = CorrectnessClassifier {
            version: 1,
            mode: TrainMode::Weak,
            labelers: 1,
            weights: vec![0.0; 3],
            bias: 0.0,
            threshold: 0.5,
        };
        let p = c.predict(&DecisionVector::new("q", vec![Vote::Abstain]));
        assert_eq!(p.probability, 0.5);
        assert_eq!(p.verdict, Verdict::Incorrect);
    }
}
