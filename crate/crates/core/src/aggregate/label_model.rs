use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::votes::{DecisionVector, Vote};

const MIN_VECTORS: usize = 20;
const PRIOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {MIN_VECTORS} decision vectors, got {0}")]
    TooFew(usize),
    #[error("every vote in the corpus abstains")]
    AllAbstain,
    #[error("decision vectors have inconsistent lengths ({0} vs {1})")]
    Ragged(usize, usize),
    #[error("labeler name count {0} does not match vector length {1}")]
    Names(usize, usize),
    #[error("log-likelihood decreased at iteration {iter}: {before} -> {after}")]
    NonMonotone { iter: usize, before: f64, after: f64 },
    #[error("{0}")]
    Degenerate(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iter: 500,
            tol: 1e-9,
            seed: 0,
        }
    }
}

/// Conditionally independent generative model over labeler votes.
///
/// `emissions[j][y][v]` is P(vote v | Y = y) for labeler `j`, where
/// `y = 1` means the query is incorrect and `v` follows [`Vote::index`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelModelParams {
    pub version: u32,
    pub labelers: Vec<String>,
    pub class_prior: f64,
    pub emissions: Vec<[[f64; 3]; 2]>,
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
}

impl LabelModelParams {
    /// P(Y = incorrect | votes).
    pub fn posterior(&self, votes: &[Vote]) -> f64 {
        let mut logp = [(1.0 - self.class_prior).ln(), self.class_prior.ln()];
        for (j, v) in votes.iter().enumerate().take(self.emissions.len()) {
            for (y, lp) in logp.iter_mut().enumerate() {
                *lp += self.emissions[j][y][v.index()].ln();
            }
        }
        sigmoid(logp[1] - logp[0])
    }

    /// Accuracy among non-abstaining votes, averaged under the class prior.
    pub fn accuracy(&self, j: usize) -> f64 {
        let e = &self.emissions[j];
        let pi = [1.0 - self.class_prior, self.class_prior];
        let right = pi[1] * e[1][Vote::Incorrect.index()] + pi[0] * e[0][Vote::Correct.index()];
        let cast = pi[1] * (1.0 - e[1][Vote::Abstain.index()]) + pi[0] * (1.0 - e[0][Vote::Abstain.index()]);
        if cast > 0.0 {
            right / cast
        } else {
            0.5
        }
    }

    /// P(incorrect vote | Y = incorrect), the weight used for confidence buckets.
    pub fn incorrect_rate(&self, j: usize) -> f64 {
        self.emissions[j][1][Vote::Incorrect.index()]
    }

    pub fn index_of(&self, labeler: &str) -> Option<usize> {
        self.labelers.iter().position(|l| l == labeler)
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Fits the generative model by EM on the marginal likelihood.
///
/// Identical vote patterns are pooled first, so the fit does not depend on
/// the order of `vectors`.
pub fn fit_label_model(
    vectors: &[DecisionVector],
    labelers: &[String],
    config: &FitConfig,
) -> Result<LabelModelParams, FitError> {
    if vectors.len() < MIN_VECTORS {
        return Err(FitError::TooFew(vectors.len()));
    }
    let m = vectors[0].votes.len();
    if let Some(v) = vectors.iter().find(|v| v.votes.len() != m) {
        return Err(FitError::Ragged(m, v.votes.len()));
    }
    if labelers.len() != m {
        return Err(FitError::Names(labelers.len(), m));
    }
    if vectors.iter().all(|v| v.votes.iter().all(|x| *x == Vote::Abstain)) {
        return Err(FitError::AllAbstain);
    }

    let mut pooled: BTreeMap<&[Vote], f64> = BTreeMap::new();
    for v in vectors {
        *pooled.entry(v.votes.as_slice()).or_default() += 1.0;
    }
    let patterns: Vec<(&[Vote], f64)> = pooled.into_iter().collect();
    let n = vectors.len() as f64;

    let mut emissions = Vec::with_capacity(m);
    for j in 0..m {
        let rate = |vote: Vote| patterns.iter().filter(|(p, _)| p[j] == vote).map(|(_, c)| c).sum::<f64>() / n;
        let (ri, rc) = (rate(Vote::Incorrect), rate(Vote::Correct));
        let row = |good_inc: f64, good_cor: f64| {
            let mut inc = 2.0 * ri * good_inc;
            let mut cor = 2.0 * rc * good_cor;
            let cast = inc + cor;
            if cast > 0.999 {
                inc *= 0.999 / cast;
                cor *= 0.999 / cast;
            }
            [inc, cor, 1.0 - inc - cor]
        };
        emissions.push([row(0.3, 0.7), row(0.7, 0.3)]);
    }

    let mut params = LabelModelParams {
        version: 1,
        labelers: labelers.to_vec(),
        class_prior: 0.5,
        emissions,
        log_likelihood: Vec::new(),
        iterations: 0,
    };

    for iter in 0..config.max_iter {
        let mut ll = 0.0;
        let mut mass = [0.0f64; 2];
        let mut counts = vec![[[0.0f64; 3]; 2]; m];
        for (pattern, count) in &patterns {
            let mut logp = [(1.0 - params.class_prior).ln(), params.class_prior.ln()];
            for (j, v) in pattern.iter().enumerate() {
                for (y, lp) in logp.iter_mut().enumerate() {
                    *lp += params.emissions[j][y][v.index()].ln();
                }
            }
            let z = log_sum_exp(logp[0], logp[1]);
            if !z.is_finite() {
                return Err(FitError::Degenerate("observed vote pattern has zero probability".into()));
            }
            ll += count * z;
            let g1 = (logp[1] - z).exp();
            let g = [1.0 - g1, g1];
            for y in 0..2 {
                mass[y] += count * g[y];
                for (j, v) in pattern.iter().enumerate() {
                    counts[j][y][v.index()] += count * g[y];
                }
            }
        }

        if let Some(&before) = params.log_likelihood.last() {
            if ll < before - 1e-9 * before.abs().max(1.0) {
                return Err(FitError::NonMonotone { iter, before, after: ll });
            }
        }
        params.log_likelihood.push(ll);
        params.iterations = iter + 1;
        let converged = params
            .log_likelihood
            .len()
            .checked_sub(2)
            .map(|i| (ll - params.log_likelihood[i]).abs() < config.tol)
            .unwrap_or(false);
        if converged {
            break;
        }

        params.class_prior = (mass[1] / n).clamp(PRIOR_FLOOR, 1.0 - PRIOR_FLOOR);
        for (j, row) in counts.iter().enumerate() {
            for y in 0..2 {
                if mass[y] > 0.0 {
                    for v in 0..3 {
                        params.emissions[j][y][v] = row[y][v] / mass[y];
                    }
                }
            }
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(m: usize) -> Vec<String> {
        (0..m).map(|i| format!("lf{i}")).collect()
    }

    #[test]
    fn rejects_degenerate_input() {
        let v = vec![DecisionVector::new("q", vec![Vote::Abstain; 3]); 25];
        assert_eq!(fit_label_model(&v, &names(3), &FitConfig::default()), Err(FitError::AllAbstain));
        assert_eq!(
            fit_label_model(&v[..5], &names(3), &FitConfig::default()),
            Err(FitError::TooFew(5))
        );
    }

    #[test]
    fn duplicated_labeler_keeps_direction() {
        // One informative labeler copied three times, plus 40 queries.
        let mut vectors = Vec::new();
        for i in 0..40 {
            let v = match i % 4 {
                0 => Vote::Incorrect,
                1 => Vote::Correct,
                2 => Vote::Correct,
                _ => Vote::Abstain,
            };
            vectors.push(DecisionVector::new(i.to_string(), vec![v; 3]));
        }
        let p = fit_label_model(&vectors, &names(3), &FitConfig::default()).unwrap();
        let inc = p.posterior(&[Vote::Incorrect; 3]);
        let cor = p.posterior(&[Vote::Correct; 3]);
        assert!(inc > p.class_prior && cor < p.class_prior, "{inc} {cor}");
        let w = p.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-9);
        assert!(w);
    }
}
