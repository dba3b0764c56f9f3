use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{Cell, ResultTable};

/// Absolute tolerance applied to numeric cells before comparison.
pub const FLOAT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Key {
    Null,
    Num(i128),
    Text(String),
    Blob(Vec<u8>),
}

fn key(cell: &Cell) -> Key {
    match cell {
        Cell::Null => Key::Null,
        Cell::Integer(i) => Key::Num(*i as i128 * 1_000_000),
        Cell::Real(r) if r.is_nan() => Key::Null,
        Cell::Real(r) => Key::Num((r / FLOAT_TOLERANCE).round() as i128),
        Cell::Text(t) => Key::Text(t.clone()),
        Cell::Blob(b) => Key::Blob(b.clone()),
    }
}

fn row_keys(rt: &ResultTable) -> Vec<Vec<Key>> {
    rt.rows.iter().map(|r| r.iter().map(key).collect()).collect()
}

/// Result equality as sets of rows. Numbers are quantized to the float
/// tolerance and NaN is read as NULL; column order matters, row order does not.
pub fn result_sets_equal(a: &ResultTable, b: &ResultTable) -> bool {
    compare(a, b, false)
}

/// Like [`result_sets_equal`] but duplicate rows must occur equally often.
pub fn result_multisets_equal(a: &ResultTable, b: &ResultTable) -> bool {
    compare(a, b, true)
}

fn compare(a: &ResultTable, b: &ResultTable, multiset: bool) -> bool {
    let width = |rt: &ResultTable| rt.rows.first().map(Vec::len).unwrap_or(rt.columns.len());
    if !a.rows.is_empty() && !b.rows.is_empty() && width(a) != width(b) {
        return false;
    }
    if multiset {
        let count = |rt| {
            let mut m: BTreeMap<Vec<Key>, usize> = BTreeMap::new();
            for r in row_keys(rt) {
                *m.entry(r).or_default() += 1;
            }
            m
        };
        count(a) == count(b)
    } else {
        let set = |rt| row_keys(rt).into_iter().collect::<BTreeSet<_>>();
        set(a) == set(b)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Classification metrics with "incorrect" as the positive class.
pub fn binary_metrics(predicted: &[bool], gold: &[bool]) -> BinaryMetrics {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fn_ = 0.0;
    let mut right = 0.0;
    for (p, g) in predicted.iter().zip(gold) {
        match (p, g) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
        if p == g {
            right += 1.0;
        }
    }
    let div = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let precision = div(tp, tp + fp);
    let recall = div(tp, tp + fn_);
    BinaryMetrics {
        accuracy: div(right, gold.len() as f64),
        precision,
        recall,
        f1: div(2.0 * precision * recall, precision + recall),
    }
}

/// Area under the ROC curve via the Mann-Whitney statistic with midranks.
/// `None` when either class is absent.
pub fn auc(scores: &[f64], gold: &[bool]) -> Option<f64> {
    let n_pos = gold.iter().filter(|g| **g).count();
    let n_neg = gold.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|a, b| scores[*a].total_cmp(&scores[*b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = mid;
        }
        i = j + 1;
    }
    let rank_sum: f64 = gold.iter().zip(&ranks).filter(|(g, _)| **g).map(|(_, r)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// Fold index per example, stratified by label and shuffled with `seed`.
pub fn stratified_folds(gold: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; gold.len()];
    for class in [true, false] {
        let mut members: Vec<usize> = (0..gold.len()).filter(|i| gold[*i] == class).collect();
        members.shuffle(&mut rng);
        for (pos, i) in members.into_iter().enumerate() {
            folds[i] = pos % k.max(1);
        }
    }
    folds
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: Vec<Vec<Cell>>) -> ResultTable {
        ResultTable {
            columns: vec!["c".into(); rows.first().map(Vec::len).unwrap_or(1)],
            row_count: rows.len(),
            rows,
            truncated: false,
            elapsed_ms: 0.0,
        }
    }

    #[test]
    fn set_semantics() {
        let a = table(vec![vec![Cell::Integer(26)]]);
        assert!(result_sets_equal(&a, &table(vec![vec![Cell::Real(26.0000000001)]])));
        assert!(!result_sets_equal(&a, &table(vec![vec![Cell::Integer(0)]])));
        let p = table(vec![vec![Cell::Integer(1)], vec![Cell::Integer(2)], vec![Cell::Integer(2)]]);
        let q = table(vec![vec![Cell::Integer(2)], vec![Cell::Integer(1)]]);
        assert!(result_sets_equal(&p, &q));
        assert!(!result_multisets_equal(&p, &q));
        let swapped = table(vec![vec![Cell::Integer(1), Cell::Text("a".into())]]);
        let orig = table(vec![vec![Cell::Text("a".into()), Cell::Integer(1)]]);
        assert!(!result_sets_equal(&swapped, &orig));
    }

    #[test]
    fn auc_midranks() {
        assert_eq!(auc(&[0.1, 0.9], &[false, true]), Some(1.0));
        assert_eq!(auc(&[0.5, 0.5], &[false, true]), Some(0.5));
        assert_eq!(auc(&[0.2, 0.3, 0.1], &[true, false, false]), Some(0.5));
        assert_eq!(auc(&[0.2], &[true]), None);
    }

    #[test]
    fn folds_are_stratified() {
        let gold: Vec<bool> = (0..50).map(|i| i % 5 == 0).collect();
        let f = stratified_folds(&gold, 5, 3);
        for k in 0..5 {
            assert_eq!((0..50).filter(|i| f[*i] == k && gold[*i]).count(), 2);
        }
        assert_eq!(f, stratified_folds(&gold, 5, 3));
    }
}
