use clausecheck::aggregate::*;
use clausecheck::harness::metrics::{auc, binary_metrics};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fit(c: &SyntheticCorpus) -> LabelModelParams {
    fit_label_model(&c.vectors, &c.labelers, &FitConfig::default()).unwrap()
}

fn incorrect(v: &[bool]) -> Vec<f64> {
    v.iter().map(|g| if *g { 1.0 } else { 0.0 }).collect()
}

#[test]
fn recovers_planted_accuracies() {
    let cfg = SyntheticConfig::default();
    let c = cfg.generate();
    let p = fit(&c);
    for (j, a) in cfg.accuracies.iter().enumerate() {
        assert!((p.accuracy(j) - a).abs() <= 0.05, "lf{j}: {} vs {a}", p.accuracy(j));
    }
    assert!(p.log_likelihood.windows(2).all(|w| w[1] >= w[0]));
    assert!((p.class_prior - cfg.prior).abs() < 0.05);
}

#[test]
fn posterior_beats_majority_vote() {
    let c = SyntheticConfig::default().generate();
    let p = fit(&c);
    let post: Vec<f64> = c.vectors.iter().map(|v| p.posterior(&v.votes)).collect();
    let maj: Vec<f64> = c.vectors.iter().map(|v| majority_score(&v.votes)).collect();
    let (a, b) = (auc(&post, &c.gold).unwrap(), auc(&maj, &c.gold).unwrap());
    assert!(a - b >= 0.02, "posterior {a} majority {b}");
}

#[test]
fn posterior_is_calibrated() {
    let c = SyntheticConfig::default().generate();
    let p = fit(&c);
    for bin in 0..10 {
        let lo = bin as f64 / 10.0;
        let members: Vec<(f64, bool)> = c
            .vectors
            .iter()
            .zip(&c.gold)
            .map(|(v, g)| (p.posterior(&v.votes), *g))
            .filter(|(q, _)| *q >= lo && (*q < lo + 0.1 || bin == 9))
            .collect();
        // Sparse bins carry too much sampling noise to check.
        if members.len() < 50 {
            continue;
        }
        let n = members.len() as f64;
        let rate = members.iter().filter(|(_, g)| *g).count() as f64 / n;
        let mean = members.iter().map(|(q, _)| q).sum::<f64>() / n;
        let band = (3.0 * (mean * (1.0 - mean) / n).sqrt()).max(0.07);
        assert!((rate - mean).abs() <= band, "bin {lo}: rate {rate} mean {mean} over {n}");
    }
}

#[test]
fn high_accuracy_agreement_is_confident() {
    let c = SyntheticConfig::default().generate();
    let p = fit(&c);
    let all_bad = vec![Vote::Incorrect; 8];
    assert!(p.posterior(&all_bad) > 0.95);
    let silent = vec![Vote::Abstain; 8];
    // Abstention is planted class-independent, so a silent vector carries no
    // information under the generating model and little under the fit.
    assert!((c.planted.posterior(&silent) - c.planted.class_prior).abs() < 1e-12);
    assert!((p.posterior(&silent) - p.class_prior).abs() < 0.05);
}

#[test]
fn adding_an_incorrect_vote_never_lowers_the_posterior() {
    let c = SyntheticConfig::default().generate();
    let p = fit(&c);
    let m = 8;
    for code in 0..3usize.pow(m as u32) {
        let mut votes = Vec::with_capacity(m);
        let mut x = code;
        for _ in 0..m {
            votes.push(Vote::ALL[x % 3]);
            x /= 3;
        }
        let base = p.posterior(&votes);
        for j in 0..m {
            if votes[j] == Vote::Incorrect || p.accuracy(j) <= 0.5 {
                continue;
            }
            let mut more = votes.clone();
            more[j] = Vote::Incorrect;
            assert!(p.posterior(&more) >= base - 1e-12, "{votes:?} + lf{j}");
        }
    }
}

#[test]
fn fit_ignores_corpus_order() {
    let c = SyntheticConfig::default().generate();
    let a = fit(&c);
    let mut rev = c.vectors.clone();
    rev.reverse();
    let b = fit_label_model(&rev, &c.labelers, &FitConfig::default()).unwrap();
    assert!((a.class_prior - b.class_prior).abs() < 1e-9);
    for (x, y) in a.emissions.iter().zip(&b.emissions) {
        for yi in 0..2 {
            for v in 0..3 {
                assert!((x[yi][v] - y[yi][v]).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn uninformative_votes_carry_no_signal() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vectors: Vec<DecisionVector> = (0..2000)
        .map(|i| DecisionVector::new(i.to_string(), (0..6).map(|_| Vote::ALL[rng.gen_range(0..3)]).collect()))
        .collect();
    let names: Vec<String> = (0..6).map(|i| format!("lf{i}")).collect();
    let gold: Vec<bool> = (0..2000).map(|_| rng.gen_bool(0.4)).collect();
    let p = fit_label_model(&vectors, &names, &FitConfig::default()).unwrap();
    let post: Vec<f64> = vectors.iter().map(|v| p.posterior(&v.votes)).collect();
    let mean = post.iter().sum::<f64>() / post.len() as f64;
    assert!((mean - p.class_prior).abs() < 0.01);
    assert!((auc(&post, &gold).unwrap() - 0.5).abs() < 0.05);
}

#[test]
fn weak_classifier_tracks_bayes_oracle() {
    let c = SyntheticConfig::default().generate();
    let p = fit(&c);
    let soft: Vec<f64> = c.vectors.iter().map(|v| p.posterior(&v.votes)).collect();
    let weak = train_classifier(&c.vectors, &soft, TrainMode::Weak, &TrainConfig::default()).unwrap();
    let pred: Vec<bool> = c.vectors.iter().map(|v| weak.predict(v).verdict == Verdict::Incorrect).collect();
    let weak_f1 = binary_metrics(&pred, &c.gold).f1;

    let oracle: Vec<bool> = c.vectors.iter().map(|v| c.planted.posterior(&v.votes) >= 0.5).collect();
    let oracle_f1 = binary_metrics(&oracle, &c.gold).f1;
    assert!((weak_f1 - oracle_f1).abs() <= 0.03, "weak {weak_f1} oracle {oracle_f1}");

    let best_single = (0..8)
        .map(|j| {
            let pred: Vec<bool> = c.vectors.iter().map(|v| v.votes[j] == Vote::Incorrect).collect();
            binary_metrics(&pred, &c.gold).f1
        })
        .fold(0.0, f64::max);
    assert!(weak_f1 >= best_single);
}

#[test]
fn supervised_mode_uses_gold() {
    let c = SyntheticConfig::default().generate();
    let gold = incorrect(&c.gold);
    let sup = train_classifier(&c.vectors, &gold, TrainMode::Supervised, &TrainConfig::default()).unwrap();
    let json = serde_json::to_string(&sup).unwrap();
    let back: CorrectnessClassifier = serde_json::from_str(&json).unwrap();
    assert_eq!(back, sup);
    let p = sup.predict(&DecisionVector::new("q", vec![Vote::Incorrect; 8]));
    assert_eq!(p.verdict, Verdict::Incorrect);
}
