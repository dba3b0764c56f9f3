//! Fits the generative label model on a synthetic vote corpus and compares
//! it against majority vote.

use clausecheck::aggregate::synthetic::{majority_score, SyntheticConfig};
use clausecheck::aggregate::{fit_label_model, train_classifier, FitConfig, TrainConfig, TrainMode, Verdict};
use clausecheck::harness::metrics::{auc, binary_metrics};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = SyntheticConfig::default().generate();
    let params = fit_label_model(&corpus.vectors, &corpus.labelers, &FitConfig::default())?;
    println!("converged after {} iterations, log-likelihood {:.3}", params.iterations, params.log_likelihood.last().copied().unwrap_or(f64::NAN));
    println!("class prior (incorrect): {:.3}", params.class_prior);
    println!("{:<6} {:>8} {:>8}", "lf", "planted", "fitted");
    for (j, name) in corpus.labelers.iter().enumerate() {
        println!("{name:<6} {:>8.3} {:>8.3}", corpus.planted.accuracy(j), params.accuracy(j));
    }

    let posterior: Vec<f64> = corpus.vectors.iter().map(|v| params.posterior(&v.votes)).collect();
    let majority: Vec<f64> = corpus.vectors.iter().map(|v| majority_score(&v.votes)).collect();
    println!("AUC posterior {:.3}", auc(&posterior, &corpus.gold).unwrap_or(f64::NAN));
    println!("AUC majority  {:.3}", auc(&majority, &corpus.gold).unwrap_or(f64::NAN));

    let clf = train_classifier(&corpus.vectors, &posterior, TrainMode::Weak, &TrainConfig::default())?;
    let pred: Vec<bool> = corpus.vectors.iter().map(|v| clf.predict(v).verdict == Verdict::Incorrect).collect();
    let m = binary_metrics(&pred, &corpus.gold);
    println!("weak classifier: precision {:.3} recall {:.3} f1 {:.3}", m.precision, m.recall, m.f1);
    Ok(())
}
