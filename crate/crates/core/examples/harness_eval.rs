//! End-to-end harness run over the demo databases: load a dataset, label it
//! against gold, detect, and report per-signal and correction metrics.

use clausecheck::demo;
use clausecheck::harness::config::HarnessConfig;
use clausecheck::harness::dataset::load_examples;
use clausecheck::harness::eval::{eval_correction, signal_microbench, CorrectionRecord, DetectionRecord};
use clausecheck::harness::run::{correct_examples, detect_examples, Workspace};
use clausecheck::aggregate::ConfidenceTable;
use clausecheck::signals::SignalId;
use serde_json::json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join("clausecheck-harness-example");
    demo::write_all(&root)?;

    let mut records = Vec::new();
    let mut preds = serde_json::Map::new();
    for (i, c) in demo::signal_cases().iter().enumerate() {
        for (k, sql) in [(2 * i, c.incorrect), (2 * i + 1, c.correct)] {
            records.push(json!({"question_id": k, "db_id": c.db_id, "question": c.question,
                                "evidence": c.evidence, "SQL": c.correct}));
            preds.insert(k.to_string(), json!(format!("{sql}\t----- bird -----\t{}", c.db_id)));
        }
    }
    let dataset = root.join("dev.json");
    let predictions = root.join("predict_dev.json");
    std::fs::write(&dataset, serde_json::to_string(&records)?)?;
    std::fs::write(&predictions, serde_json::to_string(&preds)?)?;

    let mut cfg = HarnessConfig::default();
    cfg.data.db_root = root.clone();
    cfg.detector.enabled = SignalId::DB.to_vec();
    let examples = load_examples(&dataset, &predictions, "demo")?.examples;
    let ws = Workspace::prepare(&cfg, examples.iter().map(|e| e.db_id.as_str()))?;
    let detections = detect_examples(&ws, &examples, &cfg, None)?;
    let recs: Vec<DetectionRecord> = detections
        .iter()
        .map(|d| DetectionRecord::from_outcomes(&d.query_id, &d.outcomes, d.label.is_wrong()))
        .collect();

    println!("{:<28} {:>7} {:>9} {:>7} {:>4}", "signal", "flagged", "precision", "recall", "n_w");
    for row in signal_microbench(&recs, &SignalId::DB) {
        let p = row.precision.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into());
        println!("{:<28} {:>7} {:>9} {:>7.3} {:>4}", row.signal.to_string(), row.flagged, p, row.recall, row.n_w);
    }

    // The scripted fixer only knows the correction-suite rewrites, so most
    // queries come back unchanged.
    let case = &demo::correction_suite()[0];
    let client = demo::scripted_correction_client(case, &ws.registry.path(case.db_id));
    let fixes = correct_examples(&ws, &examples, &cfg, &ConfidenceTable::uniform(), &client)?;
    let fix_recs: Vec<CorrectionRecord> = fixes
        .iter()
        .map(|f| CorrectionRecord {
            query_id: f.query_id.clone(),
            before: f.before,
            after: f.after,
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&eval_correction(&fix_recs))?);
    Ok(())
}
