//! Runs the database-backed signals on the demo queries.

use clausecheck::catalog::{build_catalog, BuildOptions};
use clausecheck::demo;
use clausecheck::exec::Database;
use clausecheck::pipeline::{Detector, DetectorConfig};
use clausecheck::signals::SignalId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("clausecheck-signals-example");
    for case in demo::signal_cases() {
        let path = demo::write_database(&dir, case.db_id)?;
        let db = Database::open(&path)?;
        let catalog = build_catalog(&db, &BuildOptions::default())?;
        let config = DetectorConfig {
            enabled: SignalId::DB.to_vec(),
            ..Default::default()
        };
        let detector = Detector::with_config(&catalog, &db, config);
        println!("== {} ({})", case.signal, case.db_id);
        for (label, sql) in [("incorrect", case.incorrect), ("corrected", case.correct)] {
            let fired: Vec<String> = detector
                .detect(case.question, case.evidence, sql)
                .into_iter()
                .filter(|o| o.flagged)
                .map(|o| o.signal_id.to_string())
                .collect();
            println!("  {label:<9} -> [{}]", fired.join(", "));
        }
    }
    Ok(())
}
