//! Runs the guided correction loop with a scripted fixer and auditor and
//! prints each iteration.

use clausecheck::aggregate::ConfidenceTable;
use clausecheck::catalog::{build_catalog, BuildOptions};
use clausecheck::correct::{run_correction, CorrectionConfig};
use clausecheck::demo;
use clausecheck::exec::{Database, ExecLimits};
use clausecheck::pipeline::{Detector, DetectorConfig};
use clausecheck::signals::SignalId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("clausecheck-correction-example");
    let wanted = std::env::args().nth(1).unwrap_or_else(|| "fig2".into());
    let suite = demo::correction_suite();
    let Some(case) = suite.iter().find(|c| c.id == wanted) else {
        let ids: Vec<&str> = suite.iter().map(|c| c.id).collect();
        eprintln!("unknown case {wanted}; choose one of {}", ids.join(", "));
        std::process::exit(1);
    };

    let path = demo::write_database(&dir, case.db_id)?;
    let db = Database::open(&path)?;
    let catalog = build_catalog(&db, &BuildOptions::default())?;
    let config = DetectorConfig {
        enabled: SignalId::DB.to_vec(),
        ..Default::default()
    };
    let detector = Detector::with_config(&catalog, &db, config);
    let client = demo::scripted_correction_client(case, &path);
    let trace = run_correction(
        &detector,
        case.question,
        case.evidence,
        case.sql,
        &CorrectionConfig::default(),
        &ConfidenceTable::uniform(),
        &client,
    );

    println!("original: {}", trace.original_sql);
    for (i, it) in trace.iterations.iter().enumerate() {
        println!("[{}] fixing {}", i + 1, it.selection.report.signal_id);
        println!("    -> {}", it.fix.revised_sql);
    }
    if let Some(a) = &trace.audit {
        println!("auditor kept the {:?} query", a.choice);
    }
    println!("final:    {}", trace.final_sql);
    println!("stopped:  {:?}", trace.terminated_by);
    let rows = db.run(&trace.final_sql, &ExecLimits::default())?.rows;
    println!("result:   {rows:?}");
    Ok(())
}
