//! Turns fired signals into ranked, structured error reports.

use clausecheck::aggregate::ConfidenceTable;
use clausecheck::catalog::{build_catalog, BuildOptions};
use clausecheck::demo::{self, FIG2_EVIDENCE, FIG2_PREDICTED, FIG2_QUESTION};
use clausecheck::exec::Database;
use clausecheck::pipeline::Detector;
use clausecheck::report::reports_for;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("clausecheck-report-example");
    let db = Database::open(demo::write_database(&dir, "financial")?)?;
    let catalog = build_catalog(&db, &BuildOptions::default())?;
    let outcomes = Detector::new(&catalog, &db).detect(FIG2_QUESTION, FIG2_EVIDENCE, FIG2_PREDICTED);

    // Without a fitted label model every signal is reported with high confidence.
    for report in reports_for(&outcomes, &ConfidenceTable::uniform()) {
        println!("{}\n", report.to_json());
    }
    Ok(())
}
