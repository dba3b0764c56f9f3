//! Executes a query read-only, classifies its result and probes each
//! literal predicate on its own table.

use clausecheck::catalog::{build_catalog, BuildOptions};
use clausecheck::demo::{self, FIG2_PREDICTED};
use clausecheck::exec::{classify_result, Database, ExecLimits};
use clausecheck::query::parse_with_schema;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("clausecheck-exec-example");
    let path = demo::write_database(&dir, "financial")?;
    let db = Database::open(&path)?;
    let catalog = build_catalog(&db, &BuildOptions::default())?;
    let limits = ExecLimits::default();

    let sql = std::env::args().nth(1).unwrap_or_else(|| FIG2_PREDICTED.to_string());
    let result = db.run(&sql, &limits)?;
    println!("columns: {:?}", result.columns);
    println!("rows:    {:?}", result.rows);
    let flags = classify_result(&result);
    println!("abnormal: {} {:?}", flags.any(), flags.describe());

    let sq = parse_with_schema(&sql, &catalog);
    for p in sq.literal_predicates() {
        match db.probe_predicate(p, &limits) {
            Ok(n) => println!("{:>6} rows satisfy {}", n, p.text),
            Err(e) => println!("   n/a  {} ({e})", p.text),
        }
    }

    match db.run("DELETE FROM client", &limits) {
        Ok(_) => println!("write went through"),
        Err(e) => println!("writes are refused: {e}"),
    }
    Ok(())
}
