//! Builds a catalog for a demo database and finds the minimal join tree
//! connecting a set of tables.
//!
//! ```bash
//! cargo run --example catalog_steiner -- client district
//! ```

use clausecheck::catalog::{build_catalog, catalog_hash, BuildOptions};
use clausecheck::demo;
use clausecheck::exec::Database;
use clausecheck::ident::Ident;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile_dir()?;
    let path = demo::write_database(&dir, "financial")?;
    let db = Database::open(&path)?.with_id("financial");
    let catalog = build_catalog(&db, &BuildOptions::default())?;

    println!("catalog {}", catalog_hash(&catalog));
    for e in &catalog.fk_edges {
        println!("fk       {} -> {}", e.child, e.parent);
    }
    for e in &catalog.derived_edges {
        println!("derived  {} = {} (via {})", e.left, e.right, e.via);
    }

    let mut terminals: Vec<Ident> = std::env::args().skip(1).map(|a| Ident::new(&a)).collect();
    if terminals.is_empty() {
        terminals = vec![Ident::new("client"), Ident::new("district")];
    }
    let tree = catalog.steiner_tables(&terminals)?;
    let names: Vec<String> = tree.tables.iter().map(|t| t.to_string()).collect();
    println!("join tree ({}): {}", if tree.exact { "exact" } else { "approximate" }, names.join(", "));
    for (a, b) in &tree.edges {
        println!("  {a} -- {b}");
    }

    let saved = dir.join("financial.json");
    catalog.save(&saved)?;
    println!("saved to {}", saved.display());
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join("clausecheck-catalog-example");
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
