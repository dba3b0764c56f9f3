//! Parses a generated query and prints its clause-level model.
//!
//! ```bash
//! cargo run --example parse_query -- "SELECT name FROM t WHERE id = 3"
//! ```

use clausecheck::demo::FIG2_PREDICTED;
use clausecheck::query::parse;

fn main() {
    let sql = std::env::args().nth(1).unwrap_or_else(|| FIG2_PREDICTED.to_string());
    let sq = parse(&sql);
    if !sq.parse_ok {
        eprintln!("parse error: {}", sq.parse_error.unwrap_or_default());
        std::process::exit(1);
    }
    println!("canonical: {}", sq.render().unwrap_or_default());
    println!("tables:");
    for t in &sq.from_tables {
        match &t.alias {
            Some(a) => println!("  {} AS {a} (scope {})", t.name, t.scope),
            None => println!("  {} (scope {})", t.name, t.scope),
        }
    }
    println!("join predicates:");
    for j in &sq.join_predicates {
        println!("  {}  [{:?}]", j.text, j.clause);
    }
    println!("literal predicates:");
    for p in &sq.literal_predicates {
        println!("  {}  [{:?}]", p.text, p.clause);
    }
    println!("subqueries:");
    for s in &sq.subqueries {
        println!("  depth {} {:?}: {}", s.depth, s.pattern, s.sql_text);
    }
    println!("group by without aggregate: {}", sq.groupby_without_aggregate());
}
