use std::path::Path;

use clausecheck::catalog::{build_catalog, BuildOptions, DatabaseCatalog};
use clausecheck::demo::{self, FIG2_EVIDENCE, FIG2_GOLD, FIG2_PREDICTED, FIG2_QUESTION};
use clausecheck::exec::Database;
use clausecheck::signals::{run_db_signals, DetectionContext, SignalId};

fn open(dir: &Path, db_id: &str) -> (Database, DatabaseCatalog) {
    let path = demo::write_database(dir, db_id).unwrap();
    let db = Database::open(path).unwrap();
    let cat = build_catalog(&db, &BuildOptions::default()).unwrap();
    (db, cat)
}

fn flagged(ctx: &DetectionContext<'_>) -> Vec<SignalId> {
    run_db_signals(ctx, &SignalId::DB)
        .into_iter()
        .filter(|o| o.flagged)
        .map(|o| o.signal_id)
        .collect()
}

#[test]
fn fig2_flags_exactly_four_db_signals() {
    let dir = tempfile::tempdir().unwrap();
    let (db, cat) = open(dir.path(), "financial");
    let ctx = DetectionContext::new(FIG2_QUESTION, FIG2_EVIDENCE, FIG2_PREDICTED, &cat, &db);
    assert_eq!(
        flagged(&ctx),
        vec![
            SignalId::AbnormalResult,
            SignalId::EmptyPredicate,
            SignalId::IncorrectJoinPredicate,
            SignalId::SuboptimalJoinTree
        ]
    );
    let outcomes = run_db_signals(&ctx, &[SignalId::SuboptimalJoinTree]);
    let c = &outcomes[0].problematic_clauses;
    assert_eq!(c["tables used in the JOIN clauses"], ["client", "account", "district"]);
    assert_eq!(c["optimal set of tables to join"], ["client", "district"]);

    let gold = ctx.with_sql(FIG2_GOLD);
    assert!(flagged(&gold).is_empty(), "{:?}", flagged(&gold));
    assert!(run_db_signals(&ctx, &[]).is_empty());
}

#[test]
fn empty_predicate_is_case_sensitive_on_literals() {
    let dir = tempfile::tempdir().unwrap();
    let (db, cat) = open(dir.path(), "financial");
    let base = "SELECT COUNT(*) FROM district WHERE a2 = ";
    let lower = DetectionContext::new("", "", format!("{base}'jesenik'"), &cat, &db);
    let upper = lower.with_sql(&format!("{base}'Jesenik'"));
    assert!(flagged(&lower).contains(&SignalId::EmptyPredicate));
    assert!(!flagged(&upper).contains(&SignalId::EmptyPredicate));
}

#[test]
fn signal_pairs_separate_on_the_designated_signal() {
    let dir = tempfile::tempdir().unwrap();
    for case in demo::signal_cases() {
        let (db, cat) = open(dir.path(), case.db_id);
        let ctx = DetectionContext::new(case.question, case.evidence, case.incorrect, &cat, &db);
        let bad = run_db_signals(&ctx, &[case.signal]);
        let good = run_db_signals(&ctx.with_sql(case.correct), &[case.signal]);
        assert!(bad[0].flagged, "{:?} incorrect not flagged: {:?}", case.signal, bad[0]);
        assert!(!good[0].flagged, "{:?} correct flagged: {:?}", case.signal, good[0]);
    }
}

#[test]
fn thresholds_and_trivial_queries() {
    let dir = tempfile::tempdir().unwrap();
    let (db, cat) = open(dir.path(), "card_games");
    let ctx = DetectionContext::new("", "", "SELECT 1", &cat, &db);
    assert!(flagged(&ctx).is_empty());
    let three = ctx.with_sql(
        "SELECT (SELECT 1), (SELECT 2), (SELECT name FROM cards WHERE id = 1)",
    );
    assert!(!flagged(&three).contains(&SignalId::UnnecessarySubquery));
    let four = ctx.with_sql("SELECT (SELECT 1), (SELECT 2), (SELECT 3), (SELECT 4)");
    assert!(flagged(&four).contains(&SignalId::UnnecessarySubquery));
}

#[test]
fn value_ambiguity_respects_scores() {
    let dir = tempfile::tempdir().unwrap();
    let (db, cat) = open(dir.path(), "card_games");
    let sql = "SELECT artist FROM cards WHERE watermark = 'phyrexian'";
    let ctx = DetectionContext::new("Which artists drew cards with the phyrexian watermark?", "", sql, &cat, &db);
    assert!(!flagged(&ctx).contains(&SignalId::ValueAmbiguity));
    let only_one = ctx.with_sql("SELECT artist FROM cards WHERE rarity = 'uncommon'");
    assert!(!flagged(&only_one).contains(&SignalId::ValueAmbiguity));
}

#[test]
fn failing_probe_downgrades() {
    let dir = tempfile::tempdir().unwrap();
    let (db, cat) = open(dir.path(), "financial");
    let ctx = DetectionContext::new("", "", "SELECT missing_col FROM client WHERE nope = 1", &cat, &db);
    let out = run_db_signals(&ctx, &SignalId::DB);
    assert!(out.iter().all(|o| !o.flagged));
    assert!(out[0].is_downgraded());
}
