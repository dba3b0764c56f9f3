use std::collections::HashSet;
use std::path::{Path, PathBuf};

use clausecheck::aggregate::{Confidence, ConfidenceTable};
use clausecheck::catalog::{build_catalog, BuildOptions, DatabaseCatalog};
use clausecheck::correct::*;
use clausecheck::demo::{self, CorrectionCase};
use clausecheck::exec::{Cell, Database, ExecLimits};
use clausecheck::harness::metrics::result_sets_equal;
use clausecheck::llm::{CompletionParams, MockClient};
use clausecheck::pipeline::{Detector, DetectorConfig};
use clausecheck::report::{assemble_report, ErrorReport};
use clausecheck::signals::{SignalId, SignalOutcome};

fn open(dir: &Path, db_id: &str) -> (PathBuf, Database, DatabaseCatalog) {
    let path = demo::write_database(dir, db_id).unwrap();
    let db = Database::open(&path).unwrap();
    let cat = build_catalog(&db, &BuildOptions::default()).unwrap();
    (path, db, cat)
}

fn db_only() -> DetectorConfig {
    DetectorConfig {
        enabled: SignalId::DB.to_vec(),
        ..Default::default()
    }
}

fn matches_gold(db: &Database, sql: &str, gold: &str) -> bool {
    let l = ExecLimits::default();
    match (db.run(sql, &l), db.run(gold, &l)) {
        (Ok(a), Ok(b)) => result_sets_equal(&a, &b),
        _ => false,
    }
}

fn run_case(dir: &Path, case: &CorrectionCase, config: &CorrectionConfig) -> (CorrectionTrace, bool) {
    let (path, db, cat) = open(dir, case.db_id);
    let detector = Detector::with_config(&cat, &db, db_only());
    let client = demo::scripted_correction_client(case, &path);
    let trace = run_correction(
        &detector,
        case.question,
        case.evidence,
        case.sql,
        config,
        &ConfidenceTable::uniform(),
        &client,
    );
    let ok = matches_gold(&db, &trace.final_sql, case.gold);
    (trace, ok)
}

#[test]
fn suite_fixes_broken_and_keeps_correct() {
    let dir = tempfile::tempdir().unwrap();
    let config = CorrectionConfig::default();
    let suite = demo::correction_suite();
    assert_eq!(suite.iter().filter(|c| c.is_broken()).count(), 6);
    for case in &suite {
        let (path, db, _) = open(dir.path(), case.db_id);
        drop(path);
        let initially = matches_gold(&db, case.sql, case.gold);
        assert_eq!(initially, !case.is_broken(), "{}", case.id);
        let (trace, ok) = run_case(dir.path(), case, &config);
        assert!(ok, "{}: final {}", case.id, trace.final_sql);
        assert!(trace.iterations.len() <= config.max_iter);
        let unique: HashSet<_> = trace.fixed_signals.iter().collect();
        assert_eq!(unique.len(), trace.fixed_signals.len(), "{}: {:?}", case.id, trace.fixed_signals);
    }
}

#[test]
fn fig2_ends_at_26() {
    let dir = tempfile::tempdir().unwrap();
    let case = &demo::correction_suite()[0];
    let (trace, ok) = run_case(dir.path(), case, &CorrectionConfig::default());
    assert!(ok);
    let (_, db, _) = open(dir.path(), "financial");
    let rt = db.run(&trace.final_sql, &ExecLimits::default()).unwrap();
    assert_eq!(rt.rows, vec![vec![Cell::Integer(26)]]);
    assert_eq!(trace.iterations.len(), 2);
    assert_eq!(trace.terminated_by, Termination::NoErrors);
    assert_eq!(trace.audit.as_ref().unwrap().choice, AuditChoice::Revised);
}

#[test]
fn clean_query_needs_no_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let case = demo::correction_suite().into_iter().find(|c| c.id == "fig2_gold").unwrap();
    let (trace, _) = run_case(dir.path(), &case, &CorrectionConfig::default());
    assert!(trace.iterations.is_empty());
    assert_eq!(trace.final_sql, case.sql);
    assert_eq!(trace.terminated_by, Termination::NoErrors);
    assert!(trace.audit.unwrap().exchange.is_none());
}

#[test]
fn auditor_blocks_the_bad_rewrite() {
    let dir = tempfile::tempdir().unwrap();
    let case = demo::correction_suite().into_iter().find(|c| c.id == "redundant_join").unwrap();
    let (trace, ok) = run_case(dir.path(), &case, &CorrectionConfig::default());
    assert!(ok);
    assert_eq!(trace.final_sql, case.sql);
    assert!(!trace.iterations.is_empty());

    let no_audit = CorrectionConfig {
        auditor: false,
        ..Default::default()
    };
    let (trace, ok) = run_case(dir.path(), &case, &no_audit);
    assert!(!ok, "without the auditor the rewrite breaks the query: {}", trace.final_sql);
}

#[test]
fn unfixable_signal_stops_at_max_iter() {
    let dir = tempfile::tempdir().unwrap();
    let (_, db, cat) = open(dir.path(), "financial");
    let detector = Detector::with_config(&cat, &db, db_only());
    let echo = MockClient::new().handler(|p| {
        let start = p.find("[Old SQL]\n```sql\n")? + 17;
        let end = start + p[start..].find("\n```")?;
        Some(format!("```sql\n{}\n```", &p[start..end]))
    });
    let config = CorrectionConfig {
        max_iter: 1,
        auditor: false,
        selector: false,
        ..Default::default()
    };
    let t = run_correction(
        &detector,
        demo::FIG2_QUESTION,
        demo::FIG2_EVIDENCE,
        demo::FIG2_PREDICTED,
        &config,
        &ConfidenceTable::uniform(),
        &echo,
    );
    assert_eq!(t.iterations.len(), 1);
    assert_eq!(t.terminated_by, Termination::MaxIter);
    assert_eq!(t.final_sql, demo::FIG2_PREDICTED);
}

fn report(signal: SignalId) -> ErrorReport {
    let o = SignalOutcome::flag(signal, Default::default(), "", serde_json::Value::Null);
    assemble_report(&o, Confidence::High).unwrap()
}

#[test]
fn selector_paths() {
    let ctx = Default::default();
    let p = CompletionParams::default();
    let reports = vec![
        report(SignalId::AbnormalResult),
        report(SignalId::EmptyPredicate),
        report(SignalId::SuboptimalJoinTree),
    ];
    let silent = MockClient::new();
    let one = select_error(&ctx, &reports[..1], &silent, &p);
    assert_eq!(one.report.signal_id, SignalId::AbnormalResult);
    assert_eq!(silent.call_count(), 0);

    let two = MockClient::new().otherwise("{\"most_critical\": 2}");
    assert_eq!(select_error(&ctx, &reports, &two, &p).report.signal_id, SignalId::SuboptimalJoinTree);

    let junk = MockClient::new().otherwise("no idea");
    let s = select_error(&ctx, &reports, &junk, &p);
    assert!(s.fallback);
    assert_eq!(s.report.signal_id, SignalId::AbnormalResult);
    let out_of_range = MockClient::new().otherwise("{\"most_critical\": 7}");
    assert!(select_error(&ctx, &reports, &out_of_range, &p).fallback);
}

#[test]
fn fixer_paths() {
    let dir = tempfile::tempdir().unwrap();
    let (_, db, cat) = open(dir.path(), "financial");
    let detector = Detector::with_config(&cat, &db, db_only());
    let ctx = detector.prompt_context(demo::FIG2_QUESTION, demo::FIG2_EVIDENCE, demo::FIG2_PREDICTED);
    let p = CompletionParams::default();
    let r = report(SignalId::IncorrectJoinPredicate);

    let fixed = "SELECT COUNT(*) FROM client JOIN district ON client.district_id = district.district_id";
    let repair = MockClient::new().sequence(
        &["[Old SQL]"],
        vec!["```sql\nSELEC COUNT(*) FRM client\n```".into(), format!("```sql\n{fixed}\n```")],
    );
    let f = fix_error(&ctx, &detector, demo::FIG2_PREDICTED, &r, &repair, 3, &p);
    assert_eq!(f.repairs_used, 1);
    assert_eq!(f.revised_sql, fixed);
    assert!(repair.calls()[1].contains("[Syntax Error]"));

    let same = MockClient::new().otherwise(format!("The SQL is fine.\n```sql\n{}\n```", demo::FIG2_PREDICTED));
    let f = fix_error(&ctx, &detector, demo::FIG2_PREDICTED, &r, &same, 3, &p);
    assert_eq!(f.revised_sql, demo::FIG2_PREDICTED);

    let broken = MockClient::new().otherwise("```sql\nSELECT FROM WHERE\n```");
    let f = fix_error(&ctx, &detector, demo::FIG2_PREDICTED, &r, &broken, 3, &p);
    assert_eq!(f.repairs_used, 3);
    assert_eq!(broken.call_count(), 4);
    assert_eq!(f.revised_sql, demo::FIG2_PREDICTED);
    assert!(f.note.is_some());

    let prose = MockClient::new().otherwise("I cannot help.");
    assert_eq!(fix_error(&ctx, &detector, "SELECT 1", &r, &prose, 3, &p).revised_sql, "SELECT 1");
}

#[test]
fn auditor_paths() {
    let dir = tempfile::tempdir().unwrap();
    let (_, db, cat) = open(dir.path(), "financial");
    let detector = Detector::with_config(&cat, &db, db_only());
    let ctx = detector.prompt_context(demo::FIG2_QUESTION, demo::FIG2_EVIDENCE, demo::FIG2_PREDICTED);
    let p = CompletionParams::default();
    let g = Some(SignalId::AbnormalResult);

    let never = MockClient::new();
    let same = audit(&ctx, &detector, "SELECT 1", "SELECT 1", g, &never, &p);
    assert_eq!(same.choice, AuditChoice::Original);
    assert_eq!(never.call_count(), 0);

    let a = MockClient::new().otherwise("{\"choice\": \"A\"}");
    assert_eq!(audit(&ctx, &detector, demo::FIG2_PREDICTED, demo::FIG2_GOLD, g, &a, &p).choice, AuditChoice::Original);

    // Garbage answer: the revision clears the guardrail, so it is kept.
    let junk = MockClient::new().otherwise("hmm");
    let t = audit(&ctx, &detector, demo::FIG2_PREDICTED, demo::FIG2_GOLD, g, &junk, &p);
    assert!(t.fallback);
    assert_eq!(t.choice, AuditChoice::Revised);
    // Neither fires the guardrail: keep the original.
    let t = audit(&ctx, &detector, demo::FIG2_GOLD, "SELECT COUNT(*) FROM client", g, &junk, &p);
    assert_eq!(t.choice, AuditChoice::Original);
}
