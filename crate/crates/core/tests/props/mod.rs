//! Property suites shared by the `properties` and `acceptance` targets.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rusqlite::Connection;

use clausecheck::aggregate::{build_decision_vector, Labeler, Vote, REGISTRY_LEN};
use clausecheck::catalog::{build_catalog, catalog_hash, BuildOptions, DatabaseCatalog};
use clausecheck::demo;
use clausecheck::exec::{Cell, Database, ResultTable};
use clausecheck::harness::metrics::{result_multisets_equal, result_sets_equal};
use clausecheck::llm::{run_llm_signals, CompletionParams, LlmMode, LlmSettings, MockClient, PromptContext};
use clausecheck::pipeline::{Detector, DetectorConfig};
use clausecheck::query::{parse, parse_query};
use clausecheck::signals::{SignalGroup, SignalId, SignalOutcome};

const CASES: u32 = 128;

pub type Outcome = Result<(), String>;

fn run<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S::Value: std::fmt::Debug,
{
    TestRunner::new(config()).run(&strategy, test).map_err(|e| e.to_string())
}

fn config() -> Config {
    Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    }
}

// ---- query model -------------------------------------------------------

fn column() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("a".to_string()),
        Just("b".to_string()),
        Just("t.c".to_string()),
        Just("u.d".to_string()),
        Just("`odd name`".to_string()),
    ]
}

fn literal() -> impl Strategy<Value = String> {
    prop_oneof![
        (-50i64..50).prop_map(|i| i.to_string()),
        (0u32..1000).prop_map(|i| format!("{}.5", i)),
        "[a-z' ]{0,6}".prop_map(|s| format!("'{}'", s.replace('\'', "''"))),
        Just("NULL".to_string()),
    ]
}

fn scalar() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![column(), literal()];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop_oneof![Just("+"), Just("-"), Just("*"), Just("/"), Just("||")], inner.clone())
                .prop_map(|(l, op, r)| format!("{l} {op} {r}")),
            inner.clone().prop_map(|e| format!("({e})")),
            (prop_oneof![Just("MAX"), Just("MIN"), Just("SUM"), Just("COUNT"), Just("ABS")], inner.clone())
                .prop_map(|(f, e)| format!("{f}({e})")),
            (inner.clone(), inner.clone(), inner)
                .prop_map(|(a, b, c)| format!("CASE WHEN {a} = {b} THEN {c} ELSE NULL END")),
        ]
    })
}

fn condition() -> impl Strategy<Value = String> {
    let atom = prop_oneof![
        (column(), prop_oneof![Just("="), Just("<>"), Just("<"), Just(">="), Just("LIKE")], literal())
            .prop_map(|(c, op, l)| format!("{c} {op} {l}")),
        (column(), prop::collection::vec(literal(), 1..4)).prop_map(|(c, ls)| format!("{c} IN ({})", ls.join(", "))),
        (column(), literal(), literal()).prop_map(|(c, a, b)| format!("{c} BETWEEN {a} AND {b}")),
        (column(), any::<bool>()).prop_map(|(c, n)| format!("{c} IS {}NULL", if n { "NOT " } else { "" })),
        (column(), column()).prop_map(|(c, d)| format!("{c} = (SELECT MAX({d}) FROM u)")),
        column().prop_map(|c| format!("{c} IN (SELECT d FROM u WHERE d > 1)")),
    ];
    atom.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop_oneof![Just("AND"), Just("OR")], inner.clone())
                .prop_map(|(l, op, r)| format!("{l} {op} {r}")),
            inner.clone().prop_map(|c| format!("NOT ({c})")),
        ]
    })
}

fn select_sql() -> impl Strategy<Value = String> {
    (
        any::<bool>(),
        prop::collection::vec((scalar(), prop::option::of("[x-z]{1,3}")), 1..4),
        any::<bool>(),
        prop::option::of(condition()),
        prop::option::of((column(), prop::option::of(condition()))),
        prop::option::of((column(), any::<bool>())),
        prop::option::of(1u32..100),
    )
        .prop_map(|(distinct, items, join, filter, group, order, limit)| {
            let items: Vec<String> = items
                .into_iter()
                .map(|(e, alias)| match alias {
                    Some(a) => format!("{e} AS {a}"),
                    None => e,
                })
                .collect();
            let mut sql = format!("SELECT {}{} FROM t", if distinct { "DISTINCT " } else { "" }, items.join(", "));
            if join {
                sql.push_str(" INNER JOIN u ON t.c = u.d");
            }
            if let Some(f) = filter {
                sql.push_str(&format!(" WHERE {f}"));
            }
            if let Some((g, having)) = group {
                sql.push_str(&format!(" GROUP BY {g}"));
                if let Some(h) = having {
                    sql.push_str(&format!(" HAVING {h}"));
                }
            }
            if let Some((o, desc)) = order {
                sql.push_str(&format!(" ORDER BY {o}{}", if desc { " DESC" } else { "" }));
            }
            if let Some(l) = limit {
                sql.push_str(&format!(" LIMIT {l}"));
            }
            sql
        })
}

pub fn query_model_roundtrip() -> Outcome {
    run(select_sql(), |sql| {
        let ast = parse_query(&sql).map_err(|e| TestCaseError::fail(format!("{sql}: {e}")))?;
        let rendered = ast.to_string();
        let again = parse_query(&rendered).map_err(|e| TestCaseError::fail(format!("{rendered}: {e}")))?;
        prop_assert_eq!(&ast, &again);
        prop_assert_eq!(again.to_string(), rendered.clone());

        let original = parse(&sql);
        let model = parse(&rendered);
        prop_assert!(original.parse_ok && model.parse_ok);
        prop_assert!(model.structurally_eq(&parse(&model.render().unwrap())));
        prop_assert_eq!(&original.from_tables, &model.from_tables);
        prop_assert_eq!(original.join_predicates.len(), model.join_predicates.len());
        prop_assert_eq!(original.literal_predicates.len(), model.literal_predicates.len());
        prop_assert_eq!(original.subqueries.len(), model.subqueries.len());
        prop_assert_eq!(&original.scopes, &model.scopes);
        Ok(())
    })
}

// ---- result comparison -------------------------------------------------

fn cell() -> impl Strategy<Value = Cell> {
    prop_oneof![
        Just(Cell::Null),
        Just(Cell::Integer(1)),
        Just(Cell::Real(1.0)),
        Just(Cell::Real(1.0 + 1e-9)),
        Just(Cell::Real(f64::NAN)),
        Just(Cell::Integer(2)),
        Just(Cell::Text("a".into())),
        Just(Cell::Text("1".into())),
    ]
}

fn table(width: usize) -> impl Strategy<Value = ResultTable> {
    prop::collection::vec(prop::collection::vec(cell(), width), 0..4).prop_map(move |rows| ResultTable {
        columns: (0..width).map(|i| format!("c{i}")).collect(),
        row_count: rows.len(),
        rows,
        truncated: false,
        elapsed_ms: 0.0,
    })
}

pub fn result_equality_is_an_equivalence() -> Outcome {
    run((table(2), table(2), table(2)), |(a, b, c)| {
        for eq in [result_sets_equal as fn(&ResultTable, &ResultTable) -> bool, result_multisets_equal] {
            prop_assert!(eq(&a, &a));
            prop_assert_eq!(eq(&a, &b), eq(&b, &a));
            if eq(&a, &b) && eq(&b, &c) {
                prop_assert!(eq(&a, &c));
            }
        }
        if result_multisets_equal(&a, &b) {
            prop_assert!(result_sets_equal(&a, &b));
        }
        Ok(())
    })
}

pub fn row_order_and_duplicates() -> Outcome {
    run((table(2), any::<u64>()), |(a, seed)| {
        let mut shuffled = a.clone();
        let n = shuffled.rows.len();
        if n > 1 {
            shuffled.rows.rotate_left((seed as usize) % n);
        }
        prop_assert!(result_multisets_equal(&a, &shuffled));
        prop_assert!(result_sets_equal(&a, &shuffled));
        if let Some(first) = a.rows.first().cloned() {
            let mut dup = shuffled.clone();
            dup.rows.push(first);
            prop_assert!(result_sets_equal(&a, &dup));
            prop_assert!(!result_multisets_equal(&a, &dup));
        }
        Ok(())
    })
}

// ---- catalog -----------------------------------------------------------

#[derive(Clone, Debug)]
struct Schema {
    tables: Vec<(Option<usize>, Vec<String>)>,
}

fn schema() -> impl Strategy<Value = Schema> {
    prop::collection::vec(
        (any::<prop::sample::Index>(), any::<bool>(), prop::collection::vec("[a-c]{1,2}", 0..6)),
        1..5,
    )
    .prop_map(|specs| Schema {
        tables: specs
            .into_iter()
            .enumerate()
            .map(|(i, (parent, has_fk, values))| ((i > 0 && has_fk).then(|| parent.index(i)), values))
            .collect(),
    })
}

fn write_schema(dir: &std::path::Path, s: &Schema) -> std::path::PathBuf {
    let path = dir.join("p.sqlite");
    let _ = std::fs::remove_file(&path);
    let conn = Connection::open(&path).unwrap();
    conn.execute_batch("PRAGMA foreign_keys = OFF;").unwrap();
    for (i, (parent, values)) in s.tables.iter().enumerate() {
        let fk = parent.map(|p| format!(", p_id INTEGER REFERENCES t{p}(id)")).unwrap_or_default();
        conn.execute_batch(&format!("CREATE TABLE t{i} (id INTEGER PRIMARY KEY, label TEXT{fk});")).unwrap();
        for (k, v) in values.iter().enumerate() {
            let p = if parent.is_some() { ", 1" } else { "" };
            conn.execute_batch(&format!("INSERT INTO t{i} VALUES ({k}, '{v}'{p});")).unwrap();
        }
    }
    path
}

pub fn catalog_build_is_idempotent() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run(schema(), |s| {
            let path = write_schema(dir.path(), &s);
            let db = Database::open(&path).unwrap();
            let first = build_catalog(&db, &BuildOptions::default()).unwrap();
            let second = build_catalog(&db, &BuildOptions::default()).unwrap();
            prop_assert_eq!(&first, &second);
            prop_assert_eq!(&first.value_index, &second.value_index);
            prop_assert_eq!(catalog_hash(&first), catalog_hash(&second));

            let saved = dir.path().join("cat.json");
            first.save(&saved).unwrap();
            let loaded = DatabaseCatalog::load(&saved).unwrap();
            prop_assert_eq!(&loaded.value_index, &first.value_index);
            prop_assert_eq!(catalog_hash(&loaded), catalog_hash(&first));
            prop_assert_eq!(first.fk_edges.len(), s.tables.iter().filter(|t| t.0.is_some()).count());
            Ok(())
        })
}

// ---- decision vectors --------------------------------------------------

fn outcome(signal: SignalId, state: u8) -> Option<SignalOutcome> {
    match state {
        0 => None,
        1 => Some(SignalOutcome::clear(signal, serde_json::Value::Null)),
        2 => Some(SignalOutcome::flag(signal, Default::default(), "", serde_json::Value::Null)),
        _ => Some(SignalOutcome::downgrade(signal, "no response")),
    }
}

pub fn positive_labelers_imply_groups() -> Outcome {
    run(prop::collection::vec(0u8..4, SignalId::ALL.len()), |states| {
        let outcomes: Vec<SignalOutcome> =
            SignalId::ALL.iter().zip(&states).filter_map(|(s, st)| outcome(*s, *st)).collect();
        let v = build_decision_vector("q", &outcomes);
        prop_assert_eq!(v.votes.len(), REGISTRY_LEN);
        let all = v.vote(Labeler::All) == Vote::Correct;
        let db = v.vote(Labeler::Db) == Vote::Correct;
        let llm = v.vote(Labeler::Llm) == Vote::Correct;
        prop_assert_eq!(all, db && llm);
        for (s, st) in SignalId::ALL.iter().zip(&states) {
            let expected = if *st == 2 { Vote::Incorrect } else { Vote::Abstain };
            prop_assert_eq!(v.vote(Labeler::Signal(*s)), expected);
        }
        for l in [Labeler::All, Labeler::Db, Labeler::Llm] {
            prop_assert_ne!(v.vote(l), Vote::Incorrect);
        }
        Ok(())
    })
}

// ---- downgrade safety --------------------------------------------------

pub fn failing_backend_never_flags() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let db = Database::open(demo::write_database(dir.path(), "financial").unwrap()).unwrap();
    let catalog = build_catalog(&db, &BuildOptions::default()).unwrap();
    let db_only = DetectorConfig {
        enabled: SignalId::DB.to_vec(),
        ..Default::default()
    };
    let baseline = Detector::with_config(&catalog, &db, db_only).detect(
        demo::FIG2_QUESTION,
        demo::FIG2_EVIDENCE,
        demo::FIG2_PREDICTED,
    );
    let ctx = PromptContext {
        question: demo::FIG2_QUESTION.into(),
        evidence: demo::FIG2_EVIDENCE.into(),
        db_description: String::new(),
        sql: demo::FIG2_PREDICTED.into(),
    };

    let strategy = (
        prop::collection::vec(any::<bool>(), SignalId::LLM.len()),
        any::<bool>(),
        prop::option::of("[^{}]{0,40}"),
        0usize..3,
    );
    run(strategy, |(mask, batched, junk, retries)| {
            let enabled: Vec<SignalId> =
                SignalId::LLM.iter().zip(&mask).filter(|(_, on)| **on).map(|(s, _)| *s).collect();
            let client = match &junk {
                Some(text) => MockClient::new().otherwise(text.clone()),
                None => MockClient::new().fail_when(""),
            };
            let settings = LlmSettings {
                mode: if batched { LlmMode::Batched } else { LlmMode::PerSignal },
                retries,
                params: CompletionParams::default(),
                ..Default::default()
            };
            let out = run_llm_signals(&ctx, &client, &enabled, &settings);
            prop_assert_eq!(out.iter().map(|o| o.signal_id).collect::<Vec<_>>(), enabled.clone());
            for o in &out {
                prop_assert!(!o.flagged, "{:?}", o);
                prop_assert!(o.is_downgraded());
            }
            let calls = if enabled.is_empty() {
                0
            } else if batched {
                retries + 1
            } else {
                enabled.len() * (retries + 1)
            };
            prop_assert_eq!(client.call_count(), calls);

            let mut all = enabled.clone();
            all.extend(SignalId::DB);
            let cfg = DetectorConfig {
                enabled: all,
                llm: settings,
                ..Default::default()
            };
            let outcomes = Detector::with_config(&catalog, &db, cfg).with_client(&client).detect(
                demo::FIG2_QUESTION,
                demo::FIG2_EVIDENCE,
                demo::FIG2_PREDICTED,
            );
            let db_part: Vec<&SignalOutcome> =
                outcomes.iter().filter(|o| o.signal_id.group() == SignalGroup::Db).collect();
            prop_assert_eq!(db_part, baseline.iter().collect::<Vec<_>>());
            Ok(())
        })
}
