//! Model-judged signals against a scripted completion client.
//!
//! A real endpoint is used when `CLAUSECHECK_ENDPOINT` is set; the bearer
//! token is read from `CLAUSECHECK_API_TOKEN`.

use clausecheck::catalog::{build_catalog, BuildOptions};
use clausecheck::demo::{self, FIG2_EVIDENCE, FIG2_PREDICTED, FIG2_QUESTION};
use clausecheck::exec::Database;
use clausecheck::llm::{run_llm_signals, CompletionClient, HttpClient, HttpConfig, LlmMode, LlmSettings, MockClient};
use clausecheck::pipeline::Detector;
use clausecheck::signals::SignalId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("clausecheck-llm-example");
    let db = Database::open(demo::write_database(&dir, "financial")?)?;
    let catalog = build_catalog(&db, &BuildOptions::default())?;
    let detector = Detector::new(&catalog, &db);
    let ctx = detector.prompt_context(FIG2_QUESTION, FIG2_EVIDENCE, FIG2_PREDICTED);

    let client: Box<dyn CompletionClient> = match std::env::var("CLAUSECHECK_ENDPOINT") {
        Ok(url) => Box::new(HttpClient::new(HttpConfig {
            url,
            ..Default::default()
        })?),
        Err(_) => Box::new(MockClient::new().handler(scripted)),
    };

    for mode in [LlmMode::PerSignal, LlmMode::Batched] {
        let settings = LlmSettings {
            mode,
            ..Default::default()
        };
        println!("== {mode:?}");
        for o in run_llm_signals(&ctx, client.as_ref(), &SignalId::LLM, &settings) {
            let state = if o.is_downgraded() {
                "downgraded"
            } else if o.flagged {
                "flagged"
            } else {
                "clear"
            };
            println!("  {:<34} {state:<10} {}", o.signal_id.to_string(), o.detail);
        }
    }
    Ok(())
}

/// Canned answers keyed on the opening of each detection prompt.
fn scripted(prompt: &str) -> Option<String> {
    let answer = if prompt.contains("Answer the five checks") {
        r#"{"evidence_violation": {"violates_evidence": true, "explanation": "female is gender = 'F'"},
            "insufficient_evidence": {"insufficient_evidence": false, "explanation": ""},
            "question_clause_linking": {"Jesenik branch": "no"},
            "column_ambiguity": {"alternative_column": false, "explanation": ""},
            "self_check": {"correct": false, "explanation": "literals do not match the data"}}"#
    } else if prompt.contains("reflects all the evidence") {
        r#"{"violates_evidence": true, "explanation": "The evidence says female is gender = 'F'."}"#
    } else if prompt.contains("sufficient evidence") {
        r#"{"insufficient_evidence": false, "explanation": "The schema covers the question."}"#
    } else if prompt.contains("Link the concepts") {
        r#"{"(female clients, client.gender = 'Female')": "yes", "(Jesenik branch, district.a2 = 'jesenik')": "no"}"#
    } else if prompt.contains("database administrator") {
        r#"{"alternative_column": false, "explanation": "Columns are unambiguous."}"#
    } else {
        r#"{"correct": false, "explanation": "Literal values do not match the data."}"#
    };
    Some(answer.to_string())
}
