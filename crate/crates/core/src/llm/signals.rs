//! The five model-judged signals.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::client::{CompletionClient, CompletionParams};
use super::json::parse_json_block;
use super::prompts::{PromptContext, PromptTemplate};
use crate::signals::{SignalId, SignalOutcome};

const RETRY_SUFFIX: &str = "\nReturn valid json only.";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfCheckMode {
    #[default]
    Bool,
    Prob,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmMode {
    #[default]
    PerSignal,
    Batched,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmSettings {
    pub mode: LlmMode,
    pub self_check: SelfCheckMode,
    /// Extra attempts after an unparseable response or a client failure.
    pub retries: usize,
    pub self_check_threshold: f64,
    pub params: CompletionParams,
}

impl Default for LlmSettings {
    fn default() -> Self {
        LlmSettings {
            mode: LlmMode::PerSignal,
            self_check: SelfCheckMode::Bool,
            retries: 2,
            self_check_threshold: 0.5,
            params: CompletionParams::default(),
        }
    }
}

fn template_for(id: SignalId, settings: &LlmSettings) -> Option<PromptTemplate> {
    Some(match id {
        SignalId::EvidenceViolation => PromptTemplate::EvidenceViolation,
        SignalId::InsufficientEvidence => PromptTemplate::InsufficientEvidence,
        SignalId::QuestionClauseLinking => PromptTemplate::QuestionClauseLinking,
        SignalId::ColumnAmbiguity => PromptTemplate::ColumnAmbiguity,
        SignalId::LlmSelfCheck => match settings.self_check {
            SelfCheckMode::Bool => PromptTemplate::SelfCheckBool,
            SelfCheckMode::Prob => PromptTemplate::SelfCheckProb,
        },
        _ => return None,
    })
}

fn batched_key(id: SignalId) -> &'static str {
    match id {
        SignalId::EvidenceViolation => "evidence_violation",
        SignalId::InsufficientEvidence => "insufficient_evidence",
        SignalId::QuestionClauseLinking => "question_clause_linking",
        SignalId::ColumnAmbiguity => "column_ambiguity",
        _ => "self_check",
    }
}

fn as_bool(v: Option<&Value>) -> Option<bool> {
    match v? {
        Value::Bool(b) => Some(*b),
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "true" | "yes" => Some(true),
            "false" | "no" => Some(false),
            _ => None,
        },
        _ => None,
    }
}

fn as_prob(v: Option<&Value>) -> Option<f64> {
    let p = match v? {
        Value::Number(n) => n.as_f64()?,
        Value::String(s) => s.trim().parse().ok()?,
        _ => return None,
    };
    (0.0..=1.0).contains(&p).then_some(p)
}

fn text(map: &Map<String, Value>, key: &str) -> String {
    match map.get(key) {
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
        None => String::new(),
    }
}

/// Clause list named by the model, else the whole query.
fn llm_clauses(map: &Map<String, Value>, sql: &str) -> IndexMap<String, Vec<String>> {
    let named = ["problematic_clauses", "clauses", "clause"]
        .iter()
        .find_map(|k| map.get(*k))
        .map(|v| match v {
            Value::Array(items) => items.iter().map(|i| i.as_str().map(str::to_string).unwrap_or(i.to_string())).collect(),
            Value::String(s) => vec![s.clone()],
            other => vec![other.to_string()],
        })
        .filter(|v: &Vec<String>| !v.is_empty());
    IndexMap::from([("clauses identified by the model".to_string(), named.unwrap_or_else(|| vec![sql.to_string()]))])
}

/// Turns a parsed response into an outcome; `None` means the shape was wrong.
fn interpret(
    id: SignalId,
    map: &Map<String, Value>,
    sql: &str,
    settings: &LlmSettings,
    evidence: Value,
) -> Option<SignalOutcome> {
    let flag_key = match id {
        SignalId::EvidenceViolation => Some("violates_evidence"),
        SignalId::InsufficientEvidence => Some("insufficient_evidence"),
        SignalId::ColumnAmbiguity => Some("alternative_column"),
        _ => None,
    };
    if let Some(key) = flag_key {
        let flagged = as_bool(map.get(key))?;
        let explanation = text(map, "explanation");
        return Some(if flagged {
            SignalOutcome::flag(id, llm_clauses(map, sql), explanation, evidence)
        } else {
            SignalOutcome::clear(id, evidence)
        });
    }
    match id {
        SignalId::LlmSelfCheck => match settings.self_check {
            SelfCheckMode::Bool => {
                let correct = as_bool(map.get("correct"))?;
                let explanation = text(map, "explanation");
                Some(if correct {
                    SignalOutcome::clear(id, evidence)
                } else {
                    SignalOutcome::flag(id, llm_clauses(map, sql), explanation, evidence)
                })
            }
            SelfCheckMode::Prob => {
                let p = as_prob(map.get("probability"))?;
                let mut out = if p < settings.self_check_threshold {
                    SignalOutcome::flag(id, llm_clauses(map, sql), format!("estimated probability of correctness {p}"), evidence)
                } else {
                    SignalOutcome::clear(id, evidence)
                };
                out.probability = Some(p);
                Some(out)
            }
        },
        SignalId::QuestionClauseLinking => {
            let mut low = Vec::new();
            for (link, v) in map {
                match as_bool(Some(v)) {
                    Some(false) => low.push(link.clone()),
                    Some(true) => {}
                    None => return None,
                }
            }
            if map.is_empty() {
                let mut out = SignalOutcome::clear(id, evidence);
                out.raw_evidence["note"] = json!("model returned no links");
                return Some(out);
            }
            Some(if low.is_empty() {
                SignalOutcome::clear(id, evidence)
            } else {
                let detail = format!("{} low-confidence link(s)", low.len());
                let clauses = IndexMap::from([("low-confidence question-clause links".to_string(), low)]);
                SignalOutcome::flag(id, clauses, detail, evidence)
            })
        }
        _ => None,
    }
}

/// Sends `prompt`, re-asking up to `retries` times until `accept` succeeds.
fn ask<T>(
    client: &dyn CompletionClient,
    prompt: &str,
    settings: &LlmSettings,
    mut accept: impl FnMut(&str) -> Option<T>,
) -> (Option<T>, Vec<Value>) {
    let mut attempts = Vec::new();
    for attempt in 0..=settings.retries {
        let p = if attempt == 0 {
            prompt.to_string()
        } else {
            format!("{prompt}{RETRY_SUFFIX}")
        };
        match client.complete(&p, &settings.params) {
            Ok(resp) => {
                attempts.push(json!({ "response": resp }));
                if let Some(v) = accept(&resp) {
                    return (Some(v), attempts);
                }
            }
            Err(e) => attempts.push(json!({ "error": e.to_string() })),
        }
    }
    (None, attempts)
}

/// Runs one model-judged signal with the per-signal prompt.
pub fn run_llm_signal(
    id: SignalId,
    ctx: &PromptContext,
    client: &dyn CompletionClient,
    settings: &LlmSettings,
) -> SignalOutcome {
    let Some(template) = template_for(id, settings) else {
        return SignalOutcome::downgrade(id, "not a model-judged signal");
    };
    let prompt = ctx.render(template);
    let (outcome, attempts) = ask(client, &prompt, settings, |resp| {
        let map = parse_json_block(resp).ok()?;
        interpret(id, &map, &ctx.sql, settings, Value::Null)
    });
    let evidence = json!({ "client": client.identity(), "prompt": prompt, "attempts": attempts });
    match outcome {
        Some(mut o) => {
            merge_evidence(&mut o.raw_evidence, evidence);
            o
        }
        None => {
            let mut o = SignalOutcome::downgrade(id, "no usable response after retries");
            merge_evidence(&mut o.raw_evidence, evidence);
            o
        }
    }
}

fn merge_evidence(target: &mut Value, extra: Value) {
    if !target.is_object() {
        *target = json!({});
    }
    if let (Some(t), Value::Object(e)) = (target.as_object_mut(), extra) {
        for (k, v) in e {
            t.insert(k, v);
        }
    }
}

/// Runs the enabled model-judged signals in registry order.
pub fn run_llm_signals(
    ctx: &PromptContext,
    client: &dyn CompletionClient,
    enabled: &[SignalId],
    settings: &LlmSettings,
) -> Vec<SignalOutcome> {
    let ids: Vec<SignalId> = SignalId::LLM.into_iter().filter(|s| enabled.contains(s)).collect();
    if ids.is_empty() {
        return Vec::new();
    }
    match settings.mode {
        LlmMode::PerSignal => ids.into_iter().map(|id| run_llm_signal(id, ctx, client, settings)).collect(),
        LlmMode::Batched => run_batched(&ids, ctx, client, settings),
    }
}

fn run_batched(ids: &[SignalId], ctx: &PromptContext, client: &dyn CompletionClient, settings: &LlmSettings) -> Vec<SignalOutcome> {
    let shape = match settings.self_check {
        SelfCheckMode::Bool => "{{\"correct\": true/false, \"explanation\": \"...\"}}",
        SelfCheckMode::Prob => "{{\"probability\": <between 0.0 and 1.0>}}",
    };
    let shape = shape.replace("{{", "{").replace("}}", "}");
    let prompt = ctx.render_batched(&shape);
    let (parsed, attempts) = ask(client, &prompt, settings, |resp| {
        let map = parse_json_block(resp).ok()?;
        let outs: Option<Vec<SignalOutcome>> = ids
            .iter()
            .map(|id| {
                let sub = map.get(batched_key(*id))?.as_object()?;
                interpret(*id, sub, &ctx.sql, settings, Value::Null)
            })
            .collect();
        outs
    });
    let evidence = json!({ "client": client.identity(), "prompt": prompt, "attempts": attempts, "batched": true });
    match parsed {
        Some(outs) => outs
            .into_iter()
            .map(|mut o| {
                merge_evidence(&mut o.raw_evidence, evidence.clone());
                o
            })
            .collect(),
        None => ids
            .iter()
            .map(|id| {
                let mut o = SignalOutcome::downgrade(*id, "no usable batched response after retries");
                merge_evidence(&mut o.raw_evidence, evidence.clone());
                o
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::MockClient;

    fn ctx() -> PromptContext {
        PromptContext {
            question: "q".into(),
            evidence: "e".into(),
            db_description: "schema".into(),
            sql: "SELECT 1".into(),
        }
    }

    #[test]
    fn boolean_signals() {
        let mock = MockClient::new()
            .when_contains("reflects all the evidence", "```json\n{\"violates_evidence\": true, \"explanation\": \"uses 6\"}\n```")
            .when_contains("sufficient evidence", "{\"insufficient_evidence\": false, \"explanation\": \"fine\"}");
        let s = LlmSettings::default();
        let ev = run_llm_signal(SignalId::EvidenceViolation, &ctx(), &mock, &s);
        assert!(ev.flagged);
        assert_eq!(ev.detail, "uses 6");
        let ie = run_llm_signal(SignalId::InsufficientEvidence, &ctx(), &mock, &s);
        assert!(!ie.flagged && !ie.is_downgraded());
    }

    #[test]
    fn probability_threshold() {
        let s = LlmSettings {
            self_check: SelfCheckMode::Prob,
            ..Default::default()
        };
        let hi = MockClient::new().otherwise("{\"probability\": 0.7}");
        let out = run_llm_signal(SignalId::LlmSelfCheck, &ctx(), &hi, &s);
        assert!(!out.flagged);
        assert_eq!(out.probability, Some(0.7));
        let lo = MockClient::new().otherwise("{\"probability\": 0.2}");
        assert!(run_llm_signal(SignalId::LlmSelfCheck, &ctx(), &lo, &s).flagged);
    }

    #[test]
    fn clause_links() {
        let s = LlmSettings::default();
        let mock = MockClient::new().otherwise("{\"(heading accuracy, ORDER BY pa.heading_accuracy)\": \"no\", \"(height, WHERE p.height > 180)\": \"yes\"}");
        let out = run_llm_signal(SignalId::QuestionClauseLinking, &ctx(), &mock, &s);
        assert!(out.flagged);
        assert_eq!(
            out.problematic_clauses["low-confidence question-clause links"],
            ["(heading accuracy, ORDER BY pa.heading_accuracy)"]
        );
        let empty = MockClient::new().otherwise("{}");
        let out = run_llm_signal(SignalId::QuestionClauseLinking, &ctx(), &empty, &s);
        assert!(!out.flagged);
        assert_eq!(out.raw_evidence["note"], "model returned no links");
    }

    #[test]
    fn retries_then_downgrade() {
        let s = LlmSettings::default();
        let mock = MockClient::new().otherwise("not json");
        let out = run_llm_signal(SignalId::ColumnAmbiguity, &ctx(), &mock, &s);
        assert!(!out.flagged && out.is_downgraded());
        assert_eq!(mock.call_count(), 3);
        assert!(mock.calls()[1].ends_with(RETRY_SUFFIX));

        let failing = MockClient::new();
        let outs = run_llm_signals(&ctx(), &failing, &SignalId::LLM, &s);
        assert_eq!(outs.len(), 5);
        assert!(outs.iter().all(|o| !o.flagged && o.is_downgraded()));
        assert!(run_llm_signals(&ctx(), &failing, &[], &s).is_empty());
    }

    #[test]
    fn batched_matches_per_signal() {
        let per = MockClient::new()
            .when_contains("reflects all the evidence", "{\"violates_evidence\": true, \"explanation\": \"x\"}")
            .when_contains("sufficient evidence", "{\"insufficient_evidence\": false}")
            .when_contains("Link the concepts", "{\"(a, b)\": \"no\"}")
            .when_contains("very similar to the ones used", "{\"alternative_column\": true}")
            .when_contains("correctly answers the user question. Your", "{\"correct\": false}");
        let batched = MockClient::new().otherwise(
            "```json\n{\"evidence_violation\": {\"violates_evidence\": true, \"explanation\": \"x\"},
            \"insufficient_evidence\": {\"insufficient_evidence\": false},
            \"question_clause_linking\": {\"(a, b)\": \"no\"},
            \"column_ambiguity\": {\"alternative_column\": true},
            \"self_check\": {\"correct\": false}}\n```",
        );
        let s = LlmSettings::default();
        let a = run_llm_signals(&ctx(), &per, &SignalId::LLM, &s);
        let b = run_llm_signals(&ctx(), &batched, &SignalId::LLM, &LlmSettings { mode: LlmMode::Batched, ..s });
        let flags = |v: &[SignalOutcome]| v.iter().map(|o| (o.signal_id, o.flagged)).collect::<Vec<_>>();
        assert_eq!(flags(&a), flags(&b));
        assert_eq!(batched.call_count(), 1);
        assert_eq!(per.call_count(), 5);
    }
}
