//! Signal-guided iterative correction with a syntax-repair loop, a guardrail
//! check and a final audit.

use serde::{Deserialize, Serialize};

use crate::aggregate::ConfidenceTable;
use crate::llm::{extract_sql_block, parse_json_block, CompletionClient, CompletionParams, PromptContext};
use crate::pipeline::Detector;
use crate::report::{assemble_report, reports_for, ErrorReport};
use crate::signals::{SignalId, SignalOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectionConfig {
    pub max_iter: usize,
    pub guardrail: Option<SignalId>,
    /// Signals eligible for correction; `None` uses the detector's enabled set.
    pub enabled: Option<Vec<SignalId>>,
    pub syntax_repair_budget: usize,
    pub auditor: bool,
    pub selector: bool,
    pub params: CompletionParams,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        CorrectionConfig {
            max_iter: 5,
            guardrail: Some(SignalId::AbnormalResult),
            enabled: None,
            syntax_repair_budget: 3,
            auditor: true,
            selector: true,
            params: CompletionParams::default(),
        }
    }
}

/// One prompt and what came back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub prompt: String,
    pub response: Option<String>,
    pub error: Option<String>,
}

fn exchange(client: &dyn CompletionClient, prompt: String, params: &CompletionParams) -> Exchange {
    match client.complete(&prompt, params) {
        Ok(r) => Exchange {
            prompt,
            response: Some(r),
            error: None,
        },
        Err(e) => Exchange {
            prompt,
            response: None,
            error: Some(e.to_string()),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub report: ErrorReport,
    pub exchange: Option<Exchange>,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fix {
    pub revised_sql: String,
    pub repairs_used: usize,
    pub exchanges: Vec<Exchange>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub selection: Selection,
    pub fix: Fix,
    pub outcomes_after: Vec<SignalOutcome>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditChoice {
    Original,
    Revised,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditTrace {
    pub exchange: Option<Exchange>,
    pub choice: AuditChoice,
    pub fallback: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    NoErrors,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTrace {
    pub original_sql: String,
    pub initial_outcomes: Vec<SignalOutcome>,
    pub iterations: Vec<IterationTrace>,
    pub fixed_signals: Vec<SignalId>,
    pub guardrail_fired: bool,
    pub guardrail_fix: Option<Fix>,
    pub audit: Option<AuditTrace>,
    pub final_sql: String,
    pub terminated_by: Termination,
}

/// Numbered report list as shown to the selector.
pub fn format_report_list(reports: &[ErrorReport]) -> String {
    reports
        .iter()
        .enumerate()
        .map(|(i, r)| format!("[{i}]\n{}", r.to_json()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Picks the report to fix first. A single report, a disabled selector or
/// an unusable answer yields the top-ranked report.
pub fn select_error(
    ctx: &PromptContext,
    reports: &[ErrorReport],
    client: &dyn CompletionClient,
    params: &CompletionParams,
) -> Selection {
    assert!(!reports.is_empty(), "select_error needs at least one report");
    if reports.len() == 1 {
        return Selection {
            report: reports[0].clone(),
            exchange: None,
            fallback: false,
        };
    }
    let ex = exchange(client, ctx.render_selector(&format_report_list(reports)), params);
    let idx = ex
        .response
        .as_deref()
        .and_then(|r| parse_json_block(r).ok())
        .and_then(|m| m.get("most_critical").cloned())
        .and_then(|v| v.as_u64().or_else(|| v.as_str().and_then(|s| s.trim().parse().ok())))
        .map(|i| i as usize)
        .filter(|i| *i < reports.len());
    Selection {
        report: reports[idx.unwrap_or(0)].clone(),
        exchange: Some(ex),
        fallback: idx.is_none(),
    }
}

fn syntax_reprompt(prompt: &str, sql: &str, diag: &str) -> String {
    format!(
        "{prompt}\n\n[Syntax Error]\nThe SQL below failed to parse.\n```sql\n{sql}\n```\n{diag}\nPlease fix the SQL syntax error and return the corrected SQL in a ```sql code block."
    )
}

/// Asks the model to fix one reported error. Unparseable output is sent
/// back with the engine diagnostic up to `budget` times; if it never parses
/// the input SQL is returned.
pub fn fix_error(
    ctx: &PromptContext,
    detector: &Detector<'_>,
    sql: &str,
    report: &ErrorReport,
    client: &dyn CompletionClient,
    budget: usize,
    params: &CompletionParams,
) -> Fix {
    let base = ctx.render_correction(sql, &report.to_json());
    let mut prompt = base.clone();
    let mut exchanges = Vec::new();
    let mut repairs = 0;
    loop {
        let ex = exchange(client, prompt, params);
        let response = ex.response.clone();
        exchanges.push(ex);
        let keep = |note: String, exchanges, repairs_used| Fix {
            revised_sql: sql.to_string(),
            repairs_used,
            exchanges,
            note: Some(note),
        };
        let Some(response) = response else {
            return keep("completion failed; SQL unchanged".into(), exchanges, repairs);
        };
        let Some(candidate) = extract_sql_block(&response) else {
            return keep("no SQL block in response; SQL unchanged".into(), exchanges, repairs);
        };
        match detector.db.check_syntax(&candidate) {
            Ok(()) => {
                return Fix {
                    revised_sql: candidate,
                    repairs_used: repairs,
                    exchanges,
                    note: None,
                }
            }
            Err(diag) if repairs < budget => {
                repairs += 1;
                prompt = syntax_reprompt(&base, &candidate, &diag.to_string());
            }
            Err(diag) => {
                return keep(format!("still unparseable after {budget} repairs ({diag}); SQL unchanged"), exchanges, repairs);
            }
        }
    }
}

fn fires(outcomes: &[SignalOutcome], signal: SignalId) -> bool {
    outcomes.iter().any(|o| o.signal_id == signal && o.flagged)
}

/// Chooses between the original and revised query.
pub fn audit(
    ctx: &PromptContext,
    detector: &Detector<'_>,
    original: &str,
    revised: &str,
    guardrail: Option<SignalId>,
    client: &dyn CompletionClient,
    params: &CompletionParams,
) -> AuditTrace {
    if original.trim() == revised.trim() {
        return AuditTrace {
            exchange: None,
            choice: AuditChoice::Original,
            fallback: false,
        };
    }
    let ex = exchange(client, ctx.render_audit(original, revised), params);
    let choice = ex
        .response
        .as_deref()
        .and_then(|r| parse_json_block(r).ok())
        .and_then(|m| m.get("choice").and_then(|c| c.as_str()).map(|c| c.trim().to_ascii_uppercase()))
        .and_then(|c| match c.as_str() {
            "A" => Some(AuditChoice::Original),
            "B" => Some(AuditChoice::Revised),
            _ => None,
        });
    let fallback = choice.is_none();
    let choice = choice.unwrap_or_else(|| {
        let newly_clear = guardrail.is_some_and(|g| {
            let on = |sql: &str| fires(&detector.detect_signals(&ctx.question, &ctx.evidence, sql, &[g]), g);
            on(original) && !on(revised)
        });
        if newly_clear {
            AuditChoice::Revised
        } else {
            AuditChoice::Original
        }
    });
    AuditTrace {
        exchange: Some(ex),
        choice,
        fallback,
    }
}

/// Detect, then repeatedly select and fix the most critical error until no
/// signal fires or `max_iter` is reached. Each signal is fixed at most once.
pub fn run_correction(
    detector: &Detector<'_>,
    question: &str,
    evidence: &str,
    sql: &str,
    config: &CorrectionConfig,
    confidence: &ConfidenceTable,
    client: &dyn CompletionClient,
) -> CorrectionTrace {
    let max_iter = config.max_iter.max(1);
    let mut active: Vec<SignalId> = config.enabled.clone().unwrap_or_else(|| detector.config.enabled.clone());
    let ctx_for = |sql: &str| detector.prompt_context(question, evidence, sql);

    let initial = detector.detect_signals(question, evidence, sql, &active);
    let mut outcomes = initial.clone();
    let mut current = sql.to_string();
    let mut iterations = Vec::new();
    let mut fixed = Vec::new();

    while outcomes.iter().any(|o| o.flagged) && iterations.len() < max_iter {
        let reports = reports_for(&outcomes, confidence);
        let ctx = ctx_for(&current);
        let selection = if config.selector {
            select_error(&ctx, &reports, client, &config.params)
        } else {
            Selection {
                report: reports[0].clone(),
                exchange: None,
                fallback: false,
            }
        };
        let signal = selection.report.signal_id;
        let fix = fix_error(&ctx, detector, &current, &selection.report, client, config.syntax_repair_budget, &config.params);
        current = fix.revised_sql.clone();
        active.retain(|s| *s != signal);
        fixed.push(signal);
        outcomes = detector.detect_signals(question, evidence, &current, &active);
        iterations.push(IterationTrace {
            selection,
            fix,
            outcomes_after: outcomes.clone(),
        });
    }
    let terminated_by = if outcomes.iter().any(|o| o.flagged) {
        Termination::MaxIter
    } else {
        Termination::NoErrors
    };

    let mut guardrail_fired = false;
    let mut guardrail_fix = None;
    if let Some(g) = config.guardrail.filter(|g| !fixed.contains(g) && detector.config.enabled.contains(g)) {
        let gout = detector.detect_signals(question, evidence, &current, &[g]);
        if let Some(o) = gout.iter().find(|o| o.signal_id == g && o.flagged) {
            guardrail_fired = true;
            let report = assemble_report(o, confidence.get(g)).expect("flagged outcome");
            let fix = fix_error(&ctx_for(&current), detector, &current, &report, client, config.syntax_repair_budget, &config.params);
            current = fix.revised_sql.clone();
            fixed.push(g);
            guardrail_fix = Some(fix);
        }
    }

    let (final_sql, audit_trace) = if config.auditor {
        let a = audit(&ctx_for(sql), detector, sql, &current, config.guardrail, client, &config.params);
        let chosen = match a.choice {
            AuditChoice::Original => sql.to_string(),
            AuditChoice::Revised => current.clone(),
        };
        (chosen, Some(a))
    } else {
        (current.clone(), None)
    };

    CorrectionTrace {
        original_sql: sql.to_string(),
        initial_outcomes: initial,
        iterations,
        fixed_signals: fixed,
        guardrail_fired,
        guardrail_fix,
        audit: audit_trace,
        final_sql,
        terminated_by,
    }
}
