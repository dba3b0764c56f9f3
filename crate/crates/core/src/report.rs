//! Error reports: the per-signal text registry and report assembly.

use indexmap::IndexMap;
use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::aggregate::{Confidence, ConfidenceTable};
use crate::signals::{SignalGroup, SignalId, SignalOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegistryEntry {
    pub signal_id: SignalId,
    pub description: &'static str,
    pub instruction: &'static str,
    pub example: Option<&'static str>,
}

impl RegistryEntry {
    pub fn group(&self) -> SignalGroup {
        self.signal_id.group()
    }
}

const fn entry(
    signal_id: SignalId,
    description: &'static str,
    instruction: &'static str,
    example: Option<&'static str>,
) -> RegistryEntry {
    RegistryEntry {
        signal_id,
        description,
        instruction,
        example,
    }
}

pub const REGISTRY: [RegistryEntry; 14] = [
    entry(
        SignalId::AbnormalResult,
        "The SQL query returns an abnormal result, such as an empty output or a column containing only zeros or NULL values.",
        "Review the filters, joins and selected columns of the SQL query so that it returns meaningful rows for the question.",
        None,
    ),
    entry(
        SignalId::EmptyPredicate,
        "A predicate in the SQL query matches no rows in the database, which may indicate a wrong column, value or comparison operator.",
        "Check the listed predicates against the database values and revise the column, literal or operator so that they match the intended rows.",
        None,
    ),
    entry(
        SignalId::IncorrectFilterInSubquery,
        "A filter of the form column = (subquery) uses a subquery that returns more than one row, so only its first value is compared.",
        "Use IN instead of = for the subquery filter, or restrict the subquery so that it returns exactly one value.",
        Some("WHERE id = (SELECT id FROM t WHERE x = 1) should be WHERE id IN (SELECT id FROM t WHERE x = 1) when the subquery returns several ids."),
    ),
    entry(
        SignalId::IncorrectGroupBy,
        "The SQL query uses a GROUP BY clause without any aggregate function, which changes the query semantics and acts like DISTINCT.",
        "Remove the GROUP BY clause or add the aggregate function the question asks for.",
        Some("SELECT name FROM t GROUP BY name returns the same rows as SELECT DISTINCT name FROM t."),
    ),
    entry(
        SignalId::IncorrectJoinPredicate,
        "The SQL query joins tables on columns that are not related by a primary key-foreign key relationship.",
        "Review and revise the join predicates so that the tables are joined on related key columns.",
        None,
    ),
    entry(
        SignalId::SuboptimalJoinTree,
        "The SQL query uses more tables than necessary in the join clauses, which may lead to potential errors.",
        "Review and revise the SQL query to include only the essential tables in the join clauses.",
        None,
    ),
    entry(
        SignalId::TableSimilarity,
        "The SQL query uses a table that has a similar alternative in the database which may better match the question.",
        "Check whether the alternative table holds the information the question asks for and use it if so.",
        None,
    ),
    entry(
        SignalId::UnnecessarySubquery,
        "The SQL query uses more subqueries than necessary, which increases its complexity and the likelihood of errors.",
        "Simplify the SQL query by replacing subqueries with joins or direct filters where possible.",
        None,
    ),
    entry(
        SignalId::ValueAmbiguity,
        "A literal value used in the SQL query also appears in other columns that may better match the question.",
        "Check which column the question refers to for the listed values and revise the predicate to use that column.",
        None,
    ),
    entry(
        SignalId::ColumnAmbiguity,
        "The database contains columns very similar to the ones used in the SQL query, and one of them may better answer the question.",
        "Compare the similar columns with the question and use the column that matches its intent.",
        None,
    ),
    entry(
        SignalId::EvidenceViolation,
        "The SQL query does not reflect all the evidence given with the question.",
        "Revise the SQL query so that every piece of evidence is applied as stated.",
        None,
    ),
    entry(
        SignalId::InsufficientEvidence,
        "The available evidence is insufficient to decide whether the SQL query answers the question correctly.",
        "Check the assumptions the SQL query makes beyond the evidence and revise any that conflict with the question.",
        None,
    ),
    entry(
        SignalId::LlmSelfCheck,
        "A model review judged that the SQL query may not answer the question correctly.",
        "Review the SQL query against the question and revise the parts that do not match its intent.",
        None,
    ),
    entry(
        SignalId::QuestionClauseLinking,
        "Some parts of the question are linked to SQL clauses with low confidence.",
        "Revise the listed clauses so that each one matches the part of the question it is meant to answer.",
        None,
    ),
];

pub fn registry_entry(signal: SignalId) -> &'static RegistryEntry {
    REGISTRY.iter().find(|e| e.signal_id == signal).expect("every signal has a registry entry")
}

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("signal {0} did not fire; no report to assemble")]
    NotFlagged(SignalId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub signal_id: SignalId,
    pub signal_description: String,
    pub example: Option<String>,
    pub correction_instruction: String,
    pub problematic_clauses: IndexMap<String, Vec<String>>,
    pub confidence: Confidence,
}

impl Serialize for ErrorReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(if self.example.is_some() { 5 } else { 4 }))?;
        m.serialize_entry("signal description", &self.signal_description)?;
        if let Some(ex) = &self.example {
            m.serialize_entry("example", ex)?;
        }
        m.serialize_entry("correction instruction", &self.correction_instruction)?;
        m.serialize_entry("problematic clauses", &self.problematic_clauses)?;
        m.serialize_entry("confidence", &self.confidence)?;
        m.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReport {
    #[serde(rename = "signal description")]
    signal_description: String,
    #[serde(rename = "example", default)]
    example: Option<String>,
    #[serde(rename = "correction instruction")]
    correction_instruction: String,
    #[serde(rename = "problematic clauses")]
    problematic_clauses: IndexMap<String, Vec<String>>,
    confidence: Confidence,
}

impl<'de> Deserialize<'de> for ErrorReport {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawReport::deserialize(d)?;
        let entry = REGISTRY
            .iter()
            .find(|e| raw.signal_description.starts_with(e.description))
            .ok_or_else(|| D::Error::custom("signal description matches no registered signal"))?;
        Ok(ErrorReport {
            signal_id: entry.signal_id,
            signal_description: raw.signal_description,
            example: raw.example,
            correction_instruction: raw.correction_instruction,
            problematic_clauses: raw.problematic_clauses,
            confidence: raw.confidence,
        })
    }
}

impl ErrorReport {
    /// Pretty JSON with four-space indentation.
    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let fmt = serde_json::ser::PrettyFormatter::with_indent(b"    ");
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
        self.serialize(&mut ser).expect("report serializes");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

/// Builds the report for a fired signal. Model-judged signals append their
/// explanation to the description.
pub fn assemble_report(outcome: &SignalOutcome, confidence: Confidence) -> Result<ErrorReport, ReportError> {
    if !outcome.flagged {
        return Err(ReportError::NotFlagged(outcome.signal_id));
    }
    let entry = registry_entry(outcome.signal_id);
    let mut description = entry.description.to_string();
    if entry.group() == SignalGroup::Llm && !outcome.detail.trim().is_empty() {
        description.push_str(" Explanation: ");
        description.push_str(outcome.detail.trim());
    }
    Ok(ErrorReport {
        signal_id: outcome.signal_id,
        signal_description: description,
        example: entry.example.map(str::to_string),
        correction_instruction: entry.instruction.to_string(),
        problematic_clauses: outcome.problematic_clauses.clone(),
        confidence,
    })
}

/// Stable ordering by confidence bucket, then registry order.
pub fn rank_reports(mut reports: Vec<ErrorReport>) -> Vec<ErrorReport> {
    reports.sort_by_key(|r| (r.confidence, r.signal_id.index()));
    reports
}

/// Reports for every fired outcome, ranked.
pub fn reports_for(outcomes: &[SignalOutcome], confidence: &ConfidenceTable) -> Vec<ErrorReport> {
    let reports = outcomes
        .iter()
        .filter(|o| o.flagged)
        .filter_map(|o| assemble_report(o, confidence.get(o.signal_id)).ok())
        .collect();
    rank_reports(reports)
}
