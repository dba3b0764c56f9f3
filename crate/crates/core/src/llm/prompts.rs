//! Prompt templates and the schema description they embed.
//!
//! Templates use `str.format` conventions: `{name}` is a placeholder and
//! `{{` / `}}` stand for literal braces.

use std::fmt::Write as _;

use thiserror::Error;

use crate::catalog::{DatabaseCatalog, SampleValues};
use crate::exec::Cell;
use crate::ident::QualifiedColumn;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PromptTemplate {
    VanillaTextToSql,
    EvidenceViolation,
    InsufficientEvidence,
    QuestionClauseLinking,
    ColumnAmbiguity,
    SelfCheckBool,
    SelfCheckProb,
    SqlCorrection,
    SelectError,
    Audit,
    BatchedDetection,
}

impl PromptTemplate {
    /// The eight published templates.
    pub const PUBLISHED: [PromptTemplate; 8] = [
        PromptTemplate::VanillaTextToSql,
        PromptTemplate::EvidenceViolation,
        PromptTemplate::InsufficientEvidence,
        PromptTemplate::QuestionClauseLinking,
        PromptTemplate::ColumnAmbiguity,
        PromptTemplate::SelfCheckBool,
        PromptTemplate::SelfCheckProb,
        PromptTemplate::SqlCorrection,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            PromptTemplate::VanillaTextToSql => "vanilla_text_to_sql.txt",
            PromptTemplate::EvidenceViolation => "evidence_violation.txt",
            PromptTemplate::InsufficientEvidence => "insufficient_evidence.txt",
            PromptTemplate::QuestionClauseLinking => "question_clause_linking.txt",
            PromptTemplate::ColumnAmbiguity => "column_ambiguity.txt",
            PromptTemplate::SelfCheckBool => "self_check_bool.txt",
            PromptTemplate::SelfCheckProb => "self_check_prob.txt",
            PromptTemplate::SqlCorrection => "sql_correction.txt",
            PromptTemplate::SelectError => "select_error.txt",
            PromptTemplate::Audit => "audit.txt",
            PromptTemplate::BatchedDetection => "batched_detection.txt",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            PromptTemplate::VanillaTextToSql => include_str!("../../prompts/vanilla_text_to_sql.txt"),
            PromptTemplate::EvidenceViolation => include_str!("../../prompts/evidence_violation.txt"),
            PromptTemplate::InsufficientEvidence => include_str!("../../prompts/insufficient_evidence.txt"),
            PromptTemplate::QuestionClauseLinking => include_str!("../../prompts/question_clause_linking.txt"),
            PromptTemplate::ColumnAmbiguity => include_str!("../../prompts/column_ambiguity.txt"),
            PromptTemplate::SelfCheckBool => include_str!("../../prompts/self_check_bool.txt"),
            PromptTemplate::SelfCheckProb => include_str!("../../prompts/self_check_prob.txt"),
            PromptTemplate::SqlCorrection => include_str!("../../prompts/sql_correction.txt"),
            PromptTemplate::SelectError => include_str!("../../prompts/select_error.txt"),
            PromptTemplate::Audit => include_str!("../../prompts/audit.txt"),
            PromptTemplate::BatchedDetection => include_str!("../../prompts/batched_detection.txt"),
        }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for seg in segments(self.text()).unwrap_or_default() {
            if let Segment::Field(name) = seg {
                if !out.contains(&name) {
                    out.push(name);
                }
            }
        }
        out
    }

    pub fn render(self, values: &[(&str, &str)]) -> Result<String, FormatError> {
        format_template(self.text(), values)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("unmatched '{0}' at byte {1}")]
    Unmatched(char, usize),
    #[error("no value for placeholder {{{0}}}")]
    Missing(String),
}

#[derive(Clone, Debug, PartialEq)]
enum Segment {
    Text(String),
    Field(String),
}

fn segments(template: &str) -> Result<Vec<Segment>, FormatError> {
    let mut out = Vec::new();
    let mut text = String::new();
    let mut chars = template.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '{' if chars.peek().map(|p| p.1) == Some('{') => {
                chars.next();
                text.push('{');
            }
            '}' if chars.peek().map(|p| p.1) == Some('}') => {
                chars.next();
                text.push('}');
            }
            '{' => {
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some((_, '}')) => break,
                        Some((_, ch)) => name.push(ch),
                        None => return Err(FormatError::Unmatched('{', i)),
                    }
                }
                out.push(Segment::Text(std::mem::take(&mut text)));
                out.push(Segment::Field(name));
            }
            '}' => return Err(FormatError::Unmatched('}', i)),
            c => text.push(c),
        }
    }
    out.push(Segment::Text(text));
    Ok(out)
}

/// `str.format`-style substitution of named fields.
pub fn format_template(template: &str, values: &[(&str, &str)]) -> Result<String, FormatError> {
    let mut out = String::with_capacity(template.len());
    for seg in segments(template)? {
        match seg {
            Segment::Text(t) => out.push_str(&t),
            Segment::Field(name) => {
                let v = values
                    .iter()
                    .find(|(k, _)| *k == name)
                    .ok_or_else(|| FormatError::Missing(name.clone()))?;
                out.push_str(v.1);
            }
        }
    }
    Ok(out)
}

/// Inputs shared by the detection prompts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PromptContext {
    pub question: String,
    pub evidence: String,
    pub db_description: String,
    pub sql: String,
}

impl PromptContext {
    fn base(&self) -> [(&str, &str); 4] {
        [
            ("question", self.question.as_str()),
            ("evidence", self.evidence.as_str()),
            ("db_desc_str", self.db_description.as_str()),
            ("sql_query", self.sql.as_str()),
        ]
    }

    /// Renders one of the detection templates.
    pub fn render(&self, template: PromptTemplate) -> String {
        template.render(&self.base()).expect("detection templates use only the four shared fields")
    }

    pub fn render_batched(&self, self_check_shape: &str) -> String {
        let mut v = self.base().to_vec();
        v.push(("self_check_shape", self_check_shape));
        PromptTemplate::BatchedDetection.render(&v).expect("batched template fields")
    }

    pub fn render_correction(&self, old_sql: &str, error_report: &str) -> String {
        PromptTemplate::SqlCorrection
            .render(&[
                ("question", &self.question),
                ("evidence", &self.evidence),
                ("db_desc", &self.db_description),
                ("old_sql", old_sql),
                ("error_report", error_report),
            ])
            .expect("correction template fields")
    }

    pub fn render_selector(&self, reports: &str) -> String {
        let mut v = self.base().to_vec();
        v.push(("error_reports", reports));
        PromptTemplate::SelectError.render(&v).expect("selector template fields")
    }

    pub fn render_audit(&self, sql_a: &str, sql_b: &str) -> String {
        let mut v = self.base().to_vec();
        v.push(("sql_a", sql_a));
        v.push(("sql_b", sql_b));
        PromptTemplate::Audit.render(&v).expect("audit template fields")
    }
}

const MAX_EXAMPLE_CHARS: usize = 80;

fn py_repr(cell: &Cell) -> String {
    match cell {
        Cell::Null => "None".into(),
        Cell::Integer(i) => i.to_string(),
        Cell::Real(f) => format!("{f:?}"),
        Cell::Blob(_) => "b'...'".into(),
        Cell::Text(s) => {
            let s: String = s.chars().take(MAX_EXAMPLE_CHARS).collect();
            format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
        }
    }
}

/// Schema text in the bracketed per-table layout used by the prompts.
///
/// Tables and columns follow catalog order; a column without a description
/// repeats its name.
pub fn render_db_description(catalog: &DatabaseCatalog, samples: &SampleValues) -> String {
    if catalog.tables.is_empty() {
        return String::new();
    }
    let mut out = String::new();
    let _ = writeln!(out, "[DB_ID]{}", catalog.db_id);
    out.push_str("[Database Schema]\n");
    for table in &catalog.tables {
        let _ = writeln!(out, "# Table: {}", table.name);
        out.push_str("[\n");
        for col in &table.columns {
            let desc = col.description.as_deref().unwrap_or(col.name.as_str());
            let key = QualifiedColumn::new(table.name.clone(), col.name.clone());
            let examples = samples.get(&key).filter(|v| !v.is_empty());
            match examples {
                Some(vals) => {
                    let list: Vec<String> = vals.iter().map(py_repr).collect();
                    let _ = writeln!(out, "  ({}, {desc}. Value examples: [{}].),", col.name, list.join(", "));
                }
                None => {
                    let _ = writeln!(out, "  ({}, {desc}.),", col.name);
                }
            }
        }
        out.push_str("]\n");
    }
    out.pop();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_semantics() {
        assert_eq!(format_template("{{a}} {b}", &[("b", "x")]).unwrap(), "{a} x");
        assert_eq!(format_template("{a}{a}", &[("a", "1")]).unwrap(), "11");
        assert_eq!(format_template("{a}", &[]), Err(FormatError::Missing("a".into())));
        assert!(matches!(format_template("x } y", &[]), Err(FormatError::Unmatched('}', 2))));
    }

    #[test]
    fn published_placeholders() {
        let four = ["question", "evidence", "db_desc_str"];
        assert_eq!(PromptTemplate::VanillaTextToSql.placeholders(), four);
        assert_eq!(
            PromptTemplate::EvidenceViolation.placeholders(),
            ["question", "evidence", "sql_query"]
        );
        for t in [
            PromptTemplate::InsufficientEvidence,
            PromptTemplate::QuestionClauseLinking,
            PromptTemplate::ColumnAmbiguity,
            PromptTemplate::SelfCheckBool,
            PromptTemplate::SelfCheckProb,
        ] {
            assert_eq!(t.placeholders(), ["question", "evidence", "db_desc_str", "sql_query"], "{t:?}");
        }
        assert_eq!(
            PromptTemplate::SqlCorrection.placeholders(),
            ["question", "evidence", "db_desc", "old_sql", "error_report"]
        );
    }

    #[test]
    fn python_repr() {
        assert_eq!(py_repr(&Cell::Text("it's".into())), "'it\\'s'");
        assert_eq!(py_repr(&Cell::Null), "None");
        assert_eq!(py_repr(&Cell::Real(2.0)), "2.0");
    }
}
