//! Error signals and their shared outcome type.

pub mod db;
mod score;

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::catalog::DatabaseCatalog;
use crate::exec::{Database, ExecLimits};
use crate::query::{parse_with_schema, StructuredQuery};

pub use db::run_db_signals;
pub use score::{semantic_score, table_score, tokens, SemanticScorer, TokenOverlapScorer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalId {
    AbnormalResult,
    EmptyPredicate,
    IncorrectFilterInSubquery,
    IncorrectGroupBy,
    IncorrectJoinPredicate,
    SuboptimalJoinTree,
    TableSimilarity,
    UnnecessarySubquery,
    ValueAmbiguity,
    ColumnAmbiguity,
    EvidenceViolation,
    InsufficientEvidence,
    LlmSelfCheck,
    QuestionClauseLinking,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignalGroup {
    Db,
    Llm,
}

impl SignalId {
    /// Registry order.
    pub const ALL: [SignalId; 14] = [
        SignalId::AbnormalResult,
        SignalId::EmptyPredicate,
        SignalId::IncorrectFilterInSubquery,
        SignalId::IncorrectGroupBy,
        SignalId::IncorrectJoinPredicate,
        SignalId::SuboptimalJoinTree,
        SignalId::TableSimilarity,
        SignalId::UnnecessarySubquery,
        SignalId::ValueAmbiguity,
        SignalId::ColumnAmbiguity,
        SignalId::EvidenceViolation,
        SignalId::InsufficientEvidence,
        SignalId::LlmSelfCheck,
        SignalId::QuestionClauseLinking,
    ];

    pub const DB: [SignalId; 9] = [
        SignalId::AbnormalResult,
        SignalId::EmptyPredicate,
        SignalId::IncorrectFilterInSubquery,
        SignalId::IncorrectGroupBy,
        SignalId::IncorrectJoinPredicate,
        SignalId::SuboptimalJoinTree,
        SignalId::TableSimilarity,
        SignalId::UnnecessarySubquery,
        SignalId::ValueAmbiguity,
    ];

    pub const LLM: [SignalId; 5] = [
        SignalId::ColumnAmbiguity,
        SignalId::EvidenceViolation,
        SignalId::InsufficientEvidence,
        SignalId::LlmSelfCheck,
        SignalId::QuestionClauseLinking,
    ];

    pub fn group(self) -> SignalGroup {
        if (self as usize) < 9 {
            SignalGroup::Db
        } else {
            SignalGroup::Llm
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SignalId::AbnormalResult => "Abnormal Result",
            SignalId::EmptyPredicate => "Empty Predicate",
            SignalId::IncorrectFilterInSubquery => "Incorrect Filter in Subquery",
            SignalId::IncorrectGroupBy => "Incorrect GROUP BY",
            SignalId::IncorrectJoinPredicate => "Incorrect Join Predicate",
            SignalId::SuboptimalJoinTree => "Suboptimal Join Tree",
            SignalId::TableSimilarity => "Table Similarity",
            SignalId::UnnecessarySubquery => "Unnecessary Subquery",
            SignalId::ValueAmbiguity => "Value Ambiguity",
            SignalId::ColumnAmbiguity => "Column Ambiguity",
            SignalId::EvidenceViolation => "Evidence Violation",
            SignalId::InsufficientEvidence => "Insufficient Evidence",
            SignalId::LlmSelfCheck => "LLM Self-Check",
            SignalId::QuestionClauseLinking => "Incorrect Question Clause Linking",
        }
    }

    /// Snake-case key used in configuration files and on the command line.
    pub fn key(self) -> String {
        serde_json::to_value(self).unwrap().as_str().unwrap().to_string()
    }

    pub fn from_key(key: &str) -> Option<SignalId> {
        let norm = key.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        SignalId::ALL.into_iter().find(|s| s.key() == norm)
    }
}

impl fmt::Display for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One signal's verdict on one query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalOutcome {
    pub signal_id: SignalId,
    pub flagged: bool,
    pub problematic_clauses: IndexMap<String, Vec<String>>,
    pub detail: String,
    pub raw_evidence: serde_json::Value,
    /// Correctness probability, reported by the probability-mode self-check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

impl SignalOutcome {
    pub fn clear(signal_id: SignalId, raw_evidence: serde_json::Value) -> Self {
        SignalOutcome {
            signal_id,
            flagged: false,
            problematic_clauses: IndexMap::new(),
            detail: String::new(),
            raw_evidence,
            probability: None,
        }
    }

    pub fn flag(
        signal_id: SignalId,
        problematic_clauses: IndexMap<String, Vec<String>>,
        detail: impl Into<String>,
        raw_evidence: serde_json::Value,
    ) -> Self {
        SignalOutcome {
            signal_id,
            flagged: true,
            problematic_clauses,
            detail: detail.into(),
            raw_evidence,
            probability: None,
        }
    }

    /// Not flagged because the signal could not be evaluated.
    pub fn downgrade(signal_id: SignalId, note: impl Into<String>) -> Self {
        let note = note.into();
        SignalOutcome {
            signal_id,
            flagged: false,
            problematic_clauses: IndexMap::new(),
            detail: String::new(),
            raw_evidence: serde_json::json!({ "downgraded": note }),
            probability: None,
        }
    }

    pub fn is_downgraded(&self) -> bool {
        self.raw_evidence.get("downgraded").is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalThresholds {
    /// Unnecessary Subquery fires above this many subqueries.
    pub max_subqueries: usize,
    /// Smallest column group Table Similarity considers.
    pub min_group_size: usize,
    /// Probability-mode self-check flags below this value.
    pub self_check_threshold: f64,
}

impl Default for SignalThresholds {
    fn default() -> Self {
        SignalThresholds {
            max_subqueries: 3,
            min_group_size: 2,
            self_check_threshold: 0.5,
        }
    }
}

static DEFAULT_SCORER: TokenOverlapScorer = TokenOverlapScorer;

/// Everything a signal may look at for one query.
#[derive(Clone)]
pub struct DetectionContext<'a> {
    pub question: String,
    pub evidence: String,
    pub sql: String,
    pub sq: StructuredQuery,
    pub catalog: &'a DatabaseCatalog,
    pub db: &'a Database,
    pub limits: ExecLimits,
    pub thresholds: SignalThresholds,
    pub scorer: &'a dyn SemanticScorer,
}

impl<'a> DetectionContext<'a> {
    pub fn new(
        question: impl Into<String>,
        evidence: impl Into<String>,
        sql: impl Into<String>,
        catalog: &'a DatabaseCatalog,
        db: &'a Database,
    ) -> Self {
        let sql = sql.into();
        DetectionContext {
            question: question.into(),
            evidence: evidence.into(),
            sq: parse_with_schema(&sql, catalog),
            sql,
            catalog,
            db,
            limits: ExecLimits::default(),
            thresholds: SignalThresholds::default(),
            scorer: &DEFAULT_SCORER,
        }
    }

    pub fn with_limits(mut self, limits: ExecLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn with_thresholds(mut self, thresholds: SignalThresholds) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn with_scorer(mut self, scorer: &'a dyn SemanticScorer) -> Self {
        self.scorer = scorer;
        self
    }

    /// Same question and database, different query.
    pub fn with_sql(&self, sql: &str) -> Self {
        let mut next = self.clone();
        next.sql = sql.to_string();
        next.sq = parse_with_schema(sql, self.catalog);
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_shape() {
        assert_eq!(SignalId::ALL.len(), 14);
        assert!(SignalId::DB.iter().all(|s| s.group() == SignalGroup::Db));
        assert!(SignalId::LLM.iter().all(|s| s.group() == SignalGroup::Llm));
        for (i, s) in SignalId::ALL.iter().enumerate() {
            assert_eq!(s.index(), i);
            assert_eq!(SignalId::from_key(&s.key()), Some(*s));
        }
        assert_eq!(SignalId::from_key("Suboptimal-Join-Tree"), Some(SignalId::SuboptimalJoinTree));
    }
}
