//! Detection over one database: database signals, then model-judged ones.

use serde::{Deserialize, Serialize};

use crate::catalog::{DatabaseCatalog, SampleValues};
use crate::exec::{Database, ExecLimits};
use crate::llm::{render_db_description, run_llm_signals, CompletionClient, LlmSettings, PromptContext};
use crate::signals::{run_db_signals, DetectionContext, SemanticScorer, SignalId, SignalOutcome, SignalThresholds, TokenOverlapScorer};

static DEFAULT_SCORER: TokenOverlapScorer = TokenOverlapScorer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub enabled: Vec<SignalId>,
    pub thresholds: SignalThresholds,
    pub limits: ExecLimits,
    pub llm: LlmSettings,
    /// Example values per column in the rendered schema.
    pub sample_values: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            enabled: SignalId::ALL.to_vec(),
            thresholds: SignalThresholds::default(),
            limits: ExecLimits::default(),
            llm: LlmSettings::default(),
            sample_values: 6,
        }
    }
}

/// Runs the enabled signals for queries against one database.
///
/// Model-judged signals run only when a client is attached; without one
/// they are absent from the output and their labelers abstain.
pub struct Detector<'a> {
    pub catalog: &'a DatabaseCatalog,
    pub db: &'a Database,
    pub client: Option<&'a dyn CompletionClient>,
    pub config: DetectorConfig,
    pub scorer: &'a dyn SemanticScorer,
    db_description: String,
}

impl<'a> Detector<'a> {
    pub fn new(catalog: &'a DatabaseCatalog, db: &'a Database) -> Self {
        Self::with_config(catalog, db, DetectorConfig::default())
    }

    pub fn with_config(catalog: &'a DatabaseCatalog, db: &'a Database, config: DetectorConfig) -> Self {
        let samples = catalog
            .sample_values(db, config.sample_values)
            .unwrap_or_else(|_| SampleValues::new());
        Self::with_description(catalog, db, config, render_db_description(catalog, &samples))
    }

    /// Reuses a schema description rendered earlier for the same database.
    pub fn with_description(
        catalog: &'a DatabaseCatalog,
        db: &'a Database,
        config: DetectorConfig,
        db_description: String,
    ) -> Self {
        Detector {
            catalog,
            db,
            client: None,
            db_description,
            config,
            scorer: &DEFAULT_SCORER,
        }
    }

    pub fn with_client(mut self, client: &'a dyn CompletionClient) -> Self {
        self.client = Some(client);
        self
    }

    pub fn with_scorer(mut self, scorer: &'a dyn SemanticScorer) -> Self {
        self.scorer = scorer;
        self
    }

    pub fn db_description(&self) -> &str {
        &self.db_description
    }

    pub fn prompt_context(&self, question: &str, evidence: &str, sql: &str) -> PromptContext {
        PromptContext {
            question: question.to_string(),
            evidence: evidence.to_string(),
            db_description: self.db_description.clone(),
            sql: sql.to_string(),
        }
    }

    pub fn detection_context(&self, question: &str, evidence: &str, sql: &str) -> DetectionContext<'a> {
        DetectionContext::new(question, evidence, sql, self.catalog, self.db)
            .with_limits(self.config.limits)
            .with_thresholds(self.config.thresholds.clone())
            .with_scorer(self.scorer)
    }

    /// Runs every enabled signal.
    pub fn detect(&self, question: &str, evidence: &str, sql: &str) -> Vec<SignalOutcome> {
        self.detect_signals(question, evidence, sql, &self.config.enabled)
    }

    /// Runs the given signals, restricted to the enabled set, in registry order.
    pub fn detect_signals(&self, question: &str, evidence: &str, sql: &str, signals: &[SignalId]) -> Vec<SignalOutcome> {
        let wanted: Vec<SignalId> = signals.iter().copied().filter(|s| self.config.enabled.contains(s)).collect();
        let mut out = run_db_signals(&self.detection_context(question, evidence, sql), &wanted);
        if let Some(client) = self.client {
            let ctx = self.prompt_context(question, evidence, sql);
            out.extend(run_llm_signals(&ctx, client, &wanted, &self.config.llm));
        }
        out
    }
}
