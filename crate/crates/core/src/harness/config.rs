//! Run configuration, read from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::eval::EvalConfig;
use crate::correct::CorrectionConfig;
use crate::llm::{ClientError, CompletionClient, HttpClient, HttpConfig, MockClient, MockScript};
use crate::pipeline::DetectorConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Folder holding `<db_id>/<db_id>.sqlite`.
    pub db_root: PathBuf,
    /// Catalogs saved by `build-catalog` as `<db_id>.json`; built on the fly when absent.
    pub catalog_dir: Option<PathBuf>,
    /// Compare results as multisets instead of sets.
    pub multiset: bool,
    pub generator_tag: String,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            db_root: PathBuf::from("databases"),
            catalog_dir: None,
            multiset: false,
            generator_tag: "other".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// Model-judged signals are skipped.
    #[default]
    None,
    Mock,
    Http,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub mock_script: Option<PathBuf>,
    pub http: HttpConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub workers: usize,
    pub out_dir: PathBuf,
    pub name: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            workers: 4,
            out_dir: PathBuf::from("runs"),
            name: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub data: DataConfig,
    pub detector: DetectorConfig,
    pub correction: CorrectionConfig,
    pub backend: BackendConfig,
    pub eval: EvalConfig,
    pub run: RunConfig,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(PathBuf, String),
    #[error("invalid config {0}: {1}")]
    Parse(PathBuf, String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl HarnessConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e.to_string()))?;
        let cfg: HarnessConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse(path.to_path_buf(), e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| ConfigError::Parse(path.to_path_buf(), e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.correction.max_iter == 0 {
            return Err(ConfigError::Invalid("correction.max_iter must be at least 1".into()));
        }
        if let Some(g) = self.correction.guardrail {
            if !self.detector.enabled.contains(&g) {
                return Err(ConfigError::Invalid(format!("guardrail signal {g} is not enabled")));
            }
        }
        if self.run.workers == 0 {
            return Err(ConfigError::Invalid("run.workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }

    /// The configured completion backend, if any.
    pub fn client(&self) -> Result<Option<Box<dyn CompletionClient>>, ClientError> {
        match self.backend.kind {
            BackendKind::None => Ok(None),
            BackendKind::Http => Ok(Some(Box::new(HttpClient::new(self.backend.http.clone())?))),
            BackendKind::Mock => {
                let script = match &self.backend.mock_script {
                    Some(p) => {
                        let text = std::fs::read_to_string(p)
                            .map_err(|e| ClientError::Config(format!("mock script {}: {e}", p.display())))?;
                        serde_json::from_str::<MockScript>(&text)
                            .map_err(|e| ClientError::Config(format!("mock script {}: {e}", p.display())))?
                    }
                    None => MockScript::default(),
                };
                Ok(Some(Box::new(MockClient::from_script(&script))))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::SignalId;

    #[test]
    fn toml_roundtrip_and_defaults() {
        let cfg = HarnessConfig::default();
        let back: HarnessConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let partial: HarnessConfig = toml::from_str(
            "[detector]\nenabled = [\"abnormal_result\", \"empty_predicate\"]\n[correction]\nmax_iter = 2\nguardrail = \"abnormal_result\"\n",
        )
        .unwrap();
        assert_eq!(partial.detector.enabled, [SignalId::AbnormalResult, SignalId::EmptyPredicate]);
        assert_eq!(partial.correction.max_iter, 2);
        assert_eq!(partial.detector.thresholds.max_subqueries, 3);
        partial.validate().unwrap();
    }

    #[test]
    fn guardrail_must_be_enabled() {
        let mut cfg = HarnessConfig::default();
        cfg.detector.enabled = vec![SignalId::EmptyPredicate];
        assert!(cfg.validate().is_err());
    }
}
