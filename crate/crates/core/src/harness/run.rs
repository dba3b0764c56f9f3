//! Batch execution over datasets and the on-disk run directory.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use super::config::HarnessConfig;
use super::dataset::{label_sql, DatasetExample, DbRegistry, GoldError, Label, LoadError};
use crate::aggregate::{ConfidenceTable, FitError};
use crate::catalog::{build_catalog, catalog_hash, BuildOptions, CatalogError, CatalogFileError, DatabaseCatalog};
use crate::correct::{run_correction, CorrectionTrace};
use crate::exec::{Database, ExecError};
use crate::llm::{render_db_description, ClientError, CompletionClient};
use crate::pipeline::{Detector, DetectorConfig};
use crate::signals::SignalOutcome;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("database {db_id}: {source}")]
    Database { db_id: String, source: ExecError },
    #[error(transparent)]
    Gold(#[from] GoldError),
    #[error("catalog for {db_id}: {message}")]
    Catalog { db_id: String, message: String },
    #[error("{0}: {1}")]
    Io(PathBuf, String),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("completion backend: {0}")]
    Backend(#[from] ClientError),
    #[error("{0}")]
    Usage(String),
}

/// Applies `f` to every item on up to `workers` threads; results keep input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every slot filled")).collect()
}

/// Catalogs and rendered schema descriptions for the databases of a run.
pub struct Workspace {
    pub registry: DbRegistry,
    pub catalogs: BTreeMap<String, DatabaseCatalog>,
    pub descriptions: BTreeMap<String, String>,
}

impl Workspace {
    pub fn prepare<'a>(cfg: &HarnessConfig, db_ids: impl IntoIterator<Item = &'a str>) -> Result<Self, RunError> {
        let registry = DbRegistry::new(&cfg.data.db_root);
        let ids: BTreeSet<&str> = db_ids.into_iter().collect();
        let mut catalogs = BTreeMap::new();
        let mut descriptions = BTreeMap::new();
        for id in ids {
            let db = open(&registry, id)?;
            let saved = cfg.data.catalog_dir.as_ref().map(|d| d.join(format!("{id}.json")));
            let catalog = match saved.filter(|p| p.exists()) {
                Some(p) => DatabaseCatalog::load(&p).map_err(|e: CatalogFileError| RunError::Catalog {
                    db_id: id.into(),
                    message: e.to_string(),
                })?,
                None => build_catalog(&db, &BuildOptions::default()).map_err(|e: CatalogError| RunError::Catalog {
                    db_id: id.into(),
                    message: e.to_string(),
                })?,
            };
            let samples = catalog.sample_values(&db, cfg.detector.sample_values).unwrap_or_default();
            descriptions.insert(id.to_string(), render_db_description(&catalog, &samples));
            catalogs.insert(id.to_string(), catalog);
        }
        Ok(Workspace {
            registry,
            catalogs,
            descriptions,
        })
    }

    pub fn hashes(&self) -> BTreeMap<String, String> {
        self.catalogs.iter().map(|(k, c)| (k.clone(), catalog_hash(c))).collect()
    }

    pub fn detector<'a>(&'a self, db_id: &str, db: &'a Database, config: &DetectorConfig) -> Detector<'a> {
        Detector::with_description(
            &self.catalogs[db_id],
            db,
            config.clone(),
            self.descriptions[db_id].clone(),
        )
    }
}

fn open(registry: &DbRegistry, db_id: &str) -> Result<Database, RunError> {
    registry.open(db_id).map_err(|source| RunError::Database {
        db_id: db_id.to_string(),
        source,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QueryDetection {
    pub query_id: String,
    pub db_id: String,
    pub label: Label,
    pub outcomes: Vec<SignalOutcome>,
}

/// Runs detection and computes the gold label for every example.
pub fn detect_examples(
    ws: &Workspace,
    examples: &[DatasetExample],
    cfg: &HarnessConfig,
    client: Option<&dyn CompletionClient>,
) -> Result<Vec<QueryDetection>, RunError> {
    parallel_map(examples, cfg.run.workers, |ex| {
        let db = open(&ws.registry, &ex.db_id)?;
        let label = label_sql(
            &ex.query_id,
            &ex.predicted_sql,
            &ex.gold_sql,
            &db,
            &cfg.detector.limits,
            cfg.data.multiset,
        )?;
        let mut detector = ws.detector(&ex.db_id, &db, &cfg.detector);
        detector.client = client;
        let outcomes = detector.detect(&ex.question, &ex.evidence, &ex.predicted_sql);
        Ok(QueryDetection {
            query_id: ex.query_id.clone(),
            db_id: ex.db_id.clone(),
            label,
            outcomes,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct QueryCorrection {
    pub query_id: String,
    pub db_id: String,
    pub before: Label,
    pub after: Label,
    pub trace: CorrectionTrace,
}

/// Runs the corrector on every example and labels the result.
pub fn correct_examples(
    ws: &Workspace,
    examples: &[DatasetExample],
    cfg: &HarnessConfig,
    confidence: &ConfidenceTable,
    client: &dyn CompletionClient,
) -> Result<Vec<QueryCorrection>, RunError> {
    parallel_map(examples, cfg.run.workers, |ex| {
        let db = open(&ws.registry, &ex.db_id)?;
        let lim = &cfg.detector.limits;
        let before = label_sql(&ex.query_id, &ex.predicted_sql, &ex.gold_sql, &db, lim, cfg.data.multiset)?;
        let mut detector = ws.detector(&ex.db_id, &db, &cfg.detector);
        detector.client = Some(client);
        let trace = run_correction(
            &detector,
            &ex.question,
            &ex.evidence,
            &ex.predicted_sql,
            &cfg.correction,
            confidence,
            client,
        );
        let after = label_sql(&ex.query_id, &trace.final_sql, &ex.gold_sql, &db, lim, cfg.data.multiset)?;
        Ok(QueryCorrection {
            query_id: ex.query_id.clone(),
            db_id: ex.db_id.clone(),
            before,
            after,
            trace,
        })
    })
    .into_iter()
    .collect()
}

/// Output folder: config snapshot, catalog hashes, per-query files, traces
/// and summaries.
pub struct RunDir {
    pub path: PathBuf,
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

impl RunDir {
    pub fn create(cfg: &HarnessConfig, command: &str, hashes: &BTreeMap<String, String>) -> Result<Self, RunError> {
        let name = cfg.run.name.clone().unwrap_or_else(|| {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            format!("{command}-{secs}")
        });
        let dir = RunDir {
            path: cfg.run.out_dir.join(name),
        };
        for sub in ["queries", "traces"] {
            let p = dir.path.join(sub);
            std::fs::create_dir_all(&p).map_err(|e| RunError::Io(p.clone(), e.to_string()))?;
        }
        dir.write_text("config.toml", &cfg.to_toml())?;
        dir.write_json("catalogs.json", hashes)?;
        Ok(dir)
    }

    pub fn write_text(&self, rel: impl AsRef<Path>, text: &str) -> Result<(), RunError> {
        let p = self.path.join(rel);
        std::fs::write(&p, text).map_err(|e| RunError::Io(p, e.to_string()))
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, rel: impl AsRef<Path>, value: &T) -> Result<(), RunError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| RunError::Io(self.path.join(rel.as_ref()), e.to_string()))?;
        self.write_text(rel, &text)
    }

    pub fn write_query<T: Serialize>(&self, query_id: &str, value: &T) -> Result<(), RunError> {
        self.write_json(Path::new("queries").join(format!("{}.json", file_stem(query_id))), value)
    }

    pub fn write_trace<T: Serialize>(&self, query_id: &str, value: &T) -> Result<(), RunError> {
        self.write_json(Path::new("traces").join(format!("{}.json", file_stem(query_id))), value)
    }

    pub fn write_summary<T: Serialize>(&self, summary: &T, csv_header: &[&str], csv_rows: &[Vec<String>]) -> Result<(), RunError> {
        self.write_json("summary.json", summary)?;
        let mut csv = csv_header.join(",");
        csv.push('\n');
        for row in csv_rows {
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        self.write_text("summary.csv", &csv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..100).collect();
        let out = parallel_map(&items, 8, |x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(parallel_map(&Vec::<u8>::new(), 4, |x| *x).is_empty());
    }

    #[test]
    fn ids_become_safe_file_names() {
        assert_eq!(file_stem("a/b c"), "a_b_c");
    }
}
