//! Benchmark files, database folders and gold-label computation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::metrics::{result_multisets_equal, result_sets_equal};
use crate::exec::{Database, ExecError, ExecLimits};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetExample {
    pub query_id: String,
    pub question: String,
    pub evidence: String,
    pub db_id: String,
    pub gold_sql: String,
    pub predicted_sql: String,
    pub generator_tag: String,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path} is not valid JSON: {message}")]
    Json { path: PathBuf, message: String },
    #[error("{path}: expected {expected}")]
    Shape { path: PathBuf, expected: &'static str },
    #[error("malformed records: {}", .0.join("; "))]
    Records(Vec<String>),
    #[error("predictions file {0} is empty")]
    EmptyPredictions(PathBuf),
}

/// Examples joined with their predictions, plus ids left without one.
#[derive(Clone, Debug, Default)]
pub struct LoadedDataset {
    pub examples: Vec<DatasetExample>,
    pub missing_predictions: Vec<String>,
}

fn read_json(path: &Path) -> Result<Value, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| LoadError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Strips the `\t----- bird -----\t<db_id>` suffix of benchmark predictions.
pub fn clean_prediction(raw: &str) -> String {
    let sql = match raw.find("\t----- bird -----") {
        Some(i) => &raw[..i],
        None => raw,
    };
    sql.trim().to_string()
}

fn predictions(path: &Path) -> Result<BTreeMap<String, String>, LoadError> {
    let shape = || LoadError::Shape {
        path: path.to_path_buf(),
        expected: "an object mapping id to SQL or an array of SQL strings",
    };
    let map: BTreeMap<String, String> = match read_json(path)? {
        Value::Object(m) => m
            .into_iter()
            .map(|(k, v)| v.as_str().map(|s| (k, clean_prediction(s))).ok_or_else(shape))
            .collect::<Result<_, _>>()?,
        Value::Array(items) => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.as_str().map(|s| (i.to_string(), clean_prediction(s))).ok_or_else(shape))
            .collect::<Result<_, _>>()?,
        _ => return Err(shape()),
    };
    if map.is_empty() {
        return Err(LoadError::EmptyPredictions(path.to_path_buf()));
    }
    Ok(map)
}

fn text_field<'a>(rec: &'a Value, keys: &[&str]) -> Option<&'a str> {
    keys.iter().find_map(|k| rec.get(*k).and_then(Value::as_str))
}

/// Loads a BIRD- or Spider-style dev file and joins predictions on
/// `question_id` (else the record index).
pub fn load_examples(dataset: &Path, predictions_path: &Path, generator_tag: &str) -> Result<LoadedDataset, LoadError> {
    let records = match read_json(dataset)? {
        Value::Array(items) => items,
        _ => {
            return Err(LoadError::Shape {
                path: dataset.to_path_buf(),
                expected: "a JSON array of question records",
            })
        }
    };
    let preds = predictions(predictions_path)?;
    let mut out = LoadedDataset::default();
    let mut bad = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        let id = match rec.get("question_id") {
            Some(Value::Number(n)) => n.to_string(),
            Some(Value::String(s)) => s.clone(),
            _ => i.to_string(),
        };
        let question = text_field(rec, &["question"]);
        let db_id = text_field(rec, &["db_id"]);
        let gold = text_field(rec, &["SQL", "query", "sql"]);
        let (Some(question), Some(db_id), Some(gold)) = (question, db_id, gold) else {
            bad.push(format!("record {i} (id {id}) lacks question, db_id or SQL"));
            continue;
        };
        let Some(pred) = preds.get(&id) else {
            out.missing_predictions.push(id);
            continue;
        };
        out.examples.push(DatasetExample {
            query_id: id,
            question: question.to_string(),
            evidence: text_field(rec, &["evidence"]).unwrap_or("").to_string(),
            db_id: db_id.to_string(),
            gold_sql: gold.to_string(),
            predicted_sql: pred.clone(),
            generator_tag: generator_tag.to_string(),
        });
    }
    if !bad.is_empty() {
        return Err(LoadError::Records(bad));
    }
    Ok(out)
}

/// Database files laid out as `<root>/<db_id>/<db_id>.sqlite`.
#[derive(Clone, Debug)]
pub struct DbRegistry {
    pub root: PathBuf,
}

impl DbRegistry {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DbRegistry { root: root.into() }
    }

    pub fn path(&self, db_id: &str) -> PathBuf {
        self.root.join(db_id).join(format!("{db_id}.sqlite"))
    }

    pub fn open(&self, db_id: &str) -> Result<Database, ExecError> {
        Database::open(self.path(db_id)).map(|d| d.with_id(db_id))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Correct,
    Incorrect,
    /// The predicted query does not execute.
    Invalid,
}

impl Label {
    /// Incorrect for accuracy purposes (invalid counts as incorrect).
    pub fn is_wrong(self) -> bool {
        self != Label::Correct
    }
}

#[derive(Debug, Error)]
#[error("gold query for {query_id} failed: {source}")]
pub struct GoldError {
    pub query_id: String,
    pub source: ExecError,
}

/// Compares the execution results of `sql` and the gold query.
pub fn label_sql(
    query_id: &str,
    sql: &str,
    gold_sql: &str,
    db: &Database,
    limits: &ExecLimits,
    multiset: bool,
) -> Result<Label, GoldError> {
    let gold = db.run(gold_sql, limits).map_err(|source| GoldError {
        query_id: query_id.to_string(),
        source,
    })?;
    let Ok(pred) = db.run(sql, limits) else {
        return Ok(Label::Invalid);
    };
    let same = if multiset {
        result_multisets_equal(&pred, &gold)
    } else {
        result_sets_equal(&pred, &gold)
    };
    Ok(if same { Label::Correct } else { Label::Incorrect })
}

pub fn label_semantic_correctness(ex: &DatasetExample, db: &Database, limits: &ExecLimits) -> Result<Label, GoldError> {
    label_sql(&ex.query_id, &ex.predicted_sql, &ex.gold_sql, db, limits, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bird_suffix() {
        assert_eq!(
            clean_prediction("SELECT 1\t----- bird -----\tcalifornia_schools"),
            "SELECT 1"
        );
        assert_eq!(clean_prediction(" SELECT 2 "), "SELECT 2");
    }

    #[test]
    fn formats() {
        let dir = tempfile::tempdir().unwrap();
        let bird = dir.path().join("dev.json");
        std::fs::write(
            &bird,
            r#"[{"question_id": 0, "db_id": "financial", "question": "q0", "evidence": "e", "SQL": "SELECT 1"},
                {"question_id": 1, "db_id": "financial", "question": "q1", "evidence": "", "SQL": "SELECT 2"}]"#,
        )
        .unwrap();
        let preds = dir.path().join("pred.json");
        std::fs::write(&preds, r#"{"0": "SELECT 1\t----- bird -----\tfinancial"}"#).unwrap();
        let d = load_examples(&bird, &preds, "vanilla").unwrap();
        assert_eq!(d.examples.len(), 1);
        assert_eq!(d.examples[0].predicted_sql, "SELECT 1");
        assert_eq!(d.examples[0].evidence, "e");
        assert_eq!(d.missing_predictions, ["1"]);

        let spider = dir.path().join("spider.json");
        std::fs::write(&spider, r#"[{"db_id": "x", "question": "q", "query": "SELECT 3"}]"#).unwrap();
        let arr = dir.path().join("arr.json");
        std::fs::write(&arr, r#"["SELECT 3"]"#).unwrap();
        let d = load_examples(&spider, &arr, "other").unwrap();
        assert_eq!(d.examples[0].evidence, "");
        assert_eq!(d.examples[0].gold_sql, "SELECT 3");

        let empty = dir.path().join("empty.json");
        std::fs::write(&empty, "{}").unwrap();
        assert!(matches!(load_examples(&bird, &empty, "x"), Err(LoadError::EmptyPredictions(_))));

        let broken = dir.path().join("broken.json");
        std::fs::write(&broken, r#"[{"question": "q"}]"#).unwrap();
        assert!(matches!(load_examples(&broken, &arr, "x"), Err(LoadError::Records(_))));
    }
}
