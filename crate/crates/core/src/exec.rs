//! Read-only query execution with time and row limits.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rusqlite::types::ValueRef;
use rusqlite::{Connection, OpenFlags};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ident::Ident;
use crate::query::Predicate;

/// One typed result cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Blob(Vec<u8>),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Integer(i) => Some(*i as f64),
            Cell::Real(r) => Some(*r),
            _ => None,
        }
    }

    fn from_ref(v: ValueRef<'_>) -> Cell {
        match v {
            ValueRef::Null => Cell::Null,
            ValueRef::Integer(i) => Cell::Integer(i),
            ValueRef::Real(r) => Cell::Real(r),
            ValueRef::Text(t) => Cell::Text(String::from_utf8_lossy(t).into_owned()),
            ValueRef::Blob(b) => Cell::Blob(b.to_vec()),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Null => f.write_str("NULL"),
            Cell::Integer(i) => write!(f, "{i}"),
            Cell::Real(r) => write!(f, "{r}"),
            Cell::Text(t) => f.write_str(t),
            Cell::Blob(b) => write!(f, "<{} bytes>", b.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub row_count: usize,
    pub truncated: bool,
    pub elapsed_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecLimits {
    pub timeout_ms: u64,
    pub max_rows: usize,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits {
            timeout_ms: 30_000,
            max_rows: 10_000,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Serialize, Deserialize)]
pub enum ExecError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("query exceeded {0} ms")]
    Timeout(u64),
    #[error("engine error: {0}")]
    Engine(String),
    #[error("only SELECT statements may be executed")]
    NotReadOnly,
    #[error("cannot open database: {0}")]
    Open(String),
}

/// A read-only handle on one SQLite database file.
pub struct Database {
    conn: Connection,
    db_id: String,
    path: PathBuf,
}

impl Database {
    /// Opens `path` read-only. The database id defaults to the file stem.
    pub fn open(path: impl AsRef<Path>) -> Result<Database, ExecError> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(ExecError::Open(format!("{} does not exist", path.display())));
        }
        let conn = Connection::open_with_flags(
            path,
            OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX | OpenFlags::SQLITE_OPEN_URI,
        )
        .map_err(|e| ExecError::Open(e.to_string()))?;
        let db_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Database {
            conn,
            db_id,
            path: path.to_path_buf(),
        })
    }

    pub fn with_id(mut self, db_id: impl Into<String>) -> Self {
        self.db_id = db_id.into();
        self
    }

    pub fn db_id(&self) -> &str {
        &self.db_id
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub(crate) fn conn(&self) -> &Connection {
        &self.conn
    }

    /// Executes one SELECT statement under `limits`.
    pub fn run(&self, sql: &str, limits: &ExecLimits) -> Result<ResultTable, ExecError> {
        if !starts_with_select(sql) {
            return Err(ExecError::NotReadOnly);
        }
        let started = Instant::now();
        let mut stmt = self.conn.prepare(sql).map_err(|e| ExecError::Syntax(e.to_string()))?;
        if !stmt.readonly() {
            return Err(ExecError::NotReadOnly);
        }
        let deadline = started + Duration::from_millis(limits.timeout_ms);
        self.conn.progress_handler(1000, Some(move || Instant::now() > deadline));
        let result = collect_rows(&mut stmt, limits.max_rows);
        self.conn.progress_handler(0, None::<fn() -> bool>);
        let elapsed_ms = started.elapsed().as_secs_f64() * 1000.0;
        let (columns, rows, truncated) = result.map_err(|e| match e {
            rusqlite::Error::SqliteFailure(f, _) if f.code == rusqlite::ErrorCode::OperationInterrupted => {
                ExecError::Timeout(limits.timeout_ms)
            }
            other => ExecError::Engine(other.to_string()),
        })?;
        Ok(ResultTable {
            columns,
            row_count: rows.len(),
            rows,
            truncated,
            elapsed_ms,
        })
    }

    /// Compiles `sql` without running it; returns the engine's diagnostic on failure.
    pub fn check_syntax(&self, sql: &str) -> Result<(), ExecError> {
        if !starts_with_select(sql) {
            return Err(ExecError::NotReadOnly);
        }
        let stmt = self.conn.prepare(sql).map_err(|e| ExecError::Syntax(e.to_string()))?;
        if !stmt.readonly() {
            return Err(ExecError::NotReadOnly);
        }
        Ok(())
    }

    /// Row count of the predicate's table under that predicate alone.
    pub fn probe_predicate(&self, pred: &Predicate, limits: &ExecLimits) -> Result<u64, ExecError> {
        let sql = pred
            .probe_sql()
            .ok_or_else(|| ExecError::Engine(format!("column {} is not resolved to a table", pred.column)))?;
        let rt = self.run(&sql, limits)?;
        match rt.rows.first().and_then(|r| r.first()) {
            Some(Cell::Integer(n)) => Ok(*n as u64),
            other => Err(ExecError::Engine(format!("unexpected probe result {other:?}"))),
        }
    }

    /// Most frequent non-NULL values of a column, ties broken by value.
    pub fn frequent_values(&self, table: &Ident, column: &Ident, k: usize) -> Result<Vec<Cell>, ExecError> {
        let col = column.to_sql();
        let sql = format!(
            "SELECT {col} FROM {} WHERE {col} IS NOT NULL GROUP BY {col} ORDER BY COUNT(*) DESC, {col} LIMIT {k}",
            table.to_sql()
        );
        let rt = self.run(&sql, &ExecLimits::default())?;
        Ok(rt.rows.into_iter().filter_map(|mut r| r.pop()).collect())
    }
}

type Collected = (Vec<String>, Vec<Vec<Cell>>, bool);

fn collect_rows(stmt: &mut rusqlite::Statement<'_>, max_rows: usize) -> rusqlite::Result<Collected> {
    let columns: Vec<String> = stmt.column_names().iter().map(|s| s.to_string()).collect();
    let width = columns.len();
    let mut rows = Vec::new();
    let mut truncated = false;
    let mut cursor = stmt.raw_query();
    while let Some(row) = cursor.next()? {
        if rows.len() == max_rows {
            truncated = true;
            break;
        }
        let mut cells = Vec::with_capacity(width);
        for i in 0..width {
            cells.push(Cell::from_ref(row.get_ref(i)?));
        }
        rows.push(cells);
    }
    Ok((columns, rows, truncated))
}

fn starts_with_select(sql: &str) -> bool {
    let mut rest = sql.trim_start();
    loop {
        if let Some(r) = rest.strip_prefix("--") {
            rest = r.split_once('\n').map_or("", |(_, tail)| tail).trim_start();
        } else if let Some(r) = rest.strip_prefix("/*") {
            rest = r.split_once("*/").map_or("", |(_, tail)| tail).trim_start();
        } else if let Some(r) = rest.strip_prefix('(') {
            rest = r.trim_start();
        } else {
            break;
        }
    }
    let word: String = rest.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    word.eq_ignore_ascii_case("SELECT") || word.eq_ignore_ascii_case("WITH") || word.eq_ignore_ascii_case("VALUES")
}

/// Abnormal-output indicators for one result.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbnormalityFlags {
    pub empty: bool,
    pub all_zero_columns: Vec<String>,
    pub all_null_columns: Vec<String>,
}

impl AbnormalityFlags {
    pub fn any(&self) -> bool {
        self.empty || !self.all_zero_columns.is_empty() || !self.all_null_columns.is_empty()
    }

    /// Human-readable list of the flags that fired.
    pub fn describe(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.empty {
            out.push("empty result".to_string());
        }
        for c in &self.all_zero_columns {
            out.push(format!("column {c} contains only zeros"));
        }
        for c in &self.all_null_columns {
            out.push(format!("column {c} contains only NULL values"));
        }
        out
    }
}

pub fn classify_result(rt: &ResultTable) -> AbnormalityFlags {
    let mut flags = AbnormalityFlags {
        empty: rt.row_count == 0,
        ..Default::default()
    };
    if rt.rows.is_empty() {
        return flags;
    }
    for (i, name) in rt.columns.iter().enumerate() {
        let cells = rt.rows.iter().map(|r| &r[i]);
        if cells.clone().all(|c| matches!(c, Cell::Null)) {
            flags.all_null_columns.push(name.clone());
        } else if cells.clone().all(|c| c.as_f64() == Some(0.0)) {
            flags.all_zero_columns.push(name.clone());
        }
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (tempfile::TempDir, Database) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.sqlite");
        let conn = Connection::open(&path).unwrap();
        conn.execute_batch(
            "CREATE TABLE t(id INTEGER PRIMARY KEY, name TEXT, v REAL);
             INSERT INTO t VALUES (1,'a',0),(2,'b',0),(3,'b',NULL);",
        )
        .unwrap();
        drop(conn);
        let db = Database::open(&path).unwrap();
        (dir, db)
    }

    fn table(columns: &[&str], rows: Vec<Vec<Cell>>) -> ResultTable {
        ResultTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            row_count: rows.len(),
            rows,
            truncated: false,
            elapsed_ms: 0.0,
        }
    }

    #[test]
    fn select_one() {
        let (_d, db) = fixture();
        let rt = db.run("SELECT 1", &ExecLimits::default()).unwrap();
        assert_eq!((rt.row_count, rt.columns.len()), (1, 1));
    }

    #[test]
    fn refuses_writes() {
        let (_d, db) = fixture();
        assert_eq!(db.run("DELETE FROM t", &ExecLimits::default()), Err(ExecError::NotReadOnly));
        assert_eq!(db.run("PRAGMA user_version = 3", &ExecLimits::default()), Err(ExecError::NotReadOnly));
    }

    #[test]
    fn errors_are_distinguished() {
        let (_d, db) = fixture();
        assert!(matches!(db.run("SELECT nope FROM t", &ExecLimits::default()), Err(ExecError::Syntax(_))));
        let slow = "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT COUNT(*) FROM c";
        let limits = ExecLimits {
            timeout_ms: 50,
            max_rows: 10,
        };
        assert_eq!(db.run(slow, &limits), Err(ExecError::Timeout(50)));
    }

    #[test]
    fn truncates_at_cap() {
        let (_d, db) = fixture();
        let rt = db
            .run(
                "SELECT * FROM t",
                &ExecLimits {
                    timeout_ms: 1000,
                    max_rows: 2,
                },
            )
            .unwrap();
        assert!(rt.truncated);
        assert_eq!(rt.row_count, 2);
    }

    #[test]
    fn frequent_values_ordering() {
        let (_d, db) = fixture();
        let v = db.frequent_values(&"t".into(), &"name".into(), 5).unwrap();
        assert_eq!(v, vec![Cell::Text("b".into()), Cell::Text("a".into())]);
    }

    #[test]
    fn classification() {
        assert!(classify_result(&table(&["a"], vec![])).empty);
        let zero = classify_result(&table(&["c"], vec![vec![Cell::Integer(0)]]));
        assert_eq!(zero.all_zero_columns, vec!["c".to_string()]);
        let null = classify_result(&table(&["c"], vec![vec![Cell::Null]]));
        assert_eq!(null.all_null_columns, vec!["c".to_string()]);
        let fine = classify_result(&table(&["c"], vec![vec![Cell::Integer(0)], vec![Cell::Integer(3)]]));
        assert!(!fine.any());
        let text = classify_result(&table(&["c"], vec![vec![Cell::Text("0".into())]]));
        assert!(!text.any());
    }
}
