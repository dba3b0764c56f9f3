//! Versioned JSON persistence with a TSV value-index sidecar.
//!
//! The sidecar holds one `value<TAB>table.column` record per line. Backslash,
//! tab, newline and carriage return inside values are escaped as `\\`, `\t`,
//! `\n` and `\r`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::DatabaseCatalog;
use crate::ident::QualifiedColumn;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CatalogFileError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid catalog json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported catalog format version {0}")]
    Version(u32),
    #[error("bad value index line {line}: {text}")]
    Sidecar { line: usize, text: String },
}

#[derive(Serialize, Deserialize)]
struct Envelope<C> {
    format_version: u32,
    value_index_file: String,
    catalog: C,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.values.tsv"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CatalogFileError + '_ {
    move |source| CatalogFileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn escape(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    for c in v.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    let mut chars = v.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

fn render_sidecar(index: &BTreeMap<String, BTreeSet<QualifiedColumn>>) -> String {
    let mut out = String::new();
    for (value, cols) in index {
        for c in cols {
            let _ = writeln!(out, "{}\t{}", escape(value), c);
        }
    }
    out
}

impl DatabaseCatalog {
    fn envelope_json(&self, sidecar_name: &str) -> Result<String, serde_json::Error> {
        serde_json::to_string_pretty(&Envelope {
            format_version: FORMAT_VERSION,
            value_index_file: sidecar_name.to_string(),
            catalog: self,
        })
    }

    /// Writes `path` and the value-index sidecar next to it.
    pub fn save(&self, path: &Path) -> Result<(), CatalogFileError> {
        let side = sidecar_path(path);
        let name = side.file_name().unwrap().to_string_lossy().into_owned();
        std::fs::write(path, self.envelope_json(&name)?).map_err(io_err(path))?;
        std::fs::write(&side, render_sidecar(&self.value_index)).map_err(io_err(&side))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<DatabaseCatalog, CatalogFileError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let env: Envelope<DatabaseCatalog> = serde_json::from_str(&text)?;
        if env.format_version != FORMAT_VERSION {
            return Err(CatalogFileError::Version(env.format_version));
        }
        let mut catalog = env.catalog;
        let side = path.with_file_name(&env.value_index_file);
        let tsv = std::fs::read_to_string(&side).map_err(io_err(&side))?;
        for (i, line) in tsv.lines().enumerate() {
            let bad = || CatalogFileError::Sidecar {
                line: i + 1,
                text: line.to_string(),
            };
            let (value, col) = line.rsplit_once('\t').ok_or_else(bad)?;
            let col = QualifiedColumn::parse(col).ok_or_else(bad)?;
            catalog.value_index.entry(unescape(value)).or_default().insert(col);
        }
        Ok(catalog)
    }
}

/// Hex SHA-256 over the catalog JSON and its value index.
pub fn catalog_hash(catalog: &DatabaseCatalog) -> String {
    let mut h = Sha256::new();
    h.update(catalog.envelope_json("").unwrap_or_default().as_bytes());
    h.update(render_sidecar(&catalog.value_index).as_bytes());
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_catalog, BuildOptions};

    #[test]
    fn escape_roundtrip() {
        for v in ["plain", "tab\there", "a\\b", "line\nbreak\r", "trailing\\"] {
            assert_eq!(unescape(&escape(v)), v);
        }
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let db_path = dir.path().join("x.sqlite");
        rusqlite::Connection::open(&db_path)
            .unwrap()
            .execute_batch(
                "CREATE TABLE p(k INTEGER PRIMARY KEY, s TEXT);
                 CREATE TABLE c(id INTEGER, k INTEGER REFERENCES p(k), s TEXT);
                 INSERT INTO p VALUES (1, 'tab\there'), (2, 'x');
                 INSERT INTO c VALUES (1, 1, 'x');",
            )
            .unwrap();
        let db = crate::exec::Database::open(&db_path).unwrap();
        let cat = build_catalog(&db, &BuildOptions::default()).unwrap();
        let out = dir.path().join("cat.json");
        cat.save(&out).unwrap();
        assert!(dir.path().join("cat.values.tsv").is_file());
        let back = DatabaseCatalog::load(&out).unwrap();
        assert_eq!(back, cat);
        assert_eq!(catalog_hash(&back), catalog_hash(&cat));
        assert_eq!(back.columns_containing_value("X").len(), 2);
    }
}
