//! Offline database catalog: schema, join graph, value index and table
//! signatures.

mod persist;
pub mod steiner;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{Cell, Database, ExecError};
use crate::ident::{Ident, QualifiedColumn};
use crate::query::{JoinPredicate, SchemaLookup};

pub use persist::{catalog_hash, CatalogFileError, FORMAT_VERSION};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: Ident,
    pub decl_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ColumnMeta {
    /// SQLite column affinity is TEXT, or no type was declared.
    pub fn is_textual(&self) -> bool {
        let t = self.decl_type.to_ascii_uppercase();
        if t.is_empty() {
            return true;
        }
        !t.contains("INT") && (t.contains("CHAR") || t.contains("CLOB") || t.contains("TEXT"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableMeta {
    pub name: Ident,
    pub columns: Vec<ColumnMeta>,
    pub row_count: u64,
}

impl TableMeta {
    pub fn column(&self, name: &Ident) -> Option<&ColumnMeta> {
        self.columns.iter().find(|c| &c.name == name)
    }
}

/// A declared or supplied foreign key, child column referencing parent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FkEdge {
    pub child: QualifiedColumn,
    pub parent: QualifiedColumn,
}

/// Two FK children of the same parent column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedEdge {
    pub left: QualifiedColumn,
    pub right: QualifiedColumn,
    pub via: QualifiedColumn,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinGraph {
    pub tables: Vec<Ident>,
    /// Table index pairs (smaller first) with the column pairs that join them.
    pub edges: Vec<GraphEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub columns: Vec<(QualifiedColumn, QualifiedColumn)>,
}

/// Supplemental FK record as read from a user file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FkSpec {
    pub child: String,
    pub parent: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildOptions {
    pub max_distinct_values: usize,
    pub max_value_chars: usize,
    pub supplemental_fks: Vec<FkSpec>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            max_distinct_values: 500_000,
            max_value_chars: 256,
            supplemental_fks: Vec::new(),
        }
    }
}

impl BuildOptions {
    pub fn load_supplemental(mut self, path: &Path) -> Result<Self, CatalogError> {
        let text = std::fs::read_to_string(path).map_err(|e| CatalogError::Supplemental(e.to_string()))?;
        let specs: Vec<FkSpec> =
            serde_json::from_str(&text).map_err(|e| CatalogError::Supplemental(e.to_string()))?;
        self.supplemental_fks.extend(specs);
        Ok(self)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    /// Columns left out of the value index, with their distinct counts.
    pub skipped_columns: Vec<(QualifiedColumn, u64)>,
    /// Foreign keys dropped because an endpoint does not exist.
    pub dropped_fks: Vec<String>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read database: {0}")]
    Unreadable(String),
    #[error("bad supplemental foreign key file: {0}")]
    Supplemental(String),
}

impl From<rusqlite::Error> for CatalogError {
    fn from(e: rusqlite::Error) -> Self {
        CatalogError::Unreadable(e.to_string())
    }
}

impl From<ExecError> for CatalogError {
    fn from(e: ExecError) -> Self {
        CatalogError::Unreadable(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SteinerError {
    #[error("table {0} is not in the catalog")]
    UnknownTable(String),
    #[error("tables {0} and {1} are not connected in the join graph")]
    UnreachableTerminals(String, String),
}

/// Steiner tree over catalog tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SteinerResult {
    pub tables: Vec<Ident>,
    pub edges: Vec<(Ident, Ident)>,
    pub exact: bool,
}

/// Graphs up to this many tables are solved exactly.
pub const EXACT_MAX_TABLES: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatabaseCatalog {
    pub db_id: String,
    pub tables: Vec<TableMeta>,
    pub primary_keys: IndexMap<Ident, Vec<Ident>>,
    pub fk_edges: Vec<FkEdge>,
    pub derived_edges: Vec<DerivedEdge>,
    pub join_graph: JoinGraph,
    #[serde(skip)]
    pub value_index: BTreeMap<String, BTreeSet<QualifiedColumn>>,
    pub signatures: IndexMap<Ident, BTreeSet<String>>,
    pub build_options: BuildOptions,
    pub build_report: BuildReport,
}

/// Value-index key: trimmed, lowercased, capped at `max_chars` characters.
pub fn normalize_value(value: &str, max_chars: usize) -> String {
    let lower = value.trim().to_lowercase();
    match lower.char_indices().nth(max_chars) {
        Some((cut, _)) => lower[..cut].trim_end().to_string(),
        None => lower,
    }
}

pub fn build_catalog(db: &Database, options: &BuildOptions) -> Result<DatabaseCatalog, CatalogError> {
    let conn = db.conn();
    let mut names: Vec<String> = conn
        .prepare("SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name")?
        .query_map([], |r| r.get(0))?
        .collect::<Result<_, _>>()?;
    names.sort_by_key(|n| n.to_lowercase());

    let mut tables = Vec::new();
    let mut primary_keys = IndexMap::new();
    let mut declared = Vec::new();
    for name in &names {
        let quoted = Ident::new(name.as_str()).to_sql();
        let mut columns = Vec::new();
        let mut pk: Vec<(i64, Ident)> = Vec::new();
        let mut stmt = conn.prepare(&format!("PRAGMA table_info({quoted})"))?;
        let mut rows = stmt.query([])?;
        while let Some(r) = rows.next()? {
            let col: String = r.get(1)?;
            let decl: Option<String> = r.get(2)?;
            let pk_pos: i64 = r.get(5)?;
            if pk_pos > 0 {
                pk.push((pk_pos, Ident::new(col.as_str())));
            }
            columns.push(ColumnMeta {
                name: Ident::new(col),
                decl_type: decl.unwrap_or_default(),
                description: None,
            });
        }
        pk.sort_by_key(|p| p.0);
        let row_count: i64 = conn.query_row(&format!("SELECT COUNT(*) FROM {quoted}"), [], |r| r.get(0))?;
        let mut fks = conn.prepare(&format!("PRAGMA foreign_key_list({quoted})"))?;
        let mut fk_rows = fks.query([])?;
        while let Some(r) = fk_rows.next()? {
            let parent: String = r.get(2)?;
            let from: String = r.get(3)?;
            let to: Option<String> = r.get(4)?;
            declared.push((name.clone(), from, parent, to));
        }
        primary_keys.insert(Ident::new(name.as_str()), pk.into_iter().map(|p| p.1).collect());
        tables.push(TableMeta {
            name: Ident::new(name.as_str()),
            columns,
            row_count: row_count as u64,
        });
    }

    let mut catalog = DatabaseCatalog {
        db_id: db.db_id().to_string(),
        tables,
        primary_keys,
        fk_edges: Vec::new(),
        derived_edges: Vec::new(),
        join_graph: JoinGraph::default(),
        value_index: BTreeMap::new(),
        signatures: IndexMap::new(),
        build_options: options.clone(),
        build_report: BuildReport::default(),
    };

    let mut raw_edges = Vec::new();
    for (child_table, from, parent_table, to) in declared {
        let parent = Ident::new(parent_table.as_str());
        let to = match to {
            Some(t) => Some(Ident::new(t)),
            None => catalog.primary_keys.get(&parent).and_then(|pk| pk.first().cloned()),
        };
        let label = format!("{child_table}.{from} -> {parent_table}.{}", to.as_ref().map_or("?", |t| t.as_str()));
        match to {
            Some(to) => raw_edges.push((QualifiedColumn::new(child_table.as_str(), from), QualifiedColumn::new(parent, to), label)),
            None => catalog.build_report.dropped_fks.push(label),
        }
    }
    for spec in &options.supplemental_fks {
        let label = format!("{} -> {}", spec.child, spec.parent);
        match (QualifiedColumn::parse(&spec.child), QualifiedColumn::parse(&spec.parent)) {
            (Some(c), Some(p)) => raw_edges.push((c, p, label)),
            _ => catalog.build_report.dropped_fks.push(label),
        }
    }
    for (child, parent, label) in raw_edges {
        match (catalog.canonical(&child), catalog.canonical(&parent)) {
            (Some(child), Some(parent)) => {
                let edge = FkEdge { child, parent };
                if !catalog.fk_edges.contains(&edge) {
                    catalog.fk_edges.push(edge);
                }
            }
            _ => catalog.build_report.dropped_fks.push(label),
        }
    }

    catalog.derived_edges = derive_pairs(&catalog.fk_edges);
    catalog.join_graph = catalog.make_graph();
    for t in &catalog.tables {
        let sig = t.columns.iter().map(|c| c.name.normalized()).collect();
        catalog.signatures.insert(t.name.clone(), sig);
    }
    catalog.index_values(db)?;
    Ok(catalog)
}

fn derive_pairs(fks: &[FkEdge]) -> Vec<DerivedEdge> {
    let mut out = Vec::new();
    for (i, a) in fks.iter().enumerate() {
        for b in &fks[i + 1..] {
            if a.parent != b.parent || a.child == b.child {
                continue;
            }
            let duplicate = fks.iter().any(|f| {
                (f.child == a.child && f.parent == b.child) || (f.child == b.child && f.parent == a.child)
            });
            let seen = out
                .iter()
                .any(|d: &DerivedEdge| (d.left == a.child && d.right == b.child) || (d.left == b.child && d.right == a.child));
            if !duplicate && !seen {
                out.push(DerivedEdge {
                    left: a.child.clone(),
                    right: b.child.clone(),
                    via: a.parent.clone(),
                });
            }
        }
    }
    out
}

impl DatabaseCatalog {
    pub fn table(&self, name: &Ident) -> Option<&TableMeta> {
        self.tables.iter().find(|t| &t.name == name)
    }

    pub fn table_index(&self, name: &Ident) -> Option<usize> {
        self.join_graph.tables.iter().position(|t| t == name)
    }

    /// The column with the catalog's own spelling, if it exists.
    pub fn canonical(&self, col: &QualifiedColumn) -> Option<QualifiedColumn> {
        let t = self.table(&col.table)?;
        let c = t.column(&col.column)?;
        Some(QualifiedColumn::new(t.name.clone(), c.name.clone()))
    }

    fn make_graph(&self) -> JoinGraph {
        let tables: Vec<Ident> = self.tables.iter().map(|t| t.name.clone()).collect();
        let mut edges: Vec<GraphEdge> = Vec::new();
        let pairs = self
            .fk_edges
            .iter()
            .map(|f| (&f.child, &f.parent))
            .chain(self.derived_edges.iter().map(|d| (&d.left, &d.right)));
        for (x, y) in pairs {
            let (Some(i), Some(j)) = (
                tables.iter().position(|t| *t == x.table),
                tables.iter().position(|t| *t == y.table),
            ) else {
                continue;
            };
            if i == j {
                continue;
            }
            let (a, b, pair) = if i < j { (i, j, (x.clone(), y.clone())) } else { (j, i, (y.clone(), x.clone())) };
            match edges.iter_mut().find(|e| e.a == a && e.b == b) {
                Some(e) => e.columns.push(pair),
                None => edges.push(GraphEdge {
                    a,
                    b,
                    columns: vec![pair],
                }),
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        JoinGraph { tables, edges }
    }

    fn index_values(&mut self, db: &Database) -> Result<(), CatalogError> {
        let conn = db.conn();
        let cap = self.build_options.max_distinct_values as u64;
        let max_chars = self.build_options.max_value_chars;
        for t in &self.tables {
            let table = t.name.to_sql();
            for c in t.columns.iter().filter(|c| c.is_textual()) {
                let col = c.name.to_sql();
                let qc = QualifiedColumn::new(t.name.clone(), c.name.clone());
                let distinct: i64 = conn.query_row(
                    &format!("SELECT COUNT(DISTINCT {col}) FROM {table} WHERE typeof({col}) = 'text'"),
                    [],
                    |r| r.get(0),
                )?;
                if distinct as u64 > cap {
                    self.build_report.skipped_columns.push((qc, distinct as u64));
                    continue;
                }
                let mut stmt =
                    conn.prepare(&format!("SELECT DISTINCT {col} FROM {table} WHERE typeof({col}) = 'text'"))?;
                let mut rows = stmt.query([])?;
                while let Some(r) = rows.next()? {
                    let v: String = r.get(0)?;
                    let key = normalize_value(&v, max_chars);
                    if key.is_empty() {
                        continue;
                    }
                    self.value_index.entry(key).or_default().insert(qc.clone());
                }
            }
        }
        Ok(())
    }

    /// Pairs of FK children sharing a parent column.
    pub fn derived_join_pairs(&self) -> Vec<(QualifiedColumn, QualifiedColumn)> {
        self.derived_edges.iter().map(|d| (d.left.clone(), d.right.clone())).collect()
    }

    /// Whether a join predicate follows a declared or derived key relationship.
    pub fn is_valid_join(&self, jp: &JoinPredicate) -> bool {
        let (Some(l), Some(r)) = (jp.left.qualified(), jp.right.qualified()) else {
            return false;
        };
        self.is_valid_pair(&l, &r)
    }

    pub fn is_valid_pair(&self, l: &QualifiedColumn, r: &QualifiedColumn) -> bool {
        if l == r {
            return false;
        }
        let matches = |a: &QualifiedColumn, b: &QualifiedColumn| (a == l && b == r) || (a == r && b == l);
        self.fk_edges.iter().any(|f| matches(&f.child, &f.parent))
            || self.derived_edges.iter().any(|d| matches(&d.left, &d.right))
    }

    pub fn columns_containing_value(&self, value: &str) -> BTreeSet<QualifiedColumn> {
        let key = normalize_value(value, self.build_options.max_value_chars);
        self.value_index.get(&key).cloned().unwrap_or_default()
    }

    /// Tables other than `exclude` whose column names include all of `group`.
    pub fn tables_with_column_group(&self, group: &[Ident], exclude: &Ident) -> Vec<Ident> {
        let wanted: Vec<String> = group.iter().map(|g| g.normalized()).collect();
        self.signatures
            .iter()
            .filter(|(t, sig)| *t != exclude && wanted.iter().all(|w| sig.contains(w)))
            .map(|(t, _)| t.clone())
            .collect()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let pairs: Vec<(usize, usize)> = self.join_graph.edges.iter().map(|e| (e.a, e.b)).collect();
        steiner::adjacency(self.join_graph.tables.len(), &pairs)
    }

    /// Minimum set of tables connecting `terminals` in the join graph.
    pub fn steiner_tables(&self, terminals: &[Ident]) -> Result<SteinerResult, SteinerError> {
        let exact = self.join_graph.tables.len() <= EXACT_MAX_TABLES;
        self.steiner_with(terminals, exact)
    }

    pub fn steiner_with(&self, terminals: &[Ident], exact: bool) -> Result<SteinerResult, SteinerError> {
        let idx: Vec<usize> = terminals
            .iter()
            .map(|t| self.table_index(t).ok_or_else(|| SteinerError::UnknownTable(t.to_string())))
            .collect::<Result<_, _>>()?;
        let adj = self.adjacency();
        let solved = if exact {
            steiner::exact(&adj, &idx)
        } else {
            steiner::approximate(&adj, &idx)
        };
        let tree = solved.map_err(|steiner::Disconnected(a, b)| {
            SteinerError::UnreachableTerminals(
                self.join_graph.tables[a].to_string(),
                self.join_graph.tables[b].to_string(),
            )
        })?;
        let name = |i: usize| self.join_graph.tables[i].clone();
        Ok(SteinerResult {
            tables: tree.nodes.iter().map(|&i| name(i)).collect(),
            edges: tree.edges.iter().map(|&(a, b)| (name(a), name(b))).collect(),
            exact,
        })
    }

    /// Top-`k` frequent values for every column, in table/column order.
    pub fn sample_values(&self, db: &Database, k: usize) -> Result<SampleValues, CatalogError> {
        let mut out = SampleValues::new();
        for t in &self.tables {
            for c in &t.columns {
                let values = db.frequent_values(&t.name, &c.name, k)?;
                out.insert(QualifiedColumn::new(t.name.clone(), c.name.clone()), values);
            }
        }
        Ok(out)
    }
}

pub type SampleValues = IndexMap<QualifiedColumn, Vec<Cell>>;

impl SchemaLookup for DatabaseCatalog {
    fn table_has_column(&self, table: &Ident, column: &Ident) -> Option<bool> {
        self.table(table).map(|t| t.column(column).is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rusqlite::Connection;

    pub(crate) fn open(sql: &str) -> (tempfile::TempDir, Database) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fx.sqlite");
        Connection::open(&path).unwrap().execute_batch(sql).unwrap();
        let db = Database::open(&path).unwrap();
        (dir, db)
    }

    const SCHEMA: &str = "
        CREATE TABLE p(k INTEGER PRIMARY KEY, label TEXT);
        CREATE TABLE a(id INTEGER PRIMARY KEY, x INTEGER REFERENCES p(k), note TEXT);
        CREATE TABLE b(id INTEGER PRIMARY KEY, y INTEGER REFERENCES p, note VARCHAR(10));
        CREATE TABLE lone(z REAL);
        INSERT INTO p VALUES (1, ' Alpha '), (2, 'beta');
        INSERT INTO a VALUES (1, 1, 'alpha'), (2, 2, NULL);
        INSERT INTO b VALUES (1, 1, 'Gamma');";

    #[test]
    fn builds_edges_and_derived_pairs() {
        let (_d, db) = open(SCHEMA);
        let cat = build_catalog(&db, &BuildOptions::default()).unwrap();
        assert_eq!(cat.fk_edges.len(), 2);
        assert_eq!(
            cat.derived_join_pairs(),
            vec![(QualifiedColumn::new("a", "x"), QualifiedColumn::new("b", "y"))]
        );
        assert!(cat.is_valid_pair(&QualifiedColumn::new("B", "Y"), &QualifiedColumn::new("a", "x")));
        assert!(!cat.is_valid_pair(&QualifiedColumn::new("a", "id"), &QualifiedColumn::new("b", "id")));
        assert_eq!(cat.join_graph.edges.len(), 3);
    }

    #[test]
    fn value_index_normalises() {
        let (_d, db) = open(SCHEMA);
        let cat = build_catalog(&db, &BuildOptions::default()).unwrap();
        let alpha = cat.columns_containing_value("ALPHA");
        assert_eq!(alpha.len(), 2);
        assert_eq!(alpha, cat.columns_containing_value("  alpha"));
        assert!(cat.columns_containing_value("delta").is_empty());
    }

    #[test]
    fn distinct_cap_skips_column() {
        let (_d, db) = open(SCHEMA);
        let opts = BuildOptions {
            max_distinct_values: 1,
            ..Default::default()
        };
        let cat = build_catalog(&db, &opts).unwrap();
        assert_eq!(cat.build_report.skipped_columns.len(), 1);
        assert_eq!(cat.build_report.skipped_columns[0].0, QualifiedColumn::new("p", "label"));
    }

    #[test]
    fn supplemental_edges_and_bad_specs() {
        let (_d, db) = open(SCHEMA);
        let opts = BuildOptions {
            supplemental_fks: vec![
                FkSpec {
                    child: "lone.z".into(),
                    parent: "p.k".into(),
                },
                FkSpec {
                    child: "nope.z".into(),
                    parent: "p.k".into(),
                },
            ],
            ..Default::default()
        };
        let cat = build_catalog(&db, &opts).unwrap();
        assert_eq!(cat.fk_edges.len(), 3);
        assert_eq!(cat.build_report.dropped_fks.len(), 1);
        let tree = cat.steiner_tables(&["lone".into(), "a".into()]).unwrap();
        assert_eq!(tree.tables.len(), 2);
    }

    #[test]
    fn column_groups() {
        let (_d, db) = open(SCHEMA);
        let cat = build_catalog(&db, &BuildOptions::default()).unwrap();
        assert_eq!(cat.tables_with_column_group(&["ID".into(), "note".into()], &"a".into()), vec![Ident::new("b")]);
        assert!(cat.tables_with_column_group(&["x".into(), "note".into()], &"a".into()).is_empty());
    }

    #[test]
    fn empty_database() {
        let (_d, db) = open("");
        let cat = build_catalog(&db, &BuildOptions::default()).unwrap();
        assert!(cat.tables.is_empty() && cat.join_graph.edges.is_empty());
        assert_eq!(cat.steiner_tables(&[]).unwrap().tables, Vec::<Ident>::new());
    }

    #[test]
    fn steiner_unreachable() {
        let (_d, db) = open(SCHEMA);
        let cat = build_catalog(&db, &BuildOptions::default()).unwrap();
        assert_eq!(
            cat.steiner_tables(&["a".into(), "lone".into()]),
            Err(SteinerError::UnreachableTerminals("a".into(), "lone".into()))
        );
    }

    #[test]
    fn normalisation_is_idempotent() {
        for v in ["  MiXeD  ", "ǅx", &"é".repeat(300)] {
            let once = normalize_value(v, 256);
            assert_eq!(normalize_value(&once, 256), once);
        }
    }
}
