//! Case-insensitive SQL identifiers and column references.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// An unquoted SQL identifier.
///
/// Equality, ordering and hashing ignore ASCII case, matching SQLite's
/// identifier semantics. The original spelling is kept for display.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ident(String);

impl Ident {
    pub fn new(s: impl Into<String>) -> Self {
        Ident(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Lowercased form used as a map key.
    pub fn normalized(&self) -> String {
        self.0.to_ascii_lowercase()
    }

    /// Render as SQL, quoting when the name is not a plain identifier.
    pub fn to_sql(&self) -> String {
        if is_plain_identifier(&self.0) {
            self.0.clone()
        } else {
            format!("\"{}\"", self.0.replace('"', "\"\""))
        }
    }
}

pub(crate) fn is_plain_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !crate::query::lexer::is_reserved(s)
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.0.eq_ignore_ascii_case(&other.0)
    }
}

impl Eq for Ident {}

impl Hash for Ident {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for b in self.0.bytes() {
            state.write_u8(b.to_ascii_lowercase());
        }
        state.write_u8(0xff);
    }
}

impl Ord for Ident {
    fn cmp(&self, other: &Self) -> Ordering {
        let a = self.0.bytes().map(|b| b.to_ascii_lowercase());
        let b = other.0.bytes().map(|b| b.to_ascii_lowercase());
        a.cmp(b)
    }
}

impl PartialOrd for Ident {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

impl From<String> for Ident {
    fn from(s: String) -> Self {
        Ident(s)
    }
}

/// A fully qualified `table.column`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QualifiedColumn {
    pub table: Ident,
    pub column: Ident,
}

impl QualifiedColumn {
    pub fn new(table: impl Into<Ident>, column: impl Into<Ident>) -> Self {
        QualifiedColumn {
            table: table.into(),
            column: column.into(),
        }
    }

    /// Parse `table.column`. The split happens at the first dot.
    pub fn parse(s: &str) -> Option<Self> {
        let (t, c) = s.split_once('.')?;
        let (t, c) = (t.trim(), c.trim());
        if t.is_empty() || c.is_empty() {
            return None;
        }
        Some(QualifiedColumn::new(t, c))
    }
}

impl fmt::Display for QualifiedColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

/// A column reference as it appears in a query: resolved to a base table,
/// or explicitly unresolved (`table == None`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: Option<Ident>,
    pub column: Ident,
}

impl ColumnRef {
    pub fn resolved(table: impl Into<Ident>, column: impl Into<Ident>) -> Self {
        ColumnRef {
            table: Some(table.into()),
            column: column.into(),
        }
    }

    pub fn unresolved(column: impl Into<Ident>) -> Self {
        ColumnRef {
            table: None,
            column: column.into(),
        }
    }

    pub fn is_resolved(&self) -> bool {
        self.table.is_some()
    }

    pub fn qualified(&self) -> Option<QualifiedColumn> {
        self.table.as_ref().map(|t| QualifiedColumn {
            table: t.clone(),
            column: self.column.clone(),
        })
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.table {
            Some(t) => write!(f, "{}.{}", t, self.column),
            None => write!(f, "{}", self.column),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn case_insensitive_identity() {
        assert_eq!(Ident::new("driverStandings"), Ident::new("DRIVERSTANDINGS"));
        let set: HashSet<Ident> = ["Client", "client", "CLIENT"].into_iter().map(Ident::from).collect();
        assert_eq!(set.len(), 1);
        assert_eq!(Ident::new("Client").to_string(), "Client");
    }

    #[test]
    fn quoting() {
        assert_eq!(Ident::new("a2").to_sql(), "a2");
        assert_eq!(Ident::new("Enrollment (K-12)").to_sql(), "\"Enrollment (K-12)\"");
        assert_eq!(Ident::new("order").to_sql(), "\"order\"");
    }

    #[test]
    fn qualified_parse() {
        let q = QualifiedColumn::parse("client.district_id").unwrap();
        assert_eq!(q.table, Ident::new("CLIENT"));
        assert!(QualifiedColumn::parse("nodot").is_none());
    }
}
