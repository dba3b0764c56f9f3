//! SQL parsing and the clause-level query model.

pub mod ast;
pub mod lexer;
mod model;
mod parser;

use std::fmt;

pub use model::{
    parse, parse_with_schema, ClauseKind, ColumnUse, Footprint, JoinPredicate, LiteralValue, OrderByInfo, PredOp,
    Predicate, SelectItemInfo, StructuredQuery, SubqueryPattern, SubqueryRef, TableRef,
};
pub use parser::parse_query;

use crate::ident::Ident;

/// Parser diagnostic with the byte offset where it was raised.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
}

impl ParseError {
    pub fn new(message: impl Into<String>, offset: usize) -> Self {
        ParseError {
            message: message.into(),
            offset,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.message, self.offset)
    }
}

impl std::error::Error for ParseError {}

/// Schema knowledge used to resolve unqualified column references.
pub trait SchemaLookup {
    /// `None` when the table is unknown.
    fn table_has_column(&self, table: &Ident, column: &Ident) -> Option<bool>;
}

/// Aggregate function names recognised when setting aggregate flags.
pub fn is_aggregate_function(name: &str, arg_count: usize) -> bool {
    let lower = name.to_ascii_lowercase();
    match lower.as_str() {
        "count" | "sum" | "avg" | "total" | "group_concat" => true,
        "min" | "max" => arg_count == 1,
        _ => false,
    }
}
