//! Question-to-schema relevance scoring.

use std::collections::BTreeSet;

use crate::ident::{Ident, QualifiedColumn};

/// Relevance of schema elements to a question, each in `[0, 1]`.
pub trait SemanticScorer: Send + Sync {
    fn column_score(&self, question: &str, column: &QualifiedColumn) -> f64;
    fn table_score(&self, question: &str, table: &Ident) -> f64;
}

/// Token overlap after splitting identifiers on underscores, punctuation and
/// camel-case boundaries.
///
/// A column scores the larger of its own name coverage and half its table
/// name coverage.
#[derive(Clone, Copy, Debug, Default)]
pub struct TokenOverlapScorer;

impl SemanticScorer for TokenOverlapScorer {
    fn column_score(&self, question: &str, column: &QualifiedColumn) -> f64 {
        let q = tokens(question);
        let col = coverage(&q, &tokens(column.column.as_str()));
        let table = coverage(&q, &tokens(column.table.as_str()));
        col.max(0.5 * table)
    }

    fn table_score(&self, question: &str, table: &Ident) -> f64 {
        coverage(&tokens(question), &tokens(table.as_str()))
    }
}

pub fn semantic_score(question: &str, column: &QualifiedColumn) -> f64 {
    TokenOverlapScorer.column_score(question, column)
}

pub fn table_score(question: &str, table: &Ident) -> f64 {
    TokenOverlapScorer.table_score(question, table)
}

fn coverage(question: &BTreeSet<String>, name: &BTreeSet<String>) -> f64 {
    if name.is_empty() {
        return 0.0;
    }
    name.iter().filter(|t| question.contains(*t)).count() as f64 / name.len() as f64
}

/// Lowercased word tokens; a trailing `s` is dropped from words longer than
/// three characters.
pub fn tokens(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut word = String::new();
    let mut prev: Option<char> = None;
    let flush = |word: &mut String, out: &mut BTreeSet<String>| {
        if !word.is_empty() {
            let mut w = word.to_lowercase();
            if w.chars().count() > 3 && w.ends_with('s') {
                w.pop();
            }
            out.insert(w);
            word.clear();
        }
    };
    for c in text.chars() {
        if !c.is_alphanumeric() {
            flush(&mut word, &mut out);
            prev = None;
            continue;
        }
        let boundary = match prev {
            Some(p) => (p.is_lowercase() && c.is_uppercase()) || (p.is_alphabetic() != c.is_alphabetic()),
            None => false,
        };
        if boundary {
            flush(&mut word, &mut out);
        }
        word.push(c);
        prev = Some(c);
    }
    flush(&mut word, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_identifiers() {
        let t: Vec<_> = tokens("driverStandings Enrollment (K-12) player_api_id").into_iter().collect();
        assert_eq!(t, ["12", "api", "driver", "enrollment", "id", "k", "player", "standing"]);
    }

    #[test]
    fn language_of_cards() {
        let q = "language of cards";
        assert_eq!(semantic_score(q, &QualifiedColumn::new("foreign_data", "language")), 1.0);
        assert_eq!(semantic_score(q, &QualifiedColumn::new("cards", "watermark")), 0.5);
        assert_eq!(semantic_score(q, &QualifiedColumn::new("set", "code")), 0.0);
        assert_eq!(
            semantic_score("LANGUAGE", &QualifiedColumn::new("x", "Language")),
            semantic_score("language", &QualifiedColumn::new("x", "language"))
        );
    }
}
