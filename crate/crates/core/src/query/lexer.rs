//! Tokenizer for the SQLite SELECT subset.

use std::fmt;

use super::ast::Span;
use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    /// Bare word; keywords are bare words checked case-insensitively.
    Word(String),
    /// `"x"`, `` `x` `` or `[x]`.
    QuotedIdent(String),
    String(String),
    Number(String),
    Symbol(&'static str),
}

#[derive(Clone, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.kind, TokenKind::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    pub fn is_symbol(&self, sym: &str) -> bool {
        matches!(&self.kind, TokenKind::Symbol(s) if *s == sym)
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Word(w) => write!(f, "{w}"),
            TokenKind::QuotedIdent(w) => write!(f, "\"{w}\""),
            TokenKind::String(s) => write!(f, "'{s}'"),
            TokenKind::Number(n) => write!(f, "{n}"),
            TokenKind::Symbol(s) => write!(f, "{s}"),
        }
    }
}

const RESERVED: &[&str] = &[
    "ALL", "AND", "AS", "ASC", "BETWEEN", "BY", "CASE", "CAST", "CROSS", "DESC", "DISTINCT",
    "ELSE", "END", "ESCAPE", "EXCEPT", "EXISTS", "FROM", "FULL", "GLOB", "GROUP", "HAVING", "IN",
    "INNER", "INTERSECT", "IS", "ISNULL", "JOIN", "LEFT", "LIKE", "LIMIT", "NATURAL", "NOT",
    "NOTNULL", "NULL", "OFFSET", "ON", "OR", "ORDER", "OUTER", "RIGHT", "SELECT", "THEN", "UNION",
    "USING", "VALUES", "WHEN", "WHERE", "WITH",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|k| k.eq_ignore_ascii_case(word))
}

const SYMBOLS: &[&str] = &[
    "<<", ">>", "<=", ">=", "<>", "!=", "==", "||", "(", ")", ",", ".", ";", "*", "+", "-", "/",
    "%", "=", "<", ">", "&", "|", "~", "?",
];

pub fn tokenize(sql: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = sql.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'-' && bytes.get(i + 1) == Some(&b'-') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start = i;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(ParseError::new("unterminated block comment", start));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        match c {
            b'\'' => {
                let (text, end) = read_quoted(sql, i, b'\'')?;
                tokens.push(Token {
                    kind: TokenKind::String(text),
                    span: Span::new(start, end),
                });
                i = end;
            }
            b'"' | b'`' => {
                let (text, end) = read_quoted(sql, i, c)?;
                tokens.push(Token {
                    kind: TokenKind::QuotedIdent(text),
                    span: Span::new(start, end),
                });
                i = end;
            }
            b'[' => {
                let close = sql[i + 1..]
                    .find(']')
                    .ok_or_else(|| ParseError::new("unterminated [identifier]", start))?;
                let end = i + 1 + close + 1;
                tokens.push(Token {
                    kind: TokenKind::QuotedIdent(sql[i + 1..end - 1].to_string()),
                    span: Span::new(start, end),
                });
                i = end;
            }
            b'0'..=b'9' => {
                i = read_number(bytes, i);
                tokens.push(Token {
                    kind: TokenKind::Number(sql[start..i].to_string()),
                    span: Span::new(start, i),
                });
            }
            b'.' if bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())
                && !matches!(tokens.last(), Some(Token { kind: TokenKind::Word(_) | TokenKind::QuotedIdent(_), .. })) =>
            {
                i = read_number(bytes, i);
                tokens.push(Token {
                    kind: TokenKind::Number(sql[start..i].to_string()),
                    span: Span::new(start, i),
                });
            }
            _ if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$' || bytes[i] >= 0x80)
                {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Word(sql[start..i].to_string()),
                    span: Span::new(start, i),
                });
            }
            _ => {
                let sym = SYMBOLS
                    .iter()
                    .find(|s| sql[i..].starts_with(**s))
                    .ok_or_else(|| ParseError::new(format!("unexpected character {:?}", c as char), start))?;
                i += sym.len();
                tokens.push(Token {
                    kind: TokenKind::Symbol(sym),
                    span: Span::new(start, i),
                });
            }
        }
    }
    Ok(tokens)
}

fn read_quoted(sql: &str, start: usize, quote: u8) -> Result<(String, usize), ParseError> {
    let bytes = sql.as_bytes();
    let mut out = String::new();
    let mut i = start + 1;
    let mut seg = i;
    loop {
        if i >= bytes.len() {
            return Err(ParseError::new("unterminated quoted text", start));
        }
        if bytes[i] == quote {
            if bytes.get(i + 1) == Some(&quote) {
                out.push_str(&sql[seg..=i]);
                i += 2;
                seg = i;
                continue;
            }
            out.push_str(&sql[seg..i]);
            return Ok((out, i + 1));
        }
        i += 1;
    }
}

fn read_number(bytes: &[u8], mut i: usize) -> usize {
    if bytes[i] == b'0' && matches!(bytes.get(i + 1), Some(b'x' | b'X')) {
        i += 2;
        while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
            i += 1;
        }
        return i;
    }
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
        let mut j = i + 1;
        if j < bytes.len() && matches!(bytes[j], b'+' | b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            i = j;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_quotes_and_symbols() {
        let toks = tokenize("SELECT c.`artist`, 'it''s' FROM \"t\" WHERE a <> 1.5e3 -- tail").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.kind.clone()).collect();
        assert_eq!(kinds[0], TokenKind::Word("SELECT".into()));
        assert_eq!(kinds[3], TokenKind::QuotedIdent("artist".into()));
        assert_eq!(kinds[5], TokenKind::String("it's".into()));
        assert_eq!(kinds[7], TokenKind::QuotedIdent("t".into()));
        assert_eq!(kinds[10], TokenKind::Symbol("<>"));
        assert_eq!(kinds[11], TokenKind::Number("1.5e3".into()));
        assert_eq!(kinds.len(), 12);
    }

    #[test]
    fn unterminated_string_is_error() {
        assert!(tokenize("SELECT 'abc").is_err());
    }

    #[test]
    fn spans_point_into_source() {
        let sql = "SELECT  name";
        let toks = tokenize(sql).unwrap();
        assert_eq!(&sql[toks[1].span.start..toks[1].span.end], "name");
    }
}
