//! Recursive-descent parser for single SELECT statements.

use super::ast::*;
use super::lexer::{is_reserved, tokenize, Token, TokenKind};
use super::ParseError;
use crate::ident::Ident;

/// Parses one SELECT statement, optionally terminated by `;`.
pub fn parse_query(sql: &str) -> Result<Query, ParseError> {
    let tokens = tokenize(sql)?;
    if tokens.is_empty() {
        return Err(ParseError::new("empty statement", 0));
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        len: sql.len(),
    };
    if p.peek_keyword("WITH") {
        return Err(p.error("common table expressions are not supported"));
    }
    if !p.peek_keyword("SELECT") {
        return Err(p.error("only SELECT statements are supported"));
    }
    let query = p.query()?;
    while p.eat_symbol(";") {}
    if p.pos < p.tokens.len() {
        return Err(p.error(&format!("unexpected token {}", p.tokens[p.pos].kind)));
    }
    Ok(query)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.len, |t| t.span.start)
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.tokens[self.pos - 1].span.end
        }
    }

    fn error(&self, msg: &str) -> ParseError {
        let found = match self.peek() {
            Some(t) => format!(" near {}", t.kind),
            None => " at end of input".to_string(),
        };
        ParseError::new(format!("{msg}{found}"), self.offset())
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn peek_symbol(&self, sym: &str) -> bool {
        self.peek().is_some_and(|t| t.is_symbol(sym))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_symbol(&mut self, sym: &str) -> bool {
        if self.peek_symbol(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {kw}")))
        }
    }

    fn expect_symbol(&mut self, sym: &str) -> Result<(), ParseError> {
        if self.eat_symbol(sym) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{sym}'")))
        }
    }

    fn peek_ident(&self) -> bool {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Word(w)) => !is_reserved(w),
            Some(TokenKind::QuotedIdent(_)) => true,
            _ => false,
        }
    }

    fn ident(&mut self) -> Result<Ident, ParseError> {
        match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Word(w)) if !is_reserved(&w) => {
                self.pos += 1;
                Ok(Ident::new(w))
            }
            Some(TokenKind::QuotedIdent(w)) => {
                self.pos += 1;
                Ok(Ident::new(w))
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    fn alias(&mut self) -> Result<Option<Ident>, ParseError> {
        if self.eat_keyword("AS") {
            if let Some(TokenKind::String(s)) = self.peek().map(|t| t.kind.clone()) {
                self.pos += 1;
                return Ok(Some(Ident::new(s)));
            }
            return self.ident().map(Some);
        }
        if self.peek_ident() {
            return self.ident().map(Some);
        }
        Ok(None)
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        let start = self.offset();
        let body = self.set_expr()?;
        let mut order_by = Vec::new();
        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            loop {
                let expr = self.expr()?;
                let descending = if self.eat_keyword("DESC") {
                    Some(true)
                } else if self.eat_keyword("ASC") {
                    Some(false)
                } else {
                    None
                };
                order_by.push(OrderByItem { expr, descending });
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }
        let mut limit = None;
        if self.eat_keyword("LIMIT") {
            let first = self.expr()?;
            if self.eat_symbol(",") {
                let count = self.expr()?;
                limit = Some(Limit {
                    count,
                    offset: Some(first),
                });
            } else if self.eat_keyword("OFFSET") {
                let offset = self.expr()?;
                limit = Some(Limit {
                    count: first,
                    offset: Some(offset),
                });
            } else {
                limit = Some(Limit {
                    count: first,
                    offset: None,
                });
            }
        }
        Ok(Query {
            body,
            order_by,
            limit,
            span: Span::new(start, self.prev_end()),
        })
    }

    fn set_expr(&mut self) -> Result<SetExpr, ParseError> {
        let mut left = SetExpr::Select(Box::new(self.select()?));
        loop {
            let op = if self.eat_keyword("UNION") {
                if self.eat_keyword("ALL") {
                    SetOp::UnionAll
                } else {
                    SetOp::Union
                }
            } else if self.eat_keyword("INTERSECT") {
                SetOp::Intersect
            } else if self.eat_keyword("EXCEPT") {
                SetOp::Except
            } else {
                return Ok(left);
            };
            let right = SetExpr::Select(Box::new(self.select()?));
            left = SetExpr::Compound {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
    }

    fn select(&mut self) -> Result<Select, ParseError> {
        self.expect_keyword("SELECT")?;
        let distinct = if self.eat_keyword("DISTINCT") {
            true
        } else {
            self.eat_keyword("ALL");
            false
        };
        let mut projection = Vec::new();
        loop {
            projection.push(self.select_item()?);
            if !self.eat_symbol(",") {
                break;
            }
        }
        let from = if self.eat_keyword("FROM") {
            Some(self.from_clause()?)
        } else {
            None
        };
        let selection = if self.eat_keyword("WHERE") {
            Some(self.expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            loop {
                group_by.push(self.expr()?);
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }
        let having = if self.eat_keyword("HAVING") {
            Some(self.expr()?)
        } else {
            None
        };
        Ok(Select {
            distinct,
            projection,
            from,
            selection,
            group_by,
            having,
        })
    }

    fn select_item(&mut self) -> Result<SelectItem, ParseError> {
        if self.eat_symbol("*") {
            return Ok(SelectItem::Wildcard);
        }
        if self.peek_ident()
            && self.peek_at(1).is_some_and(|t| t.is_symbol("."))
            && self.peek_at(2).is_some_and(|t| t.is_symbol("*"))
        {
            let table = self.ident()?;
            self.pos += 2;
            return Ok(SelectItem::QualifiedWildcard(table));
        }
        let expr = self.expr()?;
        let alias = self.alias()?;
        Ok(SelectItem::Expr { expr, alias })
    }

    fn from_clause(&mut self) -> Result<FromClause, ParseError> {
        let base = self.table_factor()?;
        let mut joins = Vec::new();
        loop {
            let kind = if self.eat_symbol(",") {
                JoinKind::Comma
            } else if self.eat_keyword("JOIN") {
                JoinKind::Inner
            } else if self.eat_keyword("INNER") {
                self.expect_keyword("JOIN")?;
                JoinKind::Inner
            } else if self.eat_keyword("LEFT") {
                self.eat_keyword("OUTER");
                self.expect_keyword("JOIN")?;
                JoinKind::Left
            } else if self.eat_keyword("CROSS") {
                self.expect_keyword("JOIN")?;
                JoinKind::Cross
            } else if self.peek_keyword("NATURAL") || self.peek_keyword("RIGHT") || self.peek_keyword("FULL") {
                return Err(self.error("unsupported join type"));
            } else {
                break;
            };
            let factor = self.table_factor()?;
            let constraint = if self.eat_keyword("ON") {
                JoinConstraint::On(self.expr()?)
            } else if self.eat_keyword("USING") {
                self.expect_symbol("(")?;
                let mut cols = vec![self.ident()?];
                while self.eat_symbol(",") {
                    cols.push(self.ident()?);
                }
                self.expect_symbol(")")?;
                JoinConstraint::Using(cols)
            } else {
                JoinConstraint::None
            };
            joins.push(Join {
                kind,
                factor,
                constraint,
            });
        }
        Ok(FromClause { base, joins })
    }

    fn table_factor(&mut self) -> Result<TableFactor, ParseError> {
        if self.eat_symbol("(") {
            if !self.peek_keyword("SELECT") {
                return Err(self.error("parenthesised joins are not supported"));
            }
            let subquery = self.query()?;
            self.expect_symbol(")")?;
            let alias = self.alias()?;
            return Ok(TableFactor::Derived {
                subquery: Box::new(subquery),
                alias,
            });
        }
        let mut name = self.ident()?;
        if self.peek_symbol(".") {
            self.pos += 1;
            name = self.ident()?;
        }
        let alias = self.alias()?;
        Ok(TableFactor::Table { name, alias })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.or_expr()
    }

    fn binary(left: Expr, op: BinaryOp, right: Expr) -> Expr {
        let span = left.span.to(right.span);
        Expr::new(
            ExprKind::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            },
            span,
        )
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.and_expr()?;
        while self.eat_keyword("OR") {
            let right = self.and_expr()?;
            left = Self::binary(left, BinaryOp::Or, right);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.not_expr()?;
        while self.eat_keyword("AND") {
            let right = self.not_expr()?;
            left = Self::binary(left, BinaryOp::And, right);
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.peek_keyword("NOT") && !self.peek_at(1).is_some_and(|t| t.is_keyword("EXISTS")) {
            let start = self.offset();
            self.pos += 1;
            let inner = self.not_expr()?;
            let span = Span::new(start, inner.span.end);
            return Ok(Expr::new(
                ExprKind::Unary {
                    op: UnaryOp::Not,
                    expr: Box::new(inner),
                },
                span,
            ));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.bitwise()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Symbol("=" | "==")) => Some(BinaryOp::Eq),
                Some(TokenKind::Symbol("!=" | "<>")) => Some(BinaryOp::NotEq),
                Some(TokenKind::Symbol("<")) => Some(BinaryOp::Lt),
                Some(TokenKind::Symbol("<=")) => Some(BinaryOp::LtEq),
                Some(TokenKind::Symbol(">")) => Some(BinaryOp::Gt),
                Some(TokenKind::Symbol(">=")) => Some(BinaryOp::GtEq),
                _ => None,
            };
            if let Some(op) = op {
                self.pos += 1;
                let right = self.bitwise()?;
                left = Self::binary(left, op, right);
                continue;
            }
            if self.eat_keyword("IS") {
                let negated = self.eat_keyword("NOT");
                let right = self.bitwise()?;
                let span = left.span.to(right.span);
                left = Expr::new(
                    ExprKind::Is {
                        expr: Box::new(left),
                        negated,
                        right: Box::new(right),
                    },
                    span,
                );
                continue;
            }
            if self.peek_keyword("ISNULL") || self.peek_keyword("NOTNULL") {
                let negated = self.peek_keyword("NOTNULL");
                let tok_span = self.tokens[self.pos].span;
                self.pos += 1;
                left = Self::is_null(left, negated, tok_span);
                continue;
            }
            let negated = if self.peek_keyword("NOT")
                && self.peek_at(1).is_some_and(|t| {
                    t.is_keyword("IN")
                        || t.is_keyword("LIKE")
                        || t.is_keyword("GLOB")
                        || t.is_keyword("BETWEEN")
                        || t.is_keyword("NULL")
                }) {
                self.pos += 1;
                true
            } else {
                false
            };
            if negated && self.peek_keyword("NULL") {
                let tok_span = self.tokens[self.pos].span;
                self.pos += 1;
                left = Self::is_null(left, true, tok_span);
                continue;
            }
            if self.eat_keyword("IN") {
                left = self.in_rest(left, negated)?;
                continue;
            }
            let like = if self.eat_keyword("LIKE") {
                Some(LikeOp::Like)
            } else if self.eat_keyword("GLOB") {
                Some(LikeOp::Glob)
            } else {
                None
            };
            if let Some(op) = like {
                let pattern = self.bitwise()?;
                let escape = if self.eat_keyword("ESCAPE") {
                    Some(Box::new(self.bitwise()?))
                } else {
                    None
                };
                let span = Span::new(left.span.start, self.prev_end());
                left = Expr::new(
                    ExprKind::Like {
                        op,
                        expr: Box::new(left),
                        negated,
                        pattern: Box::new(pattern),
                        escape,
                    },
                    span,
                );
                continue;
            }
            if self.eat_keyword("BETWEEN") {
                let low = self.bitwise()?;
                self.expect_keyword("AND")?;
                let high = self.bitwise()?;
                let span = left.span.to(high.span);
                left = Expr::new(
                    ExprKind::Between {
                        expr: Box::new(left),
                        negated,
                        low: Box::new(low),
                        high: Box::new(high),
                    },
                    span,
                );
                continue;
            }
            if negated {
                return Err(self.error("expected IN, LIKE, GLOB or BETWEEN after NOT"));
            }
            return Ok(left);
        }
    }

    fn is_null(left: Expr, negated: bool, tok_span: Span) -> Expr {
        let span = left.span.to(tok_span);
        Expr::new(
            ExprKind::Is {
                expr: Box::new(left),
                negated,
                right: Box::new(Expr::new(ExprKind::Literal(Literal::Null), tok_span)),
            },
            span,
        )
    }

    fn in_rest(&mut self, left: Expr, negated: bool) -> Result<Expr, ParseError> {
        self.expect_symbol("(")?;
        let kind = if self.peek_keyword("SELECT") {
            let query = self.query()?;
            ExprKind::InSubquery {
                expr: Box::new(left.clone()),
                negated,
                query: Box::new(query),
            }
        } else {
            let mut list = Vec::new();
            if !self.peek_symbol(")") {
                loop {
                    list.push(self.expr()?);
                    if !self.eat_symbol(",") {
                        break;
                    }
                }
            }
            ExprKind::InList {
                expr: Box::new(left.clone()),
                negated,
                list,
            }
        };
        self.expect_symbol(")")?;
        Ok(Expr::new(kind, Span::new(left.span.start, self.prev_end())))
    }

    fn bitwise(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.additive()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Symbol("&")) => BinaryOp::BitAnd,
                Some(TokenKind::Symbol("|")) => BinaryOp::BitOr,
                Some(TokenKind::Symbol("<<")) => BinaryOp::ShiftLeft,
                Some(TokenKind::Symbol(">>")) => BinaryOp::ShiftRight,
                _ => return Ok(left),
            };
            self.pos += 1;
            let right = self.additive()?;
            left = Self::binary(left, op, right);
        }
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.multiplicative()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Symbol("+")) => BinaryOp::Plus,
                Some(TokenKind::Symbol("-")) => BinaryOp::Minus,
                _ => return Ok(left),
            };
            self.pos += 1;
            let right = self.multiplicative()?;
            left = Self::binary(left, op, right);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.concat()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Symbol("*")) => BinaryOp::Mul,
                Some(TokenKind::Symbol("/")) => BinaryOp::Div,
                Some(TokenKind::Symbol("%")) => BinaryOp::Mod,
                _ => return Ok(left),
            };
            self.pos += 1;
            let right = self.concat()?;
            left = Self::binary(left, op, right);
        }
    }

    fn concat(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.unary()?;
        while self.eat_symbol("||") {
            let right = self.unary()?;
            left = Self::binary(left, BinaryOp::Concat, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let op = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Symbol("-")) => Some(UnaryOp::Neg),
            Some(TokenKind::Symbol("+")) => Some(UnaryOp::Plus),
            Some(TokenKind::Symbol("~")) => Some(UnaryOp::BitNot),
            _ => None,
        };
        if let Some(op) = op {
            let start = self.offset();
            self.pos += 1;
            let inner = self.unary()?;
            let span = Span::new(start, inner.span.end);
            return Ok(Expr::new(
                ExprKind::Unary {
                    op,
                    expr: Box::new(inner),
                },
                span,
            ));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("expected expression"));
        };
        let start = tok.span.start;
        match tok.kind {
            TokenKind::Number(n) => {
                self.pos += 1;
                Ok(Expr::new(ExprKind::Literal(Literal::Number(n)), tok.span))
            }
            TokenKind::String(s) => {
                self.pos += 1;
                Ok(Expr::new(ExprKind::Literal(Literal::String(s)), tok.span))
            }
            TokenKind::Symbol("(") => {
                self.pos += 1;
                let kind = if self.peek_keyword("SELECT") {
                    ExprKind::Subquery(Box::new(self.query()?))
                } else {
                    ExprKind::Nested(Box::new(self.expr()?))
                };
                self.expect_symbol(")")?;
                Ok(Expr::new(kind, Span::new(start, self.prev_end())))
            }
            TokenKind::Word(ref w) if w.eq_ignore_ascii_case("NULL") => {
                self.pos += 1;
                Ok(Expr::new(ExprKind::Literal(Literal::Null), tok.span))
            }
            TokenKind::Word(ref w) if w.eq_ignore_ascii_case("TRUE") || w.eq_ignore_ascii_case("FALSE") => {
                self.pos += 1;
                let value = w.eq_ignore_ascii_case("TRUE");
                Ok(Expr::new(ExprKind::Literal(Literal::Bool(value)), tok.span))
            }
            TokenKind::Word(ref w) if w.eq_ignore_ascii_case("NOT") => {
                self.pos += 1;
                self.expect_keyword("EXISTS")?;
                let exists = self.exists_rest(start)?;
                let span = exists.span;
                Ok(Expr::new(
                    ExprKind::Unary {
                        op: UnaryOp::Not,
                        expr: Box::new(exists),
                    },
                    span,
                ))
            }
            TokenKind::Word(ref w) if w.eq_ignore_ascii_case("EXISTS") => {
                self.pos += 1;
                self.exists_rest(start)
            }
            TokenKind::Word(ref w) if w.eq_ignore_ascii_case("CASE") => {
                self.pos += 1;
                self.case_rest(start)
            }
            TokenKind::Word(ref w) if w.eq_ignore_ascii_case("CAST") => {
                self.pos += 1;
                self.expect_symbol("(")?;
                let expr = self.expr()?;
                self.expect_keyword("AS")?;
                let type_name = self.type_name()?;
                self.expect_symbol(")")?;
                Ok(Expr::new(
                    ExprKind::Cast {
                        expr: Box::new(expr),
                        type_name,
                    },
                    Span::new(start, self.prev_end()),
                ))
            }
            TokenKind::Word(_) | TokenKind::QuotedIdent(_) => {
                let is_word = matches!(tok.kind, TokenKind::Word(_));
                if is_word && self.peek_at(1).is_some_and(|t| t.is_symbol("(")) {
                    let TokenKind::Word(name) = tok.kind else { unreachable!() };
                    if is_reserved(&name) {
                        return Err(self.error("unexpected keyword"));
                    }
                    self.pos += 2;
                    return self.function_rest(Ident::new(name), start);
                }
                let first = self.ident()?;
                if self.peek_symbol(".") {
                    self.pos += 1;
                    let column = self.ident()?;
                    return Ok(Expr::new(
                        ExprKind::Column {
                            table: Some(first),
                            column,
                        },
                        Span::new(start, self.prev_end()),
                    ));
                }
                Ok(Expr::new(
                    ExprKind::Column {
                        table: None,
                        column: first,
                    },
                    tok.span,
                ))
            }
            _ => Err(self.error("expected expression")),
        }
    }

    fn exists_rest(&mut self, start: usize) -> Result<Expr, ParseError> {
        self.expect_symbol("(")?;
        let query = self.query()?;
        self.expect_symbol(")")?;
        Ok(Expr::new(
            ExprKind::Exists { query: Box::new(query) },
            Span::new(start, self.prev_end()),
        ))
    }

    fn case_rest(&mut self, start: usize) -> Result<Expr, ParseError> {
        let operand = if self.peek_keyword("WHEN") {
            None
        } else {
            Some(Box::new(self.expr()?))
        };
        let mut branches = Vec::new();
        while self.eat_keyword("WHEN") {
            let when = self.expr()?;
            self.expect_keyword("THEN")?;
            let then = self.expr()?;
            branches.push((when, then));
        }
        if branches.is_empty() {
            return Err(self.error("expected WHEN"));
        }
        let else_result = if self.eat_keyword("ELSE") {
            Some(Box::new(self.expr()?))
        } else {
            None
        };
        self.expect_keyword("END")?;
        Ok(Expr::new(
            ExprKind::Case {
                operand,
                branches,
                else_result,
            },
            Span::new(start, self.prev_end()),
        ))
    }

    fn function_rest(&mut self, name: Ident, start: usize) -> Result<Expr, ParseError> {
        let mut distinct = false;
        let args = if self.eat_symbol("*") {
            FunctionArgs::Star
        } else {
            distinct = self.eat_keyword("DISTINCT");
            let mut list = Vec::new();
            if !self.peek_symbol(")") {
                loop {
                    list.push(self.expr()?);
                    if !self.eat_symbol(",") {
                        break;
                    }
                }
            }
            FunctionArgs::List(list)
        };
        self.expect_symbol(")")?;
        Ok(Expr::new(
            ExprKind::Function { name, distinct, args },
            Span::new(start, self.prev_end()),
        ))
    }

    fn type_name(&mut self) -> Result<String, ParseError> {
        let mut parts = Vec::new();
        while let Some(TokenKind::Word(w)) = self.peek().map(|t| t.kind.clone()) {
            self.pos += 1;
            parts.push(w.to_ascii_uppercase());
        }
        if parts.is_empty() {
            return Err(self.error("expected type name"));
        }
        let mut name = parts.join(" ");
        if self.eat_symbol("(") {
            let mut args = Vec::new();
            loop {
                match self.peek().map(|t| t.kind.clone()) {
                    Some(TokenKind::Number(n)) => {
                        self.pos += 1;
                        args.push(n);
                    }
                    _ => return Err(self.error("expected type size")),
                }
                if !self.eat_symbol(",") {
                    break;
                }
            }
            self.expect_symbol(")")?;
            name = format!("{name}({})", args.join(", "));
        }
        Ok(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(sql: &str) {
        let q = parse_query(sql).unwrap();
        let rendered = q.to_string();
        let again = parse_query(&rendered).unwrap_or_else(|e| panic!("{rendered}: {e}"));
        assert_eq!(q, again, "{rendered}");
    }

    #[test]
    fn parses_figure_two_shape() {
        let sql = "SELECT (SELECT COUNT(DISTINCT client.client_id) FROM client INNER JOIN account \
                   ON client.client_id = account.account_id INNER JOIN district \
                   ON account.district_id = district.district_id WHERE district.a2 = 'jesenik' \
                   AND client.gender = 'Female') AS num_female_clients;";
        let q = parse_query(sql).unwrap();
        let SetExpr::Select(sel) = &q.body else { panic!() };
        assert_eq!(sel.projection.len(), 1);
        roundtrip(sql);
    }

    #[test]
    fn limit_comma_form_normalises() {
        let a = parse_query("SELECT a FROM t LIMIT 5, 1").unwrap();
        let b = parse_query("SELECT a FROM t LIMIT 1 OFFSET 5").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn precedence_and_roundtrip() {
        roundtrip("SELECT a + b * c - d FROM t WHERE NOT x = 1 OR y BETWEEN 1 AND 2 AND z IS NOT NULL");
        roundtrip("SELECT CAST(SUM(x) AS REAL) / COUNT(`y z`) FROM t GROUP BY k HAVING COUNT(*) > 2");
        roundtrip("SELECT CASE WHEN a = 'i' THEN b ELSE NULL END AS n FROM t LEFT JOIN u USING (id)");
        roundtrip("SELECT - -1, -(a - b) FROM t WHERE c NOT LIKE '%x%' AND d NOT IN (1, 2)");
        roundtrip("SELECT a FROM t WHERE EXISTS (SELECT 1 FROM u) UNION ALL SELECT b FROM v ORDER BY 1 DESC");
    }

    #[test]
    fn rejects_non_select_and_cte() {
        assert!(parse_query("DELETE FROM t").is_err());
        assert!(parse_query("WITH x AS (SELECT 1) SELECT * FROM x").is_err());
        assert!(parse_query("SELECT FROM").is_err());
        assert!(parse_query("").is_err());
    }

    #[test]
    fn expression_spans_cover_source() {
        let sql = "SELECT a FROM t WHERE t.b = 'x'";
        let q = parse_query(sql).unwrap();
        let SetExpr::Select(sel) = &q.body else { panic!() };
        let w = sel.selection.as_ref().unwrap();
        assert_eq!(w.span.slice(sql), "t.b = 'x'");
    }
}
