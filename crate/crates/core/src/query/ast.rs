//! Syntax tree for the supported SELECT subset, plus a canonical renderer.
//!
//! Every node compares structurally; source spans are carried for
//! diagnostics but never take part in equality.

use std::fmt::{self, Write};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::ident::Ident;

/// Byte range into the parsed SQL text.
///
/// Spans are positional metadata: two spans always compare equal so that
/// re-rendered text parses to an equal tree.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }

    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub body: SetExpr,
    pub order_by: Vec<OrderByItem>,
    pub limit: Option<Limit>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SetExpr {
    Select(Box<Select>),
    Compound {
        op: SetOp,
        left: Box<SetExpr>,
        right: Box<SetExpr>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetOp {
    Union,
    UnionAll,
    Intersect,
    Except,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Select {
    pub distinct: bool,
    pub projection: Vec<SelectItem>,
    pub from: Option<FromClause>,
    pub selection: Option<Expr>,
    pub group_by: Vec<Expr>,
    pub having: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SelectItem {
    Wildcard,
    QualifiedWildcard(Ident),
    Expr { expr: Expr, alias: Option<Ident> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FromClause {
    pub base: TableFactor,
    pub joins: Vec<Join>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Join {
    pub kind: JoinKind,
    pub factor: TableFactor,
    pub constraint: JoinConstraint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JoinKind {
    Comma,
    Inner,
    Left,
    Cross,
}

#[derive(Clone, Debug, PartialEq)]
pub enum JoinConstraint {
    None,
    On(Expr),
    Using(Vec<Ident>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum TableFactor {
    Table { name: Ident, alias: Option<Ident> },
    Derived { subquery: Box<Query>, alias: Option<Ident> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderByItem {
    pub expr: Expr,
    pub descending: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Limit {
    pub count: Expr,
    pub offset: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Null,
    Number(String),
    String(String),
    Bool(bool),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Plus,
    Not,
    BitNot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Plus,
    Minus,
    Mul,
    Div,
    Mod,
    Concat,
    BitAnd,
    BitOr,
    ShiftLeft,
    ShiftRight,
}

impl BinaryOp {
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::NotEq | BinaryOp::Lt | BinaryOp::LtEq | BinaryOp::Gt | BinaryOp::GtEq
        )
    }

    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "OR",
            BinaryOp::And => "AND",
            BinaryOp::Eq => "=",
            BinaryOp::NotEq => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::LtEq => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::GtEq => ">=",
            BinaryOp::Plus => "+",
            BinaryOp::Minus => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Concat => "||",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::ShiftLeft => "<<",
            BinaryOp::ShiftRight => ">>",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LikeOp {
    Like,
    Glob,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionArgs {
    Star,
    List(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Column { table: Option<Ident>, column: Ident },
    Literal(Literal),
    Unary { op: UnaryOp, expr: Box<Expr> },
    Binary { op: BinaryOp, left: Box<Expr>, right: Box<Expr> },
    Is { expr: Box<Expr>, negated: bool, right: Box<Expr> },
    Like { op: LikeOp, expr: Box<Expr>, negated: bool, pattern: Box<Expr>, escape: Option<Box<Expr>> },
    Between { expr: Box<Expr>, negated: bool, low: Box<Expr>, high: Box<Expr> },
    InList { expr: Box<Expr>, negated: bool, list: Vec<Expr> },
    InSubquery { expr: Box<Expr>, negated: bool, query: Box<Query> },
    Exists { query: Box<Query> },
    Subquery(Box<Query>),
    Function { name: Ident, distinct: bool, args: FunctionArgs },
    Cast { expr: Box<Expr>, type_name: String },
    Case { operand: Option<Box<Expr>>, branches: Vec<(Expr, Expr)>, else_result: Option<Box<Expr>> },
    Nested(Box<Expr>),
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.body)?;
        if !self.order_by.is_empty() {
            f.write_str(" ORDER BY ")?;
            write_list(f, &self.order_by)?;
        }
        if let Some(limit) = &self.limit {
            write!(f, " LIMIT {}", limit.count)?;
            if let Some(offset) = &limit.offset {
                write!(f, " OFFSET {offset}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetExpr::Select(s) => write!(f, "{s}"),
            SetExpr::Compound { op, left, right } => {
                let kw = match op {
                    SetOp::Union => "UNION",
                    SetOp::UnionAll => "UNION ALL",
                    SetOp::Intersect => "INTERSECT",
                    SetOp::Except => "EXCEPT",
                };
                write!(f, "{left} {kw} {right}")
            }
        }
    }
}

impl fmt::Display for Select {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        write_list(f, &self.projection)?;
        if let Some(from) = &self.from {
            write!(f, " FROM {}", from.base)?;
            for join in &from.joins {
                match join.kind {
                    JoinKind::Comma => write!(f, ", {}", join.factor)?,
                    JoinKind::Inner => write!(f, " JOIN {}", join.factor)?,
                    JoinKind::Left => write!(f, " LEFT JOIN {}", join.factor)?,
                    JoinKind::Cross => write!(f, " CROSS JOIN {}", join.factor)?,
                }
                match &join.constraint {
                    JoinConstraint::None => {}
                    JoinConstraint::On(e) => write!(f, " ON {e}")?,
                    JoinConstraint::Using(cols) => {
                        f.write_str(" USING (")?;
                        write_idents(f, cols)?;
                        f.write_char(')')?;
                    }
                }
            }
        }
        if let Some(sel) = &self.selection {
            write!(f, " WHERE {sel}")?;
        }
        if !self.group_by.is_empty() {
            f.write_str(" GROUP BY ")?;
            write_list(f, &self.group_by)?;
        }
        if let Some(h) = &self.having {
            write!(f, " HAVING {h}")?;
        }
        Ok(())
    }
}

impl fmt::Display for SelectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectItem::Wildcard => f.write_char('*'),
            SelectItem::QualifiedWildcard(t) => write!(f, "{}.*", t.to_sql()),
            SelectItem::Expr { expr, alias } => {
                write!(f, "{expr}")?;
                if let Some(a) = alias {
                    write!(f, " AS {}", a.to_sql())?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for TableFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let alias = match self {
            TableFactor::Table { name, alias } => {
                f.write_str(&name.to_sql())?;
                alias
            }
            TableFactor::Derived { subquery, alias } => {
                write!(f, "({subquery})")?;
                alias
            }
        };
        if let Some(a) = alias {
            write!(f, " AS {}", a.to_sql())?;
        }
        Ok(())
    }
}

impl fmt::Display for OrderByItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)?;
        match self.descending {
            Some(true) => f.write_str(" DESC"),
            Some(false) => f.write_str(" ASC"),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Null => f.write_str("NULL"),
            Literal::Number(n) => f.write_str(n),
            Literal::String(s) => write!(f, "'{}'", s.replace('\'', "''")),
            Literal::Bool(true) => f.write_str("TRUE"),
            Literal::Bool(false) => f.write_str("FALSE"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)
    }
}

impl fmt::Display for ExprKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let not = |negated: bool| if negated { "NOT " } else { "" };
        match self {
            ExprKind::Column { table: Some(t), column } => write!(f, "{}.{}", t.to_sql(), column.to_sql()),
            ExprKind::Column { table: None, column } => f.write_str(&column.to_sql()),
            ExprKind::Literal(l) => write!(f, "{l}"),
            ExprKind::Unary { op, expr } => match op {
                UnaryOp::Neg if matches!(expr.kind, ExprKind::Unary { op: UnaryOp::Neg, .. }) => write!(f, "- {expr}"),
                UnaryOp::Neg => write!(f, "-{expr}"),
                UnaryOp::Plus => write!(f, "+{expr}"),
                UnaryOp::BitNot => write!(f, "~{expr}"),
                UnaryOp::Not => write!(f, "NOT {expr}"),
            },
            ExprKind::Binary { op, left, right } => write!(f, "{left} {} {right}", op.symbol()),
            ExprKind::Is { expr, negated, right } => write!(f, "{expr} IS {}{right}", not(*negated)),
            ExprKind::Like { op, expr, negated, pattern, escape } => {
                let kw = match op {
                    LikeOp::Like => "LIKE",
                    LikeOp::Glob => "GLOB",
                };
                write!(f, "{expr} {}{kw} {pattern}", not(*negated))?;
                if let Some(e) = escape {
                    write!(f, " ESCAPE {e}")?;
                }
                Ok(())
            }
            ExprKind::Between { expr, negated, low, high } => {
                write!(f, "{expr} {}BETWEEN {low} AND {high}", not(*negated))
            }
            ExprKind::InList { expr, negated, list } => {
                write!(f, "{expr} {}IN (", not(*negated))?;
                write_list(f, list)?;
                f.write_char(')')
            }
            ExprKind::InSubquery { expr, negated, query } => write!(f, "{expr} {}IN ({query})", not(*negated)),
            ExprKind::Exists { query } => write!(f, "EXISTS ({query})"),
            ExprKind::Subquery(q) => write!(f, "({q})"),
            ExprKind::Function { name, distinct, args } => {
                write!(f, "{}(", name.to_sql())?;
                if *distinct {
                    f.write_str("DISTINCT ")?;
                }
                match args {
                    FunctionArgs::Star => f.write_char('*')?,
                    FunctionArgs::List(list) => write_list(f, list)?,
                }
                f.write_char(')')
            }
            ExprKind::Cast { expr, type_name } => write!(f, "CAST({expr} AS {type_name})"),
            ExprKind::Case { operand, branches, else_result } => {
                f.write_str("CASE")?;
                if let Some(op) = operand {
                    write!(f, " {op}")?;
                }
                for (when, then) in branches {
                    write!(f, " WHEN {when} THEN {then}")?;
                }
                if let Some(e) = else_result {
                    write!(f, " ELSE {e}")?;
                }
                f.write_str(" END")
            }
            ExprKind::Nested(e) => write!(f, "({e})"),
        }
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

fn write_idents(f: &mut fmt::Formatter<'_>, items: &[Ident]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        f.write_str(&item.to_sql())?;
    }
    Ok(())
}

/// Calls `visit` on every direct child expression of `expr`, not descending
/// into subqueries.
pub fn for_each_child(expr: &Expr, mut visit: impl FnMut(&Expr)) {
    match &expr.kind {
        ExprKind::Column { .. } | ExprKind::Literal(_) | ExprKind::Exists { .. } | ExprKind::Subquery(_) => {}
        ExprKind::Unary { expr, .. } | ExprKind::Cast { expr, .. } | ExprKind::Nested(expr) => visit(expr),
        ExprKind::InSubquery { expr, .. } => visit(expr),
        ExprKind::Binary { left, right, .. } => {
            visit(left);
            visit(right);
        }
        ExprKind::Is { expr, right, .. } => {
            visit(expr);
            visit(right);
        }
        ExprKind::Like { expr, pattern, escape, .. } => {
            visit(expr);
            visit(pattern);
            if let Some(e) = escape {
                visit(e);
            }
        }
        ExprKind::Between { expr, low, high, .. } => {
            visit(expr);
            visit(low);
            visit(high);
        }
        ExprKind::InList { expr, list, .. } => {
            visit(expr);
            list.iter().for_each(&mut visit);
        }
        ExprKind::Function { args, .. } => {
            if let FunctionArgs::List(list) = args {
                list.iter().for_each(&mut visit);
            }
        }
        ExprKind::Case { operand, branches, else_result } => {
            if let Some(o) = operand {
                visit(o);
            }
            for (w, t) in branches {
                visit(w);
                visit(t);
            }
            if let Some(e) = else_result {
                visit(e);
            }
        }
    }
}

/// Subquery directly owned by `expr` (not nested deeper), if any.
pub fn direct_subquery(expr: &Expr) -> Option<&Query> {
    match &expr.kind {
        ExprKind::InSubquery { query, .. } | ExprKind::Exists { query } | ExprKind::Subquery(query) => Some(query),
        _ => None,
    }
}
