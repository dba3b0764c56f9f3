//! Clause-level decomposition of a parsed query.

use std::sync::OnceLock;

use indexmap::{IndexMap, IndexSet};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ast::*;
use super::parser::parse_query;
use super::{is_aggregate_function, SchemaLookup};
use crate::ident::{ColumnRef, Ident, QualifiedColumn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClauseKind {
    Select,
    From,
    On,
    Where,
    GroupBy,
    Having,
    OrderBy,
    Limit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    NotEq,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    LtEq,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    GtEq,
    #[serde(rename = "LIKE")]
    Like,
    #[serde(rename = "GLOB")]
    Glob,
    #[serde(rename = "IN")]
    In,
    #[serde(rename = "IS")]
    Is,
    #[serde(rename = "BETWEEN")]
    Between,
}

impl PredOp {
    pub fn as_sql(self) -> &'static str {
        match self {
            PredOp::Eq => "=",
            PredOp::NotEq => "!=",
            PredOp::Lt => "<",
            PredOp::LtEq => "<=",
            PredOp::Gt => ">",
            PredOp::GtEq => ">=",
            PredOp::Like => "LIKE",
            PredOp::Glob => "GLOB",
            PredOp::In => "IN",
            PredOp::Is => "IS",
            PredOp::Between => "BETWEEN",
        }
    }

    fn flipped(self) -> PredOp {
        match self {
            PredOp::Lt => PredOp::Gt,
            PredOp::LtEq => PredOp::GtEq,
            PredOp::Gt => PredOp::Lt,
            PredOp::GtEq => PredOp::LtEq,
            other => other,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum LiteralValue {
    Null,
    Text(String),
    Number(String),
    List(Vec<LiteralValue>),
    Pair(Box<LiteralValue>, Box<LiteralValue>),
}

impl LiteralValue {
    pub fn to_sql(&self) -> String {
        match self {
            LiteralValue::Null => "NULL".into(),
            LiteralValue::Text(s) => format!("'{}'", s.replace('\'', "''")),
            LiteralValue::Number(n) => n.clone(),
            LiteralValue::List(items) => {
                let parts: Vec<_> = items.iter().map(|i| i.to_sql()).collect();
                format!("({})", parts.join(", "))
            }
            LiteralValue::Pair(a, b) => format!("{} AND {}", a.to_sql(), b.to_sql()),
        }
    }

    /// Scalar text/number values contained in this literal.
    pub fn scalars(&self) -> Vec<&LiteralValue> {
        match self {
            LiteralValue::Null => vec![],
            LiteralValue::Text(_) | LiteralValue::Number(_) => vec![self],
            LiteralValue::List(items) => items.iter().flat_map(|i| i.scalars()).collect(),
            LiteralValue::Pair(a, b) => {
                let mut v = a.scalars();
                v.extend(b.scalars());
                v
            }
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            LiteralValue::Text(s) | LiteralValue::Number(s) => Some(s),
            _ => None,
        }
    }
}

/// A comparison between one column and a literal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub column: ColumnRef,
    pub operator: PredOp,
    pub literal: LiteralValue,
    pub negated: bool,
    pub clause: ClauseKind,
    pub span: Span,
    pub scope: usize,
    pub text: String,
}

impl Predicate {
    /// The predicate as a standalone condition on its base table.
    pub fn condition_sql(&self) -> String {
        let col = self.column.column.to_sql();
        let cond = match self.operator {
            PredOp::In => format!("{col} IN {}", self.literal.to_sql()),
            _ => format!("{col} {} {}", self.operator.as_sql(), self.literal.to_sql()),
        };
        if self.negated {
            format!("NOT ({cond})")
        } else {
            cond
        }
    }

    /// `SELECT COUNT(*)` probe over the predicate's table, if resolved.
    pub fn probe_sql(&self) -> Option<String> {
        let table = self.column.table.as_ref()?;
        Some(format!("SELECT COUNT(*) FROM {} WHERE {}", table.to_sql(), self.condition_sql()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JoinPredicate {
    pub left: ColumnRef,
    pub right: ColumnRef,
    pub clause: ClauseKind,
    pub span: Span,
    pub scope: usize,
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SubqueryPattern {
    ScalarEqualityFilter,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubqueryRef {
    pub sql_text: String,
    pub depth: usize,
    pub pattern: SubqueryPattern,
    pub parent_clause: ClauseKind,
    /// Column on the other side of `column = (SELECT ...)`.
    pub filter_column: Option<ColumnRef>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectItemInfo {
    pub text: String,
    pub alias: Option<Ident>,
    pub is_aggregate: bool,
    pub columns: Vec<ColumnRef>,
    pub scope: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderByInfo {
    pub text: String,
    pub is_aggregate: bool,
    pub scope: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRef {
    pub name: Ident,
    pub alias: Option<Ident>,
    pub scope: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnUse {
    pub column: ColumnRef,
    pub clause: ClauseKind,
    pub scope: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateUse {
    pub function: Ident,
    pub star: bool,
    pub columns: Vec<ColumnRef>,
    pub clause: ClauseKind,
}

/// One SELECT block. Compound arms and subqueries each get their own scope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScopeInfo {
    pub depth: usize,
    pub parent: Option<usize>,
    pub tables: Vec<Ident>,
    pub has_derived: bool,
    pub has_group_by: bool,
    pub group_by: Vec<ColumnRef>,
    pub aggregates: Vec<AggregateUse>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StructuredQuery {
    pub raw_sql: String,
    pub parse_ok: bool,
    pub parse_error: Option<String>,
    pub ast: Option<Query>,
    pub select_items: Vec<SelectItemInfo>,
    pub from_tables: Vec<TableRef>,
    pub join_predicates: Vec<JoinPredicate>,
    pub literal_predicates: Vec<Predicate>,
    pub group_by_columns: Vec<ColumnUse>,
    pub order_by_items: Vec<OrderByInfo>,
    pub subqueries: Vec<SubqueryRef>,
    pub alias_map: IndexMap<Ident, Ident>,
    pub columns: Vec<ColumnUse>,
    pub scopes: Vec<ScopeInfo>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Footprint {
    pub tables: IndexSet<Ident>,
    pub columns_by_table: IndexMap<Ident, IndexSet<Ident>>,
    pub non_join_columns: IndexSet<QualifiedColumn>,
    pub literal_values: Vec<LiteralValue>,
}

pub fn parse(sql: &str) -> StructuredQuery {
    build(sql, None)
}

pub fn parse_with_schema(sql: &str, schema: &dyn SchemaLookup) -> StructuredQuery {
    build(sql, Some(schema))
}

fn build(sql: &str, schema: Option<&dyn SchemaLookup>) -> StructuredQuery {
    match parse_query(sql) {
        Ok(query) => {
            let mut b = Builder {
                schema,
                sq: StructuredQuery {
                    raw_sql: sql.to_string(),
                    parse_ok: true,
                    ..Default::default()
                },
                scope_tables: Vec::new(),
            };
            b.visit_query(&query, 0, None);
            b.sq.subqueries.sort_by_key(|s| s.span.start);
            b.sq.ast = Some(query);
            b.sq
        }
        Err(e) => StructuredQuery {
            raw_sql: sql.to_string(),
            parse_ok: false,
            parse_error: Some(e.to_string()),
            ..Default::default()
        },
    }
}

impl StructuredQuery {
    /// Equality ignoring the raw text, so re-rendered queries compare equal.
    pub fn structurally_eq(&self, other: &StructuredQuery) -> bool {
        self.parse_ok == other.parse_ok
            && self.ast == other.ast
            && self.select_items == other.select_items
            && self.from_tables == other.from_tables
            && self.join_predicates == other.join_predicates
            && self.literal_predicates == other.literal_predicates
            && self.group_by_columns == other.group_by_columns
            && self.order_by_items == other.order_by_items
            && self.subqueries == other.subqueries
            && self.alias_map == other.alias_map
            && self.columns == other.columns
            && self.scopes == other.scopes
    }

    /// Canonical text of the parsed query.
    pub fn render(&self) -> Option<String> {
        self.ast.as_ref().map(|q| q.to_string())
    }

    pub fn literal_predicates(&self) -> &[Predicate] {
        &self.literal_predicates
    }

    /// Subqueries of the `column = (SELECT ...)` shape. Falls back to a text
    /// scan when the query did not parse.
    pub fn scalar_subquery_filters(&self) -> Vec<SubqueryRef> {
        if self.parse_ok {
            return self
                .subqueries
                .iter()
                .filter(|s| s.pattern == SubqueryPattern::ScalarEqualityFilter)
                .cloned()
                .collect();
        }
        text_scalar_filters(&self.raw_sql)
    }

    pub fn subquery_count(&self) -> usize {
        self.subqueries.len()
    }

    /// True when some SELECT block groups without a meaningful aggregate.
    ///
    /// Aggregates in the SELECT list, HAVING and ORDER BY are considered. An
    /// aggregate is meaningful when it is `COUNT(*)`, takes no column, or
    /// reads a column outside that block's GROUP BY list.
    pub fn groupby_without_aggregate(&self) -> bool {
        self.scopes.iter().any(|scope| {
            scope.has_group_by
                && !scope.aggregates.iter().any(|agg| {
                    agg.star
                        || agg.columns.is_empty()
                        || agg.columns.iter().any(|c| !scope.group_by.iter().any(|g| same_column(g, c)))
                })
        })
    }

    pub fn footprint(&self) -> Footprint {
        let mut fp = Footprint::default();
        for t in &self.from_tables {
            fp.tables.insert(t.name.clone());
        }
        let join_cols: Vec<&ColumnRef> = self.join_predicates.iter().flat_map(|j| [&j.left, &j.right]).collect();
        for use_ in &self.columns {
            let Some(table) = &use_.column.table else { continue };
            fp.columns_by_table
                .entry(table.clone())
                .or_default()
                .insert(use_.column.column.clone());
            if !join_cols.iter().any(|j| *j == &use_.column) {
                fp.non_join_columns
                    .insert(QualifiedColumn::new(table.clone(), use_.column.column.clone()));
            }
        }
        for p in &self.literal_predicates {
            fp.literal_values.extend(p.literal.scalars().into_iter().cloned());
        }
        fp
    }

    /// Distinct base tables named in one scope's FROM clause.
    pub fn scope_tables(&self, scope: usize) -> &[Ident] {
        &self.scopes[scope].tables
    }
}

fn same_column(a: &ColumnRef, b: &ColumnRef) -> bool {
    match (&a.table, &b.table) {
        (Some(x), Some(y)) => x == y && a.column == b.column,
        _ => a.column == b.column,
    }
}

fn text_scalar_filters(raw: &str) -> Vec<SubqueryRef> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"(?i)([\w.`\x22\[\]]+)\s*=\s*\(\s*select\b").unwrap());
    let mut out = Vec::new();
    for caps in re.captures_iter(raw) {
        let whole = caps.get(0).unwrap();
        let open = whole.start() + whole.as_str().find('(').unwrap();
        let Some(close) = matching_paren(raw, open) else { continue };
        let column = caps[1].trim_matches(|c| matches!(c, '`' | '"' | '[' | ']'));
        let column = column.rsplit('.').next().unwrap_or(column);
        let depth = 1 + raw[..open]
            .match_indices('(')
            .filter(|(i, _)| raw[i + 1..].trim_start().to_ascii_lowercase().starts_with("select"))
            .filter(|(i, _)| matching_paren(raw, *i).is_none_or(|c| c > open))
            .count();
        out.push(SubqueryRef {
            sql_text: raw[open + 1..close].trim().to_string(),
            depth,
            pattern: SubqueryPattern::ScalarEqualityFilter,
            parent_clause: ClauseKind::Where,
            filter_column: Some(ColumnRef::unresolved(column)),
            span: Span::new(open, close + 1),
        });
    }
    out
}

fn matching_paren(text: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    for (i, c) in text[open..].char_indices() {
        if let Some(q) = quote {
            if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' | '`' => quote = Some(c),
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i);
                }
            }
            _ => {}
        }
    }
    None
}

struct ScopeTable {
    name: Option<Ident>,
    alias: Option<Ident>,
}

struct Builder<'a> {
    schema: Option<&'a dyn SchemaLookup>,
    sq: StructuredQuery,
    scope_tables: Vec<Vec<ScopeTable>>,
}

#[derive(Clone, Copy)]
struct Ctx {
    scope: usize,
    clause: ClauseKind,
    depth: usize,
}

fn column_of(e: &Expr) -> Option<(&Option<Ident>, &Ident)> {
    match &e.kind {
        ExprKind::Column { table, column } => Some((table, column)),
        ExprKind::Nested(inner) => column_of(inner),
        _ => None,
    }
}

fn literal_of(e: &Expr) -> Option<LiteralValue> {
    match &e.kind {
        ExprKind::Literal(Literal::Null) => Some(LiteralValue::Null),
        ExprKind::Literal(Literal::Number(n)) => Some(LiteralValue::Number(n.clone())),
        ExprKind::Literal(Literal::String(s)) => Some(LiteralValue::Text(s.clone())),
        ExprKind::Literal(Literal::Bool(b)) => Some(LiteralValue::Number(if *b { "1" } else { "0" }.into())),
        ExprKind::Unary { op: UnaryOp::Neg, expr } => match literal_of(expr)? {
            LiteralValue::Number(n) if !n.starts_with('-') => Some(LiteralValue::Number(format!("-{n}"))),
            _ => None,
        },
        ExprKind::Nested(inner) => literal_of(inner),
        _ => None,
    }
}

fn scalar_subquery(e: &Expr) -> Option<&Query> {
    match &e.kind {
        ExprKind::Subquery(q) => Some(q),
        _ => None,
    }
}

impl Builder<'_> {
    fn visit_query(&mut self, q: &Query, depth: usize, parent: Option<usize>) -> usize {
        let first = self.visit_set_expr(&q.body, depth, parent);
        let single = matches!(q.body, SetExpr::Select(_));
        let ctx = Ctx {
            scope: first,
            clause: ClauseKind::OrderBy,
            depth,
        };
        for item in &q.order_by {
            let aggs = self.walk_expr(&item.expr, ctx);
            let is_aggregate = !aggs.is_empty();
            if single {
                self.sq.scopes[first].aggregates.extend(aggs);
            }
            self.sq.order_by_items.push(OrderByInfo {
                text: item.expr.to_string(),
                is_aggregate,
                scope: first,
            });
        }
        if let Some(limit) = &q.limit {
            let ctx = Ctx {
                clause: ClauseKind::Limit,
                ..ctx
            };
            self.walk_expr(&limit.count, ctx);
            if let Some(off) = &limit.offset {
                self.walk_expr(off, ctx);
            }
        }
        first
    }

    fn visit_set_expr(&mut self, body: &SetExpr, depth: usize, parent: Option<usize>) -> usize {
        match body {
            SetExpr::Select(sel) => self.visit_select(sel, depth, parent),
            SetExpr::Compound { left, right, .. } => {
                let first = self.visit_set_expr(left, depth, parent);
                self.visit_set_expr(right, depth, parent);
                first
            }
        }
    }

    fn visit_select(&mut self, sel: &Select, depth: usize, parent: Option<usize>) -> usize {
        let scope = self.sq.scopes.len();
        self.sq.scopes.push(ScopeInfo {
            depth,
            parent,
            tables: Vec::new(),
            has_derived: false,
            has_group_by: !sel.group_by.is_empty(),
            group_by: Vec::new(),
            aggregates: Vec::new(),
        });
        self.scope_tables.push(Vec::new());

        if let Some(from) = &sel.from {
            self.register_factor(&from.base, scope, depth);
            for join in &from.joins {
                self.register_factor(&join.factor, scope, depth);
            }
        }

        let ctx = Ctx {
            scope,
            clause: ClauseKind::Select,
            depth,
        };
        for item in &sel.projection {
            match item {
                SelectItem::Wildcard => {}
                SelectItem::QualifiedWildcard(_) => {}
                SelectItem::Expr { expr, alias } => {
                    let before = self.sq.columns.len();
                    let aggs = self.walk_expr(expr, ctx);
                    let columns = self.sq.columns[before..]
                        .iter()
                        .filter(|c| c.scope == scope)
                        .map(|c| c.column.clone())
                        .collect();
                    self.sq.select_items.push(SelectItemInfo {
                        text: expr.to_string(),
                        alias: alias.clone(),
                        is_aggregate: !aggs.is_empty(),
                        columns,
                        scope,
                    });
                    self.sq.scopes[scope].aggregates.extend(aggs);
                }
            }
        }

        if let Some(from) = &sel.from {
            for (i, join) in from.joins.iter().enumerate() {
                match &join.constraint {
                    JoinConstraint::None => {}
                    JoinConstraint::On(cond) => {
                        let ctx = Ctx {
                            clause: ClauseKind::On,
                            ..ctx
                        };
                        self.walk_expr(cond, ctx);
                        self.collect_predicates(cond, false, ctx);
                    }
                    JoinConstraint::Using(cols) => self.using_predicates(scope, i + 1, cols),
                }
            }
        }

        if let Some(cond) = &sel.selection {
            let ctx = Ctx {
                clause: ClauseKind::Where,
                ..ctx
            };
            self.walk_expr(cond, ctx);
            self.collect_predicates(cond, false, ctx);
        }

        for expr in &sel.group_by {
            let ctx = Ctx {
                clause: ClauseKind::GroupBy,
                ..ctx
            };
            let before = self.sq.columns.len();
            self.walk_expr(expr, ctx);
            let cols: Vec<ColumnUse> = self.sq.columns[before..]
                .iter()
                .filter(|c| c.scope == scope)
                .cloned()
                .collect();
            for c in cols {
                self.sq.scopes[scope].group_by.push(c.column.clone());
                self.sq.group_by_columns.push(c);
            }
        }

        if let Some(cond) = &sel.having {
            let ctx = Ctx {
                clause: ClauseKind::Having,
                ..ctx
            };
            let aggs = self.walk_expr(cond, ctx);
            self.sq.scopes[scope].aggregates.extend(aggs);
            self.collect_predicates(cond, false, ctx);
        }
        scope
    }

    fn register_factor(&mut self, factor: &TableFactor, scope: usize, depth: usize) {
        match factor {
            TableFactor::Table { name, alias } => {
                self.sq.from_tables.push(TableRef {
                    name: name.clone(),
                    alias: alias.clone(),
                    scope,
                });
                let key = alias.clone().unwrap_or_else(|| name.clone());
                self.sq.alias_map.entry(key).or_insert_with(|| name.clone());
                if !self.sq.scopes[scope].tables.contains(name) {
                    self.sq.scopes[scope].tables.push(name.clone());
                }
                self.scope_tables[scope].push(ScopeTable {
                    name: Some(name.clone()),
                    alias: alias.clone(),
                });
            }
            TableFactor::Derived { subquery, alias } => {
                self.sq.scopes[scope].has_derived = true;
                self.scope_tables[scope].push(ScopeTable {
                    name: None,
                    alias: alias.clone(),
                });
                self.sq.subqueries.push(SubqueryRef {
                    sql_text: subquery.to_string(),
                    depth: depth + 1,
                    pattern: SubqueryPattern::Other,
                    parent_clause: ClauseKind::From,
                    filter_column: None,
                    span: subquery.span,
                });
                self.visit_query(subquery, depth + 1, Some(scope));
            }
        }
    }

    fn using_predicates(&mut self, scope: usize, factor_index: usize, cols: &[Ident]) {
        let Some(right) = self.scope_tables[scope][factor_index].name.clone() else { return };
        for col in cols {
            let left = self.scope_tables[scope][..factor_index]
                .iter()
                .rev()
                .filter_map(|t| t.name.clone())
                .find(|t| match self.schema {
                    Some(s) => s.table_has_column(t, col) == Some(true),
                    None => true,
                });
            let Some(left) = left else { continue };
            let l = ColumnRef::resolved(left.clone(), col.clone());
            let r = ColumnRef::resolved(right.clone(), col.clone());
            for c in [&l, &r] {
                self.sq.columns.push(ColumnUse {
                    column: c.clone(),
                    clause: ClauseKind::On,
                    scope,
                });
            }
            self.sq.join_predicates.push(JoinPredicate {
                text: format!("{}.{} = {}.{}", left.to_sql(), col.to_sql(), right.to_sql(), col.to_sql()),
                left: l,
                right: r,
                clause: ClauseKind::On,
                span: Span::default(),
                scope,
            });
        }
    }

    fn resolve(&self, scope: usize, qualifier: Option<&Ident>, column: &Ident) -> ColumnRef {
        match qualifier {
            Some(q) => self.resolve_qualified(scope, q, column),
            None => self.resolve_bare(scope, column),
        }
    }

    fn chain(&self, scope: usize) -> Vec<usize> {
        let mut out = vec![scope];
        let mut cur = scope;
        while let Some(p) = self.sq.scopes[cur].parent {
            out.push(p);
            cur = p;
        }
        out
    }

    fn resolve_qualified(&self, scope: usize, q: &Ident, column: &Ident) -> ColumnRef {
        let chain = self.chain(scope);
        let by_alias = chain.iter().find_map(|s| {
            self.scope_tables[*s].iter().find(|t| match &t.alias {
                Some(a) => a == q,
                None => t.name.as_ref() == Some(q),
            })
        });
        let hit = by_alias.or_else(|| {
            chain
                .iter()
                .find_map(|s| self.scope_tables[*s].iter().find(|t| t.name.as_ref() == Some(q)))
        });
        match hit.and_then(|t| t.name.clone()) {
            Some(table) => ColumnRef::resolved(table, column.clone()),
            None => ColumnRef::unresolved(column.clone()),
        }
    }

    fn resolve_bare(&self, scope: usize, column: &Ident) -> ColumnRef {
        for s in self.chain(scope) {
            let tables = &self.scope_tables[s];
            match self.schema {
                Some(schema) => {
                    let mut owners = IndexSet::new();
                    let mut unknown = false;
                    for t in tables {
                        match &t.name {
                            Some(name) => match schema.table_has_column(name, column) {
                                Some(true) => {
                                    owners.insert(name.clone());
                                }
                                Some(false) => {}
                                None => unknown = true,
                            },
                            None => unknown = true,
                        }
                    }
                    if owners.len() == 1 && !unknown {
                        return ColumnRef::resolved(owners.pop().unwrap(), column.clone());
                    }
                    if !owners.is_empty() || unknown {
                        return ColumnRef::unresolved(column.clone());
                    }
                }
                None => {
                    if let [ScopeTable { name: Some(name), .. }] = tables.as_slice() {
                        return ColumnRef::resolved(name.clone(), column.clone());
                    }
                    return ColumnRef::unresolved(column.clone());
                }
            }
        }
        ColumnRef::unresolved(column.clone())
    }

    /// Records column uses and subqueries; returns aggregate calls found
    /// outside nested subqueries.
    fn walk_expr(&mut self, expr: &Expr, ctx: Ctx) -> Vec<AggregateUse> {
        let mut aggs = Vec::new();
        self.walk_inner(expr, ctx, &mut aggs);
        aggs
    }

    fn walk_inner(&mut self, expr: &Expr, ctx: Ctx, aggs: &mut Vec<AggregateUse>) {
        match &expr.kind {
            ExprKind::Column { table, column } => {
                let resolved = self.resolve(ctx.scope, table.as_ref(), column);
                self.sq.columns.push(ColumnUse {
                    column: resolved,
                    clause: ctx.clause,
                    scope: ctx.scope,
                });
                return;
            }
            ExprKind::Binary {
                op: BinaryOp::Eq,
                left,
                right,
            } => {
                if let (Some((q, c)), Some(sub)) = (column_of(left), scalar_subquery(right)) {
                    self.walk_inner(left, ctx, aggs);
                    let filter = self.resolve(ctx.scope, q.as_ref(), c);
                    self.subquery(sub, right.span, ctx, SubqueryPattern::ScalarEqualityFilter, Some(filter));
                    return;
                }
                if let (Some(sub), Some((q, c))) = (scalar_subquery(left), column_of(right)) {
                    let filter = self.resolve(ctx.scope, q.as_ref(), c);
                    self.subquery(sub, left.span, ctx, SubqueryPattern::ScalarEqualityFilter, Some(filter));
                    self.walk_inner(right, ctx, aggs);
                    return;
                }
            }
            ExprKind::Function { name, args, .. } => {
                let n = match args {
                    FunctionArgs::Star => 0,
                    FunctionArgs::List(l) => l.len(),
                };
                let star = matches!(args, FunctionArgs::Star);
                if is_aggregate_function(name.as_str(), n) || star {
                    let before = self.sq.columns.len();
                    if let FunctionArgs::List(list) = args {
                        let mut inner = Vec::new();
                        for a in list {
                            self.walk_inner(a, ctx, &mut inner);
                        }
                    }
                    let columns = self.sq.columns[before..]
                        .iter()
                        .filter(|c| c.scope == ctx.scope)
                        .map(|c| c.column.clone())
                        .collect();
                    aggs.push(AggregateUse {
                        function: name.clone(),
                        star,
                        columns,
                        clause: ctx.clause,
                    });
                    return;
                }
            }
            _ => {}
        }
        if let Some(q) = direct_subquery(expr) {
            if let ExprKind::InSubquery { expr: lhs, .. } = &expr.kind {
                self.walk_inner(lhs, ctx, aggs);
            }
            let span = match &expr.kind {
                ExprKind::InSubquery { query, .. } => query.span,
                _ => expr.span,
            };
            self.subquery(q, span, ctx, SubqueryPattern::Other, None);
            return;
        }
        let mut children = Vec::new();
        for_each_child(expr, |c| children.push(c.clone()));
        for c in &children {
            self.walk_inner(c, ctx, aggs);
        }
    }

    fn subquery(&mut self, q: &Query, span: Span, ctx: Ctx, pattern: SubqueryPattern, filter: Option<ColumnRef>) {
        self.sq.subqueries.push(SubqueryRef {
            sql_text: q.to_string(),
            depth: ctx.depth + 1,
            pattern,
            parent_clause: ctx.clause,
            filter_column: filter,
            span,
        });
        self.visit_query(q, ctx.depth + 1, Some(ctx.scope));
    }

    fn push_literal(&mut self, expr: &Expr, column: (&Option<Ident>, &Ident), op: PredOp, literal: LiteralValue, negated: bool, ctx: Ctx) {
        let column = self.resolve(ctx.scope, column.0.as_ref(), column.1);
        self.sq.literal_predicates.push(Predicate {
            column,
            operator: op,
            literal,
            negated,
            clause: ctx.clause,
            span: expr.span,
            scope: ctx.scope,
            text: expr.to_string(),
        });
    }

    fn collect_predicates(&mut self, expr: &Expr, negated: bool, ctx: Ctx) {
        match &expr.kind {
            ExprKind::Binary {
                op: BinaryOp::And | BinaryOp::Or,
                left,
                right,
            } => {
                self.collect_predicates(left, negated, ctx);
                self.collect_predicates(right, negated, ctx);
            }
            ExprKind::Unary { op: UnaryOp::Not, expr } => self.collect_predicates(expr, !negated, ctx),
            ExprKind::Nested(inner) => self.collect_predicates(inner, negated, ctx),
            ExprKind::Binary { op, left, right } if op.is_comparison() => {
                let pred_op = match op {
                    BinaryOp::Eq => PredOp::Eq,
                    BinaryOp::NotEq => PredOp::NotEq,
                    BinaryOp::Lt => PredOp::Lt,
                    BinaryOp::LtEq => PredOp::LtEq,
                    BinaryOp::Gt => PredOp::Gt,
                    _ => PredOp::GtEq,
                };
                match (column_of(left), column_of(right)) {
                    (Some(l), Some(r)) => {
                        if *op != BinaryOp::Eq {
                            return;
                        }
                        let lc = self.resolve(ctx.scope, l.0.as_ref(), l.1);
                        let rc = self.resolve(ctx.scope, r.0.as_ref(), r.1);
                        let same_text = l.0 == r.0 && l.1 == r.1;
                        if lc == rc && (lc.is_resolved() || same_text) {
                            return;
                        }
                        self.sq.join_predicates.push(JoinPredicate {
                            left: lc,
                            right: rc,
                            clause: ctx.clause,
                            span: expr.span,
                            scope: ctx.scope,
                            text: expr.to_string(),
                        });
                    }
                    (Some(c), None) => {
                        if let Some(lit) = literal_of(right) {
                            self.push_literal(expr, c, pred_op, lit, negated, ctx);
                        }
                    }
                    (None, Some(c)) => {
                        if let Some(lit) = literal_of(left) {
                            self.push_literal(expr, c, pred_op.flipped(), lit, negated, ctx);
                        }
                    }
                    (None, None) => {}
                }
            }
            ExprKind::Is {
                expr: lhs,
                negated: is_not,
                right,
            } => {
                if let (Some(c), Some(lit)) = (column_of(lhs), literal_of(right)) {
                    self.push_literal(expr, c, PredOp::Is, lit, negated ^ is_not, ctx);
                }
            }
            ExprKind::Like {
                op,
                expr: lhs,
                negated: not_like,
                pattern,
                escape: None,
            } => {
                if let (Some(c), Some(lit)) = (column_of(lhs), literal_of(pattern)) {
                    let op = match op {
                        LikeOp::Like => PredOp::Like,
                        LikeOp::Glob => PredOp::Glob,
                    };
                    self.push_literal(expr, c, op, lit, negated ^ not_like, ctx);
                }
            }
            ExprKind::Between {
                expr: lhs,
                negated: not_between,
                low,
                high,
            } => {
                if let (Some(c), Some(lo), Some(hi)) = (column_of(lhs), literal_of(low), literal_of(high)) {
                    let lit = LiteralValue::Pair(Box::new(lo), Box::new(hi));
                    self.push_literal(expr, c, PredOp::Between, lit, negated ^ not_between, ctx);
                }
            }
            ExprKind::InList {
                expr: lhs,
                negated: not_in,
                list,
            } => {
                if let Some(c) = column_of(lhs) {
                    let lits: Option<Vec<_>> = list.iter().map(literal_of).collect();
                    if let Some(lits) = lits {
                        self.push_literal(expr, c, PredOp::In, LiteralValue::List(lits), negated ^ not_in, ctx);
                    }
                }
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const FIG2: &str = "SELECT (SELECT COUNT(DISTINCT client.client_id) FROM client INNER JOIN account \
        ON client.client_id = account.account_id INNER JOIN district ON account.district_id = district.district_id \
        WHERE district.a2 = 'jesenik' AND client.gender = 'Female') AS num_female_clients";

    #[test]
    fn figure_two_decomposition() {
        let sq = parse(FIG2);
        assert!(sq.parse_ok);
        assert_eq!(sq.join_predicates.len(), 2);
        let lits: Vec<_> = sq.literal_predicates.iter().map(|p| p.literal.clone()).collect();
        assert_eq!(
            lits,
            vec![LiteralValue::Text("jesenik".into()), LiteralValue::Text("Female".into())]
        );
        assert_eq!(sq.subquery_count(), 1);
        let fp = sq.footprint();
        let tables: Vec<_> = fp.tables.iter().map(|t| t.as_str()).collect();
        assert_eq!(tables, ["client", "account", "district"]);
        let nj: Vec<_> = fp.non_join_columns.iter().map(|c| c.to_string()).collect();
        assert_eq!(nj, ["district.a2", "client.gender"]);
    }

    #[test]
    fn trivial_select_is_empty() {
        let sq = parse("SELECT 1");
        assert!(sq.parse_ok);
        assert!(sq.join_predicates.is_empty() && sq.literal_predicates.is_empty() && sq.subqueries.is_empty());
        assert!(sq.group_by_columns.is_empty() && sq.from_tables.is_empty());
        assert_eq!(sq.footprint(), Footprint::default());
    }

    #[test]
    fn failure_is_encoded() {
        let sq = parse("SELEC nothing");
        assert!(!sq.parse_ok);
        assert!(sq.parse_error.is_some());
        assert!(sq.select_items.is_empty());
    }

    #[test]
    fn literal_on_left_flips_operator() {
        let sq = parse("SELECT a FROM t WHERE 5 < t.b");
        assert_eq!(sq.literal_predicates[0].operator, PredOp::Gt);
        assert_eq!(sq.literal_predicates[0].probe_sql().unwrap(), "SELECT COUNT(*) FROM t WHERE b > 5");
    }

    #[test]
    fn groupby_rules() {
        assert!(parse("SELECT a FROM t GROUP BY a").groupby_without_aggregate());
        assert!(!parse("SELECT a, COUNT(*) FROM t GROUP BY a").groupby_without_aggregate());
        assert!(!parse("SELECT a FROM t").groupby_without_aggregate());
        assert!(parse("SELECT a, b FROM t GROUP BY a, b ORDER BY SUM(b)").groupby_without_aggregate());
        assert!(!parse("SELECT a FROM t GROUP BY a ORDER BY SUM(b)").groupby_without_aggregate());
    }

    #[test]
    fn scalar_filters_and_in() {
        let eq = parse("SELECT Name FROM badges WHERE UserId = (SELECT Id FROM users WHERE DisplayName = 'Pierre')");
        let f = eq.scalar_subquery_filters();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].filter_column.as_ref().unwrap().to_string(), "badges.UserId");
        let inq = parse("SELECT Name FROM badges WHERE UserId IN (SELECT Id FROM users WHERE DisplayName = 'Pierre')");
        assert!(inq.scalar_subquery_filters().is_empty());
        assert_eq!(inq.subquery_count(), 1);
    }

    #[test]
    fn text_fallback_finds_scalar_filter() {
        let sq = parse("SELECT Name FROM badges WHERE UserId = (SELECT Id FROM users) AND ???");
        assert!(!sq.parse_ok);
        let f = sq.scalar_subquery_filters();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].sql_text, "SELECT Id FROM users");
        assert_eq!(f[0].depth, 1);
    }

    #[test]
    fn subqueries_nested_in_document_order() {
        let sq = parse("SELECT (SELECT a FROM t WHERE t.x = (SELECT y FROM u)) AS p, (SELECT b FROM v) AS q");
        let depths: Vec<_> = sq.subqueries.iter().map(|s| s.depth).collect();
        assert_eq!(depths, [1, 2, 1]);
    }

    #[test]
    fn alias_resolution_and_unresolved() {
        let sq = parse("SELECT T1.a, b FROM x AS T1 JOIN y AS T2 ON T1.k = T2.k");
        assert_eq!(sq.alias_map.get(&Ident::new("t1")).unwrap().as_str(), "x");
        assert_eq!(sq.select_items[0].columns[0].to_string(), "x.a");
        assert!(!sq.select_items[1].columns[0].is_resolved());
        assert_eq!(sq.join_predicates[0].left, ColumnRef::resolved("x", "k"));
    }
}
