//! Signals computed from the query structure, the catalog and probe queries.

use indexmap::{IndexMap, IndexSet};
use serde_json::json;

use super::{DetectionContext, SignalId, SignalOutcome};
use crate::exec::classify_result;
use crate::ident::{Ident, QualifiedColumn};
use crate::query::PredOp;

/// Runs the enabled database signals in registry order.
pub fn run_db_signals(ctx: &DetectionContext<'_>, enabled: &[SignalId]) -> Vec<SignalOutcome> {
    SignalId::DB
        .into_iter()
        .filter(|s| enabled.contains(s))
        .map(|s| run_db_signal(ctx, s))
        .collect()
}

pub fn run_db_signal(ctx: &DetectionContext<'_>, id: SignalId) -> SignalOutcome {
    if id != SignalId::AbnormalResult && !ctx.sq.parse_ok {
        let reason = ctx.sq.parse_error.clone().unwrap_or_default();
        if id == SignalId::IncorrectFilterInSubquery {
            return incorrect_filter_in_subquery(ctx);
        }
        return SignalOutcome::downgrade(id, format!("query did not parse: {reason}"));
    }
    match id {
        SignalId::AbnormalResult => abnormal_result(ctx),
        SignalId::EmptyPredicate => empty_predicate(ctx),
        SignalId::IncorrectFilterInSubquery => incorrect_filter_in_subquery(ctx),
        SignalId::IncorrectGroupBy => incorrect_group_by(ctx),
        SignalId::IncorrectJoinPredicate => incorrect_join_predicate(ctx),
        SignalId::SuboptimalJoinTree => suboptimal_join_tree(ctx),
        SignalId::TableSimilarity => table_similarity(ctx),
        SignalId::UnnecessarySubquery => unnecessary_subquery(ctx),
        SignalId::ValueAmbiguity => value_ambiguity(ctx),
        other => SignalOutcome::downgrade(other, "not a database signal"),
    }
}

fn clauses(key: &str, items: Vec<String>) -> IndexMap<String, Vec<String>> {
    IndexMap::from([(key.to_string(), items)])
}

fn abnormal_result(ctx: &DetectionContext<'_>) -> SignalOutcome {
    let id = SignalId::AbnormalResult;
    let rt = match ctx.db.run(&ctx.sql, &ctx.limits) {
        Ok(rt) => rt,
        Err(e) => return SignalOutcome::downgrade(id, format!("execution failed: {e}")),
    };
    let flags = classify_result(&rt);
    let evidence = json!({ "row_count": rt.row_count, "flags": flags });
    if !flags.any() {
        return SignalOutcome::clear(id, evidence);
    }
    let described = flags.describe();
    SignalOutcome::flag(id, clauses("abnormal output", described.clone()), described.join("; "), evidence)
}

fn empty_predicate(ctx: &DetectionContext<'_>) -> SignalOutcome {
    let id = SignalId::EmptyPredicate;
    let mut empty = Vec::new();
    let mut probes = Vec::new();
    for pred in ctx.sq.literal_predicates() {
        if pred.operator == PredOp::Is {
            continue;
        }
        match ctx.db.probe_predicate(pred, &ctx.limits) {
            Ok(n) => {
                probes.push(json!({ "predicate": pred.text, "rows": n }));
                if n == 0 {
                    empty.push(pred.text.clone());
                }
            }
            Err(e) => probes.push(json!({ "predicate": pred.text, "error": e.to_string() })),
        }
    }
    let evidence = json!({ "probes": probes });
    if empty.is_empty() {
        return SignalOutcome::clear(id, evidence);
    }
    let detail = format!("{} predicate(s) select no rows on their own", empty.len());
    SignalOutcome::flag(id, clauses("predicates that match no rows", empty), detail, evidence)
}

fn incorrect_filter_in_subquery(ctx: &DetectionContext<'_>) -> SignalOutcome {
    let id = SignalId::IncorrectFilterInSubquery;
    let mut bad = Vec::new();
    let mut probes = Vec::new();
    for sub in ctx.sq.scalar_subquery_filters() {
        let lhs = sub.filter_column.as_ref().map(|c| c.to_string()).unwrap_or_default();
        match ctx.db.run(&sub.sql_text, &ctx.limits) {
            Ok(rt) => {
                probes.push(json!({ "subquery": sub.sql_text, "rows": rt.row_count }));
                if rt.row_count > 1 {
                    bad.push(format!("{lhs} = ({})", sub.sql_text));
                }
            }
            Err(e) => probes.push(json!({ "subquery": sub.sql_text, "error": e.to_string() })),
        }
    }
    let evidence = json!({ "probes": probes });
    if bad.is_empty() {
        return SignalOutcome::clear(id, evidence);
    }
    let detail = "an equality filter compares against a subquery that returns several rows";
    SignalOutcome::flag(id, clauses("subquery filters", bad), detail, evidence)
}

fn incorrect_group_by(ctx: &DetectionContext<'_>) -> SignalOutcome {
    let id = SignalId::IncorrectGroupBy;
    if !ctx.sq.groupby_without_aggregate() {
        return SignalOutcome::clear(id, json!({}));
    }
    let cols: Vec<String> = ctx.sq.group_by_columns.iter().map(|c| c.column.to_string()).collect();
    let detail = "GROUP BY is used without a meaningful aggregate";
    SignalOutcome::flag(id, clauses("GROUP BY clause", cols.clone()), detail, json!({ "group_by": cols }))
}

fn incorrect_join_predicate(ctx: &DetectionContext<'_>) -> SignalOutcome {
    let id = SignalId::IncorrectJoinPredicate;
    let bad: Vec<String> = ctx
        .sq
        .join_predicates
        .iter()
        .filter(|jp| !ctx.catalog.is_valid_join(jp))
        .map(|jp| jp.text.clone())
        .collect();
    let evidence = json!({ "join_predicates": ctx.sq.join_predicates.len(), "invalid": bad });
    if bad.is_empty() {
        return SignalOutcome::clear(id, evidence);
    }
    let detail = "join predicates that follow no key relationship";
    SignalOutcome::flag(id, clauses("incorrect join predicates", bad), detail, evidence)
}

fn suboptimal_join_tree(ctx: &DetectionContext<'_>) -> SignalOutcome {
    let id = SignalId::SuboptimalJoinTree;
    let sq = &ctx.sq;
    let fp = sq.footprint();
    let mut scopes = Vec::new();
    let mut first_flag: Option<(Vec<String>, Vec<String>)> = None;
    for (scope_id, scope) in sq.scopes.iter().enumerate() {
        if scope.tables.len() < 2 || scope.has_derived {
            continue;
        }
        let in_scope = |t: &Ident| scope.tables.contains(t);
        let mut terminals: IndexSet<Ident> = IndexSet::new();
        for c in &fp.non_join_columns {
            if in_scope(&c.table) {
                terminals.insert(c.table.clone());
            }
        }
        for item in sq.select_items.iter().filter(|i| i.scope == scope_id) {
            for c in &item.columns {
                if let Some(t) = c.table.as_ref().filter(|t| in_scope(t)) {
                    terminals.insert(t.clone());
                }
            }
        }
        for p in sq.literal_predicates.iter().filter(|p| p.scope == scope_id) {
            if let Some(t) = p.column.table.as_ref().filter(|t| in_scope(t)) {
                terminals.insert(t.clone());
            }
        }
        if terminals.is_empty() {
            scopes.push(json!({ "scope": scope_id, "skipped": "no terminal tables" }));
            continue;
        }
        let terminals: Vec<Ident> = terminals.into_iter().collect();
        let result = match ctx.catalog.steiner_tables(&terminals) {
            Ok(r) => r,
            Err(e) => {
                scopes.push(json!({ "scope": scope_id, "error": e.to_string() }));
                continue;
            }
        };
        let used: Vec<String> = scope.tables.iter().map(|t| t.to_string()).collect();
        let mut optimal: Vec<&Ident> = result.tables.iter().collect();
        optimal.sort_by_key(|t| scope.tables.iter().position(|s| s == *t).unwrap_or(usize::MAX));
        let optimal: Vec<String> = optimal.into_iter().map(|t| t.to_string()).collect();
        let flagged = scope.tables.len() > result.tables.len();
        scopes.push(json!({
            "scope": scope_id,
            "terminals": terminals.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            "used": used,
            "optimal": optimal,
            "exact": result.exact,
            "flagged": flagged,
        }));
        if flagged && first_flag.is_none() {
            first_flag = Some((used, optimal));
        }
    }
    let evidence = json!({ "scopes": scopes });
    let Some((used, optimal)) = first_flag else {
        return SignalOutcome::clear(id, evidence);
    };
    let detail = format!("{} tables joined where {} suffice", used.len(), optimal.len());
    let mut c = IndexMap::new();
    c.insert("tables used in the JOIN clauses".to_string(), used);
    c.insert("optimal set of tables to join".to_string(), optimal);
    SignalOutcome::flag(id, c, detail, evidence)
}

fn table_similarity(ctx: &DetectionContext<'_>) -> SignalOutcome {
    let id = SignalId::TableSimilarity;
    let fp = ctx.sq.footprint();
    let mut hits = Vec::new();
    let mut found = Vec::new();
    for (table, cols) in &fp.columns_by_table {
        if cols.len() < ctx.thresholds.min_group_size || ctx.catalog.table(table).is_none() {
            continue;
        }
        let group: Vec<Ident> = cols.iter().cloned().collect();
        let own = ctx.scorer.table_score(&ctx.question, table);
        let alts: Vec<(Ident, f64)> = ctx
            .catalog
            .tables_with_column_group(&group, table)
            .into_iter()
            .map(|t| {
                let s = ctx.scorer.table_score(&ctx.question, &t);
                (t, s)
            })
            .filter(|(_, s)| *s >= own)
            .collect();
        if alts.is_empty() {
            continue;
        }
        let names: Vec<String> = alts.iter().map(|(t, _)| t.to_string()).collect();
        for n in &names {
            hits.push(format!("{table} -> {n}"));
        }
        found.push(json!({
            "table": table.to_string(),
            "columns": group.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "score": own,
            "alternatives": alts.iter().map(|(t, s)| json!({ "table": t.to_string(), "score": s })).collect::<Vec<_>>(),
        }));
    }
    let evidence = json!({ "similar": found });
    if hits.is_empty() {
        return SignalOutcome::clear(id, evidence);
    }
    let detail = "another table holds the same columns and matches the question at least as well";
    SignalOutcome::flag(id, clauses("tables with similar alternatives", hits), detail, evidence)
}

fn unnecessary_subquery(ctx: &DetectionContext<'_>) -> SignalOutcome {
    let id = SignalId::UnnecessarySubquery;
    let n = ctx.sq.subquery_count();
    let evidence = json!({ "subqueries": n, "threshold": ctx.thresholds.max_subqueries });
    if n <= ctx.thresholds.max_subqueries {
        return SignalOutcome::clear(id, evidence);
    }
    let texts = ctx.sq.subqueries.iter().map(|s| s.sql_text.clone()).collect();
    SignalOutcome::flag(id, clauses("subqueries", texts), format!("{n} subqueries"), evidence)
}

fn value_ambiguity(ctx: &DetectionContext<'_>) -> SignalOutcome {
    let id = SignalId::ValueAmbiguity;
    let mut hits = Vec::new();
    let mut found = Vec::new();
    for pred in ctx.sq.literal_predicates() {
        let Some(used) = pred.column.qualified() else { continue };
        let Some(used) = ctx.catalog.canonical(&used) else { continue };
        let used_score = ctx.scorer.column_score(&ctx.question, &used);
        for lit in pred.literal.scalars() {
            let Some(value) = lit.as_text() else { continue };
            let better: Vec<(QualifiedColumn, f64)> = ctx
                .catalog
                .columns_containing_value(value)
                .into_iter()
                .filter(|c| *c != used)
                .map(|c| {
                    let s = ctx.scorer.column_score(&ctx.question, &c);
                    (c, s)
                })
                .filter(|(_, s)| *s > used_score)
                .collect();
            for (col, score) in better {
                hits.push(format!("{} uses {used}; the value also appears in {col}", lit.to_sql()));
                found.push(json!({
                    "value": value,
                    "used": used.to_string(),
                    "used_score": used_score,
                    "better": col.to_string(),
                    "better_score": score,
                }));
            }
        }
    }
    let evidence = json!({ "ambiguous": found });
    if hits.is_empty() {
        return SignalOutcome::clear(id, evidence);
    }
    let detail = "a literal also appears in a column that matches the question better";
    SignalOutcome::flag(id, clauses("ambiguous values", hits), detail, evidence)
}
