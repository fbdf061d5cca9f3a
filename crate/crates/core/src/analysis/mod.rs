//! Safety, security and resilience passes over a model.
//!
//! Every pass is a pure function of a store snapshot. Reports serialize in
//! the interchange JSON conventions and render as aligned text tables.

mod chain;
mod context;
mod coverage;
mod exposure;
mod slice;
mod tradespace;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::store::{canonical_cmp, EntityId, EntityRecord, Store};

pub use chain::{trace_chain, CausalChain, LossRef, MonitoredTarget};
pub use context::{unsafe_context_check, ContextEvaluation};
pub use coverage::{stpa_coverage, CoverageCell, CoverageReport, CoverageRow, UNSAFE_KINDS};
pub use exposure::{propagate_exposure, ExposureEntry, ExposureMap};
pub use slice::{control_loop, LoopSlice};
pub use tradespace::{
    recovery_ratio, tradespace, tradespace_table, tradespace_with, Band, RecoveryRatio,
    TradespaceConfig, TradespaceRow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("`{name}` is a {actual}; expected {expected}")]
    WrongType {
        name: String,
        actual: String,
        expected: String,
    },
    #[error("`{relation}` graph contains a cycle through `{at}`")]
    Cycle { relation: String, at: EntityId },
    #[error("observed context lacks variable `{0}`")]
    MissingVariable(String),
    #[error("malformed condition on `{context}`: {message}")]
    MalformedCondition { context: String, message: String },
    #[error("expected recovery budget must be positive, got {0}")]
    NonPositiveBudget(f64),
    #[error("measured recovery time must be non-negative, got {0}")]
    NegativeMeasurement(f64),
}

/// An entity as reports name it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityRef {
    pub id: EntityId,
    pub name: String,
    pub entity_type: String,
}

impl EntityRef {
    pub fn of(e: &EntityRecord) -> Self {
        EntityRef {
            id: e.id().clone(),
            name: e.name().to_string(),
            entity_type: e.type_name().to_string(),
        }
    }
}

/// Resolve an id, or failing that a unique name among `types`.
pub fn resolve<'s>(
    store: &'s Store,
    key: &str,
    types: &[&str],
) -> Result<&'s EntityRecord, AnalysisError> {
    let rec = store.entity(&EntityId::from(key)).or_else(|| {
        types
            .iter()
            .find_map(|t| store.find(t, key))
            .and_then(|id| store.entity(id))
    });
    let rec = rec.ok_or_else(|| AnalysisError::UnknownEntity(key.to_string()))?;
    if !types.contains(&rec.type_name()) {
        return Err(AnalysisError::WrongType {
            name: rec.name().to_string(),
            actual: rec.type_name().to_string(),
            expected: types.join(" or "),
        });
    }
    Ok(rec)
}

/// Targets of a relation view in canonical order; relations the entity's
/// type does not declare yield nothing.
pub(crate) fn targets<'s>(
    store: &'s Store,
    id: &EntityId,
    relation: &str,
) -> Vec<&'s EntityRecord> {
    let mut v: Vec<_> = store
        .neighbors(id, relation)
        .unwrap_or_default()
        .iter()
        .filter_map(|t| store.entity(t))
        .collect();
    v.sort_by(|a, b| canonical_cmp(a, b));
    v
}

/// Entities reachable from `start` over `relation`, excluding `start`.
pub(crate) fn closure<'s>(
    store: &'s Store,
    start: &EntityId,
    relation: &str,
) -> Vec<&'s EntityRecord> {
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = vec![start.clone()];
    let mut out = Vec::new();
    while let Some(n) = queue.pop() {
        for t in targets(store, &n, relation) {
            if seen.insert(t.id().clone()) {
                queue.push(t.id().clone());
                out.push(t);
            }
        }
    }
    out.sort_by(|a, b| canonical_cmp(a, b));
    out
}

pub(crate) fn sorted_refs(mut v: Vec<&EntityRecord>) -> Vec<EntityRef> {
    v.sort_by(|a, b| canonical_cmp(a, b));
    v.dedup_by(|a, b| a.id() == b.id());
    v.into_iter().map(EntityRef::of).collect()
}

/// Render rows as a left-aligned, space-separated text table.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i + 1 == cells.len() {
                s.push_str(c);
            } else {
                s.push_str(c);
                s.push_str(&" ".repeat(widths[i] - c.chars().count() + 2));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&line(rule.iter().map(String::as_str).collect()));
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub(crate) fn names(refs: &[EntityRef]) -> String {
    refs.iter()
        .map(|r| r.name.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}
