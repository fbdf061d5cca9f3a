//! JSON documents and deltas.
//!
//! A [`ModelDocument`] is the query-result shape of a whole system model;
//! a [`ModelDelta`] is an ordered Create/Update/Delete list that turns one
//! variant into another.

mod delta;
mod document;

use std::collections::{BTreeMap, BTreeSet};

pub use delta::{
    apply_delta, diff, invert_delta, DeltaError, DeltaIdentity, DeltaOp, EdgeChange, EdgeRef,
    ModelDelta, OpError, Operation, RelationChanges,
};
pub use document::{
    export_model, import_model, EntityDoc, ExportError, IdentityDoc, ImportError, ModelDocument,
    TargetDoc,
};

use crate::store::Store;

/// Content equality up to adjacency order and id-allocation state.
pub fn isomorphic(a: &Store, b: &Store) -> bool {
    snapshot(a) == snapshot(b)
}

type Snapshot = (
    String,
    BTreeMap<String, String>,
    BTreeSet<(String, String, String, String)>,
);

fn snapshot(s: &Store) -> Snapshot {
    let entities = s
        .entities()
        .map(|e| {
            (
                e.id().0.clone(),
                format!(
                    "{}|{}|{}|{:?}|{:?}",
                    e.type_name(),
                    e.name(),
                    e.number(),
                    e.attributes(),
                    e.parameters()
                ),
            )
        })
        .collect();
    let edges = s
        .associations()
        .map(|r| {
            (
                r.source_id.0,
                r.relation_name,
                r.target_id.0,
                format!("{:?}", r.edge_attributes),
            )
        })
        .collect();
    (format!("{:?}", s.project()), entities, edges)
}
