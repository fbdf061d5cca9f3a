use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::store::{
    canonical_cmp, EntityId, EntityRecord, Parameter, RelationEdge, Store, StoreError,
};
use crate::value::Value;
use crate::FORMAT_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operation {
    Create,
    Update,
    Delete,
}

/// Ordered operations turning one model variant into another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelDelta {
    pub format_version: String,
    pub project_id: String,
    pub operations: Vec<DeltaOp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DeltaOp {
    pub operation: Operation,
    pub type_name: String,
    pub identity: DeltaIdentity,
    /// Attribute changes; null unsets.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, Json>,
    /// Replacement parameter list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<Vec<Parameter>>,
    #[serde(default, skip_serializing_if = "RelationChanges::is_empty")]
    pub relations: RelationChanges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaIdentity {
    pub id: EntityId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub number: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationChanges {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub add: Vec<EdgeChange>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub remove: Vec<EdgeRef>,
}

impl RelationChanges {
    pub fn is_empty(&self) -> bool {
        self.add.is_empty() && self.remove.is_empty()
    }
}

/// Add (or re-attribute) an edge from the op's subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeChange {
    pub relation: String,
    pub target: EntityId,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, Json>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRef {
    pub relation: String,
    pub target: EntityId,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error("{0}")]
    Store(#[from] StoreError),
    #[error("Create requires identity.{0}")]
    MissingIdentity(&'static str),
    #[error("Delete carries the id only")]
    DeleteWithPayload,
    #[error("Create cannot remove relations")]
    RemoveOnCreate,
    #[error("entity `{0}` does not exist")]
    UnknownId(EntityId),
    #[error("entity `{id}` is a {actual}, not a {declared}")]
    WrongType {
        id: EntityId,
        declared: String,
        actual: String,
    },
    #[error("entity `{id}` was already the subject of operation {first}")]
    RepeatedSubject { id: EntityId, first: usize },
    #[error("a {type_name} named `{name}` already exists")]
    NameConflict { type_name: String, name: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeltaError {
    #[error("unsupported formatVersion `{0}`")]
    FormatVersion(String),
    #[error("malformed delta: {0}")]
    Malformed(String),
    #[error("delta targets project `{delta}`, model is `{model}`")]
    ProjectMismatch { delta: String, model: String },
    #[error("operation {index} ({operation:?} {id}): {cause}")]
    Op {
        index: usize,
        operation: Operation,
        id: EntityId,
        cause: OpError,
    },
    #[error("models use different schemas")]
    SchemaMismatch,
}

impl ModelDelta {
    pub fn empty(project_id: &str) -> Self {
        ModelDelta {
            format_version: FORMAT_VERSION.to_string(),
            project_id: project_id.to_string(),
            operations: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.operations.is_empty()
    }

    pub fn to_json_string(&self) -> String {
        crate::canonical_json(self)
    }

    pub fn from_json_str(text: &str) -> Result<Self, DeltaError> {
        let d: ModelDelta =
            serde_json::from_str(text).map_err(|e| DeltaError::Malformed(e.to_string()))?;
        if d.format_version != FORMAT_VERSION {
            return Err(DeltaError::FormatVersion(d.format_version));
        }
        Ok(d)
    }

    /// Concatenate two deltas on the same project.
    pub fn then(mut self, other: ModelDelta) -> ModelDelta {
        self.operations.extend(other.operations);
        self
    }
}

fn json_values(m: &BTreeMap<String, Json>) -> impl Iterator<Item = (String, Value)> + '_ {
    m.iter().map(|(k, v)| (k.clone(), Value::from_json(v)))
}

/// Apply `delta` to a copy of `store`. Any failing op leaves `store`
/// untouched and reports the op index.
pub fn apply_delta(store: &Store, delta: &ModelDelta) -> Result<Store, DeltaError> {
    if delta.project_id != store.project().id {
        return Err(DeltaError::ProjectMismatch {
            delta: delta.project_id.clone(),
            model: store.project().id.clone(),
        });
    }
    let mut next = store.clone();
    next.defer_name_checks = true;
    let mut subjects: HashMap<EntityId, usize> = HashMap::new();
    for (index, op) in delta.operations.iter().enumerate() {
        let fail = |cause: OpError| DeltaError::Op {
            index,
            operation: op.operation,
            id: op.identity.id.clone(),
            cause,
        };
        if let Some(first) = subjects.insert(op.identity.id.clone(), index) {
            return Err(fail(OpError::RepeatedSubject {
                id: op.identity.id.clone(),
                first,
            }));
        }
        apply_op(&mut next, op).map_err(fail)?;
    }
    next.defer_name_checks = false;
    // Names are unique per type once the whole delta has run, so swaps work.
    if let Some((type_name, name, ids)) = next.name_conflicts().into_iter().next() {
        let (index, id) = ids
            .iter()
            .filter_map(|id| subjects.get(id).map(|i| (*i, id.clone())))
            .max()
            .unwrap_or((delta.operations.len().saturating_sub(1), ids[0].clone()));
        return Err(DeltaError::Op {
            index,
            operation: delta.operations[index].operation,
            id,
            cause: OpError::NameConflict { type_name, name },
        });
    }
    Ok(next)
}

fn apply_op(store: &mut Store, op: &DeltaOp) -> Result<(), OpError> {
    let id = &op.identity.id;
    if op.operation != Operation::Create {
        let rec = store
            .entity(id)
            .ok_or_else(|| OpError::UnknownId(id.clone()))?;
        if rec.type_name() != op.type_name {
            return Err(OpError::WrongType {
                id: id.clone(),
                declared: op.type_name.clone(),
                actual: rec.type_name().to_string(),
            });
        }
    }
    match op.operation {
        Operation::Create => {
            let name = op
                .identity
                .name
                .as_deref()
                .ok_or(OpError::MissingIdentity("name"))?;
            let number = op
                .identity
                .number
                .as_deref()
                .ok_or(OpError::MissingIdentity("number"))?;
            if !op.relations.remove.is_empty() {
                return Err(OpError::RemoveOnCreate);
            }
            store.create_entity_with_id(
                id.clone(),
                &op.type_name,
                name,
                number,
                json_values(&op.attributes),
            )?;
        }
        Operation::Update => {
            store.update_identity(
                id,
                op.identity.name.as_deref(),
                op.identity.number.as_deref(),
            )?;
            for (k, v) in json_values(&op.attributes) {
                store.set_attribute(id, &k, v)?;
            }
        }
        Operation::Delete => {
            if op.identity.name.is_some()
                || op.identity.number.is_some()
                || !op.attributes.is_empty()
                || op.parameters.is_some()
                || !op.relations.is_empty()
            {
                return Err(OpError::DeleteWithPayload);
            }
            store.delete_entity(id)?;
            return Ok(());
        }
    }
    if let Some(params) = &op.parameters {
        store.set_parameters(id, params.clone())?;
    }
    for r in &op.relations.remove {
        store.unrelate(id, &r.relation, &r.target)?;
    }
    for a in &op.relations.add {
        store.relate(id, &a.relation, &a.target, json_values(&a.attributes))?;
    }
    Ok(())
}

fn attrs_json(m: &BTreeMap<String, Value>) -> BTreeMap<String, Json> {
    m.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()
}

fn type_rank(store: &Store, type_name: &str) -> usize {
    store
        .schema()
        .collections
        .iter()
        .position(|c| c.entity_type == type_name)
        .unwrap_or(usize::MAX)
}

fn ordered<'a>(store: &'a Store, ids: impl Iterator<Item = &'a EntityId>) -> Vec<&'a EntityRecord> {
    let mut v: Vec<_> = ids.filter_map(|id| store.entity(id)).collect();
    v.sort_by(|a, b| {
        type_rank(store, a.type_name())
            .cmp(&type_rank(store, b.type_name()))
            .then_with(|| canonical_cmp(a, b))
    });
    v
}

fn blank_op(operation: Operation, rec: &EntityRecord) -> DeltaOp {
    DeltaOp {
        operation,
        type_name: rec.type_name().to_string(),
        identity: DeltaIdentity {
            id: rec.id().clone(),
            name: None,
            number: None,
        },
        attributes: BTreeMap::new(),
        parameters: None,
        relations: RelationChanges::default(),
    }
}

type EdgeKey = (EntityId, String, EntityId);

fn edge_map(s: &Store) -> BTreeMap<EdgeKey, BTreeMap<String, Value>> {
    s.associations()
        .map(|e: RelationEdge| {
            (
                (e.source_id, e.relation_name, e.target_id),
                e.edge_attributes,
            )
        })
        .collect()
}

/// The delta taking `a` to `b`: deletes, then creates, then updates.
pub fn diff(a: &Store, b: &Store) -> Result<ModelDelta, DeltaError> {
    if !Arc::ptr_eq(a.schema(), b.schema()) && a.schema() != b.schema() {
        return Err(DeltaError::SchemaMismatch);
    }
    let ids_a: BTreeSet<&EntityId> = a.entities().map(|e| e.id()).collect();
    let ids_b: BTreeSet<&EntityId> = b.entities().map(|e| e.id()).collect();
    // Type changes under one id are a delete plus a create.
    let retyped: BTreeSet<&EntityId> = ids_a
        .intersection(&ids_b)
        .copied()
        .filter(|id| a.entity(id).unwrap().type_name() != b.entity(id).unwrap().type_name())
        .collect();
    if !retyped.is_empty() {
        // A delta cannot touch one id twice; route through two steps is not
        // expressible, so report it as a schema-level mismatch of identity.
        let id = retyped.iter().next().unwrap();
        return Err(DeltaError::Op {
            index: 0,
            operation: Operation::Update,
            id: (*id).clone(),
            cause: OpError::WrongType {
                id: (*id).clone(),
                declared: b.entity(id).unwrap().type_name().to_string(),
                actual: a.entity(id).unwrap().type_name().to_string(),
            },
        });
    }

    let deleted = ordered(a, ids_a.difference(&ids_b).copied());
    let created = ordered(b, ids_b.difference(&ids_a).copied());
    let kept = ordered(b, ids_a.intersection(&ids_b).copied());

    let mut ops: Vec<DeltaOp> = Vec::new();
    for rec in &deleted {
        ops.push(blank_op(Operation::Delete, rec));
    }

    let mut slot: HashMap<EntityId, usize> = HashMap::new();
    for rec in &created {
        let mut op = blank_op(Operation::Create, rec);
        op.identity.name = Some(rec.name().to_string());
        op.identity.number = Some(rec.number().to_string());
        op.attributes = attrs_json(rec.attributes());
        if !rec.parameters().is_empty() {
            op.parameters = Some(rec.parameters().to_vec());
        }
        slot.insert(rec.id().clone(), ops.len());
        ops.push(op);
    }

    for rec in &kept {
        let old = a.entity(rec.id()).unwrap();
        let mut op = blank_op(Operation::Update, rec);
        if old.name() != rec.name() {
            op.identity.name = Some(rec.name().to_string());
        }
        if old.number() != rec.number() {
            op.identity.number = Some(rec.number().to_string());
        }
        for (k, v) in rec.attributes() {
            if old.attribute(k) != Some(v) {
                op.attributes.insert(k.clone(), v.to_json());
            }
        }
        for k in old.attributes().keys() {
            if rec.attribute(k).is_none() {
                op.attributes.insert(k.clone(), Json::Null);
            }
        }
        if old.parameters() != rec.parameters() {
            op.parameters = Some(rec.parameters().to_vec());
        }
        slot.insert(rec.id().clone(), ops.len());
        ops.push(op);
    }

    let edges_a = edge_map(a);
    let edges_b = edge_map(b);
    let schema = b.schema();
    let mut added: Vec<(&EdgeKey, &BTreeMap<String, Value>)> = edges_b
        .iter()
        .filter(|(k, v)| edges_a.get(*k) != Some(*v))
        .collect();
    added.sort_by(|x, y| {
        let key = |k: &EdgeKey| {
            (
                b.entity(&k.0)
                    .map(|e| (e.number().to_string(), e.name().to_string())),
                k.1.clone(),
                b.entity(&k.2)
                    .map(|e| (e.number().to_string(), e.name().to_string())),
            )
        };
        key(x.0).cmp(&key(y.0)).then_with(|| x.0.cmp(y.0))
    });
    for ((s, rel, t), attrs) in added {
        // Prefer a created endpoint (the later one if both are), so both
        // ends exist when the edge is added and kept entities stay untouched.
        let is_new = |id: &EntityId| !ids_a.contains(id);
        let (owner, relation, target) = if is_new(t) && (!is_new(s) || slot[t] > slot[s]) {
            (t, schema.inverse_of(rel).unwrap_or(rel).to_string(), s)
        } else {
            (s, rel.clone(), t)
        };
        ops[slot[owner]].relations.add.push(EdgeChange {
            relation,
            target: target.clone(),
            attributes: attrs_json(attrs),
        });
    }
    for (s, rel, t) in edges_a.keys() {
        if edges_b.contains_key(&(s.clone(), rel.clone(), t.clone())) {
            continue;
        }
        if let (Some(&i), true) = (
            slot.get(s),
            ids_b.contains(t) && ids_a.contains(s) && ids_a.contains(t),
        ) {
            ops[i].relations.remove.push(EdgeRef {
                relation: rel.clone(),
                target: t.clone(),
            });
        }
    }

    ops.retain(|op| {
        op.operation != Operation::Update
            || op.identity.name.is_some()
            || op.identity.number.is_some()
            || !op.attributes.is_empty()
            || op.parameters.is_some()
            || !op.relations.is_empty()
    });
    Ok(ModelDelta {
        format_version: FORMAT_VERSION.to_string(),
        project_id: a.project().id.clone(),
        operations: ops,
    })
}

/// A delta that undoes `delta` when applied after it.
pub fn invert_delta(delta: &ModelDelta, base: &Store) -> Result<ModelDelta, DeltaError> {
    let after = apply_delta(base, delta)?;
    diff(&after, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interchange::isomorphic;
    use crate::store::Project;

    fn base() -> (Store, EntityId, EntityId) {
        let mut s = Store::with_builtin(Project::new("p", "P"));
        let a = s
            .create_entity::<_, String>("Component", "Route", "1", [])
            .unwrap();
        let b = s
            .create_entity::<_, String>("Component", "Valve", "1.1", [])
            .unwrap();
        s.relate(&a, "builtFrom", &b, [("cardinality", Value::from("n"))])
            .unwrap();
        (s, a, b)
    }

    fn op(operation: Operation, type_name: &str, id: &str) -> DeltaOp {
        DeltaOp {
            operation,
            type_name: type_name.into(),
            identity: DeltaIdentity {
                id: EntityId::from(id),
                name: None,
                number: None,
            },
            attributes: BTreeMap::new(),
            parameters: None,
            relations: RelationChanges::default(),
        }
    }

    #[test]
    fn empty_delta_is_identity() {
        let (s, _, _) = base();
        let out = apply_delta(&s, &ModelDelta::empty("p")).unwrap();
        assert_eq!(out.fingerprint(), s.fingerprint());
        assert!(diff(&s, &s).unwrap().is_empty());
        assert!(invert_delta(&ModelDelta::empty("p"), &s)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn delete_then_update_fails_at_second_op() {
        let (s, a, _) = base();
        let mut d = ModelDelta::empty("p");
        d.operations.push(op(Operation::Delete, "Component", &a.0));
        let mut upd = op(Operation::Update, "Component", &a.0);
        upd.identity.name = Some("x".into());
        d.operations.push(upd);
        let before = s.fingerprint();
        match apply_delta(&s, &d) {
            Err(DeltaError::Op { index: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert_eq!(s.fingerprint(), before);
    }

    #[test]
    fn create_needs_full_identity() {
        let (s, _, _) = base();
        let mut d = ModelDelta::empty("p");
        let mut c = op(Operation::Create, "Component", "new");
        c.identity.name = Some("n".into());
        d.operations.push(c);
        assert!(matches!(
            apply_delta(&s, &d),
            Err(DeltaError::Op {
                cause: OpError::MissingIdentity("number"),
                ..
            })
        ));
    }

    #[test]
    fn names_can_swap_within_one_delta() {
        let (s, a, b) = base();
        let mut d = ModelDelta::empty("p");
        let mut x = op(Operation::Update, "Component", &a.0);
        x.identity.name = Some("Valve".into());
        let mut y = op(Operation::Update, "Component", &b.0);
        y.identity.name = Some("Route".into());
        d.operations.extend([x, y.clone()]);
        let out = apply_delta(&s, &d).unwrap();
        assert_eq!(out.find("Component", "Valve"), Some(&a));
        d.operations.pop();
        assert!(matches!(
            apply_delta(&s, &d),
            Err(DeltaError::Op {
                index: 0,
                cause: OpError::NameConflict { .. },
                ..
            })
        ));
    }

    #[test]
    fn diff_of_one_new_entity_is_one_create() {
        let (s, a, _) = base();
        let mut t = s.clone();
        let c = t
            .create_entity::<_, String>("Component", "Pump", "1.2", [])
            .unwrap();
        t.relate(&a, "builtFrom", &c, [("cardinality", Value::from("1"))])
            .unwrap();
        let d = diff(&s, &t).unwrap();
        assert_eq!(d.operations.len(), 1);
        let op = &d.operations[0];
        assert_eq!(op.operation, Operation::Create);
        assert_eq!(op.relations.add[0].relation, "builtIn");
        assert!(isomorphic(&apply_delta(&s, &d).unwrap(), &t));
        let inv = invert_delta(&d, &s).unwrap();
        assert_eq!(inv.operations.len(), 1);
        assert_eq!(inv.operations[0].operation, Operation::Delete);
        assert!(isomorphic(&apply_delta(&t, &inv).unwrap(), &s));
    }

    #[test]
    fn diff_covers_attribute_and_edge_changes() {
        let (s, a, b) = base();
        let mut t = s.clone();
        t.set_attribute(&a, "cost", Value::Float(2.5)).unwrap();
        t.relate(&a, "builtFrom", &b, [("cardinality", Value::from("1..2"))])
            .unwrap();
        t.update_identity(&b, None, Some("1.9")).unwrap();
        let d = diff(&s, &t).unwrap();
        assert!(isomorphic(&apply_delta(&s, &d).unwrap(), &t));
        let back = diff(&t, &s).unwrap();
        assert!(isomorphic(&apply_delta(&t, &back).unwrap(), &s));
        let text = d.to_json_string();
        assert_eq!(ModelDelta::from_json_str(&text).unwrap(), d);
    }

    #[test]
    fn project_mismatch_is_rejected() {
        let (s, _, _) = base();
        assert!(matches!(
            apply_delta(&s, &ModelDelta::empty("other")),
            Err(DeltaError::ProjectMismatch { .. })
        ));
    }
}
