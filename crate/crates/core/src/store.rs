//! Typed, bidirectional property graph holding one system model.
//!
//! Each association is stored once, in the primary direction of its relation
//! pair, and is visible from both endpoints: `(a, builtFrom, b)` and
//! `(b, builtIn, a)` are two views of the same record, so edge attributes are
//! shared.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::Diagnostic;
use crate::schema::{builtin_schema, validate_schema, MetamodelSchema, RelationDef};
use crate::value::{Value, ValueError};

/// Relations whose graph must stay acyclic.
pub const ACYCLIC_RELATIONS: &[&str] = &["builtFrom"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub name: Option<String>,
}

impl Project {
    pub fn new(id: &str, name: &str) -> Self {
        Project {
            id: id.to_string(),
            name: Some(name.to_string()),
        }
    }
}

/// A performance parameter: objective, threshold and design values share `units`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameter {
    pub name: String,
    #[serde(default)]
    pub objective: Option<f64>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub design: Option<f64>,
    #[serde(default)]
    pub units: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("schema is not usable: {}", .0.first().map(|d| d.to_string()).unwrap_or_default())]
    InvalidSchema(Vec<Diagnostic>),
    #[error("unknown entity type `{0}`")]
    UnknownType(String),
    #[error("a {type_name} named `{name}` already exists")]
    DuplicateName { type_name: String, name: String },
    #[error("entity id `{0}` already exists")]
    DuplicateId(EntityId),
    #[error("unknown entity id `{0}`")]
    UnknownEntity(EntityId),
    #[error("`{type_name}` has no attribute `{attribute}`")]
    UnknownAttribute {
        type_name: String,
        attribute: String,
    },
    #[error("attribute type mismatch: {0}")]
    TypeMismatch(#[from] ValueError),
    #[error("`{type_name}` does not accept parameters")]
    ParametersNotAllowed { type_name: String },
    #[error("unknown relation `{relation}`")]
    UnknownRelation { relation: String },
    #[error("relation `{relation}` is not declared on `{source_type}`")]
    IncompatibleSource {
        relation: String,
        source_type: String,
    },
    #[error("relation `{relation}` from `{source_type}` cannot target `{target_type}`")]
    IncompatibleTarget {
        relation: String,
        source_type: String,
        target_type: String,
    },
    #[error("`{relation}` has no edge attribute `{attribute}`")]
    UnknownEdgeAttribute { relation: String, attribute: String },
    #[error("edge {source_id} -{relation}-> {target_id} would create a cycle")]
    Cycle {
        relation: String,
        source_id: EntityId,
        target_id: EntityId,
    },
}

impl StoreError {
    /// True for errors caused by an endpoint type the relation does not allow.
    pub fn is_type_incompatible(&self) -> bool {
        matches!(
            self,
            StoreError::IncompatibleSource { .. } | StoreError::IncompatibleTarget { .. }
        )
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// One directed view of an association.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationEdge {
    pub relation_name: String,
    pub source_id: EntityId,
    pub target_id: EntityId,
    pub edge_attributes: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct EdgeId(u64);

#[derive(Debug, Clone, PartialEq)]
struct Edge {
    relation: String,
    source: EntityId,
    target: EntityId,
    attributes: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityRecord {
    id: EntityId,
    type_name: String,
    name: String,
    number: String,
    attributes: BTreeMap<String, Value>,
    parameters: Vec<Parameter>,
    /// View name to (edge, other endpoint), in insertion order.
    adjacency: BTreeMap<String, Vec<(EdgeId, EntityId)>>,
}

impl EntityRecord {
    pub fn id(&self) -> &EntityId {
        &self.id
    }

    pub fn type_name(&self) -> &str {
        &self.type_name
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn number(&self) -> &str {
        &self.number
    }

    /// Set attributes only; unset attributes are absent.
    pub fn attributes(&self) -> &BTreeMap<String, Value> {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&Value> {
        self.attributes.get(name)
    }

    pub fn parameters(&self) -> &[Parameter] {
        &self.parameters
    }

    /// Relation view names with at least one edge.
    pub fn used_relations(&self) -> impl Iterator<Item = &str> {
        self.adjacency
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, _)| k.as_str())
    }
}

/// Total order used for canonical output: outline number, then name, then id.
pub fn canonical_cmp(a: &EntityRecord, b: &EntityRecord) -> Ordering {
    compare_numbers(&a.number, &b.number)
        .then_with(|| a.name.cmp(&b.name))
        .then_with(|| a.id.cmp(&b.id))
}

/// Dotted outline numbers compare segment-wise, numerically where possible.
pub fn compare_numbers(a: &str, b: &str) -> Ordering {
    fn key(s: &str) -> Vec<(u8, u64, &str)> {
        s.split('.')
            .map(|seg| match seg.parse::<u64>() {
                Ok(n) => (0, n, seg),
                Err(_) => (1, 0, seg),
            })
            .collect()
    }
    key(a).cmp(&key(b)).then_with(|| a.cmp(b))
}

#[derive(Debug, Clone)]
pub struct Store {
    schema: Arc<MetamodelSchema>,
    project: Project,
    entities: BTreeMap<EntityId, EntityRecord>,
    by_name: HashMap<(String, String), Vec<EntityId>>,
    edges: BTreeMap<EdgeId, Edge>,
    edge_keys: HashMap<(EntityId, String, EntityId), EdgeId>,
    next_entity: u64,
    next_edge: u64,
    pub(crate) defer_name_checks: bool,
}

impl Store {
    pub fn new(schema: Arc<MetamodelSchema>, project: Project) -> Result<Self> {
        if !Arc::ptr_eq(&schema, &builtin_schema()) {
            let diags = validate_schema(&schema);
            if !diags.is_empty() {
                return Err(StoreError::InvalidSchema(diags));
            }
        }
        Ok(Store {
            schema,
            project,
            entities: BTreeMap::new(),
            by_name: HashMap::new(),
            edges: BTreeMap::new(),
            edge_keys: HashMap::new(),
            next_entity: 1,
            next_edge: 1,
            defer_name_checks: false,
        })
    }

    /// An empty store over the builtin schema.
    pub fn with_builtin(project: Project) -> Self {
        Store::new(builtin_schema(), project).expect("builtin schema is valid")
    }

    pub fn schema(&self) -> &Arc<MetamodelSchema> {
        &self.schema
    }

    pub fn project(&self) -> &Project {
        &self.project
    }

    pub fn set_project(&mut self, project: Project) {
        self.project = project;
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Number of associations (each counted once).
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn entity(&self, id: &EntityId) -> Option<&EntityRecord> {
        self.entities.get(id)
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.entities.contains_key(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityRecord> {
        self.entities.values()
    }

    /// Entities of one type in canonical order.
    pub fn entities_of_type(&self, type_name: &str) -> Vec<&EntityRecord> {
        let mut v: Vec<_> = self
            .entities
            .values()
            .filter(|e| e.type_name == type_name)
            .collect();
        v.sort_by(|a, b| canonical_cmp(a, b));
        v
    }

    pub fn find(&self, type_name: &str, name: &str) -> Option<&EntityId> {
        self.by_name
            .get(&(type_name.to_string(), name.to_string()))
            .and_then(|ids| ids.first())
    }

    fn get(&self, id: &EntityId) -> Result<&EntityRecord> {
        self.entities
            .get(id)
            .ok_or_else(|| StoreError::UnknownEntity(id.clone()))
    }

    fn fresh_id(&mut self, type_name: &str) -> EntityId {
        let mut prefix = type_name.to_string();
        if let Some(first) = prefix.get_mut(0..1) {
            first.make_ascii_lowercase();
        }
        loop {
            let id = EntityId(format!("{prefix}-{:04}", self.next_entity));
            self.next_entity += 1;
            if !self.entities.contains_key(&id) {
                return id;
            }
        }
    }

    fn check_attributes(
        &self,
        type_name: &str,
        attributes: impl IntoIterator<Item = (String, Value)>,
    ) -> Result<BTreeMap<String, Value>> {
        let et = self
            .schema
            .entity_type(type_name)
            .ok_or_else(|| StoreError::UnknownType(type_name.to_string()))?;
        let mut out = BTreeMap::new();
        for (key, value) in attributes {
            let def = et
                .attribute(&key)
                .ok_or_else(|| StoreError::UnknownAttribute {
                    type_name: type_name.to_string(),
                    attribute: key.clone(),
                })?;
            let path = format!("{type_name}.attributes.{key}");
            let v = self.schema.coerce_value(&def.ty, value, &path)?;
            if !v.is_null() {
                out.insert(key, v);
            }
        }
        Ok(out)
    }

    fn name_taken(&self, type_name: &str, name: &str, except: Option<&EntityId>) -> bool {
        self.by_name
            .get(&(type_name.to_string(), name.to_string()))
            .is_some_and(|ids| ids.iter().any(|i| Some(i) != except))
    }

    pub fn create_entity<I, K>(
        &mut self,
        type_name: &str,
        name: &str,
        number: &str,
        attributes: I,
    ) -> Result<EntityId>
    where
        I: IntoIterator<Item = (K, Value)>,
        K: Into<String>,
    {
        self.insert_entity(None, type_name, name, number, attributes)
    }

    /// Create with a caller-chosen id (import and delta application).
    pub fn create_entity_with_id<I, K>(
        &mut self,
        id: EntityId,
        type_name: &str,
        name: &str,
        number: &str,
        attributes: I,
    ) -> Result<EntityId>
    where
        I: IntoIterator<Item = (K, Value)>,
        K: Into<String>,
    {
        self.insert_entity(Some(id), type_name, name, number, attributes)
    }

    fn insert_entity<I, K>(
        &mut self,
        id: Option<EntityId>,
        type_name: &str,
        name: &str,
        number: &str,
        attributes: I,
    ) -> Result<EntityId>
    where
        I: IntoIterator<Item = (K, Value)>,
        K: Into<String>,
    {
        let attributes = self.check_attributes(
            type_name,
            attributes.into_iter().map(|(k, v)| (k.into(), v)),
        )?;
        if !self.defer_name_checks && self.name_taken(type_name, name, None) {
            return Err(StoreError::DuplicateName {
                type_name: type_name.to_string(),
                name: name.to_string(),
            });
        }
        let id = match id {
            Some(id) if self.entities.contains_key(&id) => return Err(StoreError::DuplicateId(id)),
            Some(id) => id,
            None => self.fresh_id(type_name),
        };
        self.by_name
            .entry((type_name.to_string(), name.to_string()))
            .or_default()
            .push(id.clone());
        self.entities.insert(
            id.clone(),
            EntityRecord {
                id: id.clone(),
                type_name: type_name.to_string(),
                name: name.to_string(),
                number: number.to_string(),
                attributes,
                parameters: Vec::new(),
                adjacency: BTreeMap::new(),
            },
        );
        Ok(id)
    }

    /// Change name and/or number.
    pub fn update_identity(
        &mut self,
        id: &EntityId,
        name: Option<&str>,
        number: Option<&str>,
    ) -> Result<()> {
        let rec = self.get(id)?;
        let type_name = rec.type_name.clone();
        let old_name = rec.name.clone();
        if let Some(name) = name {
            if name != old_name {
                if !self.defer_name_checks && self.name_taken(&type_name, name, Some(id)) {
                    return Err(StoreError::DuplicateName {
                        type_name,
                        name: name.to_string(),
                    });
                }
                let key = (type_name.clone(), old_name);
                if let Some(ids) = self.by_name.get_mut(&key) {
                    ids.retain(|i| i != id);
                    if ids.is_empty() {
                        self.by_name.remove(&key);
                    }
                }
                self.by_name
                    .entry((type_name, name.to_string()))
                    .or_default()
                    .push(id.clone());
            }
        }
        let rec = self.entities.get_mut(id).expect("checked above");
        if let Some(name) = name {
            rec.name = name.to_string();
        }
        if let Some(number) = number {
            rec.number = number.to_string();
        }
        Ok(())
    }

    /// Set one attribute; `Value::Null` unsets it.
    pub fn set_attribute(&mut self, id: &EntityId, key: &str, value: Value) -> Result<()> {
        let type_name = self.get(id)?.type_name.clone();
        let mut checked = self.check_attributes(&type_name, [(key.to_string(), value)])?;
        let rec = self.entities.get_mut(id).expect("checked above");
        match checked.remove(key) {
            Some(v) => rec.attributes.insert(key.to_string(), v),
            None => rec.attributes.remove(key),
        };
        Ok(())
    }

    pub fn set_parameters(&mut self, id: &EntityId, parameters: Vec<Parameter>) -> Result<()> {
        let type_name = self.get(id)?.type_name.clone();
        let allowed = self
            .schema
            .entity_type(&type_name)
            .is_some_and(|e| e.parameters_allowed);
        if !allowed && !parameters.is_empty() {
            return Err(StoreError::ParametersNotAllowed { type_name });
        }
        for p in &parameters {
            for x in [p.objective, p.threshold, p.design].into_iter().flatten() {
                if !x.is_finite() {
                    return Err(StoreError::TypeMismatch(ValueError {
                        path: format!("{type_name}.parameters.{}", p.name),
                        message: "non-finite float".into(),
                    }));
                }
            }
        }
        self.entities.get_mut(id).expect("checked above").parameters = parameters;
        Ok(())
    }

    /// Resolve the relation view declared on `source_type`, distinguishing
    /// names no type declares from names declared elsewhere.
    fn relation_on(&self, source_type: &str, relation: &str) -> Result<&RelationDef> {
        let et = self
            .schema
            .entity_type(source_type)
            .ok_or_else(|| StoreError::UnknownType(source_type.to_string()))?;
        et.relation(relation).ok_or_else(|| {
            if self.schema.relation_name_known(relation) {
                StoreError::IncompatibleSource {
                    relation: relation.to_string(),
                    source_type: source_type.to_string(),
                }
            } else {
                StoreError::UnknownRelation {
                    relation: relation.to_string(),
                }
            }
        })
    }

    /// Map a view `(a, relation, b)` to its stored `(source, primary, target)` form.
    fn normalize(
        &self,
        a: &EntityId,
        relation: &str,
        b: &EntityId,
    ) -> Result<(EntityId, String, EntityId, &RelationDef)> {
        let source_type = &self.get(a)?.type_name;
        let target_type = &self.get(b)?.type_name;
        let def = self.relation_on(source_type, relation)?;
        if !def.target_types.contains(target_type) {
            return Err(StoreError::IncompatibleTarget {
                relation: relation.to_string(),
                source_type: source_type.clone(),
                target_type: target_type.clone(),
            });
        }
        let inverse = def
            .inverse_name
            .clone()
            .unwrap_or_else(|| relation.to_string());
        Ok(if def.primary {
            if inverse == relation && b < a {
                (b.clone(), relation.to_string(), a.clone(), def)
            } else {
                (a.clone(), relation.to_string(), b.clone(), def)
            }
        } else {
            (b.clone(), inverse, a.clone(), def)
        })
    }

    /// Associate `source` with `target`. Re-relating the same triple replaces
    /// the edge attributes and never duplicates the edge.
    pub fn relate<I, K>(
        &mut self,
        source: &EntityId,
        relation: &str,
        target: &EntityId,
        edge_attributes: I,
    ) -> Result<RelationEdge>
    where
        I: IntoIterator<Item = (K, Value)>,
        K: Into<String>,
    {
        let (s, primary, t, def) = self.normalize(source, relation, target)?;
        let mut attrs = BTreeMap::new();
        for (k, v) in edge_attributes {
            let k: String = k.into();
            let f = def
                .edge_attributes
                .iter()
                .find(|f| f.name == k)
                .ok_or_else(|| StoreError::UnknownEdgeAttribute {
                    relation: relation.to_string(),
                    attribute: k.clone(),
                })?;
            let v = self
                .schema
                .coerce_value(&f.ty, v, &format!("{relation}.{k}"))?;
            if !v.is_null() {
                attrs.insert(k, v);
            }
        }
        let key = (s.clone(), primary.clone(), t.clone());
        if let Some(eid) = self.edge_keys.get(&key) {
            self.edges.get_mut(eid).expect("indexed edge").attributes = attrs;
        } else {
            if ACYCLIC_RELATIONS.contains(&primary.as_str()) && self.reaches(&t, &primary, &s) {
                return Err(StoreError::Cycle {
                    relation: primary,
                    source_id: s,
                    target_id: t,
                });
            }
            self.insert_edge(s, primary, t, attrs);
        }
        Ok(self
            .edge(source, relation, target)
            .expect("edge was just stored"))
    }

    fn insert_edge(
        &mut self,
        source: EntityId,
        relation: String,
        target: EntityId,
        attributes: BTreeMap<String, Value>,
    ) {
        let inverse = self
            .schema
            .inverse_of(&relation)
            .unwrap_or(&relation)
            .to_string();
        let eid = EdgeId(self.next_edge);
        self.next_edge += 1;
        self.edge_keys
            .insert((source.clone(), relation.clone(), target.clone()), eid);
        let self_view = inverse == relation && source == target;
        self.entities
            .get_mut(&source)
            .expect("endpoint exists")
            .adjacency
            .entry(relation.clone())
            .or_default()
            .push((eid, target.clone()));
        if !self_view {
            self.entities
                .get_mut(&target)
                .expect("endpoint exists")
                .adjacency
                .entry(inverse)
                .or_default()
                .push((eid, source.clone()));
        }
        self.edges.insert(
            eid,
            Edge {
                relation,
                source,
                target,
                attributes,
            },
        );
    }

    /// Whether `to` is reachable from `from` along stored `relation` edges (or equal).
    fn reaches(&self, from: &EntityId, relation: &str, to: &EntityId) -> bool {
        let mut stack = vec![from.clone()];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if &n == to {
                return true;
            }
            if !seen.insert(n.clone()) {
                continue;
            }
            if let Some(rec) = self.entities.get(&n) {
                if let Some(out) = rec.adjacency.get(relation) {
                    stack.extend(out.iter().map(|(_, o)| o.clone()));
                }
            }
        }
        false
    }

    /// Remove one association; returns whether it existed.
    pub fn unrelate(
        &mut self,
        source: &EntityId,
        relation: &str,
        target: &EntityId,
    ) -> Result<bool> {
        let (s, primary, t, _) = self.normalize(source, relation, target)?;
        match self.edge_keys.get(&(s, primary, t)).copied() {
            Some(eid) => {
                self.remove_edge(eid);
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn remove_edge(&mut self, eid: EdgeId) {
        let Some(edge) = self.edges.remove(&eid) else {
            return;
        };
        self.edge_keys.remove(&(
            edge.source.clone(),
            edge.relation.clone(),
            edge.target.clone(),
        ));
        for end in [&edge.source, &edge.target] {
            if let Some(rec) = self.entities.get_mut(end) {
                for list in rec.adjacency.values_mut() {
                    list.retain(|(e, _)| *e != eid);
                }
                rec.adjacency.retain(|_, l| !l.is_empty());
            }
        }
    }

    /// Delete an entity and every incident association; returns how many
    /// associations were removed. Related entities are kept.
    pub fn delete_entity(&mut self, id: &EntityId) -> Result<usize> {
        let rec = self.get(id)?;
        let incident: BTreeSet<EdgeId> = rec
            .adjacency
            .values()
            .flat_map(|l| l.iter().map(|(e, _)| *e))
            .collect();
        for eid in &incident {
            self.remove_edge(*eid);
        }
        let rec = self.entities.remove(id).expect("checked above");
        let key = (rec.type_name, rec.name);
        if let Some(ids) = self.by_name.get_mut(&key) {
            ids.retain(|i| i != id);
            if ids.is_empty() {
                self.by_name.remove(&key);
            }
        }
        Ok(incident.len())
    }

    fn view(
        &self,
        owner: &EntityId,
        relation: &str,
        eid: EdgeId,
        other: &EntityId,
    ) -> RelationEdge {
        RelationEdge {
            relation_name: relation.to_string(),
            source_id: owner.clone(),
            target_id: other.clone(),
            edge_attributes: self.edges[&eid].attributes.clone(),
        }
    }

    /// Targets of `relation` viewed from `id`, in insertion order.
    pub fn neighbors(&self, id: &EntityId, relation: &str) -> Result<Vec<EntityId>> {
        let rec = self.get(id)?;
        self.relation_on(&rec.type_name, relation)?;
        Ok(rec
            .adjacency
            .get(relation)
            .map(|l| l.iter().map(|(_, o)| o.clone()).collect())
            .unwrap_or_default())
    }

    /// Edges of `relation` viewed from `id`, in insertion order.
    pub fn edges_of(&self, id: &EntityId, relation: &str) -> Result<Vec<RelationEdge>> {
        let rec = self.get(id)?;
        self.relation_on(&rec.type_name, relation)?;
        Ok(rec
            .adjacency
            .get(relation)
            .map(|l| {
                l.iter()
                    .map(|(e, o)| self.view(id, relation, *e, o))
                    .collect()
            })
            .unwrap_or_default())
    }

    /// The view `(source, relation, target)` if the association exists.
    pub fn edge(
        &self,
        source: &EntityId,
        relation: &str,
        target: &EntityId,
    ) -> Option<RelationEdge> {
        let (s, primary, t, _) = self.normalize(source, relation, target).ok()?;
        let eid = self.edge_keys.get(&(s, primary, t))?;
        Some(self.view(source, relation, *eid, target))
    }

    /// Every association in its primary direction, ordered by storage.
    pub fn associations(&self) -> impl Iterator<Item = RelationEdge> + '_ {
        self.edges.values().map(|e| RelationEdge {
            relation_name: e.relation.clone(),
            source_id: e.source.clone(),
            target_id: e.target.clone(),
            edge_attributes: e.attributes.clone(),
        })
    }

    /// Number of associations incident to `id` (self-loops count once).
    pub fn incident_edge_count(&self, id: &EntityId) -> Result<usize> {
        let rec = self.get(id)?;
        Ok(rec
            .adjacency
            .values()
            .flat_map(|l| l.iter().map(|(e, _)| *e))
            .collect::<BTreeSet<_>>()
            .len())
    }

    /// Stable hash of the full store state, including adjacency order.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        format!("{:?}|{:?}|{:?}", self.project, self.entities, self.edges).hash(&mut h);
        h.finish()
    }

    /// `(type, name)` pairs held by more than one entity.
    pub(crate) fn name_conflicts(&self) -> Vec<(String, String, Vec<EntityId>)> {
        let mut v: Vec<_> = self
            .by_name
            .iter()
            .filter(|(_, ids)| ids.len() > 1)
            .map(|((t, n), ids)| (t.clone(), n.clone(), ids.clone()))
            .collect();
        v.sort();
        v
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        validate_model(self)
    }
}

fn entity_path(rec: &EntityRecord) -> String {
    format!("{}[{}]", rec.type_name, rec.name)
}

/// Check store invariants and the metamodel's structural rules.
pub fn validate_model(store: &Store) -> Vec<Diagnostic> {
    let schema = &store.schema;
    let mut out = Vec::new();
    let mut records: Vec<&EntityRecord> = store.entities.values().collect();
    records.sort_by(|a, b| a.type_name.cmp(&b.type_name).then(canonical_cmp(a, b)));

    for (t, n, ids) in store.name_conflicts() {
        out.push(Diagnostic::error(
            "duplicate-name",
            format!("{t}[{n}]"),
            format!("{} entities share this name: {}", ids.len(), join_ids(&ids)),
        ));
    }

    for rec in &records {
        let path = entity_path(rec);
        let Some(et) = schema.entity_type(&rec.type_name) else {
            out.push(Diagnostic::error(
                "unknown-type",
                &path,
                "entity type is not declared",
            ));
            continue;
        };
        for (k, v) in &rec.attributes {
            match et.attribute(k) {
                None => out.push(Diagnostic::error(
                    "unknown-attribute",
                    format!("{path}.attributes.{k}"),
                    format!("`{}` has no attribute `{k}`", rec.type_name),
                )),
                Some(f) => {
                    if let Err(e) =
                        schema.coerce_value(&f.ty, v.clone(), &format!("{path}.attributes.{k}"))
                    {
                        out.push(Diagnostic::error("type-mismatch", e.path, e.message));
                    }
                }
            }
        }
    }

    for e in store.edges.values() {
        let path = format!("{} -{}-> {}", e.source, e.relation, e.target);
        let (Some(s), Some(t)) = (store.entities.get(&e.source), store.entities.get(&e.target))
        else {
            out.push(Diagnostic::error(
                "dangling-edge",
                &path,
                "edge endpoint does not exist",
            ));
            continue;
        };
        match schema.lookup_relation(&s.type_name, &e.relation) {
            Err(_) => out.push(Diagnostic::error(
                "type-incompatible",
                &path,
                format!("`{}` does not declare `{}`", s.type_name, e.relation),
            )),
            Ok(def) if !def.target_types.contains(&t.type_name) => out.push(Diagnostic::error(
                "type-incompatible",
                &path,
                format!("`{}` cannot target `{}`", e.relation, t.type_name),
            )),
            Ok(_) => {}
        }
    }

    check_acyclic(store, &records, &mut out);

    for rec in &records {
        let path = entity_path(rec);
        let count = |rel: &str, ty: &str| {
            rec.adjacency
                .get(rel)
                .map(|l| {
                    l.iter()
                        .filter(|(_, o)| store.entities.get(o).is_some_and(|x| x.type_name == ty))
                        .count()
                })
                .unwrap_or(0)
        };
        match rec.type_name.as_str() {
            "Function" if count("performedBy", "Component") == 0 => out.push(Diagnostic::warning(
                "unperformed-function",
                &path,
                "function is not performed by any component",
            )),
            "UnsafeAction" => {
                let variations = count("isVariationOf", "ControlAction");
                if variations != 1 {
                    out.push(Diagnostic::error(
                        "unsafe-action-variation",
                        &path,
                        format!("unsafe action must be a variation of exactly one control action, found {variations}"),
                    ));
                }
                if count("hasProcessModel", "Context") == 0 {
                    out.push(Diagnostic::error(
                        "unsafe-action-context",
                        &path,
                        "unsafe action has no process-model context",
                    ));
                }
            }
            _ => {}
        }
    }
    out
}

fn join_ids(ids: &[EntityId]) -> String {
    ids.iter()
        .map(|i| i.0.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

fn check_acyclic(store: &Store, records: &[&EntityRecord], out: &mut Vec<Diagnostic>) {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    for relation in ACYCLIC_RELATIONS {
        let mut marks: HashMap<&EntityId, Mark> = HashMap::new();
        for root in records {
            if marks.contains_key(&root.id) {
                continue;
            }
            // Iterative DFS; each back edge is one cycle.
            let mut stack: Vec<(&EntityId, usize)> = vec![(&root.id, 0)];
            marks.insert(&root.id, Mark::Open);
            while let Some((node, i)) = stack.pop() {
                let succ = store.entities[node]
                    .adjacency
                    .get(*relation)
                    .map(|l| l.as_slice())
                    .unwrap_or(&[]);
                if let Some((_, next)) = succ.get(i) {
                    stack.push((node, i + 1));
                    match marks.get(next) {
                        Some(Mark::Open) => out.push(Diagnostic::error(
                            "cycle",
                            format!("{node} -{relation}-> {next}"),
                            format!("`{relation}` graph contains a cycle through `{next}`"),
                        )),
                        Some(Mark::Done) => {}
                        None => {
                            marks.insert(next, Mark::Open);
                            stack.push((next, 0));
                        }
                    }
                } else {
                    marks.insert(node, Mark::Done);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> Store {
        Store::with_builtin(Project::new("p1", "Test"))
    }

    fn component(s: &mut Store, name: &str) -> EntityId {
        s.create_entity::<_, String>("Component", name, "1", [])
            .unwrap()
    }

    #[test]
    fn create_validates_type_and_attributes() {
        let mut s = store();
        let id = s
            .create_entity(
                "Component",
                "Segment Controller",
                "3.4",
                [("type", Value::from("Hardware"))],
            )
            .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(
            s.entity(&id).unwrap().attribute("type"),
            Some(&Value::from("Hardware"))
        );

        assert!(matches!(
            s.create_entity::<_, String>("Component", "Segment Controller", "9", []),
            Err(StoreError::DuplicateName { .. })
        ));
        assert!(matches!(
            s.create_entity::<_, String>("Starship", "x", "1", []),
            Err(StoreError::UnknownType(_))
        ));
        assert!(matches!(
            s.create_entity("Component", "a", "1", [("wings", Value::from(2i64))]),
            Err(StoreError::UnknownAttribute { .. })
        ));
        assert!(matches!(
            s.create_entity("Component", "b", "1", [("cost", Value::from("cheap"))]),
            Err(StoreError::TypeMismatch(_))
        ));
        assert!(matches!(
            s.create_entity("Component", "c", "1", [("type", Value::from("Spaceship"))]),
            Err(StoreError::TypeMismatch(_))
        ));
        // same name under another type is fine
        s.create_entity::<_, String>("Function", "Segment Controller", "1", [])
            .unwrap();
    }

    #[test]
    fn relate_is_bidirectional_and_idempotent() {
        let mut s = store();
        let route = component(&mut s, "Pipeline Route");
        let mgr = component(&mut s, "Route Manager");
        s.relate(
            &route,
            "builtFrom",
            &mgr,
            [("cardinality", Value::from("1..2"))],
        )
        .unwrap();
        s.relate(
            &route,
            "builtFrom",
            &mgr,
            [("cardinality", Value::from("1..2"))],
        )
        .unwrap();
        assert_eq!(s.edge_count(), 1);
        assert_eq!(s.neighbors(&mgr, "builtIn").unwrap(), vec![route.clone()]);
        let back = s.edge(&mgr, "builtIn", &route).unwrap();
        assert_eq!(back.edge_attributes["cardinality"], Value::from("1..2"));
        // relating through the inverse view is the same association
        s.relate::<_, String>(&mgr, "builtIn", &route, []).unwrap();
        assert_eq!(s.edge_count(), 1);
        assert!(s
            .edge(&route, "builtFrom", &mgr)
            .unwrap()
            .edge_attributes
            .is_empty());
    }

    #[test]
    fn relate_rejects_incompatible_endpoints() {
        let mut s = store();
        let c = component(&mut s, "c");
        let loss = s.create_entity::<_, String>("Loss", "l", "1", []).unwrap();
        let err = s.relate::<_, String>(&c, "leadsTo", &loss, []).unwrap_err();
        assert!(err.is_type_incompatible(), "{err}");
        let err = s
            .relate::<_, String>(&c, "performs", &loss, [])
            .unwrap_err();
        assert!(err.is_type_incompatible(), "{err}");
        assert!(matches!(
            s.relate::<_, String>(&c, "flies", &loss, []),
            Err(StoreError::UnknownRelation { .. })
        ));
        assert!(matches!(
            s.relate::<_, String>(&c, "performs", &EntityId::from("nope"), []),
            Err(StoreError::UnknownEntity(_))
        ));
    }

    #[test]
    fn built_from_cycles_are_rejected() {
        let mut s = store();
        let a = component(&mut s, "a");
        let b = component(&mut s, "b");
        s.relate::<_, String>(&a, "builtFrom", &b, []).unwrap();
        assert!(matches!(
            s.relate::<_, String>(&b, "builtFrom", &a, []),
            Err(StoreError::Cycle { .. })
        ));
        assert!(matches!(
            s.relate::<_, String>(&a, "builtIn", &b, []),
            Err(StoreError::Cycle { .. })
        ));
        assert!(matches!(
            s.relate::<_, String>(&a, "builtFrom", &a, []),
            Err(StoreError::Cycle { .. })
        ));
    }

    #[test]
    fn cycle_is_one_diagnostic() {
        let mut s = store();
        let a = component(&mut s, "a");
        let b = component(&mut s, "b");
        s.relate::<_, String>(&a, "builtFrom", &b, []).unwrap();
        s.insert_edge(b.clone(), "builtFrom".into(), a.clone(), BTreeMap::new());
        let diags: Vec<_> = validate_model(&s)
            .into_iter()
            .filter(|d| d.code == "cycle")
            .collect();
        assert_eq!(diags.len(), 1, "{diags:?}");
    }

    #[test]
    fn unsafe_action_without_variation_is_reported() {
        let mut s = store();
        let ua = s
            .create_entity::<_, String>("UnsafeAction", "Decrease Route Flow", "1", [])
            .unwrap();
        let ctx = s
            .create_entity::<_, String>("Context", "Route State", "1", [])
            .unwrap();
        s.relate::<_, String>(&ua, "hasProcessModel", &ctx, [])
            .unwrap();
        let diags = validate_model(&s);
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert_eq!(diags[0].code, "unsafe-action-variation");
    }

    #[test]
    fn unperformed_function_is_a_warning() {
        let mut s = store();
        s.create_entity::<_, String>("Function", "f", "1", [])
            .unwrap();
        let diags = validate_model(&s);
        assert_eq!(diags.len(), 1);
        assert!(!diags[0].is_error());
    }

    #[test]
    fn delete_cascades_to_edges_only() {
        let mut s = store();
        let a = component(&mut s, "a");
        let b = component(&mut s, "b");
        let f = s
            .create_entity::<_, String>("Function", "f", "1", [])
            .unwrap();
        s.relate::<_, String>(&a, "builtFrom", &b, []).unwrap();
        s.relate::<_, String>(&a, "performs", &f, []).unwrap();
        let isolated = component(&mut s, "iso");
        assert_eq!(s.delete_entity(&isolated).unwrap(), 0);
        assert_eq!(s.delete_entity(&a).unwrap(), 2);
        assert!(s.contains(&b) && s.contains(&f));
        assert!(s.neighbors(&b, "builtIn").unwrap().is_empty());
        assert_eq!(s.edge_count(), 0);
        assert!(matches!(
            s.delete_entity(&a),
            Err(StoreError::UnknownEntity(_))
        ));
        // the name is free again
        component(&mut s, "a");
    }

    #[test]
    fn neighbors_on_fresh_entity_and_unknown_relation() {
        let mut s = store();
        let a = component(&mut s, "a");
        assert!(s.neighbors(&a, "builtFrom").unwrap().is_empty());
        assert!(s.neighbors(&a, "leadsTo").is_err());
        assert!(s.neighbors(&EntityId::from("x"), "builtFrom").is_err());
    }

    #[test]
    fn parameters_are_checked() {
        let mut s = store();
        let a = component(&mut s, "a");
        let p = Parameter {
            name: "flow".into(),
            objective: Some(100.0),
            threshold: Some(80.0),
            design: Some(95.0),
            units: Some("m3/h".into()),
        };
        s.set_parameters(&a, vec![p.clone()]).unwrap();
        assert_eq!(s.entity(&a).unwrap().parameters(), &[p]);
        let bad = Parameter {
            name: "x".into(),
            objective: Some(f64::NAN),
            threshold: None,
            design: None,
            units: None,
        };
        assert!(s.set_parameters(&a, vec![bad]).is_err());
    }

    #[test]
    fn outline_numbers_sort_numerically() {
        assert_eq!(compare_numbers("1.10", "1.9"), Ordering::Greater);
        assert_eq!(compare_numbers("1.2", "1.2.1"), Ordering::Less);
        assert_eq!(compare_numbers("A.1", "2"), Ordering::Greater);
    }
}
