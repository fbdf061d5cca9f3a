//! Random model mutation and brute-force oracles shared by the property
//! suite and the acceptance runner.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use cpsmeta::store::{Parameter, Project};
use cpsmeta::{EntityId, Store, Value};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::Value as Json;

/// Types the random mutator touches; enough to hit every analysis.
pub const MUTATED_TYPES: &[&str] = &[
    "Component",
    "Function",
    "Link",
    "ControlAction",
    "Feedback",
    "UnsafeAction",
    "Hazard",
    "Loss",
    "LossScenario",
    "AttackVector",
    "ResilientMode",
    "Requirement",
];

fn random_entity<'s>(
    store: &'s Store,
    rng: &mut impl Rng,
) -> Option<&'s cpsmeta::store::EntityRecord> {
    let all: Vec<_> = store.entities().collect();
    all.choose(rng).copied()
}

/// One random mutation; failures (duplicate names, cycles, ...) are no-ops.
pub fn mutate_once(store: &mut Store, rng: &mut impl Rng, serial: &mut u32) {
    let schema = store.schema().clone();
    match rng.gen_range(0..10) {
        0 | 1 => {
            let ty = MUTATED_TYPES.choose(rng).unwrap();
            *serial += 1;
            let name = format!("Gen {ty} {serial}");
            let number = format!("9.{}", rng.gen_range(1..50));
            let _ = store.create_entity(
                ty,
                &name,
                &number,
                [("description", Value::from("generated"))],
            );
        }
        2 => {
            if let Some(e) = random_entity(store, rng) {
                let id = e.id().clone();
                let v = if rng.gen_bool(0.3) {
                    Value::Null
                } else {
                    Value::from(format!("text {}", rng.gen_range(0..1000)))
                };
                let _ = store.set_attribute(&id, "description", v);
            }
        }
        3 => {
            if let Some(e) = random_entity(store, rng) {
                let id = e.id().clone();
                *serial += 1;
                let name = format!("{} r{serial}", e.name());
                let number = e.number().to_string();
                let _ = store.update_identity(&id, Some(&name), Some(&number));
            }
        }
        4 => {
            if let Some(e) = random_entity(store, rng) {
                let id = e.id().clone();
                let _ = store.delete_entity(&id);
            }
        }
        5 => {
            let edges: Vec<_> = store.associations().collect();
            if let Some(e) = edges.choose(rng) {
                store
                    .unrelate(&e.source_id, &e.relation_name, &e.target_id)
                    .unwrap();
            }
        }
        6 => {
            if let Some(e) = random_entity(store, rng) {
                let id = e.id().clone();
                if schema
                    .entity_type(e.type_name())
                    .unwrap()
                    .parameters_allowed
                {
                    let p = Parameter {
                        name: format!("P{}", rng.gen_range(0..5)),
                        objective: Some(rng.gen_range(0..100) as f64),
                        threshold: None,
                        design: Some(1.5),
                        units: Some("s".into()),
                    };
                    store.set_parameters(&id, vec![p]).unwrap();
                }
            }
        }
        _ => {
            // relate along a random declared relation
            let Some(src) = random_entity(store, rng) else {
                return;
            };
            let et = schema.entity_type(src.type_name()).unwrap();
            let Some(rel) = et.relations.choose(rng) else {
                return;
            };
            let candidates: Vec<EntityId> = store
                .entities()
                .filter(|t| rel.target_types.contains(t.type_name()))
                .map(|t| t.id().clone())
                .collect();
            let Some(tgt) = candidates.choose(rng) else {
                return;
            };
            let src = src.id().clone();
            let attrs: Vec<(String, Value)> = rel
                .edge_attributes
                .iter()
                .filter(|f| f.ty.base_name() == "String" && rng.gen_bool(0.5))
                .map(|f| (f.name.clone(), Value::from("x")))
                .collect();
            let _ = store.relate(&src, &rel.name, tgt, attrs);
        }
    }
}

pub fn mutate(store: &Store, rng: &mut impl Rng, steps: usize) -> Store {
    let mut s = store.clone();
    let mut serial = rng.gen_range(0..1_000_000);
    for _ in 0..steps {
        mutate_once(&mut s, rng, &mut serial);
    }
    s
}

/// Every stored association's endpoints exist and each endpoint lists the
/// other under the matching view.
pub fn check_integrity(store: &Store) -> Result<(), String> {
    let schema = store.schema();
    for e in store.associations() {
        for end in [&e.source_id, &e.target_id] {
            if !store.contains(end) {
                return Err(format!("dangling endpoint {end} on {}", e.relation_name));
            }
        }
        let fwd = store
            .neighbors(&e.source_id, &e.relation_name)
            .map_err(|x| x.to_string())?;
        if !fwd.contains(&e.target_id) {
            return Err(format!("forward view missing {e:?}"));
        }
        let inv = schema
            .inverse_of(&e.relation_name)
            .ok_or("relation without inverse")?;
        let back = store
            .neighbors(&e.target_id, inv)
            .map_err(|x| x.to_string())?;
        if !back.contains(&e.source_id) {
            return Err(format!("inverse view missing {e:?}"));
        }
    }
    // and every view entry is backed by an association
    let mut views = 0;
    for ent in store.entities() {
        let et = schema.entity_type(ent.type_name()).unwrap();
        for r in &et.relations {
            for t in store.neighbors(ent.id(), &r.name).unwrap() {
                views += 1;
                if !store.contains(&t) {
                    return Err(format!("view {} of {} dangles", r.name, ent.id()));
                }
            }
        }
    }
    if views != 2 * store.edge_count() {
        return Err(format!("{views} views for {} edges", store.edge_count()));
    }
    Ok(())
}

/// Kahn's algorithm over the stored builtFrom edges.
pub fn built_from_acyclic(store: &Store) -> bool {
    let edges: Vec<_> = store
        .associations()
        .filter(|e| e.relation_name == "builtFrom")
        .collect();
    let mut indeg: BTreeMap<&EntityId, usize> = BTreeMap::new();
    for e in &edges {
        indeg.entry(&e.source_id).or_default();
        *indeg.entry(&e.target_id).or_default() += 1;
    }
    let mut queue: VecDeque<&EntityId> = indeg
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(k, _)| *k)
        .collect();
    let mut seen = 0;
    while let Some(n) = queue.pop_front() {
        seen += 1;
        for e in edges.iter().filter(|e| &e.source_id == n) {
            let d = indeg.get_mut(&e.target_id).unwrap();
            *d -= 1;
            if *d == 0 {
                queue.push_back(&e.target_id);
            }
        }
    }
    seen == indeg.len()
}

/// Raw adjacency from the stored associations in both directions, keyed by
/// view name, without going through the store's own neighbor lists.
pub fn raw_views(store: &Store) -> BTreeMap<(EntityId, String), BTreeSet<EntityId>> {
    let schema = store.schema();
    let mut m: BTreeMap<(EntityId, String), BTreeSet<EntityId>> = BTreeMap::new();
    for e in store.associations() {
        m.entry((e.source_id.clone(), e.relation_name.clone()))
            .or_default()
            .insert(e.target_id.clone());
        let inv = schema.inverse_of(&e.relation_name).unwrap().to_string();
        m.entry((e.target_id.clone(), inv))
            .or_default()
            .insert(e.source_id.clone());
    }
    m
}

fn out<'a>(
    views: &'a BTreeMap<(EntityId, String), BTreeSet<EntityId>>,
    id: &EntityId,
    rel: &str,
) -> impl Iterator<Item = &'a EntityId> {
    views
        .get(&(id.clone(), rel.to_string()))
        .into_iter()
        .flatten()
}

/// Brute-force exposure: union of in-scope violations over every builtFrom
/// descendant (including the node), by plain BFS per node.
pub fn exposure_oracle(store: &Store) -> BTreeMap<EntityId, BTreeSet<EntityId>> {
    let views = raw_views(store);
    let flag = |id: &EntityId, attr: &str| {
        store
            .entity(id)
            .and_then(|e| e.attribute(attr))
            .and_then(|v| v.as_bool())
            == Some(true)
    };
    let direct = |n: &EntityId| -> BTreeSet<EntityId> {
        if flag(n, "outOfScopeAttackAnalysis") {
            return BTreeSet::new();
        }
        out(&views, n, "isViolatedBy")
            .filter(|av| !flag(av, "outOfScope"))
            .cloned()
            .collect()
    };
    store
        .entities()
        .filter(|e| matches!(e.type_name(), "Component" | "Link"))
        .map(|e| {
            let mut seen = BTreeSet::from([e.id().clone()]);
            let mut queue = VecDeque::from([e.id().clone()]);
            let mut acc = BTreeSet::new();
            while let Some(n) = queue.pop_front() {
                acc.extend(direct(&n));
                for c in out(&views, &n, "builtFrom") {
                    if seen.insert(c.clone()) {
                        queue.push_back(c.clone());
                    }
                }
            }
            (e.id().clone(), acc)
        })
        .collect()
}

/// Independent loop-slice computation: BFS over the bipartite graph of loop
/// items and functions using raw associations. Returns component and link ids.
pub fn loop_oracle(
    store: &Store,
    control_action: &EntityId,
) -> (BTreeSet<EntityId>, BTreeSet<EntityId>) {
    let views = raw_views(store);
    let is_item = |id: &EntityId| {
        matches!(
            store.entity(id).map(|e| e.type_name()),
            Some("ControlAction" | "Feedback" | "Context")
        )
    };
    let mut items = BTreeSet::from([control_action.clone()]);
    let mut functions = BTreeSet::new();
    let mut queue = VecDeque::from([control_action.clone()]);
    while let Some(i) = queue.pop_front() {
        for f in out(&views, &i, "isOutputOf").chain(out(&views, &i, "triggers")) {
            if functions.insert(f.clone()) {
                for j in out(&views, f, "outputs").chain(out(&views, f, "isTriggeredBy")) {
                    if is_item(j) && items.insert(j.clone()) {
                        queue.push_back(j.clone());
                    }
                }
            }
        }
    }
    let components = functions
        .iter()
        .flat_map(|f| out(&views, f, "performedBy"))
        .cloned()
        .collect();
    let links = items
        .iter()
        .flat_map(|i| out(&views, i, "transferredBy"))
        .cloned()
        .collect();
    (components, links)
}

/// Covered (control action, kind) pairs counted straight from the edges.
pub fn coverage_oracle(store: &Store) -> usize {
    let mut cells = BTreeSet::new();
    for e in store.associations() {
        let (ua, ca) = match e.relation_name.as_str() {
            "isVariationOf" => (&e.source_id, &e.target_id),
            "hasVariation" => (&e.target_id, &e.source_id),
            _ => continue,
        };
        let kind = store
            .entity(ua)
            .and_then(|u| u.attribute("unsafeKind"))
            .and_then(|k| k.as_str());
        if let Some(k) = kind {
            cells.insert((ca.clone(), k.to_string()));
        }
    }
    cells.len()
}

/// A random selection tree over `template` (a full-selection result shape):
/// `None` marks a leaf.
#[derive(Debug, Clone)]
pub struct Sel(pub Option<BTreeMap<String, Sel>>);

impl Sel {
    pub fn render(&self) -> String {
        match &self.0 {
            None => String::new(),
            Some(m) => {
                let inner: Vec<String> = m
                    .iter()
                    .map(|(k, v)| match &v.0 {
                        None => k.clone(),
                        Some(_) => format!("{k} {}", v.render()),
                    })
                    .collect();
                format!("{{ {} }}", inner.join(" "))
            }
        }
    }

    /// Restrict `value` to this selection.
    pub fn project(&self, value: &Json) -> Json {
        match (&self.0, value) {
            (None, v) => v.clone(),
            (Some(_), Json::Array(xs)) => Json::Array(xs.iter().map(|x| self.project(x)).collect()),
            (Some(m), Json::Object(o)) => Json::Object(
                m.iter()
                    .map(|(k, s)| (k.clone(), s.project(o.get(k).unwrap_or(&Json::Null))))
                    .collect(),
            ),
            (Some(_), v) => v.clone(),
        }
    }

    /// Output keys equal selected keys exactly, at every level.
    pub fn keys_match(&self, value: &Json) -> bool {
        match (&self.0, value) {
            (None, _) => true,
            (Some(_), Json::Null) => true,
            (Some(_), Json::Array(xs)) => xs.iter().all(|x| self.keys_match(x)),
            (Some(m), Json::Object(o)) => {
                o.len() == m.len()
                    && m.iter()
                        .all(|(k, s)| o.get(k).is_some_and(|v| s.keys_match(v)))
            }
            _ => false,
        }
    }
}

/// A random non-empty sub-selection of a field-shape tree.
pub fn random_sel(shape: &Sel, rng: &mut impl Rng) -> Sel {
    match &shape.0 {
        None => Sel(None),
        Some(m) => {
            let keys: Vec<&String> = m.keys().collect();
            let n = rng.gen_range(1..=keys.len());
            let picked: Vec<&&String> = keys.choose_multiple(rng, n).collect();
            Sel(Some(
                picked
                    .into_iter()
                    .map(|k| ((*k).clone(), random_sel(&m[*k], rng)))
                    .collect(),
            ))
        }
    }
}

/// The field-shape tree of a full-selection query's collection part.
pub fn model_shape(schema: &cpsmeta::MetamodelSchema) -> Sel {
    let leaf = || Sel(None);
    let obj = |fields: &[&str]| {
        Sel(Some(
            fields.iter().map(|f| (f.to_string(), Sel(None))).collect(),
        ))
    };
    let mut cols = BTreeMap::new();
    for c in &schema.collections {
        let et = schema.entity_type(&c.entity_type).unwrap();
        let mut m = BTreeMap::new();
        m.insert("identity".to_string(), obj(&["id", "name", "number"]));
        if !et.attributes.is_empty() {
            let attrs: BTreeMap<String, Sel> = et
                .attributes
                .iter()
                .map(|f| {
                    let base = f.ty.base_name();
                    let sub = match schema.object_types.get(base) {
                        Some(o) => Sel(Some(
                            o.fields.iter().map(|x| (x.name.clone(), leaf())).collect(),
                        )),
                        None => leaf(),
                    };
                    (f.name.clone(), sub)
                })
                .collect();
            m.insert("attributes".to_string(), Sel(Some(attrs)));
        }
        if et.parameters_allowed {
            m.insert(
                "parameters".to_string(),
                obj(&["name", "objective", "threshold", "design", "units"]),
            );
        }
        let rels: BTreeMap<String, Sel> = et
            .relations
            .iter()
            .filter(|r| r.primary)
            .map(|r| {
                let mut f = vec!["id", "name", "number", "entityType"];
                f.extend(r.edge_attributes.iter().map(|a| a.name.as_str()));
                (r.name.clone(), obj(&f))
            })
            .collect();
        if !rels.is_empty() {
            m.insert("relations".to_string(), Sel(Some(rels)));
        }
        cols.insert(c.field.clone(), Sel(Some(m)));
    }
    Sel(Some(cols))
}

pub fn model_query(project_id: &str, sel: &Sel) -> String {
    format!(
        "{{ cpsSystemModel(projectId: {}) {} }}",
        serde_json::to_string(project_id).unwrap(),
        sel.render()
    )
}

/// Up to 200 components and links under random builtFrom DAG edges, with
/// random (partly out-of-scope) violations.
pub fn random_hierarchy(rng: &mut impl Rng) -> Store {
    let mut s = Store::with_builtin(Project::new("h", "H"));
    let n = rng.gen_range(1..=200);
    let nodes: Vec<EntityId> = (0..n)
        .map(|i| {
            let ty = if rng.gen_bool(0.85) {
                "Component"
            } else {
                "Link"
            };
            let mut attrs = Vec::new();
            if ty == "Component" && rng.gen_bool(0.05) {
                attrs.push(("outOfScopeAttackAnalysis", Value::Bool(true)));
            }
            s.create_entity(ty, &format!("N{i}"), &i.to_string(), attrs)
                .unwrap()
        })
        .collect();
    for i in 1..n {
        if s.entity(&nodes[i]).unwrap().type_name() != "Component" {
            continue;
        }
        // one or two parents among earlier components keeps it a DAG
        for _ in 0..rng.gen_range(1..=2) {
            let p = &nodes[rng.gen_range(0..i)];
            if s.entity(p).unwrap().type_name() == "Component" {
                s.relate::<_, String>(p, "builtFrom", &nodes[i], [])
                    .unwrap();
            }
        }
    }
    let avs: Vec<EntityId> = (0..rng.gen_range(0..=10))
        .map(|i| {
            let attrs = [("outOfScope", Value::Bool(rng.gen_bool(0.15)))];
            s.create_entity("AttackVector", &format!("A{i}"), &i.to_string(), attrs)
                .unwrap()
        })
        .collect();
    if !avs.is_empty() {
        for _ in 0..rng.gen_range(0..n) {
            let node = &nodes[rng.gen_range(0..n)];
            let av = &avs[rng.gen_range(0..avs.len())];
            s.relate::<_, String>(node, "isViolatedBy", av, []).unwrap();
        }
    }
    s
}
