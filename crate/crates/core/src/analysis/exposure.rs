use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::{closure, names, render_table, targets, AnalysisError, EntityRef, LossRef};
use crate::store::{canonical_cmp, EntityId, EntityRecord, Store};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExposureEntry {
    pub node: EntityRef,
    pub direct: Vec<EntityRef>,
    pub transitive: Vec<EntityRef>,
    pub losses: Vec<LossRef>,
}

/// Attack exposure per component and link, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExposureMap {
    pub entries: Vec<ExposureEntry>,
}

impl ExposureMap {
    pub fn entry(&self, name: &str) -> Option<&ExposureEntry> {
        self.entries.iter().find(|e| e.node.name == name)
    }

    /// Transitive attack-vector ids per node id.
    pub fn transitive_ids(&self) -> BTreeMap<EntityId, BTreeSet<EntityId>> {
        self.entries
            .iter()
            .map(|e| {
                (
                    e.node.id.clone(),
                    e.transitive.iter().map(|r| r.id.clone()).collect(),
                )
            })
            .collect()
    }

    pub fn to_table(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .entries
            .iter()
            .filter(|e| !e.transitive.is_empty())
            .map(|e| {
                let losses = e
                    .losses
                    .iter()
                    .map(|l| match l.priority {
                        Some(p) => format!("{} (P{p})", l.loss.name),
                        None => l.loss.name.clone(),
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                vec![
                    e.node.entity_type.clone(),
                    e.node.name.clone(),
                    names(&e.direct),
                    names(&e.transitive),
                    losses,
                ]
            })
            .collect();
        render_table(&["Type", "Name", "Direct", "Transitive", "Losses"], &rows)
    }
}

fn in_scope_violations<'s>(store: &'s Store, node: &EntityRecord) -> Vec<&'s EntityRecord> {
    if node
        .attribute("outOfScopeAttackAnalysis")
        .and_then(|v| v.as_bool())
        == Some(true)
    {
        return Vec::new();
    }
    targets(store, node.id(), "isViolatedBy")
        .into_iter()
        .filter(|av| av.attribute("outOfScope").and_then(|v| v.as_bool()) != Some(true))
        .collect()
}

/// Direct exposure is a node's in-scope `isViolatedBy` attack vectors;
/// transitive exposure adds every `builtFrom` descendant's direct exposure.
/// Losses follow `precipitates` then the `leadsTo` closure.
pub fn propagate_exposure(store: &Store) -> Result<ExposureMap, AnalysisError> {
    let mut nodes: Vec<&EntityRecord> = store
        .entities()
        .filter(|e| e.type_name() == "Component" || e.type_name() == "Link")
        .collect();
    nodes.sort_by(|a, b| a.type_name().cmp(b.type_name()).then(canonical_cmp(a, b)));

    let mut memo: HashMap<EntityId, BTreeSet<EntityId>> = HashMap::new();
    for n in &nodes {
        transitive(store, n.id(), &mut memo, &mut BTreeSet::new())?;
    }

    let mut loss_memo: HashMap<EntityId, Vec<&EntityRecord>> = HashMap::new();
    let entries = nodes
        .iter()
        .map(|n| {
            let direct = in_scope_violations(store, n);
            let mut trans: Vec<&EntityRecord> = memo[n.id()]
                .iter()
                .filter_map(|i| store.entity(i))
                .collect();
            trans.sort_by(|a, b| canonical_cmp(a, b));
            let mut losses: Vec<&EntityRecord> = Vec::new();
            for av in &trans {
                let reached = loss_memo.entry(av.id().clone()).or_insert_with(|| {
                    targets(store, av.id(), "precipitates")
                        .into_iter()
                        .flat_map(|ls| closure(store, ls.id(), "leadsTo"))
                        .filter(|e| e.type_name() == "Loss")
                        .collect()
                });
                losses.extend(reached.iter().copied());
            }
            losses.sort_by(|a, b| canonical_cmp(a, b));
            losses.dedup_by(|a, b| a.id() == b.id());
            ExposureEntry {
                node: EntityRef::of(n),
                direct: direct.into_iter().map(EntityRef::of).collect(),
                transitive: trans.into_iter().map(EntityRef::of).collect(),
                losses: losses
                    .into_iter()
                    .map(|l| LossRef {
                        loss: EntityRef::of(l),
                        priority: l.attribute("priority").and_then(|v| v.as_i64()),
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(ExposureMap { entries })
}

fn transitive(
    store: &Store,
    id: &EntityId,
    memo: &mut HashMap<EntityId, BTreeSet<EntityId>>,
    open: &mut BTreeSet<EntityId>,
) -> Result<BTreeSet<EntityId>, AnalysisError> {
    if let Some(done) = memo.get(id) {
        return Ok(done.clone());
    }
    if !open.insert(id.clone()) {
        return Err(AnalysisError::Cycle {
            relation: "builtFrom".into(),
            at: id.clone(),
        });
    }
    let rec = store.entity(id).expect("known node");
    let mut set: BTreeSet<EntityId> = in_scope_violations(store, rec)
        .into_iter()
        .map(|av| av.id().clone())
        .collect();
    for child in targets(store, id, "builtFrom") {
        set.extend(transitive(store, child.id(), memo, open)?);
    }
    open.remove(id);
    memo.insert(id.clone(), set.clone());
    Ok(set)
}
