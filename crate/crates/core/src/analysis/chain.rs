use serde::Serialize;

use super::{closure, render_table, resolve, sorted_refs, targets, AnalysisError, EntityRef};
use crate::store::Store;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MonitoredTarget {
    pub target: EntityRef,
    pub constraint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LossRef {
    pub loss: EntityRef,
    pub priority: Option<i64>,
}

/// Everything a loss scenario (or an unsafe action or hazard further down
/// the chain) is tied to by relation traversal.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CausalChain {
    pub origin: EntityRef,
    pub monitored_targets: Vec<MonitoredTarget>,
    pub precipitating_attack_vectors: Vec<EntityRef>,
    pub remediating_resilient_modes: Vec<EntityRef>,
    pub unsafe_actions: Vec<EntityRef>,
    pub hazards: Vec<EntityRef>,
    pub losses: Vec<LossRef>,
}

pub const CHAIN_ORIGINS: &[&str] = &["LossScenario", "UnsafeAction", "Hazard"];

/// Trace from `origin` (id or name of a LossScenario, UnsafeAction or Hazard).
/// Unsafe actions, hazards and losses are the `leadsTo` closure.
pub fn trace_chain(store: &Store, origin: &str) -> Result<CausalChain, AnalysisError> {
    let o = resolve(store, origin, CHAIN_ORIGINS)?;
    let id = o.id();
    let monitored_targets = store
        .edges_of(id, "detectedByMonitoring")
        .unwrap_or_default()
        .into_iter()
        .filter_map(|e| {
            let t = store.entity(&e.target_id)?;
            Some((
                t,
                e.edge_attributes
                    .get("constraint")
                    .and_then(|v| v.as_str())
                    .map(str::to_string),
            ))
        })
        .collect::<Vec<_>>();
    let mut monitored: Vec<_> = monitored_targets;
    monitored.sort_by(|a, b| crate::store::canonical_cmp(a.0, b.0));

    let downstream = closure(store, id, "leadsTo");
    let of_type = |t: &str| {
        sorted_refs(
            downstream
                .iter()
                .copied()
                .filter(|e| e.type_name() == t)
                .collect(),
        )
    };
    let losses = downstream
        .iter()
        .filter(|e| e.type_name() == "Loss")
        .map(|l| LossRef {
            loss: EntityRef::of(l),
            priority: l.attribute("priority").and_then(|v| v.as_i64()),
        })
        .collect();
    Ok(CausalChain {
        origin: EntityRef::of(o),
        monitored_targets: monitored
            .into_iter()
            .map(|(t, constraint)| MonitoredTarget {
                target: EntityRef::of(t),
                constraint,
            })
            .collect(),
        precipitating_attack_vectors: sorted_refs(targets(store, id, "precipitatedBy")),
        remediating_resilient_modes: sorted_refs(targets(store, id, "remediatedBy")),
        unsafe_actions: of_type("UnsafeAction"),
        hazards: of_type("Hazard"),
        losses,
    })
}

impl CausalChain {
    pub fn to_table(&self) -> String {
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut push = |rel: &str, r: &EntityRef, note: String| {
            rows.push(vec![
                rel.to_string(),
                r.entity_type.clone(),
                r.name.clone(),
                note,
            ]);
        };
        for m in &self.monitored_targets {
            push(
                "detectedByMonitoring",
                &m.target,
                m.constraint.clone().unwrap_or_default(),
            );
        }
        for r in &self.precipitating_attack_vectors {
            push("precipitatedBy", r, String::new());
        }
        for r in &self.remediating_resilient_modes {
            push("remediatedBy", r, String::new());
        }
        for r in self.unsafe_actions.iter().chain(&self.hazards) {
            push("leadsTo", r, String::new());
        }
        for l in &self.losses {
            let note = l
                .priority
                .map(|p| format!("priority {p}"))
                .unwrap_or_default();
            push("leadsTo", &l.loss, note);
        }
        format!(
            "{} {}\n\n{}",
            self.origin.entity_type,
            self.origin.name,
            render_table(&["Relation", "Type", "Name", "Note"], &rows)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Project;
    use crate::value::Value;

    #[test]
    fn bare_scenario_has_empty_chain() {
        let mut s = Store::with_builtin(Project::new("p", "P"));
        s.create_entity::<_, String>("LossScenario", "Lonely", "1", [])
            .unwrap();
        let c = trace_chain(&s, "Lonely").unwrap();
        assert!(c.monitored_targets.is_empty() && c.losses.is_empty() && c.hazards.is_empty());
    }

    #[test]
    fn leads_to_is_transitive() {
        let mut s = Store::with_builtin(Project::new("p", "P"));
        let ls = s
            .create_entity::<_, String>("LossScenario", "S", "1", [])
            .unwrap();
        let ua = s
            .create_entity::<_, String>("UnsafeAction", "U", "1", [])
            .unwrap();
        let hz = s
            .create_entity::<_, String>("Hazard", "H", "1", [])
            .unwrap();
        let l = s
            .create_entity("Loss", "L", "1", [("priority", Value::Int(2))])
            .unwrap();
        s.relate::<_, String>(&ls, "leadsTo", &ua, []).unwrap();
        s.relate::<_, String>(&ua, "leadsTo", &hz, []).unwrap();
        s.relate::<_, String>(&hz, "leadsTo", &l, []).unwrap();
        let c = trace_chain(&s, "S").unwrap();
        assert_eq!(c.unsafe_actions[0].name, "U");
        assert_eq!(c.hazards[0].name, "H");
        assert_eq!(c.losses[0].priority, Some(2));
        assert!(matches!(
            trace_chain(&s, l.as_str()),
            Err(AnalysisError::WrongType { .. })
        ));
        assert!(matches!(
            trace_chain(&s, "nope"),
            Err(AnalysisError::UnknownEntity(_))
        ));
    }
}
