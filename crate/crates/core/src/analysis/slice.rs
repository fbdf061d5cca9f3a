use std::collections::BTreeSet;

use serde::Serialize;

use super::{names, render_table, resolve, sorted_refs, targets, AnalysisError, EntityRef};
use crate::store::{EntityId, EntityRecord, Store};

/// Item types that carry control-loop information. Generic items (material
/// flows) are deliberately left out.
const LOOP_ITEMS: &[&str] = &["ControlAction", "Feedback", "Context"];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LoopSlice {
    pub control_action: EntityRef,
    pub functions: Vec<EntityRef>,
    pub components: Vec<EntityRef>,
    pub links: Vec<EntityRef>,
    pub control_actions: Vec<EntityRef>,
    pub feedback: Vec<EntityRef>,
    pub contexts: Vec<EntityRef>,
}

/// The control loop around a control action: the fixed point of functions
/// producing or consuming loop items (control actions, feedback, contexts)
/// reachable from the action, the components performing those functions and
/// the links transferring those items.
pub fn control_loop(store: &Store, control_action: &str) -> Result<LoopSlice, AnalysisError> {
    let ca = resolve(store, control_action, &["ControlAction"])?;
    let mut items: BTreeSet<EntityId> = BTreeSet::from([ca.id().clone()]);
    let mut functions: BTreeSet<EntityId> = BTreeSet::new();
    let mut frontier = vec![ca.id().clone()];
    while let Some(item) = frontier.pop() {
        let fs = targets(store, &item, "isOutputOf")
            .into_iter()
            .chain(targets(store, &item, "triggers"));
        for f in fs {
            if !functions.insert(f.id().clone()) {
                continue;
            }
            let linked = targets(store, f.id(), "outputs")
                .into_iter()
                .chain(targets(store, f.id(), "isTriggeredBy"))
                .filter(|i| LOOP_ITEMS.contains(&i.type_name()));
            for i in linked {
                if items.insert(i.id().clone()) {
                    frontier.push(i.id().clone());
                }
            }
        }
    }
    let get = |ids: &BTreeSet<EntityId>| -> Vec<&EntityRecord> {
        ids.iter().filter_map(|i| store.entity(i)).collect()
    };
    let item_recs = get(&items);
    let function_recs = get(&functions);
    let components: Vec<_> = function_recs
        .iter()
        .flat_map(|f| targets(store, f.id(), "performedBy"))
        .filter(|c| c.type_name() == "Component")
        .collect();
    let links: Vec<_> = item_recs
        .iter()
        .flat_map(|i| targets(store, i.id(), "transferredBy"))
        .collect();
    let of_type = |t: &str| {
        sorted_refs(
            item_recs
                .iter()
                .copied()
                .filter(|i| i.type_name() == t)
                .collect(),
        )
    };
    Ok(LoopSlice {
        control_action: EntityRef::of(ca),
        functions: sorted_refs(function_recs),
        components: sorted_refs(components),
        links: sorted_refs(links),
        control_actions: of_type("ControlAction"),
        feedback: of_type("Feedback"),
        contexts: of_type("Context"),
    })
}

impl LoopSlice {
    pub fn component_names(&self) -> BTreeSet<&str> {
        self.components.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn link_names(&self) -> BTreeSet<&str> {
        self.links.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn to_table(&self) -> String {
        let rows = vec![
            vec!["Components".to_string(), names(&self.components)],
            vec!["Links".to_string(), names(&self.links)],
            vec!["Functions".to_string(), names(&self.functions)],
            vec!["Control actions".to_string(), names(&self.control_actions)],
            vec!["Feedback".to_string(), names(&self.feedback)],
            vec!["Contexts".to_string(), names(&self.contexts)],
        ];
        format!(
            "Control loop of {}\n\n{}",
            self.control_action.name,
            render_table(&["Role", "Members"], &rows)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Project;

    #[test]
    fn isolated_action_is_its_own_slice() {
        let mut s = Store::with_builtin(Project::new("p", "P"));
        s.create_entity::<_, String>("ControlAction", "Open", "1", [])
            .unwrap();
        let sl = control_loop(&s, "Open").unwrap();
        assert!(sl.functions.is_empty() && sl.components.is_empty() && sl.links.is_empty());
        assert_eq!(sl.control_actions.len(), 1);
    }

    #[test]
    fn feedback_closes_the_loop() {
        let mut s = Store::with_builtin(Project::new("p", "P"));
        let ca = s
            .create_entity::<_, String>("ControlAction", "Open", "1", [])
            .unwrap();
        let fb = s
            .create_entity::<_, String>("Feedback", "Status", "1", [])
            .unwrap();
        let ctl = s
            .create_entity::<_, String>("Function", "Control", "1", [])
            .unwrap();
        let act = s
            .create_entity::<_, String>("Function", "Actuate", "2", [])
            .unwrap();
        let c1 = s
            .create_entity::<_, String>("Component", "Controller", "1", [])
            .unwrap();
        let c2 = s
            .create_entity::<_, String>("Component", "Valve", "2", [])
            .unwrap();
        let bus = s
            .create_entity::<_, String>("Link", "Bus", "1", [])
            .unwrap();
        s.relate::<_, String>(&ctl, "outputs", &ca, []).unwrap();
        s.relate::<_, String>(&act, "isTriggeredBy", &ca, [])
            .unwrap();
        s.relate::<_, String>(&act, "outputs", &fb, []).unwrap();
        s.relate::<_, String>(&ctl, "isTriggeredBy", &fb, [])
            .unwrap();
        s.relate::<_, String>(&c1, "performs", &ctl, []).unwrap();
        s.relate::<_, String>(&c2, "performs", &act, []).unwrap();
        s.relate::<_, String>(&fb, "transferredBy", &bus, [])
            .unwrap();
        let sl = control_loop(&s, "Open").unwrap();
        assert_eq!(
            sl.component_names(),
            BTreeSet::from(["Controller", "Valve"])
        );
        assert_eq!(sl.link_names(), BTreeSet::from(["Bus"]));
        assert_eq!(sl.feedback.len(), 1);
        assert_eq!(control_loop(&s, "Open").unwrap(), sl);
    }
}
