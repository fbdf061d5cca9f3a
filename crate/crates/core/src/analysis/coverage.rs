use serde::Serialize;

use super::{names, render_table, sorted_refs, targets, EntityRef};
use crate::store::Store;

/// The four ways a control action can be unsafe, in report column order.
pub const UNSAFE_KINDS: [&str; 4] = [
    "NotProviding",
    "Providing",
    "TooEarlyTooLateWrongOrder",
    "StoppedTooSoonOrAppliedTooLong",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageCell {
    pub kind: String,
    pub covered: bool,
    pub unsafe_actions: Vec<EntityRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageRow {
    pub control_action: EntityRef,
    pub cells: Vec<CoverageCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
    pub covered_cells: usize,
    pub total_cells: usize,
}

impl CoverageReport {
    pub fn row(&self, control_action_name: &str) -> Option<&CoverageRow> {
        self.rows
            .iter()
            .find(|r| r.control_action.name == control_action_name)
    }

    pub fn uncovered_cells(&self) -> usize {
        self.total_cells - self.covered_cells
    }

    pub fn to_table(&self) -> String {
        let mut header = vec!["Control Action"];
        header.extend(UNSAFE_KINDS);
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = vec![r.control_action.name.clone()];
                cells.extend(r.cells.iter().map(|c| {
                    if c.covered {
                        names(&c.unsafe_actions)
                    } else {
                        "-".to_string()
                    }
                }));
                cells
            })
            .collect();
        let mut out = render_table(&header, &rows);
        out.push_str(&format!(
            "\ncovered {}/{} cells\n",
            self.covered_cells, self.total_cells
        ));
        out
    }
}

impl CoverageRow {
    pub fn cell(&self, kind: &str) -> Option<&CoverageCell> {
        self.cells.iter().find(|c| c.kind == kind)
    }
}

/// One row per control action; a cell is covered when some unsafe action of
/// that kind is a variation of the row's action.
pub fn stpa_coverage(store: &Store) -> CoverageReport {
    let rows: Vec<CoverageRow> = store
        .entities_of_type("ControlAction")
        .into_iter()
        .map(|ca| {
            let variants = targets(store, ca.id(), "hasVariation");
            let cells = UNSAFE_KINDS
                .iter()
                .map(|kind| {
                    let hits: Vec<_> = variants
                        .iter()
                        .copied()
                        .filter(|ua| {
                            ua.attribute("unsafeKind").and_then(|v| v.as_str()) == Some(kind)
                        })
                        .collect();
                    CoverageCell {
                        kind: kind.to_string(),
                        covered: !hits.is_empty(),
                        unsafe_actions: sorted_refs(hits),
                    }
                })
                .collect();
            CoverageRow {
                control_action: EntityRef::of(ca),
                cells,
            }
        })
        .collect();
    let covered_cells = rows
        .iter()
        .flat_map(|r| &r.cells)
        .filter(|c| c.covered)
        .count();
    CoverageReport {
        total_cells: rows.len() * UNSAFE_KINDS.len(),
        covered_cells,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Project;
    use crate::value::Value;

    #[test]
    fn no_unsafe_actions_means_nothing_covered() {
        let mut s = Store::with_builtin(Project::new("p", "P"));
        s.create_entity::<_, String>("ControlAction", "Open Valve", "1", [])
            .unwrap();
        let r = stpa_coverage(&s);
        assert_eq!(r.rows.len(), 1);
        assert_eq!((r.covered_cells, r.total_cells), (0, 4));
    }

    #[test]
    fn kinds_are_separated() {
        let mut s = Store::with_builtin(Project::new("p", "P"));
        let ca = s
            .create_entity::<_, String>("ControlAction", "Open Valve", "1", [])
            .unwrap();
        let ua = s
            .create_entity(
                "UnsafeAction",
                "Open Late",
                "1",
                [("unsafeKind", Value::from("TooEarlyTooLateWrongOrder"))],
            )
            .unwrap();
        s.relate::<_, String>(&ua, "isVariationOf", &ca, [])
            .unwrap();
        let r = stpa_coverage(&s);
        let row = r.row("Open Valve").unwrap();
        assert!(row.cell("TooEarlyTooLateWrongOrder").unwrap().covered);
        assert!(!row.cell("Providing").unwrap().covered);
        assert_eq!(r.covered_cells, 1);
        assert!(r.to_table().contains("Open Late"));
    }
}
