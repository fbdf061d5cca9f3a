use std::collections::BTreeMap;

use serde::Serialize;

use super::{resolve, targets, AnalysisError, EntityRef};
use crate::store::Store;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ContextEvaluation {
    pub unsafe_action: EntityRef,
    /// Contexts whose every condition held.
    pub triggered_contexts: Vec<EntityRef>,
    pub triggered: bool,
}

/// Whether the observed process-model state puts the unsafe action in one of
/// its unsafe contexts. A context triggers when all its conditions hold.
pub fn unsafe_context_check(
    store: &Store,
    unsafe_action: &str,
    observed: &BTreeMap<String, f64>,
) -> Result<ContextEvaluation, AnalysisError> {
    let ua = resolve(store, unsafe_action, &["UnsafeAction"])?;
    let mut triggered_contexts = Vec::new();
    let mut evaluated = 0;
    for ctx in targets(store, ua.id(), "hasProcessModel") {
        let conditions = ctx
            .attribute("conditions")
            .and_then(Value::as_list)
            .unwrap_or(&[]);
        if conditions.is_empty() {
            continue;
        }
        evaluated += 1;
        let mut all = true;
        for c in conditions {
            all &= condition_holds(ctx.name(), c, observed)?;
        }
        if all {
            triggered_contexts.push(EntityRef::of(ctx));
        }
    }
    if evaluated == 0 {
        return Err(AnalysisError::MalformedCondition {
            context: ua.name().to_string(),
            message: "no linked context carries machine-readable conditions".into(),
        });
    }
    Ok(ContextEvaluation {
        unsafe_action: EntityRef::of(ua),
        triggered: !triggered_contexts.is_empty(),
        triggered_contexts,
    })
}

fn condition_holds(
    context: &str,
    cond: &Value,
    observed: &BTreeMap<String, f64>,
) -> Result<bool, AnalysisError> {
    let malformed = |message: &str| AnalysisError::MalformedCondition {
        context: context.to_string(),
        message: message.to_string(),
    };
    let o = cond
        .as_object()
        .ok_or_else(|| malformed("condition is not an object"))?;
    let field = |k: &str| o.get(k).filter(|v| !v.is_null());
    let variable = field("variable")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("missing variable"))?;
    let comparator = field("comparator")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("missing comparator"))?;
    let value = field("value")
        .and_then(Value::as_f64)
        .ok_or_else(|| malformed("missing value"))?;
    let lookup = |v: &str| {
        observed
            .get(v)
            .copied()
            .ok_or_else(|| AnalysisError::MissingVariable(v.to_string()))
    };
    let lhs = lookup(variable)?;
    let rhs = match field("percentOf").and_then(Value::as_str) {
        Some(base) => value / 100.0 * lookup(base)?,
        None => value,
    };
    Ok(match comparator {
        "Equal" => lhs == rhs,
        "LessThan" => lhs < rhs,
        "GreaterThan" => lhs > rhs,
        other => return Err(malformed(&format!("unknown comparator `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Project;

    fn store() -> Store {
        let mut s = Store::with_builtin(Project::new("p", "P"));
        let ua = s
            .create_entity::<_, String>("UnsafeAction", "Decrease Flow", "1", [])
            .unwrap();
        let cond = Value::Object(BTreeMap::from([
            ("variable".to_string(), Value::from("current")),
            ("comparator".to_string(), Value::from("LessThan")),
            ("value".to_string(), Value::Int(80)),
            ("percentOf".to_string(), Value::from("target")),
        ]));
        let ctx = s
            .create_entity(
                "Context",
                "State",
                "1",
                [("conditions", Value::List(vec![cond]))],
            )
            .unwrap();
        s.relate::<_, String>(&ua, "hasProcessModel", &ctx, [])
            .unwrap();
        s
    }

    fn check(s: &Store, current: f64) -> Result<bool, AnalysisError> {
        let obs = BTreeMap::from([
            ("current".to_string(), current),
            ("target".to_string(), 100.0),
        ]);
        unsafe_context_check(s, "Decrease Flow", &obs).map(|e| e.triggered)
    }

    #[test]
    fn percent_of_threshold_is_strict() {
        let s = store();
        assert_eq!(check(&s, 70.0), Ok(true));
        assert_eq!(check(&s, 90.0), Ok(false));
        assert_eq!(check(&s, 80.0), Ok(false));
    }

    #[test]
    fn missing_variable_is_an_error() {
        let s = store();
        let obs = BTreeMap::from([("current".to_string(), 1.0)]);
        assert_eq!(
            unsafe_context_check(&s, "Decrease Flow", &obs),
            Err(AnalysisError::MissingVariable("target".into()))
        );
    }
}
