use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::store::{EntityId, Store};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Eq,
    Lt,
    Gt,
    Contains,
}

impl FromStr for Comparator {
    type Err = PredicateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "=" | "==" | "eq" => Comparator::Eq,
            "<" | "lt" => Comparator::Lt,
            ">" | "gt" => Comparator::Gt,
            "contains" => Comparator::Contains,
            other => return Err(PredicateError::UnknownComparator(other.to_string())),
        })
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Eq => "=",
            Comparator::Lt => "<",
            Comparator::Gt => ">",
            Comparator::Contains => "contains",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredicateError {
    #[error("unknown entity type `{0}`")]
    UnknownType(String),
    #[error("`{type_name}` has no attribute `{attribute}`")]
    UnknownAttribute {
        type_name: String,
        attribute: String,
    },
    #[error("unknown comparator `{0}` (use =, <, > or contains)")]
    UnknownComparator(String),
    #[error("`{comparator}` does not apply to `{attribute}` of type `{ty}`")]
    ComparatorMismatch {
        comparator: Comparator,
        attribute: String,
        ty: String,
    },
    #[error("literal does not fit `{attribute}`: {message}")]
    LiteralMismatch { attribute: String, message: String },
}

/// Ids of `type_name` entities whose `attribute` satisfies the comparison,
/// in canonical order. Unset attributes never match.
pub fn select_by_predicate(
    store: &Store,
    type_name: &str,
    attribute: &str,
    comparator: Comparator,
    literal: &Value,
) -> Result<Vec<EntityId>, PredicateError> {
    let schema = store.schema();
    let et = schema
        .entity_type(type_name)
        .ok_or_else(|| PredicateError::UnknownType(type_name.to_string()))?;
    let field = et
        .attribute(attribute)
        .ok_or_else(|| PredicateError::UnknownAttribute {
            type_name: type_name.to_string(),
            attribute: attribute.to_string(),
        })?;
    let ty = field.ty.nullable();
    let base = ty.base_name();
    let mismatch = || PredicateError::ComparatorMismatch {
        comparator,
        attribute: attribute.to_string(),
        ty: field.ty.to_string(),
    };
    let numeric = !ty.is_list() && (base == "Int" || base == "Float");
    let operand_ty = match comparator {
        Comparator::Lt | Comparator::Gt if !numeric => return Err(mismatch()),
        Comparator::Eq if ty.is_list() || schema.object_types.contains_key(base) => {
            return Err(mismatch())
        }
        Comparator::Contains => match ty {
            crate::schema::TypeRef::List(item) => item.as_ref().clone(),
            _ if base == "String" => ty.clone(),
            _ => return Err(mismatch()),
        },
        _ => ty.clone(),
    };
    let operand = schema
        .coerce_value(&operand_ty, literal.clone(), attribute)
        .map_err(|e| PredicateError::LiteralMismatch {
            attribute: attribute.to_string(),
            message: e.message,
        })?;
    Ok(store
        .entities_of_type(type_name)
        .into_iter()
        .filter(|e| {
            let Some(v) = e.attribute(attribute) else {
                return false;
            };
            match comparator {
                Comparator::Eq => match (v.as_f64(), operand.as_f64()) {
                    (Some(a), Some(b)) => a == b,
                    _ => *v == operand,
                },
                Comparator::Lt => v.as_f64().zip(operand.as_f64()).is_some_and(|(a, b)| a < b),
                Comparator::Gt => v.as_f64().zip(operand.as_f64()).is_some_and(|(a, b)| a > b),
                Comparator::Contains => match v {
                    Value::List(items) => items.contains(&operand),
                    Value::String(s) => operand.as_str().is_some_and(|o| s.contains(o)),
                    _ => false,
                },
            }
        })
        .map(|e| e.id().clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Project;

    fn store() -> Store {
        let mut s = Store::with_builtin(Project::new("p", "P"));
        s.create_entity(
            "Loss",
            "Equipment Damage",
            "1",
            [("priority", Value::Int(1))],
        )
        .unwrap();
        s.create_entity(
            "Loss",
            "Sub-Optimal Capacity",
            "2",
            [("priority", Value::Int(3))],
        )
        .unwrap();
        s.create_entity::<_, String>("Loss", "Unranked", "3", [])
            .unwrap();
        s.create_entity(
            "AttackVector",
            "Spoof",
            "1",
            [("likelihood", Value::from("High"))],
        )
        .unwrap();
        s
    }

    #[test]
    fn integer_comparisons() {
        let s = store();
        let eq =
            select_by_predicate(&s, "Loss", "priority", Comparator::Eq, &Value::Int(1)).unwrap();
        assert_eq!(eq.len(), 1);
        assert!(
            select_by_predicate(&s, "Loss", "priority", Comparator::Lt, &Value::Int(1))
                .unwrap()
                .is_empty()
        );
        assert_eq!(
            select_by_predicate(&s, "Loss", "priority", Comparator::Gt, &Value::Int(1))
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn enum_equality_and_mismatches() {
        let s = store();
        let hits = select_by_predicate(
            &s,
            "AttackVector",
            "likelihood",
            Comparator::Eq,
            &"High".into(),
        )
        .unwrap();
        assert_eq!(hits.len(), 1);
        assert!(matches!(
            select_by_predicate(
                &s,
                "AttackVector",
                "likelihood",
                Comparator::Lt,
                &"High".into()
            ),
            Err(PredicateError::ComparatorMismatch { .. })
        ));
        assert!(matches!(
            select_by_predicate(
                &s,
                "AttackVector",
                "likelihood",
                Comparator::Eq,
                &"Huge".into()
            ),
            Err(PredicateError::LiteralMismatch { .. })
        ));
        assert!(matches!(
            select_by_predicate(&s, "Loss", "weight", Comparator::Eq, &Value::Int(1)),
            Err(PredicateError::UnknownAttribute { .. })
        ));
        assert!("~".parse::<Comparator>().is_err());
    }

    #[test]
    fn contains_on_strings() {
        let s = store();
        let hits =
            select_by_predicate(&s, "Loss", "description", Comparator::Contains, &"x".into())
                .unwrap();
        assert!(hits.is_empty());
    }
}
