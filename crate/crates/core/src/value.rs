//! Typed attribute values and their conformance to schema types.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::schema::{MetamodelSchema, TypeRef};

/// An attribute, edge-attribute or argument value.
///
/// Enum values and IDs are carried as [`Value::String`]; the declared type
/// decides how they are checked.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    String(String),
    List(Vec<Value>),
    Object(BTreeMap<String, Value>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{path}: {message}")]
pub struct ValueError {
    pub path: String,
    pub message: String,
}

impl Value {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_object(&self) -> Option<&BTreeMap<String, Value>> {
        match self {
            Value::Object(o) => Some(o),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::Value as J;
        match self {
            Value::Null => J::Null,
            Value::Bool(b) => J::Bool(*b),
            Value::Int(i) => J::from(*i),
            Value::Float(x) => serde_json::Number::from_f64(*x).map_or(J::Null, J::Number),
            Value::String(s) => J::String(s.clone()),
            Value::List(l) => J::Array(l.iter().map(Value::to_json).collect()),
            Value::Object(o) => {
                J::Object(o.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
            }
        }
    }

    /// Structural conversion without a declared type.
    pub fn from_json(json: &serde_json::Value) -> Value {
        use serde_json::Value as J;
        match json {
            J::Null => Value::Null,
            J::Bool(b) => Value::Bool(*b),
            J::Number(n) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => Value::Float(n.as_f64().unwrap_or(f64::NAN)),
            },
            J::String(s) => Value::String(s.clone()),
            J::Array(a) => Value::List(a.iter().map(Value::from_json).collect()),
            J::Object(o) => Value::Object(
                o.iter()
                    .map(|(k, v)| (k.clone(), Value::from_json(v)))
                    .collect(),
            ),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Int(_) => "integer",
            Value::Float(_) => "float",
            Value::String(_) => "string",
            Value::List(_) => "list",
            Value::Object(_) => "object",
        }
    }
}

impl fmt::Display for Value {
    /// Plain rendering for terminal tables.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => Ok(()),
            Value::String(s) => f.write_str(s),
            Value::List(l) => {
                for (i, v) in l.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            other => write!(f, "{}", other.to_json()),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::String(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::String(s)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl<T: Into<Value>> From<Vec<T>> for Value {
    fn from(v: Vec<T>) -> Self {
        Value::List(v.into_iter().map(Into::into).collect())
    }
}

impl MetamodelSchema {
    /// Check `value` against `ty`, returning the normalized value: integers
    /// widen to floats where a float is declared, and object values gain an
    /// explicit null for each unset field.
    pub fn coerce_value(
        &self,
        ty: &TypeRef,
        value: Value,
        path: &str,
    ) -> Result<Value, ValueError> {
        let err = |message: String| ValueError {
            path: path.to_string(),
            message,
        };
        match ty {
            TypeRef::NonNull(inner) => {
                if value.is_null() {
                    return Err(err(format!("null given for non-null `{ty}`")));
                }
                self.coerce_value(inner, value, path)
            }
            _ if value.is_null() => Ok(Value::Null),
            TypeRef::List(item) => match value {
                Value::List(items) => items
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| self.coerce_value(item, v, &format!("{path}[{i}]")))
                    .collect::<Result<Vec<_>, _>>()
                    .map(Value::List),
                other => Err(err(format!("expected `{ty}`, found {}", other.kind()))),
            },
            TypeRef::Named(name) => self.coerce_named(name, value, path),
        }
    }

    fn coerce_named(&self, name: &str, value: Value, path: &str) -> Result<Value, ValueError> {
        let err = |message: String| ValueError {
            path: path.to_string(),
            message,
        };
        let mismatch = |v: &Value| err(format!("expected `{name}`, found {}", v.kind()));
        match name {
            "ID" => match value {
                Value::String(_) => Ok(value),
                Value::Int(i) => Ok(Value::String(i.to_string())),
                v => Err(mismatch(&v)),
            },
            "String" => match value {
                Value::String(_) => Ok(value),
                v => Err(mismatch(&v)),
            },
            "Int" => match value {
                Value::Int(_) => Ok(value),
                v => Err(mismatch(&v)),
            },
            "Float" => match value {
                Value::Int(i) => Ok(Value::Float(i as f64)),
                Value::Float(x) if x.is_finite() => Ok(value),
                Value::Float(_) => Err(err("non-finite float".into())),
                v => Err(mismatch(&v)),
            },
            "Boolean" => match value {
                Value::Bool(_) => Ok(value),
                v => Err(mismatch(&v)),
            },
            _ => {
                if let Some(e) = self.enums.get(name) {
                    return match &value {
                        Value::String(s) if e.values.contains(s) => Ok(value),
                        Value::String(s) => Err(err(format!(
                            "`{s}` is not a value of enum `{name}` ({})",
                            e.values.join(", ")
                        ))),
                        v => Err(mismatch(v)),
                    };
                }
                let def = self
                    .object_types
                    .get(name)
                    .or_else(|| self.input_types.get(name))
                    .ok_or_else(|| err(format!("type `{name}` is not declared")))?;
                let Value::Object(mut fields) = value else {
                    return Err(mismatch(&value));
                };
                if let Some(unknown) = fields.keys().find(|k| def.field(k).is_none()) {
                    return Err(err(format!("`{name}` has no field `{unknown}`")));
                }
                let mut out = BTreeMap::new();
                for f in &def.fields {
                    let v = fields.remove(&f.name).unwrap_or(Value::Null);
                    let v = self.coerce_value(&f.ty, v, &format!("{path}.{}", f.name))?;
                    out.insert(f.name.clone(), v);
                }
                Ok(Value::Object(out))
            }
        }
    }
}
