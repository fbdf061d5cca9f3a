use std::collections::BTreeMap;

use serde_json::{Map, Value as Json};

use crate::schema::MetamodelSchema;
use crate::store::{canonical_cmp, EntityRecord, Project, Store};
use crate::value::Value;

use super::{validate_query, QueryAst, QueryError, Selection};

/// Run `ast` against one store.
pub fn execute(store: &Store, ast: &QueryAst) -> Result<Json, QueryError> {
    execute_on(&[store], ast)
}

/// Run `ast` against a set of project stores sharing one schema;
/// `cpsProjects` lists them all, the model field picks one by id.
pub fn execute_on(stores: &[&Store], ast: &QueryAst) -> Result<Json, QueryError> {
    let Some(first) = stores.first() else {
        return Err(QueryError::Validation {
            pos: ast.pos,
            message: "no project to query".into(),
        });
    };
    let schema = first.schema();
    validate_query(schema, ast)?;
    let mut data = Map::new();
    for sel in &ast.selections {
        let value = match root_kind(schema, &sel.name) {
            Root::Projects => {
                let mut projects: Vec<&Project> = stores.iter().map(|s| s.project()).collect();
                projects.sort_by(|a, b| a.id.cmp(&b.id));
                Json::Array(
                    projects
                        .into_iter()
                        .map(|p| project(p, &sel.selections))
                        .collect(),
                )
            }
            Root::Model => {
                let id = sel
                    .argument("projectId")
                    .map(|l| l.to_value())
                    .and_then(|v| match v {
                        Value::String(s) => Some(s),
                        Value::Int(i) => Some(i.to_string()),
                        _ => None,
                    })
                    .unwrap_or_default();
                let store = stores
                    .iter()
                    .find(|s| s.project().id == id)
                    .ok_or(QueryError::UnknownProject(id))?;
                model(store, &sel.selections)
            }
            Root::Other => {
                return Err(QueryError::Validation {
                    pos: sel.pos,
                    message: format!("root field `{}` has no resolver", sel.name),
                })
            }
        };
        data.insert(sel.name.clone(), value);
    }
    let mut out = Map::new();
    out.insert("data".into(), Json::Object(data));
    Ok(Json::Object(out))
}

enum Root {
    Projects,
    Model,
    Other,
}

fn root_kind(schema: &MetamodelSchema, field: &str) -> Root {
    if Some(field) == schema.model_field.as_deref() {
        Root::Model
    } else if schema
        .root_query_fields()
        .iter()
        .any(|f| f.name == field && f.ty.base_name() == "Project")
    {
        Root::Projects
    } else {
        Root::Other
    }
}

fn project(p: &Project, sels: &[Selection]) -> Json {
    let mut m = Map::new();
    for s in sels {
        let v = match s.name.as_str() {
            "id" => Json::String(p.id.clone()),
            "name" => p.name.clone().map_or(Json::Null, Json::String),
            _ => Json::Null,
        };
        m.insert(s.name.clone(), v);
    }
    Json::Object(m)
}

fn model(store: &Store, sels: &[Selection]) -> Json {
    let schema = store.schema();
    let mut m = Map::new();
    for s in sels {
        let v = if s.name == "project" {
            project(store.project(), &s.selections)
        } else if let Some(c) = schema.collection_named(&s.name) {
            Json::Array(
                store
                    .entities_of_type(&c.entity_type)
                    .into_iter()
                    .map(|e| entity(store, e, &s.selections))
                    .collect(),
            )
        } else {
            Json::Null
        };
        m.insert(s.name.clone(), v);
    }
    Json::Object(m)
}

fn entity(store: &Store, e: &EntityRecord, sels: &[Selection]) -> Json {
    let mut m = Map::new();
    for s in sels {
        let v = match s.name.as_str() {
            "identity" => identity(e, &s.selections),
            "attributes" => {
                let obj = s
                    .selections
                    .iter()
                    .map(|a| {
                        let v = e.attribute(&a.name).unwrap_or(&Value::Null);
                        (a.name.clone(), render_value(v, &a.selections))
                    })
                    .collect();
                Json::Object(obj)
            }
            "parameters" => Json::Array(
                e.parameters()
                    .iter()
                    .map(|p| {
                        let v = serde_json::to_value(p).expect("parameter serializes");
                        render_value(&Value::from_json(&v), &s.selections)
                    })
                    .collect(),
            ),
            "relations" => relations(store, e, &s.selections),
            _ => Json::Null,
        };
        m.insert(s.name.clone(), v);
    }
    Json::Object(m)
}

fn identity(e: &EntityRecord, sels: &[Selection]) -> Json {
    let mut m = Map::new();
    for s in sels {
        let v = match s.name.as_str() {
            "id" => e.id().0.as_str(),
            "name" => e.name(),
            "number" => e.number(),
            _ => {
                m.insert(s.name.clone(), Json::Null);
                continue;
            }
        };
        m.insert(s.name.clone(), Json::String(v.to_string()));
    }
    Json::Object(m)
}

fn relations(store: &Store, e: &EntityRecord, sels: &[Selection]) -> Json {
    let mut m = Map::new();
    for s in sels {
        let mut edges: Vec<_> = store
            .edges_of(e.id(), &s.name)
            .unwrap_or_default()
            .into_iter()
            .filter_map(|edge| {
                store
                    .entity(&edge.target_id)
                    .map(|t| (t, edge.edge_attributes))
            })
            .collect();
        edges.sort_by(|a, b| canonical_cmp(a.0, b.0));
        let list = edges
            .into_iter()
            .map(|(t, attrs)| target(t, &attrs, &s.selections))
            .collect();
        m.insert(s.name.clone(), Json::Array(list));
    }
    Json::Object(m)
}

fn target(t: &EntityRecord, attrs: &BTreeMap<String, Value>, sels: &[Selection]) -> Json {
    let mut m = Map::new();
    for s in sels {
        let v = match s.name.as_str() {
            "id" => Json::String(t.id().0.clone()),
            "name" => Json::String(t.name().to_string()),
            "number" => Json::String(t.number().to_string()),
            "entityType" => Json::String(t.type_name().to_string()),
            other => attrs.get(other).map_or(Json::Null, Value::to_json),
        };
        m.insert(s.name.clone(), v);
    }
    Json::Object(m)
}

/// Project a stored value through a (possibly empty) selection set.
fn render_value(v: &Value, sels: &[Selection]) -> Json {
    match v {
        Value::List(items) => Json::Array(items.iter().map(|i| render_value(i, sels)).collect()),
        Value::Object(o) if !sels.is_empty() => Json::Object(
            sels.iter()
                .map(|s| {
                    let inner = o.get(&s.name).unwrap_or(&Value::Null);
                    (s.name.clone(), render_value(inner, &s.selections))
                })
                .collect(),
        ),
        other => other.to_json(),
    }
}
