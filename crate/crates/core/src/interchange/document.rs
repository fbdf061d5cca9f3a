use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::diagnostics::{has_errors, Diagnostic};
use crate::schema::MetamodelSchema;
use crate::store::{
    canonical_cmp, validate_model, EntityId, Parameter, Project, Store, StoreError,
};
use crate::value::Value;
use crate::FORMAT_VERSION;

/// A whole model in the query-result shape: one array per collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelDocument {
    pub format_version: String,
    pub project: Project,
    #[serde(flatten)]
    pub collections: BTreeMap<String, Vec<EntityDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityDoc {
    pub identity: IdentityDoc,
    #[serde(default)]
    pub attributes: BTreeMap<String, Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<Vec<Parameter>>,
    /// Absent for types that declare no stored relation direction.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub relations: BTreeMap<String, Vec<TargetDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityDoc {
    pub id: EntityId,
    pub name: String,
    pub number: String,
}

/// A relation target reference. `name`, `number` and `entityType` are
/// informative; the id is the key. Remaining keys are edge attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TargetDoc {
    pub id: EntityId,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub number: Option<String>,
    #[serde(default)]
    pub entity_type: Option<String>,
    #[serde(flatten)]
    pub edge_attributes: BTreeMap<String, Json>,
}

impl ModelDocument {
    pub fn to_json_string(&self) -> String {
        crate::canonical_json(self)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ImportError> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| ImportError::Malformed(e.to_string()))?;
        if doc.format_version != FORMAT_VERSION {
            return Err(ImportError::FormatVersion(doc.format_version));
        }
        Ok(doc)
    }

    pub fn entity_count(&self) -> usize {
        self.collections.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("model has {} validation error(s); first: {}", .0.iter().filter(|d| d.is_error()).count(),
        .0.iter().find(|d| d.is_error()).map(|d| d.to_string()).unwrap_or_default())]
    Invalid(Vec<Diagnostic>),
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("unsupported formatVersion `{0}`")]
    FormatVersion(String),
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("unresolved reference: edge {source_id} -{relation}-> {target_id} names no entity")]
    UnresolvedReference {
        source_id: EntityId,
        relation: String,
        target_id: EntityId,
    },
    #[error("{path}: {source}")]
    Store {
        path: String,
        #[source]
        source: StoreError,
    },
    #[error("model has validation errors; first: {}", .0.iter().find(|d| d.is_error()).map(|d| d.to_string()).unwrap_or_default())]
    Invalid(Vec<Diagnostic>),
}

/// Serialize a valid store. Collections and relation targets are in
/// canonical order, every declared attribute is present (null when unset),
/// and relations are written on the primary side only.
pub fn export_model(store: &Store) -> Result<ModelDocument, ExportError> {
    let diags = validate_model(store);
    if has_errors(&diags) {
        return Err(ExportError::Invalid(diags));
    }
    Ok(export_unchecked(store))
}

pub(crate) fn export_unchecked(store: &Store) -> ModelDocument {
    let schema = store.schema();
    let mut collections = BTreeMap::new();
    for c in &schema.collections {
        let docs = store
            .entities_of_type(&c.entity_type)
            .into_iter()
            .map(|e| entity_doc(store, e.id()))
            .collect();
        collections.insert(c.field.clone(), docs);
    }
    ModelDocument {
        format_version: FORMAT_VERSION.to_string(),
        project: store.project().clone(),
        collections,
    }
}

pub(crate) fn entity_doc(store: &Store, id: &EntityId) -> EntityDoc {
    let schema = store.schema();
    let e = store.entity(id).expect("entity exists");
    let et = schema.entity_type(e.type_name()).expect("typed entity");
    let attributes = et
        .attributes
        .iter()
        .map(|f| {
            let v = e.attribute(&f.name).cloned().unwrap_or(Value::Null);
            (f.name.clone(), v.to_json())
        })
        .collect();
    let mut relations = BTreeMap::new();
    for rel in et.relations.iter().filter(|r| r.primary) {
        let mut targets: Vec<_> = store
            .edges_of(id, &rel.name)
            .expect("declared relation")
            .into_iter()
            .map(|edge| (store.entity(&edge.target_id).expect("edge endpoint"), edge))
            .collect();
        targets.sort_by(|a, b| canonical_cmp(a.0, b.0));
        let docs = targets
            .into_iter()
            .map(|(t, edge)| TargetDoc {
                id: t.id().clone(),
                name: Some(t.name().to_string()),
                number: Some(t.number().to_string()),
                entity_type: Some(t.type_name().to_string()),
                edge_attributes: rel
                    .edge_attributes
                    .iter()
                    .map(|f| {
                        let v = edge
                            .edge_attributes
                            .get(&f.name)
                            .cloned()
                            .unwrap_or(Value::Null);
                        (f.name.clone(), v.to_json())
                    })
                    .collect(),
            })
            .collect();
        relations.insert(rel.name.clone(), docs);
    }
    EntityDoc {
        identity: IdentityDoc {
            id: id.clone(),
            name: e.name().to_string(),
            number: e.number().to_string(),
        },
        attributes,
        parameters: et.parameters_allowed.then(|| e.parameters().to_vec()),
        relations,
    }
}

/// Load a document into a fresh store. Returns the store and any warnings.
pub fn import_model(
    doc: &ModelDocument,
    schema: Arc<MetamodelSchema>,
) -> Result<(Store, Vec<Diagnostic>), ImportError> {
    let mut store =
        Store::new(schema.clone(), doc.project.clone()).map_err(|e| ImportError::Store {
            path: "schema".into(),
            source: e,
        })?;

    let mut typed = Vec::new();
    for (field, docs) in &doc.collections {
        let c = schema
            .collection_named(field)
            .ok_or_else(|| ImportError::SchemaViolation {
                path: field.clone(),
                message: format!("unknown entity collection `{field}`"),
            })?;
        for d in docs {
            typed.push((c.entity_type.as_str(), d));
        }
    }

    for (type_name, d) in &typed {
        let path = format!("{type_name}[{}]", d.identity.id);
        let attrs = d
            .attributes
            .iter()
            .map(|(k, v)| (k.clone(), Value::from_json(v)));
        store
            .create_entity_with_id(
                d.identity.id.clone(),
                type_name,
                &d.identity.name,
                &d.identity.number,
                attrs,
            )
            .map_err(|source| ImportError::Store {
                path: path.clone(),
                source,
            })?;
        if let Some(params) = &d.parameters {
            store
                .set_parameters(&d.identity.id, params.clone())
                .map_err(|source| ImportError::Store { path, source })?;
        }
    }

    let mut warnings = Vec::new();
    for (type_name, d) in &typed {
        let source_id = &d.identity.id;
        for (relation, targets) in &d.relations {
            let path = format!("{type_name}[{source_id}].relations.{relation}");
            let def = schema.lookup_relation(type_name, relation).map_err(|e| {
                ImportError::SchemaViolation {
                    path: path.clone(),
                    message: e.to_string(),
                }
            })?;
            if !def.primary {
                warnings.push(Diagnostic::warning(
                    "inverse-side-edge",
                    &path,
                    format!(
                        "edges are normally written as `{}`",
                        def.inverse_name.as_deref().unwrap_or("?")
                    ),
                ));
            }
            for t in targets {
                let Some(target) = store.entity(&t.id) else {
                    return Err(ImportError::UnresolvedReference {
                        source_id: source_id.clone(),
                        relation: relation.clone(),
                        target_id: t.id.clone(),
                    });
                };
                if let Some(et) = &t.entity_type {
                    if et != target.type_name() {
                        return Err(ImportError::SchemaViolation {
                            path: format!("{path}[{}]", t.id),
                            message: format!(
                                "entityType `{et}` disagrees with target type `{}`",
                                target.type_name()
                            ),
                        });
                    }
                }
                let attrs = t
                    .edge_attributes
                    .iter()
                    .map(|(k, v)| (k.clone(), Value::from_json(v)));
                store
                    .relate(source_id, relation, &t.id, attrs)
                    .map_err(|source| ImportError::Store {
                        path: format!("{path}[{}]", t.id),
                        source,
                    })?;
            }
        }
    }

    let diags = validate_model(&store);
    if has_errors(&diags) {
        return Err(ImportError::Invalid(diags));
    }
    warnings.extend(diags);
    Ok((store, warnings))
}
