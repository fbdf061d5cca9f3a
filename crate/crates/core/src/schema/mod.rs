//! Metamodel schema registry.
//!
//! A schema is written in the GraphQL schema-definition subset. Entity types
//! follow a fixed pattern: an `identity` block (`id`, `name`, `number`), an
//! optional attributes type, optional `parameters`, and an optional relations
//! type whose fields name the relation and point at a `<Stem>Target` type.
//! Relation metadata lives in two enums keyed by the same stem:
//!
//! * `<Stem>TargetType` lists the entity types a relation may point at;
//! * `<Stem>Inverse` names the inverse relation (declared on one side of a
//!   pair is enough; the other side is derived).
//!
//! Fields of a target type other than `id`, `name`, `number` and
//! `entityType` are edge attributes.

mod print;
mod sdl;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::lexer::Pos;

pub use validate::validate_schema;

pub const SCALARS: &[&str] = &["ID", "String", "Float", "Boolean", "Int"];

/// Fields of a relation target type that describe the reference itself.
pub const TARGET_REFERENCE_FIELDS: &[&str] = &["id", "name", "number", "entityType"];

const BUILTIN_SOURCE: &str = include_str!("cps.graphql");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemaError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: {construct} are outside the supported schema subset")]
    Unsupported { pos: Pos, construct: String },
    #[error("{pos}: duplicate type name `{name}` (first declared at {first})")]
    DuplicateType { name: String, pos: Pos, first: Pos },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LookupError {
    #[error("unknown entity type `{0}`")]
    UnknownEntityType(String),
    #[error("entity type `{entity_type}` has no relation `{relation}`")]
    UnknownRelation {
        entity_type: String,
        relation: String,
    },
}

/// A possibly wrapped type reference such as `[Parameter]` or `ID!`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeRef {
    Named(String),
    List(Box<TypeRef>),
    NonNull(Box<TypeRef>),
}

impl TypeRef {
    pub fn named(name: &str) -> Self {
        TypeRef::Named(name.to_string())
    }

    pub fn base_name(&self) -> &str {
        match self {
            TypeRef::Named(n) => n,
            TypeRef::List(t) | TypeRef::NonNull(t) => t.base_name(),
        }
    }

    pub fn is_non_null(&self) -> bool {
        matches!(self, TypeRef::NonNull(_))
    }

    /// The type with an outer non-null marker removed.
    pub fn nullable(&self) -> &TypeRef {
        match self {
            TypeRef::NonNull(t) => t,
            t => t,
        }
    }

    pub fn is_list(&self) -> bool {
        matches!(self.nullable(), TypeRef::List(_))
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Named(n) => f.write_str(n),
            TypeRef::List(t) => write!(f, "[{t}]"),
            TypeRef::NonNull(t) => write!(f, "{t}!"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDef {
    pub name: String,
    pub description: Option<String>,
    pub ty: TypeRef,
    pub arguments: Vec<FieldDef>,
}

/// An object (`type`) or `input` declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectTypeDef {
    pub name: String,
    pub description: Option<String>,
    pub fields: Vec<FieldDef>,
}

impl ObjectTypeDef {
    pub fn field(&self, name: &str) -> Option<&FieldDef> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumDef {
    pub name: String,
    pub description: Option<String>,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SchemaRoots {
    pub query: Option<String>,
    pub mutation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDef {
    pub name: String,
    pub description: Option<String>,
    pub source_type: String,
    /// The `<Stem>Target` object type carrying the reference and edge attributes.
    pub target_type_name: String,
    pub target_types: BTreeSet<String>,
    pub inverse_name: Option<String>,
    pub edge_attributes: Vec<FieldDef>,
    /// Whether this direction is the stored and serialized one of its pair.
    pub primary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityTypeDef {
    pub name: String,
    /// The formal definition carried by the declaration's description.
    pub description: Option<String>,
    pub identity_type: String,
    pub attributes_type: Option<String>,
    pub relations_type: Option<String>,
    pub attributes: Vec<FieldDef>,
    pub relations: Vec<RelationDef>,
    pub parameters_allowed: bool,
}

impl EntityTypeDef {
    pub fn attribute(&self, name: &str) -> Option<&FieldDef> {
        self.attributes.iter().find(|f| f.name == name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationDef> {
        self.relations.iter().find(|r| r.name == name)
    }
}

/// One entity collection of the model root type, e.g. `component: [Component]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collection {
    pub field: String,
    pub entity_type: String,
}

/// The parsed, immutable type system.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MetamodelSchema {
    pub roots: Option<SchemaRoots>,
    pub object_types: BTreeMap<String, ObjectTypeDef>,
    pub input_types: BTreeMap<String, ObjectTypeDef>,
    pub enums: BTreeMap<String, EnumDef>,
    pub entity_types: BTreeMap<String, EntityTypeDef>,
    /// Name of the type holding the entity collections (`CPSsystemModel`).
    pub model_type: Option<String>,
    /// Query root field returning the model type (`cpsSystemModel`).
    pub model_field: Option<String>,
    pub collections: Vec<Collection>,
    /// Relation name to effective inverse name, across all entity types.
    pub inverses: BTreeMap<String, String>,
    /// Relation names whose inverse was declared explicitly.
    declared_inverses: BTreeMap<String, String>,
}

/// Parse schema source text into a registry.
///
/// Unresolved references do not fail the parse; [`validate_schema`] reports them.
pub fn parse_sdl(text: &str) -> Result<MetamodelSchema, SchemaError> {
    let decls = sdl::parse(text)?;
    Ok(MetamodelSchema::assemble(decls))
}

/// The embedded CPS metamodel schema.
pub fn builtin_schema() -> Arc<MetamodelSchema> {
    static BUILTIN: OnceLock<Arc<MetamodelSchema>> = OnceLock::new();
    BUILTIN
        .get_or_init(|| Arc::new(parse_sdl(BUILTIN_SOURCE).expect("embedded schema parses")))
        .clone()
}

/// Source text of the embedded schema.
pub fn builtin_schema_source() -> &'static str {
    BUILTIN_SOURCE
}

/// Canonical schema text: roots, then object, input and enum declarations each sorted by name.
pub fn serialize_schema(schema: &MetamodelSchema) -> String {
    print::print(schema)
}

pub fn lookup_relation<'a>(
    schema: &'a MetamodelSchema,
    entity_type: &str,
    relation: &str,
) -> Result<&'a RelationDef, LookupError> {
    schema.lookup_relation(entity_type, relation)
}

fn stem(target_type_name: &str) -> &str {
    target_type_name
        .strip_suffix("Target")
        .unwrap_or(target_type_name)
}

impl MetamodelSchema {
    fn assemble(decls: sdl::Declarations) -> Self {
        let mut schema = MetamodelSchema {
            roots: decls.roots,
            object_types: decls.objects,
            input_types: decls.inputs,
            enums: decls.enums,
            ..Default::default()
        };
        schema.derive_entities();
        schema.derive_inverses();
        schema.derive_collections();
        schema
    }

    fn derive_entities(&mut self) {
        let mut entities = BTreeMap::new();
        for ty in self.object_types.values() {
            let Some(identity) = ty.field("identity") else {
                continue;
            };
            if !self.object_types.contains_key(identity.ty.base_name()) {
                continue;
            }
            let attributes_type = ty.field("attributes").map(|f| f.ty.base_name().to_string());
            let relations_type = ty.field("relations").map(|f| f.ty.base_name().to_string());
            let attributes = attributes_type
                .as_deref()
                .and_then(|n| self.object_types.get(n))
                .map(|t| t.fields.clone())
                .unwrap_or_default();
            let relations = relations_type
                .as_deref()
                .and_then(|n| self.object_types.get(n))
                .map(|rel| {
                    rel.fields
                        .iter()
                        .map(|f| self.relation_def(&ty.name, f))
                        .collect()
                })
                .unwrap_or_default();
            entities.insert(
                ty.name.clone(),
                EntityTypeDef {
                    name: ty.name.clone(),
                    description: ty.description.clone(),
                    identity_type: identity.ty.base_name().to_string(),
                    attributes_type,
                    relations_type,
                    attributes,
                    relations,
                    parameters_allowed: ty.field("parameters").is_some(),
                },
            );
        }
        self.entity_types = entities;
    }

    fn relation_def(&self, source: &str, field: &FieldDef) -> RelationDef {
        let target_type_name = field.ty.base_name().to_string();
        let stem = stem(&target_type_name);
        let target_types = self
            .enums
            .get(&format!("{stem}TargetType"))
            .map(|e| e.values.iter().cloned().collect())
            .unwrap_or_default();
        let edge_attributes = self
            .object_types
            .get(&target_type_name)
            .map(|t| {
                t.fields
                    .iter()
                    .filter(|f| !TARGET_REFERENCE_FIELDS.contains(&f.name.as_str()))
                    .cloned()
                    .collect()
            })
            .unwrap_or_default();
        RelationDef {
            name: field.name.clone(),
            description: field.description.clone(),
            source_type: source.to_string(),
            target_type_name,
            target_types,
            inverse_name: None,
            edge_attributes,
            primary: true,
        }
    }

    fn derive_inverses(&mut self) {
        let mut declared: BTreeMap<String, String> = BTreeMap::new();
        for et in self.entity_types.values() {
            for rel in &et.relations {
                let key = format!("{}Inverse", stem(&rel.target_type_name));
                if let Some(inv) = self.enums.get(&key).and_then(|e| e.values.first()) {
                    declared
                        .entry(rel.name.clone())
                        .or_insert_with(|| inv.clone());
                }
            }
        }
        let names: BTreeSet<String> = self
            .entity_types
            .values()
            .flat_map(|e| e.relations.iter().map(|r| r.name.clone()))
            .collect();
        let mut effective = declared.clone();
        for name in &names {
            if effective.contains_key(name) {
                continue;
            }
            // First declarer by name order wins; asymmetry is left to validation.
            if let Some((decl, _)) = declared.iter().find(|(_, inv)| *inv == name) {
                effective.insert(name.clone(), decl.clone());
            }
        }
        for et in self.entity_types.values_mut() {
            for rel in &mut et.relations {
                rel.inverse_name = effective.get(&rel.name).cloned();
                rel.primary = match (&rel.inverse_name, declared.contains_key(&rel.name)) {
                    (None, _) => true,
                    (Some(inv), true) => !declared.contains_key(inv) || rel.name <= *inv,
                    (Some(inv), false) => *inv == rel.name,
                };
            }
        }
        self.inverses = effective;
        self.declared_inverses = declared;
    }

    fn derive_collections(&mut self) {
        let query = self
            .roots
            .as_ref()
            .and_then(|r| r.query.clone())
            .unwrap_or_else(|| "Query".to_string());
        let Some(query_type) = self.object_types.get(&query) else {
            return;
        };
        for field in &query_type.fields {
            let Some(model) = self.object_types.get(field.ty.base_name()) else {
                continue;
            };
            let collections: Vec<Collection> = model
                .fields
                .iter()
                .filter(|f| f.ty.is_list() && self.entity_types.contains_key(f.ty.base_name()))
                .map(|f| Collection {
                    field: f.name.clone(),
                    entity_type: f.ty.base_name().to_string(),
                })
                .collect();
            if !collections.is_empty() {
                self.model_type = Some(model.name.clone());
                self.model_field = Some(field.name.clone());
                self.collections = collections;
                return;
            }
        }
    }

    pub fn query_type_name(&self) -> &str {
        self.roots
            .as_ref()
            .and_then(|r| r.query.as_deref())
            .unwrap_or("Query")
    }

    pub fn mutation_type_name(&self) -> Option<&str> {
        match &self.roots {
            Some(r) => r.mutation.as_deref(),
            None => self
                .object_types
                .contains_key("Mutation")
                .then_some("Mutation"),
        }
    }

    pub fn root_query_fields(&self) -> &[FieldDef] {
        self.object_types
            .get(self.query_type_name())
            .map(|t| t.fields.as_slice())
            .unwrap_or(&[])
    }

    pub fn root_mutation_fields(&self) -> &[FieldDef] {
        self.mutation_type_name()
            .and_then(|m| self.object_types.get(m))
            .map(|t| t.fields.as_slice())
            .unwrap_or(&[])
    }

    pub fn entity_type(&self, name: &str) -> Option<&EntityTypeDef> {
        self.entity_types.get(name)
    }

    pub fn collection_of(&self, entity_type: &str) -> Option<&Collection> {
        self.collections
            .iter()
            .find(|c| c.entity_type == entity_type)
    }

    pub fn collection_named(&self, field: &str) -> Option<&Collection> {
        self.collections.iter().find(|c| c.field == field)
    }

    pub fn lookup_relation(
        &self,
        entity_type: &str,
        relation: &str,
    ) -> Result<&RelationDef, LookupError> {
        let et = self
            .entity_types
            .get(entity_type)
            .ok_or_else(|| LookupError::UnknownEntityType(entity_type.to_string()))?;
        et.relation(relation)
            .ok_or_else(|| LookupError::UnknownRelation {
                entity_type: entity_type.to_string(),
                relation: relation.to_string(),
            })
    }

    /// Whether any entity type declares a relation with this name.
    pub fn relation_name_known(&self, relation: &str) -> bool {
        self.entity_types
            .values()
            .any(|e| e.relation(relation).is_some())
    }

    pub fn inverse_of(&self, relation: &str) -> Option<&str> {
        self.inverses.get(relation).map(String::as_str)
    }

    /// All relation definitions, ordered by entity type then declaration.
    pub fn relations(&self) -> impl Iterator<Item = &RelationDef> {
        self.entity_types.values().flat_map(|e| e.relations.iter())
    }

    pub fn is_scalar(name: &str) -> bool {
        SCALARS.contains(&name)
    }
}
