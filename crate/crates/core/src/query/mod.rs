//! Read queries over a store: a selection-set subset of GraphQL.
//!
//! One operation per query, literal arguments only. Results are projection
//! documents `{"data": ...}` holding exactly the selected fields; a selected
//! field with no value is `null`, an unselected one is absent.

mod exec;
mod parse;
mod predicate;

use std::fmt::Write;

use thiserror::Error;

use crate::lexer::Pos;
use crate::schema::{MetamodelSchema, TypeRef};
use crate::value::Value;

pub use exec::{execute, execute_on};
pub use parse::parse_query;
pub use predicate::{select_by_predicate, Comparator, PredicateError};

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    String(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Enum(String),
    Null,
}

impl Literal {
    pub fn to_value(&self) -> Value {
        match self {
            Literal::String(s) | Literal::Enum(s) => Value::String(s.clone()),
            Literal::Int(i) => Value::Int(*i),
            Literal::Float(x) => Value::Float(*x),
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Null => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub name: String,
    pub pos: Pos,
    pub arguments: Vec<(String, Literal, Pos)>,
    pub selections: Vec<Selection>,
}

impl Selection {
    pub fn argument(&self, name: &str) -> Option<&Literal> {
        self.arguments
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, l, _)| l)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    pub name: Option<String>,
    pub pos: Pos,
    pub selections: Vec<Selection>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: {construct} are outside the supported query subset")]
    Subset { pos: Pos, construct: String },
    #[error("{pos}: {message}")]
    Validation { pos: Pos, message: String },
    #[error("unknown project `{0}`")]
    UnknownProject(String),
}

impl QueryError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            QueryError::Syntax { pos, .. }
            | QueryError::Subset { pos, .. }
            | QueryError::Validation { pos, .. } => Some(*pos),
            QueryError::UnknownProject(_) => None,
        }
    }
}

/// Check every selection against the schema's Query type.
pub fn validate_query(schema: &MetamodelSchema, ast: &QueryAst) -> Result<(), QueryError> {
    check_selections(schema, schema.query_type_name(), &ast.selections)
}

fn invalid(pos: Pos, message: String) -> QueryError {
    QueryError::Validation { pos, message }
}

fn check_selections(
    schema: &MetamodelSchema,
    type_name: &str,
    selections: &[Selection],
) -> Result<(), QueryError> {
    let ty = schema.object_types.get(type_name).ok_or_else(|| {
        invalid(
            Pos::default(),
            format!("type `{type_name}` is not declared"),
        )
    })?;
    let mut seen = std::collections::BTreeSet::new();
    for sel in selections {
        let field = ty.field(&sel.name).ok_or_else(|| {
            invalid(
                sel.pos,
                format!("`{type_name}` has no field `{}`", sel.name),
            )
        })?;
        if !seen.insert(sel.name.as_str()) {
            return Err(invalid(
                sel.pos,
                format!("field `{}` is selected more than once", sel.name),
            ));
        }
        for (arg, lit, pos) in &sel.arguments {
            let def = field
                .arguments
                .iter()
                .find(|a| &a.name == arg)
                .ok_or_else(|| {
                    invalid(
                        *pos,
                        format!("`{type_name}.{}` has no argument `{arg}`", sel.name),
                    )
                })?;
            check_literal(schema, &def.ty, lit)
                .map_err(|m| invalid(*pos, format!("argument `{arg}`: {m}")))?;
        }
        for def in &field.arguments {
            if def.ty.is_non_null() && sel.argument(&def.name).is_none() {
                return Err(invalid(
                    sel.pos,
                    format!(
                        "`{type_name}.{}` requires argument `{}`",
                        sel.name, def.name
                    ),
                ));
            }
        }
        let base = field.ty.base_name();
        let composite = schema.object_types.contains_key(base);
        match (composite, sel.selections.is_empty()) {
            (true, true) => {
                return Err(invalid(
                    sel.pos,
                    format!(
                        "field `{}` of type `{}` needs a selection set",
                        sel.name, field.ty
                    ),
                ))
            }
            (false, false) => {
                return Err(invalid(
                    sel.pos,
                    format!(
                        "field `{}` of type `{}` has no subfields",
                        sel.name, field.ty
                    ),
                ))
            }
            (true, false) => check_selections(schema, base, &sel.selections)?,
            (false, true) => {}
        }
    }
    Ok(())
}

fn check_literal(schema: &MetamodelSchema, ty: &TypeRef, lit: &Literal) -> Result<(), String> {
    let enum_typed = schema.enums.contains_key(ty.base_name());
    match lit {
        Literal::Enum(_) if !enum_typed => {
            return Err(format!("expected `{ty}`, found an enum value"))
        }
        Literal::String(_) if enum_typed => return Err(format!("expected `{ty}`, found a string")),
        _ => {}
    }
    schema
        .coerce_value(ty, lit.to_value(), "")
        .map(|_| ())
        .map_err(|e| e.message)
}

/// A query selecting every field the export document carries for the given
/// collections (all collections when `None`), in the export's shape.
pub fn full_selection_query(
    schema: &MetamodelSchema,
    project_id: &str,
    collections: Option<&[&str]>,
) -> String {
    let mut q = format!(
        "{{\n  {}(projectId: {}) {{\n    project {{ id name }}\n",
        schema.model_field.as_deref().unwrap_or("cpsSystemModel"),
        serde_json::to_string(project_id).expect("string encodes")
    );
    for c in &schema.collections {
        if collections.is_some_and(|only| !only.contains(&c.field.as_str())) {
            continue;
        }
        let et = schema.entity_type(&c.entity_type).expect("collection type");
        writeln!(q, "    {} {{", c.field).unwrap();
        writeln!(q, "      identity {{ id name number }}").unwrap();
        if !et.attributes.is_empty() {
            let attrs: Vec<String> = et
                .attributes
                .iter()
                .map(|f| leaf(schema, &f.name, &f.ty))
                .collect();
            writeln!(q, "      attributes {{ {} }}", attrs.join(" ")).unwrap();
        }
        if et.parameters_allowed {
            writeln!(
                q,
                "      parameters {{ name objective threshold design units }}"
            )
            .unwrap();
        }
        let rels: Vec<String> = et
            .relations
            .iter()
            .filter(|r| r.primary)
            .map(|r| {
                let mut fields = vec!["id", "name", "number", "entityType"];
                fields.extend(r.edge_attributes.iter().map(|f| f.name.as_str()));
                format!("{} {{ {} }}", r.name, fields.join(" "))
            })
            .collect();
        if !rels.is_empty() {
            writeln!(q, "      relations {{ {} }}", rels.join(" ")).unwrap();
        }
        writeln!(q, "    }}").unwrap();
    }
    q.push_str("  }\n}\n");
    q
}

fn leaf(schema: &MetamodelSchema, name: &str, ty: &TypeRef) -> String {
    match schema.object_types.get(ty.base_name()) {
        Some(obj) => {
            let inner: Vec<String> = obj
                .fields
                .iter()
                .map(|f| leaf(schema, &f.name, &f.ty))
                .collect();
            format!("{name} {{ {} }}", inner.join(" "))
        }
        None => name.to_string(),
    }
}
