use std::collections::{BTreeMap, BTreeSet};

use super::{FieldDef, MetamodelSchema, ObjectTypeDef, TypeRef};
use crate::diagnostics::Diagnostic;

/// Check the registry invariants. An empty result means the schema is usable
/// as the backing type system of a model store.
pub fn validate_schema(schema: &MetamodelSchema) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    check_roots(schema, &mut out);
    for ty in schema.object_types.values() {
        check_fields(schema, ty, false, &mut out);
    }
    for ty in schema.input_types.values() {
        check_fields(schema, ty, true, &mut out);
    }
    check_entities(schema, &mut out);
    check_relations(schema, &mut out);
    out
}

fn resolves(schema: &MetamodelSchema, name: &str) -> bool {
    MetamodelSchema::is_scalar(name)
        || schema.object_types.contains_key(name)
        || schema.input_types.contains_key(name)
        || schema.enums.contains_key(name)
}

fn check_roots(schema: &MetamodelSchema, out: &mut Vec<Diagnostic>) {
    let Some(roots) = &schema.roots else { return };
    for (op, ty) in [("query", &roots.query), ("mutation", &roots.mutation)] {
        if let Some(ty) = ty {
            if !schema.object_types.contains_key(ty) {
                out.push(Diagnostic::error(
                    "unresolved-reference",
                    format!("schema.{op}"),
                    format!("root type `{ty}` is not declared"),
                ));
            }
        }
    }
}

fn check_fields(
    schema: &MetamodelSchema,
    ty: &ObjectTypeDef,
    is_input: bool,
    out: &mut Vec<Diagnostic>,
) {
    let mut seen = BTreeSet::new();
    for field in &ty.fields {
        let path = format!("{}.{}", ty.name, field.name);
        if !seen.insert(field.name.as_str()) {
            out.push(Diagnostic::error(
                "duplicate-field",
                &path,
                format!("field `{}` declared more than once", field.name),
            ));
        }
        check_type_ref(schema, &path, &field.ty, is_input, out);
        for arg in &field.arguments {
            check_type_ref(schema, &format!("{path}({})", arg.name), &arg.ty, true, out);
        }
    }
}

fn check_type_ref(
    schema: &MetamodelSchema,
    path: &str,
    ty: &TypeRef,
    input_position: bool,
    out: &mut Vec<Diagnostic>,
) {
    let base = ty.base_name();
    if !resolves(schema, base) {
        out.push(Diagnostic::error(
            "unresolved-reference",
            path,
            format!("type `{base}` is not declared"),
        ));
    } else if input_position && schema.object_types.contains_key(base) {
        out.push(Diagnostic::error(
            "invalid-input-type",
            path,
            format!("object type `{base}` used in input position"),
        ));
    } else if !input_position && schema.input_types.contains_key(base) {
        out.push(Diagnostic::error(
            "invalid-output-type",
            path,
            format!("input type `{base}` used in output position"),
        ));
    }
}

fn check_entities(schema: &MetamodelSchema, out: &mut Vec<Diagnostic>) {
    for et in schema.entity_types.values() {
        let path = format!("{}.identity", et.name);
        let identity = &schema.object_types[&et.identity_type];
        let expected = [("id", "ID!"), ("name", "String!"), ("number", "String!")];
        for (name, ty) in expected {
            match identity.field(name) {
                Some(f) if f.ty.to_string() == ty => {}
                Some(f) => out.push(Diagnostic::error(
                    "identity-pattern",
                    format!("{path}.{name}"),
                    format!("identity field `{name}` must be `{ty}`, found `{}`", f.ty),
                )),
                None => out.push(Diagnostic::error(
                    "identity-pattern",
                    &path,
                    format!("identity block `{}` lacks field `{name}`", identity.name),
                )),
            }
        }
        if let Some(extra) = identity
            .fields
            .iter()
            .find(|f| !expected.iter().any(|(n, _)| *n == f.name))
        {
            out.push(Diagnostic::error(
                "identity-pattern",
                format!("{path}.{}", extra.name),
                "identity block may only hold id, name and number",
            ));
        }
        if let Some(ty) = schema.object_types.get(&et.name) {
            if let Some(p) = ty.field("parameters") {
                if !p.ty.is_list() || !schema.object_types.contains_key(p.ty.base_name()) {
                    out.push(Diagnostic::error(
                        "entity-pattern",
                        format!("{}.parameters", et.name),
                        "parameters must be a list of an object type",
                    ));
                }
            }
        }
    }
}

fn check_relations(schema: &MetamodelSchema, out: &mut Vec<Diagnostic>) {
    for rel in schema.relations() {
        let path = format!("{}.relations.{}", rel.source_type, rel.name);
        let Some(target) = schema.object_types.get(&rel.target_type_name) else {
            continue;
        };
        match target.field("id") {
            Some(f) if f.ty.base_name() == "ID" => {}
            _ => out.push(Diagnostic::error(
                "relation-pattern",
                &path,
                format!("target type `{}` needs an `id: ID` field", target.name),
            )),
        }
        if rel.target_types.is_empty() {
            out.push(Diagnostic::error(
                "missing-target-types",
                &path,
                format!(
                    "no `{}TargetType` enum lists the allowed targets",
                    super::stem(&rel.target_type_name)
                ),
            ));
        }
        if rel.inverse_name.is_none() {
            out.push(Diagnostic::error(
                "missing-inverse",
                &path,
                format!("relation `{}` has no inverse", rel.name),
            ));
        }
    }

    // Target-type enums are shared by every source of a relation; report each
    // bad value once, at the enum.
    let target_enums: BTreeSet<String> = schema
        .relations()
        .map(|r| format!("{}TargetType", super::stem(&r.target_type_name)))
        .collect();
    for name in &target_enums {
        let Some(e) = schema.enums.get(name) else {
            continue;
        };
        for v in &e.values {
            if !schema.entity_types.contains_key(v) {
                out.push(Diagnostic::error(
                    "unresolved-reference",
                    format!("{name}.{v}"),
                    format!("relation target `{v}` is not an entity type"),
                ));
            }
        }
    }

    let asymmetric = asymmetric_relations(schema, out);

    for rel in schema.relations() {
        let Some(inv) = rel.inverse_name.as_deref() else {
            continue;
        };
        if asymmetric.contains(rel.name.as_str()) {
            continue;
        }
        let path = format!("{}.relations.{}", rel.source_type, rel.name);
        for t in &rel.target_types {
            let Some(target_et) = schema.entity_types.get(t) else {
                continue;
            };
            let Some(back) = target_et.relation(inv) else {
                out.push(Diagnostic::error(
                    "missing-inverse",
                    &path,
                    format!("target type `{t}` does not declare inverse relation `{inv}`"),
                ));
                continue;
            };
            if !back.target_types.contains(&rel.source_type) {
                out.push(Diagnostic::error(
                    "inverse-target-mismatch",
                    &path,
                    format!(
                        "`{t}.{inv}` does not allow `{}` as a target",
                        rel.source_type
                    ),
                ));
            }
            if !same_fields(&back.edge_attributes, &rel.edge_attributes) {
                out.push(Diagnostic::error(
                    "edge-attribute-mismatch",
                    &path,
                    format!("edge attributes differ from inverse `{t}.{inv}`"),
                ));
            }
        }
    }
}

fn same_fields(a: &[FieldDef], b: &[FieldDef]) -> bool {
    let key = |f: &[FieldDef]| -> BTreeMap<String, String> {
        f.iter()
            .map(|f| (f.name.clone(), f.ty.to_string()))
            .collect()
    };
    key(a) == key(b)
}

/// Report each group of relations linked by inverse declarations where
/// `inverse(inverse(r)) != r` for some member; returns all grouped names.
fn asymmetric_relations<'a>(
    schema: &'a MetamodelSchema,
    out: &mut Vec<Diagnostic>,
) -> BTreeSet<&'a str> {
    let inv = &schema.inverses;
    let bad: BTreeSet<&str> = inv
        .iter()
        .filter(|(r, i)| inv.get(i.as_str()) != Some(*r))
        .map(|(r, _)| r.as_str())
        .collect();
    if bad.is_empty() {
        return bad;
    }
    // Union-find over the undirected inverse graph.
    let names: Vec<&str> = inv
        .iter()
        .flat_map(|(a, b)| [a.as_str(), b.as_str()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut parent: Vec<usize> = (0..names.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for (a, b) in inv {
        let (x, y) = (index[a.as_str()], index[b.as_str()]);
        let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
        parent[rx] = ry;
    }
    let mut groups: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (i, n) in names.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(n);
    }
    let mut flagged = BTreeSet::new();
    for members in groups.values() {
        if !members.iter().any(|m| bad.contains(m)) {
            continue;
        }
        let chain: Vec<String> = members
            .iter()
            .filter(|m| bad.contains(*m))
            .map(|m| {
                format!(
                    "{m} -> {} -> {}",
                    inv[*m],
                    inv.get(inv[*m].as_str()).map_or("?", |s| s)
                )
            })
            .collect();
        out.push(Diagnostic::error(
            "inverse-asymmetry",
            format!("relations.{}", members.join("|")),
            format!(
                "inverse declarations are not symmetric: {}",
                chain.join("; ")
            ),
        ));
        flagged.extend(members.iter().copied());
    }
    flagged
}
