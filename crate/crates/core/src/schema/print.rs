use std::fmt::Write;

use super::{FieldDef, MetamodelSchema, ObjectTypeDef};

pub(super) fn print(schema: &MetamodelSchema) -> String {
    let mut blocks: Vec<String> = Vec::new();
    if let Some(roots) = &schema.roots {
        let mut b = String::from("schema {\n");
        if let Some(q) = &roots.query {
            writeln!(b, "  query: {q}").unwrap();
        }
        if let Some(m) = &roots.mutation {
            writeln!(b, "  mutation: {m}").unwrap();
        }
        b.push('}');
        blocks.push(b);
    }
    for ty in schema.object_types.values() {
        blocks.push(object("type", ty));
    }
    for ty in schema.input_types.values() {
        blocks.push(object("input", ty));
    }
    for e in schema.enums.values() {
        let mut b = description(e.description.as_deref(), "");
        writeln!(b, "enum {} {{", e.name).unwrap();
        for v in &e.values {
            writeln!(b, "  {v}").unwrap();
        }
        b.push('}');
        blocks.push(b);
    }
    let mut out = blocks.join("\n\n");
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

fn object(keyword: &str, ty: &ObjectTypeDef) -> String {
    let mut b = description(ty.description.as_deref(), "");
    writeln!(b, "{keyword} {} {{", ty.name).unwrap();
    for f in &ty.fields {
        b.push_str(&description(f.description.as_deref(), "  "));
        writeln!(b, "  {}", field(f)).unwrap();
    }
    b.push('}');
    b
}

fn field(f: &FieldDef) -> String {
    if f.arguments.is_empty() {
        format!("{}: {}", f.name, f.ty)
    } else {
        let args: Vec<String> = f
            .arguments
            .iter()
            .map(|a| format!("{}: {}", a.name, a.ty))
            .collect();
        format!("{}({}): {}", f.name, args.join(", "), f.ty)
    }
}

fn description(text: Option<&str>, indent: &str) -> String {
    let Some(text) = text else {
        return String::new();
    };
    let mut b = format!("{indent}\"\"\"\n");
    for line in text.replace("\"\"\"", "\\\"\"\"").lines() {
        if line.is_empty() {
            b.push('\n');
        } else {
            writeln!(b, "{indent}{line}").unwrap();
        }
    }
    writeln!(b, "{indent}\"\"\"").unwrap();
    b
}

#[cfg(test)]
mod tests {
    use crate::schema::{builtin_schema, parse_sdl, serialize_schema};

    #[test]
    fn builtin_round_trips_structurally() {
        let s = builtin_schema();
        let text = serialize_schema(&s);
        let again = parse_sdl(&text).unwrap();
        assert_eq!(*s, again);
    }

    #[test]
    fn serialization_is_idempotent() {
        let src =
            "# comment\nenum E { B A }\n\"doc\" type T { x(a: Int!): [E!]! }\nschema { query: T }";
        let once = serialize_schema(&parse_sdl(src).unwrap());
        let twice = serialize_schema(&parse_sdl(&once).unwrap());
        assert_eq!(once, twice);
        assert!(once.starts_with("schema {\n  query: T\n}"));
    }
}
