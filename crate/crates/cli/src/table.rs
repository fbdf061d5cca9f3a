//! Text rendering of query results.

use std::collections::BTreeSet;

use cpsmeta::analysis::render_table;
use serde_json::{Map, Value};

/// Arrays of objects become tables with one column per leaf path; other
/// values are printed as `key: value` lines.
pub fn render(data: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(root) = data {
        for (field, value) in root {
            section(&mut out, field, value);
        }
    }
    out
}

fn section(out: &mut String, title: &str, value: &Value) {
    match value {
        Value::Array(items) => {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("{title} ({})\n", items.len()));
            if !items.is_empty() {
                out.push_str(&rows(items));
            }
        }
        Value::Object(m) if m.values().any(|v| v.is_array()) => {
            for (k, v) in m {
                section(out, k, v);
            }
        }
        other => {
            let mut flat = Vec::new();
            flatten("", other, &mut flat);
            for (k, v) in flat {
                let key = if k.is_empty() {
                    title.to_string()
                } else {
                    format!("{title}.{k}")
                };
                out.push_str(&format!("{key}: {v}\n"));
            }
        }
    }
}

fn rows(items: &[Value]) -> String {
    let flat: Vec<Vec<(String, String)>> = items
        .iter()
        .map(|v| {
            let mut f = Vec::new();
            flatten("", v, &mut f);
            f
        })
        .collect();
    // column order: first appearance
    let mut seen = BTreeSet::new();
    let mut columns = Vec::new();
    for row in &flat {
        for (k, _) in row {
            if seen.insert(k.clone()) {
                columns.push(k.clone());
            }
        }
    }
    let table: Vec<Vec<String>> = flat
        .iter()
        .map(|row| {
            columns
                .iter()
                .map(|c| {
                    row.iter()
                        .find(|(k, _)| k == c)
                        .map(|(_, v)| v.clone())
                        .unwrap_or_default()
                })
                .collect()
        })
        .collect();
    let header: Vec<&str> = columns
        .iter()
        .map(|c| if c.is_empty() { "value" } else { c.as_str() })
        .collect();
    render_table(&header, &table)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        other => out.push((prefix.to_string(), cell(other))),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(item).collect::<Vec<_>>().join("; "),
        other => other.to_string(),
    }
}

// Relation targets are shown by name when the query selected one.
fn item(v: &Value) -> String {
    match v {
        Value::Object(m) => label(m).unwrap_or_else(|| v.to_string()),
        other => cell(other),
    }
}

fn label(m: &Map<String, Value>) -> Option<String> {
    m.get("name")
        .or_else(|| m.get("id"))
        .and_then(Value::as_str)
        .map(str::to_string)
}
