//! Ontological metamodel tooling for cyber-physical system design.
//!
//! The crate validates system models against a GraphQL-described metamodel,
//! stores them as a bidirectional property graph, exchanges them as JSON
//! documents and deltas, answers read queries, and runs the safety (STPA),
//! security (attack exposure) and resilience (tradespace) analyses.

pub mod analysis;
pub mod diagnostics;
pub mod fixture;
pub mod interchange;
mod lexer;
pub mod query;
pub mod schema;
pub mod store;
pub mod value;

pub use diagnostics::{Diagnostic, Severity};
pub use lexer::Pos;
pub use schema::{builtin_schema, parse_sdl, validate_schema, MetamodelSchema};
pub use store::{EntityId, Store};
pub use value::Value;

/// Version tag written into every document this crate produces.
pub const FORMAT_VERSION: &str = "1";

/// Sorted keys, two-space indentation, trailing newline.
pub fn canonical_json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable value");
    let mut s = serde_json::to_string_pretty(&v).expect("json value prints");
    s.push('\n');
    s
}
