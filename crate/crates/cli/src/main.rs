//! `cpsmeta` — validate, query, diff, patch and analyse system models.

mod table;
mod workspace;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpsmeta::analysis::{self, AnalysisError, TradespaceConfig};
use cpsmeta::diagnostics::{has_errors, render_json, render_text};
use cpsmeta::interchange::{self, DeltaError, ImportError, ModelDelta, ModelDocument};
use cpsmeta::query::{self, QueryError};
use cpsmeta::schema::{builtin_schema_source, SchemaError};
use cpsmeta::{builtin_schema, canonical_json, Diagnostic, MetamodelSchema, Store};

use workspace::{Workspace, WORKSPACE_ENV};

/// A failed command: message for stderr plus process exit status.
#[derive(Debug)]
pub struct Fail {
    code: u8,
    message: String,
}

impl Fail {
    /// Validation or analysis failure.
    pub fn invalid(message: impl Into<String>) -> Fail {
        Fail {
            code: 1,
            message: message.into(),
        }
    }

    /// Bad flags, unparseable input.
    pub fn usage(message: impl Into<String>) -> Fail {
        Fail {
            code: 2,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Fail {
        Fail {
            code: 3,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl fmt::Display for Fail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

type CmdResult = Result<(), Fail>;

#[derive(Parser)]
#[command(
    name = "cpsmeta",
    version,
    about = "Metamodel tooling for cyber-physical system models"
)]
struct Cli {
    /// Workspace directory holding `cpsmeta.toml` and project documents.
    #[arg(long, global = true, env = WORKSPACE_ENV)]
    workspace: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model document against the metamodel.
    Validate {
        /// Document path or workspace project id.
        model: String,
        /// Metamodel SDL to validate against instead of the built-in one.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Treat warnings as failures.
        #[arg(long)]
        strict: bool,
        #[arg(long, value_enum, default_value_t = DiagFormat::Text)]
        format: DiagFormat,
    },
    /// Run a read query and print the projection.
    Query {
        model: String,
        /// Inline query text.
        #[arg(conflicts_with = "query_file", required_unless_present = "query_file")]
        query: Option<String>,
        #[arg(long, short = 'f')]
        query_file: Option<PathBuf>,
        #[arg(long, short = 'o', value_enum)]
        output: Option<OutputFormat>,
    },
    /// Apply a delta and write the resulting document.
    Apply {
        model: String,
        delta: PathBuf,
        /// Output path; standard output when omitted.
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Compute the delta that turns BASE into TARGET.
    Diff {
        base: String,
        target: String,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Run an analysis pass.
    Report {
        #[command(subcommand)]
        pass: Pass,
    },
    /// List the workspace's projects.
    Projects {
        #[arg(long, short = 'o', value_enum)]
        output: Option<OutputFormat>,
    },
    /// Demonstration model.
    Fixture {
        #[command(subcommand)]
        action: FixtureAction,
    },
    /// Metamodel schema utilities.
    Schema {
        #[command(subcommand)]
        action: SchemaAction,
    },
}

#[derive(Subcommand)]
enum Pass {
    /// Control action × unsafe-action-kind matrix.
    Coverage {
        #[command(flatten)]
        common: ReportArgs,
        /// Exit 1 when any cell is uncovered.
        #[arg(long, overrides_with = "no_fail")]
        fail_on_uncovered: bool,
        /// Always exit 0 (the default).
        #[arg(long)]
        no_fail: bool,
    },
    /// Causal chain from a loss scenario, unsafe action or hazard.
    Trace {
        #[command(flatten)]
        common: ReportArgs,
        #[arg(long, visible_alias = "origin")]
        scenario: String,
    },
    /// Control loop slice for one control action.
    Loop {
        #[command(flatten)]
        common: ReportArgs,
        #[arg(long)]
        control_action: String,
    },
    /// Attack exposure propagated up the builtFrom hierarchy.
    Exposure {
        #[command(flatten)]
        common: ReportArgs,
    },
    /// Resilient mode complexity/effectiveness table.
    Tradespace {
        #[command(flatten)]
        common: ReportArgs,
        #[command(flatten)]
        weights: WeightFlags,
    },
    /// Check observed state against an unsafe action's contexts.
    Context {
        #[command(flatten)]
        common: ReportArgs,
        #[arg(long)]
        unsafe_action: String,
        /// Observed variable, `name=value`; repeatable.
        #[arg(long = "observe", value_parser = parse_observation)]
        observations: Vec<(String, f64)>,
    },
}

#[derive(Args)]
struct ReportArgs {
    /// Document path or project id; optional when the workspace has one project.
    model: Option<String>,
    #[arg(long, short = 'o', value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct WeightFlags {
    #[arg(long)]
    likelihood_high: Option<f64>,
    #[arg(long)]
    likelihood_medium: Option<f64>,
    #[arg(long)]
    likelihood_low: Option<f64>,
    #[arg(long)]
    effectiveness_high: Option<f64>,
    #[arg(long)]
    effectiveness_medium: Option<f64>,
    #[arg(long)]
    complexity_high: Option<usize>,
    #[arg(long)]
    complexity_medium: Option<usize>,
}

impl WeightFlags {
    fn over(&self, base: &TradespaceConfig) -> TradespaceConfig {
        let mut c = base.clone();
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(
            likelihood_high,
            likelihood_medium,
            likelihood_low,
            effectiveness_high,
            effectiveness_medium,
            complexity_high,
            complexity_medium
        );
        c
    }
}

#[derive(Subcommand)]
enum FixtureAction {
    /// Write the pipeline demonstration model.
    Emit {
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SchemaAction {
    /// Print the built-in metamodel SDL.
    Emit {
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Parse and check an SDL file.
    Check {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = DiagFormat::Text)]
        format: DiagFormat,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DiagFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Table,
}

fn parse_observation(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected name=value")?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message.trim_end());
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let ws = Workspace::open(cli.workspace.as_deref())?;
    match cli.command {
        Command::Validate {
            model,
            schema,
            strict,
            format,
        } => validate(&ws, &model, schema.as_deref(), strict, format),
        Command::Query {
            model,
            query,
            query_file,
            output,
        } => {
            let text = match (query, query_file) {
                (Some(q), _) => q,
                (None, Some(p)) => read(&p)?,
                (None, None) => return Err(Fail::usage("a query or --query-file is required")),
            };
            let store = load(&ws, &model)?;
            let ast = query::parse_query(&text).map_err(query_fail)?;
            let out = query::execute(&store, &ast).map_err(query_fail)?;
            match output_format(&ws, output) {
                OutputFormat::Json => print!("{}", canonical_json(&out)),
                OutputFormat::Table => print!("{}", table::render(&out["data"])),
            }
            Ok(())
        }
        Command::Apply { model, delta, out } => {
            let store = load(&ws, &model)?;
            let d = ModelDelta::from_json_str(&read(&delta)?).map_err(delta_fail)?;
            let next = interchange::apply_delta(&store, &d).map_err(delta_fail)?;
            let doc = interchange::export_model(&next)
                .map_err(|e| Fail::invalid(format!("result is not a valid model: {e}")))?;
            emit(out.as_deref(), &doc.to_json_string())
        }
        Command::Diff { base, target, out } => {
            let a = load(&ws, &base)?;
            let b = load(&ws, &target)?;
            let d = interchange::diff(&a, &b).map_err(delta_fail)?;
            emit(out.as_deref(), &d.to_json_string())
        }
        Command::Report { pass } => report(&ws, pass),
        Command::Projects { output } => projects(&ws, output),
        Command::Fixture {
            action: FixtureAction::Emit { out },
        } => {
            let doc = interchange::export_model(&cpsmeta::fixture::build_pipeline_model())
                .map_err(|e| Fail::invalid(e.to_string()))?;
            emit(out.as_deref(), &doc.to_json_string())
        }
        Command::Schema {
            action: SchemaAction::Emit { out },
        } => emit(out.as_deref(), builtin_schema_source()),
        Command::Schema {
            action: SchemaAction::Check { path, format },
        } => {
            let schema = cpsmeta::parse_sdl(&read(&path)?).map_err(|e| sdl_fail(&path, e))?;
            let diags = cpsmeta::validate_schema(&schema);
            print_diags(&diags, format);
            if has_errors(&diags) {
                return Err(Fail::invalid(""));
            }
            Ok(())
        }
    }
}

fn validate(
    ws: &Workspace,
    model: &str,
    schema: Option<&Path>,
    strict: bool,
    format: DiagFormat,
) -> CmdResult {
    let schema = match schema {
        Some(p) => load_schema(p)?,
        None => builtin_schema(),
    };
    let path = ws.resolve_model(model);
    let doc = read_document(&path)?;
    let diags = match interchange::import_model(&doc, schema) {
        Ok((_, warnings)) => warnings,
        Err(ImportError::Invalid(diags)) => diags,
        Err(e) => vec![import_diagnostic(e)],
    };
    print_diags(&diags, format);
    if has_errors(&diags) || (strict && !diags.is_empty()) {
        return Err(Fail::invalid(""));
    }
    Ok(())
}

fn report(ws: &Workspace, pass: Pass) -> CmdResult {
    let (common, text, json) = match &pass {
        Pass::Coverage {
            common,
            fail_on_uncovered,
            ..
        } => {
            let store = load_default(ws, common)?;
            let r = analysis::stpa_coverage(&store);
            render_report(ws, common, &r.to_table(), &r)?;
            if *fail_on_uncovered && r.uncovered_cells() > 0 {
                return Err(Fail::invalid(format!(
                    "{} uncovered cell(s)",
                    r.uncovered_cells()
                )));
            }
            return Ok(());
        }
        Pass::Trace { common, scenario } => {
            let store = load_default(ws, common)?;
            let c = analysis::trace_chain(&store, scenario).map_err(analysis_fail)?;
            (common, c.to_table(), to_json(&c))
        }
        Pass::Loop {
            common,
            control_action,
        } => {
            let store = load_default(ws, common)?;
            let s = analysis::control_loop(&store, control_action).map_err(analysis_fail)?;
            (common, s.to_table(), to_json(&s))
        }
        Pass::Exposure { common } => {
            let store = load_default(ws, common)?;
            let m = analysis::propagate_exposure(&store).map_err(analysis_fail)?;
            (common, m.to_table(), to_json(&m))
        }
        Pass::Tradespace { common, weights } => {
            let cfg = weights.over(&ws.tradespace);
            cfg.check().map_err(Fail::usage)?;
            let store = load_default(ws, common)?;
            let rows = analysis::tradespace_with(&store, &cfg);
            (common, analysis::tradespace_table(&rows), to_json(&rows))
        }
        Pass::Context {
            common,
            unsafe_action,
            observations,
        } => {
            let store = load_default(ws, common)?;
            let obs: BTreeMap<String, f64> = observations.iter().cloned().collect();
            let e = analysis::unsafe_context_check(&store, unsafe_action, &obs)
                .map_err(analysis_fail)?;
            let text = format!(
                "{}: {}\n",
                unsafe_action,
                if e.triggered {
                    "unsafe context"
                } else {
                    "no unsafe context"
                }
            );
            (common, text, to_json(&e))
        }
    };
    match output_format(ws, common.format) {
        OutputFormat::Table => print!("{text}"),
        OutputFormat::Json => print!("{json}"),
    }
    Ok(())
}

fn render_report<T: serde::Serialize>(
    ws: &Workspace,
    common: &ReportArgs,
    text: &str,
    value: &T,
) -> CmdResult {
    match output_format(ws, common.format) {
        OutputFormat::Table => print!("{text}"),
        OutputFormat::Json => print!("{}", to_json(value)),
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    canonical_json(v)
}

fn projects(ws: &Workspace, output: Option<OutputFormat>) -> CmdResult {
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for path in ws.project_paths()? {
        let doc = read_document(&path)?;
        if !seen.insert(doc.project.id.clone()) {
            return Err(Fail::invalid(format!(
                "duplicate project id `{}` ({})",
                doc.project.id,
                path.display()
            )));
        }
        if let Some((id, _)) = ws.projects.iter().find(|(_, p)| **p == path) {
            if *id != doc.project.id {
                return Err(Fail::invalid(format!(
                    "{}: document declares project `{}`, configured as `{id}`",
                    path.display(),
                    doc.project.id
                )));
            }
        }
        let n = doc.entity_count();
        rows.push((doc.project, n, path));
    }
    rows.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    match output_format(ws, output) {
        OutputFormat::Table => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|(p, n, path)| {
                    vec![
                        p.id.clone(),
                        p.name.clone().unwrap_or_default(),
                        n.to_string(),
                        relative(&ws.root, path),
                    ]
                })
                .collect();
            print!(
                "{}",
                analysis::render_table(&["id", "name", "entities", "path"], &cells)
            );
        }
        OutputFormat::Json => {
            let list: Vec<_> = rows
                .iter()
                .map(|(p, n, path)| {
                    serde_json::json!({"id": p.id, "name": p.name, "entityCount": n, "path": relative(&ws.root, path)})
                })
                .collect();
            print!(
                "{}",
                canonical_json(&serde_json::json!({ "cpsProjects": list }))
            );
        }
    }
    Ok(())
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .display()
        .to_string()
}

fn output_format(ws: &Workspace, flag: Option<OutputFormat>) -> OutputFormat {
    flag.unwrap_or(match ws.default_format.as_deref() {
        Some("json") => OutputFormat::Json,
        _ => OutputFormat::Table,
    })
}

// ---- loading -------------------------------------------------------------

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::io(path, e))
}

fn read_document(path: &Path) -> Result<ModelDocument, Fail> {
    let text = read(path)?;
    ModelDocument::from_json_str(&text).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn load_schema(path: &Path) -> Result<Arc<MetamodelSchema>, Fail> {
    let schema = cpsmeta::parse_sdl(&read(path)?).map_err(|e| sdl_fail(path, e))?;
    let diags = cpsmeta::validate_schema(&schema);
    if has_errors(&diags) {
        return Err(Fail::invalid(format!(
            "{}: schema is invalid\n{}",
            path.display(),
            render_text(&diags)
        )));
    }
    Ok(Arc::new(schema))
}

/// Import a model; validation errors fail with the diagnostics listed.
fn load(ws: &Workspace, model: &str) -> Result<Store, Fail> {
    let path = ws.resolve_model(model);
    let doc = read_document(&path)?;
    match interchange::import_model(&doc, builtin_schema()) {
        Ok((store, _)) => Ok(store),
        Err(ImportError::Invalid(diags)) => Err(Fail::invalid(format!(
            "{}: model is invalid\n{}",
            path.display(),
            render_text(&diags)
        ))),
        Err(e) => Err(Fail::invalid(format!("{}: {e}", path.display()))),
    }
}

fn load_default(ws: &Workspace, common: &ReportArgs) -> Result<Store, Fail> {
    match &common.model {
        Some(m) => load(ws, m),
        None => match ws.projects.keys().collect::<Vec<_>>()[..] {
            [only] => load(ws, only),
            _ => Err(Fail::usage(
                "no MODEL given and the workspace does not configure exactly one project",
            )),
        },
    }
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Fail::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_diags(diags: &[Diagnostic], format: DiagFormat) {
    match format {
        DiagFormat::Text => print!("{}", render_text(diags)),
        DiagFormat::Json => print!("{}", render_json(diags)),
    }
}

// ---- error mapping ---------------------------------------------------------

fn import_diagnostic(e: ImportError) -> Diagnostic {
    match &e {
        ImportError::UnresolvedReference {
            source_id,
            relation,
            ..
        } => Diagnostic::error(
            "unresolved-reference",
            format!("{source_id}.relations.{relation}"),
            e.to_string(),
        ),
        ImportError::SchemaViolation { path, message } => {
            Diagnostic::error("schema-violation", path, message)
        }
        ImportError::Store { path, source } => Diagnostic::error("store", path, source.to_string()),
        _ => Diagnostic::error("import", "document", e.to_string()),
    }
}

fn query_fail(e: QueryError) -> Fail {
    match e {
        QueryError::Syntax { .. } | QueryError::Subset { .. } => Fail::usage(format!("query {e}")),
        _ => Fail::invalid(format!("query {e}")),
    }
}

fn delta_fail(e: DeltaError) -> Fail {
    match e {
        DeltaError::Malformed(_) | DeltaError::FormatVersion(_) => Fail::usage(e.to_string()),
        _ => Fail::invalid(e.to_string()),
    }
}

fn analysis_fail(e: AnalysisError) -> Fail {
    Fail::invalid(e.to_string())
}

fn sdl_fail(path: &Path, e: SchemaError) -> Fail {
    Fail::usage(format!("{}:{e}", path.display()))
}
