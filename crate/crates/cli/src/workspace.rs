use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cpsmeta::analysis::TradespaceConfig;
use serde::Deserialize;

use crate::Fail;

pub const CONFIG_FILE: &str = "cpsmeta.toml";
pub const WORKSPACE_ENV: &str = "CPSMETA_WORKSPACE";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    projects: BTreeMap<String, PathBuf>,
    #[serde(default)]
    tradespace: Option<TradespaceConfig>,
    #[serde(default)]
    output: Option<OutputConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputConfig {
    format: Option<String>,
}

/// A directory of project documents plus optional `cpsmeta.toml`.
#[derive(Debug)]
pub struct Workspace {
    pub root: PathBuf,
    /// Project id to document path, resolved against `root`.
    pub projects: BTreeMap<String, PathBuf>,
    pub tradespace: TradespaceConfig,
    pub default_format: Option<String>,
}

impl Workspace {
    /// Root precedence: explicit flag, then the environment, then the
    /// current directory.
    pub fn open(flag: Option<&Path>) -> Result<Workspace, Fail> {
        let root = match flag {
            Some(p) => p.to_path_buf(),
            None => match std::env::var_os(WORKSPACE_ENV) {
                Some(p) => PathBuf::from(p),
                None => PathBuf::from("."),
            },
        };
        let cfg_path = root.join(CONFIG_FILE);
        let cfg: ConfigFile = if cfg_path.is_file() {
            let text = std::fs::read_to_string(&cfg_path).map_err(|e| Fail::io(&cfg_path, e))?;
            toml::from_str(&text)
                .map_err(|e| Fail::usage(format!("{}: {e}", cfg_path.display())))?
        } else {
            ConfigFile::default()
        };
        let tradespace = cfg.tradespace.unwrap_or_default();
        tradespace
            .check()
            .map_err(|e| Fail::usage(format!("{}: [tradespace] {e}", cfg_path.display())))?;
        let default_format = cfg.output.and_then(|o| o.format);
        if let Some(f) = &default_format {
            if f != "json" && f != "table" {
                return Err(Fail::usage(format!(
                    "{}: [output] format must be json or table",
                    cfg_path.display()
                )));
            }
        }
        let projects = cfg
            .projects
            .into_iter()
            .map(|(id, p)| (id, root.join(p)))
            .collect();
        Ok(Workspace {
            root,
            projects,
            tradespace,
            default_format,
        })
    }

    /// A model argument is a file path, or failing that a project id.
    pub fn resolve_model(&self, arg: &str) -> PathBuf {
        let p = PathBuf::from(arg);
        if p.exists() {
            return p;
        }
        self.projects.get(arg).cloned().unwrap_or(p)
    }

    /// Configured projects, or every `*.json` document in the root when the
    /// config lists none.
    pub fn project_paths(&self) -> Result<Vec<PathBuf>, Fail> {
        if !self.projects.is_empty() {
            return Ok(self.projects.values().cloned().collect());
        }
        let mut out = Vec::new();
        let dir = std::fs::read_dir(&self.root).map_err(|e| Fail::io(&self.root, e))?;
        for entry in dir {
            let p = entry.map_err(|e| Fail::io(&self.root, e))?.path();
            if p.extension().is_some_and(|x| x == "json") {
                out.push(p);
            }
        }
        out.sort();
        Ok(out)
    }
}
