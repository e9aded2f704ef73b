//! Stage commands over artifact files. Every artifact records the content
//! hash of the artifact it was produced from, and every command checks
//! those hashes before running.

mod commands;

pub use commands::{cmd_abstract, cmd_codegen, cmd_derive, cmd_pipeline, cmd_run, cmd_testgen, cmd_validate};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::testgen::Method;

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Pass = 0,
    Fail = 1,
    ValidatorError = 2,
    Usage = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write `{path}`: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("`{path}`: {message}")]
    Format { path: PathBuf, message: String },
    #[error(
        "stale artifact chain: `{artifact}` records upstream hash {recorded}, but `{upstream}` hashes to {actual}"
    )]
    HashMismatch {
        artifact: PathBuf,
        upstream: PathBuf,
        recorded: String,
        actual: String,
    },
}

impl PipelineError {
    pub fn exit(&self) -> Exit {
        Exit::Usage
    }
}

/// Result of one command: its exit status and human-readable summary lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub exit: Exit,
    pub lines: Vec<String>,
}

impl Outcome {
    fn pass(lines: Vec<String>) -> Outcome {
        Outcome {
            exit: Exit::Pass,
            lines,
        }
    }
}

fn default_path(name: &str) -> PathBuf {
    PathBuf::from(name)
}

/// Artifact paths and generation parameters. Relative paths are resolved
/// against the configuration's base directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub policy: PathBuf,
    /// Written by `derive`, read by every later stage.
    pub interface: PathBuf,
    pub sfsm: PathBuf,
    pub fsm: PathBuf,
    /// Optional plain-text rendering of the FSM.
    pub fsm_text: Option<PathBuf>,
    pub suite: PathBuf,
    pub concrete_suite: PathBuf,
    pub program: PathBuf,
    pub log: PathBuf,
    pub report: PathBuf,
    pub method: Method,
    /// Fault-domain bound; defaults to the reference state count.
    pub m: Option<usize>,
    pub seed: u64,
    /// Fault injected by `codegen`, as `kind` or `kind:seed`. A bare kind
    /// uses `seed`.
    pub mutate: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            policy: default_path("policy.json"),
            interface: default_path("interface.json"),
            sfsm: default_path("reference.sfsm.json"),
            fsm: default_path("reference.fsm.json"),
            fsm_text: None,
            suite: default_path("suite.json"),
            concrete_suite: default_path("suite.concrete.json"),
            program: default_path("supervisor.gcl"),
            log: default_path("execution.log.jsonl"),
            report: default_path("validation.json"),
            method: Method::H,
            m: None,
            seed: 0,
            mutate: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<PipelineConfig, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Usage(format!("invalid configuration: {e}")))
    }

    /// All artifact paths by role.
    pub fn paths(&self) -> BTreeMap<&'static str, &Path> {
        let mut m: BTreeMap<&'static str, &Path> = BTreeMap::from([
            ("policy", self.policy.as_path()),
            ("interface", self.interface.as_path()),
            ("sfsm", self.sfsm.as_path()),
            ("fsm", self.fsm.as_path()),
            ("suite", self.suite.as_path()),
            ("concrete_suite", self.concrete_suite.as_path()),
            ("program", self.program.as_path()),
            ("log", self.log.as_path()),
            ("report", self.report.as_path()),
        ]);
        if let Some(t) = &self.fsm_text {
            m.insert("fsm_text", t.as_path());
        }
        m
    }

    pub fn check(&self) -> Result<(), PipelineError> {
        let mut seen: BTreeMap<PathBuf, &str> = BTreeMap::new();
        for (role, path) in self.paths() {
            if let Some(other) = seen.insert(normalize(path), role) {
                return Err(PipelineError::Usage(format!(
                    "`{role}` and `{other}` share the path `{}`",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

fn normalize(p: &Path) -> PathBuf {
    p.components()
        .filter(|c| !matches!(c, std::path::Component::CurDir))
        .collect()
}

/// A configuration bound to the directory its relative paths resolve
/// against.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub config: PipelineConfig,
    pub base: PathBuf,
}

impl Workspace {
    pub fn new(config: PipelineConfig, base: impl Into<PathBuf>) -> Result<Workspace, PipelineError> {
        config.check()?;
        Ok(Workspace {
            config,
            base: base.into(),
        })
    }

    /// Loads a configuration file; its directory is the base.
    pub fn load(path: &Path) -> Result<Workspace, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Workspace::new(PipelineConfig::from_json(&text)?, base)
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        self.base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let c = PipelineConfig::from_json(r#"{"policy": "p.json", "method": "W", "m": 5}"#).unwrap();
        assert_eq!(c.policy, PathBuf::from("p.json"));
        assert_eq!(c.method, Method::W);
        assert_eq!(c.m, Some(5));
        assert_eq!(c.suite, PathBuf::from("suite.json"));
    }

    #[test]
    fn unknown_field_is_usage_error() {
        assert!(PipelineConfig::from_json(r#"{"polcy": "p.json"}"#).is_err());
    }

    #[test]
    fn shared_paths_rejected() {
        let c = PipelineConfig {
            log: PathBuf::from("./suite.json"),
            ..PipelineConfig::default()
        };
        let err = c.check().unwrap_err();
        assert!(err.to_string().contains("share the path"), "{err}");
    }
}
