//! Guarded-command supervisor programs: generation from the completed
//! reference, the canonical text format, an interpreter, static
//! conformance analysis and fault injection.

mod analyze;
mod fault;

pub use analyze::{analyze, GuardDiff, StateDiff, StaticAnalysisReport};
pub use fault::{inject_fault, Fault, FaultKind};

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::abstraction::ClassAlphabet;
use crate::model::{is_var_ident, Guard, GuardError, Interface, Output, Valuation};
use crate::sfsm::Sfsm;

#[derive(Debug, Error)]
pub enum GclError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("state `{state}`: commands `{first}` and `{second}` are both enabled for {input}")]
    Ambiguous {
        state: String,
        first: String,
        second: String,
        input: Valuation,
    },
    #[error("command `{action}`: {source}")]
    Guard { action: String, source: GuardError },
    #[error("{0}")]
    Fault(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardedCommand {
    pub action: String,
    pub state_test: String,
    pub guard: Guard,
    pub outputs: Output,
    pub next_state: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GclProgram {
    pub interface_path: String,
    pub reference_hash: Option<String>,
    pub initial: String,
    /// Declared control states.
    pub states: Vec<String>,
    pub commands: Vec<GuardedCommand>,
}

pub const DEFAULT_INTERFACE_PATH: &str = "interface.json";

/// Phases of each factor encoded in a risk-state name, or `None` if the
/// name does not decode against the factors of `iface`.
pub fn decode_risk_state(iface: &Interface, name: &str) -> Option<Valuation> {
    let factors = iface.factors();
    let mut v = Valuation::new();
    for &f in factors {
        v.insert(&iface.vars()[f].name, "0");
    }
    if name == "0" {
        return Some(v);
    }
    let mut rest = name;
    for &f in factors {
        let var = &iface.vars()[f];
        if let Some(after) = rest.strip_prefix(var.name.as_str()) {
            let phase = iface
                .domain_of(f)
                .iter()
                .filter(|p| p.as_str() != "0" && after.starts_with(p.as_str()))
                .max_by_key(|p| p.len())?;
            v.insert(&var.name, phase);
            rest = &after[phase.len()..];
        }
    }
    rest.is_empty().then_some(v)
}

/// `si_<src>_<changes>`, where changes lists `<factor><new phase>` for each
/// factor whose phase differs between `src` and `tgt`, or `stay`.
pub fn action_name(iface: &Interface, src: &str, tgt: &str) -> String {
    let changes = match (decode_risk_state(iface, src), decode_risk_state(iface, tgt)) {
        (Some(a), Some(b)) => {
            let mut s = String::new();
            for &f in iface.factors() {
                let name = &iface.vars()[f].name;
                if a.get(name) != b.get(name) {
                    s.push_str(name);
                    s.push_str(b.get(name).unwrap_or("0"));
                }
            }
            s
        }
        _ if src != tgt => tgt.to_string(),
        _ => String::new(),
    };
    if changes.is_empty() {
        format!("si_{src}_stay")
    } else {
        format!("si_{src}_{changes}")
    }
}

/// One command per transition of the idle-completed reference, ordered by
/// (state, class).
pub fn generate_code(r: &Sfsm, classes: &ClassAlphabet, iface: &Interface) -> GclProgram {
    let mut keyed: Vec<((usize, usize), GuardedCommand)> = r
        .transitions
        .iter()
        .map(|t| {
            let id = t.guard.to_string();
            let key = (
                r.state_index(&t.src).unwrap_or(usize::MAX),
                classes.position(&id).unwrap_or(usize::MAX),
            );
            let cmd = GuardedCommand {
                action: action_name(iface, &t.src, &t.tgt),
                state_test: t.src.clone(),
                guard: t.guard.clone(),
                outputs: t.output.clone(),
                next_state: t.tgt.clone(),
            };
            (key, cmd)
        })
        .collect();
    keyed.sort_by_key(|(k, _)| *k);
    GclProgram {
        interface_path: DEFAULT_INTERFACE_PATH.into(),
        reference_hash: None,
        initial: r.initial.clone(),
        states: r.states.clone(),
        commands: keyed.into_iter().map(|(_, c)| c).collect(),
    }
}

impl GuardedCommand {
    pub fn render(&self, iface: &Interface) -> String {
        let outputs = match &self.outputs {
            Output::Idle => "IDLE".to_string(),
            Output::Values(v) => iface
                .outputs()
                .iter()
                .filter_map(|&i| {
                    let name = &iface.vars()[i].name;
                    v.get(name).map(|val| format!("{name}={val}"))
                })
                .collect::<Vec<_>>()
                .join(", "),
        };
        format!(
            "[{}] state={} & {} -> {} ; next={}",
            self.action, self.state_test, self.guard, outputs, self.next_state
        )
    }
}

impl GclProgram {
    /// Canonical text rendering; output assignments follow declaration order.
    pub fn render(&self, iface: &Interface) -> String {
        let mut text = String::new();
        writeln!(text, "@interface {}", self.interface_path).unwrap();
        if let Some(h) = &self.reference_hash {
            writeln!(text, "@reference {h}").unwrap();
        }
        writeln!(text, "@initial {}", self.initial).unwrap();
        writeln!(text, "@states {}", self.states.join(" ")).unwrap();
        for c in &self.commands {
            text.push_str(&c.render(iface));
            text.push('\n');
        }
        text
    }

    /// Control states mentioned anywhere in the program.
    pub fn mentioned_states(&self) -> BTreeSet<&str> {
        let mut s: BTreeSet<&str> = self.states.iter().map(String::as_str).collect();
        s.insert(&self.initial);
        for c in &self.commands {
            s.insert(&c.state_test);
            s.insert(&c.next_state);
        }
        s
    }

    /// Executes one control step. When no command is enabled the supervisor
    /// idles in `current`.
    pub fn step(&self, current: &str, input: &Valuation) -> Result<(Output, String), GclError> {
        let mut fired: Option<&GuardedCommand> = None;
        for c in self.commands.iter().filter(|c| c.state_test == current) {
            let enabled = c.guard.eval(input).map_err(|source| GclError::Guard {
                action: c.action.clone(),
                source,
            })?;
            if !enabled {
                continue;
            }
            if let Some(first) = fired {
                return Err(GclError::Ambiguous {
                    state: current.to_string(),
                    first: first.render_head(),
                    second: c.render_head(),
                    input: input.clone(),
                });
            }
            fired = Some(c);
        }
        Ok(match fired {
            Some(c) => (c.outputs.clone(), c.next_state.clone()),
            None => (Output::Idle, current.to_string()),
        })
    }
}

impl GuardedCommand {
    fn render_head(&self) -> String {
        format!("[{}] state={} & {}", self.action, self.state_test, self.guard)
    }
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> GclError {
    GclError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Column (1-based) of `part` within `line`; `part` must be a subslice.
fn col(line: &str, part: &str) -> usize {
    part.as_ptr() as usize - line.as_ptr() as usize + 1
}

fn state_ident(line_no: usize, line: &str, s: &str) -> Result<String, GclError> {
    if !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
        Ok(s.to_string())
    } else {
        Err(parse_err(
            line_no,
            col(line, s),
            format!("invalid state identifier `{s}`"),
        ))
    }
}

fn parse_command(n: usize, line: &str) -> Result<GuardedCommand, GclError> {
    let rest = line.strip_prefix('[').ok_or_else(|| parse_err(n, 1, "expected `[`"))?;
    let (action, rest) = rest
        .split_once(']')
        .ok_or_else(|| parse_err(n, 2, "unterminated action label"))?;
    if !is_var_ident(action) {
        return Err(parse_err(n, 2, format!("invalid action `{action}`")));
    }
    let rest = rest.trim_start();
    let rest = rest
        .strip_prefix("state=")
        .ok_or_else(|| parse_err(n, col(line, rest), "expected `state=`"))?;
    let (state, rest) = rest
        .split_once('&')
        .ok_or_else(|| parse_err(n, col(line, rest), "expected `&` after the state test"))?;
    let state_test = state_ident(n, line, state.trim())?;
    let (guard_text, rest) = rest
        .split_once("->")
        .ok_or_else(|| parse_err(n, col(line, rest), "expected `->`"))?;
    let guard_trim = guard_text.trim();
    let guard = Guard::parse(guard_trim).map_err(|e| match e {
        GuardError::Syntax { pos, message } => parse_err(n, col(line, guard_trim) + pos, message),
        other => parse_err(n, col(line, guard_trim), other.to_string()),
    })?;
    let (outs, rest) = rest
        .split_once(';')
        .ok_or_else(|| parse_err(n, col(line, rest), "expected `;`"))?;
    let outs_trim = outs.trim();
    let outputs = if outs_trim == "IDLE" {
        Output::Idle
    } else {
        let mut v = Valuation::new();
        for part in outs_trim.split(',') {
            let part = part.trim();
            let (var, val) = part
                .split_once('=')
                .ok_or_else(|| parse_err(n, col(line, part), format!("expected `var=value`, found `{part}`")))?;
            if !is_var_ident(var) || val.is_empty() || !val.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
                return Err(parse_err(n, col(line, part), format!("invalid assignment `{part}`")));
            }
            if v.get(var).is_some() {
                return Err(parse_err(n, col(line, part), format!("`{var}` assigned twice")));
            }
            v.insert(var, val);
        }
        Output::Values(v)
    };
    let rest = rest.trim();
    let next = rest
        .strip_prefix("next=")
        .ok_or_else(|| parse_err(n, col(line, rest), "expected `next=`"))?;
    Ok(GuardedCommand {
        action: action.to_string(),
        state_test,
        guard,
        outputs,
        next_state: state_ident(n, line, next)?,
    })
}

/// Parses the GCL text format. Errors carry 1-based line and column.
pub fn parse_program(text: &str) -> Result<GclProgram, GclError> {
    let mut interface_path = None;
    let mut reference_hash = None;
    let mut initial = None;
    let mut states = None;
    let mut commands = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(header) = trimmed.strip_prefix('@') {
            let (key, value) = header.split_once(' ').unwrap_or((header, ""));
            let value = value.trim();
            let slot = match key {
                "interface" => &mut interface_path,
                "reference" => &mut reference_hash,
                "initial" => &mut initial,
                "states" => {
                    if states.is_some() {
                        return Err(parse_err(n, 1, "duplicate `@states` header"));
                    }
                    let list = value
                        .split_whitespace()
                        .map(|s| state_ident(n, line, s))
                        .collect::<Result<Vec<_>, _>>()?;
                    states = Some(list);
                    continue;
                }
                other => return Err(parse_err(n, 2, format!("unknown header `@{other}`"))),
            };
            if slot.is_some() {
                return Err(parse_err(n, 1, format!("duplicate `@{key}` header")));
            }
            if value.is_empty() {
                return Err(parse_err(n, 1, format!("`@{key}` needs a value")));
            }
            *slot = Some(value.to_string());
            continue;
        }
        commands.push(parse_command(n, line)?);
    }
    let initial = initial.ok_or_else(|| parse_err(1, 1, "missing `@initial` header"))?;
    let initial = state_ident(1, &initial, &initial)?;
    let states = states.unwrap_or_else(|| {
        let mut seen = vec![initial.clone()];
        for c in &commands {
            for s in [&c.state_test, &c.next_state] {
                if !seen.contains(s) {
                    seen.push(s.clone());
                }
            }
        }
        seen
    });
    Ok(GclProgram {
        interface_path: interface_path.unwrap_or_else(|| DEFAULT_INTERFACE_PATH.into()),
        reference_hash,
        initial,
        states,
        commands,
    })
}
