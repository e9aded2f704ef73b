//! Deterministic symbolic finite state machines: risk states connected by
//! transitions labelled with a guard over the monitored variables and an
//! output valuation.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Guard, GuardError, Interface, InterfaceError, Output, Valuation, ValuationSpace};

#[derive(Debug, Error)]
pub enum SfsmError {
    #[error("malformed SFSM file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("guard `{guard}`: {source}")]
    Guard { guard: String, source: GuardError },
    #[error("output of transition {index}: {source}")]
    Output { index: usize, source: InterfaceError },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("state `{state}` is nondeterministic: `{first}` and `{second}` both hold for {witness}")]
    Nondeterministic {
        state: String,
        first: String,
        second: String,
        witness: Valuation,
    },
    #[error("monitored domain has {0} valuations, too many to enumerate")]
    DomainTooLarge(u128),
}

/// Largest monitored domain checked by exhaustive enumeration.
pub const MAX_ENUMERATED_DOMAIN: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SfsmTransition {
    pub src: String,
    pub guard: Guard,
    pub output: Output,
    pub tgt: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sfsm {
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<SfsmTransition>,
}

#[derive(Serialize, Deserialize)]
struct TransitionFile {
    src: String,
    guard: String,
    output: serde_json::Value,
    tgt: String,
}

#[derive(Serialize, Deserialize)]
struct SfsmFile {
    states: Vec<String>,
    initial: String,
    transitions: Vec<TransitionFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upstream_hash: Option<String>,
}

impl Sfsm {
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// Checks names, guards and outputs against `iface`, then determinism by
    /// enumerating the monitored domain.
    pub fn validate(&self, iface: &Interface) -> Result<(), SfsmError> {
        let mut seen = BTreeSet::new();
        for s in &self.states {
            if !seen.insert(s.as_str()) {
                return Err(SfsmError::DuplicateState(s.clone()));
            }
        }
        if !seen.contains(self.initial.as_str()) {
            return Err(SfsmError::UnknownState(self.initial.clone()));
        }
        for (index, t) in self.transitions.iter().enumerate() {
            for s in [&t.src, &t.tgt] {
                if !seen.contains(s.as_str()) {
                    return Err(SfsmError::UnknownState(s.clone()));
                }
            }
            t.guard.check(iface).map_err(|source| SfsmError::Guard {
                guard: t.guard.to_string(),
                source,
            })?;
            if let Output::Values(v) = &t.output {
                iface
                    .check_exact(v, iface.outputs())
                    .map_err(|source| SfsmError::Output { index, source })?;
            }
        }
        self.check_deterministic(iface)
    }

    /// For every state, the guards of its outgoing transitions are pairwise
    /// unsatisfiable over the monitored domain.
    pub fn check_deterministic(&self, iface: &Interface) -> Result<(), SfsmError> {
        let space = ValuationSpace::inputs(iface);
        let size = space.size();
        if size > MAX_ENUMERATED_DOMAIN {
            return Err(SfsmError::DomainTooLarge(size));
        }
        for state in &self.states {
            let outgoing: Vec<(&SfsmTransition, _)> = self
                .transitions
                .iter()
                .filter(|t| &t.src == state)
                .map(|t| {
                    t.guard
                        .compile(&space)
                        .map(|c| (t, c))
                        .map_err(|source| SfsmError::Guard {
                            guard: t.guard.to_string(),
                            source,
                        })
                })
                .collect::<Result<_, _>>()?;
            if outgoing.len() < 2 {
                continue;
            }
            for digits in space.digits() {
                let mut enabled = outgoing.iter().filter(|(_, c)| c.eval(&digits));
                if let (Some((a, _)), Some((b, _))) = (enabled.next(), enabled.next()) {
                    return Err(SfsmError::Nondeterministic {
                        state: state.clone(),
                        first: a.guard.to_string(),
                        second: b.guard.to_string(),
                        witness: space.valuation(&digits),
                    });
                }
            }
        }
        Ok(())
    }

    /// Reference simulator: the transition enabled in `state` by `input`,
    /// if any. Assumes the machine is deterministic.
    pub fn step(&self, state: &str, input: &Valuation) -> Result<Option<&SfsmTransition>, GuardError> {
        for t in self.transitions.iter().filter(|t| t.src == state) {
            if t.guard.eval(input)? {
                return Ok(Some(t));
            }
        }
        Ok(None)
    }

    /// Distinct canonical guard strings, in first-occurrence order.
    pub fn guard_strings(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.transitions
            .iter()
            .map(|t| t.guard.to_string())
            .filter(|g| seen.insert(g.clone()))
            .collect()
    }

    /// Serializes to the SFSM file format, with valuation keys in declaration
    /// order.
    pub fn to_json(&self, iface: &Interface, upstream_hash: Option<&str>) -> String {
        let file = SfsmFile {
            states: self.states.clone(),
            initial: self.initial.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| TransitionFile {
                    src: t.src.clone(),
                    guard: t.guard.to_string(),
                    output: t.output.to_json(iface),
                    tgt: t.tgt.clone(),
                })
                .collect(),
            upstream_hash: upstream_hash.map(str::to_string),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("sfsm serializes");
        text.push('\n');
        text
    }

    /// Parses and validates an SFSM file. Returns the recorded upstream hash
    /// alongside the machine.
    pub fn from_json(text: &str, iface: &Interface) -> Result<(Sfsm, Option<String>), SfsmError> {
        let file: SfsmFile = serde_json::from_str(text)?;
        let transitions = file
            .transitions
            .into_iter()
            .map(|t| {
                let guard = Guard::parse(&t.guard).map_err(|source| SfsmError::Guard {
                    guard: t.guard.clone(),
                    source,
                })?;
                let output: Output = serde_json::from_value(t.output)?;
                Ok(SfsmTransition {
                    src: t.src,
                    guard,
                    output,
                    tgt: t.tgt,
                })
            })
            .collect::<Result<Vec<_>, SfsmError>>()?;
        let sfsm = Sfsm {
            states: file.states,
            initial: file.initial,
            transitions,
        };
        sfsm.validate(iface)?;
        Ok((sfsm, file.upstream_hash))
    }

    /// Transition lookup keyed by (source state, canonical guard string).
    pub fn by_state_and_guard(&self) -> HashMap<(&str, String), &SfsmTransition> {
        self.transitions
            .iter()
            .map(|t| ((t.src.as_str(), t.guard.to_string()), t))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::interface::tests::small_iface;

    fn toggle() -> Sfsm {
        let run = Output::Values(Valuation::from_pairs([("out", "run")]));
        let stop = Output::Values(Valuation::from_pairs([("out", "stop")]));
        Sfsm {
            states: vec!["0".into(), "HSa".into()],
            initial: "0".into(),
            transitions: vec![
                SfsmTransition {
                    src: "0".into(),
                    guard: Guard::parse("x=a&y=1").unwrap(),
                    output: stop,
                    tgt: "HSa".into(),
                },
                SfsmTransition {
                    src: "HSa".into(),
                    guard: Guard::parse("x=b").unwrap(),
                    output: run,
                    tgt: "0".into(),
                },
            ],
        }
    }

    #[test]
    fn json_round_trip() {
        let iface = small_iface();
        let m = toggle();
        let text = m.to_json(&iface, Some("abc"));
        let (back, upstream) = Sfsm::from_json(&text, &iface).unwrap();
        assert_eq!(back, m);
        assert_eq!(upstream.as_deref(), Some("abc"));
    }

    #[test]
    fn overlapping_guards_are_nondeterministic() {
        let iface = small_iface();
        let mut m = toggle();
        let extra = SfsmTransition {
            src: "0".into(),
            guard: Guard::parse("y=1").unwrap(),
            output: Output::Idle,
            tgt: "0".into(),
        };
        m.transitions.push(extra);
        match m.validate(&iface) {
            Err(SfsmError::Nondeterministic { state, witness, .. }) => {
                assert_eq!(state, "0");
                assert_eq!(witness, Valuation::from_pairs([("x", "a"), ("y", "1")]));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn step_follows_enabled_transition() {
        let m = toggle();
        let hit = Valuation::from_pairs([("x", "a"), ("y", "1")]);
        let miss = Valuation::from_pairs([("x", "b"), ("y", "1")]);
        assert_eq!(m.step("0", &hit).unwrap().unwrap().tgt, "HSa");
        assert!(m.step("0", &miss).unwrap().is_none());
    }

    #[test]
    fn unknown_state_rejected() {
        let iface = small_iface();
        let mut m = toggle();
        m.transitions[0].tgt = "HSm".into();
        assert!(matches!(m.validate(&iface), Err(SfsmError::UnknownState(s)) if s == "HSm"));
    }
}
