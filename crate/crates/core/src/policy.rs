//! Import of the controller fragment of a synthesized DTMC policy and its
//! translation into the SFSM test reference.
//!
//! Each controller transition `(s, s')` becomes one reference transition:
//! source risk state `s|F`, guard = total conjunction over `s|I`, output
//! `s'|O`, target risk state `s'|F`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Guard, Interface, InterfaceError, Output, Valuation};
use crate::sfsm::{Sfsm, SfsmError, SfsmTransition};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("malformed policy file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read interface `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{context}: {source}")]
    Valuation { context: String, source: InterfaceError },
    #[error("transition {index}: probability {prob} is outside (0, 1]")]
    Probability { index: usize, prob: f64 },
    #[error("controller transition {index} has probability {prob}, expected 1")]
    ControllerProbability { index: usize, prob: f64 },
    #[error("no controller transitions")]
    NoControllerTransitions,
    #[error(
        "controller is not a function of F and I: transitions {first} and {second} \
         leave {state} on {input} with different updates"
    )]
    Nondeterministic {
        first: usize,
        second: usize,
        state: String,
        input: Valuation,
    },
    #[error("risk states {0:?} and {1:?} print to the same name")]
    StateNameClash(Valuation, Valuation),
    #[error(transparent)]
    Reference(#[from] SfsmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Owner {
    #[serde(rename = "C")]
    Controller,
    #[serde(rename = "E")]
    Environment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTransition {
    pub source: Valuation,
    pub target: Valuation,
    pub action: String,
    pub prob: f64,
    pub owner: Owner,
}

/// A loaded policy: interface, initial state `s0` and DTMC transitions.
#[derive(Debug, Clone)]
pub struct Policy {
    pub iface: Interface,
    pub initial: Valuation,
    pub transitions: Vec<PolicyTransition>,
}

#[derive(Deserialize)]
struct PolicyFile {
    /// Either an inline interface or a path to an interface file.
    interface: serde_json::Value,
    initial: Valuation,
    transitions: Vec<PolicyTransition>,
}

const PROB_TOLERANCE: f64 = 1e-9;

impl Policy {
    /// Parses a policy document. A path-valued `interface` is resolved
    /// against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Policy, PolicyError> {
        let file: PolicyFile = serde_json::from_str(text)?;
        let iface = match file.interface {
            serde_json::Value::String(p) => {
                let path = base_dir.map_or_else(|| Path::new(&p).to_path_buf(), |d| d.join(&p));
                let text = std::fs::read_to_string(&path).map_err(|source| PolicyError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                Interface::from_json(&text)?
            }
            inline => serde_json::from_value(inline)?,
        };
        Policy::new(iface, file.initial, file.transitions)
    }

    pub fn load(path: &Path) -> Result<Policy, PolicyError> {
        let text = std::fs::read_to_string(path).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Policy::parse(&text, path.parent())
    }

    pub fn new(
        iface: Interface,
        initial: Valuation,
        transitions: Vec<PolicyTransition>,
    ) -> Result<Policy, PolicyError> {
        let all = iface.all_vars();
        iface
            .check_exact(&initial, &all)
            .map_err(|source| PolicyError::Valuation {
                context: "initial state".into(),
                source,
            })?;
        let mut controller = 0;
        for (index, t) in transitions.iter().enumerate() {
            for (which, v) in [("source", &t.source), ("target", &t.target)] {
                iface.check_exact(v, &all).map_err(|source| PolicyError::Valuation {
                    context: format!("transition {index} {which}"),
                    source,
                })?;
            }
            if !(t.prob > 0.0 && t.prob <= 1.0 + PROB_TOLERANCE) {
                return Err(PolicyError::Probability { index, prob: t.prob });
            }
            if t.owner == Owner::Controller {
                if (t.prob - 1.0).abs() > PROB_TOLERANCE {
                    return Err(PolicyError::ControllerProbability { index, prob: t.prob });
                }
                controller += 1;
            }
        }
        if controller == 0 {
            return Err(PolicyError::NoControllerTransitions);
        }
        Ok(Policy {
            iface,
            initial,
            transitions,
        })
    }

    pub fn controller_transitions(&self) -> impl Iterator<Item = (usize, &PolicyTransition)> {
        self.transitions
            .iter()
            .enumerate()
            .filter(|(_, t)| t.owner == Owner::Controller)
    }
}

/// Translates the controller fragment into the deterministic SFSM reference.
///
/// Transitions are ordered by source risk state, then by the canonical rank
/// of the input valuation; states by the canonical rank of their factor
/// valuation.
pub fn derive_reference(policy: &Policy) -> Result<Sfsm, PolicyError> {
    let iface = &policy.iface;
    let (fs, is, os) = (iface.factors(), iface.inputs(), iface.outputs());

    // (src|F, s|I) -> (first transition index, src|F, s|I, s'|O, s'|F)
    type Update = (usize, Valuation, Valuation, Valuation, Valuation);
    let mut updates: BTreeMap<(u128, u128), Update> = BTreeMap::new();
    let mut risk_states: BTreeMap<u128, Valuation> = BTreeMap::new();
    let rank = |v: &Valuation, idx: &[usize]| iface.rank(v, idx).expect("validated valuation");

    let s0 = policy.initial.restrict_to(iface, fs);
    risk_states.insert(rank(&s0, fs), s0.clone());

    for (index, t) in policy.controller_transitions() {
        let src = t.source.restrict_to(iface, fs);
        let input = t.source.restrict_to(iface, is);
        let output = t.target.restrict_to(iface, os);
        let tgt = t.target.restrict_to(iface, fs);
        let key = (rank(&src, fs), rank(&input, is));
        risk_states.insert(key.0, src.clone());
        risk_states.insert(rank(&tgt, fs), tgt.clone());
        match updates.get(&key) {
            Some((first, _, _, o, r)) if (o, r) != (&output, &tgt) => {
                return Err(PolicyError::Nondeterministic {
                    first: *first,
                    second: index,
                    state: iface.risk_state_name(&src),
                    input,
                });
            }
            Some(_) => {}
            None => {
                updates.insert(key, (index, src, input, output, tgt));
            }
        }
    }

    let mut names: HashMap<String, Valuation> = HashMap::new();
    for v in risk_states.values() {
        let name = iface.risk_state_name(v);
        if let Some(other) = names.insert(name, v.clone()) {
            return Err(PolicyError::StateNameClash(other, v.clone()));
        }
    }

    let input_names = iface.names(is);
    let transitions = updates
        .into_values()
        .map(|(_, src, input, output, tgt)| SfsmTransition {
            src: iface.risk_state_name(&src),
            guard: Guard::conjunction(
                input_names
                    .iter()
                    .map(|n| Guard::atom(*n, input.get(n).unwrap()))
                    .collect(),
            ),
            output: Output::Values(output),
            tgt: iface.risk_state_name(&tgt),
        })
        .collect();

    let sfsm = Sfsm {
        states: risk_states.values().map(|v| iface.risk_state_name(v)).collect(),
        initial: iface.risk_state_name(&s0),
        transitions,
    };
    sfsm.validate(iface)?;
    Ok(sfsm)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{Sort, VarDecl, VarKind};

    /// Two factors, two monitored variables, one output.
    pub(crate) fn iface2() -> Interface {
        Interface::new(
            vec![
                Sort::new("P", ["0", "a", "m"]),
                Sort::new("Loc", ["away", "near"]),
                Sort::new("Rng", ["far", "close"]),
                Sort::new("Mode", ["normal", "stopped"]),
            ],
            vec![
                VarDecl::new("hloc", "Loc", VarKind::Monitored),
                VarDecl::new("rng", "Rng", VarKind::Monitored),
                VarDecl::new("safmod", "Mode", VarKind::Controlled),
                VarDecl::new("HS", "P", VarKind::Factor),
                VarDecl::new("HC", "P", VarKind::Factor),
            ],
        )
        .unwrap()
    }

    fn state(hloc: &str, rng: &str, safmod: &str, hs: &str, hc: &str) -> Valuation {
        Valuation::from_pairs([("hloc", hloc), ("rng", rng), ("safmod", safmod), ("HS", hs), ("HC", hc)])
    }

    fn ctrl(source: Valuation, target: Valuation, action: &str) -> PolicyTransition {
        PolicyTransition {
            source,
            target,
            action: action.into(),
            prob: 1.0,
            owner: Owner::Controller,
        }
    }

    /// Six controller transitions over two factors; inputs are unchanged by
    /// the controller, as in a DTMC where only the environment moves I.
    fn six_transitions() -> Vec<PolicyTransition> {
        vec![
            ctrl(
                state("near", "close", "normal", "0", "0"),
                state("near", "close", "normal", "a", "0"),
                "si_HSact",
            ),
            ctrl(
                state("near", "close", "normal", "a", "0"),
                state("near", "close", "stopped", "m", "0"),
                "si_stoppedfun",
            ),
            ctrl(
                state("away", "far", "stopped", "m", "0"),
                state("away", "far", "normal", "0", "0"),
                "si_HSressafmod",
            ),
            ctrl(
                state("away", "close", "normal", "0", "0"),
                state("away", "close", "normal", "0", "a"),
                "si_HCact",
            ),
            ctrl(
                state("away", "close", "normal", "0", "a"),
                state("away", "close", "stopped", "0", "m"),
                "si_HCmit",
            ),
            ctrl(
                state("away", "far", "stopped", "0", "m"),
                state("away", "far", "normal", "0", "0"),
                "si_HCres",
            ),
        ]
    }

    pub(crate) fn policy_with_six() -> Policy {
        policy(six_transitions())
    }

    fn policy(transitions: Vec<PolicyTransition>) -> Policy {
        Policy::new(iface2(), state("away", "far", "normal", "0", "0"), transitions).unwrap()
    }

    #[test]
    fn one_reference_transition_per_controller_transition() {
        let p = policy(six_transitions());
        let r = derive_reference(&p).unwrap();
        assert_eq!(r.transitions.len(), 6);
        assert_eq!(r.initial, "0");
        // HS is declared first, so it is the most significant factor.
        assert_eq!(r.states, ["0", "HCa", "HCm", "HSa", "HSm"]);
        // Oracle: build each expected transition directly from its DTMC step.
        for t in six_transitions() {
            let src = p.iface.risk_state_name(&t.source.restrict(["HS", "HC"]));
            let tgt = p.iface.risk_state_name(&t.target.restrict(["HS", "HC"]));
            let guard = format!(
                "hloc={}&rng={}",
                t.source.get("hloc").unwrap(),
                t.source.get("rng").unwrap()
            );
            let out = Output::Values(t.target.restrict(["safmod"]));
            let hits: Vec<_> = r
                .transitions
                .iter()
                .filter(|x| x.src == src && x.guard.to_string() == guard)
                .collect();
            assert_eq!(hits.len(), 1, "{}", t.action);
            assert_eq!(hits[0].tgt, tgt);
            assert_eq!(hits[0].output, out);
        }
    }

    #[test]
    fn mitigation_enters_mitigated_state_with_stop_output() {
        let r = derive_reference(&policy(six_transitions())).unwrap();
        let t = r.transitions.iter().find(|t| t.src == "HSa").unwrap();
        assert_eq!(t.tgt, "HSm");
        assert_eq!(t.guard.to_string(), "hloc=near&rng=close");
        assert_eq!(t.output, Output::Values(Valuation::from_pairs([("safmod", "stopped")])));
    }

    #[test]
    fn identity_update_is_a_self_loop() {
        let s = state("near", "far", "normal", "0", "0");
        let r = derive_reference(&policy(vec![ctrl(s.clone(), s, "idle")])).unwrap();
        assert_eq!(r.transitions.len(), 1);
        let t = &r.transitions[0];
        assert_eq!((t.src.as_str(), t.tgt.as_str()), ("0", "0"));
        assert_eq!(t.output, Output::Values(Valuation::from_pairs([("safmod", "normal")])));
    }

    #[test]
    fn duplicates_collapse_and_differing_sources_outputs_are_irrelevant() {
        let mut ts = six_transitions();
        // Same F ∪ I restriction, different latched output in the source.
        ts.push(ctrl(
            state("near", "close", "stopped", "0", "0"),
            state("near", "close", "normal", "a", "0"),
            "si_HSact",
        ));
        let r = derive_reference(&policy(ts)).unwrap();
        assert_eq!(r.transitions.len(), 6);
    }

    #[test]
    fn determinism_violation_names_both_transitions() {
        let mut ts = six_transitions();
        ts.push(ctrl(
            state("near", "close", "normal", "0", "0"),
            state("near", "close", "stopped", "0", "a"),
            "bad",
        ));
        match derive_reference(&policy(ts)) {
            Err(PolicyError::Nondeterministic {
                first, second, state, ..
            }) => {
                assert_eq!((first, second), (0, 6));
                assert_eq!(state, "0");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn environment_transitions_are_ignored() {
        let mut ts = six_transitions();
        ts.push(PolicyTransition {
            source: state("away", "far", "normal", "0", "0"),
            target: state("near", "far", "normal", "0", "0"),
            action: "hmove".into(),
            prob: 0.25,
            owner: Owner::Environment,
        });
        assert_eq!(derive_reference(&policy(ts)).unwrap().transitions.len(), 6);
    }

    #[test]
    fn load_errors() {
        let s0 = state("away", "far", "normal", "0", "0");
        let err = Policy::new(iface2(), s0.clone(), vec![]).unwrap_err();
        assert_eq!(err.to_string(), "no controller transitions");
        let mut t = six_transitions().remove(0);
        t.prob = 0.5;
        assert!(matches!(
            Policy::new(iface2(), s0.clone(), vec![t]),
            Err(PolicyError::ControllerProbability { index: 0, .. })
        ));
        let mut bad = six_transitions().remove(0);
        bad.source.insert("hloc", "moon");
        assert!(matches!(
            Policy::new(iface2(), s0, vec![bad]),
            Err(PolicyError::Valuation { .. })
        ));
    }

    #[test]
    fn factor_sort_missing_phase_is_a_load_error() {
        let text = r#"{
          "interface": {"sorts":[{"name":"P","values":["0","a"]},{"name":"B","values":["t","f"]}],
                        "vars":[{"name":"i","sort":"B","kind":"I"},{"name":"o","sort":"B","kind":"O"},
                                {"name":"HS","sort":"P","kind":"F"}]},
          "initial": {"i":"t","o":"t","HS":"0"},
          "transitions": []
        }"#;
        let err = Policy::parse(text, None).unwrap_err();
        assert!(err.to_string().contains("lacking phase `m`"), "{err}");
    }

    #[test]
    fn initial_state_congruence() {
        let p = policy(six_transitions());
        let r = derive_reference(&p).unwrap();
        assert_eq!(r.initial, p.iface.risk_state_name(&p.initial.restrict(["HS", "HC"])));
    }
}
