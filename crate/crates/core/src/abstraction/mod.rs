//! Input equivalence classes, idle completion, and abstraction of the SFSM
//! reference to a finite state machine over class identifiers.

mod minimize;

pub use minimize::minimize;

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::fsm::{Fsm, FsmError, FsmTransition};
use crate::model::{Guard, GuardError, Interface, Output, Valuation, ValuationSpace, IDLE_SYMBOL};
use crate::sfsm::{Sfsm, SfsmTransition, MAX_ENUMERATED_DOMAIN};

#[derive(Debug, Error)]
pub enum AbstractionError {
    #[error("guards `{first}` and `{second}` overlap, both hold for {witness}")]
    Overlap {
        first: String,
        second: String,
        witness: Valuation,
    },
    #[error("guard `{0}` is unsatisfiable")]
    Unsatisfiable(String),
    #[error("guard `{guard}`: {source}")]
    Guard { guard: String, source: GuardError },
    #[error("monitored domain has {0} valuations, too many to enumerate")]
    DomainTooLarge(u128),
    #[error("transition guard `{0}` is not a class of the alphabet")]
    UnknownClass(String),
    #[error(transparent)]
    Fsm(#[from] FsmError),
}

/// One input equivalence class, identified by its canonical guard string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputClass {
    pub id: String,
    pub guard: Guard,
    /// Smallest satisfying valuation in canonical enumeration order.
    pub representative: Valuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassAlphabet {
    /// Ordered by the canonical rank of their representatives.
    pub classes: Vec<InputClass>,
    /// Monitored valuations satisfying no class. They never reach a test.
    pub uncovered: u128,
}

impl ClassAlphabet {
    pub fn ids(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.id.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&InputClass> {
        self.classes.iter().find(|c| c.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.id == id)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// One class per distinct guard of `r`. Global mutual exclusivity is checked
/// by enumerating every monitored valuation.
pub fn extract_classes(r: &Sfsm, iface: &Interface) -> Result<ClassAlphabet, AbstractionError> {
    let space = ValuationSpace::inputs(iface);
    let size = space.size();
    if size > MAX_ENUMERATED_DOMAIN {
        return Err(AbstractionError::DomainTooLarge(size));
    }

    let mut guards: Vec<(String, Guard)> = Vec::new();
    let mut seen = HashSet::new();
    for t in &r.transitions {
        let id = t.guard.to_string();
        if seen.insert(id.clone()) {
            t.guard.check(iface).map_err(|source| AbstractionError::Guard {
                guard: id.clone(),
                source,
            })?;
            guards.push((id, t.guard.clone()));
        }
    }
    let compiled = guards
        .iter()
        .map(|(id, g)| {
            g.compile(&space).map_err(|source| AbstractionError::Guard {
                guard: id.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut first_hit: Vec<Option<(u128, Vec<usize>)>> = vec![None; guards.len()];
    let mut uncovered = 0u128;
    for (rank, digits) in space.digits().enumerate() {
        let mut holding = compiled
            .iter()
            .enumerate()
            .filter(|(_, c)| c.eval(&digits))
            .map(|(i, _)| i);
        match (holding.next(), holding.next()) {
            (None, _) => uncovered += 1,
            (Some(a), Some(b)) => {
                return Err(AbstractionError::Overlap {
                    first: guards[a].0.clone(),
                    second: guards[b].0.clone(),
                    witness: space.valuation(&digits),
                })
            }
            (Some(a), None) => {
                if first_hit[a].is_none() {
                    first_hit[a] = Some((rank as u128, digits));
                }
            }
        }
    }

    let mut classes = Vec::with_capacity(guards.len());
    for ((id, guard), hit) in guards.into_iter().zip(first_hit) {
        let (rank, digits) = hit.ok_or_else(|| AbstractionError::Unsatisfiable(id.clone()))?;
        classes.push((
            rank,
            InputClass {
                id,
                guard,
                representative: space.valuation(&digits),
            },
        ));
    }
    classes.sort_by_key(|(rank, _)| *rank);
    Ok(ClassAlphabet {
        classes: classes.into_iter().map(|(_, c)| c).collect(),
        uncovered,
    })
}

/// Adds an idle self-loop for every (state, class) pair without a
/// transition, making `r` input-complete over the class alphabet.
///
/// The result lists transitions ordered by (state, class).
pub fn complete_with_idle(r: &Sfsm, classes: &ClassAlphabet) -> Sfsm {
    let existing = r.by_state_and_guard();
    let mut transitions = Vec::with_capacity(r.states.len() * classes.len());
    for state in &r.states {
        for class in &classes.classes {
            match existing.get(&(state.as_str(), class.id.clone())) {
                Some(t) => transitions.push((*t).clone()),
                None => transitions.push(SfsmTransition {
                    src: state.clone(),
                    guard: class.guard.clone(),
                    output: Output::Idle,
                    tgt: state.clone(),
                }),
            }
        }
    }
    // Transitions whose guard is not a class are kept so that abstraction
    // can report them.
    let class_ids: HashSet<&str> = classes.classes.iter().map(|c| c.id.as_str()).collect();
    transitions.extend(
        r.transitions
            .iter()
            .filter(|t| !class_ids.contains(t.guard.to_string().as_str()))
            .cloned(),
    );
    Sfsm {
        states: r.states.clone(),
        initial: r.initial.clone(),
        transitions,
    }
}

/// Output alphabet of the abstraction: printed output valuations in
/// lexicographic order, followed by the idle symbol.
pub fn output_alphabet(r: &Sfsm, iface: &Interface) -> Vec<String> {
    let printed: BTreeSet<String> = r
        .transitions
        .iter()
        .filter(|t| !t.output.is_idle())
        .map(|t| t.output.symbol(iface))
        .collect();
    let mut out: Vec<String> = printed.into_iter().collect();
    out.push(IDLE_SYMBOL.to_string());
    out
}

/// Abstracts an input-complete, deterministic reference to an FSM whose
/// inputs are the class identifiers and whose outputs are printed output
/// valuations.
pub fn abstract_to_fsm(r: &Sfsm, classes: &ClassAlphabet, iface: &Interface) -> Result<Fsm, AbstractionError> {
    for t in &r.transitions {
        let id = t.guard.to_string();
        if classes.get(&id).is_none() {
            return Err(AbstractionError::UnknownClass(id));
        }
    }
    let transitions: Vec<FsmTransition> = r
        .transitions
        .iter()
        .map(|t| FsmTransition {
            src: t.src.clone(),
            input: t.guard.to_string(),
            output: t.output.symbol(iface),
            tgt: t.tgt.clone(),
        })
        .collect();
    Ok(Fsm::from_transitions(
        r.states.clone(),
        &r.initial,
        classes.ids(),
        output_alphabet(r, iface),
        &transitions,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Sort, VarDecl, VarKind};

    fn iface() -> Interface {
        Interface::new(
            vec![
                Sort::new("AB", ["a", "b"]),
                Sort::new("BC", ["b", "c"]),
                Sort::new("M", ["run", "stop"]),
                Sort::new("P", ["0", "a", "m"]),
            ],
            vec![
                VarDecl::new("x", "AB", VarKind::Monitored),
                VarDecl::new("y", "BC", VarKind::Monitored),
                VarDecl::new("o", "M", VarKind::Controlled),
                VarDecl::new("HS", "P", VarKind::Factor),
            ],
        )
        .unwrap()
    }

    fn t(src: &str, guard: &str, out: Option<&str>, tgt: &str) -> SfsmTransition {
        SfsmTransition {
            src: src.into(),
            guard: Guard::parse(guard).unwrap(),
            output: match out {
                Some(o) => Output::Values(Valuation::from_pairs([("o", o)])),
                None => Output::Idle,
            },
            tgt: tgt.into(),
        }
    }

    fn reference() -> Sfsm {
        Sfsm {
            states: vec!["0".into(), "HSa".into()],
            initial: "0".into(),
            transitions: vec![
                t("0", "x=a&y=b", Some("stop"), "HSa"),
                t("HSa", "x=b&y=c", Some("run"), "0"),
            ],
        }
    }

    #[test]
    fn total_conjunctions_give_disjoint_classes() {
        let classes = extract_classes(&reference(), &iface()).unwrap();
        assert_eq!(classes.ids(), ["x=a&y=b", "x=b&y=c"]);
        assert_eq!(
            classes.classes[1].representative,
            Valuation::from_pairs([("x", "b"), ("y", "c")])
        );
        assert_eq!(classes.uncovered, 2);
    }

    #[test]
    fn containment_is_an_overlap_with_witness() {
        let r = Sfsm {
            states: vec!["0".into()],
            initial: "0".into(),
            transitions: vec![t("0", "x=a", None, "0"), t("0", "x=a&y=b", None, "0")],
        };
        match extract_classes(&r, &iface()) {
            Err(AbstractionError::Overlap { witness, .. }) => {
                assert_eq!(witness, Valuation::from_pairs([("x", "a"), ("y", "b")]))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unsatisfiable_guard_rejected() {
        let r = Sfsm {
            states: vec!["0".into()],
            initial: "0".into(),
            transitions: vec![t("0", "x=a&!x=a", None, "0")],
        };
        assert!(matches!(
            extract_classes(&r, &iface()),
            Err(AbstractionError::Unsatisfiable(_))
        ));
    }

    #[test]
    fn idle_completion_counts() {
        let r = reference();
        let classes = extract_classes(&r, &iface()).unwrap();
        let done = complete_with_idle(&r, &classes);
        let added = done.transitions.iter().filter(|t| t.output.is_idle()).count();
        assert_eq!(added, r.states.len() * classes.len() - r.transitions.len());
        assert!(done.transitions.contains(&t("0", "x=b&y=c", None, "0")));
        // Already complete: nothing added.
        assert_eq!(
            complete_with_idle(&done, &classes).transitions.len(),
            done.transitions.len()
        );
    }

    #[test]
    fn abstraction_is_total() {
        let r = reference();
        let classes = extract_classes(&r, &iface()).unwrap();
        let m = abstract_to_fsm(&complete_with_idle(&r, &classes), &classes, &iface()).unwrap();
        assert_eq!(m.outputs, ["o=run", "o=stop", IDLE_SYMBOL]);
        assert_eq!(m.run_symbols(&[0, 0, 1]), ["o=stop", IDLE_SYMBOL, "o=run"]);
        // Without completion the function is partial.
        assert!(matches!(
            abstract_to_fsm(&r, &classes, &iface()),
            Err(AbstractionError::Fsm(FsmError::Missing { .. }))
        ));
    }

    #[test]
    fn single_state_single_class() {
        let r = Sfsm {
            states: vec!["0".into()],
            initial: "0".into(),
            transitions: vec![t("0", "x=a", Some("run"), "0")],
        };
        let classes = extract_classes(&r, &iface()).unwrap();
        let m = abstract_to_fsm(&complete_with_idle(&r, &classes), &classes, &iface()).unwrap();
        assert_eq!((m.n(), m.transitions().len()), (1, 1));
    }
}
