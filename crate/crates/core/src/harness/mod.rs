//! Test harness: the γ/ω wrapper, suite execution against a guarded-command
//! program, execution logs and their validator, and the FSM oracles.

mod log;
mod oracle;

pub use log::{validate_log, ExecutionLog, LogEntry, LogSummary, LogViolation};
pub use oracle::{
    abstract_program, fsm_equivalent, mutate, mutate_faults, passes_suite, random_minimal_fsm, sample_mutants,
    score_mutants, MutantKind, MutationScore,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::ClassAlphabet;
use crate::codegen::{GclError, GclProgram};
use crate::fsm::Fsm;
use crate::model::{Interface, Output, Valuation};
use crate::sfsm::Sfsm;
use crate::testgen::TestSuite;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("input alphabets differ")]
    AlphabetMismatch,
    #[error("symbol `{0}` has no class representative")]
    UnknownSymbol(String),
    #[error("case {case}, step {step}: {source}")]
    Sut { case: usize, step: usize, source: GclError },
    #[error("{0}")]
    Mutation(String),
    #[error("malformed log line {line}: {message}")]
    Log { line: usize, message: String },
}

/// The bijections between abstract symbols and concrete valuations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wrapper {
    /// Class identifier to its representative input valuation.
    pub gamma: BTreeMap<String, Valuation>,
    /// Printed outputs occurring in the reference, each its own symbol.
    pub omega: BTreeSet<String>,
    iface: Interface,
}

impl Wrapper {
    pub fn new(classes: &ClassAlphabet, reference: &Sfsm, iface: &Interface) -> Wrapper {
        Wrapper {
            gamma: classes
                .classes
                .iter()
                .map(|c| (c.id.clone(), c.representative.clone()))
                .collect(),
            omega: reference.transitions.iter().map(|t| t.output.symbol(iface)).collect(),
            iface: iface.clone(),
        }
    }

    pub fn gamma(&self, symbol: &str) -> Option<&Valuation> {
        self.gamma.get(symbol)
    }

    /// Abstract output symbol of an observed output; `None` outside the
    /// reference's output range.
    pub fn omega(&self, out: &Output) -> Option<String> {
        let printed = out.symbol(&self.iface);
        (out.is_idle() || self.omega.contains(&printed)).then_some(printed)
    }

    pub fn iface(&self) -> &Interface {
        &self.iface
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail { step: usize, reason: String },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("PASS"),
            Verdict::Fail { step, reason } => write!(f, "FAIL at step {step}: {reason}"),
        }
    }
}

/// Executes every case from the program's initial state. A case passes iff
/// every observed output symbol equals the reference output.
pub fn run_suite(
    suite: &TestSuite,
    sut: &GclProgram,
    reference: &Fsm,
    wrapper: &Wrapper,
) -> Result<(Vec<Verdict>, ExecutionLog), HarnessError> {
    let ref_inputs: Vec<usize> = suite
        .alphabet
        .iter()
        .map(|s| reference.input_index(s).ok_or(HarnessError::AlphabetMismatch))
        .collect::<Result<_, _>>()?;
    for s in &suite.alphabet {
        wrapper.gamma(s).ok_or_else(|| HarnessError::UnknownSymbol(s.clone()))?;
    }

    let per_case: Vec<(Verdict, Vec<LogEntry>)> = suite
        .cases
        .par_iter()
        .enumerate()
        .map(|(case_idx, case)| {
            let mapped: Vec<usize> = case.iter().map(|&x| ref_inputs[x]).collect();
            let expected = reference.run_symbols(&mapped);
            let mut state = sut.initial.clone();
            let mut verdict = Verdict::Pass;
            let mut entries = Vec::with_capacity(case.len());
            for (step_idx, &x) in case.iter().enumerate() {
                let symbol = &suite.alphabet[x];
                let input = wrapper.gamma(symbol).expect("checked above");
                let (out, next) = sut.step(&state, input).map_err(|source| HarnessError::Sut {
                    case: case_idx,
                    step: step_idx,
                    source,
                })?;
                state = next;
                let observed = wrapper.omega(&out);
                let ok = observed.as_deref() == Some(expected[step_idx]);
                if !ok && verdict.is_pass() {
                    let reason = match &observed {
                        Some(o) => format!("expected {}, observed {o}", expected[step_idx]),
                        None => format!(
                            "expected {}, observed {} outside the reference output range",
                            expected[step_idx],
                            out.symbol(wrapper.iface())
                        ),
                    };
                    verdict = Verdict::Fail { step: step_idx, reason };
                }
                entries.push(LogEntry {
                    case_idx,
                    step_idx,
                    input_symbol: symbol.clone(),
                    input_valuation: input.clone(),
                    observed_output_valuation: out,
                    observed_symbol: observed,
                    expected_symbol: expected[step_idx].to_string(),
                    step_verdict: if ok { "PASS" } else { "FAIL" }.to_string(),
                });
            }
            Ok((verdict, entries))
        })
        .collect::<Result<_, HarnessError>>()?;

    let mut verdicts = Vec::with_capacity(per_case.len());
    let mut entries = Vec::new();
    for (v, e) in per_case {
        verdicts.push(v);
        entries.extend(e);
    }
    let log = ExecutionLog::new(entries, verdicts.clone());
    Ok((verdicts, log))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::abstraction::{abstract_to_fsm, minimize};
    use crate::codegen::tests::fixture;
    use crate::codegen::{inject_fault, Fault, FaultKind};
    use crate::model::IDLE_SYMBOL;
    use crate::testgen::generate_h;

    pub(crate) fn setup() -> (GclProgram, Fsm, Wrapper, TestSuite, ClassAlphabet) {
        let (iface, done, classes, prog) = fixture();
        let fsm = minimize(&abstract_to_fsm(&done, &classes, &iface).unwrap());
        // The fixture reference has two equivalent states, so the program
        // has more states than the minimized abstraction; m must cover it.
        let suite = generate_h(&fsm, done.states.len()).unwrap();
        let wrapper = Wrapper::new(&classes, &done, &iface);
        (prog, fsm, wrapper, suite, classes)
    }

    #[test]
    fn wrapper_maps() {
        let (_, _, w, _, classes) = setup();
        for c in &classes.classes {
            assert!(c.guard.eval(w.gamma(&c.id).unwrap()).unwrap());
        }
        assert_eq!(w.omega(&Output::Idle).as_deref(), Some(IDLE_SYMBOL));
        let odd = Output::Values(Valuation::from_pairs([("safmod", "bogus")]));
        assert_eq!(w.omega(&odd), None);
    }

    #[test]
    fn generated_program_conforms() {
        let (prog, fsm, w, suite, _) = setup();
        let (verdicts, log) = run_suite(&suite, &prog, &fsm, &w).unwrap();
        assert!(verdicts.iter().all(Verdict::is_pass));
        assert_eq!(log.entries.len(), suite.total_length());
    }

    #[test]
    fn output_fault_fails() {
        let (prog, fsm, w, suite, _) = setup();
        let iface = w.iface().clone();
        let mut caught = 0;
        for seed in 0..20 {
            let bad = inject_fault(
                &prog,
                Fault {
                    kind: FaultKind::Output,
                    seed,
                },
                &iface,
            )
            .unwrap();
            let (verdicts, _) = run_suite(&suite, &bad, &fsm, &w).unwrap();
            if verdicts.iter().any(|v| !v.is_pass()) {
                caught += 1;
            }
        }
        assert_eq!(caught, 20);
    }

    #[test]
    fn empty_suite_passes_vacuously() {
        let (prog, fsm, w, mut suite, _) = setup();
        suite.cases.clear();
        let (verdicts, log) = run_suite(&suite, &prog, &fsm, &w).unwrap();
        assert!(verdicts.is_empty() && log.entries.is_empty());
        assert_eq!(log.summary.cases, 0);
    }
}
