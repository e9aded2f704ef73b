use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{HarnessError, Wrapper};
use crate::abstraction::minimize;
use crate::codegen::GclProgram;
use crate::fsm::Fsm;
use crate::testgen::TestSuite;

/// Shortest input sequence on which `a` and `b` produce different output
/// symbols, or `None` when they are equivalent. Breadth-first over the
/// reachable product, inputs in declaration order.
pub fn fsm_equivalent(a: &Fsm, b: &Fsm) -> Result<Option<Vec<usize>>, HarnessError> {
    if a.inputs != b.inputs {
        return Err(HarnessError::AlphabetMismatch);
    }
    let k = a.inputs.len();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; a.n() * b.n()];
    let mut seen = vec![false; a.n() * b.n()];
    let start = a.initial * b.n() + b.initial;
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let path_to = |parent: &[Option<(usize, usize)>], mut node: usize| {
        let mut path = Vec::new();
        while let Some((prev, x)) = parent[node] {
            path.push(x);
            node = prev;
        }
        path.reverse();
        path
    };
    while let Some(node) = queue.pop_front() {
        let (sa, sb) = (node / b.n(), node % b.n());
        for x in 0..k {
            let ((oa, na), (ob, nb)) = (a.step(sa, x), b.step(sb, x));
            if a.outputs[oa] != b.outputs[ob] {
                let mut cex = path_to(&parent, node);
                cex.push(x);
                return Ok(Some(cex));
            }
            let next = na * b.n() + nb;
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, x));
                queue.push_back(next);
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutantKind {
    Output,
    Transfer,
    AddState,
}

/// A single fault of the given kind, deterministic in `seed`. The result is
/// deterministic, complete and has at most `m` states.
pub fn mutate(reference: &Fsm, kind: MutantKind, seed: u64, m: usize) -> Result<Fsm, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = reference.clone();
    let k = reference.inputs.len();
    if k == 0 {
        return Err(HarnessError::Mutation("machine has no inputs".into()));
    }
    let s = rng.gen_range(0..reference.n());
    let x = rng.gen_range(0..k);
    match kind {
        MutantKind::Output => {
            if reference.outputs.len() < 2 {
                return Err(HarnessError::Mutation(
                    "an output fault needs two output symbols".into(),
                ));
            }
            let (o, _) = reference.step(s, x);
            out.table[s][x].0 = (o + rng.gen_range(1..reference.outputs.len())) % reference.outputs.len();
        }
        MutantKind::Transfer => {
            if reference.n() < 2 {
                return Err(HarnessError::Mutation("a transfer fault needs two states".into()));
            }
            let (_, t) = reference.step(s, x);
            out.table[s][x].1 = (t + rng.gen_range(1..reference.n())) % reference.n();
        }
        MutantKind::AddState => {
            if reference.n() + 1 > m {
                return Err(HarnessError::Mutation(format!(
                    "adding a state to {} states would exceed m = {m}",
                    reference.n()
                )));
            }
            let copied = rng.gen_range(0..reference.n());
            let mut row = reference.table[copied].clone();
            let y = rng.gen_range(0..k);
            if reference.outputs.len() > 1 {
                row[y].0 = (row[y].0 + rng.gen_range(1..reference.outputs.len())) % reference.outputs.len();
            }
            let new = out.n();
            let mut name = format!("{}x", reference.states[copied]);
            while out.states.contains(&name) {
                name.push('x');
            }
            out.states.push(name);
            out.table.push(row);
            out.table[s][x].1 = new;
        }
    }
    Ok(out)
}

/// Applies `faults` random output or transfer faults.
pub fn mutate_faults(reference: &Fsm, faults: usize, seed: u64) -> Fsm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = reference.clone();
    for _ in 0..faults {
        let kind = if reference.outputs.len() < 2 || (reference.n() >= 2 && rng.gen_bool(0.5)) {
            MutantKind::Transfer
        } else {
            MutantKind::Output
        };
        if let Ok(next) = mutate(&m, kind, rng.gen(), m.n()) {
            m = next;
        }
    }
    m
}

/// `count` mutants with 1 to `max_faults` faults each.
pub fn sample_mutants(reference: &Fsm, count: usize, seed: u64, max_faults: usize) -> Vec<Fsm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let faults = rng.gen_range(1..=max_faults.max(1));
            mutate_faults(reference, faults, rng.gen())
        })
        .collect()
}

/// Random reachable, minimal machine with states `s0..`, inputs `i0..` and
/// outputs `o0..`.
pub fn random_minimal_fsm(n: usize, inputs: usize, outputs: usize, seed: u64) -> Fsm {
    assert!(n >= 1 && inputs >= 1 && outputs >= 1);
    assert!(
        n == 1 || outputs >= 2,
        "a minimal machine with several states needs two outputs"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let table: Vec<Vec<(usize, usize)>> = (0..n)
            .map(|_| {
                (0..inputs)
                    .map(|_| (rng.gen_range(0..outputs), rng.gen_range(0..n)))
                    .collect()
            })
            .collect();
        let m = Fsm {
            states: (0..n).map(|i| format!("s{i}")).collect(),
            initial: 0,
            inputs: (0..inputs).map(|i| format!("i{i}")).collect(),
            outputs: (0..outputs).map(|i| format!("o{i}")).collect(),
            table,
        };
        if minimize(&m).n() == n {
            return m;
        }
    }
}

/// Whether `sut` produces the reference outputs on every case.
pub fn passes_suite(suite: &TestSuite, sut: &Fsm, reference: &Fsm) -> bool {
    suite.cases.iter().all(|case| {
        let (got, _) = sut.run_from(sut.initial, case);
        let (want, _) = reference.run_from(reference.initial, case);
        got.iter()
            .zip(&want)
            .all(|(&g, &w)| sut.outputs[g] == reference.outputs[w])
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MutationScore {
    pub total: usize,
    pub equivalent: usize,
    pub killed: usize,
    /// Non-equivalent mutants that passed the suite.
    pub survived: usize,
    /// Equivalent mutants that failed the suite.
    pub equivalent_failed: usize,
}

impl MutationScore {
    /// Killed fraction of non-equivalent mutants; 1 when there are none.
    pub fn score(&self) -> f64 {
        let live = self.total - self.equivalent;
        if live == 0 {
            1.0
        } else {
            self.killed as f64 / live as f64
        }
    }
}

/// Runs `suite` against every mutant and classifies it with the
/// product-machine oracle.
pub fn score_mutants(reference: &Fsm, suite: &TestSuite, mutants: &[Fsm]) -> MutationScore {
    mutants
        .par_iter()
        .map(|m| {
            let equivalent = fsm_equivalent(reference, m)
                .expect("mutants share the alphabet")
                .is_none();
            let passes = passes_suite(suite, m, reference);
            MutationScore {
                total: 1,
                equivalent: equivalent as usize,
                killed: (!equivalent && !passes) as usize,
                survived: (!equivalent && passes) as usize,
                equivalent_failed: (equivalent && !passes) as usize,
            }
        })
        .reduce(MutationScore::default, |a, b| MutationScore {
            total: a.total + b.total,
            equivalent: a.equivalent + b.equivalent,
            killed: a.killed + b.killed,
            survived: a.survived + b.survived,
            equivalent_failed: a.equivalent_failed + b.equivalent_failed,
        })
}

/// FSM abstraction of a program: drives it through every (state, class)
/// pair via γ and prints each observed output. Output symbols absent from
/// `reference` are appended to the alphabet.
pub fn abstract_program(prog: &GclProgram, wrapper: &Wrapper, reference: &Fsm) -> Result<Fsm, HarnessError> {
    let mut states: Vec<String> = prog.states.clone();
    for s in prog.mentioned_states() {
        if !states.iter().any(|x| x == s) {
            states.push(s.to_string());
        }
    }
    let mut outputs = reference.outputs.clone();
    let mut table = Vec::with_capacity(states.len());
    for (si, state) in states.iter().enumerate() {
        let mut row = Vec::with_capacity(reference.inputs.len());
        for (xi, symbol) in reference.inputs.iter().enumerate() {
            let input = wrapper
                .gamma(symbol)
                .ok_or_else(|| HarnessError::UnknownSymbol(symbol.clone()))?;
            let (out, next) = prog.step(state, input).map_err(|source| HarnessError::Sut {
                case: si,
                step: xi,
                source,
            })?;
            let printed = out.symbol(wrapper.iface());
            let o = match outputs.iter().position(|o| *o == printed) {
                Some(o) => o,
                None => {
                    outputs.push(printed);
                    outputs.len() - 1
                }
            };
            let n = states
                .iter()
                .position(|s| *s == next)
                .expect("next states are mentioned");
            row.push((o, n));
        }
        table.push(row);
    }
    let initial = states
        .iter()
        .position(|s| *s == prog.initial)
        .expect("initial is mentioned");
    Ok(Fsm {
        states,
        initial,
        inputs: reference.inputs.clone(),
        outputs,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::tests::toggle;

    fn constant() -> Fsm {
        Fsm {
            states: vec!["c".into()],
            initial: 0,
            inputs: vec!["k".into(), "t".into()],
            outputs: vec!["lo".into(), "hi".into()],
            table: vec![vec![(0, 0), (0, 0)]],
        }
    }

    #[test]
    fn toggle_vs_constant_counterexample() {
        let cex = fsm_equivalent(&toggle(), &constant()).unwrap().unwrap();
        assert!(cex.len() <= 2);
        assert_eq!(cex, [1]);
        assert!(fsm_equivalent(&toggle(), &toggle()).unwrap().is_none());
    }

    #[test]
    fn output_and_transfer_mutants_change_one_entry() {
        let m = toggle();
        for seed in 0..10 {
            for kind in [MutantKind::Output, MutantKind::Transfer] {
                let x = mutate(&m, kind, seed, 2).unwrap();
                let changed: usize = (0..2)
                    .flat_map(|s| (0..2).map(move |i| (s, i)))
                    .filter(|&(s, i)| x.table[s][i] != m.table[s][i])
                    .count();
                assert_eq!(changed, 1);
            }
        }
    }

    #[test]
    fn add_state_respects_bound() {
        let m = toggle();
        let err = mutate(&m, MutantKind::AddState, 0, 2).unwrap_err();
        assert!(err.to_string().contains("would exceed m"));
        assert_eq!(mutate(&m, MutantKind::AddState, 0, 3).unwrap().n(), 3);
    }

    #[test]
    fn random_machines_are_minimal_and_seeded() {
        let a = random_minimal_fsm(5, 3, 2, 11);
        assert_eq!(minimize(&a).n(), 5);
        assert_eq!(a, random_minimal_fsm(5, 3, 2, 11));
    }

    #[test]
    fn abstraction_of_generated_program_matches_reference() {
        let (prog, fsm, w, _, _) = crate::harness::tests::setup();
        let abs = abstract_program(&prog, &w, &fsm).unwrap();
        assert!(fsm_equivalent(&abs, &fsm).unwrap().is_none());
    }
}
