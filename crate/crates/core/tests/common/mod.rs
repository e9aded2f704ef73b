#![allow(dead_code)]

use std::path::{Path, PathBuf};

use supconf::abstraction::{abstract_to_fsm, complete_with_idle, extract_classes, minimize, ClassAlphabet};
use supconf::codegen::{generate_code, GclProgram};
use supconf::fsm::Fsm;
use supconf::harness::Wrapper;
use supconf::model::Interface;
use supconf::policy::{derive_reference, Policy};
use supconf::sfsm::Sfsm;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/workcell")
}

/// Copies the fixture policy, interface and config into `dir`.
pub fn copy_fixture(dir: &Path) {
    for name in ["policy.json", "workcell-interface.json", "supconf.json"] {
        std::fs::copy(fixture_dir().join(name), dir.join(name)).unwrap();
    }
}

/// Every in-memory artifact of the workcell fixture.
pub struct Workcell {
    pub iface: Interface,
    pub completed: Sfsm,
    pub classes: ClassAlphabet,
    /// Unminimized abstraction.
    pub abstraction: Fsm,
    pub fsm: Fsm,
    pub program: GclProgram,
    pub wrapper: Wrapper,
}

pub fn workcell() -> Workcell {
    let policy = Policy::load(&fixture_dir().join("policy.json")).unwrap();
    let r = derive_reference(&policy).unwrap();
    let iface = policy.iface.clone();
    let classes = extract_classes(&r, &iface).unwrap();
    let completed = complete_with_idle(&r, &classes);
    let abstraction = abstract_to_fsm(&completed, &classes, &iface).unwrap();
    let fsm = minimize(&abstraction);
    let program = generate_code(&completed, &classes, &iface);
    let wrapper = Wrapper::new(&classes, &completed, &iface);
    Workcell {
        iface,
        completed,
        classes,
        abstraction,
        fsm,
        program,
        wrapper,
    }
}

/// Random complete machine, not necessarily minimal or reachable.
pub fn random_fsm(n: usize, inputs: usize, outputs: usize, rng: &mut impl rand::Rng) -> Fsm {
    Fsm {
        states: (0..n).map(|i| format!("s{i}")).collect(),
        initial: 0,
        inputs: (0..inputs).map(|i| format!("i{i}")).collect(),
        outputs: (0..outputs).map(|i| format!("o{i}")).collect(),
        table: (0..n)
            .map(|_| {
                (0..inputs)
                    .map(|_| (rng.gen_range(0..outputs), rng.gen_range(0..n)))
                    .collect()
            })
            .collect(),
    }
}

/// Independent equivalence oracle: compares output-symbol traces on every
/// input word up to `depth`. Returns the first distinguishing word in
/// length-then-lexicographic order.
pub fn trace_difference(a: &Fsm, b: &Fsm, depth: usize) -> Option<Vec<usize>> {
    let k = a.inputs.len();
    let mut frontier: Vec<(Vec<usize>, usize, usize)> = vec![(Vec::new(), a.initial, b.initial)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * k);
        for (word, sa, sb) in &frontier {
            for x in 0..k {
                let (oa, na) = a.table[*sa][x];
                let (ob, nb) = b.table[*sb][x];
                let mut w = word.clone();
                w.push(x);
                if a.outputs[oa] != b.outputs[ob] {
                    return Some(w);
                }
                next.push((w, na, nb));
            }
        }
        frontier = next;
    }
    None
}
