mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{trace_difference, workcell};
use supconf::fsm::Fsm;
use supconf::harness::{fsm_equivalent, passes_suite};
use supconf::model::{Output, ValuationSpace};
use supconf::testgen::{concretize, generate_h, generate_w, validate_h};

fn toggle() -> Fsm {
    Fsm {
        states: vec!["off".into(), "on".into()],
        initial: 0,
        inputs: vec!["keep".into(), "flip".into()],
        outputs: vec!["lo".into(), "hi".into()],
        table: vec![vec![(0, 0), (1, 1)], vec![(1, 1), (0, 0)]],
    }
}

/// Every complete machine with `n` states over the toggle's alphabets and
/// initial state 0.
fn all_machines(n: usize) -> Vec<Fsm> {
    let cells = 2 * n;
    let choices = 2 * n;
    let total = choices.pow(cells as u32);
    (0..total)
        .map(|mut code| {
            let mut table = vec![vec![(0, 0); 2]; n];
            for cell in table.iter_mut().flatten() {
                let c = code % choices;
                code /= choices;
                *cell = (c % 2, c / 2);
            }
            Fsm {
                states: (0..n).map(|i| format!("q{i}")).collect(),
                table,
                ..toggle()
            }
        })
        .collect()
}

#[test]
fn toggle_suite_kills_every_other_two_state_machine() {
    let reference = toggle();
    for suite in [generate_h(&reference, 2).unwrap(), generate_w(&reference, 2).unwrap()] {
        let machines = all_machines(2);
        assert_eq!(machines.len(), 256);
        let mut non_equivalent = 0;
        for m in &machines {
            // Two states reach every pair within three steps.
            let differs = trace_difference(&reference, m, 3).is_some();
            assert_eq!(differs, fsm_equivalent(&reference, m).unwrap().is_some());
            if differs {
                non_equivalent += 1;
                assert!(!passes_suite(&suite, m, &reference), "survivor {:?}", m.table);
            } else {
                assert!(passes_suite(&suite, m, &reference));
            }
        }
        assert_eq!(non_equivalent, 255);
    }
}

#[test]
fn one_state_reference() {
    let constant = Fsm {
        states: vec!["c".into()],
        table: vec![vec![(0, 0), (0, 0)]],
        ..toggle()
    };
    let h1 = generate_h(&constant, 1).unwrap();
    assert!(validate_h(&h1, &constant).passed());
    assert_eq!(h1.cases.len(), 2);

    let h2 = generate_h(&constant, 2).unwrap();
    assert!(validate_h(&h2, &constant).passed());
    for m in all_machines(2) {
        let differs = trace_difference(&constant, &m, 3).is_some();
        assert_eq!(passes_suite(&h2, &m, &constant), !differs, "{:?}", m.table);
    }
}

#[test]
fn concrete_suite_satisfies_class_guards() {
    let w = workcell();
    let suite = generate_h(&w.fsm, w.fsm.n()).unwrap();
    let concrete = concretize(&suite, &w.classes).unwrap();
    assert_eq!(concrete.cases.len(), suite.cases.len());
    for (abs, conc) in suite.cases.iter().zip(&concrete.cases) {
        assert_eq!(abs.len(), conc.len());
        for (&x, v) in abs.iter().zip(conc) {
            let class = w.classes.get(&suite.alphabet[x]).unwrap();
            assert!(class.guard.eval(v).unwrap());
            for other in w.classes.classes.iter().filter(|c| c.id != class.id) {
                assert!(!other.guard.eval(v).unwrap());
            }
        }
    }
}

#[test]
fn program_step_agrees_with_reference() {
    let w = workcell();
    let space: Vec<_> = ValuationSpace::inputs(&w.iface).iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut idle = 0;
    for _ in 0..10_000 {
        let state = &w.completed.states[rng.gen_range(0..w.completed.states.len())];
        let input = &space[rng.gen_range(0..space.len())];
        let (out, next) = w.program.step(state, input).unwrap();
        match w.completed.step(state, input).unwrap() {
            Some(t) => {
                assert_eq!(out, t.output);
                assert_eq!(&next, &t.tgt);
            }
            None => {
                idle += 1;
                assert_eq!(out, Output::Idle);
                assert_eq!(&next, state);
            }
        }
    }
    // Some valuations satisfy no guard; they must leave the program idle.
    assert!(idle > 0);
}

#[test]
fn generation_is_deterministic() {
    let w = workcell();
    assert_eq!(generate_h(&w.fsm, 14).unwrap(), generate_h(&w.fsm, 14).unwrap());
    assert_eq!(
        generate_w(&w.fsm, 13).unwrap().to_json(),
        generate_w(&w.fsm, 13).unwrap().to_json()
    );
}
