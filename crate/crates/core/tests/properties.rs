mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random_fsm;
use supconf::abstraction::minimize;
use supconf::fsm::Fsm;
use supconf::harness::{fsm_equivalent, passes_suite, random_minimal_fsm, sample_mutants};
use supconf::testgen::{generate_h, validate_h, TestSuite};

fn arb_fsm() -> impl Strategy<Value = Fsm> {
    (1usize..=7, 1usize..=3, 1usize..=3, any::<u64>())
        .prop_map(|(n, k, o, seed)| random_fsm(n, k, o, &mut ChaCha8Rng::seed_from_u64(seed)))
}

fn arb_minimal() -> impl Strategy<Value = Fsm> {
    (1usize..=5, 1usize..=3, any::<u64>()).prop_map(|(n, k, seed)| random_minimal_fsm(n, k, 2, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minimize_is_equivalent_and_idempotent(m in arb_fsm()) {
        let min = minimize(&m);
        prop_assert!(fsm_equivalent(&m, &min).unwrap().is_none());
        prop_assert!(min.n() <= m.n());
        prop_assert_eq!(minimize(&min), min);
    }

    #[test]
    fn counterexamples_distinguish(a in arb_fsm(), seed in any::<u64>()) {
        let b = random_fsm(a.n(), a.inputs.len(), a.outputs.len(), &mut ChaCha8Rng::seed_from_u64(seed));
        if let Some(w) = fsm_equivalent(&a, &b).unwrap() {
            let (oa, ob) = (a.run(&w), b.run(&w));
            prop_assert_ne!(&a.outputs[*oa.last().unwrap()], &b.outputs[*ob.last().unwrap()]);
            let agree = oa[..w.len() - 1].iter().zip(&ob).all(|(&x, &y)| a.outputs[x] == b.outputs[y]);
            prop_assert!(agree);
        }
    }

    #[test]
    fn generated_h_suites_validate(r in arb_minimal(), extra in 0usize..=1) {
        let suite = generate_h(&r, r.n() + extra).unwrap();
        prop_assert!(validate_h(&suite, &r).passed());
        let back = TestSuite::from_json(&suite.to_json()).unwrap();
        prop_assert_eq!(back, suite);
    }

    #[test]
    fn h_suite_kills_sampled_mutants(r in arb_minimal(), seed in any::<u64>()) {
        let suite = generate_h(&r, r.n()).unwrap();
        for m in sample_mutants(&r, 50, seed, 3) {
            let equivalent = fsm_equivalent(&r, &m).unwrap().is_none();
            prop_assert_eq!(passes_suite(&suite, &m, &r), equivalent);
        }
    }
}
