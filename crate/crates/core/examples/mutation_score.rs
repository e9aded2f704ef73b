//! Scores H and W suites against sampled mutants of random minimal
//! references, classifying mutants with the product-machine oracle.

use supconf::harness::{random_minimal_fsm, sample_mutants, score_mutants};
use supconf::testgen::{generate_h, generate_w};

fn main() {
    for (i, (n, k)) in [(3, 2), (4, 3), (6, 4)].into_iter().enumerate() {
        let r = random_minimal_fsm(n, k, 2, i as u64);
        let mutants = sample_mutants(&r, 2000, 100 + i as u64, 3);
        for (method, suite) in [("H", generate_h(&r, n).unwrap()), ("W", generate_w(&r, n).unwrap())] {
            let s = score_mutants(&r, &suite, &mutants);
            println!(
                "n = {n}, |inputs| = {k}, {method}: {} symbols, {} mutants ({} equivalent), score {:.4}",
                suite.total_length(),
                s.total,
                s.equivalent,
                s.score()
            );
        }
    }
}
