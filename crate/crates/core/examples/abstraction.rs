//! Extracts input classes, completes the reference with idle self-loops,
//! abstracts it to a symbol FSM and minimizes the result.

use std::path::Path;

use supconf::abstraction::{abstract_to_fsm, complete_with_idle, extract_classes, minimize};
use supconf::policy::{derive_reference, Policy};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/workcell/policy.json");
    let policy = Policy::load(&path).unwrap();
    let r = derive_reference(&policy).unwrap();
    let classes = extract_classes(&r, &policy.iface).unwrap();
    println!(
        "{} input classes, {} uncovered input valuations",
        classes.len(),
        classes.uncovered
    );
    for c in &classes.classes {
        println!("  {:40} representative {}", c.id, c.representative);
    }
    let completed = complete_with_idle(&r, &classes);
    println!(
        "idle completion adds {} transitions",
        completed.transitions.len() - r.transitions.len()
    );
    let fsm = abstract_to_fsm(&completed, &classes, &policy.iface).unwrap();
    let min = minimize(&fsm);
    println!("abstraction: {} states, minimized: {} states\n", fsm.n(), min.n());
    print!("{}", min.to_text());
}
