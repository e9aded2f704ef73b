//! Generates H- and W-Method suites for the workcell reference at several
//! fault-domain bounds and checks each with the suite validator.

use std::path::Path;

use supconf::abstraction::{abstract_to_fsm, complete_with_idle, extract_classes, minimize};
use supconf::policy::{derive_reference, Policy};
use supconf::testgen::{characterization_set, generate_h, generate_w, state_cover, validate_h};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/workcell/policy.json");
    let policy = Policy::load(&path).unwrap();
    let r = derive_reference(&policy).unwrap();
    let classes = extract_classes(&r, &policy.iface).unwrap();
    let fsm = minimize(&abstract_to_fsm(&complete_with_idle(&r, &classes), &classes, &policy.iface).unwrap());

    let cover = state_cover(&fsm);
    let longest = cover.iter().flatten().map(Vec::len).max().unwrap_or(0);
    println!("n = {}, longest access sequence {longest}", fsm.n());
    println!("characterization set: {} sequences", characterization_set(&fsm).len());

    for m in [fsm.n(), fsm.n() + 1] {
        let h = generate_h(&fsm, m).unwrap();
        let w = generate_w(&fsm, m).unwrap();
        println!(
            "m = {m}: H {} cases / {} symbols (Val_H {}), W {} cases / {} symbols (Val_H {})",
            h.cases.len(),
            h.total_length(),
            validate_h(&h, &fsm),
            w.cases.len(),
            w.total_length(),
            validate_h(&w, &fsm)
        );
    }

    let h = generate_h(&fsm, fsm.n()).unwrap();
    let mut cut = h.clone();
    cut.cases.remove(cut.cases.len() / 2);
    println!("after deleting one case: Val_H {}", validate_h(&cut, &fsm));
    println!("first case: {}", h.symbols(&h.cases[0]).join(" . "));
}
