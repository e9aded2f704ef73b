//! Derives the reference SFSM from the workcell policy and lists the
//! transitions leaving the initial risk state.

use std::path::Path;

use supconf::model::Output;
use supconf::policy::{derive_reference, Policy};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/workcell/policy.json");
    let policy = Policy::load(&path).unwrap();
    let r = derive_reference(&policy).unwrap();
    println!(
        "{} controller transitions, {} risk states: {}",
        policy.controller_transitions().count(),
        r.states.len(),
        r.states.join(" ")
    );
    println!("initial risk state {}", r.initial);
    for t in r.transitions.iter().filter(|t| t.src == r.initial) {
        let out = match &t.output {
            Output::Idle => "IDLE".to_string(),
            o => o.symbol(&policy.iface),
        };
        println!("  {} --[{}] / {} --> {}", t.src, t.guard, out, t.tgt);
    }
}
