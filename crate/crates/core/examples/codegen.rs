//! Generates the supervisor program, statically checks it against the
//! reference, then injects each fault kind and checks again.

use std::path::Path;

use supconf::abstraction::{abstract_to_fsm, complete_with_idle, extract_classes, minimize};
use supconf::codegen::{analyze, generate_code, inject_fault, parse_program, Fault, FaultKind};
use supconf::policy::{derive_reference, Policy};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/workcell/policy.json");
    let policy = Policy::load(&path).unwrap();
    let iface = &policy.iface;
    let r = derive_reference(&policy).unwrap();
    let classes = extract_classes(&r, iface).unwrap();
    let completed = complete_with_idle(&r, &classes);
    let n = minimize(&abstract_to_fsm(&completed, &classes, iface).unwrap()).n();

    let prog = generate_code(&completed, &classes, iface);
    let text = prog.render(iface);
    for line in text.lines().take(8) {
        println!("{line}");
    }
    println!("... {} commands\n", prog.commands.len());
    assert_eq!(parse_program(&text).unwrap(), prog);
    println!(
        "generated: analysis {}",
        verdict(analyze(&prog, &completed, n).passed())
    );

    for kind in [FaultKind::Output, FaultKind::Transfer, FaultKind::AddState] {
        let fault = Fault { kind, seed: 1 };
        let bad = inject_fault(&prog, fault, iface).unwrap();
        let report = analyze(&bad, &completed, n);
        println!(
            "{fault}: analysis {} (guards {}, states {}, m = {})",
            verdict(report.passed()),
            report.guards_match,
            report.states_match,
            report.state_count_m
        );
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}
