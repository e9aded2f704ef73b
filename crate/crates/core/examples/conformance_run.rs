//! Runs the H suite against the generated program and against an
//! output-faulted one, then validates both execution logs.

use std::path::Path;

use supconf::abstraction::{abstract_to_fsm, complete_with_idle, extract_classes, minimize};
use supconf::codegen::{generate_code, inject_fault, Fault, FaultKind};
use supconf::harness::{run_suite, validate_log, Wrapper};
use supconf::policy::{derive_reference, Policy};
use supconf::testgen::generate_h;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/workcell/policy.json");
    let policy = Policy::load(&path).unwrap();
    let iface = &policy.iface;
    let r = derive_reference(&policy).unwrap();
    let classes = extract_classes(&r, iface).unwrap();
    let completed = complete_with_idle(&r, &classes);
    let fsm = minimize(&abstract_to_fsm(&completed, &classes, iface).unwrap());
    let suite = generate_h(&fsm, fsm.n()).unwrap();
    let wrapper = Wrapper::new(&classes, &completed, iface);

    let good = generate_code(&completed, &classes, iface);
    let bad = inject_fault(
        &good,
        Fault {
            kind: FaultKind::Output,
            seed: 3,
        },
        iface,
    )
    .unwrap();
    for (name, prog) in [("generated", &good), ("output fault", &bad)] {
        let (verdicts, log) = run_suite(&suite, prog, &fsm, &wrapper).unwrap();
        println!(
            "{name}: {} cases, {} passed, {} failed; Val_log {}",
            log.summary.cases,
            log.summary.passed,
            log.summary.failed,
            validate_log(&log, &suite, &classes)
        );
        if let Some((i, v)) = verdicts.iter().enumerate().find(|(_, v)| !v.is_pass()) {
            println!("  case {i}: {v}");
        }
        if name == "generated" {
            println!("  first log line: {}", log.to_jsonl().lines().next().unwrap());
        }
    }
}
