//! Runs every stage on a copy of the workcell fixture in a scratch
//! directory, then repeats with a transfer fault injected.

use std::path::Path;

use supconf::pipeline::{cmd_pipeline, Workspace};

fn main() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/workcell");
    let dir = tempfile::tempdir().unwrap();
    for name in ["policy.json", "workcell-interface.json", "supconf.json"] {
        std::fs::copy(fixture.join(name), dir.path().join(name)).unwrap();
    }
    let mut ws = Workspace::load(&dir.path().join("supconf.json")).unwrap();

    let out = cmd_pipeline(&ws).unwrap();
    for line in &out.lines {
        println!("{line}");
    }
    println!("exit {}\n", out.exit.code());

    ws.config.mutate = Some("transfer:1".into());
    let out = cmd_pipeline(&ws).unwrap();
    for line in &out.lines {
        println!("{line}");
    }
    println!("exit {}", out.exit.code());
}
