//! Parses guards over the workcell interface, prints their canonical form
//! and counts the input valuations each one admits.

use std::path::Path;

use supconf::model::{parse_guard, satisfying_valuations, Interface, Valuation};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/workcell/workcell-interface.json");
    let iface = Interface::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();

    for text in [
        "rngDet = close",
        "hloc=atWeldSpot & rloc=atWeldSpot",
        "!(rngDet=far) | hloc = away",
        "hloc=atTable & rngDet=", // malformed
        "safmod=normal",          // not a monitored variable
    ] {
        match parse_guard(text, &iface) {
            Ok(g) => {
                let n = satisfying_valuations(&g, &iface).unwrap().len();
                println!("{text:40} => {g}  ({n} input valuations)");
            }
            Err(e) => println!("{text:40} => error: {e}"),
        }
    }

    let g = parse_guard("hloc=atWeldSpot & rloc=atWeldSpot", &iface).unwrap();
    let v = Valuation::from_pairs([("hloc", "atWeldSpot"), ("rloc", "atWeldSpot"), ("rngDet", "near")]);
    println!("{g} on {v}: {}", g.eval(&v).unwrap());
}
