//! Every catalog record at its defaults.

use std::collections::BTreeMap;

use isochron::catalog::{run_batteries, BatteryOptions, Catalog, Kind};

/// The degree-four Z record is transcribed verbatim and its x^5 zero-Urabe
/// coefficient does not vanish; it is the only record expected to fail.
const KNOWN_BAD: &[&str] = &["deg4-zero-urabe-VI"];

#[test]
fn isochronous_records_pass_their_batteries() {
    let cat = Catalog::builtin().unwrap();
    let ids: Vec<String> = cat.families.iter().filter(|f| f.kind == Kind::Isochronous).map(|f| f.id.clone()).collect();
    let mut failures = Vec::new();
    for (id, rep) in run_batteries(&cat, &ids, &BatteryOptions::default()) {
        let rep = rep.unwrap_or_else(|e| panic!("{}: {}", id, e));
        for c in &rep.checks {
            eprintln!("{:24} {:28} {} {}", id, c.name, if c.pass { "ok  " } else { "FAIL" }, c.detail);
        }
        if rep.pass == KNOWN_BAD.contains(&id.as_str()) {
            failures.push(id);
        }
    }
    assert!(failures.is_empty(), "unexpected outcomes: {:?}", failures);
}

#[test]
fn z_record_fails_only_at_the_zero_urabe_identity() {
    let cat = Catalog::builtin().unwrap();
    let opts = BatteryOptions { numeric: false, ..Default::default() };
    let rep = isochron::catalog::verification_battery(&cat, "deg4-zero-urabe-VI", None, &BTreeMap::new(), &opts).unwrap();
    let z = rep.check("zero-urabe").unwrap();
    assert!(!z.pass);
    let r = z.residual.unwrap();
    assert!(r > 1e-3 && r < 1e-1, "{}", r);
}
