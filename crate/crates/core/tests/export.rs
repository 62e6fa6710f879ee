mod common;

use std::path::PathBuf;

use couplesynth::smt::export::{chc_script, sections, vc_script};
use couplesynth::synth::prepare;

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

#[test]
fn faircoin_chc_golden() {
    let (b, _) = prepare(&common::task("faircoin.cpl", 0), 1).unwrap();
    golden("faircoin.chc", &chc_script(&b, None).unwrap());
}

#[test]
fn faircoin_smt2_golden() {
    let (b, _) = prepare(&common::task("faircoin.cpl", 0), 1).unwrap();
    golden("faircoin.smt2", &vc_script(&b, None).unwrap());
}

#[test]
fn faircoin_has_five_schemata() {
    let (b, _) = prepare(&common::task("faircoin.cpl", 0), 1).unwrap();
    assert_eq!(sections(&b, None).unwrap(), ["initiation", "consecution", "synchronization", "coupling", "property"]);
    common::faircoin_schemata(&chc_script(&b, None).unwrap()).unwrap();
    let golden = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/faircoin.chc")).unwrap();
    common::faircoin_schemata(&golden).unwrap();
}

#[test]
fn exports_are_deterministic() {
    let (b, _) = prepare(&common::task("ballot.cpl", 0), 1).unwrap();
    assert_eq!(chc_script(&b, None).unwrap(), chc_script(&b, None).unwrap());
    let (b, _) = prepare(&common::task("bayes.cpl", 0), 1).unwrap();
    assert_eq!(vc_script(&b, None).unwrap(), vc_script(&b, None).unwrap());
    assert!(chc_script(&b, None).is_err());
}

#[test]
fn schemata_check_rejects_mutations() {
    let (b, _) = prepare(&common::task("faircoin.cpl", 0), 1).unwrap();
    let s = chc_script(&b, None).unwrap();
    assert!(common::faircoin_schemata(&s.replace("; synchronization\n", "")).is_err());
    assert!(common::faircoin_schemata(&s.replace("(= x!1 y!1) (= x!2!next", "(not (= x!1 y!1)) (= x!2!next")).is_err());
    assert!(common::faircoin_schemata(&s.replace("(not (= x!1 y!1))) (= (= x!1 a)", "(= x!1 y!1)) (= (= x!1 a)")).is_err());
}
