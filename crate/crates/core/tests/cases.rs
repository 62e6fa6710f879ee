mod common;

use couplesynth::synth::{synthesize, SynthConfig};

fn run(name: &str) -> couplesynth::synth::ProofReport {
    let r = synthesize(&common::task(name, 0), &common::solver(), &SynthConfig::default()).unwrap();
    eprintln!("{}", serde_json::to_string_pretty(&r).unwrap());
    assert!(!r.oracle.is_empty());
    assert!(r.oracle.iter().all(|o| o.holds == Some(true)), "{:?}", r.oracle);
    r
}

#[test]
fn faircoin() {
    let r = run("faircoin.cpl");
    assert!(r.proved());
    assert!(r.candidate_index.unwrap() <= 20);
}

#[test]
fn fairdie() {
    let r = run("fairdie.cpl");
    assert!(r.proved());
    assert!(r.candidate_index.unwrap() <= 200);
}

#[test]
fn noisysum() {
    let r = run("noisysum.cpl");
    assert!(r.proved());
    assert!(r.candidate_index.unwrap() <= 50);
}

#[test]
fn bayes() {
    let r = run("bayes.cpl");
    assert!(r.proved());
    assert!(r.candidate_index.unwrap() <= 50);
}

#[test]
fn ballot() {
    let r = run("ballot.cpl");
    assert!(r.proved());
    assert!(r.candidate_index.unwrap() <= 50);
}

#[test]
fn flip_needs_negation() {
    let r = run("flip.cpl");
    assert!(r.proved());
    assert_eq!(r.candidate.as_deref(), Some("neg(1)"));
    assert_eq!(r.rejected[0].candidate, "id");
    assert!(r.rejected[0].counterexample.is_some());
}

fn refuted(name: &str, gap: &str) {
    let cfg = SynthConfig { budget: couplesynth::synth::Budget { max_candidates: 30, ..Default::default() }, ..Default::default() };
    let r = synthesize(&common::task(name, 0), &common::solver(), &cfg).unwrap();
    assert!(!r.proved(), "{name}");
    assert!(r.candidates_checked <= 30);
    assert!(r.oracle.iter().all(|o| o.holds == Some(false)), "{:?}", r.oracle);
    assert!(r.oracle.iter().any(|o| o.gap.as_deref() == Some(gap)), "{:?}", r.oracle);
}

#[test]
fn negatives_fail_with_exact_gaps() {
    refuted("negative/biased.cpl", "1/2");
    refuted("negative/copy.cpl", "1/4");
    refuted("negative/gap.cpl", "1/4");
}

#[test]
fn reports_are_deterministic() {
    let strip = |r: couplesynth::synth::ProofReport| {
        let mut v = serde_json::to_value(&r).unwrap();
        v.as_object_mut().unwrap().remove("wall_ms");
        v.as_object_mut().unwrap().remove("solver");
        v
    };
    assert_eq!(strip(run("faircoin.cpl")), strip(run("faircoin.cpl")));
    assert_eq!(strip(run("flip.cpl")), strip(run("flip.cpl")));
}
