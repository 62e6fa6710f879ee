//! One PASS/FAIL line per acceptance criterion. Exits non-zero when any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use couplesynth::lang::{check, OracleInstance, Program};
use couplesynth::semantics::{instantiate, interpret_with, ResidualDist, State, UnrollPolicy, Value};
use couplesynth::smt::export::{chc_script, sections};
use couplesynth::synth::{prepare, synthesize, Budget, ProofReport, SynthConfig};
use couplesynth::transform::{cross_product, hoist, seq_programs, tag_program};
use couplesynth::vcgen::formula::{eval, Term};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn verify(name: &str, limit: Duration) -> Result<(ProofReport, Duration), String> {
    let cfg = SynthConfig { budget: Budget { total: limit, ..Default::default() }, ..Default::default() };
    let start = Instant::now();
    let r = synthesize(&common::task(name, 0), &common::solver(), &cfg).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(r.proved(), || format!("{name}: status {:?} after {} candidates", r.status, r.candidates_checked))?;
    ensure(took < limit, || format!("{name}: took {took:?}"))?;
    ensure(!r.oracle.is_empty() && r.oracle.iter().all(|o| o.holds == Some(true)), || {
        format!("{name}: oracle {:?}", r.oracle)
    })?;
    Ok((r, took))
}

fn index_within(r: &ProofReport, max: usize) -> Result<usize, String> {
    let i = r.candidate_index.unwrap_or(usize::MAX);
    ensure(i <= max, || format!("candidate index {i} > {max}"))?;
    Ok(i)
}

fn faircoin() -> Outcome {
    let (r, took) = verify("faircoin.cpl", Duration::from_secs(120))?;
    let i = index_within(&r, 20)?;
    // pointwise over Bool^2, for every value of the parameters
    let mut env = BTreeMap::new();
    for bits in 0..16u8 {
        let b = |k: u8| Value::Bool(bits >> k & 1 == 1);
        env.insert("%0".to_string(), b(0));
        env.insert("%1".to_string(), b(1));
        env.insert("a".to_string(), b(2));
        env.insert("a'".to_string(), b(3));
        let out: Vec<Option<Value>> = r.coupling_terms.iter().map(|t: &Term| eval(t, &env)).collect();
        ensure(out == [Some(b(1)), Some(b(0))], || format!("f({:?},{:?}) = {out:?}", b(0), b(1)))?;
    }
    Ok(format!("index {i}, f = {}, {:.1}s", r.candidate.unwrap_or_default(), took.as_secs_f64()))
}

fn fairdie() -> Outcome {
    let (r, took) = verify("fairdie.cpl", Duration::from_secs(600))?;
    let i = index_within(&r, 200)?;
    Ok(format!("index {i}, f = {}, {:.1}s", r.candidate.unwrap_or_default(), took.as_secs_f64()))
}

fn noisysum() -> Outcome {
    let t = common::task("noisysum.cpl", 0);
    ensure(t.program.body.iter().any(|s| matches!(s.kind, couplesynth::lang::StmtKind::For(..))), || "not a for loop".into())?;
    let (r, _) = verify("noisysum.cpl", Duration::from_secs(600))?;
    let i = index_within(&r, 50)?;
    Ok(format!("n=3, index {i}, f = {}", r.candidate.unwrap_or_default()))
}

fn bayes() -> Outcome {
    let (r, _) = verify("bayes.cpl", Duration::from_secs(600))?;
    let i = index_within(&r, 50)?;
    ensure(r.pmf_mode.as_deref() == Some("elided"), || format!("pmf mode {:?}", r.pmf_mode))?;
    let want = ["f=and g=or", "f=xor g=and"];
    for w in want {
        ensure(r.oracle.iter().any(|o| o.instance.contains(w) && o.holds == Some(true)), || format!("no oracle run with {w}"))?;
    }
    Ok(format!("elided, index {i}, oracle at {} instances", r.oracle.len()))
}

fn ballot() -> Outcome {
    let (r, _) = verify("ballot.cpl", Duration::from_secs(600))?;
    let i = index_within(&r, 50)?;
    ensure(r.invariant.is_some(), || "no invariant".into())?;
    for n in 2..=5 {
        ensure(r.oracle.iter().any(|o| o.instance.starts_with(&format!("n={n} ")) && o.holds == Some(true)), || {
            format!("no exact check at n={n}")
        })?;
    }
    Ok(format!("index {i}, f = {}, oracle exact for n=2..5", r.candidate.unwrap_or_default()))
}

fn soundness() -> Outcome {
    let t = common::soundness_run(20261015, 200);
    ensure(t.discrepancies.is_empty(), || t.discrepancies.join("\n---\n"))?;
    ensure(t.proved > 0 && t.refuted > 0, || format!("vacuous: {} proved, {} refuted", t.proved, t.refuted))?;
    Ok(format!("{} programs, {} proved (all confirmed), {} refuted (none proved)", t.programs, t.proved, t.refuted))
}

fn run(p: &Program, s0: &State, c: &couplesynth::semantics::Concrete, policy: &UnrollPolicy) -> Result<ResidualDist, String> {
    interpret_with(p, s0, policy, c).map_err(|e| e.to_string())
}

/// Concrete inputs for the transform checks.
fn concrete(name: &str) -> OracleInstance {
    let f = common::load(name);
    f.oracles.first().cloned().or_else(|| couplesynth::synth::default_oracles(&f.program).into_iter().next()).unwrap_or_default()
}

fn preservation() -> Outcome {
    let names = [
        "faircoin.cpl",
        "fairdie.cpl",
        "noisysum.cpl",
        "bayes.cpl",
        "ballot.cpl",
        "flip.cpl",
        "negative/biased.cpl",
        "negative/copy.cpl",
        "negative/gap.cpl",
    ];
    let policy = UnrollPolicy::default();
    let (mut hoisted, mut crossed) = (0, 0);
    for name in names {
        let p = common::load(name).program;
        let inst = concrete(name);
        let (s0, c) = instantiate(&p, &inst).map_err(|e| format!("{name}: {e}"))?;
        let d = run(&p, &s0, &c, &policy)?;
        let h = hoist(&p).map_err(|e| format!("{name}: {e}"))?.to_program();
        check(&h).map_err(|e| format!("{name}: hoisted program: {e}"))?;
        let dh = run(&h, &s0, &c, &policy)?;
        ensure(d == dh, || format!("{name}: hoisting changes the distribution"))?;
        hoisted += 1;

        let (p1, p2) = (tag_program(&p, 1), tag_program(&p, 2));
        let Ok(x) = cross_product(&p1, &p2) else { continue };
        let mut s12 = State::new();
        for (v, val) in &s0 {
            s12.insert(v.with_tag(1), val.clone());
            s12.insert(v.with_tag(2), val.clone());
        }
        let dx = run(&x, &s12, &c, &policy)?;
        let ds = run(&seq_programs(&p1, &p2), &s12, &c, &policy)?;
        ensure(dx == ds, || format!("{name}: cross product differs from sequencing"))?;
        crossed += 1;
    }
    ensure(crossed >= 2, || format!("only {crossed} counter-loop programs"))?;
    Ok(format!("hoist exact on {hoisted} programs, cross product exact on {crossed}"))
}

fn fidelity() -> Outcome {
    let (b, _) = prepare(&common::task("faircoin.cpl", 0), 1).map_err(|e| e.to_string())?;
    let s = chc_script(&b, None).map_err(|e| e.to_string())?;
    let golden = std::fs::read_to_string(std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/faircoin.chc"))
        .map_err(|e| e.to_string())?;
    ensure(s == golden, || "export differs from golden file".into())?;
    common::faircoin_schemata(&s)?;
    Ok(format!("golden match; schemata {}", sections(&b, None).map_err(|e| e.to_string())?.join(", ")))
}

fn negatives() -> Outcome {
    let mut out = Vec::new();
    for (name, gap) in [("negative/biased.cpl", "1/2"), ("negative/copy.cpl", "1/4"), ("negative/gap.cpl", "1/4")] {
        let cfg = SynthConfig::default();
        let r = synthesize(&common::task(name, 0), &common::solver(), &cfg).map_err(|e| e.to_string())?;
        ensure(!r.proved(), || format!("{name} proved"))?;
        let o = r.oracle.first().ok_or_else(|| format!("{name}: no oracle run"))?;
        ensure(o.holds == Some(false) && o.gap.as_deref() == Some(gap), || format!("{name}: oracle {o:?}"))?;
        out.push(format!("{name} gap {gap} after {} candidates", r.candidates_checked));
    }
    Ok(out.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("fairCoin uniformity", faircoin),
        ("fairDie uniformity", fairdie),
        ("noisySum independence", noisysum),
        ("bayes conditional independence", bayes),
        ("ballot equality", ballot),
        ("soundness on random programs", soundness),
        ("transform preservation", preservation),
        ("encoding fidelity", fidelity),
        ("negative controls", negatives),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
