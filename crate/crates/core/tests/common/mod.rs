#![allow(dead_code)]

use std::path::PathBuf;
use std::time::Duration;

use couplesynth::lang::CplFile;
use couplesynth::smt::Solver;
use couplesynth::synth::{SynthError, Task};

pub fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

pub fn load(name: &str) -> CplFile {
    let text = std::fs::read_to_string(corpus(name)).unwrap();
    CplFile::parse(&text).unwrap()
}

pub fn task(name: &str, index: usize) -> Task {
    let file = load(name);
    let loader = |p: &str| -> Result<CplFile, SynthError> { Ok(load(p)) };
    Task::from_file(name, &file, index, &loader).unwrap()
}

pub fn solver() -> Solver {
    Solver::from_env(Duration::from_secs(10))
}

/// Copy 1 reads as V, copy 2 as V1, post-states primed, hole components as
/// f1, f2, ..
pub fn rename(s: &str) -> String {
    let mut s = s.to_string();
    for k in (1..10).rev() {
        s = s.replace(&format!("cg!{k}"), &format!("f{k}"));
    }
    s.replace("!1!next", "'").replace("!2!next", "1'").replace("!1", "").replace("!2", "1")
}

/// Section title to its assertions.
pub fn sections(script: &str) -> Vec<(String, Vec<String>)> {
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    for line in script.lines() {
        if let Some(t) = line.strip_prefix("; ") {
            if !t.contains('.') && !t.contains(' ') {
                out.push((t.to_string(), Vec::new()));
            }
        } else if line.starts_with("(assert") {
            if let Some(last) = out.last_mut() {
                last.1.push(line.to_string());
            }
        }
    }
    out
}

/// Checks the fairCoin Horn export, after renaming, against the five
/// constraint schemata: initiation, consecution, synchronization, coupling
/// and the property clause.
pub fn faircoin_schemata(script: &str) -> Result<(), String> {
    let s = rename(script);
    let secs = sections(&s);
    let names: Vec<&str> = secs.iter().map(|(n, _)| n.as_str()).collect();
    if names != ["initiation", "consecution", "synchronization", "coupling", "property"] {
        return Err(format!("sections {names:?}"));
    }
    let inv = "(I p x y p1 x1 y1)";
    let need: [(&str, &[&str]); 5] = [
        ("initiation", &["(= p p1)", &format!("{inv})))")]),
        (
            "consecution",
            &["(I p x y p1 x1 y1) (= x y) (= x1' (f1 a |a'| x' y')) (= y1' (f2 a |a'| x' y'))", "(I p x' y' p1 x1' y1'))))"],
        ),
        ("synchronization", &["(=> (I p x y p1 x1 y1) (= (= x y) (= x1 y1)))"]),
        ("coupling", &[inv, "(= p p1)", "(ite %x0 p (- 1.0 p))", "(ite (f1 a |a'| %x0 %x1) p1 (- 1.0 p1))"]),
        ("property", &[inv, "(not (= x y))) (= (= x a) (= x1 |a'|))"]),
    ];
    for ((name, clauses), (want, frags)) in secs.iter().zip(need) {
        debug_assert_eq!(name, want);
        let text = clauses.join("\n");
        for f in frags {
            if !text.contains(f) {
                return Err(format!("{name}: missing {f} in\n{text}"));
            }
        }
    }
    if secs[3].1.len() != 2 || secs.iter().enumerate().any(|(i, (_, c))| i != 3 && c.len() != 1) {
        return Err("unexpected clause counts".into());
    }
    Ok(())
}

/// Random loop-free programs over Bool samples, with a property to check.
pub mod gen {
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn pick<'a, R: Rng>(rng: &mut R, xs: &'a [String]) -> &'a str {
        xs.choose(rng).unwrap()
    }

    fn expr<R: Rng>(rng: &mut R, vars: &[String]) -> String {
        let a = pick(rng, vars);
        let b = pick(rng, vars);
        match rng.gen_range(0..7) {
            0 => format!("!{a}"),
            1 => format!("{a} && {b}"),
            2 => format!("{a} || {b}"),
            3 => format!("{a} != {b}"),
            4 => format!("{a} == {b}"),
            5 => a.to_string(),
            _ => format!("!({a} && {b})"),
        }
    }

    /// Source text of a program with at most `max_samples` samples and
    /// `max_stmts` top-level statements, and the property header line.
    pub fn program<R: Rng>(rng: &mut R, max_samples: usize, max_stmts: usize) -> (String, String) {
        let n_samples = rng.gen_range(1..=max_samples);
        let n_stmts = rng.gen_range(n_samples..=max_stmts);
        let mut samples_left = n_samples;
        let mut vars: Vec<String> = Vec::new();
        let mut body = String::new();
        let (mut s, mut t) = (0, 0);
        for k in 0..n_stmts {
            let must_sample = vars.is_empty() || samples_left == n_stmts - k;
            if samples_left > 0 && (must_sample || rng.gen_bool(0.4)) {
                s += 1;
                samples_left -= 1;
                let p = ["1/2", "1/2", "1/2", "1/3", "1/4"].choose(rng).unwrap();
                body.push_str(&format!("s{s} ~ bern({p})\n"));
                vars.push(format!("s{s}"));
            } else {
                t += 1;
                if rng.gen_bool(0.2) {
                    let c = pick(rng, &vars).to_string();
                    let (e1, e2) = (expr(rng, &vars), expr(rng, &vars));
                    body.push_str(&format!("if {c} {{ t{t} <- {e1} }} else {{ t{t} <- {e2} }}\n"));
                } else {
                    let e = expr(rng, &vars);
                    body.push_str(&format!("t{t} <- {e}\n"));
                }
                vars.push(format!("t{t}"));
            }
        }
        let prop = match rng.gen_range(0..3) {
            0 => format!("uniform {}", pick(rng, &vars)),
            1 if vars.len() > 1 => {
                let mut two: Vec<&String> = vars.choose_multiple(rng, 2).collect();
                two.sort();
                format!("independent {} {}", two[0], two[1])
            }
            _ => format!("equal [{}] [{}]", expr(rng, &vars), expr(rng, &vars)),
        };
        (body, prop)
    }
}

pub struct SoundnessTally {
    pub programs: usize,
    pub proved: usize,
    pub refuted: usize,
    pub discrepancies: Vec<String>,
}

/// Synthesizes each generated property with a 30-candidate budget and
/// compares against the exact oracle.
pub fn soundness_run(seed: u64, n: usize) -> SoundnessTally {
    use couplesynth::lang::{parse, PropSpec};
    use couplesynth::synth::{synthesize, Budget, Status, SynthConfig};
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let solver = solver();
    let cfg = SynthConfig { budget: Budget { max_candidates: 30, ..Default::default() }, ..Default::default() };
    let mut tally = SoundnessTally { programs: 0, proved: 0, refuted: 0, discrepancies: Vec::new() };
    while tally.programs < n {
        let (src, prop) = gen::program(&mut rng, 3, 6);
        let program = parse(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
        let prop = PropSpec::parse(&prop).unwrap();
        let task = Task::new(format!("random#{}", tally.programs), program, prop.clone(), None, Vec::new())
            .unwrap_or_else(|e| panic!("{e}\n{src}"));
        tally.programs += 1;
        let r = match synthesize(&task, &solver, &cfg) {
            Ok(r) => r,
            Err(e) => {
                tally.discrepancies.push(format!("error {e} on\n{src}{prop}"));
                continue;
            }
        };
        let holds: Vec<Option<bool>> = r.oracle.iter().map(|o| o.holds).collect();
        let refuted = holds.contains(&Some(false));
        tally.refuted += refuted as usize;
        match r.status {
            Status::Proved => {
                tally.proved += 1;
                if holds.is_empty() || holds.iter().any(|h| *h != Some(true)) {
                    tally.discrepancies.push(format!("proved but oracle says {holds:?}:\n{src}{prop}"));
                }
            }
            Status::Unsound => tally.discrepancies.push(format!("{}:\n{src}{prop}", r.diagnostic.unwrap_or_default())),
            Status::Exhausted => {}
        }
    }
    tally
}
