use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(name: &str) -> PathBuf {
    root().join("corpus").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_couplesynth")).args(args).output().unwrap()
}

fn run_on(cmd: &str, file: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, file.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn verify_faircoin_names_swap() {
    let o = run_on("verify", &corpus("faircoin.cpl"), &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout_json(&o);
    assert_eq!(r["status"], "proved");
    assert_eq!(r["candidate"], "swap(1,2)");
    assert_eq!(r["schema"], "couplesynth/report/v1");
}

#[test]
fn report_shape_is_stable() {
    let o = run_on("verify", &corpus("flip.cpl"), &[]);
    let mut r = stdout_json(&o);
    let obj = r.as_object_mut().unwrap();
    obj.remove("wall_ms");
    obj.insert("solver".into(), serde_json::json!("<elided>"));
    let actual = serde_json::to_string_pretty(&r).unwrap() + "\n";
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/flip.report.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &actual).unwrap();
    }
    assert_eq!(actual, std::fs::read_to_string(&path).unwrap());
}

#[test]
fn verify_biased_exhausts() {
    let o = run_on("verify", &corpus("negative/biased.cpl"), &["--budget", "30"]);
    assert_eq!(o.status.code(), Some(1));
    let r = stdout_json(&o);
    assert_eq!(r["status"], "exhausted");
    assert_eq!(r["oracle"][0]["holds"], false);
    assert_eq!(r["oracle"][0]["gap"], "1/2");
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(run_on("verify", &corpus("missing.cpl"), &[]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cpl");
    std::fs::write(&bad, "prop: uniform\nx ~ bern(1/2)\n").unwrap();
    assert_eq!(run_on("verify", &bad, &[]).status.code(), Some(2));
    std::fs::write(&bad, "prop: uniform z\nx ~ bern(1/2)\n").unwrap();
    assert_eq!(run_on("verify", &bad, &[]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_couplesynth"))
        .args(["verify", corpus("faircoin.cpl").to_str().unwrap()])
        .env("COUPLESYNTH_SOLVER", "/nonexistent/solver")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_param_overrides_defaults() {
    let o = run_on("verify", &corpus("faircoin.cpl"), &["--oracle-param", "p=2/5"]);
    let r = stdout_json(&o);
    assert_eq!(r["oracle"].as_array().unwrap().len(), 1);
    assert_eq!(r["oracle"][0]["instance"], "p=2/5");
}

#[test]
fn interpret_fair_bit() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bit.cpl");
    std::fs::write(&f, "x ~ bern(1/2)\nreturn x\n").unwrap();
    let r = stdout_json(&run_on("interpret", &f, &[]));
    assert_eq!(r["residual"], "0");
    let pmf = r["pmf"].as_array().unwrap();
    assert_eq!(pmf.len(), 2);
    assert!(pmf.iter().all(|o| o["prob"] == "1/2"));
}

#[test]
fn interpret_faircoin_residual() {
    let r = stdout_json(&run_on("interpret", &corpus("faircoin.cpl"), &["--param", "p=1/3", "--iterations", "50"]));
    let five = num_bigint::BigInt::from(5).pow(50);
    let nine = num_bigint::BigInt::from(9).pow(50);
    assert_eq!(r["residual"], format!("{five}/{nine}"));
}

#[test]
fn interpret_fairdie_sixths() {
    let r = stdout_json(&run_on("interpret", &corpus("fairdie.cpl"), &[]));
    let pmf = r["pmf"].as_array().unwrap();
    assert_eq!(pmf.len(), 6);
    let p0 = &pmf[0]["prob"];
    assert!(pmf.iter().all(|o| &o["prob"] == p0));
    assert!(pmf.iter().all(|o| o["value"] != "(true,true,true)" && o["value"] != "(false,false,false)"));
}

#[test]
fn bench_empty_and_mixed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bench", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 2);
    std::fs::copy(corpus("flip.cpl"), dir.path().join("flip.cpl")).unwrap();
    std::fs::copy(corpus("negative/biased.cpl"), dir.path().join("biased.cpl")).unwrap();
    let o = run(&["bench", dir.path().to_str().unwrap(), "--format", "csv", "--budget", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "program,property,proved,candidates,queries,time (s)");
    assert!(lines[1].starts_with("biased.cpl,uniform x,no,>4,"), "{text}");
    assert!(lines[2].starts_with("flip.cpl,uniform y,yes,4,"), "{text}");
}

#[test]
fn export_faircoin_chc() {
    let o = run_on("export", &corpus("faircoin.cpl"), &["--format", "chc"]);
    assert_eq!(o.status.code(), Some(0));
    let golden = std::fs::read_to_string(root().join("crates/core/tests/golden/faircoin.chc")).unwrap();
    assert_eq!(String::from_utf8_lossy(&o.stdout), golden);
}

#[test]
fn export_loop_free_chc_falls_back() {
    let o = run_on("export", &corpus("bayes.cpl"), &["--format", "chc"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.starts_with("; no loop"));
    for sym in ["pmf!mu ", "pmf!mu1 ", "pmf!mu2 ", "(declare-fun f ", "(declare-fun g "] {
        assert!(s.contains(sym), "{sym}");
    }
}

#[test]
fn dump_candidates_lists_in_order() {
    let o = run_on("dump-candidates", &corpus("faircoin.cpl"), &["-k", "4"]);
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["1\t1\tid", "2\t2\tswap(1,2)", "3\t2\tneg(1)", "4\t2\tneg(2)"]);
}
