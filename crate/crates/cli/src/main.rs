use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use couplesynth::lang::{CplFile, OracleInstance};
use couplesynth::semantics::{instantiate, interpret_with, UnrollPolicy, Value};
use couplesynth::smt::export::{chc_script, vc_script};
use couplesynth::smt::Solver;
use couplesynth::synth::{prepare, synthesize, Budget, ProofReport, Status, SynthConfig, SynthError, Task};

mod bench;

#[derive(Parser)]
#[command(name = "couplesynth", version, about = "Synthesize coupling proofs for probabilistic programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Search for a coupling proof of each property in a .cpl file.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        opts: SearchOpts,
        /// Print the first K candidates to stderr before searching.
        #[arg(long, value_name = "K")]
        dump_candidates: Option<usize>,
        /// Print the verification conditions as SMT-LIB to stderr.
        #[arg(long)]
        dump_vc: bool,
        /// Print loop constraints as Horn clauses to stderr.
        #[arg(long)]
        dump_chc: bool,
    },
    /// Run the exact interpreter and print the output distribution.
    Interpret {
        file: PathBuf,
        /// Input binding, e.g. `p=1/3`; repeatable.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        /// Unroll loops exactly this many times.
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Verify every .cpl file in a directory and print a summary table.
    Bench {
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = bench::Format::Markdown)]
        format: bench::Format,
        #[command(flatten)]
        opts: SearchOpts,
    },
    /// Write the verification conditions for external solvers.
    Export {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ExportFormat::Smt2)]
        format: ExportFormat,
        /// Property number (1-based).
        #[arg(long, default_value_t = 1)]
        prop: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// List the first K candidate coupling functions.
    DumpCandidates {
        file: PathBuf,
        #[arg(short, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        prop: usize,
    },
}

#[derive(Args, Clone)]
struct SearchOpts {
    /// Maximum number of candidates checked per property.
    #[arg(long, default_value_t = 500)]
    budget: usize,
    /// Solver time limit per check, in seconds.
    #[arg(long, default_value_t = 10.0)]
    timeout_per_check: f64,
    /// Wall-clock limit per property, in seconds.
    #[arg(long, default_value_t = 600.0)]
    total_timeout: f64,
    /// Largest candidate size enumerated.
    #[arg(long, default_value_t = 9)]
    max_size: usize,
    /// Oracle binding replacing the defaults, e.g. `p=2/5`; repeatable.
    #[arg(long = "oracle-param", value_name = "NAME=VALUE")]
    oracle_params: Vec<String>,
    /// Extra argument for the solver process; repeatable.
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    solver_args: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Smt2,
    Chc,
}

/// Input problems: unreadable files, bad headers, unsupported tasks, no solver.
#[derive(Debug)]
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> InputError {
        InputError(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<CplFile, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    CplFile::parse(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

fn tasks(path: &Path, opts: Option<&SearchOpts>) -> Result<Vec<Task>, InputError> {
    let file = read_file(path)?;
    if file.props.is_empty() {
        return Err(InputError(format!("{}: no 'prop:' header", path.display())));
    }
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let load = |p: &str| -> Result<CplFile, SynthError> { read_file(&dir.join(p)).map_err(|e| SynthError::Input(e.0)) };
    let mut out = Vec::new();
    for i in 0..file.props.len() {
        let mut t = Task::from_file(&file_name(path), &file, i, &load)?;
        if let Some(o) = opts.filter(|o| !o.oracle_params.is_empty()) {
            t.oracles = vec![OracleInstance::parse(&o.oracle_params.join(" "))?];
        }
        out.push(t);
    }
    Ok(out)
}

fn pick(path: &Path, prop: usize) -> Result<Task, InputError> {
    let mut ts = tasks(path, None)?;
    if prop == 0 || prop > ts.len() {
        return Err(InputError(format!("{}: no property #{prop}", path.display())));
    }
    Ok(ts.swap_remove(prop - 1))
}

fn solver(opts: &SearchOpts) -> Solver {
    let mut s = Solver::from_env(Duration::from_secs_f64(opts.timeout_per_check));
    s.args = opts.solver_args.clone();
    s
}

fn config(opts: &SearchOpts) -> SynthConfig {
    SynthConfig {
        budget: Budget {
            max_candidates: opts.budget,
            max_size: opts.max_size,
            per_check: Duration::from_secs_f64(opts.timeout_per_check),
            total: Duration::from_secs_f64(opts.total_timeout),
        },
        ..Default::default()
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn candidate_lines(task: &Task, k: usize, max_size: usize) -> Result<Vec<String>, InputError> {
    let (_, stream) = prepare(task, max_size)?;
    let space = stream.space().clone();
    Ok(stream.take(k).enumerate().map(|(i, c)| format!("{}\t{}\t{}", i + 1, c.size(), c.show(&space))).collect())
}

fn dumps(task: &Task, vc: bool, chc: bool) -> Result<(), InputError> {
    let (b, _) = prepare(task, 1)?;
    if vc {
        eprintln!("{}", vc_script(&b, None)?);
    }
    if chc {
        match chc_script(&b, None) {
            Ok(s) => eprintln!("{s}"),
            Err(e) => eprintln!("; {e}"),
        }
    }
    Ok(())
}

/// One report per property; exit 0 only when all are proved.
fn verify(path: &Path, opts: &SearchOpts, k: Option<usize>, vc: bool, chc: bool) -> Result<u8, InputError> {
    let solver = solver(opts);
    let cfg = config(opts);
    let mut reports: Vec<ProofReport> = Vec::new();
    for t in tasks(path, Some(opts))? {
        if let Some(k) = k {
            for l in candidate_lines(&t, k, opts.max_size)? {
                eprintln!("{l}");
            }
        }
        dumps(&t, vc, chc)?;
        reports.push(synthesize(&t, &solver, &cfg).map_err(|e| match e {
            SynthError::Smt(e) => InputError(format!("solver: {e}")),
            e => InputError(e.to_string()),
        })?);
    }
    let code = if reports.iter().all(|r| r.status == Status::Proved) {
        0
    } else if reports.iter().any(|r| r.status == Status::Unsound) {
        3
    } else {
        1
    };
    if reports.len() == 1 {
        emit(&(json(&reports[0]) + "\n"));
    } else {
        emit(&(json(&reports) + "\n"));
    }
    Ok(code)
}

#[derive(Serialize)]
struct Outcome {
    value: String,
    prob: String,
}

#[derive(Serialize)]
struct DistReport {
    schema: &'static str,
    program: String,
    inputs: String,
    returns: Vec<String>,
    pmf: Vec<Outcome>,
    residual: String,
}

fn show_tuple(vs: &[Value]) -> String {
    match vs {
        [v] => v.to_string(),
        _ => format!("({})", vs.iter().map(Value::to_string).collect::<Vec<_>>().join(",")),
    }
}

fn interpret(path: &Path, params: &[String], iterations: Option<usize>) -> Result<u8, InputError> {
    let file = read_file(path)?;
    let p = &file.program;
    couplesynth::lang::check(p)?;
    let inst = if !params.is_empty() {
        OracleInstance::parse(&params.join(" "))?
    } else if let Some(o) = file.oracles.first() {
        o.clone()
    } else {
        OracleInstance::default()
    };
    let (s0, c) = instantiate(p, &inst)?;
    let policy = iterations.map(UnrollPolicy::iterations).unwrap_or_default();
    let d = interpret_with(p, &s0, &policy, &c)?;
    let mut returns = p.returns.clone();
    if returns.is_empty() {
        let mut all: Vec<_> = d.pmf.pmf.keys().flat_map(|s| s.keys().cloned()).collect();
        all.sort();
        all.dedup();
        returns = all;
    }
    let m = d.marginal_values(&returns)?;
    let report = DistReport {
        schema: "couplesynth/dist/v1",
        program: file_name(path),
        inputs: couplesynth::synth::task::show_instance(&inst),
        returns: returns.iter().map(|v| v.to_string()).collect(),
        pmf: m.pmf.iter().map(|(v, p)| Outcome { value: show_tuple(v), prob: p.to_string() }).collect(),
        residual: d.residual.to_string(),
    };
    emit(&(json(&report) + "\n"));
    Ok(0)
}

fn export(path: &Path, format: ExportFormat, prop: usize, out: Option<&Path>) -> Result<u8, InputError> {
    let t = pick(path, prop)?;
    let (b, _) = prepare(&t, 1)?;
    let text = match format {
        ExportFormat::Smt2 => vc_script(&b, None)?,
        ExportFormat::Chc if b.has_loop() => chc_script(&b, None)?,
        ExportFormat::Chc => format!("; no loop, so no Horn clauses: plain smt2 follows\n{}", vc_script(&b, None)?),
    };
    match out {
        Some(o) => std::fs::write(o, text)?,
        None => emit(&text),
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, InputError> {
    match cli.cmd {
        Cmd::Verify { file, opts, dump_candidates, dump_vc, dump_chc } => {
            verify(&file, &opts, dump_candidates, dump_vc, dump_chc)
        }
        Cmd::Interpret { file, params, iterations } => interpret(&file, &params, iterations),
        Cmd::Bench { dir, format, opts } => bench::run(&dir, format, &opts),
        Cmd::Export { file, format, prop, out } => export(&file, format, prop, out.as_deref()),
        Cmd::DumpCandidates { file, k, prop } => {
            for l in candidate_lines(&pick(&file, prop)?, k, 9)? {
                emit(&format!("{l}\n"));
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
