//! External SMT solver interface.

pub mod export;
pub mod print;
pub mod sexp;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

pub use print::{logic, parse_declarations, parse_term, quote, term_smt, validity_script};
pub use sexp::{parse_all, Sexp};

use crate::semantics::Value;
use crate::vcgen::formula::{Interp, Term};
use crate::vcgen::Query;

/// Environment variable naming the solver binary.
pub const SOLVER_ENV: &str = "COUPLESYNTH_SOLVER";

/// Extra time the solver gets to honour its own `:timeout` before the kill.
const KILL_GRACE: Duration = Duration::from_millis(500);

#[derive(Debug, thiserror::Error)]
pub enum SmtError {
    #[error("cannot run solver '{path}': {source}")]
    Spawn { path: String, source: std::io::Error },
    #[error("solver i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("unparseable solver output: {0}")]
    Parse(String),
}

/// Constant values from a satisfying assignment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Model {
    pub values: BTreeMap<String, Value>,
}

impl Interp for Model {
    fn constant(&self, name: &str) -> Option<Value> {
        self.values.get(name).cloned()
    }

    fn function(&self, _name: &str, _args: &[Value]) -> Option<Value> {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Validity {
    Valid,
    /// A counterexample to the query.
    Invalid(Model),
    Unknown(String),
    /// The solver gave up at its time limit, or was killed shortly after.
    Timeout,
}

#[derive(Debug)]
pub struct Solver {
    pub path: String,
    /// Extra command-line arguments, after `-in -smt2`.
    pub args: Vec<String>,
    pub timeout: Duration,
    queries: AtomicU64,
    micros: AtomicU64,
}

impl Clone for Solver {
    fn clone(&self) -> Solver {
        Solver { args: self.args.clone(), ..Solver::new(self.path.clone(), self.timeout) }
    }
}

impl Solver {
    pub fn new(path: impl Into<String>, timeout: Duration) -> Solver {
        Solver { path: path.into(), args: Vec::new(), timeout, queries: AtomicU64::new(0), micros: AtomicU64::new(0) }
    }

    /// The solver named by `COUPLESYNTH_SOLVER`, or `z3` on the path.
    pub fn from_env(timeout: Duration) -> Solver {
        Solver::new(std::env::var(SOLVER_ENV).unwrap_or_else(|_| "z3".into()), timeout)
    }

    /// A fresh solver with the same command and a different time limit.
    pub fn with_timeout(&self, timeout: Duration) -> Solver {
        Solver { timeout, ..self.clone() }
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn solver_time(&self) -> Duration {
        Duration::from_micros(self.micros.load(Ordering::Relaxed))
    }

    /// Runs a script; the process is killed once the timeout (plus a short
    /// grace period) passes.
    /// Returns `None` on timeout.
    pub fn run(&self, script: &str) -> Result<Option<String>, SmtError> {
        let start = Instant::now();
        let mut child = Command::new(&self.path)
            .args(["-in", "-smt2"])
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SmtError::Spawn { path: self.path.clone(), source: e })?;
        let mut stdin = child.stdin.take().unwrap();
        stdin.write_all(script.as_bytes())?;
        drop(stdin);
        let mut stdout = child.stdout.take().unwrap();
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            stdout.read_to_string(&mut s).map(|_| s)
        });
        let timed_out = loop {
            if child.try_wait()?.is_some() {
                break false;
            }
            if start.elapsed() > self.timeout + KILL_GRACE {
                let _ = child.kill();
                let _ = child.wait();
                break true;
            }
            std::thread::sleep(Duration::from_millis(2));
        };
        let out = reader.join().map_err(|_| SmtError::Solver("reader panicked".into()))??;
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.micros.fetch_add(start.elapsed().as_micros() as u64, Ordering::Relaxed);
        Ok(if timed_out { None } else { Some(out) })
    }

    /// Decides validity of `q`, fetching the constants in `get` for
    /// counterexamples.
    pub fn valid(&self, q: &Query, get: &[String]) -> Result<Validity, SmtError> {
        let script = format!(
            "(set-option :timeout {})\n{}(get-info :reason-unknown)\n",
            self.timeout.as_millis().max(1),
            validity_script(q, get)
        );
        let Some(out) = self.run(&script)? else {
            return Ok(Validity::Timeout);
        };
        interpret_response(&out)
    }
}

fn value_of(t: &Term) -> Option<Value> {
    match t {
        Term::Bool(b) => Some(Value::Bool(*b)),
        Term::Int(n) => Some(Value::Int(n.clone())),
        Term::Real(r) => Some(Value::num(r.clone())),
        _ => None,
    }
}

/// The solver's own time limit shows up as `unknown` with reason
/// `timeout` (or `canceled`).
fn unknown(rest: &[Sexp]) -> Validity {
    let reason = rest.iter().find_map(|s| match s.list() {
        Some([Sexp::Atom(k), v]) if k == ":reason-unknown" => Some(v.to_string().trim_matches('"').to_string()),
        _ => None,
    });
    match reason.as_deref() {
        Some("timeout" | "canceled") => Validity::Timeout,
        Some(r) => Validity::Unknown(r.to_string()),
        None => Validity::Unknown("solver returned unknown".into()),
    }
}

/// Reads `sat`/`unsat`/`unknown` and an optional `get-value` answer.
pub fn interpret_response(out: &str) -> Result<Validity, SmtError> {
    let items = parse_all(out).map_err(SmtError::Parse)?;
    let mut it = items.iter();
    loop {
        match it.next() {
            Some(Sexp::Atom(a)) if a == "unsat" => return Ok(Validity::Valid),
            Some(Sexp::Atom(a)) if a == "unknown" => return Ok(unknown(it.as_slice())),
            Some(Sexp::Atom(a)) if a == "sat" => break,
            Some(Sexp::List(l)) if l.first().and_then(Sexp::atom) == Some("error") => {
                return Err(SmtError::Solver(l.get(1).map(|e| e.to_string()).unwrap_or_default()));
            }
            Some(_) => continue,
            None => return Err(SmtError::Parse(format!("no check-sat answer in '{}'", out.trim()))),
        }
    }
    let mut model = Model::default();
    if let Some(Sexp::List(pairs)) = it.next() {
        for p in pairs {
            if let Some([Sexp::Atom(name), v]) = p.list() {
                if let Some(val) = parse_term(v).ok().as_ref().and_then(value_of) {
                    model.values.insert(name.clone(), val);
                }
            }
        }
    }
    Ok(Validity::Invalid(model))
}
