//! The guess-and-check loop.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::candidate::{Candidate, Enumerator, Space};
use super::grammar::space_for;
use super::invariant::{atom_pool, coupling_atom, houdini, show_invariant};
use super::task::{OracleResult, Task};
use super::SynthError;
use crate::semantics::UnrollPolicy;
use crate::smt::{Model, Solver, Validity};
use crate::vcgen::formula::{and, Term};
use crate::vcgen::{instantiate, reorder_quantifiers, PmfMode, VcBundle, VcError};

pub const REPORT_SCHEMA: &str = "couplesynth/report/v1";

#[derive(Clone, Debug)]
pub struct Budget {
    pub max_candidates: usize,
    pub max_size: usize,
    pub per_check: Duration,
    pub total: Duration,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget {
            max_candidates: 500,
            max_size: 9,
            per_check: Duration::from_secs(10),
            total: Duration::from_secs(600),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SynthConfig {
    pub budget: Budget,
    pub policy: UnrollPolicy,
    /// Skip the exact oracle (used by tests that run it themselves).
    pub skip_oracle: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Proved,
    Exhausted,
    /// The solver accepted a candidate the oracle refutes.
    Unsound,
}

#[derive(Clone, Debug, Serialize)]
pub struct Rejection {
    pub index: usize,
    pub candidate: String,
    pub reason: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<BTreeMap<String, String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverStats {
    pub queries: u64,
    pub time_ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProofReport {
    pub schema: &'static str,
    pub task: String,
    pub kind: String,
    pub property: String,
    pub status: Status,
    /// 1-based count of candidates checked up to and including the proof.
    pub candidate_index: Option<usize>,
    pub candidates_checked: usize,
    pub candidate: Option<String>,
    pub coupling: Vec<String>,
    /// The proved coupling function over the hole formals `%0, %1, ..`.
    #[serde(skip)]
    pub coupling_terms: Vec<Term>,
    pub invariant: Option<String>,
    pub pmf_mode: Option<String>,
    pub solver: SolverStats,
    pub wall_ms: u64,
    pub oracle: Vec<OracleResult>,
    pub rejected: Vec<Rejection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl ProofReport {
    pub fn proved(&self) -> bool {
        self.status == Status::Proved
    }
}

const MAX_REJECTIONS: usize = 50;
const MAX_MODEL_ENTRIES: usize = 16;

fn show_model(m: &Model) -> BTreeMap<String, String> {
    m.values
        .iter()
        .filter(|(k, _)| !k.starts_with('%'))
        .take(MAX_MODEL_ENTRIES)
        .map(|(k, v)| (k.clone(), v.to_string()))
        .collect()
}

/// Outcome of checking one candidate.
enum Check {
    Valid { mode: PmfMode, invariant: Option<Vec<Term>> },
    Invalid { reason: String, model: Option<Model> },
}

struct Searcher<'a> {
    bundle: VcBundle,
    solver: &'a Solver,
    pool: Vec<Term>,
    full_ok: bool,
    queries: usize,
}

impl Searcher<'_> {
    fn modes(&self) -> &'static [PmfMode] {
        if self.full_ok {
            &[PmfMode::Full, PmfMode::Elided]
        } else {
            &[PmfMode::Elided]
        }
    }

    fn check(&mut self, terms: &[Term]) -> Result<Check, SynthError> {
        let mut last = Check::Invalid { reason: "no mode applies".into(), model: None };
        for &mode in self.modes() {
            let inv = if self.bundle.has_loop() {
                let mut atoms = vec![coupling_atom(&self.bundle, terms)];
                atoms.extend(self.pool.iter().cloned());
                match houdini(&self.bundle, terms, atoms, mode, self.solver, &mut self.queries)? {
                    Some(i) => Some(i),
                    None => {
                        last = Check::Invalid { reason: "no inductive invariant in the template family".into(), model: None };
                        continue;
                    }
                }
            } else {
                None
            };
            let q = match instantiate(&self.bundle, terms, inv.as_ref().map(|i| and(i.clone())).as_ref(), mode) {
                Ok(q) => q,
                Err(VcError::Opaque(_)) => continue,
                Err(e) => return Err(e.into()),
            };
            let get: Vec<String> = q.sig.syms.iter().filter(|(_, s)| s.args.is_empty()).map(|(n, _)| n.clone()).collect();
            self.queries += 1;
            match self.solver.valid(&q, &get)? {
                Validity::Valid => return Ok(Check::Valid { mode, invariant: inv }),
                Validity::Invalid(m) => {
                    // a counterexample with uninterpreted pmfs may be spurious
                    // for the real ones, but elision only weakens hypotheses
                    let failed = q
                        .goals
                        .iter()
                        .find(|g| crate::vcgen::formula::eval(&g.formula(), &m) == Some(crate::semantics::Value::Bool(false)))
                        .map(|g| g.name.clone())
                        .unwrap_or_else(|| "counterexample".into());
                    last = Check::Invalid { reason: format!("{failed} fails ({})", mode.name()), model: Some(m) };
                    // elision cannot help when the full pmfs already refute
                    if mode == PmfMode::Full {
                        return Ok(last);
                    }
                }
                Validity::Unknown(why) => {
                    last = Check::Invalid { reason: format!("{why} ({})", mode.name()), model: None };
                }
                Validity::Timeout => {
                    last = Check::Invalid { reason: format!("timeout ({})", mode.name()), model: None };
                }
            }
        }
        Ok(last)
    }
}

/// The bundle, enumeration space and enumerator for a task.
pub fn prepare(task: &Task, max_size: usize) -> Result<(VcBundle, Enumerator), SynthError> {
    let bundle = reorder_quantifiers(&task.bundle()?);
    let space: Space = space_for(&bundle);
    Ok((bundle, Enumerator::new(space, max_size)))
}

pub fn synthesize(task: &Task, solver: &Solver, cfg: &SynthConfig) -> Result<ProofReport, SynthError> {
    let start = Instant::now();
    let solver = &solver.with_timeout(cfg.budget.per_check);
    let (bundle, mut stream) = prepare(task, cfg.budget.max_size)?;
    let probe_inv = bundle.has_loop().then_some(Term::Bool(true));
    let full_ok = match instantiate(&bundle, &Candidate::Base.terms(stream.space()), probe_inv.as_ref(), PmfMode::Full) {
        Err(VcError::Opaque(_)) => false,
        _ => true,
    };
    let pool = atom_pool(&bundle);
    let space = stream.space().clone();
    let mut s = Searcher { bundle, solver, pool, full_ok, queries: 0 };

    let mut report = ProofReport {
        schema: REPORT_SCHEMA,
        task: task.name.clone(),
        kind: task.prop.kind().to_string(),
        property: task.prop.to_string(),
        status: Status::Exhausted,
        candidate_index: None,
        candidates_checked: 0,
        candidate: None,
        coupling: Vec::new(),
        coupling_terms: Vec::new(),
        invariant: None,
        pmf_mode: None,
        solver: SolverStats { queries: 0, time_ms: 0 },
        wall_ms: 0,
        oracle: Vec::new(),
        rejected: Vec::new(),
        diagnostic: None,
    };

    let mut index = 0;
    while index < cfg.budget.max_candidates && start.elapsed() < cfg.budget.total {
        let Some(cand) = stream.next() else { break };
        index += 1;
        let terms = cand.terms(&space);
        match s.check(&terms)? {
            Check::Valid { mode, invariant } => {
                report.candidate_index = Some(index);
                report.candidate = Some(cand.show(&space));
                report.coupling = terms.iter().map(Term::to_string).collect();
                report.coupling_terms = terms;
                report.invariant = invariant.as_deref().map(show_invariant);
                report.pmf_mode = Some(mode.name().to_string());
                report.status = Status::Proved;
                break;
            }
            Check::Invalid { reason, model } => {
                if report.rejected.len() < MAX_REJECTIONS {
                    report.rejected.push(Rejection {
                        index,
                        candidate: cand.show(&space),
                        reason,
                        counterexample: model.as_ref().map(show_model),
                    });
                }
            }
        }
    }
    report.candidates_checked = index;

    if report.proved() && !cfg.skip_oracle {
        report.oracle = task.oracle(&cfg.policy);
        if let Some(bad) = report.oracle.iter().find(|o| o.holds == Some(false)) {
            report.status = Status::Unsound;
            report.diagnostic = Some(format!(
                "solver accepted {} but the oracle refutes the property at {} (gap {})",
                report.candidate.as_deref().unwrap_or("?"),
                bad.instance,
                bad.gap.as_deref().unwrap_or("?")
            ));
        }
    } else if !cfg.skip_oracle {
        report.oracle = task.oracle(&cfg.policy);
    }
    report.solver = SolverStats {
        queries: solver.queries(),
        time_ms: solver.solver_time().as_millis() as u64,
    };
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}
