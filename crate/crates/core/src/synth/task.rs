//! Verification tasks and their exact-oracle cross-check.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use super::SynthError;
use crate::lang::{
    check, unroll, CplFile, OracleArg, OracleInstance, Program, PropSpec, StmtKind, Type, TypeEnv, VarId,
};
use crate::semantics::{
    check_cond_independent, check_equality, check_independent, check_uniform, finite_domain, finite_values,
    instantiate, interpret_with, UnrollPolicy, Value, Verdict,
};
use crate::vcgen::{vc_cond_independent, vc_equality, vc_independent, vc_uniform, Subject, VcBundle};

#[derive(Clone, Debug)]
pub struct Task {
    pub name: String,
    pub program: Program,
    pub env: TypeEnv,
    pub prop: PropSpec,
    pub second: Option<(Program, TypeEnv)>,
    pub oracles: Vec<OracleInstance>,
}

fn checked(p: Program) -> Result<(Program, TypeEnv), SynthError> {
    let env = check(&p)?;
    Ok((p, env))
}

/// Parameter values used when a task names no oracle instances.
pub fn default_oracles(p: &Program) -> Vec<OracleInstance> {
    if !p.dists.is_empty() || !p.funs.is_empty() {
        return Vec::new();
    }
    if p.params.is_empty() {
        return vec![OracleInstance::default()];
    }
    let reals = [(1, 2), (1, 3), (3, 4)];
    reals
        .iter()
        .map(|&(n, d)| {
            let mut b = BTreeMap::new();
            for (v, t) in &p.params {
                let arg = match t {
                    Type::Bool => OracleArg::Bool(true),
                    Type::Real => OracleArg::Num(BigRational::new(BigInt::from(n), BigInt::from(d))),
                    _ => OracleArg::Num(BigRational::from_integer(BigInt::from(3))),
                };
                b.insert(v.name.clone(), arg);
            }
            OracleInstance { bindings: b }
        })
        .collect()
}

impl Task {
    pub fn new(
        name: impl Into<String>,
        program: Program,
        prop: PropSpec,
        second: Option<Program>,
        oracles: Vec<OracleInstance>,
    ) -> Result<Task, SynthError> {
        let (program, env) = checked(program)?;
        let second = second.map(checked).transpose()?;
        for v in prop.vars() {
            if !env.contains_key(&v) && !array_element(&v) {
                return Err(SynthError::Input(format!("property mentions unknown variable '{v}'")));
            }
        }
        let oracles = if oracles.is_empty() { default_oracles(&program) } else { oracles };
        Ok(Task { name: name.into(), program, env, prop, second, oracles })
    }

    /// Task for property `index` of a parsed file. `load` reads the second
    /// program of an `equal ... with path` property.
    pub fn from_file(
        name: &str,
        file: &CplFile,
        index: usize,
        load: &dyn Fn(&str) -> Result<CplFile, SynthError>,
    ) -> Result<Task, SynthError> {
        let prop = file
            .props
            .get(index)
            .cloned()
            .ok_or_else(|| SynthError::Input(format!("{name}: no property #{}", index + 1)))?;
        let second = match &prop {
            PropSpec::Equal { second: Some(path), .. } => Some(load(path)?.program),
            _ => None,
        };
        Task::new(name, file.program.clone(), prop, second, file.oracles.clone())
    }

    /// The program as verified: independence of array elements needs the
    /// counter loop unrolled.
    pub fn prepared(&self) -> Result<(Program, TypeEnv), SynthError> {
        let needs_unroll = matches!(self.prop, PropSpec::Independent(..) | PropSpec::CondIndependent(..))
            && self.program.body.iter().any(|s| matches!(s.kind, StmtKind::For(..)));
        if needs_unroll {
            let u = unroll(&self.program)?;
            let env = check(&u)?;
            Ok((u, env))
        } else {
            Ok((self.program.clone(), self.env.clone()))
        }
    }

    pub fn bundle(&self) -> Result<VcBundle, SynthError> {
        let (p, env) = self.prepared()?;
        let s = Subject { program: &p, env: &env };
        let b = match &self.prop {
            PropSpec::Uniform { vars, support } => {
                let sup = support.as_ref().map(|s| literal_tuples(s)).transpose()?;
                vc_uniform(&s, vars, sup.as_deref())?
            }
            PropSpec::Independent(v, w) => vc_independent(&s, v, w)?,
            PropSpec::CondIndependent(v, w, c) => vc_cond_independent(&s, v, w, c)?,
            PropSpec::Equal { left, right, .. } => match &self.second {
                Some((q, qenv)) => vc_equality(&s, left, &Subject { program: q, env: qenv }, right)?,
                None => vc_equality(&s, left, &s, right)?,
            },
        };
        Ok(b)
    }

    /// Runs the exact interpreter on every oracle instance and checks the
    /// property.
    pub fn oracle(&self, policy: &UnrollPolicy) -> Vec<OracleResult> {
        self.oracles.iter().map(|inst| self.oracle_one(inst, policy)).collect()
    }

    pub fn oracle_one(&self, inst: &OracleInstance, policy: &UnrollPolicy) -> OracleResult {
        let instance = show_instance(inst);
        match self.verdict(inst, policy) {
            Ok(v) => OracleResult {
                instance,
                holds: Some(v.holds()),
                gap: v.gap().map(|g| g.to_string()),
                witness: match &v {
                    Verdict::Refuted { witness, .. } => Some(witness.clone()),
                    Verdict::Holds { .. } => None,
                },
                error: None,
            },
            Err(e) => OracleResult { instance, holds: None, gap: None, witness: None, error: Some(e.to_string()) },
        }
    }

    pub fn verdict(&self, inst: &OracleInstance, policy: &UnrollPolicy) -> Result<Verdict, SynthError> {
        let run = |p: &Program| -> Result<_, SynthError> {
            let (s0, c) = instantiate(p, &restrict(inst, p))?;
            Ok((interpret_with(p, &s0, policy, &c)?, c))
        };
        let (prog, env) = self.prepared()?;
        let (d, c) = run(&prog)?;
        let types = |vs: &[VarId]| vs.iter().map(|v| env.get(v).cloned()).collect::<Option<Vec<_>>>();
        Ok(match &self.prop {
            PropSpec::Uniform { vars, support } => {
                let domain = match support {
                    Some(s) => literal_tuples(s)?,
                    None => types(vars)
                        .and_then(|ts| finite_domain(&ts))
                        .ok_or_else(|| SynthError::Input("uniformity needs a finite domain or a support set".into()))?,
                };
                check_uniform(&d, vars, &domain)?
            }
            PropSpec::Independent(v, w) => check_independent(&d, v, w)?,
            PropSpec::CondIndependent(v, w, cv) => {
                let dom = env.get(cv).and_then(finite_values);
                check_cond_independent(&d, v, w, cv, dom.as_deref())?
            }
            PropSpec::Equal { left, right, .. } => match &self.second {
                Some((q, _)) => {
                    let (d2, c2) = run(q)?;
                    let mut funs = c.funs.clone();
                    funs.extend(c2.funs);
                    check_equality(&d, left, &d2, right, &funs)?
                }
                None => check_equality(&d, left, &d, right, &c.funs)?,
            },
        })
    }
}

/// Outcome of one exact oracle run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub instance: String,
    /// `None` when the oracle could not run.
    pub holds: Option<bool>,
    pub gap: Option<String>,
    pub witness: Option<String>,
    pub error: Option<String>,
}

fn array_element(v: &VarId) -> bool {
    matches!(v.name.split_once('['), Some((base, _)) if !base.is_empty() && v.name.ends_with(']'))
}

fn literal_tuples(s: &[Vec<crate::lang::Expr>]) -> Result<Vec<Vec<Value>>, SynthError> {
    s.iter()
        .map(|t| {
            t.iter()
                .map(|e| Value::from_literal(e).ok_or_else(|| SynthError::Input("support entries must be literals".into())))
                .collect()
        })
        .collect()
}

/// Bindings of `inst` that `p` declares.
fn restrict(inst: &OracleInstance, p: &Program) -> OracleInstance {
    let known = |n: &str| {
        p.params.iter().any(|(v, _)| v.name == n) || p.dist_type(n).is_some() || p.fun(n).is_some()
    };
    OracleInstance { bindings: inst.bindings.iter().filter(|(k, _)| known(k)).map(|(k, v)| (k.clone(), v.clone())).collect() }
}

pub fn show_instance(inst: &OracleInstance) -> String {
    let parts: Vec<String> = inst
        .bindings
        .iter()
        .map(|(k, v)| {
            let v = match v {
                OracleArg::Num(r) => r.to_string(),
                OracleArg::Bool(b) => b.to_string(),
                OracleArg::Dist(d) => crate::lang::pretty_dist(d),
                OracleArg::Fun(f) => f.clone(),
            };
            format!("{k}={v}")
        })
        .collect();
    parts.join(" ")
}
