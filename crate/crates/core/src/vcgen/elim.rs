//! Coupling elimination and candidate instantiation.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::bundle::{Clause, VcBundle};
use super::enc::term;
use super::formula::*;
use super::VcError;
use crate::lang::{pretty_dist, DistExpr, Expr, Type};
use crate::transform::SampleVec;

/// How component pmfs appear in the monotonicity condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PmfMode {
    /// Closed-form pmfs inlined as terms.
    Full,
    /// Symbolic-parameter and declared distributions replaced by
    /// uninterpreted functions shared between syntactically equal
    /// components.
    Elided,
}

impl PmfMode {
    pub fn name(self) -> &'static str {
        match self {
            PmfMode::Full => "full",
            PmfMode::Elided => "elided",
        }
    }
}

/// A closed first-order validity question: `hyps => and(goals)`, all free
/// symbols universally quantified.
#[derive(Clone, Debug)]
pub struct Query {
    pub sig: Signature,
    pub hyps: Vec<Term>,
    pub goals: Vec<Clause>,
}

impl Query {
    pub fn formula(&self) -> Term {
        implies(and(self.hyps.clone()), and(self.goals.iter().map(Clause::formula).collect()))
    }
}

const MAX_AXIOM_DOMAIN: i64 = 256;

fn range_of(d: &DistExpr) -> Option<(i64, i64)> {
    match d {
        DistExpr::UniformInt(lo, hi) => Some((*lo, *hi)),
        DistExpr::Opaque(_, Type::Range(lo, hi)) => Some((*lo, *hi)),
        _ => None,
    }
}

fn in_dom(d: &DistExpr, x: &Term) -> Term {
    match range_of(d) {
        Some((lo, hi)) => and(vec![app(Op::Le, vec![int(lo), x.clone()]), app(Op::Le, vec![x.clone(), int(hi)])]),
        None => Term::Bool(true),
    }
}

fn rat(n: i64, d: i64) -> Term {
    real(BigRational::new(BigInt::from(n), BigInt::from(d)))
}

struct Pmfs {
    mode: PmfMode,
    shared: BTreeMap<String, (String, DistExpr)>,
}

impl Pmfs {
    fn elide(&self, d: &DistExpr) -> bool {
        match d {
            DistExpr::Opaque(..) => true,
            DistExpr::Bern(e) => self.mode == PmfMode::Elided && !matches!(e, Expr::Rat(_) | Expr::Int(_)),
            _ => false,
        }
    }

    fn pmf(&mut self, d: &DistExpr, x: &Term) -> Result<Term, VcError> {
        if self.elide(d) {
            if self.mode == PmfMode::Full {
                return Err(VcError::Opaque(pretty_dist(d)));
            }
            let key = pretty_dist(&d.map_vars(&mut |v| Expr::Var(v.untagged())));
            let n = self.shared.len();
            let fresh = match d {
                DistExpr::Opaque(mu, _) => format!("pmf!{mu}"),
                _ => format!("hc!{}", n + 1),
            };
            let name = self.shared.entry(key).or_insert_with(|| (fresh, d.clone())).0.clone();
            return Ok(apply(name, vec![x.clone()]));
        }
        Ok(match d {
            DistExpr::Bern(e) => {
                let p = term(e)?;
                ite(x.clone(), p.clone(), app(Op::Sub, vec![rat(1, 1), p]))
            }
            DistExpr::UniformInt(lo, hi) => ite(in_dom(d, x), rat(1, hi - lo + 1), rat(0, 1)),
            _ => return Err(VcError::Unsupported(format!("pmf of {}", pretty_dist(d)))),
        })
    }

    /// Nonnegativity and total mass of each shared pmf over a finite domain.
    fn axioms(&self, sig: &mut Signature) -> Vec<Term> {
        let mut out = Vec::new();
        for (name, d) in self.shared.values() {
            let t = d.result_types()[0].clone();
            sig.function(name.clone(), vec![Sort::of(&t)], Sort::Real);
            let points: Vec<Term> = match t {
                Type::Bool => vec![Term::Bool(true), Term::Bool(false)],
                Type::Range(lo, hi) if hi - lo < MAX_AXIOM_DOMAIN => (lo..=hi).map(int).collect(),
                _ => continue,
            };
            let vals: Vec<Term> = points.into_iter().map(|p| apply(name.clone(), vec![p])).collect();
            for v in &vals {
                out.push(app(Op::Le, vec![rat(0, 1), v.clone()]));
            }
            out.push(eq(app(Op::Add, vals), rat(1, 1)));
        }
        out
    }
}

fn product(sv: &SampleVec, xs: &[Term], pm: &mut Pmfs) -> Result<Term, VcError> {
    let mut fs = Vec::new();
    for (d, x) in sv.dists.iter().zip(xs) {
        fs.push(pm.pmf(d, x)?);
    }
    Ok(mul(fs))
}

/// Substitutes candidate components for the hole.
fn fill_hole(b: &VcBundle, cand: &[Term], t: &Term) -> Term {
    let mut t = t.clone();
    for (k, c) in cand.iter().enumerate() {
        let names: Vec<String> = b
            .hole
            .params
            .iter()
            .map(|(p, _)| p.clone())
            .chain((0..b.hole.args.len()).map(super::bundle::Hole::formal))
            .collect();
        t = t.subst_apply(&b.hole.component(k), &|args| {
            let m: BTreeMap<String, Term> = names.iter().cloned().zip(args.iter().cloned()).collect();
            c.subst(&m)
        });
    }
    t
}

fn fill_inv(b: &VcBundle, inv: &Term, t: &Term) -> Term {
    let Some(sig) = &b.inv else { return t.clone() };
    let names: Vec<String> = sig.vars.iter().map(super::enc::sym).collect();
    t.subst_apply(&sig.name, &|args| {
        let m: BTreeMap<String, Term> = names.iter().cloned().zip(args.iter().cloned()).collect();
        inv.subst(&m)
    })
}

/// `f` applied to the terms `xs`, with the candidate substituted.
pub fn image(b: &VcBundle, cand: &[Term], xs: &[Term]) -> Vec<Term> {
    b.hole.apply(xs).iter().map(|t| fill_hole(b, cand, t)).collect()
}

/// Injectivity and monotonicity of the coupling function under the
/// coupling hypothesis.
pub fn eliminate_coupling(b: &VcBundle, cand: &[Term], mode: PmfMode) -> Result<(Vec<Clause>, Signature, Vec<Term>), VcError> {
    let c = &b.coupling;
    let mut sig = Signature::default();
    let mk = |p: &str, sig: &mut Signature| -> Vec<Term> {
        b.hole
            .args
            .iter()
            .enumerate()
            .map(|(k, (_, s))| {
                let n = format!("%{p}{k}");
                sig.constant(n.clone(), *s);
                var(n)
            })
            .collect()
    };
    let xs = mk("x", &mut sig);
    let ys = mk("y", &mut sig);
    let dom = |v: &[Term]| and(c.lhs.dists.iter().zip(v).map(|(d, x)| in_dom(d, x)).collect());
    let (fx, fy) = (image(b, cand, &xs), image(b, cand, &ys));

    let inj = Clause::new(
        "injectivity",
        and(vec![c.hyp.clone(), dom(&xs), dom(&ys), not(eq_vec(&xs, &ys))]),
        not(eq_vec(&fx, &fy)),
    );
    let mut pm = Pmfs { mode, shared: BTreeMap::new() };
    let lhs = product(&c.lhs, &xs, &mut pm)?;
    let rhs = product(&c.rhs, &fx, &mut pm)?;
    let rdom = and(c.rhs.dists.iter().zip(&fx).map(|(d, x)| in_dom(d, x)).collect());
    let mono = Clause::new(
        "monotonicity",
        and(vec![c.hyp.clone(), dom(&xs)]),
        and(vec![rdom, app(Op::Le, vec![lhs, rhs])]),
    );
    let axioms = pm.axioms(&mut sig);
    Ok((vec![inj, mono], sig, axioms))
}

/// Closes the bundle with a candidate coupling function and, for loops, a
/// candidate invariant over the invariant's argument symbols.
pub fn instantiate(b: &VcBundle, cand: &[Term], inv: Option<&Term>, mode: PmfMode) -> Result<Query, VcError> {
    if cand.len() != b.hole.outs.len() {
        return Err(VcError::Unsupported(format!(
            "candidate has {} components, hole has {}",
            cand.len(),
            b.hole.outs.len()
        )));
    }
    if b.inv.is_some() && inv.is_none() {
        return Err(VcError::Unsupported("loop bundle needs an invariant".into()));
    }
    let close = |t: &Term| {
        let t = fill_hole(b, cand, t);
        match inv {
            Some(i) => fill_inv(b, i, &t),
            None => t,
        }
    };
    let mut goals: Vec<Clause> = b
        .clauses
        .iter()
        .map(|c| Clause { name: c.name.clone(), hyp: close(&c.hyp), concl: close(&c.concl) })
        .collect();
    let (elim, extra, axioms) = eliminate_coupling(b, cand, mode)?;
    goals.extend(elim.into_iter().map(|c| Clause { name: c.name, hyp: close(&c.hyp), concl: close(&c.concl) }));

    let mut sig = b.sig.clone();
    for k in 0..b.hole.outs.len() {
        sig.syms.remove(&b.hole.component(k));
    }
    if let Some(i) = &b.inv {
        sig.syms.remove(&i.name);
    }
    sig.merge(&extra);

    let mut hyps = b.param_axioms.clone();
    hyps.extend(axioms);
    hyps.extend(sample_domains(b));
    Ok(Query { sig, hyps, goals })
}

/// Sampled values lie in their distribution's support.
fn sample_domains(b: &VcBundle) -> Vec<Term> {
    let mut out = Vec::new();
    let post = b.has_loop();
    for sv in [b.left_samples(), b.right_samples()] {
        for (v, d) in sv.vars.iter().zip(&sv.dists) {
            let s = if post { super::enc::post_sym(v) } else { super::enc::sym(v) };
            out.push(in_dom(d, &var(s)));
        }
    }
    out.retain(|t| *t != Term::Bool(true));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{check, parse, VarId};
    use crate::semantics::Value;
    use crate::vcgen::bundle::{vc_uniform, Subject};

    #[test]
    fn negation_coupling_instantiates() {
        let p = parse("x ~ bern(1/2)\nreturn x").unwrap();
        let env = check(&p).unwrap();
        let b = vc_uniform(&Subject { program: &p, env: &env }, &[VarId::new("x")], None).unwrap();
        let q = instantiate(&b, &[not(var("%0"))], None, PmfMode::Full).unwrap();
        let names: Vec<&str> = q.goals.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["main", "injectivity", "monotonicity"]);
        assert!(q.formula().applied().iter().all(|f| !f.starts_with("cf")));
        // a = true, a' = false, x!1 = true: x!2 = !x!1 = false so both sides hold
        let m: BTreeMap<String, Value> = [("a", true), ("a'", false), ("x!1", true), ("x!2", false)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), Value::Bool(v)))
            .collect();
        assert_eq!(eval(&q.goals[0].formula(), &m), Some(Value::Bool(true)));
    }

    #[test]
    fn elided_pmfs_are_shared() {
        let p = parse("param p: real\nx ~ bern(p)\ny ~ bern(p)\nreturn x").unwrap();
        let env = check(&p).unwrap();
        let b = vc_uniform(&Subject { program: &p, env: &env }, &[VarId::new("x")], None).unwrap();
        let swap = [var("%1"), var("%0")];
        let q = instantiate(&b, &swap, None, PmfMode::Elided).unwrap();
        let f = q.formula();
        assert!(f.applied().contains("hc!1"));
        assert!(!f.applied().contains("hc!2"));
        let full = instantiate(&b, &swap, None, PmfMode::Full).unwrap();
        assert!(full.formula().applied().is_empty());
    }

    #[test]
    fn opaque_needs_elision() {
        let p = parse("dist mu: bool\nx ~ mu\nreturn x").unwrap();
        let env = check(&p).unwrap();
        let b = vc_uniform(&Subject { program: &p, env: &env }, &[VarId::new("x")], None).unwrap();
        assert!(matches!(instantiate(&b, &[var("%0")], None, PmfMode::Full), Err(VcError::Opaque(_))));
        let q = instantiate(&b, &[var("%0")], None, PmfMode::Elided).unwrap();
        assert!(q.formula().applied().contains("pmf!mu"));
    }
}
