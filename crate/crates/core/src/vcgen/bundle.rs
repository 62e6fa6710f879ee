//! Verification-condition bundles for the four property kinds.

use std::collections::{BTreeMap, BTreeSet};

use super::enc::{enc, enc_transition, post_sym, sym, term};
use super::formula::*;
use super::VcError;
use crate::lang::{Expr, Program, Stmt, StmtKind, Type, TypeEnv, VarId};
use crate::semantics::Value;
use crate::transform::{hoist, pad_pair, seq, Hoisted, SampleVec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropKind {
    Uniform,
    Independent,
    CondIndependent,
    Equal,
}

impl PropKind {
    pub fn name(self) -> &'static str {
        match self {
            PropKind::Uniform => "uniform",
            PropKind::Independent => "independent",
            PropKind::CondIndependent => "cond-independent",
            PropKind::Equal => "equal",
        }
    }
}

/// The unknown coupling function. Component `k` is the symbol `name!k`
/// (1-based) applied to `params` followed by `args`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hole {
    pub name: String,
    pub params: Vec<(String, Sort)>,
    /// Formal sample arguments `%0, %1, ..`.
    pub args: Vec<(String, Sort)>,
    pub outs: Vec<Sort>,
}

impl Hole {
    pub fn component(&self, k: usize) -> String {
        format!("{}!{}", self.name, k + 1)
    }

    /// `f(args)` as a vector of component applications.
    pub fn apply(&self, args: &[Term]) -> Vec<Term> {
        (0..self.outs.len())
            .map(|k| {
                let mut full: Vec<Term> = self.params.iter().map(|(p, _)| var(p.clone())).collect();
                full.extend(args.iter().cloned());
                apply(self.component(k), full)
            })
            .collect()
    }

    pub fn formal(k: usize) -> String {
        format!("%{k}")
    }
}

/// The unknown loop invariant `I(V, V1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvSig {
    pub name: String,
    pub vars: Vec<VarId>,
    pub sorts: Vec<Sort>,
}

impl InvSig {
    pub fn pre(&self) -> Term {
        apply(self.name.clone(), self.vars.iter().map(|v| var(sym(v))).collect())
    }

    /// Applied to post-iteration symbols; inputs keep their names.
    pub fn post(&self, inputs: &BTreeSet<VarId>) -> Term {
        apply(
            self.name.clone(),
            self.vars.iter().map(|v| var(if inputs.contains(v) { sym(v) } else { post_sym(v) })).collect(),
        )
    }
}

/// `hyp => lhs <f> rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingAtom {
    pub hyp: Term,
    pub lhs: SampleVec,
    pub rhs: SampleVec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub name: String,
    pub hyp: Term,
    pub concl: Term,
}

impl Clause {
    pub fn new(name: &str, hyp: Term, concl: Term) -> Clause {
        Clause { name: name.to_string(), hyp, concl }
    }

    pub fn formula(&self) -> Term {
        implies(self.hyp.clone(), self.concl.clone())
    }
}

#[derive(Clone, Debug)]
pub struct VcBundle {
    pub kind: PropKind,
    pub sig: Signature,
    /// Universally quantified property constants (`a`, `a'`, ..).
    pub params: Vec<(String, Sort)>,
    pub param_axioms: Vec<Term>,
    pub hole: Hole,
    pub inv: Option<InvSig>,
    /// Main implications; they mention the hole and the invariant.
    pub clauses: Vec<Clause>,
    pub coupling: CouplingAtom,
    pub left: Hoisted,
    pub right: Hoisted,
    pub inputs: BTreeSet<VarId>,
    pub inputs_eq: Term,
    /// Types of every variable of both sides.
    pub env: BTreeMap<VarId, Type>,
    /// Right side of the main implication: `events.0 <=> events.1`.
    pub goal: Term,
    pub events: (Term, Term),
    /// Copy tag of the right side to the left-side tag it mirrors.
    pub tag_map: BTreeMap<u8, u8>,
}

impl VcBundle {
    pub fn has_loop(&self) -> bool {
        self.inv.is_some()
    }

    pub fn left_samples(&self) -> &SampleVec {
        match &self.left.lp {
            Some(l) => &l.sample,
            None => &self.left.front,
        }
    }

    pub fn right_samples(&self) -> &SampleVec {
        match &self.right.lp {
            Some(l) => &l.sample,
            None => &self.right.front,
        }
    }

    pub fn sort(&self, v: &VarId) -> Option<Sort> {
        self.env.get(v).map(Sort::of)
    }
}

/// Collects variables read or written by statements.
pub fn stmt_vars(body: &[Stmt], out: &mut BTreeSet<VarId>) {
    for s in body {
        match &s.kind {
            StmtKind::Assign(p, e) => {
                out.extend(p.var().cloned());
                out.extend(e.vars());
            }
            StmtKind::Sample(ps, d) => {
                out.extend(ps.iter().filter_map(|p| p.var().cloned()));
                d.visit_vars(&mut |v| {
                    out.insert(v.clone());
                });
            }
            StmtKind::If(c, a, b) => {
                out.extend(c.vars());
                stmt_vars(a, out);
                stmt_vars(b, out);
            }
            StmtKind::While(g, b, _) => {
                out.extend(g.vars());
                stmt_vars(b, out);
            }
            StmtKind::For(v, lo, hi, b) => {
                out.insert(v.clone());
                out.extend(lo.vars());
                out.extend(hi.vars());
                stmt_vars(b, out);
            }
        }
    }
}

/// Variables live across loop iterations: inputs, everything defined before
/// or inside the loop, and the guard's variables.
pub fn loop_state(h: &Hoisted) -> Vec<VarId> {
    let mut s: BTreeSet<VarId> = h.decls.input_vars().into_iter().collect();
    s.extend(h.front.vars.iter().cloned());
    stmt_vars(&h.prefix, &mut s);
    if let Some(l) = &h.lp {
        s.extend(l.guard.vars());
        s.extend(l.sample.vars.iter().cloned());
        stmt_vars(&l.body, &mut s);
    }
    s.into_iter().collect()
}

fn all_vars(h: &Hoisted) -> BTreeSet<VarId> {
    let mut s: BTreeSet<VarId> = loop_state(h).into_iter().collect();
    stmt_vars(&h.suffix, &mut s);
    s.extend(h.decls.returns.iter().cloned());
    s
}

/// Type of a tagged variable, looked up by its untagged name.
fn type_of(env: &TypeEnv, extra: &BTreeMap<VarId, Type>, v: &VarId) -> Result<Type, VcError> {
    extra
        .get(v)
        .or_else(|| env.get(&v.untagged()))
        .cloned()
        .ok_or_else(|| VcError::Unsupported(format!("unknown variable '{v}'")))
}

fn value_term(v: &Value) -> Term {
    match v {
        Value::Bool(b) => Term::Bool(*b),
        Value::Int(n) => Term::Int(n.clone()),
        Value::Rat(r) => Term::Real(r.clone()),
    }
}

/// A copy-indexed view of the program being verified.
pub struct Subject<'a> {
    pub program: &'a Program,
    pub env: &'a TypeEnv,
}

impl Subject<'_> {
    fn copy(&self, k: u8) -> Result<Hoisted, VcError> {
        Ok(hoist(self.program)?.tagged(k))
    }
}

/// Parameter constants over the domain of `vars`: names, sorts, and
/// membership axioms.
fn domain_params(
    base: &str,
    vars: &[VarId],
    env: &TypeEnv,
    support: Option<&[Vec<Value>]>,
) -> Result<(Vec<(String, Sort)>, Vec<Term>), VcError> {
    let mut names = Vec::new();
    let mut axioms = Vec::new();
    for (i, v) in vars.iter().enumerate() {
        let t = env.get(v).ok_or_else(|| VcError::Unsupported(format!("unknown variable '{v}'")))?;
        let name = if vars.len() == 1 { base.to_string() } else { format!("{base}.{}", i + 1) };
        match t {
            Type::Bool => {}
            Type::Range(lo, hi) => {
                axioms.push(app(Op::Le, vec![int(*lo), var(name.clone())]));
                axioms.push(app(Op::Le, vec![var(name.clone()), int(*hi)]));
            }
            _ if support.is_some() => {}
            _ => return Err(VcError::InfiniteDomain(v.clone())),
        }
        names.push((name, Sort::of(t)));
    }
    if let Some(sup) = support {
        let opts = sup
            .iter()
            .map(|tuple| and(names.iter().zip(tuple).map(|((n, _), x)| eq(var(n.clone()), value_term(x))).collect()))
            .collect();
        axioms.push(or(opts));
    }
    Ok((names, axioms))
}

fn tuple_eq(vars: &[VarId], tag: u8, params: &[(String, Sort)]) -> Term {
    and(vars.iter().zip(params).map(|(v, (p, _))| eq(var(sym(&v.with_tag(tag))), var(p.clone()))).collect())
}

/// `V^I_i = V^I_j` for consecutive copies.
fn inputs_equal(copies: &[&Hoisted]) -> Term {
    let mut out = Vec::new();
    for w in copies.windows(2) {
        for (v, _) in &w[0].decls.params {
            let u = v.untagged();
            if let Some((v2, _)) = w[1].decls.params.iter().find(|(x, _)| x.untagged() == u) {
                out.push(eq(var(sym(v)), var(sym(v2))));
            }
        }
    }
    and(out)
}

pub fn vc_uniform(s: &Subject, vars: &[VarId], support: Option<&[Vec<Value>]>) -> Result<VcBundle, VcError> {
    let (l, r) = (s.copy(1)?, s.copy(2)?);
    let (a, mut axioms) = domain_params("a", vars, s.env, support)?;
    let (b, axioms2) = domain_params("a'", vars, s.env, support)?;
    axioms.extend(axioms2);
    // a = a' is always discharged by the identity coupling
    axioms.push(not(and(a.iter().zip(&b).map(|((x, _), (y, _))| eq(var(x.clone()), var(y.clone()))).collect())));
    let goal = iff(tuple_eq(vars, 1, &a), tuple_eq(vars, 2, &b));
    let mut params = a;
    params.extend(b);
    let ieq = inputs_equal(&[&l, &r]);
    let mut b = build(PropKind::Uniform, s.env, l, r, ieq, goal, params, axioms)?;
    b.tag_map.insert(2, 1);
    Ok(b)
}

pub fn vc_independent(s: &Subject, v: &VarId, w: &VarId) -> Result<VcBundle, VcError> {
    let (p1, p2, p3) = (s.copy(1)?, s.copy(2)?, s.copy(3)?);
    let right = seq(&p2, &p3)?;
    let (a, mut axioms) = domain_params("a", std::slice::from_ref(v), s.env, None)?;
    let (b, axioms2) = domain_params("a'", std::slice::from_ref(w), s.env, None)?;
    axioms.extend(axioms2);
    let (va, wb) = (var(a[0].0.clone()), var(b[0].0.clone()));
    let goal = iff(
        and(vec![eq(var(sym(&v.with_tag(1))), va.clone()), eq(var(sym(&w.with_tag(1))), wb.clone())]),
        and(vec![eq(var(sym(&v.with_tag(2))), va), eq(var(sym(&w.with_tag(3))), wb)]),
    );
    let ieq = inputs_equal(&[&p1, &p2, &p3]);
    let mut params = a;
    params.extend(b);
    let mut b = build(PropKind::Independent, s.env, p1, right, ieq, goal, params, axioms)?;
    b.tag_map.extend([(2, 1), (3, 1)]);
    Ok(b)
}

pub fn vc_cond_independent(s: &Subject, v: &VarId, w: &VarId, c: &VarId) -> Result<VcBundle, VcError> {
    let copies = (1..=4).map(|k| s.copy(k)).collect::<Result<Vec<_>, _>>()?;
    let left = seq(&copies[0], &copies[1])?;
    let right = seq(&copies[2], &copies[3])?;
    let mut params = Vec::new();
    let mut axioms = Vec::new();
    for (name, x) in [("a", v), ("b", w), ("c", c)] {
        let (p, ax) = domain_params(name, std::slice::from_ref(x), s.env, None)?;
        params.extend(p);
        axioms.extend(ax);
    }
    let at = |x: &VarId, k: u8, p: usize| eq(var(sym(&x.with_tag(k))), var(params[p].0.clone()));
    let goal = iff(
        and(vec![at(v, 1, 0), at(w, 1, 1), at(c, 1, 2), at(c, 2, 2)]),
        and(vec![at(v, 3, 0), at(w, 4, 1), at(c, 3, 2), at(c, 4, 2)]),
    );
    let ieq = inputs_equal(&[&copies[0], &copies[1], &copies[2], &copies[3]]);
    let mut b = build(PropKind::CondIndependent, s.env, left, right, ieq, goal, params, axioms)?;
    b.tag_map.extend([(3, 1), (4, 2)]);
    Ok(b)
}

/// `Pr_{p1}[e1] = Pr_{p2}[e2]`; events are over output variables.
pub fn vc_equality(s1: &Subject, e1: &Expr, s2: &Subject, e2: &Expr) -> Result<VcBundle, VcError> {
    let l = s1.copy(1)?;
    let r = hoist(s2.program)?.tagged(2);
    let tag = |e: &Expr, k: u8| e.map_vars(&mut |v| Expr::Var(v.with_tag(k)));
    let goal = iff(term(&tag(e1, 1))?, term(&tag(e2, 2))?);
    let ieq = inputs_equal(&[&l, &r]);
    let mut env = s1.env.clone();
    for (k, t) in s2.env {
        env.entry(k.clone()).or_insert_with(|| t.clone());
    }
    let mut b = build(PropKind::Equal, &env, l, r, ieq, goal, Vec::new(), Vec::new())?;
    b.tag_map.insert(2, 1);
    Ok(b)
}

#[allow(clippy::too_many_arguments)]
fn build(
    kind: PropKind,
    env: &TypeEnv,
    left: Hoisted,
    right: Hoisted,
    inputs_eq: Term,
    goal: Term,
    params: Vec<(String, Sort)>,
    param_axioms: Vec<Term>,
) -> Result<VcBundle, VcError> {
    if left.has_loop() != right.has_loop() {
        return Err(VcError::Unsupported("one side has a loop and the other does not".into()));
    }
    let (mut left, mut right) = pad_pair(&left, &right);
    if let (Some(l1), Some(l2)) = (&mut left.lp, &mut right.lp) {
        if !left.front.is_empty() || !right.front.is_empty() {
            return Err(VcError::Unsupported("sampling outside the loop of a looping program".into()));
        }
        let (n, m) = (l1.sample.len(), l2.sample.len());
        if n < m {
            l1.sample = crate::transform::pad_to(&l1.sample, &l2.sample.dists[n..]);
        } else if m < n {
            l2.sample = crate::transform::pad_to(&l2.sample, &l1.sample.dists[m..]);
        }
    }

    // types of every variable, padding included
    let mut extra: BTreeMap<VarId, Type> = BTreeMap::new();
    for sv in [&left.front, &right.front]
        .into_iter()
        .chain(left.lp.iter().map(|l| &l.sample))
        .chain(right.lp.iter().map(|l| &l.sample))
    {
        for (v, d) in sv.vars.iter().zip(&sv.dists) {
            extra.insert(v.clone(), d.result_types()[0].clone());
        }
    }
    let mut tenv = BTreeMap::new();
    for v in all_vars(&left).into_iter().chain(all_vars(&right)) {
        tenv.insert(v.clone(), type_of(env, &extra, &v)?);
    }
    let inputs: BTreeSet<VarId> =
        left.decls.input_vars().into_iter().chain(right.decls.input_vars()).collect();

    let mut sig = Signature::default();
    for (v, t) in &tenv {
        sig.constant(sym(v), Sort::of(t));
    }
    for f in left.decls.funs.iter().chain(&right.decls.funs) {
        sig.function(f.name.clone(), f.args.iter().map(Sort::of).collect(), Sort::of(&f.ret));
    }
    for (p, s) in &params {
        sig.constant(p.clone(), *s);
    }

    let (ls, rs) = match (&left.lp, &right.lp) {
        (Some(a), Some(b)) => (a.sample.clone(), b.sample.clone()),
        _ => (left.front.clone(), right.front.clone()),
    };
    let sort_vec = |sv: &SampleVec| sv.vars.iter().map(|v| Sort::of(&tenv[v])).collect::<Vec<_>>();
    let hole = Hole {
        name: "cf".into(),
        params: Vec::new(),
        args: sort_vec(&ls).into_iter().enumerate().map(|(k, s)| (Hole::formal(k), s)).collect(),
        outs: sort_vec(&rs),
    };
    for k in 0..hole.outs.len() {
        sig.function(hole.component(k), hole.args.iter().map(|(_, s)| *s).collect(), hole.outs[k]);
    }

    let mut bundle = VcBundle {
        kind,
        sig,
        params,
        param_axioms,
        hole,
        inv: None,
        clauses: Vec::new(),
        coupling: CouplingAtom { hyp: inputs_eq.clone(), lhs: ls, rhs: rs },
        left,
        right,
        inputs,
        inputs_eq,
        env: tenv,
        events: match &goal {
            Term::App(Op::Eq, a) if a.len() == 2 => (a[0].clone(), a[1].clone()),
            g => (g.clone(), Term::Bool(true)),
        },
        goal,
        tag_map: BTreeMap::new(),
    };
    if bundle.left.has_loop() {
        loop_clauses(&mut bundle)?;
    } else {
        loop_free_clauses(&mut bundle)?;
    }
    Ok(bundle)
}

fn sample_terms(sv: &SampleVec, post: bool) -> Vec<Term> {
    sv.vars.iter().map(|v| var(if post { post_sym(v) } else { sym(v) })).collect()
}

fn loop_free_clauses(b: &mut VcBundle) -> Result<(), VcError> {
    let lv = sample_terms(&b.left.front, false);
    let rv = sample_terms(&b.right.front, false);
    let coupled = eq_vec(&rv, &b.hole.apply(&lv));
    let hyp = and(vec![
        b.inputs_eq.clone(),
        coupled,
        enc(&b.left.prefix)?,
        enc(&b.left.suffix)?,
        enc(&b.right.prefix)?,
        enc(&b.right.suffix)?,
    ]);
    b.clauses.push(Clause::new("main", hyp, b.goal.clone()));
    Ok(())
}

fn loop_clauses(b: &mut VcBundle) -> Result<(), VcError> {
    let (l, r) = (b.left.lp.clone().unwrap(), b.right.lp.clone().unwrap());
    let lstate = loop_state(&b.left);
    let rstate = loop_state(&b.right);
    let mut vars = lstate.clone();
    vars.extend(rstate.iter().cloned());
    let inv = InvSig {
        name: "I".into(),
        sorts: vars.iter().map(|v| Sort::of(&b.env[v])).collect(),
        vars,
    };
    b.sig.function(inv.name.clone(), inv.sorts.clone(), Sort::Bool);
    for v in inv.vars.iter().filter(|v| !b.inputs.contains(*v)) {
        b.sig.constant(post_sym(v), Sort::of(&b.env[v]));
    }
    let (gl, gr) = (term(&l.guard)?, term(&r.guard)?);

    let init_hyp = and(vec![b.inputs_eq.clone(), enc(&b.left.prefix)?, enc(&b.right.prefix)?]);
    b.clauses.push(Clause::new("initiation", init_hyp, inv.pre()));

    let lv = sample_terms(&l.sample, true);
    let rv = sample_terms(&r.sample, true);
    let cons_hyp = and(vec![
        inv.pre(),
        gl.clone(),
        eq_vec(&rv, &b.hole.apply(&lv)),
        enc_transition(&l.body, &l.sample.vars, &lstate, &b.inputs)?,
        enc_transition(&r.body, &r.sample.vars, &rstate, &b.inputs)?,
    ]);
    b.clauses.push(Clause::new("consecution", cons_hyp, inv.post(&b.inputs)));
    b.clauses.push(Clause::new("synchronization", inv.pre(), iff(gl.clone(), gr)));
    let prop_hyp = and(vec![inv.pre(), not(gl), enc(&b.left.suffix)?, enc(&b.right.suffix)?]);
    b.clauses.push(Clause::new("property", prop_hyp, b.goal.clone()));
    b.coupling.hyp = and(vec![inv.pre(), b.inputs_eq.clone()]);
    b.inv = Some(inv);
    Ok(())
}

/// Moves the property constants into the hole: every `f(t)` becomes
/// `g(params, t)`, so one function is sought for all parameter values.
pub fn reorder_quantifiers(b: &VcBundle) -> VcBundle {
    let mut out = b.clone();
    if b.params.is_empty() || !b.hole.params.is_empty() {
        return out;
    }
    let old = b.hole.clone();
    out.hole.name = "cg".into();
    out.hole.params = b.params.clone();
    let new_hole = out.hole.clone();
    let rename = |t: &Term| {
        t.rewrite(&mut |t| match t {
            Term::Apply(n, args) if (0..old.outs.len()).any(|k| old.component(k) == n) => {
                let k = (0..old.outs.len()).find(|&k| old.component(k) == n).unwrap();
                let mut full: Vec<Term> = new_hole.params.iter().map(|(p, _)| var(p.clone())).collect();
                full.extend(args);
                Term::Apply(new_hole.component(k), full)
            }
            t => t,
        })
    };
    for c in &mut out.clauses {
        c.hyp = rename(&c.hyp);
        c.concl = rename(&c.concl);
    }
    for k in 0..old.outs.len() {
        out.sig.syms.remove(&old.component(k));
        let mut args: Vec<Sort> = new_hole.params.iter().map(|(_, s)| *s).collect();
        args.extend(new_hole.args.iter().map(|(_, s)| *s));
        out.sig.function(new_hole.component(k), args, new_hole.outs[k]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{check, parse};

    fn subject(src: &str) -> (Program, TypeEnv) {
        let p = parse(src).unwrap();
        let env = check(&p).unwrap();
        (p, env)
    }

    #[test]
    fn uniformity_of_negation() {
        let (p, env) = subject("x ~ bern(1/2)\ny <- !x\nreturn y");
        let b = vc_uniform(&Subject { program: &p, env: &env }, &[VarId::new("y")], None).unwrap();
        assert_eq!(b.clauses.len(), 1);
        let main = b.clauses[0].formula().to_string();
        assert!(main.contains("(= x!2 cf!1(x!1))"), "{main}");
        assert!(main.contains("(= y!1 (not x!1))"), "{main}");
        assert_eq!(b.clauses[0].concl, iff(eq(var("y!1"), var("a")), eq(var("y!2"), var("a'"))));
    }

    #[test]
    fn independence_pads_left() {
        let (p, env) = subject("x ~ bern(1/2)\ny ~ bern(1/2)");
        let b = vc_independent(&Subject { program: &p, env: &env }, &VarId::new("x"), &VarId::new("y")).unwrap();
        assert_eq!(b.left_samples().len(), 4);
        assert_eq!(b.right_samples().len(), 4);
        assert_eq!(b.hole.outs.len(), 4);
    }

    #[test]
    fn fair_coin_loop_bundle_has_five_parts() {
        let (p, env) = subject("param p: real\nx <- false\ny <- false\nwhile x == y { x ~ bern(p)\n y ~ bern(p) }\nreturn x");
        let b = vc_uniform(&Subject { program: &p, env: &env }, &[VarId::new("x")], None).unwrap();
        let names: Vec<&str> = b.clauses.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["initiation", "consecution", "synchronization", "property"]);
        assert_eq!(b.inv.as_ref().unwrap().vars.len(), 6);
        let cons = b.clauses[1].formula().to_string();
        assert!(cons.contains("(= x!2!next cf!1(x!1!next, y!1!next))"), "{cons}");
    }

    #[test]
    fn reorder_adds_parameters() {
        let (p, env) = subject("x ~ bern(1/2)\nreturn x");
        let b = vc_uniform(&Subject { program: &p, env: &env }, &[VarId::new("x")], None).unwrap();
        let r = reorder_quantifiers(&b);
        assert!(r.clauses[0].formula().to_string().contains("cg!1(a, a', x!1)"));
        assert_eq!(r.sig.get("cg!1").unwrap().args.len(), 3);
        let c = vc_cond_independent(
            &Subject { program: &p, env: &env },
            &VarId::new("x"),
            &VarId::new("x"),
            &VarId::new("x"),
        )
        .unwrap();
        assert_eq!(reorder_quantifiers(&c).hole.params.len(), 3);
    }
}
