//! Loop invariants: a template family of atoms over both copies, pruned to
//! its largest inductive subset.

use std::collections::{BTreeMap, BTreeSet};

use super::SynthError;
use crate::lang::VarId;
use crate::smt::{Model, Solver, Validity};
use crate::vcgen::enc::{post_sym, sym, term};
use crate::vcgen::formula::{and, app, eq, eval, eq_vec, implies, int, not, var, Op, Sort, Term};
use crate::vcgen::{image, instantiate, PmfMode, VcBundle};
use crate::semantics::Value;

/// The template atoms for a loop bundle, in a fixed order.
pub fn atom_pool(b: &VcBundle) -> Vec<Term> {
    let Some(inv) = &b.inv else { return Vec::new() };
    let sort = |v: &VarId| Sort::of(&b.env[v]);
    let is_left = |v: &VarId| v.tag.is_some_and(|t| !b.tag_map.contains_key(&t));
    let left: Vec<&VarId> = inv.vars.iter().filter(|v| is_left(v)).collect();
    let right: Vec<&VarId> = inv.vars.iter().filter(|v| !is_left(v)).collect();
    let mirror = |r: &VarId| -> Option<VarId> { r.tag.and_then(|t| b.tag_map.get(&t)).map(|t| r.with_tag(*t)) };
    let input = |v: &VarId| b.inputs.contains(v);
    let v = |x: &VarId| var(sym(x));

    let mut base = Vec::new();
    let mut inputs = Vec::new();
    for r in &right {
        if let Some(l) = mirror(r) {
            if left.contains(&&l) && sort(&l) == sort(r) {
                if input(r) {
                    inputs.push(eq(v(&l), v(r)));
                } else {
                    base.push(eq(v(&l), v(r)));
                    if sort(r) == Sort::Bool {
                        base.push(eq(v(&l), not(v(r))));
                    }
                }
            }
        }
    }
    for l in left.iter().filter(|x| !input(x)) {
        for r in right.iter().filter(|x| !input(x)) {
            if mirror(r).as_ref() != Some(*l) && sort(l) == sort(r) {
                base.push(eq(v(l), v(r)));
                if sort(l) == Sort::Bool {
                    base.push(eq(v(l), not(v(r))));
                }
            }
        }
    }
    let mut lits = Vec::new();
    for x in left.iter().chain(&right).filter(|x| !input(x) && sort(x) == Sort::Bool) {
        lits.push(v(x));
        lits.push(not(v(x)));
    }
    // a + b = a' + b' over the mirrored integer state
    let ints: Vec<&VarId> = left.iter().copied().filter(|x| !input(x) && sort(x) != Sort::Bool).collect();
    let mut linear = Vec::new();
    for (i, a) in ints.iter().enumerate() {
        for c in &ints[i + 1..] {
            let ra = right.iter().find(|r| mirror(r).as_ref() == Some(*a));
            let rc = right.iter().find(|r| mirror(r).as_ref() == Some(*c));
            if let (Some(ra), Some(rc)) = (ra, rc) {
                linear.push(eq(app(Op::Add, vec![v(a), v(c)]), app(Op::Add, vec![v(ra), v(rc)])));
            }
        }
    }
    let mut counters = Vec::new();
    let mut at_start = Vec::new();
    for h in [&b.left, &b.right] {
        if let Some(c) = h.lp.as_ref().and_then(|l| l.counter.as_ref()) {
            if let (Ok(lo), Ok(hi)) = (term(&c.lo), term(&c.hi)) {
                let i = var(sym(&c.var));
                counters.push(app(Op::Ge, vec![i.clone(), lo.clone()]));
                counters.push(app(Op::Le, vec![i.clone(), app(Op::Add, vec![hi, int(1)])]));
                at_start.push(eq(i, lo));
            }
        }
    }
    let mut guard_eq = Vec::new();
    if let (Some(l), Some(r)) = (&b.left.lp, &b.right.lp) {
        if let (Ok(gl), Ok(gr)) = (term(&l.guard), term(&r.guard)) {
            guard_eq.push(eq(gl, gr));
        }
    }

    let mut guards: Vec<Term> = left
        .iter()
        .filter(|x| !input(x) && sort(x) == Sort::Bool)
        .flat_map(|x| [v(x), not(v(x))])
        .collect();
    if let Some(s) = at_start.first() {
        guards.push(s.clone());
        guards.push(not(s.clone()));
    }
    let body: Vec<Term> = base.iter().chain(&lits).cloned().collect();
    let mut guarded = Vec::new();
    for g in &guards {
        for a in &body {
            if a != g && *a != not(g.clone()) {
                guarded.push(implies(g.clone(), a.clone()));
            }
        }
    }

    let mut out: Vec<Term> = Vec::new();
    let mut seen = BTreeSet::new();
    for t in inputs.into_iter().chain(guard_eq).chain(base).chain(lits).chain(counters).chain(at_start).chain(linear).chain(guarded) {
        if !matches!(t, Term::Bool(_)) && seen.insert(t.clone()) {
            out.push(t);
        }
    }
    out
}

/// `rhs = f(lhs)` over the pre-state copies of the loop samples.
pub fn coupling_atom(b: &VcBundle, cand: &[Term]) -> Term {
    let xs: Vec<Term> = b.left_samples().vars.iter().map(|v| var(sym(v))).collect();
    let ys: Vec<Term> = b.right_samples().vars.iter().map(|v| var(sym(v))).collect();
    eq_vec(&ys, &image(b, cand, &xs))
}

fn post(b: &VcBundle, t: &Term) -> Term {
    let Some(inv) = &b.inv else { return t.clone() };
    let m: BTreeMap<String, Term> = inv
        .vars
        .iter()
        .filter(|v| !b.inputs.contains(*v))
        .map(|v| (sym(v), var(post_sym(v))))
        .collect();
    t.subst(&m)
}

fn falsified(t: &Term, m: &Model) -> bool {
    eval(t, m) == Some(Value::Bool(false))
}

/// Largest subset of `atoms` that holds initially and is preserved by the
/// coupled loop body. `None` when a counterexample falsifies no atom or the
/// solver gives up.
pub fn houdini(
    b: &VcBundle,
    cand: &[Term],
    atoms: Vec<Term>,
    mode: PmfMode,
    solver: &Solver,
    queries: &mut usize,
) -> Result<Option<Vec<Term>>, SynthError> {
    let mut cur = atoms;
    for (clause, at_post) in [("initiation", false), ("consecution", true)] {
        loop {
            let mut q = instantiate(b, cand, Some(&and(cur.clone())), mode)?;
            q.goals.retain(|g| g.name == clause);
            let get: Vec<String> = q.sig.syms.iter().filter(|(_, s)| s.args.is_empty()).map(|(n, _)| n.clone()).collect();
            *queries += 1;
            match solver.valid(&q, &get)? {
                Validity::Valid => break,
                Validity::Unknown(_) | Validity::Timeout => return Ok(None),
                Validity::Invalid(m) => {
                    let before = cur.len();
                    cur.retain(|a| !falsified(&if at_post { post(b, a) } else { a.clone() }, &m));
                    if cur.len() == before {
                        return Ok(None);
                    }
                }
            }
        }
    }
    Ok(Some(cur))
}

/// Renders an invariant with copy tags as `x!1`.
pub fn show_invariant(atoms: &[Term]) -> String {
    if atoms.is_empty() {
        return "true".into();
    }
    atoms.iter().map(Term::to_string).collect::<Vec<_>>().join(" && ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{check, parse};
    use crate::vcgen::{reorder_quantifiers, vc_uniform, Subject};

    #[test]
    fn coin_pool_contains_cross_equalities() {
        let p = parse("param p: real\nx <- false\ny <- false\nwhile x == y { x ~ bern(p)\n y ~ bern(p) }\nreturn x").unwrap();
        let env = check(&p).unwrap();
        let b = reorder_quantifiers(&vc_uniform(&Subject { program: &p, env: &env }, &[VarId::new("x")], None).unwrap());
        let pool = atom_pool(&b);
        assert_eq!(pool[0], eq(var("p!1"), var("p!2")));
        assert!(pool.contains(&eq(var("x!1"), var("y!2"))));
        assert!(pool.contains(&eq(app(Op::Eq, vec![var("x!1"), var("y!1")]), app(Op::Eq, vec![var("x!2"), var("y!2")]))));
    }
}
