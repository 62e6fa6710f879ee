//! Conditions and constants offered to the candidate grammar by a bundle.

use std::collections::{BTreeMap, BTreeSet};

use super::candidate::Space;
use crate::lang::{DistExpr, Stmt, StmtKind, Type, VarId};
use crate::semantics::Value;
use crate::vcgen::bundle::loop_state;
use crate::vcgen::enc::{sym, term};
use crate::vcgen::formula::{var, Op, Sort, Term};
use crate::vcgen::{Hole, VcBundle};

const MAX_DOMAIN: i64 = 16;

fn conditions(body: &[Stmt], out: &mut Vec<crate::lang::Expr>) {
    for s in body {
        if let StmtKind::If(c, a, b) = &s.kind {
            out.push(c.clone());
            conditions(a, out);
            conditions(b, out);
        }
    }
}

fn range_values(lo: i64, hi: i64) -> Option<Vec<Value>> {
    (hi - lo < MAX_DOMAIN).then(|| (lo..=hi).map(Value::int).collect())
}

fn dist_values(d: &DistExpr) -> Option<Vec<Value>> {
    match d.result_types().first()? {
        Type::Range(lo, hi) => range_values(*lo, *hi),
        _ => None,
    }
}

/// Parameter groups (`a`, `a'`, ..) in declaration order.
fn param_groups(b: &VcBundle) -> Vec<(String, Vec<Term>)> {
    let mut groups: Vec<(String, Vec<Term>)> = Vec::new();
    for (p, _) in &b.params {
        let g = p.split('.').next().unwrap_or(p).to_string();
        match groups.iter_mut().find(|(n, _)| *n == g) {
            Some((_, ts)) => ts.push(var(p.clone())),
            None => groups.push((g, vec![var(p.clone())])),
        }
    }
    groups
}

struct Mapper {
    rename: BTreeMap<String, Term>,
    allowed: BTreeSet<String>,
    display: BTreeMap<String, Term>,
}

impl Mapper {
    fn map(&self, t: &Term) -> Option<Term> {
        let t = t.subst(&self.rename);
        t.free_vars().iter().all(|v| self.allowed.contains(v)).then_some(t)
    }

    fn show(&self, t: &Term) -> String {
        t.subst(&self.display).to_string()
    }
}

/// The grammar parameters for `b`: property events and program predicates
/// as conditions, parameter tuples as constants.
pub fn space_for(b: &VcBundle) -> Space {
    let lsv = b.left_samples().clone();
    let mut space = Space::plain(b.hole.args.iter().map(|(_, s)| *s).collect());
    let mut m = Mapper { rename: BTreeMap::new(), allowed: BTreeSet::new(), display: BTreeMap::new() };
    let mut left_vars: Vec<VarId> = if b.has_loop() { loop_state(&b.left) } else { b.left.decls.input_vars() };
    left_vars.retain(|v| !lsv.vars.contains(v));
    for v in &left_vars {
        m.allowed.insert(sym(v));
        m.display.insert(sym(v), var(v.untagged().to_string()));
    }
    for (k, v) in lsv.vars.iter().enumerate() {
        m.rename.insert(sym(v), var(Hole::formal(k)));
        m.allowed.insert(Hole::formal(k));
        m.display.insert(Hole::formal(k), var(v.untagged().to_string()));
    }
    // right-copy symbols read as the left copy they mirror
    for v in b.env.keys() {
        if let Some(t) = v.tag.and_then(|t| b.tag_map.get(&t)) {
            let l = v.with_tag(*t);
            let target = match lsv.vars.iter().position(|x| *x == l) {
                Some(k) => var(Hole::formal(k)),
                None => var(sym(&l)),
            };
            m.rename.insert(sym(v), target);
        }
    }
    for (p, s) in &b.params {
        m.allowed.insert(p.clone());
        space.sig.constant(p.clone(), *s);
    }
    for v in &left_vars {
        if let Some(t) = b.env.get(v) {
            space.sig.constant(sym(v), Sort::of(t));
            if let Type::Range(lo, hi) = t {
                if let Some(vals) = range_values(*lo, *hi) {
                    space.domains.insert(sym(v), vals);
                }
            }
        }
    }
    for (k, d) in lsv.dists.iter().enumerate() {
        if let Some(vals) = dist_values(d) {
            space.domains.insert(Hole::formal(k), vals);
        }
    }

    // property events, whole and by parameter-free conjunct
    let (l, r) = &b.events;
    let mut events = Vec::new();
    for e in [l, r] {
        if let Some(t) = m.map(e) {
            events.push(t);
        }
    }
    let params: BTreeSet<String> = b.params.iter().map(|(p, _)| p.clone()).collect();
    let mut parts = Vec::new();
    for e in &events {
        let cs = match e {
            Term::App(Op::And, cs) => cs.clone(),
            _ => Vec::new(),
        };
        for c in cs {
            if c.free_vars().is_disjoint(&params) {
                parts.push(c);
            }
        }
    }
    for t in events.into_iter().chain(parts) {
        if !matches!(t, Term::Bool(_)) {
            let text = m.show(&t);
            space.add_cond(t, text);
        }
    }

    // program predicates of the left side
    let mut preds = Vec::new();
    match &b.left.lp {
        Some(lp) => {
            preds.push(lp.guard.clone());
            conditions(&lp.body, &mut preds);
        }
        None => {
            conditions(&b.left.prefix, &mut preds);
            conditions(&b.left.suffix, &mut preds);
        }
    }
    for p in preds {
        if let Some(t) = term(&p).ok().and_then(|t| m.map(&t)) {
            if !matches!(t, Term::Bool(_)) {
                let text = m.show(&t);
                space.add_cond(t, text);
            }
        }
    }

    // parameter tuples as constants
    for (name, ts) in param_groups(b) {
        let sorts: Vec<Sort> = ts.iter().filter_map(|t| space.sig.sort_of(t)).collect();
        if sorts == space.sorts {
            space.add_const(ts, name);
        }
    }
    space.facts = b.param_axioms.clone();
    space
}
