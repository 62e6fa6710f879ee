//! Candidate coupling functions and their size-ordered enumeration.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::semantics::Value;
use crate::vcgen::formula::{eval, ite, not, var, Signature, Sort, Term};
use crate::vcgen::Hole;

/// A coupling function over the hole's formal arguments `%0, %1, ..`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Candidate {
    Base,
    /// Exchanges outputs `i` and `j` (`i < j`) of the inner function.
    Swap(usize, usize, Box<Candidate>),
    /// Negates Boolean output `i` of the inner function.
    Neg(usize, Box<Candidate>),
    /// `ite(conds[c], f1, f2)`.
    Cond(usize, Box<Candidate>, Box<Candidate>),
    /// `consts[k]`.
    Const(usize),
}

impl Candidate {
    pub fn size(&self) -> usize {
        match self {
            Candidate::Base | Candidate::Const(_) => 1,
            Candidate::Swap(_, _, f) | Candidate::Neg(_, f) => 1 + f.size(),
            Candidate::Cond(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Candidate::Base | Candidate::Const(_) => 1,
            Candidate::Swap(_, _, f) | Candidate::Neg(_, f) => 1 + f.depth(),
            Candidate::Cond(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn is_chain(&self) -> bool {
        match self {
            Candidate::Base => true,
            Candidate::Swap(_, _, f) | Candidate::Neg(_, f) => f.is_chain(),
            _ => false,
        }
    }

    fn is_leaf(&self) -> bool {
        matches!(self, Candidate::Base | Candidate::Const(_))
    }

    /// Output components as terms over `%k`, parameters and context.
    pub fn terms(&self, space: &Space) -> Vec<Term> {
        match self {
            Candidate::Base => (0..space.sorts.len()).map(|k| var(Hole::formal(k))).collect(),
            Candidate::Swap(i, j, f) => {
                let mut t = f.terms(space);
                t.swap(*i, *j);
                t
            }
            Candidate::Neg(i, f) => {
                let mut t = f.terms(space);
                t[*i] = not(t[*i].clone());
                t
            }
            Candidate::Cond(c, a, b) => {
                let c = &space.conds[*c];
                a.terms(space).into_iter().zip(b.terms(space)).map(|(x, y)| ite(c.clone(), x, y)).collect()
            }
            Candidate::Const(k) => space.consts[*k].clone(),
        }
    }

    /// Textual form with 1-based positions, e.g. `swap(1,2)`.
    pub fn show(&self, space: &Space) -> String {
        let mut s = String::new();
        self.write(space, &mut s);
        s
    }

    fn write(&self, space: &Space, s: &mut String) {
        match self {
            Candidate::Base => s.push_str("id"),
            Candidate::Swap(i, j, f) => {
                let _ = write!(s, "swap({},{})", i + 1, j + 1);
                if **f != Candidate::Base {
                    s.push_str(" . ");
                    f.write(space, s);
                }
            }
            Candidate::Neg(i, f) => {
                let _ = write!(s, "neg({})", i + 1);
                if **f != Candidate::Base {
                    s.push_str(" . ");
                    f.write(space, s);
                }
            }
            Candidate::Cond(c, a, b) => {
                let _ = write!(s, "if {} then ", space.cond_text[*c]);
                a.write(space, s);
                s.push_str(" else (");
                b.write(space, s);
                s.push(')');
            }
            Candidate::Const(k) => {
                let _ = write!(s, "const {}", space.const_text[*k]);
            }
        }
    }
}

/// The grammar's parameters: the hole's argument sorts, the conditions and
/// the constant tuples, plus what semantic deduplication needs to know about
/// the free symbols they mention.
#[derive(Clone, Debug, Default)]
pub struct Space {
    pub sorts: Vec<Sort>,
    pub conds: Vec<Term>,
    pub cond_text: Vec<String>,
    pub consts: Vec<Vec<Term>>,
    pub const_text: Vec<String>,
    /// Sorts of symbols other than `%k` used in conds and consts.
    pub sig: Signature,
    /// Finite value sets for symbols (the `%k` included) that have one.
    pub domains: BTreeMap<String, Vec<Value>>,
    /// Facts the symbols satisfy (e.g. `a != a'`); points violating them
    /// are ignored when comparing candidates.
    pub facts: Vec<Term>,
}

impl Space {
    pub fn plain(sorts: Vec<Sort>) -> Space {
        Space { sorts, ..Space::default() }
    }

    pub fn add_cond(&mut self, t: Term, text: impl Into<String>) {
        if !self.conds.contains(&t) {
            self.conds.push(t);
            self.cond_text.push(text.into());
        }
    }

    pub fn add_const(&mut self, ts: Vec<Term>, text: impl Into<String>) {
        if ts.len() == self.sorts.len() && !self.consts.contains(&ts) {
            self.consts.push(ts);
            self.const_text.push(text.into());
        }
    }
}

const MAX_POINTS: usize = 4096;

fn default_values(s: Sort) -> Vec<Value> {
    let r = |n: i64, d: i64| Value::num(BigRational::new(BigInt::from(n), BigInt::from(d)));
    match s {
        Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Sort::Int => (-1..=2).map(Value::int).collect(),
        Sort::Real => vec![r(0, 1), r(1, 3), r(1, 2), r(1, 1)],
    }
}

/// Assignments used to tell candidates apart.
fn points(space: &Space) -> Vec<BTreeMap<String, Value>> {
    let mut syms: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for (k, s) in space.sorts.iter().enumerate() {
        let n = Hole::formal(k);
        let vals = space.domains.get(&n).cloned().unwrap_or_else(|| default_values(*s));
        syms.insert(n, vals);
    }
    let mut mentioned = BTreeSet::new();
    for t in space.conds.iter().chain(space.consts.iter().flatten()) {
        mentioned.extend(t.free_vars());
    }
    for n in mentioned {
        if syms.contains_key(&n) {
            continue;
        }
        let vals = match space.domains.get(&n) {
            Some(v) => v.clone(),
            None => default_values(space.sig.get(&n).map(|s| s.ret).unwrap_or(Sort::Int)),
        };
        syms.insert(n, vals);
    }
    let names: Vec<&String> = syms.keys().collect();
    let total: usize = syms.values().map(Vec::len).fold(1usize, |a, b| a.saturating_mul(b.max(1)));
    let stride = total.div_ceil(MAX_POINTS).max(1);
    let mut out = Vec::new();
    let mut idx = 0usize;
    while idx < total {
        let mut m = BTreeMap::new();
        let mut rest = idx;
        for n in &names {
            let vals = &syms[*n];
            m.insert((*n).clone(), vals[rest % vals.len()].clone());
            rest /= vals.len();
        }
        if space.facts.iter().all(|f| eval(f, &m) != Some(Value::Bool(false))) {
            out.push(m);
        }
        // odd strides keep mixed-radix digits varying
        idx += if stride > 1 { stride | 1 } else { 1 };
    }
    out
}

/// Deterministic stream of candidates by size; within a size by rule
/// (`Base < Swap < Neg < Cond < Const`), then by positions and sub-candidate
/// order. Candidates equal on every comparison point to an earlier one are
/// skipped. `Swap` and `Neg` apply to permutation chains only, and the
/// then-branch of `Cond` is `Base` or a `Const`.
pub struct Enumerator {
    space: Space,
    points: Vec<BTreeMap<String, Value>>,
    levels: Vec<Vec<Candidate>>,
    seen: HashSet<Vec<Option<Value>>>,
    pending: std::vec::IntoIter<Candidate>,
    max_size: usize,
}

impl Enumerator {
    pub fn new(space: Space, max_size: usize) -> Enumerator {
        let points = points(&space);
        Enumerator {
            space,
            points,
            levels: vec![Vec::new()],
            seen: HashSet::new(),
            pending: Vec::new().into_iter(),
            max_size,
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    fn key(&self, c: &Candidate) -> Vec<Option<Value>> {
        let ts = c.terms(&self.space);
        let mut k = Vec::with_capacity(self.points.len() * ts.len());
        for p in &self.points {
            for t in &ts {
                k.push(eval(t, p));
            }
        }
        k
    }

    fn level(&mut self, size: usize) -> Vec<Candidate> {
        let n = self.space.sorts.len();
        let mut raw = Vec::new();
        if size == 1 {
            raw.push(Candidate::Base);
        }
        if size >= 2 {
            let chains: Vec<Candidate> = self.levels[size - 1].iter().filter(|c| c.is_chain()).cloned().collect();
            for i in 0..n {
                for j in i + 1..n {
                    if self.space.sorts[i] == self.space.sorts[j] {
                        for f in &chains {
                            raw.push(Candidate::Swap(i, j, Box::new(f.clone())));
                        }
                    }
                }
            }
            for i in 0..n {
                if self.space.sorts[i] == Sort::Bool {
                    for f in &chains {
                        raw.push(Candidate::Neg(i, Box::new(f.clone())));
                    }
                }
            }
        }
        if size >= 3 {
            let leaves: Vec<Candidate> = self.levels[1].iter().filter(|c| c.is_leaf()).cloned().collect();
            for c in 0..self.space.conds.len() {
                for a in &leaves {
                    for b in &self.levels[size - 2] {
                        raw.push(Candidate::Cond(c, Box::new(a.clone()), Box::new(b.clone())));
                    }
                }
            }
        }
        if size == 1 {
            raw.extend((0..self.space.consts.len()).map(Candidate::Const));
        }
        let mut out = Vec::new();
        for c in raw {
            let k = self.key(&c);
            if self.seen.insert(k) {
                out.push(c);
            }
        }
        out
    }
}

impl Iterator for Enumerator {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        loop {
            if let Some(c) = self.pending.next() {
                return Some(c);
            }
            let size = self.levels.len();
            if size > self.max_size {
                return None;
            }
            let lvl = self.level(size);
            self.levels.push(lvl.clone());
            self.pending = lvl.into_iter();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vcgen::formula::eq;

    #[test]
    fn identity_first_swap_second() {
        let e: Vec<Candidate> = Enumerator::new(Space::plain(vec![Sort::Bool; 2]), 4).collect();
        assert_eq!(e[0], Candidate::Base);
        assert_eq!(e[1], Candidate::Swap(0, 1, Box::new(Candidate::Base)));
    }

    #[test]
    fn arity_two_size_two_count() {
        let n = Enumerator::new(Space::plain(vec![Sort::Bool; 2]), 2).count();
        assert_eq!(n, 4);
    }

    #[test]
    fn bool_pairs_form_the_hyperoctahedral_group() {
        // permutations and negations of two Booleans: 2! * 2^2 maps
        let n = Enumerator::new(Space::plain(vec![Sort::Bool; 2]), 8).count();
        assert_eq!(n, 8);
    }

    #[test]
    fn transposition_is_reachable() {
        let mut s = Space::plain(vec![Sort::Bool; 2]);
        let (a, b) = (vec![var("a.1"), var("a.2")], vec![var("a'.1"), var("a'.2")]);
        let v = [var("%0"), var("%1")];
        let is = |t: &[Term]| crate::vcgen::formula::eq_vec(&v, t);
        s.add_cond(is(&a), "v = a");
        s.add_cond(is(&b), "v = a'");
        s.add_const(a, "a");
        s.add_const(b, "a'");
        for n in ["a.1", "a.2", "a'.1", "a'.2"] {
            s.sig.constant(n, Sort::Bool);
        }
        s.facts.push(not(eq(var("a.1"), var("a'.1"))));
        let want = Candidate::Cond(
            0,
            Box::new(Candidate::Const(1)),
            Box::new(Candidate::Cond(1, Box::new(Candidate::Const(0)), Box::new(Candidate::Base))),
        );
        let found: Vec<Candidate> = Enumerator::new(s.clone(), 5).collect();
        let idx = found.iter().position(|c| *c == want).expect("transposition enumerated");
        assert!(idx < 200, "{idx}");
        assert_eq!(want.show(&s), "if v = a then const a' else (if v = a' then const a else (id))");
        assert_eq!(want.depth(), 3);
    }
}
