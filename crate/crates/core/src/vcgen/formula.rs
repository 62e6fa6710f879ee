//! First-order terms shared by the VC generator and the SMT backend.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::lang::Type;
use crate::semantics::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Int,
    Real,
}

impl Sort {
    pub fn of(t: &Type) -> Sort {
        match t {
            Type::Bool => Sort::Bool,
            Type::Int | Type::Range(..) => Sort::Int,
            Type::Real => Sort::Real,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Bool => "Bool",
            Sort::Int => "Int",
            Sort::Real => "Real",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Not,
    And,
    Or,
    Implies,
    /// Equality on any sort (iff on Bool).
    Eq,
    Distinct,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Neg,
    Ite,
}

impl Op {
    pub fn smt(self) -> &'static str {
        match self {
            Op::Not => "not",
            Op::And => "and",
            Op::Or => "or",
            Op::Implies => "=>",
            Op::Eq => "=",
            Op::Distinct => "distinct",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Neg => "-",
            Op::Ite => "ite",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    /// A constant symbol (a program variable, parameter, or bound variable).
    Var(String),
    App(Op, Vec<Term>),
    /// Application of an uninterpreted function, hole, or relation.
    Apply(String, Vec<Term>),
    Forall(Vec<(String, Sort)>, Box<Term>),
    Exists(Vec<(String, Sort)>, Box<Term>),
}

/// Declared type of an uninterpreted symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunSig {
    pub args: Vec<Sort>,
    pub ret: Sort,
}

/// Free symbols with their sorts; constants have no arguments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub syms: BTreeMap<String, FunSig>,
}

impl Signature {
    pub fn constant(&mut self, name: impl Into<String>, s: Sort) {
        self.syms.insert(name.into(), FunSig { args: Vec::new(), ret: s });
    }

    pub fn function(&mut self, name: impl Into<String>, args: Vec<Sort>, ret: Sort) {
        self.syms.insert(name.into(), FunSig { args, ret });
    }

    pub fn get(&self, name: &str) -> Option<&FunSig> {
        self.syms.get(name)
    }

    pub fn merge(&mut self, other: &Signature) {
        for (k, v) in &other.syms {
            self.syms.insert(k.clone(), v.clone());
        }
    }

    /// Sort of a well-formed term; `bound` holds quantified variables.
    pub fn sort_of(&self, t: &Term) -> Option<Sort> {
        self.sort_in(t, &BTreeMap::new())
    }

    fn sort_in(&self, t: &Term, bound: &BTreeMap<String, Sort>) -> Option<Sort> {
        match t {
            Term::Bool(_) => Some(Sort::Bool),
            Term::Int(_) => Some(Sort::Int),
            Term::Real(_) => Some(Sort::Real),
            Term::Var(v) => bound.get(v).copied().or_else(|| self.get(v).map(|s| s.ret)),
            Term::Apply(f, _) => self.get(f).map(|s| s.ret),
            Term::App(op, args) => match op {
                Op::Add | Op::Sub | Op::Mul | Op::Neg => {
                    let mut s = Sort::Int;
                    for a in args {
                        if self.sort_in(a, bound)? == Sort::Real {
                            s = Sort::Real;
                        }
                    }
                    Some(s)
                }
                Op::Ite => {
                    let a = self.sort_in(&args[1], bound)?;
                    let b = self.sort_in(&args[2], bound)?;
                    Some(if a == b { a } else { Sort::Real })
                }
                _ => Some(Sort::Bool),
            },
            Term::Forall(vs, _) | Term::Exists(vs, _) => {
                let _ = vs;
                Some(Sort::Bool)
            }
        }
    }
}

pub fn var(name: impl Into<String>) -> Term {
    Term::Var(name.into())
}

pub fn int(v: i64) -> Term {
    Term::Int(BigInt::from(v))
}

pub fn real(r: BigRational) -> Term {
    Term::Real(r)
}

pub fn not(t: Term) -> Term {
    match t {
        Term::Bool(b) => Term::Bool(!b),
        Term::App(Op::Not, mut a) => a.pop().unwrap(),
        t => Term::App(Op::Not, vec![t]),
    }
}

/// Conjunction with constant folding and flattening.
pub fn and(ts: Vec<Term>) -> Term {
    let mut out = Vec::new();
    for t in ts {
        match t {
            Term::Bool(true) => {}
            Term::Bool(false) => return Term::Bool(false),
            Term::App(Op::And, inner) => out.extend(inner),
            t => out.push(t),
        }
    }
    match out.len() {
        0 => Term::Bool(true),
        1 => out.pop().unwrap(),
        _ => Term::App(Op::And, out),
    }
}

pub fn or(ts: Vec<Term>) -> Term {
    let mut out = Vec::new();
    for t in ts {
        match t {
            Term::Bool(false) => {}
            Term::Bool(true) => return Term::Bool(true),
            Term::App(Op::Or, inner) => out.extend(inner),
            t => out.push(t),
        }
    }
    match out.len() {
        0 => Term::Bool(false),
        1 => out.pop().unwrap(),
        _ => Term::App(Op::Or, out),
    }
}

pub fn implies(a: Term, b: Term) -> Term {
    match (&a, &b) {
        (Term::Bool(true), _) => b,
        (Term::Bool(false), _) | (_, Term::Bool(true)) => Term::Bool(true),
        _ => Term::App(Op::Implies, vec![a, b]),
    }
}

pub fn eq(a: Term, b: Term) -> Term {
    if a == b {
        return Term::Bool(true);
    }
    Term::App(Op::Eq, vec![a, b])
}

pub fn iff(a: Term, b: Term) -> Term {
    eq(a, b)
}

pub fn ite(c: Term, a: Term, b: Term) -> Term {
    match c {
        Term::Bool(true) => a,
        Term::Bool(false) => b,
        c if a == b => {
            let _ = c;
            a
        }
        c => Term::App(Op::Ite, vec![c, a, b]),
    }
}

pub fn app(op: Op, args: Vec<Term>) -> Term {
    Term::App(op, args)
}

pub fn apply(f: impl Into<String>, args: Vec<Term>) -> Term {
    Term::Apply(f.into(), args)
}

pub fn forall(vs: Vec<(String, Sort)>, body: Term) -> Term {
    if vs.is_empty() {
        body
    } else {
        Term::Forall(vs, Box::new(body))
    }
}

/// Product with folding of literal one factors.
pub fn mul(ts: Vec<Term>) -> Term {
    let ts: Vec<Term> = ts.into_iter().filter(|t| !is_one(t)).collect();
    if ts.iter().any(is_zero) {
        return real(BigRational::zero());
    }
    match ts.len() {
        0 => real(BigRational::one()),
        1 => ts.into_iter().next().unwrap(),
        _ => Term::App(Op::Mul, ts),
    }
}

fn is_one(t: &Term) -> bool {
    match t {
        Term::Int(n) => n.is_one(),
        Term::Real(r) => r.is_one(),
        _ => false,
    }
}

fn is_zero(t: &Term) -> bool {
    match t {
        Term::Int(n) => n.is_zero(),
        Term::Real(r) => r.is_zero(),
        _ => false,
    }
}

/// Pairwise equality of two equally long term vectors.
pub fn eq_vec(a: &[Term], b: &[Term]) -> Term {
    and(a.iter().zip(b).map(|(x, y)| eq(x.clone(), y.clone())).collect())
}

/// `op(args)` through the folding constructors.
pub fn mk(op: Op, mut args: Vec<Term>) -> Term {
    match (op, args.len()) {
        (Op::Not, 1) => not(args.pop().unwrap()),
        (Op::And, _) => and(args),
        (Op::Or, _) => or(args),
        (Op::Implies, 2) => {
            let b = args.pop().unwrap();
            implies(args.pop().unwrap(), b)
        }
        (Op::Eq, 2) => {
            let b = args.pop().unwrap();
            eq(args.pop().unwrap(), b)
        }
        (Op::Ite, 3) => {
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            ite(args.pop().unwrap(), a, b)
        }
        _ => Term::App(op, args),
    }
}

impl Term {
    /// Bottom-up rewrite.
    pub fn rewrite(&self, f: &mut impl FnMut(Term) -> Term) -> Term {
        let t = match self {
            Term::App(op, args) => mk(*op, args.iter().map(|a| a.rewrite(f)).collect()),
            Term::Apply(n, args) => Term::Apply(n.clone(), args.iter().map(|a| a.rewrite(f)).collect()),
            Term::Forall(vs, b) => Term::Forall(vs.clone(), Box::new(b.rewrite(f))),
            Term::Exists(vs, b) => Term::Exists(vs.clone(), Box::new(b.rewrite(f))),
            t => t.clone(),
        };
        f(t)
    }

    /// Replaces free constants named in `map`.
    pub fn subst(&self, map: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::App(op, args) => mk(*op, args.iter().map(|a| a.subst(map)).collect()),
            Term::Apply(n, args) => Term::Apply(n.clone(), args.iter().map(|a| a.subst(map)).collect()),
            Term::Forall(vs, b) | Term::Exists(vs, b) => {
                let mut inner = map.clone();
                for (v, _) in vs {
                    inner.remove(v);
                }
                let b = Box::new(b.subst(&inner));
                match self {
                    Term::Forall(..) => Term::Forall(vs.clone(), b),
                    _ => Term::Exists(vs.clone(), b),
                }
            }
            t => t.clone(),
        }
    }

    /// Replaces applications of `name` using `f(args)`.
    pub fn subst_apply(&self, name: &str, f: &dyn Fn(&[Term]) -> Term) -> Term {
        self.rewrite(&mut |t| match t {
            Term::Apply(n, args) if n == name => f(&args),
            t => t,
        })
    }

    /// Renames applied symbols.
    pub fn rename_apply(&self, f: &dyn Fn(&str) -> Option<String>) -> Term {
        self.rewrite(&mut |t| match t {
            Term::Apply(n, args) => match f(&n) {
                Some(m) => Term::Apply(m, args),
                None => Term::Apply(n, args),
            },
            t => t,
        })
    }

    /// Free constant symbols.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Term::App(_, args) | Term::Apply(_, args) => args.iter().for_each(|a| a.collect_free(bound, out)),
            Term::Forall(vs, b) | Term::Exists(vs, b) => {
                let n = bound.len();
                bound.extend(vs.iter().map(|(v, _)| v.clone()));
                b.collect_free(bound, out);
                bound.truncate(n);
            }
            _ => {}
        }
    }

    /// Names of applied function symbols.
    pub fn applied(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.rewrite(&mut |t| {
            if let Term::Apply(n, _) = &t {
                out.insert(n.clone());
            }
            t
        });
        out
    }

    pub fn is_ground(&self) -> bool {
        self.free_vars().is_empty() && self.applied().is_empty()
    }

    pub fn size(&self) -> usize {
        match self {
            Term::App(_, args) | Term::Apply(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            Term::Forall(_, b) | Term::Exists(_, b) => 1 + b.size(),
            _ => 1,
        }
    }
}

/// Interpretation of free symbols used by [`eval`].
pub trait Interp {
    fn constant(&self, name: &str) -> Option<Value>;
    fn function(&self, name: &str, args: &[Value]) -> Option<Value>;
}

impl Interp for BTreeMap<String, Value> {
    fn constant(&self, name: &str) -> Option<Value> {
        self.get(name).cloned()
    }

    fn function(&self, _: &str, _: &[Value]) -> Option<Value> {
        None
    }
}

fn num(v: &Value) -> Option<BigRational> {
    v.as_rational()
}

/// Evaluates a quantifier-free term. Returns `None` on an unknown symbol or
/// a sort error.
pub fn eval(t: &Term, m: &dyn Interp) -> Option<Value> {
    Some(match t {
        Term::Bool(b) => Value::Bool(*b),
        Term::Int(n) => Value::Int(n.clone()),
        Term::Real(r) => Value::num(r.clone()),
        Term::Var(v) => m.constant(v)?,
        Term::Apply(f, args) => {
            let vals = args.iter().map(|a| eval(a, m)).collect::<Option<Vec<_>>>()?;
            m.function(f, &vals)?
        }
        Term::Forall(..) | Term::Exists(..) => return None,
        Term::App(op, args) => {
            let b = |i: usize| eval(&args[i], m).and_then(|v| v.as_bool());
            match op {
                Op::Not => Value::Bool(!b(0)?),
                Op::And => {
                    for i in 0..args.len() {
                        if !b(i)? {
                            return Some(Value::Bool(false));
                        }
                    }
                    Value::Bool(true)
                }
                Op::Or => {
                    for i in 0..args.len() {
                        if b(i)? {
                            return Some(Value::Bool(true));
                        }
                    }
                    Value::Bool(false)
                }
                Op::Implies => Value::Bool(!b(0)? || b(1)?),
                Op::Ite => {
                    if b(0)? {
                        eval(&args[1], m)?
                    } else {
                        eval(&args[2], m)?
                    }
                }
                Op::Eq | Op::Distinct => {
                    let vals = args.iter().map(|a| eval(a, m)).collect::<Option<Vec<_>>>()?;
                    let all_eq = vals.windows(2).all(|w| w[0].same(&w[1]));
                    if *op == Op::Eq {
                        Value::Bool(all_eq)
                    } else {
                        let mut ok = true;
                        for i in 0..vals.len() {
                            for j in i + 1..vals.len() {
                                ok &= !vals[i].same(&vals[j]);
                            }
                        }
                        Value::Bool(ok)
                    }
                }
                Op::Lt | Op::Le | Op::Gt | Op::Ge => {
                    let x = num(&eval(&args[0], m)?)?;
                    let y = num(&eval(&args[1], m)?)?;
                    Value::Bool(match op {
                        Op::Lt => x < y,
                        Op::Le => x <= y,
                        Op::Gt => x > y,
                        _ => x >= y,
                    })
                }
                Op::Add | Op::Sub | Op::Mul | Op::Neg => {
                    let vals = args.iter().map(|a| eval(a, m).and_then(|v| num(&v))).collect::<Option<Vec<_>>>()?;
                    let r = match op {
                        Op::Add => vals.into_iter().fold(BigRational::zero(), |a, b| a + b),
                        Op::Mul => vals.into_iter().fold(BigRational::one(), |a, b| a * b),
                        Op::Neg => -vals[0].clone(),
                        _ => {
                            let mut it = vals.into_iter();
                            let first = it.next()?;
                            it.fold(first, |a, b| a - b)
                        }
                    };
                    Value::num(r)
                }
            }
        }
    })
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Bool(b) => write!(f, "{b}"),
            Term::Int(n) => write!(f, "{n}"),
            Term::Real(r) => write!(f, "{r}"),
            Term::Var(v) => write!(f, "{v}"),
            Term::App(op, args) => {
                write!(f, "({}", op.smt())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            Term::Apply(n, args) => {
                write!(f, "{n}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Term::Forall(vs, b) | Term::Exists(vs, b) => {
                let q = if matches!(self, Term::Forall(..)) { "forall" } else { "exists" };
                write!(f, "({q} (")?;
                for (v, s) in vs {
                    write!(f, "({v} {s})")?;
                }
                write!(f, ") {b})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smart_constructors_fold() {
        assert_eq!(and(vec![Term::Bool(true), var("x")]), var("x"));
        assert_eq!(or(vec![var("x"), Term::Bool(true)]), Term::Bool(true));
        assert_eq!(not(not(var("x"))), var("x"));
        assert_eq!(implies(Term::Bool(true), var("y")), var("y"));
        assert_eq!(eq(var("x"), var("x")), Term::Bool(true));
    }

    #[test]
    fn substitution_respects_binders() {
        let t = and(vec![var("x"), forall(vec![("x".into(), Sort::Bool)], var("x"))]);
        let m = BTreeMap::from([("x".to_string(), Term::Bool(true))]);
        let s = t.subst(&m);
        assert_eq!(s, forall(vec![("x".into(), Sort::Bool)], var("x")));
        assert_eq!(t.free_vars().len(), 1);
    }

    #[test]
    fn evaluation() {
        let m: BTreeMap<String, Value> =
            [("x".to_string(), Value::int(2)), ("b".to_string(), Value::Bool(true))].into_iter().collect();
        let t = ite(var("b"), app(Op::Add, vec![var("x"), int(1)]), int(0));
        assert_eq!(eval(&t, &m), Some(Value::int(3)));
        assert_eq!(eval(&app(Op::Le, vec![var("x"), int(1)]), &m), Some(Value::Bool(false)));
        assert_eq!(eval(&var("y"), &m), None);
    }
}
