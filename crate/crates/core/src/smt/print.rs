//! SMT-LIB 2 rendering of queries and terms.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::sexp::Sexp;
use crate::vcgen::formula::{FunSig, Op, Signature, Sort, Term};
use crate::vcgen::Query;

const SIMPLE_EXTRA: &str = "~!@$%^&*_-+=<>.?/";

/// `name` as an SMT-LIB symbol, quoted when it is not a simple symbol.
pub fn quote(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || SIMPLE_EXTRA.contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn int_lit(n: &BigInt) -> String {
    if n.is_negative() {
        format!("(- {})", -n)
    } else {
        n.to_string()
    }
}

fn real_lit(r: &BigRational) -> String {
    let body = if r.denom().is_one() {
        format!("{}.0", r.numer().abs())
    } else {
        format!("(/ {}.0 {}.0)", r.numer().abs(), r.denom())
    };
    if r.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

struct Printer<'a> {
    sig: &'a Signature,
    bound: Vec<BTreeMap<String, Sort>>,
}

impl Printer<'_> {
    fn sort(&self, t: &Term) -> Option<Sort> {
        match t {
            Term::Var(v) => {
                for scope in self.bound.iter().rev() {
                    if let Some(s) = scope.get(v) {
                        return Some(*s);
                    }
                }
                self.sig.get(v).map(|s| s.ret)
            }
            Term::App(Op::Ite, args) => {
                let (a, b) = (self.sort(&args[1]), self.sort(&args[2]));
                if a == Some(Sort::Real) || b == Some(Sort::Real) {
                    Some(Sort::Real)
                } else {
                    a.or(b)
                }
            }
            Term::App(Op::Add | Op::Sub | Op::Mul | Op::Neg, args) => {
                if args.iter().any(|a| self.sort(a) == Some(Sort::Real)) {
                    Some(Sort::Real)
                } else {
                    Some(Sort::Int)
                }
            }
            Term::App(..) | Term::Forall(..) | Term::Exists(..) | Term::Bool(_) => Some(Sort::Bool),
            Term::Int(_) => Some(Sort::Int),
            Term::Real(_) => Some(Sort::Real),
            Term::Apply(f, _) => self.sig.get(f).map(|s| s.ret),
        }
    }

    fn any_real(&self, ts: &[Term]) -> bool {
        ts.iter().any(|a| self.sort(a) == Some(Sort::Real))
    }

    fn print(&mut self, t: &Term, real: bool, out: &mut String) {
        match t {
            Term::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Term::Int(n) if real => out.push_str(&real_lit(&BigRational::from_integer(n.clone()))),
            Term::Int(n) => out.push_str(&int_lit(n)),
            Term::Real(r) => out.push_str(&real_lit(r)),
            Term::Var(_) | Term::Apply(..) if real && self.sort(t) == Some(Sort::Int) => {
                out.push_str("(to_real ");
                self.print(t, false, out);
                out.push(')');
            }
            Term::Var(v) => out.push_str(&quote(v)),
            Term::Apply(f, args) => {
                let sig = self.sig.get(f).cloned();
                out.push('(');
                out.push_str(&quote(f));
                for (i, a) in args.iter().enumerate() {
                    out.push(' ');
                    let want = sig.as_ref().and_then(|s| s.args.get(i)) == Some(&Sort::Real);
                    self.print(a, want, out);
                }
                out.push(')');
            }
            Term::App(op, args) => {
                let coerce = match op {
                    Op::Add | Op::Sub | Op::Mul | Op::Neg => real || self.any_real(args),
                    Op::Eq | Op::Distinct | Op::Lt | Op::Le | Op::Gt | Op::Ge => self.any_real(args),
                    _ => false,
                };
                out.push('(');
                out.push_str(op.smt());
                for (i, a) in args.iter().enumerate() {
                    out.push(' ');
                    let want = match op {
                        Op::Ite if i == 0 => false,
                        Op::Ite => real || self.any_real(&args[1..]),
                        _ => coerce,
                    };
                    self.print(a, want, out);
                }
                out.push(')');
            }
            Term::Forall(vs, b) | Term::Exists(vs, b) => {
                out.push_str(if matches!(t, Term::Forall(..)) { "(forall (" } else { "(exists (" });
                for (v, s) in vs {
                    out.push_str(&format!("({} {s})", quote(v)));
                }
                out.push_str(") ");
                self.bound.push(vs.iter().cloned().collect());
                self.print(b, false, out);
                self.bound.pop();
                out.push(')');
            }
        }
    }
}

/// Renders a term; integer subterms in real contexts are converted.
pub fn term_smt(t: &Term, sig: &Signature) -> String {
    let mut out = String::new();
    Printer { sig, bound: Vec::new() }.print(t, false, &mut out);
    out
}

fn declare(name: &str, s: &FunSig) -> String {
    let args: Vec<String> = s.args.iter().map(Sort::to_string).collect();
    format!("(declare-fun {} ({}) {})", quote(name), args.join(" "), s.ret)
}

fn nonlinear(t: &Term) -> bool {
    match t {
        Term::App(Op::Mul, args) => {
            args.iter().filter(|a| !matches!(a, Term::Int(_) | Term::Real(_))).count() > 1 || args.iter().any(nonlinear)
        }
        Term::App(_, args) | Term::Apply(_, args) => args.iter().any(nonlinear),
        Term::Forall(_, b) | Term::Exists(_, b) => nonlinear(b),
        _ => false,
    }
}

fn quantified(t: &Term) -> bool {
    match t {
        Term::Forall(..) | Term::Exists(..) => true,
        Term::App(_, args) | Term::Apply(_, args) => args.iter().any(quantified),
        _ => false,
    }
}

fn literal_sorts(t: &Term, int: &mut bool, real: &mut bool) {
    match t {
        Term::Int(_) => *int = true,
        Term::Real(_) => *real = true,
        Term::App(op, args) => {
            if matches!(op, Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::Add | Op::Sub | Op::Mul | Op::Neg) {
                *int = true;
            }
            args.iter().for_each(|a| literal_sorts(a, int, real))
        }
        Term::Apply(_, args) => args.iter().for_each(|a| literal_sorts(a, int, real)),
        Term::Forall(vs, b) | Term::Exists(vs, b) => {
            for (_, s) in vs {
                *int |= *s == Sort::Int;
                *real |= *s == Sort::Real;
            }
            literal_sorts(b, int, real)
        }
        _ => {}
    }
}

/// The smallest standard logic covering `t` over `sig`.
pub fn logic(t: &Term, sig: &Signature) -> String {
    let used = t.free_vars().into_iter().chain(t.applied());
    let (mut int, mut real, mut uf) = (false, false, false);
    for name in used {
        if let Some(s) = sig.get(&name) {
            uf |= !s.args.is_empty();
            for x in s.args.iter().chain([&s.ret]) {
                int |= *x == Sort::Int;
                real |= *x == Sort::Real;
            }
        }
    }
    let (mut li, mut lr) = (false, false);
    literal_sorts(t, &mut li, &mut lr);
    real |= lr;
    // a bare comparison of literals still needs some arithmetic
    int |= li && !real;
    let mut name = String::new();
    if !quantified(t) {
        name.push_str("QF_");
    }
    if uf || (!int && !real) {
        name.push_str("UF");
    }
    if int || real {
        name.push(if nonlinear(t) { 'N' } else { 'L' });
        name.push_str(match (int, real) {
            (true, true) => "IRA",
            (true, false) => "IA",
            _ => "RA",
        });
    }
    name
}

/// A satisfiability script for `not(q)`; `get` names constants whose
/// values are requested on `sat`.
pub fn validity_script(q: &Query, get: &[String]) -> String {
    let f = q.formula();
    let negated = crate::vcgen::formula::not(f.clone());
    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n");
    out.push_str(&format!("(set-logic {})\n", logic(&negated, &q.sig)));
    let mut used: std::collections::BTreeSet<String> = f.free_vars().into_iter().chain(f.applied()).collect();
    for h in &q.hyps {
        used.extend(h.free_vars());
        used.extend(h.applied());
    }
    for (name, s) in &q.sig.syms {
        if used.contains(name) {
            out.push_str(&declare(name, s));
            out.push('\n');
        }
    }
    for h in &q.hyps {
        if *h != Term::Bool(true) {
            out.push_str(&format!("(assert {})\n", term_smt(h, &q.sig)));
        }
    }
    for g in &q.goals {
        out.push_str(&format!("; {}\n", g.name));
    }
    let goals = crate::vcgen::formula::and(q.goals.iter().map(|g| g.formula()).collect());
    out.push_str(&format!("(assert (not {}))\n(check-sat)\n", term_smt(&goals, &q.sig)));
    let get: Vec<String> = get.iter().filter(|g| used.contains(*g)).map(|g| quote(g)).collect();
    if !get.is_empty() {
        out.push_str(&format!("(get-value ({}))\n", get.join(" ")));
    }
    out
}

/// Reads `declare-fun`/`declare-const` commands back into a signature.
pub fn parse_declarations(src: &[Sexp]) -> Result<Signature, String> {
    let mut sig = Signature::default();
    for s in src {
        let Some(l) = s.list() else { continue };
        match l.first().and_then(Sexp::atom) {
            Some("declare-fun") if l.len() == 4 => {
                let args = l[2].list().ok_or("bad argument list")?.iter().map(sort).collect::<Result<_, _>>()?;
                sig.function(l[1].atom().ok_or("bad name")?, args, sort(&l[3])?);
            }
            Some("declare-const") if l.len() == 3 => sig.constant(l[1].atom().ok_or("bad name")?, sort(&l[2])?),
            _ => {}
        }
    }
    Ok(sig)
}

fn sort(s: &Sexp) -> Result<Sort, String> {
    match s.atom() {
        Some("Bool") => Ok(Sort::Bool),
        Some("Int") => Ok(Sort::Int),
        Some("Real") => Ok(Sort::Real),
        _ => Err(format!("unknown sort {s}")),
    }
}

fn op_of(name: &str) -> Option<Op> {
    use Op::*;
    [Not, And, Or, Implies, Eq, Distinct, Lt, Le, Gt, Ge, Add, Sub, Mul, Neg, Ite].into_iter().find(|o| o.smt() == name)
}

/// Reads a term printed by [`term_smt`] or by a solver model.
pub fn parse_term(s: &Sexp) -> Result<Term, String> {
    match s {
        Sexp::Atom(a) => Ok(match a.as_str() {
            "true" => Term::Bool(true),
            "false" => Term::Bool(false),
            a if a.starts_with(|c: char| c.is_ascii_digit()) => {
                if let Some((i, f)) = a.split_once('.') {
                    let digits = format!("{i}{f}");
                    let n: BigInt = digits.parse().map_err(|_| format!("bad number {a}"))?;
                    Term::Real(BigRational::new(n, num_traits::pow(BigInt::from(10), f.len())))
                } else {
                    Term::Int(a.parse().map_err(|_| format!("bad number {a}"))?)
                }
            }
            a => Term::Var(a.to_string()),
        }),
        Sexp::List(l) => {
            let head = l.first().and_then(Sexp::atom).ok_or("empty application")?;
            let args = l[1..].iter().map(parse_term).collect::<Result<Vec<_>, _>>()?;
            match (head, args.as_slice()) {
                ("-", [x]) => Ok(match x {
                    Term::Int(n) => Term::Int(-n),
                    Term::Real(r) => Term::Real(-r),
                    x => Term::App(Op::Neg, vec![x.clone()]),
                }),
                ("/", [Term::Real(_) | Term::Int(_), Term::Real(_) | Term::Int(_)]) => {
                    let num = |t: &Term| match t {
                        Term::Real(r) => r.clone(),
                        Term::Int(n) => BigRational::from_integer(n.clone()),
                        _ => unreachable!(),
                    };
                    let d = num(&args[1]);
                    if d.is_zero() {
                        return Err("division by zero".into());
                    }
                    Ok(Term::Real(num(&args[0]) / d))
                }
                ("to_real", [x]) => Ok(match x {
                    Term::Int(n) => Term::Real(BigRational::from_integer(n.clone())),
                    x => x.clone(),
                }),
                _ => Ok(match op_of(head) {
                    Some(op) => Term::App(op, args),
                    None => Term::Apply(head.to_string(), args),
                }),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::sexp::parse_all;
    use crate::vcgen::formula::*;

    #[test]
    fn quoting() {
        assert_eq!(quote("x!1"), "x!1");
        assert_eq!(quote("a'"), "|a'|");
        assert_eq!(quote("sum#pre!1"), "|sum#pre!1|");
        assert_eq!(quote("noise[2]!1"), "|noise[2]!1|");
        assert_eq!(quote("%0"), "%0");
    }

    #[test]
    fn mixed_arithmetic_is_coerced() {
        let mut sig = Signature::default();
        sig.constant("p", Sort::Real);
        sig.constant("n", Sort::Int);
        let t = app(Op::Le, vec![var("n"), app(Op::Sub, vec![int(1), var("p")])]);
        assert_eq!(term_smt(&t, &sig), "(<= (to_real n) (- 1.0 p))");
        assert_eq!(logic(&t, &sig), "QF_LIRA");
        let nl = app(Op::Le, vec![mul(vec![var("p"), var("p")]), real(BigRational::new(1.into(), 3.into()))]);
        assert_eq!(term_smt(&nl, &sig), "(<= (* p p) (/ 1.0 3.0))");
        assert_eq!(logic(&nl, &sig), "QF_NRA");
    }

    #[test]
    fn logic_with_functions() {
        let mut sig = Signature::default();
        sig.function("f", vec![Sort::Bool], Sort::Bool);
        sig.constant("x", Sort::Bool);
        assert_eq!(logic(&apply("f", vec![var("x")]), &sig), "QF_UF");
        assert_eq!(logic(&var("x"), &sig), "QF_UF");
    }

    #[test]
    fn declarations_round_trip() {
        let mut sig = Signature::default();
        sig.function("cg!1", vec![Sort::Bool, Sort::Int], Sort::Real);
        sig.constant("a'", Sort::Int);
        let text: String = sig.syms.iter().map(|(n, s)| declare(n, s) + "\n").collect();
        assert_eq!(parse_declarations(&parse_all(&text).unwrap()).unwrap(), sig);
    }

    #[test]
    fn model_values_parse() {
        let s = parse_all("(- (/ 1.0 3.0)) (- 4) 2.5").unwrap();
        assert_eq!(parse_term(&s[0]).unwrap(), Term::Real(BigRational::new((-1).into(), 3.into())));
        assert_eq!(parse_term(&s[1]).unwrap(), Term::Int((-4).into()));
        assert_eq!(parse_term(&s[2]).unwrap(), Term::Real(BigRational::new(5.into(), 2.into())));
    }
}
