//! Logical encoding of deterministic code.

use std::collections::{BTreeMap, BTreeSet};

use super::formula::*;
use super::VcError;
use crate::lang::{BinOp, Expr, Place, Stmt, StmtKind, UnOp, VarId};

/// SMT symbol of a program variable.
pub fn sym(v: &VarId) -> String {
    v.to_string()
}

/// SMT symbol of the post-iteration value of a loop variable.
pub fn post_sym(v: &VarId) -> String {
    format!("{v}!next")
}

pub fn expr_term(e: &Expr, name: &dyn Fn(&VarId) -> Term) -> Result<Term, VcError> {
    Ok(match e {
        Expr::Bool(b) => Term::Bool(*b),
        Expr::Int(n) => Term::Int(n.clone()),
        Expr::Rat(r) => Term::Real(r.clone()),
        Expr::Var(v) => name(v),
        Expr::Index(a, _) => return Err(VcError::Unsupported(format!("array access '{a}[..]'"))),
        Expr::Unary(UnOp::Not, a) => not(expr_term(a, name)?),
        Expr::Unary(UnOp::Neg, a) => app(Op::Neg, vec![expr_term(a, name)?]),
        Expr::Binary(op, a, b) => {
            let (x, y) = (expr_term(a, name)?, expr_term(b, name)?);
            match op {
                BinOp::And => and(vec![x, y]),
                BinOp::Or => or(vec![x, y]),
                BinOp::Eq => app(Op::Eq, vec![x, y]),
                BinOp::Ne => not(app(Op::Eq, vec![x, y])),
                BinOp::Lt => app(Op::Lt, vec![x, y]),
                BinOp::Le => app(Op::Le, vec![x, y]),
                BinOp::Gt => app(Op::Gt, vec![x, y]),
                BinOp::Ge => app(Op::Ge, vec![x, y]),
                BinOp::Add => app(Op::Add, vec![x, y]),
                BinOp::Sub => app(Op::Sub, vec![x, y]),
                BinOp::Mul => app(Op::Mul, vec![x, y]),
            }
        }
        Expr::Ite(c, a, b) => app(Op::Ite, vec![expr_term(c, name)?, expr_term(a, name)?, expr_term(b, name)?]),
        Expr::Call(f, args) => apply(f.clone(), args.iter().map(|a| expr_term(a, name)).collect::<Result<_, _>>()?),
    })
}

/// Term for `e` over the current values of variables.
pub fn term(e: &Expr) -> Result<Term, VcError> {
    expr_term(e, &|v| var(sym(v)))
}

fn target(p: &Place) -> Result<&VarId, VcError> {
    p.var().ok_or_else(|| VcError::Unsupported("array assignment".into()))
}

/// Encodes loop-free SSA code: assignments become equalities, samples
/// become `true`, conditionals become guarded implications.
pub fn enc(body: &[Stmt]) -> Result<Term, VcError> {
    let mut out = Vec::new();
    for s in body {
        out.push(match &s.kind {
            StmtKind::Assign(p, e) => eq(var(sym(target(p)?)), term(e)?),
            StmtKind::Sample(..) => Term::Bool(true),
            StmtKind::If(c, a, b) => {
                let c = term(c)?;
                and(vec![implies(c.clone(), enc(a)?), implies(not(c), enc(b)?)])
            }
            StmtKind::While(..) | StmtKind::For(..) => return Err(VcError::Unsupported("loop in loop-free code".into())),
        });
    }
    Ok(and(out))
}

/// Encodes a loop body as a relation between pre-state symbols `v` and
/// post-state symbols `v!next`. `sampled` variables get fresh post values
/// from the iteration's sample; `state` lists every variable that must be
/// related (unassigned ones are framed); `inputs` are never primed.
pub fn enc_transition(
    body: &[Stmt],
    sampled: &[VarId],
    state: &[VarId],
    inputs: &BTreeSet<VarId>,
) -> Result<Term, VcError> {
    let mut cur: BTreeMap<VarId, Term> = BTreeMap::new();
    for v in sampled {
        cur.insert(v.clone(), var(post_sym(v)));
    }
    let mut out = Vec::new();
    trans_block(body, &mut cur, inputs, &mut out)?;
    for v in state {
        if !inputs.contains(v) && !cur.contains_key(v) {
            out.push(eq(var(post_sym(v)), var(sym(v))));
        }
    }
    Ok(and(out))
}

fn read(cur: &BTreeMap<VarId, Term>, v: &VarId) -> Term {
    cur.get(v).cloned().unwrap_or_else(|| var(sym(v)))
}

fn trans_block(
    body: &[Stmt],
    cur: &mut BTreeMap<VarId, Term>,
    inputs: &BTreeSet<VarId>,
    out: &mut Vec<Term>,
) -> Result<(), VcError> {
    for s in body {
        match &s.kind {
            StmtKind::Assign(p, e) => {
                let v = target(p)?;
                if inputs.contains(v) {
                    return Err(VcError::Unsupported(format!("assignment to input '{v}'")));
                }
                let rhs = expr_term(e, &|x| read(cur, x))?;
                out.push(eq(var(post_sym(v)), rhs));
                cur.insert(v.clone(), var(post_sym(v)));
            }
            StmtKind::Sample(..) => return Err(VcError::Unsupported("sample in hoisted loop body".into())),
            StmtKind::If(c, a, b) => {
                let c = expr_term(c, &|x| read(cur, x))?;
                let (mut ca, mut cb) = (cur.clone(), cur.clone());
                let (mut oa, mut ob) = (Vec::new(), Vec::new());
                trans_block(a, &mut ca, inputs, &mut oa)?;
                trans_block(b, &mut cb, inputs, &mut ob)?;
                let touched: BTreeSet<VarId> = ca.keys().chain(cb.keys()).cloned().collect();
                for v in touched {
                    match (ca.contains_key(&v), cb.contains_key(&v)) {
                        (true, false) => ob.push(eq(var(post_sym(&v)), var(sym(&v)))),
                        (false, true) => oa.push(eq(var(post_sym(&v)), var(sym(&v)))),
                        _ => {}
                    }
                    cur.insert(v.clone(), var(post_sym(&v)));
                }
                out.push(and(vec![implies(c.clone(), and(oa)), implies(not(c), and(ob))]));
            }
            StmtKind::While(..) | StmtKind::For(..) => return Err(VcError::Unsupported("nested loop".into())),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn assignment_and_sample() {
        let p = parse("x ~ bern(1/2)\ny <- !x").unwrap();
        assert_eq!(enc(&p.body).unwrap(), eq(var("y"), not(var("x"))));
    }

    #[test]
    fn conditional() {
        let p = parse("c ~ bern(1/2)\nif c { z <- 1 } else { z <- 2 }").unwrap();
        let t = enc(&p.body).unwrap();
        assert_eq!(
            t,
            and(vec![implies(var("c"), eq(var("z"), int(1))), implies(not(var("c")), eq(var("z"), int(2)))])
        );
    }

    #[test]
    fn transition_frames_unassigned() {
        let p = parse("i <- 0\nt <- false\nwhile i < 3 { if i == 1 { t <- true }\n i <- i + 1 }").unwrap();
        let StmtKind::While(_, body, _) = &p.body[2].kind else { panic!() };
        let state = [VarId::new("i"), VarId::new("t"), VarId::new("u")];
        let t = enc_transition(body, &[], &state, &BTreeSet::new()).unwrap();
        let s = t.to_string();
        assert!(s.contains("(=> (not (= i 1)) (= t!next t))"), "{s}");
        assert!(s.contains("(= i!next (+ i 1))"), "{s}");
        assert!(s.contains("(= u!next u)"), "{s}");
    }
}
