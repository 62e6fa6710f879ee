use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::ast::*;
use super::LangError;

/// Upper bound on the number of iterations [`unroll`] will expand.
pub const MAX_UNROLL: i64 = 4096;

/// Replaces every `for` with a counter-annotated `while`. Array accesses
/// `a[i]` indexed by the loop counter become the scalar `a`.
pub fn desugar_loops(p: &Program) -> Result<Program, LangError> {
    let mut out = p.clone();
    out.body = Vec::with_capacity(p.body.len());
    for s in &p.body {
        match &s.kind {
            StmtKind::For(i, lo, hi, body) => {
                out.body.push(Stmt { kind: StmtKind::Assign(Place::Var(i.clone()), lo.clone()), loc: s.loc });
                let mut nb = body.iter().map(|b| scalarize(b, i)).collect::<Result<Vec<_>, _>>()?;
                nb.push(Stmt {
                    kind: StmtKind::Assign(
                        Place::Var(i.clone()),
                        Expr::bin(BinOp::Add, Expr::Var(i.clone()), Expr::int(1)),
                    ),
                    loc: s.loc,
                });
                let guard = Expr::bin(BinOp::Le, Expr::Var(i.clone()), hi.clone());
                let counter = Counter { var: i.clone(), lo: lo.clone(), hi: hi.clone() };
                out.body.push(Stmt { kind: StmtKind::While(guard, nb, Some(counter)), loc: s.loc });
            }
            _ => out.body.push(s.clone()),
        }
    }
    Ok(out)
}

fn is_counter(e: &Expr, i: &VarId) -> bool {
    matches!(e, Expr::Var(v) if v == i)
}

fn scalarize_expr(e: &Expr, i: &VarId, loc: Loc) -> Result<Expr, LangError> {
    Ok(match e {
        Expr::Index(a, k) if is_counter(k, i) => Expr::var(a),
        Expr::Index(a, _) => return Err(LangError::BadIndex { name: a.clone(), loc }),
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(scalarize_expr(a, i, loc)?)),
        Expr::Binary(op, a, b) => {
            Expr::Binary(*op, Box::new(scalarize_expr(a, i, loc)?), Box::new(scalarize_expr(b, i, loc)?))
        }
        Expr::Ite(c, a, b) => Expr::Ite(
            Box::new(scalarize_expr(c, i, loc)?),
            Box::new(scalarize_expr(a, i, loc)?),
            Box::new(scalarize_expr(b, i, loc)?),
        ),
        Expr::Call(f, args) => {
            Expr::Call(f.clone(), args.iter().map(|a| scalarize_expr(a, i, loc)).collect::<Result<_, _>>()?)
        }
        _ => e.clone(),
    })
}

fn scalarize(s: &Stmt, i: &VarId) -> Result<Stmt, LangError> {
    let place = |p: &Place| match p {
        Place::Index(a, k) if is_counter(k, i) => Ok(Place::Var(VarId::new(a.clone()))),
        Place::Index(a, _) => Err(LangError::BadIndex { name: a.clone(), loc: s.loc }),
        p => Ok(p.clone()),
    };
    let kind = match &s.kind {
        StmtKind::Assign(p, e) => StmtKind::Assign(place(p)?, scalarize_expr(e, i, s.loc)?),
        StmtKind::Sample(ps, d) => StmtKind::Sample(ps.iter().map(place).collect::<Result<_, _>>()?, d.clone()),
        StmtKind::If(c, a, b) => StmtKind::If(
            scalarize_expr(c, i, s.loc)?,
            a.iter().map(|x| scalarize(x, i)).collect::<Result<_, _>>()?,
            b.iter().map(|x| scalarize(x, i)).collect::<Result<_, _>>()?,
        ),
        StmtKind::While(..) | StmtKind::For(..) => {
            return Err(LangError::LoopForm { msg: "loops may not be nested".into(), loc: s.loc })
        }
    };
    Ok(Stmt { kind, loc: s.loc })
}

/// Evaluates a closed integer expression.
pub fn const_int(e: &Expr) -> Option<BigInt> {
    match e {
        Expr::Int(n) => Some(n.clone()),
        Expr::Unary(UnOp::Neg, a) => Some(-const_int(a)?),
        Expr::Binary(BinOp::Add, a, b) => Some(const_int(a)? + const_int(b)?),
        Expr::Binary(BinOp::Sub, a, b) => Some(const_int(a)? - const_int(b)?),
        Expr::Binary(BinOp::Mul, a, b) => Some(const_int(a)? * const_int(b)?),
        _ => None,
    }
}

/// Fully unrolls a `for` loop whose bounds are literals, producing
/// straight-line code in SSA form.
///
/// Iteration `k` writes `v#k` for every variable `v` the body assigns, and
/// `a[i]` becomes the variable named `a[k]`. A pre-loop definition of a
/// loop-assigned variable is renamed `v#pre`. The last version of each
/// variable is renamed back to `v` so code after the loop and the returned
/// variables are unaffected. Programs without such a loop are returned as is.
pub fn unroll(p: &Program) -> Result<Program, LangError> {
    let Some((idx, s)) = p.top_loop() else { return Ok(p.clone()) };
    let StmtKind::For(i, lo, hi, body) = &s.kind else { return Ok(p.clone()) };
    let (Some(lo), Some(hi)) = (const_int(lo).and_then(|v| v.to_i64()), const_int(hi).and_then(|v| v.to_i64()))
    else {
        return Ok(p.clone());
    };
    if hi - lo >= MAX_UNROLL {
        return Err(LangError::LoopForm { msg: format!("refusing to unroll {} iterations", hi - lo + 1), loc: s.loc });
    }

    let mut loop_vars = BTreeSet::new();
    collect_assigned(body, &mut loop_vars);
    loop_vars.insert(i.clone());

    // current name of every loop-assigned variable
    let mut cur: BTreeMap<VarId, VarId> = BTreeMap::new();
    let mut out = Vec::new();
    for st in &p.body[..idx] {
        let mut st = st.clone();
        rename_stmt(&mut st, &mut |v| if loop_vars.contains(v) { Some(pre_name(v)) } else { None });
        let mut defs = BTreeSet::new();
        collect_assigned(std::slice::from_ref(&st), &mut defs);
        for d in defs {
            let orig = loop_vars.iter().find(|v| pre_name(v) == d);
            if let Some(orig) = orig {
                cur.insert(orig.clone(), d);
            }
        }
        out.push(st);
    }

    for k in lo..=hi {
        let mut u = Unroller { counter: i, k, cur: &mut cur, loop_vars: &loop_vars, loc: s.loc };
        for st in body {
            let st = u.stmt(st)?;
            out.push(st);
        }
    }
    let end = VarId::new(format!("{}#end", i.name));
    out.push(Stmt { kind: StmtKind::Assign(Place::Var(end.clone()), Expr::int(lo.max(hi + 1))), loc: s.loc });
    cur.insert(i.clone(), end);

    // last versions take the plain name back
    let finals: BTreeMap<VarId, VarId> = cur.iter().map(|(v, last)| (last.clone(), v.clone())).collect();
    let rest: Vec<Stmt> = p.body[idx + 1..].to_vec();
    for st in &mut out {
        rename_stmt(st, &mut |v| finals.get(v).cloned());
    }
    out.extend(rest);
    let mut q = p.clone();
    q.body = out;
    Ok(q)
}

fn pre_name(v: &VarId) -> VarId {
    VarId { name: format!("{}#pre", v.name), tag: v.tag }
}

fn collect_assigned(body: &[Stmt], out: &mut BTreeSet<VarId>) {
    for s in body {
        match &s.kind {
            StmtKind::Assign(Place::Var(v), _) => {
                out.insert(v.clone());
            }
            StmtKind::Sample(ps, _) => {
                for p in ps {
                    if let Place::Var(v) = p {
                        out.insert(v.clone());
                    }
                }
            }
            StmtKind::If(_, a, b) => {
                collect_assigned(a, out);
                collect_assigned(b, out);
            }
            StmtKind::While(_, b, _) | StmtKind::For(_, _, _, b) => collect_assigned(b, out),
            _ => {}
        }
    }
}

/// Renames variables (reads and writes) where `f` returns a replacement.
pub fn rename_stmt(s: &mut Stmt, f: &mut impl FnMut(&VarId) -> Option<VarId>) {
    let mut re = |e: &Expr| e.map_vars(&mut |v| Expr::Var(f(v).unwrap_or_else(|| v.clone())));
    match &mut s.kind {
        StmtKind::Assign(p, e) => {
            *e = re(e);
            rename_place(p, f);
        }
        StmtKind::Sample(ps, d) => {
            *d = d.map_vars(&mut |v| Expr::Var(f(v).unwrap_or_else(|| v.clone())));
            for p in ps {
                rename_place(p, f);
            }
        }
        StmtKind::If(c, a, b) => {
            *c = re(c);
            a.iter_mut().for_each(|s| rename_stmt(s, f));
            b.iter_mut().for_each(|s| rename_stmt(s, f));
        }
        StmtKind::While(g, b, c) => {
            *g = re(g);
            if let Some(c) = c {
                c.lo = re(&c.lo);
                c.hi = re(&c.hi);
            }
            b.iter_mut().for_each(|s| rename_stmt(s, f));
            if let Some(c) = c {
                if let Some(n) = f(&c.var) {
                    c.var = n;
                }
            }
        }
        StmtKind::For(v, lo, hi, b) => {
            *lo = re(lo);
            *hi = re(hi);
            b.iter_mut().for_each(|s| rename_stmt(s, f));
            if let Some(n) = f(v) {
                *v = n;
            }
        }
    }
}

fn rename_place(p: &mut Place, f: &mut impl FnMut(&VarId) -> Option<VarId>) {
    match p {
        Place::Var(v) => {
            if let Some(n) = f(v) {
                *v = n;
            }
        }
        Place::Index(_, e) => *e = e.map_vars(&mut |v| Expr::Var(f(v).unwrap_or_else(|| v.clone()))),
    }
}

struct Unroller<'a> {
    counter: &'a VarId,
    k: i64,
    cur: &'a mut BTreeMap<VarId, VarId>,
    loop_vars: &'a BTreeSet<VarId>,
    loc: Loc,
}

impl Unroller<'_> {
    fn version(&self, v: &VarId) -> VarId {
        VarId { name: format!("{}#{}", v.name, self.k), tag: v.tag }
    }

    fn expr(&self, e: &Expr) -> Result<Expr, LangError> {
        Ok(match e {
            Expr::Var(v) if v == self.counter => Expr::int(self.k),
            Expr::Var(v) => Expr::Var(self.cur.get(v).cloned().unwrap_or_else(|| v.clone())),
            Expr::Index(a, ix) => Expr::Var(self.element(a, ix)?),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(self.expr(a)?)),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            Expr::Ite(c, a, b) => {
                Expr::Ite(Box::new(self.expr(c)?), Box::new(self.expr(a)?), Box::new(self.expr(b)?))
            }
            Expr::Call(f, args) => Expr::Call(f.clone(), args.iter().map(|a| self.expr(a)).collect::<Result<_, _>>()?),
            _ => e.clone(),
        })
    }

    fn element(&self, a: &str, ix: &Expr) -> Result<VarId, LangError> {
        let k = const_int(&self.expr(ix)?).ok_or_else(|| LangError::BadIndex { name: a.to_string(), loc: self.loc })?;
        Ok(VarId::new(format!("{a}[{k}]")))
    }

    fn define(&mut self, p: &Place) -> Result<Place, LangError> {
        Ok(match p {
            Place::Var(v) => {
                let nv = self.version(v);
                self.cur.insert(v.clone(), nv.clone());
                Place::Var(nv)
            }
            Place::Index(a, ix) => Place::Var(self.element(a, ix)?),
        })
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Stmt, LangError> {
        let kind = match &s.kind {
            StmtKind::Assign(p, e) => {
                let e = self.expr(e)?;
                StmtKind::Assign(self.define(p)?, e)
            }
            StmtKind::Sample(ps, d) => {
                let ps = ps.iter().map(|p| self.define(p)).collect::<Result<_, _>>()?;
                StmtKind::Sample(ps, d.clone())
            }
            StmtKind::If(c, a, b) => {
                let c = self.expr(c)?;
                let before = self.cur.clone();
                let a = self.branch(a)?;
                let after_a = std::mem::replace(self.cur, before.clone());
                let b = self.branch(b)?;
                let after_b = std::mem::replace(self.cur, before.clone());
                let (mut a, mut b) = (a, b);
                // both branches must leave each variable in the same version
                for v in self.loop_vars {
                    let (va, vb) = (after_a.get(v), after_b.get(v));
                    if va == vb {
                        if let Some(x) = va {
                            self.cur.insert(v.clone(), x.clone());
                        }
                        continue;
                    }
                    let target = self.version(v);
                    let prev = before.get(v).cloned().unwrap_or_else(|| v.clone());
                    if va != Some(&target) {
                        a.push(Stmt { kind: StmtKind::Assign(Place::Var(target.clone()), Expr::Var(prev.clone())), loc: s.loc });
                    }
                    if vb != Some(&target) {
                        b.push(Stmt { kind: StmtKind::Assign(Place::Var(target.clone()), Expr::Var(prev)), loc: s.loc });
                    }
                    self.cur.insert(v.clone(), target);
                }
                StmtKind::If(c, a, b)
            }
            StmtKind::While(..) | StmtKind::For(..) => {
                return Err(LangError::LoopForm { msg: "loops may not be nested".into(), loc: s.loc })
            }
        };
        Ok(Stmt { kind, loc: s.loc })
    }

    fn branch(&mut self, body: &[Stmt]) -> Result<Vec<Stmt>, LangError> {
        body.iter().map(|s| self.stmt(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{check, parse, pretty};

    #[test]
    fn for_becomes_counter_while() {
        let p = parse("param p: real\nfor i = 1 to 3 { a[i] ~ bern(p) }").unwrap();
        let d = desugar_loops(&p).unwrap();
        let want = parse("param p: real\ni <- 1\nwhile i <= 3 { a ~ bern(p)\n i <- i + 1 }").unwrap();
        assert_eq!(d.body[0], want.body[0]);
        let StmtKind::While(g, b, Some(c)) = &d.body[1].kind else { panic!() };
        let StmtKind::While(wg, wb, None) = &want.body[1].kind else { panic!() };
        assert_eq!((g, b), (wg, wb));
        assert_eq!(c.hi, Expr::int(3));
    }

    #[test]
    fn unroll_noisy_sum() {
        let p = parse(
            "param p: real\nsum <- 0\nfor i = 1 to 3 { noise[i] ~ bern(p)\n sum <- sum + ite(noise[i], 1, 0) }\nreturn sum",
        )
        .unwrap();
        let u = unroll(&p).unwrap();
        assert!(!u.has_loop());
        check(&u).unwrap();
        let text = pretty(&u);
        assert!(text.contains("noise[2] ~ bern(p)"), "{text}");
        assert!(text.contains("sum#2 <- sum#1 + ite(noise[2], 1, 0)"), "{text}");
        assert!(text.contains("sum <- sum#2 + ite(noise[3], 1, 0)"), "{text}");
        assert!(text.starts_with("param p: real\nsum#pre <- 0\n"), "{text}");
    }

    #[test]
    fn unroll_fills_missing_branch() {
        let p = parse("c <- 0\nfor i = 1 to 2 { b ~ bern(1/2)\n if b { c <- c + i } }\nreturn c").unwrap();
        let u = unroll(&p).unwrap();
        check(&u).unwrap();
        let text = pretty(&u);
        assert!(text.contains("} else {\n  c#1 <- c#pre\n}"), "{text}");
    }

    #[test]
    fn symbolic_bounds_are_left_alone() {
        let p = parse("param n: int\nfor i = 1 to n { x ~ bern(1/2) }").unwrap();
        assert_eq!(unroll(&p).unwrap(), p);
    }
}
