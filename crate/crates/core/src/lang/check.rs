use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::desugar::desugar_loops;
use super::LangError;

pub type TypeEnv = BTreeMap<VarId, Type>;

/// Checks the static discipline and returns the type of every variable.
///
/// Outside the loop every variable is assigned at most once along any path.
/// Inside the loop body a variable may be assigned at most once per
/// iteration; the value it held on entry to the iteration is the previous
/// version. Distributions may only mention inputs.
pub fn check(p: &Program) -> Result<TypeEnv, LangError> {
    let p = desugar_loops(p)?;
    let mut ck = Checker { prog: &p, env: TypeEnv::new() };
    for (v, t) in &p.params {
        ck.env.insert(v.clone(), t.clone());
    }
    let mut defined: BTreeSet<VarId> = p.input_vars().into_iter().collect();
    let mut ever: BTreeSet<VarId> = BTreeSet::new();
    let mut seen_loop = false;
    for s in &p.body {
        match &s.kind {
            StmtKind::While(g, body, _) => {
                if seen_loop {
                    return Err(LangError::LoopForm { msg: "at most one top-level loop is supported".into(), loc: s.loc });
                }
                seen_loop = true;
                ck.expect(g, &Type::Bool, &defined, s.loc)?;
                let mut iter_defined = defined.clone();
                let mut iter_assigned = BTreeSet::new();
                ck.block(body, &mut iter_defined, &mut iter_assigned, Scope::Loop)?;
                ever.extend(iter_assigned);
            }
            _ => ck.stmt(s, &mut defined, &mut ever, Scope::Top)?,
        }
    }
    for v in &p.returns {
        if !defined.contains(v) {
            return Err(LangError::UseBeforeDefinition { var: v.clone(), loc: Loc::default() });
        }
    }
    Ok(ck.env)
}

#[derive(Clone, Copy, PartialEq)]
enum Scope {
    Top,
    Loop,
}

struct Checker<'a> {
    prog: &'a Program,
    env: TypeEnv,
}

impl Checker<'_> {
    fn block(
        &mut self,
        body: &[Stmt],
        defined: &mut BTreeSet<VarId>,
        assigned: &mut BTreeSet<VarId>,
        scope: Scope,
    ) -> Result<(), LangError> {
        for s in body {
            self.stmt(s, defined, assigned, scope)?;
        }
        Ok(())
    }

    /// `assigned` holds the variables assigned so far on this path (globally
    /// at top level, per iteration inside the loop).
    fn stmt(
        &mut self,
        s: &Stmt,
        defined: &mut BTreeSet<VarId>,
        assigned: &mut BTreeSet<VarId>,
        scope: Scope,
    ) -> Result<(), LangError> {
        match &s.kind {
            StmtKind::Assign(place, e) => {
                let v = self.place(place, s.loc)?;
                let t = self.infer(e, defined, s.loc)?;
                self.define(&v, t, defined, assigned, s.loc)
            }
            StmtKind::Sample(places, d) => {
                let tys = self.dist(d, s.loc)?;
                if tys.len() != places.len() {
                    return Err(LangError::TypeMismatch {
                        msg: format!("sampling {} values into {} variables", tys.len(), places.len()),
                        loc: s.loc,
                    });
                }
                for (place, t) in places.iter().zip(tys) {
                    let v = self.place(place, s.loc)?;
                    self.define(&v, t, defined, assigned, s.loc)?;
                }
                Ok(())
            }
            StmtKind::If(c, a, b) => {
                self.expect(c, &Type::Bool, defined, s.loc)?;
                let (mut d1, mut a1) = (defined.clone(), assigned.clone());
                self.block(a, &mut d1, &mut a1, scope)?;
                let (mut d2, mut a2) = (defined.clone(), assigned.clone());
                self.block(b, &mut d2, &mut a2, scope)?;
                *defined = d1.intersection(&d2).cloned().collect();
                assigned.extend(a1);
                assigned.extend(a2);
                Ok(())
            }
            StmtKind::While(..) | StmtKind::For(..) => Err(LangError::LoopForm {
                msg: "loops must appear at top level and may not be nested".into(),
                loc: s.loc,
            }),
        }
    }

    fn place(&self, place: &Place, loc: Loc) -> Result<VarId, LangError> {
        match place {
            Place::Var(v) => Ok(v.clone()),
            Place::Index(name, _) => Err(LangError::BadIndex { name: name.clone(), loc }),
        }
    }

    fn define(
        &mut self,
        v: &VarId,
        t: Type,
        defined: &mut BTreeSet<VarId>,
        assigned: &mut BTreeSet<VarId>,
        loc: Loc,
    ) -> Result<(), LangError> {
        if self.prog.is_input(v) {
            return Err(LangError::InputAssigned { var: v.clone(), loc });
        }
        if !assigned.insert(v.clone()) {
            return Err(LangError::SsaViolation { var: v.clone(), loc });
        }
        match self.env.get(v) {
            Some(old) if old.base() != t.base() => {
                return Err(LangError::TypeMismatch {
                    msg: format!("'{v}' has type {old} but is assigned a {t}"),
                    loc,
                })
            }
            Some(_) => {}
            None => {
                self.env.insert(v.clone(), t);
            }
        }
        defined.insert(v.clone());
        Ok(())
    }

    fn dist(&mut self, d: &DistExpr, loc: Loc) -> Result<Vec<Type>, LangError> {
        let mut bad = None;
        d.visit_vars(&mut |v| {
            if !self.prog.is_input(v) && bad.is_none() {
                bad = Some(v.clone());
            }
        });
        if let Some(var) = bad {
            return Err(LangError::DistNonInput { var, loc });
        }
        for c in d.components() {
            match &c {
                DistExpr::Bern(e) => {
                    let inputs: BTreeSet<VarId> = self.prog.input_vars().into_iter().collect();
                    let t = self.infer(e, &inputs, loc)?;
                    if !t.is_numeric() {
                        return Err(LangError::TypeMismatch { msg: format!("bern parameter has type {t}"), loc });
                    }
                }
                DistExpr::Opaque(name, _) if self.prog.dist_type(name).is_none() => {
                    return Err(LangError::UnknownDistribution { name: name.clone(), line: loc.line, col: loc.col })
                }
                _ => {}
            }
        }
        Ok(d.result_types())
    }

    fn expect(&self, e: &Expr, want: &Type, defined: &BTreeSet<VarId>, loc: Loc) -> Result<(), LangError> {
        let t = self.infer(e, defined, loc)?;
        if t.base() == want.base() {
            Ok(())
        } else {
            Err(LangError::TypeMismatch { msg: format!("expected {want}, found {t}"), loc })
        }
    }

    fn infer(&self, e: &Expr, defined: &BTreeSet<VarId>, loc: Loc) -> Result<Type, LangError> {
        let mismatch = |msg: String| LangError::TypeMismatch { msg, loc };
        Ok(match e {
            Expr::Bool(_) => Type::Bool,
            Expr::Int(_) => Type::Int,
            Expr::Rat(_) => Type::Real,
            Expr::Var(v) => {
                if !defined.contains(v) {
                    return Err(LangError::UseBeforeDefinition { var: v.clone(), loc });
                }
                self.env
                    .get(v)
                    .cloned()
                    .ok_or_else(|| LangError::UseBeforeDefinition { var: v.clone(), loc })?
            }
            Expr::Index(name, _) => return Err(LangError::BadIndex { name: name.clone(), loc }),
            Expr::Unary(UnOp::Not, a) => {
                self.expect(a, &Type::Bool, defined, loc)?;
                Type::Bool
            }
            Expr::Unary(UnOp::Neg, a) => {
                let t = self.infer(a, defined, loc)?;
                if !t.is_numeric() {
                    return Err(mismatch(format!("cannot negate {t}")));
                }
                t.base()
            }
            Expr::Binary(op, a, b) => {
                let ta = self.infer(a, defined, loc)?;
                let tb = self.infer(b, defined, loc)?;
                match op {
                    BinOp::And | BinOp::Or => {
                        if ta != Type::Bool || tb != Type::Bool {
                            return Err(mismatch(format!("'{}' expects bool operands", op.symbol())));
                        }
                        Type::Bool
                    }
                    BinOp::Eq | BinOp::Ne => {
                        let ok = ta.base() == tb.base() || (ta.is_numeric() && tb.is_numeric());
                        if !ok {
                            return Err(mismatch(format!("cannot compare {ta} with {tb}")));
                        }
                        Type::Bool
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        if !ta.is_numeric() || !tb.is_numeric() {
                            return Err(mismatch(format!("'{}' expects numeric operands", op.symbol())));
                        }
                        Type::Bool
                    }
                    BinOp::Add | BinOp::Sub | BinOp::Mul => {
                        if !ta.is_numeric() || !tb.is_numeric() {
                            return Err(mismatch(format!("'{}' expects numeric operands", op.symbol())));
                        }
                        if ta.is_integral() && tb.is_integral() {
                            Type::Int
                        } else {
                            Type::Real
                        }
                    }
                }
            }
            Expr::Ite(c, a, b) => {
                self.expect(c, &Type::Bool, defined, loc)?;
                let ta = self.infer(a, defined, loc)?;
                let tb = self.infer(b, defined, loc)?;
                if ta.base() == tb.base() {
                    ta.base()
                } else if ta.is_numeric() && tb.is_numeric() {
                    Type::Real
                } else {
                    return Err(mismatch(format!("ite branches have types {ta} and {tb}")));
                }
            }
            Expr::Call(name, args) => {
                let f = self
                    .prog
                    .fun(name)
                    .ok_or_else(|| LangError::UnknownFunction { name: name.clone(), loc })?;
                if f.args.len() != args.len() {
                    return Err(mismatch(format!("'{name}' expects {} arguments", f.args.len())));
                }
                for (a, t) in args.iter().zip(&f.args) {
                    self.expect(a, t, defined, loc)?;
                }
                f.ret.clone()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn fair_coin_env() {
        let p = parse("param p: real\nx <- false\ny <- false\nwhile x == y { x ~ bern(p)\n y ~ bern(p) }\nreturn x")
            .unwrap();
        let env = check(&p).unwrap();
        let want: TypeEnv = [("p", Type::Real), ("x", Type::Bool), ("y", Type::Bool)]
            .into_iter()
            .map(|(n, t)| (VarId::new(n), t))
            .collect();
        assert_eq!(env, want);
    }

    #[test]
    fn double_assignment_is_ssa_violation() {
        let err = check(&parse("x <- 1; x <- 2").unwrap()).unwrap_err();
        assert!(matches!(err, LangError::SsaViolation { ref var, .. } if var.name == "x"));
    }

    #[test]
    fn dist_must_only_mention_inputs() {
        let err = check(&parse("y <- 1/2\nx ~ bern(y)").unwrap()).unwrap_err();
        assert!(matches!(err, LangError::DistNonInput { ref var, .. } if var.name == "y"));
        assert!(err.to_string().contains("distribution mentions non-input"));
    }

    #[test]
    fn use_before_definition() {
        let err = check(&parse("x <- y").unwrap()).unwrap_err();
        assert!(err.to_string().contains("use before definition"));
    }

    #[test]
    fn branch_local_definition_is_not_definite() {
        let p = parse("c ~ bern(1/2)\nif c { y <- 1 } else { z <- 2 }\nw <- y").unwrap();
        assert!(matches!(check(&p), Err(LangError::UseBeforeDefinition { .. })));
        let ok = parse("c ~ bern(1/2)\nif c { y <- 1 } else { y <- 2 }\nw <- y").unwrap();
        assert!(check(&ok).is_ok());
    }

    #[test]
    fn nested_loops_rejected() {
        let p = parse("x <- true\nwhile x { while x { x <- false } }").unwrap();
        assert!(matches!(check(&p), Err(LangError::LoopForm { .. })));
        let two = parse("x <- true\nwhile x { x <- false }\nwhile x { x <- false }").unwrap();
        assert!(matches!(check(&two), Err(LangError::LoopForm { .. })));
    }

    #[test]
    fn loop_allows_one_assignment_per_iteration() {
        let p = parse("i <- 0\nwhile i < 3 { i <- i + 1 }").unwrap();
        assert!(check(&p).is_ok());
        let bad = parse("i <- 0\nwhile i < 3 { i <- i + 1; i <- i + 1 }").unwrap();
        assert!(matches!(check(&bad), Err(LangError::SsaViolation { .. })));
    }

    #[test]
    fn inputs_are_read_only() {
        let p = parse("param n: int\nn <- 3").unwrap();
        assert!(matches!(check(&p), Err(LangError::InputAssigned { .. })));
    }
}
