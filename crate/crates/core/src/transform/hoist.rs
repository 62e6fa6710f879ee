use crate::lang::{desugar_loops, Counter, DistExpr, Expr, Place, Program, Stmt, StmtKind, VarId};

use super::TransformError;

/// A vector of variables drawn jointly from a product distribution.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SampleVec {
    pub vars: Vec<VarId>,
    /// One primitive distribution per variable.
    pub dists: Vec<DistExpr>,
}

impl SampleVec {
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn dist(&self) -> DistExpr {
        if self.dists.len() == 1 {
            self.dists[0].clone()
        } else {
            DistExpr::Product(self.dists.clone())
        }
    }

    pub fn extend(&mut self, other: &SampleVec) {
        self.vars.extend(other.vars.iter().cloned());
        self.dists.extend(other.dists.iter().cloned());
    }

    fn push(&mut self, places: &[Place], d: &DistExpr) -> Result<(), TransformError> {
        let comps = d.components();
        if comps.len() != places.len() {
            return Err(TransformError::Shape(format!("{} places for {} components", places.len(), comps.len())));
        }
        for (p, c) in places.iter().zip(comps) {
            let v = p.var().ok_or_else(|| TransformError::Shape("array access was not desugared".into()))?;
            self.vars.push(v.clone());
            self.dists.push(c);
        }
        Ok(())
    }

    pub fn stmt(&self) -> Option<Stmt> {
        (!self.is_empty()).then(|| Stmt::sample(self.vars.clone(), self.dist()))
    }

    fn map_vars(&self, f: &mut impl FnMut(&VarId) -> VarId) -> SampleVec {
        SampleVec {
            vars: self.vars.iter().map(|v| f(v)).collect(),
            dists: self.dists.iter().map(|d| d.map_vars(&mut |v| Expr::Var(f(v)))).collect(),
        }
    }
}

fn rename_stmts(body: &[Stmt], f: &mut impl FnMut(&VarId) -> VarId) -> Vec<Stmt> {
    body.iter()
        .map(|s| {
            let mut s = s.clone();
            crate::lang::rename_stmt(&mut s, &mut |v| Some(f(v)));
            s
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoistedLoop {
    pub guard: Expr,
    /// Samples of one iteration, drawn at the top of the body.
    pub sample: SampleVec,
    /// The deterministic rest of the body.
    pub body: Vec<Stmt>,
    pub counter: Option<Counter>,
}

/// A program whose random choices are all made by one vector sample at the
/// front (and, for loops, one vector sample at the top of the loop body).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hoisted {
    /// Declarations and returns of the source program; its body is empty.
    pub decls: Program,
    pub front: SampleVec,
    pub prefix: Vec<Stmt>,
    pub lp: Option<HoistedLoop>,
    pub suffix: Vec<Stmt>,
}

fn has_sample(body: &[Stmt]) -> Option<&Stmt> {
    body.iter().find_map(|s| match &s.kind {
        StmtKind::Sample(..) => Some(s),
        StmtKind::If(_, a, b) => has_sample(a).or_else(|| has_sample(b)),
        StmtKind::While(_, b, _) | StmtKind::For(_, _, _, b) => has_sample(b),
        StmtKind::Assign(..) => None,
    })
}

fn reads(s: &Stmt, v: &VarId) -> bool {
    let mut hit = false;
    let mut look = |e: &Expr| e.visit_vars(&mut |x| hit |= x == v);
    match &s.kind {
        StmtKind::Assign(_, e) => look(e),
        StmtKind::Sample(_, d) => d.visit_vars(&mut |x| hit |= x == v),
        StmtKind::If(c, a, b) => {
            look(c);
            hit |= a.iter().chain(b).any(|s| reads(s, v));
        }
        StmtKind::While(g, b, _) => {
            look(g);
            hit |= b.iter().any(|s| reads(s, v));
        }
        StmtKind::For(_, lo, hi, b) => {
            look(lo);
            look(hi);
            hit |= b.iter().any(|s| reads(s, v));
        }
    }
    hit
}

/// Splits a loop-free block into its samples and deterministic statements.
/// With `carried`, a sample may not move above a statement reading the
/// previous value of its variable.
fn split_block(body: &[Stmt], carried: bool) -> Result<(SampleVec, Vec<Stmt>), TransformError> {
    let mut samples = SampleVec::default();
    let mut rest: Vec<Stmt> = Vec::new();
    for s in body {
        match &s.kind {
            StmtKind::Sample(ps, d) => {
                if carried {
                    for p in ps {
                        if let Some(v) = p.var() {
                            if rest.iter().any(|r| reads(r, v)) {
                                return Err(TransformError::ReadBeforeSample { var: v.clone(), loc: s.loc });
                            }
                        }
                    }
                }
                samples.push(ps, d)?;
            }
            StmtKind::If(_, a, b) => {
                if let Some(inner) = has_sample(a).or_else(|| has_sample(b)) {
                    return Err(TransformError::SampleInBranch { loc: inner.loc });
                }
                rest.push(s.clone());
            }
            StmtKind::Assign(..) => rest.push(s.clone()),
            StmtKind::While(..) | StmtKind::For(..) => {
                return Err(TransformError::Shape("nested loops are not supported".into()))
            }
        }
    }
    Ok((samples, rest))
}

/// Moves all samples to the front: samples outside the loop to the start of
/// the program and samples in the loop body to the start of the body, each
/// merged into one product in source order.
pub fn hoist(p: &Program) -> Result<Hoisted, TransformError> {
    let p = desugar_loops(p).map_err(|e| TransformError::Shape(e.to_string()))?;
    let mut decls = p.clone();
    decls.body.clear();
    let loops: Vec<usize> =
        p.body.iter().enumerate().filter(|(_, s)| matches!(s.kind, StmtKind::While(..))).map(|(i, _)| i).collect();
    if loops.len() > 1 {
        return Err(TransformError::Shape("at most one top-level loop is supported".into()));
    }
    let (before, lp, after) = match loops.first() {
        Some(&i) => (&p.body[..i], Some(&p.body[i]), &p.body[i + 1..]),
        None => (&p.body[..], None, &p.body[..0]),
    };
    let (mut front, prefix) = split_block(before, false)?;
    let (front2, suffix) = split_block(after, false)?;
    front.extend(&front2);
    let lp = match lp.map(|s| &s.kind) {
        Some(StmtKind::While(g, body, counter)) => {
            let (sample, body) = split_block(body, true)?;
            Some(HoistedLoop { guard: g.clone(), sample, body, counter: counter.clone() })
        }
        _ => None,
    };
    Ok(Hoisted { decls, front, prefix, lp, suffix })
}

impl Hoisted {
    /// The equivalent ordinary program.
    pub fn to_program(&self) -> Program {
        let mut p = self.decls.clone();
        p.body.extend(self.front.stmt());
        p.body.extend(self.prefix.iter().cloned());
        if let Some(l) = &self.lp {
            let mut body: Vec<Stmt> = l.sample.stmt().into_iter().collect();
            body.extend(l.body.iter().cloned());
            p.body.push(Stmt::new(StmtKind::While(l.guard.clone(), body, l.counter.clone())));
        }
        p.body.extend(self.suffix.iter().cloned());
        p
    }

    pub fn has_loop(&self) -> bool {
        self.lp.is_some()
    }

    /// Renames every variable, including inputs.
    pub fn map_vars(&self, f: &mut impl FnMut(&VarId) -> VarId) -> Hoisted {
        let prefix = rename_stmts(&self.prefix, f);
        let suffix = rename_stmts(&self.suffix, f);
        let lp = self.lp.as_ref().map(|l| HoistedLoop {
            guard: l.guard.map_vars(&mut |v| Expr::Var(f(v))),
            sample: l.sample.map_vars(f),
            body: rename_stmts(&l.body, f),
            counter: l.counter.as_ref().map(|c| Counter {
                var: f(&c.var),
                lo: c.lo.map_vars(&mut |v| Expr::Var(f(v))),
                hi: c.hi.map_vars(&mut |v| Expr::Var(f(v))),
            }),
        });
        let mut decls = self.decls.clone();
        decls.params = decls.params.iter().map(|(v, t)| (f(v), t.clone())).collect();
        decls.returns = decls.returns.iter().map(|v| f(v)).collect();
        Hoisted { decls, front: self.front.map_vars(f), prefix, lp, suffix }
    }

    /// Copy `k` of the program: every variable gets tag `k`.
    pub fn tagged(&self, k: u8) -> Hoisted {
        self.map_vars(&mut |v| v.with_tag(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, pretty};

    #[test]
    fn merges_two_samples() {
        let h = hoist(&parse("param p: real\nx ~ bern(p)\nz <- 1\ny ~ bern(p)").unwrap()).unwrap();
        assert_eq!(h.front.vars, vec![VarId::new("x"), VarId::new("y")]);
        assert_eq!(pretty(&h.to_program()), "param p: real\n(x, y) ~ bern(p) * bern(p)\nz <- 1\n");
    }

    #[test]
    fn no_samples() {
        let h = hoist(&parse("x <- 1").unwrap()).unwrap();
        assert!(h.front.is_empty());
        assert_eq!(h.front.dist(), DistExpr::Product(vec![]));
        assert_eq!(h.prefix.len(), 1);
    }

    #[test]
    fn loop_body_samples_move_to_body_front() {
        let src = "param p: real\nx <- false\ny <- false\nwhile x == y { x ~ bern(p)\n y ~ bern(p) }\nreturn x";
        let h = hoist(&parse(src).unwrap()).unwrap();
        let l = h.lp.as_ref().unwrap();
        assert_eq!(l.sample.len(), 2);
        assert!(l.body.is_empty());
        assert!(h.front.is_empty());
    }

    #[test]
    fn rejects_sample_in_branch_and_carried_read() {
        let p = parse("c <- true\nif c { x ~ bern(1/2) } else { x <- false }").unwrap();
        assert!(matches!(hoist(&p), Err(TransformError::SampleInBranch { .. })));
        let p = parse("x <- false\nwhile !x { y <- x\n x ~ bern(1/2) }").unwrap();
        assert!(matches!(hoist(&p), Err(TransformError::ReadBeforeSample { .. })));
    }
}
