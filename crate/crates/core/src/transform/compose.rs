use crate::lang::{desugar_loops, rename_stmt, DistExpr, Expr, Program, Stmt, VarId};

use super::hoist::{Hoisted, HoistedLoop, SampleVec};
use super::TransformError;

/// Copy `k` of `p`: every variable, inputs included, gets tag `k`. Loops
/// are desugared first so array variables are tagged too.
pub fn tag_program(p: &Program, k: u8) -> Program {
    let mut q = desugar_loops(p).unwrap_or_else(|_| p.clone());
    for s in &mut q.body {
        rename_stmt(s, &mut |v| Some(v.with_tag(k)));
    }
    q.params = q.params.iter().map(|(v, t)| (v.with_tag(k), t.clone())).collect();
    q.returns = q.returns.iter().map(|v| v.with_tag(k)).collect();
    q
}

/// `tag(p, 1); tag(p, 2)`.
pub fn self_compose(p: &Program) -> Program {
    seq_programs(&tag_program(p, 1), &tag_program(p, 2))
}

/// Sequential composition of two variable-disjoint programs.
pub fn seq_programs(a: &Program, b: &Program) -> Program {
    let mut q = a.clone();
    q.params.extend(b.params.iter().cloned());
    for d in &b.dists {
        if !q.dists.contains(d) {
            q.dists.push(d.clone());
        }
    }
    for f in &b.funs {
        if q.fun(&f.name).is_none() {
            q.funs.push(f.clone());
        }
    }
    q.body.extend(b.body.iter().cloned());
    q.returns.extend(b.returns.iter().cloned());
    q
}

fn untag(e: &Expr) -> Expr {
    e.map_vars(&mut |v| Expr::Var(v.untagged()))
}

/// Sequential composition of hoisted, variable-disjoint programs. Two loops
/// are merged into their cross product; a loop and a loop-free program are
/// rejected.
pub fn seq(a: &Hoisted, b: &Hoisted) -> Result<Hoisted, TransformError> {
    let mut decls = seq_programs(&a.decls, &b.decls);
    decls.body.clear();
    let mut front = a.front.clone();
    front.extend(&b.front);
    let lp = match (&a.lp, &b.lp) {
        (None, None) => None,
        (Some(l1), Some(l2)) => {
            let (Some(c1), Some(c2)) = (&l1.counter, &l2.counter) else {
                return Err(TransformError::NotCounterLoop);
            };
            if untag(&c1.lo) != untag(&c2.lo) || untag(&c1.hi) != untag(&c2.hi) {
                return Err(TransformError::IterationMismatch);
            }
            let mut sample = l1.sample.clone();
            sample.extend(&l2.sample);
            let mut body = l1.body.clone();
            body.extend(l2.body.iter().cloned());
            Some(HoistedLoop { guard: l1.guard.clone(), sample, body, counter: l1.counter.clone() })
        }
        _ => return Err(TransformError::Shape("cannot compose a loop with a loop-free program".into())),
    };
    let (prefix, suffix) = if lp.is_some() {
        (concat(&a.prefix, &b.prefix), concat(&a.suffix, &b.suffix))
    } else {
        (concat(&concat(&a.prefix, &a.suffix), &concat(&b.prefix, &b.suffix)), Vec::new())
    };
    Ok(Hoisted { decls, front, prefix, lp, suffix })
}

fn concat(a: &[Stmt], b: &[Stmt]) -> Vec<Stmt> {
    a.iter().chain(b).cloned().collect()
}

/// Runs two counter loops in lock step. The copies must agree on their
/// inputs for the result to match `p1; p2`.
pub fn cross_product(p1: &Program, p2: &Program) -> Result<Program, TransformError> {
    let (h1, h2) = (super::hoist(p1)?, super::hoist(p2)?);
    if h1.lp.is_none() || h2.lp.is_none() {
        return Err(TransformError::NotCounterLoop);
    }
    Ok(seq(&h1, &h2)?.to_program())
}

/// Extends `s` with fresh variables `pad!1, pad!2, ..` drawn from `extra`
/// so that two sample vectors have equal length.
pub fn pad_to(s: &SampleVec, extra: &[DistExpr]) -> SampleVec {
    let mut out = s.clone();
    for (i, d) in extra.iter().enumerate() {
        out.vars.push(VarId::tagged("pad", (i + 1) as u8));
        out.dists.push(d.clone());
    }
    out
}

/// Pads the shorter front sample with copies of the longer one's trailing
/// distributions. Returns the padded pair.
pub fn pad_pair(a: &Hoisted, b: &Hoisted) -> (Hoisted, Hoisted) {
    let (mut a, mut b) = (a.clone(), b.clone());
    let (n, m) = (a.front.len(), b.front.len());
    if n < m {
        a.front = pad_to(&a.front, &b.front.dists[n..]);
    } else if m < n {
        b.front = pad_to(&b.front, &a.front.dists[m..]);
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{check, parse, pretty};
    use crate::transform::hoist;

    #[test]
    fn self_compose_tags_copies() {
        let p = parse("x ~ bern(1/2)\nreturn x").unwrap();
        let q = self_compose(&p);
        assert_eq!(pretty(&q), "x!1 ~ bern(1/2)\nx!2 ~ bern(1/2)\nreturn (x!1, x!2)\n");
        check(&q).unwrap();
    }

    #[test]
    fn cross_product_of_counter_loops() {
        let p = parse("param p: real\nsum <- 0\nfor i = 1 to 2 { noise[i] ~ bern(p)\n sum <- sum + ite(noise[i], 1, 0) }")
            .unwrap();
        let q = cross_product(&tag_program(&p, 1), &tag_program(&p, 2)).unwrap();
        let h = hoist(&q).unwrap();
        assert_eq!(h.lp.unwrap().sample.vars, vec![VarId::tagged("noise", 1), VarId::tagged("noise", 2)]);
    }

    #[test]
    fn cross_product_rejects_mismatch() {
        let a = parse("for i = 1 to 2 { x ~ bern(1/2) }").unwrap();
        let b = parse("for i = 1 to 3 { x ~ bern(1/2) }").unwrap();
        let r = cross_product(&tag_program(&a, 1), &tag_program(&b, 2));
        assert!(matches!(r, Err(TransformError::IterationMismatch)));
        let w = parse("x <- true\nwhile x { x ~ bern(1/2) }").unwrap();
        let r = cross_product(&tag_program(&w, 1), &tag_program(&w, 2));
        assert!(matches!(r, Err(TransformError::NotCounterLoop)));
    }

    #[test]
    fn padding_copies_tail_distributions() {
        let a = hoist(&parse("x ~ bern(1/2)").unwrap()).unwrap();
        let b = hoist(&parse("(x, y) ~ bern(1/2) * bern(1/3)").unwrap()).unwrap();
        let (pa, pb) = pad_pair(&a, &b);
        assert_eq!(pa.front.dists, pb.front.dists);
        assert_eq!(pa.front.vars[1], VarId::tagged("pad", 1));
    }
}
