use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::dist::{eval_dist_with, Concrete, Dist, ResidualDist};
use super::value::{eval, State, Value};
use super::SemanticsError;
use crate::lang::{desugar_loops, Place, Program, Stmt, StmtKind};

/// How far loops are unrolled before the remaining mass is reported as
/// residual.
#[derive(Clone, Debug)]
pub struct UnrollPolicy {
    pub max_iterations: usize,
    /// Stop once the mass still inside the loop is at most this.
    pub residual_target: BigRational,
    /// Fail if more than this much mass is left when iterations run out.
    pub ceiling: BigRational,
}

impl Default for UnrollPolicy {
    fn default() -> Self {
        UnrollPolicy {
            max_iterations: 10_000,
            residual_target: BigRational::new(BigInt::one(), BigInt::from(10u64.pow(9))),
            ceiling: BigRational::new(BigInt::one(), BigInt::from(1000)),
        }
    }
}

impl UnrollPolicy {
    /// Exactly `n` iterations, whatever mass remains.
    pub fn iterations(n: usize) -> Self {
        UnrollPolicy { max_iterations: n, residual_target: BigRational::zero(), ceiling: BigRational::one() }
    }
}

pub fn interpret(p: &Program, s0: &State, policy: &UnrollPolicy) -> Result<ResidualDist, SemanticsError> {
    interpret_with(p, s0, policy, &Concrete::default())
}

/// Exact output distribution of `p` started in `s0`. Every input must be
/// bound in `s0`.
pub fn interpret_with(
    p: &Program,
    s0: &State,
    policy: &UnrollPolicy,
    c: &Concrete,
) -> Result<ResidualDist, SemanticsError> {
    for v in p.input_vars() {
        if !s0.contains_key(&v) {
            return Err(SemanticsError::Unbound(v));
        }
    }
    let p = desugar_loops(p).map_err(|e| SemanticsError::Type(e.to_string()))?;
    let mut ex = Exec { policy, c, residual: BigRational::zero() };
    let out = ex.block(&p.body, Dist::point(s0.clone()))?;
    Ok(ResidualDist { pmf: out, residual: ex.residual })
}

struct Exec<'a> {
    policy: &'a UnrollPolicy,
    c: &'a Concrete,
    residual: BigRational,
}

impl Exec<'_> {
    fn block(&mut self, body: &[Stmt], mut d: Dist<State>) -> Result<Dist<State>, SemanticsError> {
        for s in body {
            d = self.stmt(s, d)?;
        }
        Ok(d)
    }

    fn split(&self, g: &crate::lang::Expr, d: Dist<State>) -> Result<(Dist<State>, Dist<State>), SemanticsError> {
        let (mut yes, mut no) = (Dist::empty(), Dist::empty());
        for (s, p) in d.pmf {
            match eval(g, &s, &self.c.funs)? {
                Value::Bool(true) => yes.add(s, p),
                Value::Bool(false) => no.add(s, p),
                v => return Err(SemanticsError::Type(format!("guard evaluates to {v}"))),
            }
        }
        Ok((yes, no))
    }

    fn stmt(&mut self, st: &Stmt, d: Dist<State>) -> Result<Dist<State>, SemanticsError> {
        let target = |p: &Place| {
            p.var().cloned().ok_or_else(|| SemanticsError::Type("array access was not desugared".into()))
        };
        match &st.kind {
            StmtKind::Assign(place, e) => {
                let v = target(place)?;
                let mut out = Dist::empty();
                for (mut s, p) in d.pmf {
                    let val = eval(e, &s, &self.c.funs)?;
                    s.insert(v.clone(), val);
                    out.add(s, p);
                }
                Ok(out)
            }
            StmtKind::Sample(places, de) => {
                let vs = places.iter().map(target).collect::<Result<Vec<_>, _>>()?;
                let mut out = Dist::empty();
                for (s, p) in d.pmf {
                    let draw = eval_dist_with(&s, de, self.c)?;
                    for (vals, q) in draw.pmf {
                        let mut t = s.clone();
                        for (v, x) in vs.iter().zip(vals) {
                            t.insert(v.clone(), x);
                        }
                        out.add(t, &p * q);
                    }
                }
                Ok(out)
            }
            StmtKind::If(g, a, b) => {
                let (yes, no) = self.split(g, d)?;
                let mut out = self.block(a, yes)?;
                for (s, p) in self.block(b, no)?.pmf {
                    out.add(s, p);
                }
                Ok(out)
            }
            StmtKind::While(g, body, _) => {
                let mut cur = d;
                let mut out = Dist::empty();
                let mut done = 0usize;
                loop {
                    let (cont, exit) = self.split(g, cur)?;
                    for (s, p) in exit.pmf {
                        out.add(s, p);
                    }
                    if cont.pmf.is_empty() {
                        break;
                    }
                    let m = cont.mass();
                    if m <= self.policy.residual_target || done >= self.policy.max_iterations {
                        if m > self.policy.ceiling {
                            return Err(SemanticsError::ResidualTooLarge { residual: m, iterations: done });
                        }
                        self.residual += m;
                        break;
                    }
                    cur = self.block(body, cont)?;
                    done += 1;
                }
                Ok(out)
            }
            StmtKind::For(..) => unreachable!("for loops are desugared before execution"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, VarId};

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    const FAIR_COIN: &str =
        "param p: real\nx <- false\ny <- false\nwhile x == y { (x, y) ~ bern(p) * bern(p) }\nreturn x";

    #[test]
    fn single_sample() {
        let d = interpret(&parse("x ~ bern(1/4)").unwrap(), &State::new(), &UnrollPolicy::default()).unwrap();
        let m = d.marginal_values(&[VarId::new("x")]).unwrap();
        assert_eq!(m.prob(&vec![Value::Bool(true)]), r(1, 4));
        assert_eq!(d.residual, r(0, 1));
    }

    #[test]
    fn fair_coin_residual_after_fifty_iterations() {
        let s0: State = [(VarId::new("p"), Value::Rat(r(1, 3)))].into_iter().collect();
        let d = interpret(&parse(FAIR_COIN).unwrap(), &s0, &UnrollPolicy::iterations(50)).unwrap();
        // each iteration continues with probability 1 - 2p(1-p) = 5/9
        let expect = num_traits::pow(r(5, 9), 50);
        assert_eq!(d.residual, expect);
        assert_eq!(d.total(), r(1, 1));
    }

    #[test]
    fn nonterminating_loop_hits_ceiling() {
        let p = parse("x <- true\nwhile x { x ~ bern(1) }").unwrap();
        let pol = UnrollPolicy { max_iterations: 20, ..UnrollPolicy::default() };
        assert!(matches!(interpret(&p, &State::new(), &pol), Err(SemanticsError::ResidualTooLarge { .. })));
    }

    #[test]
    fn missing_input_is_an_error() {
        assert!(matches!(
            interpret(&parse(FAIR_COIN).unwrap(), &State::new(), &UnrollPolicy::default()),
            Err(SemanticsError::Unbound(_))
        ));
    }
}
