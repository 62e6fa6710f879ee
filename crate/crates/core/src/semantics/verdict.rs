use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::dist::ResidualDist;
use super::value::{Builtin, Value};
use super::SemanticsError;
use crate::lang::{Expr, Type, VarId};

/// Outcome of an oracle check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The property holds up to `tolerance` (zero means exactly).
    /// `skipped` lists conditioning values with zero mass.
    Holds { tolerance: BigRational, skipped: Vec<Vec<Value>> },
    /// `witness` names the offending values; `gap` is the exact discrepancy.
    Refuted { witness: String, gap: BigRational },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }

    pub fn gap(&self) -> Option<&BigRational> {
        match self {
            Verdict::Refuted { gap, .. } => Some(gap),
            Verdict::Holds { .. } => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds { tolerance, .. } if tolerance.is_zero() => write!(f, "holds exactly"),
            Verdict::Holds { tolerance, .. } => write!(f, "holds within {tolerance}"),
            Verdict::Refuted { witness, gap } => write!(f, "refuted at {witness} (gap {gap})"),
        }
    }
}

fn tuple(vals: &[Value]) -> String {
    if vals.len() == 1 {
        return vals[0].to_string();
    }
    format!("({})", vals.iter().map(Value::to_string).collect::<Vec<_>>().join(", "))
}

/// All values of a finite type.
pub fn finite_values(t: &Type) -> Option<Vec<Value>> {
    match t {
        Type::Bool => Some(vec![Value::Bool(false), Value::Bool(true)]),
        Type::Range(lo, hi) => Some((*lo..=*hi).map(Value::int).collect()),
        _ => None,
    }
}

/// Cartesian product of finite types.
pub fn finite_domain(types: &[Type]) -> Option<Vec<Vec<Value>>> {
    let mut out = vec![Vec::new()];
    for t in types {
        let vals = finite_values(t)?;
        out = out
            .into_iter()
            .flat_map(|prefix| {
                vals.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    Some(out)
}

/// Uniformity of `vars` over `domain`: every tuple in the domain has mass
/// within the residual of `(1 - residual) / |domain|` and mass outside the
/// domain is at most the residual.
pub fn check_uniform(d: &ResidualDist, vars: &[VarId], domain: &[Vec<Value>]) -> Result<Verdict, SemanticsError> {
    let m = d.marginal_values(vars)?;
    let r = &d.residual;
    if domain.is_empty() {
        return Err(SemanticsError::Type("uniformity over an empty domain".into()));
    }
    let n = BigRational::from_integer(BigInt::from(domain.len()));
    let target = (BigRational::one() - r) / n;
    let probs: Vec<BigRational> = domain.iter().map(|b| m.prob(b)).collect();

    let outside: BigRational =
        m.pmf.iter().filter(|(k, _)| !domain.contains(k)).fold(BigRational::zero(), |a, (_, p)| a + p);
    if &outside > r {
        let (k, _) = m.pmf.iter().filter(|(k, _)| !domain.contains(k)).max_by(|a, b| a.1.cmp(b.1)).unwrap();
        return Ok(Verdict::Refuted { witness: format!("{} outside the domain", tuple(k)), gap: outside });
    }
    if probs.iter().all(|p| (p - &target).abs() <= *r) {
        return Ok(Verdict::Holds { tolerance: r.clone(), skipped: Vec::new() });
    }
    let hi = (0..domain.len()).max_by(|&a, &b| probs[a].cmp(&probs[b])).unwrap();
    let lo = (0..domain.len()).min_by(|&a, &b| probs[a].cmp(&probs[b])).unwrap();
    if hi == lo || probs[hi] == probs[lo] {
        // all equal but off target: only possible with mass outside the domain
        return Ok(Verdict::Refuted { witness: tuple(&domain[hi]), gap: (&probs[hi] - &target).abs() });
    }
    Ok(Verdict::Refuted {
        witness: format!("({}, {})", tuple(&domain[hi]), tuple(&domain[lo])),
        gap: &probs[hi] - &probs[lo],
    })
}

fn independence_tolerance(r: &BigRational) -> BigRational {
    // each probability is known up to r; products of two such values drift
    // by at most 2r + r^2 <= 3r
    r * BigRational::from_integer(3.into())
}

pub fn check_independent(d: &ResidualDist, v: &VarId, w: &VarId) -> Result<Verdict, SemanticsError> {
    let joint = d.marginal_values(&[v.clone(), w.clone()])?;
    let mv = joint.map(|t| t[0].clone());
    let mw = joint.map(|t| t[1].clone());
    let tol = independence_tolerance(&d.residual);
    let mut worst: Option<(BigRational, String)> = None;
    for (a, pa) in &mv.pmf {
        for (b, pb) in &mw.pmf {
            let pj = joint.prob(&vec![a.clone(), b.clone()]);
            let gap = (pj - pa * pb).abs();
            if gap > tol && worst.as_ref().is_none_or(|(g, _)| gap > *g) {
                worst = Some((gap, format!("({a}, {b})")));
            }
        }
    }
    Ok(match worst {
        None => Verdict::Holds { tolerance: tol, skipped: Vec::new() },
        Some((gap, witness)) => Verdict::Refuted { witness, gap },
    })
}

/// Conditional independence of `v` and `w` given `c`. Values of `c` listed
/// in `c_domain` that carry no mass are reported as skipped.
pub fn check_cond_independent(
    d: &ResidualDist,
    v: &VarId,
    w: &VarId,
    c: &VarId,
    c_domain: Option<&[Value]>,
) -> Result<Verdict, SemanticsError> {
    let joint = d.marginal_values(&[v.clone(), w.clone(), c.clone()])?;
    let mc = joint.map(|t| t[2].clone());
    let tol = independence_tolerance(&d.residual);
    let mut worst: Option<(BigRational, String)> = None;
    for (cv, pc) in &mc.pmf {
        let slice = |pick: &dyn Fn(&Vec<Value>) -> Value| {
            let mut m: BTreeMap<Value, BigRational> = BTreeMap::new();
            for (t, p) in &joint.pmf {
                if &t[2] == cv {
                    *m.entry(pick(t)).or_insert_with(BigRational::zero) += p;
                }
            }
            m
        };
        let mv = slice(&|t| t[0].clone());
        let mw = slice(&|t| t[1].clone());
        for (a, pa) in &mv {
            for (b, pb) in &mw {
                let pj = joint.prob(&vec![a.clone(), b.clone(), cv.clone()]);
                // Pr[a,b|c] = Pr[a|c] Pr[b|c]  <=>  Pr[a,b,c] Pr[c] = Pr[a,c] Pr[b,c]
                let gap = ((pj * pc - pa * pb) / pc / pc).abs();
                if gap > tol && worst.as_ref().is_none_or(|(g, _)| gap > *g) {
                    worst = Some((gap, format!("({a}, {b}) given {cv}")));
                }
            }
        }
    }
    let skipped = c_domain
        .unwrap_or_default()
        .iter()
        .filter(|x| !mc.pmf.contains_key(*x))
        .map(|x| vec![x.clone()])
        .collect();
    Ok(match worst {
        None => Verdict::Holds { tolerance: tol, skipped },
        Some((gap, witness)) => Verdict::Refuted { witness, gap },
    })
}

/// `Pr_{d1}[e1] = Pr_{d2}[e2]` up to the sum of the residuals.
pub fn check_equality(
    d1: &ResidualDist,
    e1: &Expr,
    d2: &ResidualDist,
    e2: &Expr,
    funs: &BTreeMap<String, Builtin>,
) -> Result<Verdict, SemanticsError> {
    let p1 = d1.prob_of(e1, funs)?;
    let p2 = d2.prob_of(e2, funs)?;
    let tol = &d1.residual + &d2.residual;
    let gap = (&p1 - &p2).abs();
    Ok(if gap <= tol {
        Verdict::Holds { tolerance: tol, skipped: Vec::new() }
    } else {
        Verdict::Refuted { witness: format!("Pr = {p1} vs {p2}"), gap }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, parse_expr};
    use crate::semantics::{interpret, State, UnrollPolicy};

    fn run(src: &str) -> ResidualDist {
        interpret(&parse(src).unwrap(), &State::new(), &UnrollPolicy::default()).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn x() -> VarId {
        VarId::new("x")
    }

    #[test]
    fn biased_coin_is_not_uniform() {
        let d = run("x ~ bern(1/4)");
        let dom = finite_domain(&[Type::Bool]).unwrap();
        let v = check_uniform(&d, &[x()], &dom).unwrap();
        assert_eq!(v, Verdict::Refuted { witness: "(false, true)".into(), gap: r(1, 2) });
        assert!(check_uniform(&run("x ~ bern(1/2)"), &[x()], &dom).unwrap().holds());
    }

    #[test]
    fn copies_are_dependent() {
        let d = run("x ~ bern(1/2)\ny <- x");
        let v = check_independent(&d, &x(), &VarId::new("y")).unwrap();
        assert_eq!(v.gap(), Some(&r(1, 4)));
        let d = run("x ~ bern(1/2)\ny ~ bern(1/3)");
        assert!(check_independent(&d, &x(), &VarId::new("y")).unwrap().holds());
    }

    #[test]
    fn conditional_independence() {
        let d = run("x ~ bern(1/2)\nw <- x\nw2 <- x\ny <- true");
        let (w, w2, y) = (VarId::new("w"), VarId::new("w2"), VarId::new("y"));
        assert!(!check_cond_independent(&d, &w, &w2, &y, None).unwrap().holds());
        // conditioning on a variable itself is degenerate
        assert!(check_cond_independent(&d, &w, &w2, &w, None).unwrap().holds());
        let dom = [Value::Bool(false), Value::Bool(true)];
        let d = run("x ~ bern(1/2)\nz ~ bern(1/2)\ny <- true");
        let Verdict::Holds { skipped, .. } = check_cond_independent(&d, &x(), &VarId::new("z"), &y, Some(&dom)).unwrap()
        else {
            panic!()
        };
        assert_eq!(skipped, vec![vec![Value::Bool(false)]]);
    }

    #[test]
    fn equality_gap() {
        let (a, b) = (run("x ~ bern(1/4)"), run("x ~ bern(1/2)"));
        let e = parse_expr("x").unwrap();
        let none = BTreeMap::new();
        assert_eq!(check_equality(&a, &e, &b, &e, &none).unwrap().gap(), Some(&r(1, 4)));
        assert!(check_equality(&a, &e, &a, &e, &none).unwrap().holds());
    }
}
