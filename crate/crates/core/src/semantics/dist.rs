use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::value::{eval, Builtin, State, Value};
use super::SemanticsError;
use crate::lang::{DistExpr, Expr, VarId};

/// A finitely supported distribution with exact probabilities. Entries with
/// zero mass are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dist<T: Ord> {
    pub pmf: BTreeMap<T, BigRational>,
}

impl<T: Ord + Clone> Dist<T> {
    pub fn point(x: T) -> Self {
        Dist { pmf: BTreeMap::from([(x, BigRational::one())]) }
    }

    pub fn empty() -> Self {
        Dist { pmf: BTreeMap::new() }
    }

    pub fn add(&mut self, x: T, p: BigRational) {
        if p.is_zero() {
            return;
        }
        let e = self.pmf.entry(x).or_insert_with(BigRational::zero);
        *e += p;
    }

    pub fn mass(&self) -> BigRational {
        self.pmf.values().fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn prob(&self, x: &T) -> BigRational {
        self.pmf.get(x).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn map<U: Ord + Clone>(&self, f: impl Fn(&T) -> U) -> Dist<U> {
        let mut out = Dist::empty();
        for (x, p) in &self.pmf {
            out.add(f(x), p.clone());
        }
        out
    }

    /// Product distribution; the result concatenates component tuples.
    pub fn product(&self, other: &Dist<T>, join: impl Fn(&T, &T) -> T) -> Dist<T> {
        let mut out = Dist::empty();
        for (a, p) in &self.pmf {
            for (b, q) in &other.pmf {
                out.add(join(a, b), p * q);
            }
        }
        out
    }
}

/// Output of a possibly truncated execution: `mass(pmf) + residual = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualDist {
    pub pmf: Dist<State>,
    pub residual: BigRational,
}

impl ResidualDist {
    pub fn exact(pmf: Dist<State>) -> Self {
        ResidualDist { pmf, residual: BigRational::zero() }
    }

    /// Distribution of the tuple of `vars`. States lacking a variable map it
    /// to `None`.
    pub fn marginal(&self, vars: &[VarId]) -> Dist<Vec<Option<Value>>> {
        self.pmf.map(|s| vars.iter().map(|v| s.get(v).cloned()).collect())
    }

    /// Like [`marginal`](Self::marginal) but fails when a variable is missing.
    pub fn marginal_values(&self, vars: &[VarId]) -> Result<Dist<Vec<Value>>, SemanticsError> {
        let mut out = Dist::empty();
        for (s, p) in &self.pmf.pmf {
            let t = vars
                .iter()
                .map(|v| s.get(v).cloned().ok_or_else(|| SemanticsError::Unbound(v.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            out.add(t, p.clone());
        }
        Ok(out)
    }

    /// Probability of the event `e`.
    pub fn prob_of(&self, e: &Expr, funs: &BTreeMap<String, Builtin>) -> Result<BigRational, SemanticsError> {
        let mut total = BigRational::zero();
        for (s, p) in &self.pmf.pmf {
            let v = eval(e, s, funs)?;
            match v.as_bool() {
                Some(true) => total += p,
                Some(false) => {}
                None => return Err(SemanticsError::Type(format!("event evaluates to {v}"))),
            }
        }
        Ok(total)
    }

    pub fn total(&self) -> BigRational {
        self.pmf.mass() + &self.residual
    }
}

/// Concrete meaning for the symbolic parts of a program.
#[derive(Clone, Debug, Default)]
pub struct Concrete {
    pub dists: BTreeMap<String, DistExpr>,
    pub funs: BTreeMap<String, Builtin>,
}

/// Evaluates a distribution expression to a pmf over value tuples.
pub fn eval_dist(s: &State, d: &DistExpr) -> Result<Dist<Vec<Value>>, SemanticsError> {
    eval_dist_with(s, d, &Concrete::default())
}

pub fn eval_dist_with(s: &State, d: &DistExpr, c: &Concrete) -> Result<Dist<Vec<Value>>, SemanticsError> {
    match d {
        DistExpr::Bern(e) => {
            let v = eval(e, s, &c.funs)?;
            let p = v.as_rational().ok_or_else(|| SemanticsError::Type(format!("bern parameter {v}")))?;
            if p.is_negative() || p > BigRational::one() {
                return Err(SemanticsError::BernOutOfRange(p));
            }
            let mut out = Dist::empty();
            out.add(vec![Value::Bool(true)], p.clone());
            out.add(vec![Value::Bool(false)], BigRational::one() - p);
            Ok(out)
        }
        DistExpr::UniformInt(lo, hi) => {
            let n = BigInt::from(hi - lo + 1);
            let mut out = Dist::empty();
            for k in *lo..=*hi {
                out.add(vec![Value::int(k)], BigRational::new(BigInt::one(), n.clone()));
            }
            Ok(out)
        }
        DistExpr::Opaque(name, _) => match c.dists.get(name) {
            Some(DistExpr::Opaque(..)) | None => Err(SemanticsError::Opaque(name.clone())),
            Some(inner) => {
                let r = eval_dist_with(s, inner, c)?;
                if inner.arity() != 1 {
                    return Err(SemanticsError::Type(format!("'{name}' must be bound to a single distribution")));
                }
                Ok(r)
            }
        },
        DistExpr::Product(ds) => {
            let mut acc = Dist::point(Vec::new());
            for d in ds {
                let next = eval_dist_with(s, d, c)?;
                acc = acc.product(&next, |a, b| a.iter().chain(b).cloned().collect());
            }
            Ok(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_dist;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn bern_product() {
        let s: State = [(VarId::new("p"), Value::Rat(r(1, 3)))].into_iter().collect();
        let d = eval_dist(&s, &parse_dist("bern(p) * bern(p)").unwrap()).unwrap();
        let t = Value::Bool(true);
        let f = Value::Bool(false);
        assert_eq!(d.prob(&vec![t.clone(), t.clone()]), r(1, 9));
        assert_eq!(d.prob(&vec![t.clone(), f.clone()]), r(2, 9));
        assert_eq!(d.prob(&vec![f.clone(), t]), r(2, 9));
        assert_eq!(d.prob(&vec![f.clone(), f]), r(4, 9));
        assert_eq!(d.mass(), r(1, 1));
    }

    #[test]
    fn uniform_and_errors() {
        let d = eval_dist(&State::new(), &DistExpr::UniformInt(1, 6)).unwrap();
        assert!(d.pmf.values().all(|p| *p == r(1, 6)));
        assert_eq!(d.pmf.len(), 6);
        assert!(matches!(
            eval_dist(&State::new(), &parse_dist("bern(3/2)").unwrap()),
            Err(SemanticsError::BernOutOfRange(_))
        ));
        let op = DistExpr::Opaque("mu".into(), crate::lang::Type::Bool);
        assert!(matches!(eval_dist(&State::new(), &op), Err(SemanticsError::Opaque(_))));
    }

    #[test]
    fn degenerate_bern_drops_zero_mass() {
        let d = eval_dist(&State::new(), &parse_dist("bern(1)").unwrap()).unwrap();
        assert_eq!(d.pmf.len(), 1);
    }
}
