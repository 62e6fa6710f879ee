//! Exact-inference interpreter over rational arithmetic. Used as the
//! independent oracle for every property the synthesizer claims.

mod dist;
mod interp;
mod value;
mod verdict;

pub use dist::{eval_dist, eval_dist_with, Concrete, Dist, ResidualDist};
pub use interp::{interpret, interpret_with, UnrollPolicy};
pub use value::{eval, Builtin, State, Value};
pub use verdict::{
    check_cond_independent, check_equality, check_independent, check_uniform, finite_domain, finite_values, Verdict,
};

use num_rational::BigRational;
use thiserror::Error;

use crate::lang::{OracleArg, OracleInstance, Program, Type, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("bern parameter {0} outside [0, 1]")]
    BernOutOfRange(BigRational),
    #[error("opaque distribution '{0}' has no concrete instantiation")]
    Opaque(String),
    #[error("uninterpreted function '{0}' has no concrete instantiation")]
    UninterpretedFunction(String),
    #[error("variable '{0}' is unbound")]
    Unbound(VarId),
    #[error("{0}")]
    Type(String),
    #[error("loop mass {residual} still pending after {iterations} iterations")]
    ResidualTooLarge { residual: BigRational, iterations: usize },
}

/// Turns an oracle instance into an initial state and concrete symbols.
pub fn instantiate(p: &Program, inst: &OracleInstance) -> Result<(State, Concrete), SemanticsError> {
    let mut s0 = State::new();
    let mut c = Concrete::default();
    for (name, arg) in &inst.bindings {
        let var = VarId::new(name.clone());
        if let Some((_, t)) = p.params.iter().find(|(v, _)| *v == var) {
            let v = match (arg, t) {
                (OracleArg::Bool(b), Type::Bool) => Value::Bool(*b),
                (OracleArg::Num(r), Type::Real) => Value::Rat(r.clone()),
                (OracleArg::Num(r), t) if t.is_integral() && r.is_integer() => Value::Int(r.to_integer()),
                _ => return Err(SemanticsError::Type(format!("cannot bind input '{name}: {t}' to {arg:?}"))),
            };
            s0.insert(var, v);
        } else if p.dist_type(name).is_some() {
            match arg {
                OracleArg::Dist(d) => {
                    c.dists.insert(name.clone(), d.clone());
                }
                _ => return Err(SemanticsError::Type(format!("'{name}' needs a distribution"))),
            }
        } else if p.fun(name).is_some() {
            match arg {
                OracleArg::Fun(f) => {
                    let b = Builtin::from_name(f).ok_or_else(|| SemanticsError::UninterpretedFunction(f.clone()))?;
                    c.funs.insert(name.clone(), b);
                }
                _ => return Err(SemanticsError::Type(format!("'{name}' needs a function name"))),
            }
        } else {
            return Err(SemanticsError::Type(format!("oracle binds unknown symbol '{name}'")));
        }
    }
    Ok((s0, c))
}
