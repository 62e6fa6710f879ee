use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::SemanticsError;
use crate::lang::{BinOp, Expr, UnOp, VarId};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    Rat(BigRational),
}

impl Value {
    pub fn int(v: i64) -> Value {
        Value::Int(BigInt::from(v))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Value::Bool(_) => None,
            Value::Int(n) => Some(BigRational::from_integer(n.clone())),
            Value::Rat(r) => Some(r.clone()),
        }
    }

    /// Numeric value with the narrowest representation.
    pub fn num(r: BigRational) -> Value {
        if r.is_integer() {
            Value::Int(r.to_integer())
        } else {
            Value::Rat(r)
        }
    }

    /// Converts a literal expression (`true`, `3`, `-1/2`) to a value.
    pub fn from_literal(e: &Expr) -> Option<Value> {
        match e {
            Expr::Bool(b) => Some(Value::Bool(*b)),
            Expr::Int(n) => Some(Value::Int(n.clone())),
            Expr::Rat(r) => Some(Value::Rat(r.clone())),
            Expr::Unary(UnOp::Neg, a) => match Value::from_literal(a)? {
                Value::Int(n) => Some(Value::Int(-n)),
                Value::Rat(r) => Some(Value::Rat(-r)),
                Value::Bool(_) => None,
            },
            _ => None,
        }
    }

    /// Numeric equality across `Int` and `Rat`.
    pub fn same(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            _ => match (self.as_rational(), other.as_rational()) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            },
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Rat(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

/// A valuation of program variables.
pub type State = BTreeMap<VarId, Value>;

/// Concrete interpretations of declared uninterpreted functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    And,
    Or,
    Xor,
    Nand,
    Nor,
    Iff,
    Implies,
    Not,
    /// Returns its first argument.
    Fst,
    /// Returns its second argument.
    Snd,
    True,
    False,
    Add,
    Mul,
    Min,
    Max,
}

impl Builtin {
    pub const ALL: [Builtin; 16] = [
        Builtin::And,
        Builtin::Or,
        Builtin::Xor,
        Builtin::Nand,
        Builtin::Nor,
        Builtin::Iff,
        Builtin::Implies,
        Builtin::Not,
        Builtin::Fst,
        Builtin::Snd,
        Builtin::True,
        Builtin::False,
        Builtin::Add,
        Builtin::Mul,
        Builtin::Min,
        Builtin::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::And => "and",
            Builtin::Or => "or",
            Builtin::Xor => "xor",
            Builtin::Nand => "nand",
            Builtin::Nor => "nor",
            Builtin::Iff => "iff",
            Builtin::Implies => "implies",
            Builtin::Not => "not",
            Builtin::Fst => "fst",
            Builtin::Snd => "snd",
            Builtin::True => "true",
            Builtin::False => "false",
            Builtin::Add => "add",
            Builtin::Mul => "mul",
            Builtin::Min => "min",
            Builtin::Max => "max",
        }
    }

    pub fn from_name(s: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name().eq_ignore_ascii_case(s))
    }

    pub fn apply(self, args: &[Value]) -> Result<Value, SemanticsError> {
        let err = || SemanticsError::Type(format!("bad arguments for '{}'", self.name()));
        let bools = || args.iter().map(Value::as_bool).collect::<Option<Vec<bool>>>().ok_or_else(err);
        let nums = || args.iter().map(Value::as_rational).collect::<Option<Vec<_>>>().ok_or_else(err);
        Ok(match self {
            Builtin::And => Value::Bool(bools()?.iter().all(|b| *b)),
            Builtin::Or => Value::Bool(bools()?.iter().any(|b| *b)),
            Builtin::Xor => Value::Bool(bools()?.iter().fold(false, |a, b| a ^ b)),
            Builtin::Nand => Value::Bool(!bools()?.iter().all(|b| *b)),
            Builtin::Nor => Value::Bool(!bools()?.iter().any(|b| *b)),
            Builtin::Iff => {
                let b = bools()?;
                Value::Bool(b.windows(2).all(|w| w[0] == w[1]))
            }
            Builtin::Implies => match bools()?.as_slice() {
                [a, b] => Value::Bool(!a || *b),
                _ => return Err(err()),
            },
            Builtin::Not => match bools()?.as_slice() {
                [a] => Value::Bool(!a),
                _ => return Err(err()),
            },
            Builtin::Fst => args.first().cloned().ok_or_else(err)?,
            Builtin::Snd => args.get(1).cloned().ok_or_else(err)?,
            Builtin::True => Value::Bool(true),
            Builtin::False => Value::Bool(false),
            Builtin::Add => Value::num(nums()?.into_iter().fold(BigRational::zero(), |a, b| a + b)),
            Builtin::Mul => Value::num(nums()?.into_iter().fold(BigRational::one(), |a, b| a * b)),
            Builtin::Min => Value::num(nums()?.into_iter().min().ok_or_else(err)?),
            Builtin::Max => Value::num(nums()?.into_iter().max().ok_or_else(err)?),
        })
    }
}

/// Evaluates `e` in state `s`; `funs` interprets uninterpreted functions.
pub fn eval(e: &Expr, s: &State, funs: &BTreeMap<String, Builtin>) -> Result<Value, SemanticsError> {
    let num = |v: Value| v.as_rational().ok_or_else(|| SemanticsError::Type(format!("expected a number, got {v}")));
    let boolean = |v: Value| v.as_bool().ok_or_else(|| SemanticsError::Type(format!("expected a bool, got {v}")));
    Ok(match e {
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Int(n) => Value::Int(n.clone()),
        Expr::Rat(r) => Value::Rat(r.clone()),
        Expr::Var(v) => s.get(v).cloned().ok_or_else(|| SemanticsError::Unbound(v.clone()))?,
        Expr::Index(a, _) => return Err(SemanticsError::Type(format!("array access '{a}[..]' was not desugared"))),
        Expr::Unary(UnOp::Not, a) => Value::Bool(!boolean(eval(a, s, funs)?)?),
        Expr::Unary(UnOp::Neg, a) => match eval(a, s, funs)? {
            Value::Int(n) => Value::Int(-n),
            v => Value::Rat(-num(v)?),
        },
        Expr::Binary(op, a, b) => {
            // && and || short-circuit
            if matches!(op, BinOp::And | BinOp::Or) {
                let l = boolean(eval(a, s, funs)?)?;
                if (*op == BinOp::And) != l {
                    return Ok(Value::Bool(l));
                }
                return Ok(Value::Bool(boolean(eval(b, s, funs)?)?));
            }
            let (l, r) = (eval(a, s, funs)?, eval(b, s, funs)?);
            match op {
                BinOp::Eq => Value::Bool(l.same(&r)),
                BinOp::Ne => Value::Bool(!l.same(&r)),
                BinOp::Lt => Value::Bool(num(l)? < num(r)?),
                BinOp::Le => Value::Bool(num(l)? <= num(r)?),
                BinOp::Gt => Value::Bool(num(l)? > num(r)?),
                BinOp::Ge => Value::Bool(num(l)? >= num(r)?),
                BinOp::Add | BinOp::Sub | BinOp::Mul => {
                    let ints = matches!((&l, &r), (Value::Int(_), Value::Int(_)));
                    let (x, y) = (num(l)?, num(r)?);
                    let z = match op {
                        BinOp::Add => x + y,
                        BinOp::Sub => x - y,
                        _ => x * y,
                    };
                    if ints {
                        Value::Int(z.to_integer())
                    } else {
                        Value::Rat(z)
                    }
                }
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
        Expr::Ite(c, a, b) => {
            if boolean(eval(c, s, funs)?)? {
                eval(a, s, funs)?
            } else {
                eval(b, s, funs)?
            }
        }
        Expr::Call(f, args) => {
            let b = funs.get(f).ok_or_else(|| SemanticsError::UninterpretedFunction(f.clone()))?;
            let vals = args.iter().map(|a| eval(a, s, funs)).collect::<Result<Vec<_>, _>>()?;
            b.apply(&vals)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_expr;

    fn st(pairs: &[(&str, Value)]) -> State {
        pairs.iter().map(|(n, v)| (VarId::new(*n), v.clone())).collect()
    }

    #[test]
    fn arithmetic_and_logic() {
        let s = st(&[("x", Value::int(3)), ("b", Value::Bool(false))]);
        let none = BTreeMap::new();
        let ev = |t: &str| eval(&parse_expr(t).unwrap(), &s, &none).unwrap();
        assert_eq!(ev("x * 2 - 1"), Value::int(5));
        assert_eq!(ev("x + 1/2"), Value::Rat(BigRational::new(7.into(), 2.into())));
        assert_eq!(ev("ite(b, 1, x) == 3"), Value::Bool(true));
        assert_eq!(ev("b && y"), Value::Bool(false));
        assert!(eval(&parse_expr("y").unwrap(), &s, &none).is_err());
    }

    #[test]
    fn builtins() {
        let t = Value::Bool(true);
        let f = Value::Bool(false);
        assert_eq!(Builtin::Xor.apply(&[t.clone(), f.clone()]).unwrap(), t);
        assert_eq!(Builtin::And.apply(&[t.clone(), f.clone()]).unwrap(), f);
        assert_eq!(Builtin::from_name("OR"), Some(Builtin::Or));
    }
}
