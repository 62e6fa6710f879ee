use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

/// A program variable, optionally tagged with the index of the program copy
/// it belongs to (self-composition uses tags 1..=4).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId {
    pub name: String,
    pub tag: Option<u8>,
}

impl VarId {
    pub fn new(name: impl Into<String>) -> Self {
        VarId { name: name.into(), tag: None }
    }

    pub fn tagged(name: impl Into<String>, tag: u8) -> Self {
        VarId { name: name.into(), tag: Some(tag) }
    }

    pub fn with_tag(&self, tag: u8) -> Self {
        VarId { name: self.name.clone(), tag: Some(tag) }
    }

    pub fn untagged(&self) -> Self {
        VarId { name: self.name.clone(), tag: None }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            Some(t) => write!(f, "{}!{}", self.name, t),
            None => write!(f, "{}", self.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Bool,
    Int,
    Real,
    /// Integers in `lo..=hi`.
    Range(i64, i64),
}

impl Type {
    pub fn is_finite(&self) -> bool {
        matches!(self, Type::Bool | Type::Range(..))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Int | Type::Real | Type::Range(..))
    }

    pub fn is_integral(&self) -> bool {
        matches!(self, Type::Int | Type::Range(..))
    }

    /// Widened type used for unification (`Range` collapses to `Int`).
    pub fn base(&self) -> Type {
        match self {
            Type::Range(..) => Type::Int,
            t => t.clone(),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => write!(f, "bool"),
            Type::Int => write!(f, "int"),
            Type::Real => write!(f, "real"),
            Type::Range(lo, hi) => write!(f, "range({lo}, {hi})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul => 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Bool(bool),
    Int(BigInt),
    /// Rational literal `n/d`, always stored in lowest terms with `d > 1`.
    Rat(BigRational),
    Var(VarId),
    /// Array element `a[e]`; only legal inside `for` loops before desugaring.
    Index(String, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    /// Application of a declared uninterpreted function.
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(VarId::new(name))
    }

    pub fn int(v: i64) -> Expr {
        Expr::Int(BigInt::from(v))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn and_all(mut es: Vec<Expr>) -> Expr {
        match es.len() {
            0 => Expr::Bool(true),
            1 => es.pop().unwrap(),
            _ => {
                let mut it = es.into_iter();
                let first = it.next().unwrap();
                it.fold(first, |acc, e| Expr::bin(BinOp::And, acc, e))
            }
        }
    }

    /// Calls `f` on every variable occurrence.
    pub fn visit_vars(&self, f: &mut impl FnMut(&VarId)) {
        match self {
            Expr::Var(v) => f(v),
            Expr::Index(_, e) | Expr::Unary(_, e) => e.visit_vars(f),
            Expr::Binary(_, a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Expr::Ite(c, a, b) => {
                c.visit_vars(f);
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit_vars(f)),
            Expr::Bool(_) | Expr::Int(_) | Expr::Rat(_) => {}
        }
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.visit_vars(&mut |v| {
            if !out.contains(v) {
                out.push(v.clone())
            }
        });
        out
    }

    /// Rewrites every variable occurrence.
    pub fn map_vars(&self, f: &mut impl FnMut(&VarId) -> Expr) -> Expr {
        match self {
            Expr::Var(v) => f(v),
            Expr::Index(a, e) => Expr::Index(a.clone(), Box::new(e.map_vars(f))),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.map_vars(f))),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Expr::Ite(c, a, b) => {
                Expr::Ite(Box::new(c.map_vars(f)), Box::new(a.map_vars(f)), Box::new(b.map_vars(f)))
            }
            Expr::Call(n, args) => Expr::Call(n.clone(), args.iter().map(|a| a.map_vars(f)).collect()),
            Expr::Bool(_) | Expr::Int(_) | Expr::Rat(_) => self.clone(),
        }
    }

    /// Splits a conjunction into its conjuncts.
    pub fn conjuncts(&self) -> Vec<Expr> {
        match self {
            Expr::Binary(BinOp::And, a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            e => vec![e.clone()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DistExpr {
    Bern(Expr),
    /// Uniform over the integers `lo..=hi`.
    UniformInt(i64, i64),
    /// A named distribution with unknown probability mass function.
    Opaque(String, Type),
    Product(Vec<DistExpr>),
}

impl DistExpr {
    /// Number of values produced by one draw.
    pub fn arity(&self) -> usize {
        match self {
            DistExpr::Product(ds) => ds.iter().map(DistExpr::arity).sum(),
            _ => 1,
        }
    }

    /// The primitive (non-product) components in order.
    pub fn components(&self) -> Vec<DistExpr> {
        match self {
            DistExpr::Product(ds) => ds.iter().flat_map(DistExpr::components).collect(),
            d => vec![d.clone()],
        }
    }

    pub fn product(ds: Vec<DistExpr>) -> DistExpr {
        let comps: Vec<DistExpr> = ds.iter().flat_map(DistExpr::components).collect();
        if comps.len() == 1 {
            comps.into_iter().next().unwrap()
        } else {
            DistExpr::Product(comps)
        }
    }

    pub fn result_types(&self) -> Vec<Type> {
        self.components()
            .iter()
            .map(|d| match d {
                DistExpr::Bern(_) => Type::Bool,
                DistExpr::UniformInt(lo, hi) => Type::Range(*lo, *hi),
                DistExpr::Opaque(_, t) => t.clone(),
                DistExpr::Product(_) => unreachable!("components are flat"),
            })
            .collect()
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&VarId) -> Expr) -> DistExpr {
        match self {
            DistExpr::Bern(e) => DistExpr::Bern(e.map_vars(f)),
            DistExpr::Product(ds) => DistExpr::Product(ds.iter().map(|d| d.map_vars(f)).collect()),
            d => d.clone(),
        }
    }

    pub fn visit_vars(&self, f: &mut impl FnMut(&VarId)) {
        match self {
            DistExpr::Bern(e) => e.visit_vars(f),
            DistExpr::Product(ds) => ds.iter().for_each(|d| d.visit_vars(f)),
            _ => {}
        }
    }
}

/// An assignable location. `Index` only survives until loops are desugared.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Var(VarId),
    Index(String, Expr),
}

impl Place {
    pub fn var(&self) -> Option<&VarId> {
        match self {
            Place::Var(v) => Some(v),
            Place::Index(..) => None,
        }
    }
}

/// Source position of a statement. Positions never take part in AST equality.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Loc {
    fn eq(&self, _: &Loc) -> bool {
        true
    }
}

impl std::hash::Hash for Loc {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Iteration structure of a loop produced from a `for` statement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Counter {
    pub var: VarId,
    pub lo: Expr,
    pub hi: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Assign(Place, Expr),
    Sample(Vec<Place>, DistExpr),
    If(Expr, Vec<Stmt>, Vec<Stmt>),
    /// `counter` is set when the loop came from a `for` statement; the
    /// iteration count is then deterministic.
    While(Expr, Vec<Stmt>, Option<Counter>),
    /// Surface `for v = lo to hi { .. }`; removed by desugaring.
    For(VarId, Expr, Expr, Vec<Stmt>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt { kind, loc: Loc::default() }
    }

    pub fn assign(v: VarId, e: Expr) -> Self {
        Stmt::new(StmtKind::Assign(Place::Var(v), e))
    }

    pub fn sample(vs: Vec<VarId>, d: DistExpr) -> Self {
        Stmt::new(StmtKind::Sample(vs.into_iter().map(Place::Var).collect(), d))
    }
}

/// Declared uninterpreted function `fun f(t1, .., tn): t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunDecl {
    pub name: String,
    pub args: Vec<Type>,
    pub ret: Type,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Program {
    pub params: Vec<(VarId, Type)>,
    /// Opaque distributions `dist mu: t`.
    pub dists: Vec<(String, Type)>,
    pub funs: Vec<FunDecl>,
    pub body: Vec<Stmt>,
    pub returns: Vec<VarId>,
}

impl Program {
    pub fn is_input(&self, v: &VarId) -> bool {
        self.params.iter().any(|(p, _)| p == v)
    }

    pub fn input_vars(&self) -> Vec<VarId> {
        self.params.iter().map(|(v, _)| v.clone()).collect()
    }

    pub fn fun(&self, name: &str) -> Option<&FunDecl> {
        self.funs.iter().find(|f| f.name == name)
    }

    pub fn dist_type(&self, name: &str) -> Option<&Type> {
        self.dists.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// The unique top-level loop, if any, with its position in `body`.
    pub fn top_loop(&self) -> Option<(usize, &Stmt)> {
        self.body
            .iter()
            .enumerate()
            .find(|(_, s)| matches!(s.kind, StmtKind::While(..) | StmtKind::For(..)))
    }

    pub fn has_loop(&self) -> bool {
        self.top_loop().is_some()
    }
}
