//! Concrete syntax for probabilistic programs.
//!
//! ```text
//! param p: real
//! x <- false
//! y <- false
//! while x == y {
//!   x ~ bern(p)
//!   y ~ bern(p)
//! }
//! return x
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::ast::*;
use super::LangError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: &[&str] = &[
    "<-", "==", "!=", "<=", ">=", "&&", "||", "~", "{", "}", "(", ")", "[", "]", ",", ";", ":", "<", ">",
    "!", "+", "-", "*", "/", "=",
];

const KEYWORDS: &[&str] = &[
    "param", "dist", "fun", "if", "else", "while", "for", "to", "return", "true", "false", "bern", "uniform",
    "ite", "bool", "int", "real", "range",
];

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn tokens(text: &'a str) -> Result<Vec<(Tok, Loc)>, LangError> {
        let mut lx = Lexer { src: text.as_bytes(), pos: 0, line: 1, col: 1 };
        let mut out = Vec::new();
        loop {
            lx.skip_ws();
            let loc = Loc { line: lx.line, col: lx.col };
            let Some(&c) = lx.src.get(lx.pos) else {
                out.push((Tok::Eof, loc));
                return Ok(out);
            };
            if c.is_ascii_alphabetic() || c == b'_' {
                let start = lx.pos;
                while let Some(&c) = lx.src.get(lx.pos) {
                    if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                        lx.bump();
                    } else {
                        break;
                    }
                }
                let s = std::str::from_utf8(&lx.src[start..lx.pos]).unwrap();
                out.push((Tok::Ident(s.to_string()), loc));
            } else if c.is_ascii_digit() {
                let start = lx.pos;
                while lx.src.get(lx.pos).is_some_and(u8::is_ascii_digit) {
                    lx.bump();
                }
                let s = std::str::from_utf8(&lx.src[start..lx.pos]).unwrap();
                out.push((Tok::Int(s.parse().unwrap()), loc));
            } else {
                let rest = &lx.src[lx.pos..];
                let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(s.as_bytes())) else {
                    return Err(LangError::Syntax {
                        line: loc.line,
                        col: loc.col,
                        msg: format!("unexpected character '{}'", c as char),
                    });
                };
                for _ in 0..sym.len() {
                    lx.bump();
                }
                out.push((Tok::Sym(sym), loc));
            }
        }
    }

    fn bump(&mut self) {
        if self.src[self.pos] == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        self.pos += 1;
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.src.get(self.pos) {
            if c == b'#' {
                while self.src.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.bump();
                }
            } else if c.is_ascii_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Loc)>,
    pos: usize,
    dists: Vec<(String, Type)>,
}

type PResult<T> = Result<T, LangError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let loc = self.loc();
        Err(LangError::Syntax { line: loc.line, col: loc.col, msg: msg.into() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}', found {}", describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected '{k}', found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.next();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {}", describe(&t))),
        }
    }

    fn int_lit(&mut self) -> PResult<i64> {
        let neg = self.eat_sym("-");
        match self.next() {
            Tok::Int(v) => {
                let v: i64 = v.try_into().map_err(|_| LangError::Syntax {
                    line: self.loc().line,
                    col: self.loc().col,
                    msg: "integer literal out of range".into(),
                })?;
                Ok(if neg { -v } else { v })
            }
            t => self.err(format!("expected integer, found {}", describe(&t))),
        }
    }

    fn ty(&mut self) -> PResult<Type> {
        match self.next() {
            Tok::Ident(s) if s == "bool" => Ok(Type::Bool),
            Tok::Ident(s) if s == "int" => Ok(Type::Int),
            Tok::Ident(s) if s == "real" => Ok(Type::Real),
            Tok::Ident(s) if s == "range" => {
                self.expect_sym("(")?;
                let lo = self.int_lit()?;
                self.expect_sym(",")?;
                let hi = self.int_lit()?;
                self.expect_sym(")")?;
                if lo > hi {
                    return self.err("empty range type");
                }
                Ok(Type::Range(lo, hi))
            }
            t => self.err(format!("expected type, found {}", describe(&t))),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        loop {
            if self.is_kw("param") {
                self.next();
                loop {
                    let name = self.ident()?;
                    self.expect_sym(":")?;
                    let t = self.ty()?;
                    prog.params.push((VarId::new(name), t));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            } else if self.is_kw("dist") {
                self.next();
                let name = self.ident()?;
                self.expect_sym(":")?;
                let t = self.ty()?;
                prog.dists.push((name.clone(), t.clone()));
                self.dists.push((name, t));
            } else if self.is_kw("fun") {
                self.next();
                let name = self.ident()?;
                self.expect_sym("(")?;
                let mut args = Vec::new();
                if !self.is_sym(")") {
                    loop {
                        args.push(self.ty()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.expect_sym(")")?;
                self.expect_sym(":")?;
                let ret = self.ty()?;
                prog.funs.push(FunDecl { name, args, ret });
            } else {
                break;
            }
            self.eat_sym(";");
        }
        prog.body = self.stmts(true)?;
        if self.is_kw("return") {
            self.next();
            if self.eat_sym("(") {
                loop {
                    prog.returns.push(VarId::new(self.ident()?));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(")")?;
            } else {
                prog.returns.push(VarId::new(self.ident()?));
            }
            self.eat_sym(";");
        }
        if *self.peek() != Tok::Eof {
            return self.err(format!("unexpected {}", describe(self.peek())));
        }
        Ok(prog)
    }

    fn stmts(&mut self, top: bool) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        loop {
            while self.eat_sym(";") {}
            if *self.peek() == Tok::Eof || self.is_sym("}") || (top && self.is_kw("return")) {
                return Ok(out);
            }
            out.push(self.stmt()?);
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_sym("{")?;
        let body = self.stmts(false)?;
        self.expect_sym("}")?;
        Ok(body)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        let kind = if self.is_kw("if") {
            self.next();
            let c = self.expr()?;
            let then = self.block()?;
            let els = if self.is_kw("else") {
                self.next();
                if self.is_kw("if") {
                    vec![self.stmt()?]
                } else {
                    self.block()?
                }
            } else {
                Vec::new()
            };
            StmtKind::If(c, then, els)
        } else if self.is_kw("while") {
            self.next();
            let c = self.expr()?;
            StmtKind::While(c, self.block()?, None)
        } else if self.is_kw("for") {
            self.next();
            let v = VarId::new(self.ident()?);
            self.expect_sym("=")?;
            let lo = self.expr()?;
            self.expect_kw("to")?;
            let hi = self.expr()?;
            StmtKind::For(v, lo, hi, self.block()?)
        } else if self.is_sym("(") {
            self.next();
            let mut places = Vec::new();
            loop {
                places.push(self.place()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
            self.expect_sym("~")?;
            StmtKind::Sample(places, self.dist()?)
        } else {
            let p = self.place()?;
            if self.eat_sym("<-") {
                StmtKind::Assign(p, self.expr()?)
            } else if self.eat_sym("~") {
                StmtKind::Sample(vec![p], self.dist()?)
            } else {
                return self.err(format!("expected '<-' or '~', found {}", describe(self.peek())));
            }
        };
        Ok(Stmt { kind, loc })
    }

    fn place(&mut self) -> PResult<Place> {
        let name = self.ident()?;
        if self.eat_sym("[") {
            let e = self.expr()?;
            self.expect_sym("]")?;
            Ok(Place::Index(name, e))
        } else {
            Ok(Place::Var(VarId::new(name)))
        }
    }

    fn dist(&mut self) -> PResult<DistExpr> {
        let mut parts = vec![self.dist_atom()?];
        while self.eat_sym("*") {
            parts.push(self.dist_atom()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { DistExpr::Product(parts) })
    }

    fn dist_atom(&mut self) -> PResult<DistExpr> {
        if self.is_kw("bern") {
            self.next();
            self.expect_sym("(")?;
            let e = self.expr()?;
            self.expect_sym(")")?;
            Ok(DistExpr::Bern(e))
        } else if self.is_kw("uniform") {
            self.next();
            self.expect_sym("(")?;
            let lo = self.int_lit()?;
            self.expect_sym(",")?;
            let hi = self.int_lit()?;
            self.expect_sym(")")?;
            if lo > hi {
                return self.err("uniform over an empty range");
            }
            Ok(DistExpr::UniformInt(lo, hi))
        } else {
            let loc = self.loc();
            let name = self.ident()?;
            match self.dists.iter().find(|(n, _)| *n == name) {
                Some((_, t)) => Ok(DistExpr::Opaque(name, t.clone())),
                None => Err(LangError::UnknownDistribution { name, line: loc.line, col: loc.col }),
            }
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        let Tok::Sym(s) = self.peek() else { return None };
        Some(match *s {
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.next();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
            if prec == 3 && self.peek_binop().is_some_and(|o| o.precedence() == 3) {
                return self.err("comparison operators do not chain; use '&&'");
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_sym("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.eat_sym("-") {
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                if self.is_sym("/") && matches!(self.peek_at(1), Tok::Int(_)) {
                    self.next();
                    let Tok::Int(d) = self.next() else { unreachable!() };
                    if d.is_zero() {
                        return self.err("division by zero in rational literal");
                    }
                    let r = BigRational::new(n, d);
                    return Ok(rat_literal(r));
                }
                Ok(Expr::Int(n))
            }
            Tok::Sym("(") => {
                self.next();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" => {
                self.next();
                Ok(Expr::Bool(true))
            }
            Tok::Ident(s) if s == "false" => {
                self.next();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(s) if s == "ite" => {
                self.next();
                self.expect_sym("(")?;
                let c = self.expr()?;
                self.expect_sym(",")?;
                let a = self.expr()?;
                self.expect_sym(",")?;
                let b = self.expr()?;
                self.expect_sym(")")?;
                Ok(Expr::Ite(Box::new(c), Box::new(a), Box::new(b)))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.eat_sym("(") {
                    let mut args = Vec::new();
                    if !self.is_sym(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    self.expect_sym(")")?;
                    Ok(Expr::Call(name, args))
                } else if self.eat_sym("[") {
                    let e = self.expr()?;
                    self.expect_sym("]")?;
                    Ok(Expr::Index(name, Box::new(e)))
                } else {
                    Ok(Expr::Var(VarId::new(name)))
                }
            }
            t => self.err(format!("expected expression, found {}", describe(&t))),
        }
    }
}

/// Normalizes a rational literal: integral values become `Int`, negatives
/// become a negated positive literal.
pub fn rat_literal(r: BigRational) -> Expr {
    if r.is_negative() {
        return Expr::Unary(UnOp::Neg, Box::new(rat_literal(-r)));
    }
    if r.denom().is_one() {
        Expr::Int(r.numer().clone())
    } else {
        Expr::Rat(r)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(v) => format!("'{v}'"),
        Tok::Sym(s) => format!("'{s}'"),
        Tok::Eof => "end of input".to_string(),
    }
}

/// Parses program text. Header lines (`prop:`, `oracle:`) must already be
/// stripped; see [`super::file::CplFile`].
pub fn parse(text: &str) -> Result<Program, LangError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, pos: 0, dists: Vec::new() };
    p.program()
}

/// Parses a standalone expression (used for property headers).
pub fn parse_expr(text: &str) -> Result<Expr, LangError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, pos: 0, dists: Vec::new() };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {}", describe(p.peek())));
    }
    Ok(e)
}

/// Parses a standalone distribution expression such as `bern(1/2)`.
pub fn parse_dist(text: &str) -> Result<DistExpr, LangError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, pos: 0, dists: Vec::new() };
    let d = p.dist()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {}", describe(p.peek())));
    }
    Ok(d)
}

/// Parses a rational such as `2/5`, `-3`, or `1`.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    let (neg, t) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let r = match t.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            BigRational::new(n.trim().parse().ok()?, d)
        }
        None => BigRational::from_integer(t.parse().ok()?),
    };
    Some(if neg { -r } else { r })
}
