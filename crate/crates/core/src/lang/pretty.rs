use std::fmt::Write;

use super::ast::*;

/// Canonical concrete syntax; `parse(&pretty(p))` returns `p` for every
/// parsed program.
pub fn pretty(p: &Program) -> String {
    let mut out = String::new();
    for (v, t) in &p.params {
        let _ = writeln!(out, "param {v}: {t}");
    }
    for (n, t) in &p.dists {
        let _ = writeln!(out, "dist {n}: {t}");
    }
    for f in &p.funs {
        let args: Vec<String> = f.args.iter().map(Type::to_string).collect();
        let _ = writeln!(out, "fun {}({}): {}", f.name, args.join(", "), f.ret);
    }
    block(&mut out, &p.body, 0);
    match p.returns.len() {
        0 => {}
        1 => {
            let _ = writeln!(out, "return {}", p.returns[0]);
        }
        _ => {
            let rs: Vec<String> = p.returns.iter().map(VarId::to_string).collect();
            let _ = writeln!(out, "return ({})", rs.join(", "));
        }
    }
    out
}

fn block(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        stmt(out, s, depth);
    }
}

fn place(p: &Place) -> String {
    match p {
        Place::Var(v) => v.to_string(),
        Place::Index(a, e) => format!("{a}[{}]", pretty_expr(e)),
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "  ".repeat(depth);
    match &s.kind {
        StmtKind::Assign(p, e) => {
            let _ = writeln!(out, "{pad}{} <- {}", place(p), pretty_expr(e));
        }
        StmtKind::Sample(ps, d) => {
            let lhs = if ps.len() == 1 {
                place(&ps[0])
            } else {
                format!("({})", ps.iter().map(place).collect::<Vec<_>>().join(", "))
            };
            let _ = writeln!(out, "{pad}{lhs} ~ {}", pretty_dist(d));
        }
        StmtKind::If(c, a, b) => {
            let _ = writeln!(out, "{pad}if {} {{", pretty_expr(c));
            block(out, a, depth + 1);
            if b.is_empty() {
                let _ = writeln!(out, "{pad}}}");
            } else {
                let _ = writeln!(out, "{pad}}} else {{");
                block(out, b, depth + 1);
                let _ = writeln!(out, "{pad}}}");
            }
        }
        StmtKind::While(g, body, _) => {
            let _ = writeln!(out, "{pad}while {} {{", pretty_expr(g));
            block(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        StmtKind::For(v, lo, hi, body) => {
            let _ = writeln!(out, "{pad}for {v} = {} to {} {{", pretty_expr(lo), pretty_expr(hi));
            block(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

pub fn pretty_dist(d: &DistExpr) -> String {
    match d {
        DistExpr::Bern(e) => format!("bern({})", pretty_expr(e)),
        DistExpr::UniformInt(lo, hi) => format!("uniform({lo}, {hi})"),
        DistExpr::Opaque(n, _) => n.clone(),
        DistExpr::Product(ds) => ds.iter().map(pretty_dist).collect::<Vec<_>>().join(" * "),
    }
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e, 0);
    s
}

fn prec_of(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => op.precedence(),
        // unary minus in front of a literal is printed as a plain literal
        _ => u8::MAX,
    }
}

/// Writes `e`, parenthesized if its precedence is below `min`.
fn expr(out: &mut String, e: &Expr, min: u8) {
    let p = prec_of(e);
    if p < min {
        out.push('(');
        expr(out, e, 0);
        out.push(')');
        return;
    }
    match e {
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Rat(r) => {
            let _ = write!(out, "{}/{}", r.numer(), r.denom());
        }
        Expr::Var(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Index(a, i) => {
            let _ = write!(out, "{a}[{}]", pretty_expr(i));
        }
        Expr::Unary(op, a) => {
            out.push(if *op == UnOp::Not { '!' } else { '-' });
            expr(out, a, u8::MAX);
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            // comparisons do not associate, so a comparison operand needs parens
            let lmin = if p == 3 { p + 1 } else { p };
            expr(out, a, lmin);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, b, p + 1);
        }
        Expr::Ite(c, a, b) => {
            let _ = write!(out, "ite({}, {}, {})", pretty_expr(c), pretty_expr(a), pretty_expr(b));
        }
        Expr::Call(n, args) => {
            let args: Vec<String> = args.iter().map(pretty_expr).collect();
            let _ = write!(out, "{n}({})", args.join(", "));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, parse_expr};

    #[test]
    fn parenthesizes_by_precedence() {
        for src in ["(a + b) * c", "a - (b - c)", "a - b - c", "!(a && b) || c", "(a == b) == c", "-(x + 1)"] {
            let e = parse_expr(src).unwrap();
            assert_eq!(parse_expr(&pretty_expr(&e)).unwrap(), e, "{src}");
        }
        assert_eq!(pretty_expr(&parse_expr("a + b * c").unwrap()), "a + b * c");
        assert_eq!(pretty_expr(&parse_expr("x * 1/3").unwrap()), "x * 1/3");
    }

    #[test]
    fn program_round_trip() {
        let src = "param p: real\ndist mu: bool\nfun f(bool, bool): bool\n(x, y) ~ bern(p) * mu\n\
                   if x { z <- f(x, y) } else { if y { z <- true } else { z <- false } }\n\
                   for i = 1 to 3 { a[i] ~ uniform(1, 6) }\nreturn (x, z)";
        let p = parse(src).unwrap();
        assert_eq!(parse(&pretty(&p)).unwrap(), p);
    }
}
