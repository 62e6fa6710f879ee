//! `.cpl` files: a program preceded by optional header lines.
//!
//! ```text
//! prop: uniform x
//! oracle: p=1/3
//! param p: real
//! ...
//! ```

use std::collections::BTreeMap;

use num_rational::BigRational;

use super::ast::*;
use super::parse::{parse, parse_dist, parse_expr, parse_rational};
use super::LangError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropSpec {
    /// The tuple of variables is uniform over `support` (or, when absent,
    /// over the product of their finite types).
    Uniform { vars: Vec<VarId>, support: Option<Vec<Vec<Expr>>> },
    Independent(VarId, VarId),
    CondIndependent(VarId, VarId, VarId),
    /// `Pr[left] = Pr[right]`, the right side optionally evaluated on a
    /// second program given by path.
    Equal { left: Expr, right: Expr, second: Option<String> },
}

impl PropSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            PropSpec::Uniform { .. } => "uniform",
            PropSpec::Independent(..) => "independent",
            PropSpec::CondIndependent(..) => "cond-independent",
            PropSpec::Equal { .. } => "equal",
        }
    }

    /// Parses the text after `prop:`.
    pub fn parse(text: &str) -> Result<PropSpec, LangError> {
        let text = text.trim();
        let bad = |m: &str| LangError::Header(format!("{m}: '{text}'"));
        let (kw, rest) = text.split_once(char::is_whitespace).ok_or_else(|| bad("incomplete property"))?;
        let rest = rest.trim();
        let words: Vec<&str> = rest.split_whitespace().collect();
        match kw {
            "uniform" => {
                let (vars_txt, support_txt) = match rest.split_once(" in ") {
                    Some((a, b)) => (a.trim(), Some(b.trim())),
                    None => (rest, None),
                };
                let vars = parse_var_tuple(vars_txt).ok_or_else(|| bad("bad variable list"))?;
                let support = match support_txt {
                    Some(s) => Some(parse_support(s, vars.len()).ok_or_else(|| bad("bad support set"))?),
                    None => None,
                };
                Ok(PropSpec::Uniform { vars, support })
            }
            "independent" => match words.as_slice() {
                [a, b] => Ok(PropSpec::Independent(VarId::new(*a), VarId::new(*b))),
                _ => Err(bad("expected 'independent x y'")),
            },
            "cond-independent" => match words.as_slice() {
                [a, b, "given", c] => {
                    Ok(PropSpec::CondIndependent(VarId::new(*a), VarId::new(*b), VarId::new(*c)))
                }
                _ => Err(bad("expected 'cond-independent x y given z'")),
            },
            "equal" => {
                let (left, rest) = bracketed(rest).ok_or_else(|| bad("expected '[e1]'"))?;
                let (right, rest) = bracketed(rest).ok_or_else(|| bad("expected '[e2]'"))?;
                let second = match rest.split_whitespace().collect::<Vec<_>>().as_slice() {
                    [] => None,
                    ["with", path] => Some(path.to_string()),
                    _ => return Err(bad("trailing text")),
                };
                Ok(PropSpec::Equal { left: parse_expr(left)?, right: parse_expr(right)?, second })
            }
            _ => Err(bad("unknown property")),
        }
    }

    /// Program variables the property mentions.
    pub fn vars(&self) -> Vec<VarId> {
        match self {
            PropSpec::Uniform { vars, .. } => vars.clone(),
            PropSpec::Independent(a, b) => vec![a.clone(), b.clone()],
            PropSpec::CondIndependent(a, b, c) => vec![a.clone(), b.clone(), c.clone()],
            PropSpec::Equal { left, right, .. } => {
                let mut v = left.vars();
                for x in right.vars() {
                    if !v.contains(&x) {
                        v.push(x);
                    }
                }
                v
            }
        }
    }
}

impl std::fmt::Display for PropSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use super::pretty::pretty_expr;
        match self {
            PropSpec::Uniform { vars, support } => {
                if vars.len() == 1 {
                    write!(f, "uniform {}", vars[0])?;
                } else {
                    let vs: Vec<String> = vars.iter().map(VarId::to_string).collect();
                    write!(f, "uniform ({})", vs.join(","))?;
                }
                if let Some(s) = support {
                    let tuples: Vec<String> = s
                        .iter()
                        .map(|t| format!("({})", t.iter().map(pretty_expr).collect::<Vec<_>>().join(",")))
                        .collect();
                    write!(f, " in {{{}}}", tuples.join(","))?;
                }
                Ok(())
            }
            PropSpec::Independent(a, b) => write!(f, "independent {a} {b}"),
            PropSpec::CondIndependent(a, b, c) => write!(f, "cond-independent {a} {b} given {c}"),
            PropSpec::Equal { left, right, second } => {
                write!(f, "equal [{}] [{}]", pretty_expr(left), pretty_expr(right))?;
                match second {
                    Some(p) => write!(f, " with {p}"),
                    None => Ok(()),
                }
            }
        }
    }
}

fn parse_var_tuple(s: &str) -> Option<Vec<VarId>> {
    let s = s.trim();
    let inner = match s.strip_prefix('(') {
        Some(r) => r.strip_suffix(')')?,
        None => s,
    };
    let vars: Vec<VarId> = inner.split(',').map(|v| VarId::new(v.trim())).collect();
    let ok = vars.iter().all(|v| !v.name.is_empty() && !v.name.contains(char::is_whitespace));
    ok.then_some(vars)
}

fn parse_support(s: &str, width: usize) -> Option<Vec<Vec<Expr>>> {
    let inner = s.strip_prefix('{')?.strip_suffix('}')?.trim();
    let mut out = Vec::new();
    let mut rest = inner;
    while !rest.is_empty() {
        let tuple;
        if let Some(r) = rest.strip_prefix('(') {
            let end = r.find(')')?;
            tuple = r[..end].split(',').map(|x| parse_expr(x.trim()).ok()).collect::<Option<Vec<_>>>()?;
            rest = r[end + 1..].trim_start();
        } else {
            let end = rest.find(',').unwrap_or(rest.len());
            tuple = vec![parse_expr(rest[..end].trim()).ok()?];
            rest = &rest[end..];
        }
        if tuple.len() != width {
            return None;
        }
        out.push(tuple);
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }
    Some(out)
}

/// Splits `[inner] rest` respecting nested brackets.
fn bracketed(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_start();
    let body = s.strip_prefix('[')?;
    let mut depth = 1;
    for (i, c) in body.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some((&body[..i], &body[i + 1..]));
                }
            }
            _ => {}
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleArg {
    Num(BigRational),
    Bool(bool),
    Dist(DistExpr),
    /// Name of a built-in Boolean or arithmetic function.
    Fun(String),
}

/// One concrete instantiation of a program's symbolic inputs, opaque
/// distributions and uninterpreted functions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OracleInstance {
    pub bindings: BTreeMap<String, OracleArg>,
}

impl OracleInstance {
    /// Parses `p=1/3 mu=bern(1/2) f=and`.
    pub fn parse(text: &str) -> Result<OracleInstance, LangError> {
        let mut bindings = BTreeMap::new();
        for item in text.split_whitespace() {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| LangError::Header(format!("expected name=value, found '{item}'")))?;
            let arg = if let Some(r) = parse_rational(v) {
                OracleArg::Num(r)
            } else if v == "true" || v == "false" {
                OracleArg::Bool(v == "true")
            } else if v.contains('(') {
                OracleArg::Dist(parse_dist(v)?)
            } else {
                OracleArg::Fun(v.to_string())
            };
            bindings.insert(k.to_string(), arg);
        }
        Ok(OracleInstance { bindings })
    }

    pub fn num(&self, name: &str) -> Option<&BigRational> {
        match self.bindings.get(name) {
            Some(OracleArg::Num(r)) => Some(r),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CplFile {
    pub program: Program,
    pub props: Vec<PropSpec>,
    pub oracles: Vec<OracleInstance>,
    /// Program text with header lines blanked out.
    pub body: String,
}

impl CplFile {
    pub fn parse(text: &str) -> Result<CplFile, LangError> {
        let mut props = Vec::new();
        let mut oracles = Vec::new();
        let mut body = String::with_capacity(text.len());
        for line in text.lines() {
            let t = line.trim_start();
            if let Some(rest) = t.strip_prefix("prop:") {
                props.push(PropSpec::parse(rest)?);
            } else if let Some(rest) = t.strip_prefix("oracle:") {
                oracles.push(OracleInstance::parse(rest)?);
            } else {
                body.push_str(line);
            }
            body.push('\n');
        }
        let program = parse(&body)?;
        Ok(CplFile { program, props, oracles, body })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn property_headers() {
        assert_eq!(
            PropSpec::parse("uniform x").unwrap(),
            PropSpec::Uniform { vars: vec![VarId::new("x")], support: None }
        );
        assert_eq!(
            PropSpec::parse("cond-independent w w' given y").unwrap(),
            PropSpec::CondIndependent(VarId::new("w"), VarId::new("w'"), VarId::new("y"))
        );
        let PropSpec::Uniform { vars, support: Some(s) } =
            PropSpec::parse("uniform (x,y) in {(1,2),(2,1)}").unwrap()
        else {
            panic!()
        };
        assert_eq!(vars.len(), 2);
        assert_eq!(s, vec![vec![Expr::int(1), Expr::int(2)], vec![Expr::int(2), Expr::int(1)]]);
        let e = PropSpec::parse("equal [a && (b || c)] [!a] with other.cpl").unwrap();
        assert!(matches!(e, PropSpec::Equal { second: Some(ref s), .. } if s == "other.cpl"));
        assert!(PropSpec::parse("uniformly x").is_err());
        assert!(PropSpec::parse("independent x").is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["uniform x", "uniform (x,y,z) in {(1,2,3),(3,2,1)}", "independent a b", "equal [x == 1] [!y]"] {
            let p = PropSpec::parse(s).unwrap();
            assert_eq!(PropSpec::parse(&p.to_string()).unwrap(), p);
        }
    }

    #[test]
    fn headers_keep_line_numbers() {
        let f = CplFile::parse("prop: uniform x\noracle: p=1/3 mu=bern(1/2) f=and\nx <- )").unwrap_err();
        assert!(matches!(f, LangError::Syntax { line: 3, .. }));
        let ok = CplFile::parse("prop: uniform x\noracle: p=1/3 mu=bern(1/2) f=and b=true\nx ~ bern(1/2)").unwrap();
        let o = &ok.oracles[0];
        assert_eq!(o.num("p"), parse_rational("1/3").as_ref());
        assert!(matches!(o.bindings["mu"], OracleArg::Dist(DistExpr::Bern(_))));
        assert_eq!(o.bindings["f"], OracleArg::Fun("and".into()));
        assert_eq!(o.bindings["b"], OracleArg::Bool(true));
    }
}
