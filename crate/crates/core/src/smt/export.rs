//! Standalone scripts for a bundle: the whole VC with the coupling function
//! as an uninterpreted function, or the loop constraints as Horn clauses.

use std::collections::BTreeSet;

use super::print::{logic, quote, term_smt};
use crate::vcgen::formula::{and, forall, implies, var, FunSig, Signature, Sort, Term};
use crate::vcgen::{instantiate, Hole, PmfMode, VcBundle, VcError};

/// Clause groups in output order.
const SECTIONS: [(&str, &[&str]); 6] = [
    ("main", &["main"]),
    ("initiation", &["initiation"]),
    ("consecution", &["consecution"]),
    ("synchronization", &["synchronization"]),
    ("coupling", &["injectivity", "monotonicity"]),
    ("property", &["property"]),
];

/// The hole applied to its own formals, so that filling leaves it in place.
pub fn open_candidate(b: &VcBundle) -> Vec<Term> {
    let formals: Vec<Term> = (0..b.hole.args.len()).map(|k| var(Hole::formal(k))).collect();
    b.hole.apply(&formals)
}

fn declare(name: &str, s: &FunSig) -> String {
    let args: Vec<String> = s.args.iter().map(Sort::to_string).collect();
    format!("(declare-fun {} ({}) {})", quote(name), args.join(" "), s.ret)
}

struct Script {
    sig: Signature,
    /// Closed facts asserted once.
    facts: Vec<Term>,
    sections: Vec<(String, Vec<(String, Term)>)>,
}

fn close(q: crate::vcgen::Query, b: &VcBundle, keep: &[String]) -> Script {
    let mut sig = q.sig;
    for n in keep {
        if let Some(s) = b.sig.get(n) {
            sig.function(n.clone(), s.args.clone(), s.ret);
        }
    }
    let funs: BTreeSet<String> = sig.syms.iter().filter(|(_, s)| !s.args.is_empty()).map(|(n, _)| n.clone()).collect();
    let consts = |t: &Term| -> BTreeSet<String> { t.free_vars().into_iter().filter(|n| !funs.contains(n)).collect() };
    let (facts, local): (Vec<Term>, Vec<Term>) = q.hyps.into_iter().partition(|h| consts(h).is_empty());

    let mut sections = Vec::new();
    for (title, names) in SECTIONS {
        let mut out = Vec::new();
        for c in q.goals.iter().filter(|c| names.contains(&c.name.as_str())) {
            let vars = consts(&c.formula());
            let extra: Vec<Term> = local.iter().filter(|h| consts(h).is_subset(&vars)).cloned().collect();
            let mut hyp = extra;
            hyp.push(c.hyp.clone());
            let body = implies(and(hyp), c.concl.clone());
            let bound: Vec<(String, Sort)> =
                vars.iter().filter_map(|n| sig.sort_of(&var(n.clone())).map(|s| (n.clone(), s))).collect();
            out.push((c.name.clone(), forall(bound, body)));
        }
        if !out.is_empty() {
            sections.push((title.to_string(), out));
        }
    }
    Script { sig, facts, sections }
}

impl Script {
    fn render(&self, header: &str, logic_name: String) -> String {
        let mut out = format!("; {header}\n(set-logic {logic_name})\n");
        let all = and(self.formulas());
        let used: BTreeSet<String> = all.applied().into_iter().chain(all.free_vars()).collect();
        for (n, s) in &self.sig.syms {
            if used.contains(n) && !s.args.is_empty() {
                out.push_str(&declare(n, s));
                out.push('\n');
            }
        }
        for f in &self.facts {
            out.push_str(&format!("(assert {})\n", term_smt(f, &self.sig)));
        }
        for (title, clauses) in &self.sections {
            out.push_str(&format!("; {title}\n"));
            for (name, t) in clauses {
                if name != title {
                    out.push_str(&format!("; {title}.{name}\n"));
                }
                out.push_str(&format!("(assert {})\n", term_smt(t, &self.sig)));
            }
        }
        out.push_str("(check-sat)\n");
        out
    }

    fn formulas(&self) -> Vec<Term> {
        self.facts.iter().cloned().chain(self.sections.iter().flat_map(|(_, cs)| cs.iter().map(|(_, t)| t.clone()))).collect()
    }

    pub fn section_names(&self) -> Vec<String> {
        self.sections.iter().map(|(t, _)| t.clone()).collect()
    }
}

fn build(b: &VcBundle, cand: Option<&[Term]>, mode: PmfMode) -> Result<(Script, Vec<String>), VcError> {
    let open = open_candidate(b);
    let cand = cand.unwrap_or(&open);
    let inv = b.inv.as_ref().map(|i| i.pre());
    let q = instantiate(b, cand, inv.as_ref(), mode)?;
    let mut keep: Vec<String> = Vec::new();
    if cand == open.as_slice() {
        keep.extend((0..b.hole.outs.len()).map(|k| b.hole.component(k)));
    }
    if let Some(i) = &b.inv {
        keep.push(i.name.clone());
    }
    Ok((close(q, b, &keep), keep))
}

fn pmf_mode(b: &VcBundle, cand: Option<&[Term]>) -> PmfMode {
    let open = open_candidate(b);
    match instantiate(b, cand.unwrap_or(&open), b.inv.as_ref().map(|i| i.pre()).as_ref(), PmfMode::Full) {
        Err(VcError::Opaque(_)) => PmfMode::Elided,
        _ => PmfMode::Full,
    }
}

/// The bundle as one SMT-LIB script: satisfiable when some coupling
/// function (and invariant) makes every clause valid. With `cand`, the
/// function is fixed.
pub fn vc_script(b: &VcBundle, cand: Option<&[Term]>) -> Result<String, VcError> {
    let mode = pmf_mode(b, cand);
    let (s, _) = build(b, cand, mode)?;
    let all = and(s.formulas());
    let header = format!("{} verification conditions ({} pmfs)", b.kind.name(), mode.name());
    Ok(s.render(&header, logic(&all, &s.sig)))
}

/// Loop bundles as constrained Horn clauses over the relation `I`, with the
/// coupling function fixed to `cand` (left uninterpreted when `None`).
pub fn chc_script(b: &VcBundle, cand: Option<&[Term]>) -> Result<String, VcError> {
    if !b.has_loop() {
        return Err(VcError::Unsupported("no loop: Horn export needs an invariant relation".into()));
    }
    let mode = pmf_mode(b, cand);
    let (s, _) = build(b, cand, mode)?;
    let header = format!("{} loop clauses over I ({} pmfs)", b.kind.name(), mode.name());
    Ok(s.render(&header, "HORN".into()))
}

/// Section titles of the exported clause set, in output order.
pub fn sections(b: &VcBundle, cand: Option<&[Term]>) -> Result<Vec<String>, VcError> {
    let (s, _) = build(b, cand, pmf_mode(b, cand))?;
    Ok(s.section_names())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{check, parse, VarId};
    use crate::vcgen::{reorder_quantifiers, vc_uniform, Subject};

    fn coin() -> VcBundle {
        let p = parse("param p: real\nx <- false\ny <- false\nwhile x == y { x ~ bern(p)\n y ~ bern(p) }\nreturn x").unwrap();
        let env = check(&p).unwrap();
        reorder_quantifiers(&vc_uniform(&Subject { program: &p, env: &env }, &[VarId::new("x")], None).unwrap())
    }

    #[test]
    fn swap_clauses_are_solvable() {
        let b = coin();
        let swap = [var(Hole::formal(1)), var(Hole::formal(0))];
        let script = chc_script(&b, Some(&swap)).unwrap();
        let out = crate::smt::Solver::from_env(std::time::Duration::from_secs(30)).run(&script).unwrap().unwrap();
        assert_eq!(out.trim(), "sat");
        let id = [var(Hole::formal(0)), var(Hole::formal(1))];
        let out = crate::smt::Solver::from_env(std::time::Duration::from_secs(30)).run(&chc_script(&b, Some(&id)).unwrap()).unwrap().unwrap();
        assert_eq!(out.trim(), "unsat");
    }

    #[test]
    fn coin_sections() {
        let b = coin();
        assert_eq!(sections(&b, None).unwrap(), ["initiation", "consecution", "synchronization", "coupling", "property"]);
    }

    #[test]
    fn horn_declares_relation_and_hole() {
        let b = coin();
        let s = chc_script(&b, None).unwrap();
        assert!(s.contains("(set-logic HORN)"), "{s}");
        assert!(s.contains("(declare-fun I (Real Bool Bool Real Bool Bool) Bool)"), "{s}");
        assert!(s.contains("(declare-fun cg!1 (Bool Bool Bool Bool) Bool)"), "{s}");
    }
}
