//! Corpus runs summarized as a table.

use std::path::Path;

use clap::ValueEnum;
use couplesynth::synth::synthesize;

use super::{config, solver, tasks, InputError, SearchOpts};

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
}

struct Row {
    program: String,
    property: String,
    proved: bool,
    index: String,
    queries: String,
    seconds: String,
}

const HEADER: [&str; 6] = ["program", "property", "proved", "candidates", "queries", "time (s)"];

fn cells(r: &Row) -> [String; 6] {
    [
        r.program.clone(),
        r.property.clone(),
        if r.proved { "yes" } else { "no" }.to_string(),
        r.index.clone(),
        r.queries.clone(),
        r.seconds.clone(),
    ]
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render(rows: &[Row], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Markdown => {
            out.push_str(&format!("| {} |\n", HEADER.join(" | ")));
            out.push_str(&format!("|{}\n", "---|".repeat(HEADER.len())));
            for r in rows {
                let cs = cells(r).map(|c| c.replace('|', "\\|"));
                out.push_str(&format!("| {} |\n", cs.join(" | ")));
            }
        }
        Format::Csv => {
            out.push_str(&HEADER.join(","));
            out.push('\n');
            for r in rows {
                out.push_str(&cells(r).map(|c| csv_field(&c)).join(","));
                out.push('\n');
            }
        }
    }
    out
}

/// Bench reports and never judges: failures are rows, and the exit code is 0
/// unless the directory cannot be read.
pub fn run(dir: &Path, format: Format, opts: &SearchOpts) -> Result<u8, InputError> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| InputError(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cpl"))
        .collect();
    files.sort();
    let solver = solver(opts);
    let cfg = config(opts);
    let mut rows = Vec::new();
    for f in &files {
        let name = super::file_name(f);
        let ts = match tasks(f, Some(opts)) {
            Ok(ts) => ts,
            Err(e) => {
                rows.push(Row { program: name, property: format!("error: {}", e.0), proved: false, index: "-".into(), queries: "-".into(), seconds: "-".into() });
                continue;
            }
        };
        for t in ts {
            let row = match synthesize(&t, &solver, &cfg) {
                Ok(r) => Row {
                    program: name.clone(),
                    property: r.property.clone(),
                    proved: r.proved(),
                    index: r.candidate_index.map_or_else(|| format!(">{}", r.candidates_checked), |i| i.to_string()),
                    queries: r.solver.queries.to_string(),
                    seconds: format!("{:.1}", r.wall_ms as f64 / 1000.0),
                },
                Err(e) => Row {
                    program: name.clone(),
                    property: format!("{} (error: {e})", t.prop),
                    proved: false,
                    index: "-".into(),
                    queries: "-".into(),
                    seconds: "-".into(),
                },
            };
            rows.push(row);
        }
    }
    super::emit(&render(&rows, format));
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_commas() {
        let r = Row {
            program: "a.cpl".into(),
            property: "uniform (x,y)".into(),
            proved: true,
            index: "2".into(),
            queries: "5".into(),
            seconds: "0.1".into(),
        };
        assert_eq!(render(&[r], Format::Csv).lines().nth(1), Some("a.cpl,\"uniform (x,y)\",yes,2,5,0.1"));
    }

    #[test]
    fn empty_markdown_has_header_only() {
        assert_eq!(render(&[], Format::Markdown).lines().count(), 2);
    }
}
