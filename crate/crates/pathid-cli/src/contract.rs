//! File contract check over a data directory: every shipped graph, model,
//! table, query and structured estimand re-serializes byte-identically, and
//! every case in `cases.txt` exits with its expected code and reproduces its
//! golden stdout.
//!
//! A case line is `<exit> <golden file or -> <subcommand and arguments>`.
//! Arguments containing `/` are paths relative to the data directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use pathid::estimand::{parse_structured, Format};
use pathid::harness::Check;
use pathid::io::{model_text, parse_model, parse_table, table_text, GraphFile, QueryFile};
use pathid::Result;

/// One manifest line.
#[derive(Clone, Debug)]
pub struct Case {
    pub line: usize,
    pub exit: i32,
    pub golden: Option<PathBuf>,
    pub args: Vec<String>,
}

/// Parse `cases.txt`, resolving paths against `data`.
pub fn parse_cases(src: &str, data: &Path) -> std::result::Result<Vec<Case>, String> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let (Some(exit), Some(golden)) = (toks.next(), toks.next()) else {
            return Err(format!("cases.txt:{}: expected `<exit> <golden> <args>`", i + 1));
        };
        let exit = exit.parse().map_err(|_| format!("cases.txt:{}: bad exit code `{exit}`", i + 1))?;
        let golden = (golden != "-").then(|| data.join(golden));
        let args = toks
            .map(|t| if t.contains('/') { data.join(t).display().to_string() } else { t.to_string() })
            .collect();
        out.push(Case { line: i + 1, exit, golden, args });
    }
    Ok(out)
}

fn files(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == ext)).collect())
        .unwrap_or_default();
    v.sort();
    v
}

/// Canonical re-serialization of a shipped file, chosen by extension.
pub fn canonical(path: &Path, src: &str) -> Result<String> {
    let name = path.display().to_string();
    let out = match path.extension().and_then(|x| x.to_str()) {
        Some("graph") => GraphFile::parse(src).map(|g| g.to_text()),
        Some("model") => parse_model(src).map(|m| model_text(&m)),
        Some("table") => parse_table(src).map(|t| table_text(&t)),
        Some("query") => QueryFile::parse(src).map(|q| q.to_text()),
        Some("estimand") => parse_structured(src).map(|e| e.render(Format::Structured)),
        _ => Ok(src.to_string()),
    };
    out.map_err(|e| e.in_file(&name))
}

/// Run the contract over `data`.
pub fn check(data: &Path) -> Check {
    let start = Instant::now();
    let mut fails = Vec::new();
    let mut round_trips = 0;
    for (sub, ext) in [("graphs", "graph"), ("models", "model"), ("tables", "table"), ("queries", "query"), ("golden", "estimand")] {
        for p in files(&data.join(sub), ext) {
            let Ok(src) = fs::read_to_string(&p) else {
                fails.push(format!("cannot read {}", p.display()));
                continue;
            };
            match canonical(&p, &src) {
                Ok(c) if c == src => round_trips += 1,
                Ok(_) => fails.push(format!("{} is not in canonical form", p.display())),
                Err(e) => fails.push(e.to_string()),
            }
        }
    }
    let cases = fs::read_to_string(data.join("cases.txt"))
        .map_err(|e| format!("cannot read cases.txt in {}: {e}", data.display()))
        .and_then(|s| parse_cases(&s, data));
    let n_cases = match cases {
        Ok(cases) => {
            for c in &cases {
                if let Some(f) = run_case(c) {
                    fails.push(format!("cases.txt:{}: {f}", c.line));
                }
            }
            cases.len()
        }
        Err(e) => {
            fails.push(e);
            0
        }
    };
    if n_cases == 0 || round_trips == 0 {
        fails.push("no shipped files found".into());
    }
    fails.truncate(5);
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(30);
    let passed = fails.is_empty() && elapsed <= budget;
    let detail = if fails.is_empty() {
        format!("{round_trips} files canonical, {n_cases} cases with stable exit codes and output")
    } else {
        fails.join("; ")
    };
    Check { id: 9, title: "CLI contract", passed, detail, elapsed, budget }
}

fn run_case(c: &Case) -> Option<String> {
    let argv = std::iter::once("pathid".to_string()).chain(c.args.iter().cloned());
    let first = crate::run(argv.clone());
    let second = crate::run(argv);
    if first != second {
        return Some("output differs between runs".into());
    }
    if first.code != c.exit {
        return Some(format!("exit {} expected {} ({})", first.code, c.exit, first.stderr.trim()));
    }
    let golden = c.golden.as_ref()?;
    match fs::read_to_string(golden) {
        Ok(g) if g == first.stdout => None,
        Ok(_) => Some(format!("stdout differs from {}", golden.display())),
        Err(e) => Some(format!("cannot read {}: {e}", golden.display())),
    }
}
