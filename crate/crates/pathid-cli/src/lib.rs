//! Command-line driver. [`run`] takes an argument list and returns the exit
//! code with captured output, so the binary is a thin wrapper and every
//! command can be exercised in-process.
//!
//! Exit codes: 0 identified or success, 1 input error, 2 not identified,
//! 3 oracle mismatch or failed check.

pub mod contract;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use pathid::estimand::Format;
use pathid::fixtures::{paper_graphs, river_blindness, RiverBlindnessParams};
use pathid::harness::{self, Check};
use pathid::io::{model_text, parse_model, parse_table, GraphFile, QueryFile};
use pathid::mediation::{contrasts, mediation_formula, pde_bounds, Triple};
use pathid::scalar::format_rational;
use pathid::swig::construct_swig;
use pathid::{Error, Exact, NonIdentified, Scalar};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_IDENTIFIED: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

/// Captured result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Output { code: EXIT_OK, stdout, stderr: String::new() }
    }
}

#[derive(Parser)]
#[command(name = "pathid", version, about = "Identify interventional and path-specific causal queries")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the identifying estimand for a query, or a certificate of non-identification.
    Identify {
        graph: PathBuf,
        query: PathBuf,
        /// text, latex or structured; overrides the query file.
        #[arg(long)]
        format: Option<String>,
    },
    /// Evaluate the estimand on a model's observed law and compare it with the oracle.
    Eval {
        model: PathBuf,
        query: PathBuf,
        /// Skip identification and print only oracle values.
        #[arg(long)]
        oracle_only: bool,
    },
    /// Sharp bounds on the pure direct effect from a binary joint table.
    Bounds {
        table: PathBuf,
        #[arg(long, default_value = "A")]
        treatment: String,
        #[arg(long, default_value = "M")]
        mediator: String,
        #[arg(long, default_value = "Y")]
        outcome: String,
        #[arg(long, default_value_t = 1)]
        active: usize,
        #[arg(long, default_value_t = 0)]
        baseline: usize,
    },
    /// Print the single-world intervention graph.
    Swig {
        graph: PathBuf,
        /// Intervention as VAR=LABEL; repeatable.
        #[arg(long = "do", value_name = "VAR=LABEL")]
        interventions: Vec<String>,
    },
    /// Print a built-in fixture as a graph file, or `river_blindness` as a model file.
    Fixture {
        name: Option<String>,
        /// List fixture names.
        #[arg(long)]
        list: bool,
    },
    /// Run every reproduction check and write report.md and results.json.
    Reproduce {
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Directory with the shipped fixture files and case manifest.
        #[arg(long, default_value = "data")]
        data: PathBuf,
    },
}

/// Failure of a command: an exit code and a message for stderr. Not
/// identified is reported on stdout, so it carries the stdout text too.
struct Fail {
    code: i32,
    stdout: String,
    stderr: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail { code: EXIT_INPUT, stdout: String::new(), stderr: format!("error: {e}\n") }
    }
}

type Res = std::result::Result<String, Fail>;

/// Run the CLI on `args` (including the program name).
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Output { code: EXIT_INPUT, stdout: String::new(), stderr: text }
            } else {
                Output::ok(text)
            };
        }
    };
    let res = match cli.cmd {
        Command::Identify { graph, query, format } => identify(&graph, &query, format.as_deref()),
        Command::Eval { model, query, oracle_only } => eval(&model, &query, oracle_only),
        Command::Bounds { table, treatment, mediator, outcome, active, baseline } => {
            bounds(&table, Triple { a: &treatment, m: &mediator, y: &outcome }, active, baseline)
        }
        Command::Swig { graph, interventions } => swig(&graph, &interventions),
        Command::Fixture { name, list } => fixture(name.as_deref(), list),
        Command::Reproduce { out, data } => return reproduce(&out, &data),
    };
    match res {
        Ok(stdout) => Output::ok(stdout),
        Err(f) => Output { code: f.code, stdout: f.stdout, stderr: f.stderr },
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail {
        code: EXIT_INPUT,
        stdout: String::new(),
        stderr: format!("error: cannot read {}: {e}\n", path.display()),
    })
}

fn name_of(path: &Path) -> String {
    path.display().to_string()
}

fn load_graph(path: &Path) -> Result<GraphFile, Fail> {
    Ok(GraphFile::parse(&read(path)?).map_err(|e| e.in_file(&name_of(path)))?)
}

fn load_query(path: &Path) -> Result<QueryFile, Fail> {
    Ok(QueryFile::parse(&read(path)?).map_err(|e| e.in_file(&name_of(path)))?)
}

fn certificate(n: &NonIdentified, format: Format) -> Fail {
    let stdout = match format {
        Format::Structured => format!("certificate {}\nvertices {}\n", n.kind(), n.vertices().join(" ")),
        _ => format!("not identified: {n}\n"),
    };
    Fail { code: EXIT_NOT_IDENTIFIED, stdout, stderr: String::new() }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn identify(graph: &Path, query: &Path, format: Option<&str>) -> Res {
    let gf = load_graph(graph)?;
    let qf = load_query(query)?;
    let format: Format = match format {
        Some(f) => f.parse()?,
        None => qf.format,
    };
    match qf.identify(&gf) {
        Ok(e) => Ok(with_newline(e.render(format))),
        Err(Error::NotIdentified(n)) => Err(certificate(&n, format)),
        Err(e) => Err(e.into()),
    }
}

/// `3/8 (0.375000000)`.
pub fn show(x: &Exact) -> String {
    format!("{} ({:.9})", format_rational(x), x.to_f64())
}

fn eval(model: &Path, query: &Path, oracle_only: bool) -> Res {
    let m = parse_model(&read(model)?).map_err(|e| e.in_file(&name_of(model)))?;
    let qf = load_query(query)?;
    let gf = GraphFile::from(m.graph().clone());
    let mut out = format!("query: {} for {}\n", qf.kind.as_str(), qf.outcome.join(" "));
    let estimand = if oracle_only {
        None
    } else {
        match qf.identify(&gf) {
            Ok(e) => Some(e),
            Err(Error::NotIdentified(n)) => return Err(certificate(&n, Format::Text)),
            Err(e) => return Err(e.into()),
        }
    };
    let oracle = harness::oracle_table(&m, &gf, &qf)?;
    let mut mismatch = false;
    match &estimand {
        Some(e) => {
            let law = m.observed_law()?;
            let names: Vec<&str> = oracle.vars().iter().map(String::as_str).collect();
            let est = pathid::evaluate_table(e, &law, &names)?;
            let _ = writeln!(out, "estimand: {}", e.render(Format::Text));
            let _ = writeln!(out, "{} | estimand | oracle | difference", names.join(" "));
            for ((st, o), v) in oracle.rows().zip(est.probs()) {
                let d = v.clone() - o.clone();
                mismatch |= v != o;
                let states: Vec<String> = st.iter().map(usize::to_string).collect();
                let _ = writeln!(out, "{} | {} | {} | {}", states.join(" "), show(v), show(o), show(&d));
            }
        }
        None => {
            let names: Vec<&str> = oracle.vars().iter().map(String::as_str).collect();
            let _ = writeln!(out, "{} | oracle", names.join(" "));
            for (st, o) in oracle.rows() {
                let states: Vec<String> = st.iter().map(usize::to_string).collect();
                let _ = writeln!(out, "{} | {}", states.join(" "), show(o));
            }
        }
    }
    if let Some(med) = &qf.mediator {
        if let ([t], [y]) = (qf.treatments.as_slice(), qf.outcome.as_slice()) {
            let v = Triple { a: &t.var, m: med, y };
            let (a, ap) = (t.active.state, t.baseline.as_ref().map_or(t.active.state, |b| b.state));
            let law = m.observed_law()?;
            let c = contrasts(&m, v, a, ap)?;
            let formula = mediation_formula(&law, v, a, ap)?;
            let _ = writeln!(out, "PDE (oracle): {}", show(&c.pde));
            let _ = writeln!(out, "mediation formula: {}", show(&formula));
        }
    }
    if mismatch {
        out.push_str("status: MISMATCH\n");
        return Err(Fail { code: EXIT_MISMATCH, stdout: out, stderr: "error: estimand disagrees with the oracle\n".into() });
    }
    if estimand.is_some() {
        out.push_str("status: match\n");
    }
    Ok(out)
}

fn bounds(table: &Path, v: Triple, a: usize, ap: usize) -> Res {
    let t = parse_table(&read(table)?).map_err(|e| e.in_file(&name_of(table)))?;
    let b = pde_bounds(&t, v, a, ap)?;
    let mut out = String::new();
    let _ = writeln!(out, "lower: {}", show(&b.lower));
    let _ = writeln!(out, "upper: {}", show(&b.upper));
    for m in 0..2 {
        let _ = writeln!(out, "stratum {}={m}: [{}, {}]", v.m, show(&b.l[m]), show(&b.u[m]));
    }
    Ok(out)
}

fn swig(graph: &Path, interventions: &[String]) -> Res {
    let gf = load_graph(graph)?;
    let g = gf.observed()?;
    let mut map = BTreeMap::new();
    for spec in interventions {
        let (var, label) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidQuery(format!("intervention `{spec}` is not VAR=LABEL")))?;
        map.insert(g.id(var)?, label.to_string());
    }
    Ok(construct_swig(&g, &map)?.render())
}

fn fixture(name: Option<&str>, list: bool) -> Res {
    let graphs = paper_graphs();
    if list {
        let mut s: String = graphs.keys().map(|k| format!("{k}\n")).collect();
        s.push_str("river_blindness\n");
        return Ok(s);
    }
    match name {
        Some("river_blindness") => Ok(model_text(&river_blindness(&RiverBlindnessParams::default())?)),
        Some(n) => match graphs.get(n) {
            Some(d) => Ok(GraphFile::from(d.clone()).to_text()),
            None => Err(Error::InvalidQuery(format!("unknown fixture `{n}`")).into()),
        },
        None => Err(Error::InvalidQuery("give a fixture name or --list".into()).into()),
    }
}

/// Library checks followed by the file contract check.
pub fn all_checks(data: &Path) -> Vec<Check> {
    let mut checks = harness::run_library_checks();
    checks.push(contract::check(data));
    checks
}

/// Machine-readable results. Timings are left out so the file only
/// changes when an outcome does.
pub fn results_json(checks: &[Check]) -> String {
    let items: Vec<serde_json::Value> = checks
        .iter()
        .map(|c| {
            serde_json::json!({
                "id": c.id,
                "title": c.title,
                "passed": c.passed,
                "detail": c.detail,
                "budget_seconds": c.budget.as_secs(),
            })
        })
        .collect();
    let all = checks.iter().all(|c| c.passed);
    let mut s = serde_json::to_string_pretty(&serde_json::json!({ "passed": all, "checks": items })).expect("json");
    s.push('\n');
    s
}

fn reproduce(out: &Path, data: &Path) -> Output {
    let checks = all_checks(data);
    let report = harness::markdown_report(&checks);
    let write = fs::create_dir_all(out)
        .and_then(|_| fs::write(out.join("report.md"), &report))
        .and_then(|_| fs::write(out.join("results.json"), results_json(&checks)));
    if let Err(e) = write {
        return Output { code: EXIT_INPUT, stdout: String::new(), stderr: format!("error: cannot write to {}: {e}\n", out.display()) };
    }
    let stdout: String = checks.iter().map(|c| format!("{}\n", c.line())).collect();
    let code = if checks.iter().all(|c| c.passed) { EXIT_OK } else { EXIT_MISMATCH };
    Output { code, stdout, stderr: String::new() }
}
