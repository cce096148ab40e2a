//! Text formats for graphs, queries, models and tables.
//!
//! All formats are line oriented. A line `key: value` starts an entry and
//! indented lines continue it; `#` starts a comment. Query, model and table
//! files begin with a version header. Every `to_text` output is canonical,
//! so parsing and re-serializing a canonical file reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::estimand::{Estimand, Format, Value};
use crate::graph::{Admg, HiddenDag, VSet};
use crate::identify::{id, id_path_specific, separable_query};
use crate::oracle::{DiscreteNpsem, Noise};
use crate::paths::{enumerate_proper_causal_paths, split_components, PseQuery};
use crate::scalar::{format_rational, parse_rational};
use crate::table::JointTable;
use crate::Exact;

pub const QUERY_HEADER: &str = "pathid-query 1";
pub const MODEL_HEADER: &str = "pathid-model 1";
pub const TABLE_HEADER: &str = "pathid-table 1";

struct Entry {
    key: String,
    value: String,
    line: usize,
    body: Vec<(usize, String)>,
}

fn entries(src: &str, header: Option<&str>) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    let mut seen_header = header.is_none();
    for (i, raw) in src.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line.trim() != header.unwrap() {
                return Err(Error::parse(n, format!("expected header `{}`", header.unwrap())));
            }
            seen_header = true;
            continue;
        }
        if line.starts_with([' ', '\t']) {
            let last = out.last_mut().ok_or_else(|| Error::parse(n, "indented line outside an entry"))?;
            last.body.push((n, line.trim().to_string()));
            continue;
        }
        let (k, v) = line.split_once(':').ok_or_else(|| Error::parse(n, "expected `key: value`"))?;
        out.push(Entry { key: k.trim().to_string(), value: v.trim().to_string(), line: n, body: Vec::new() });
    }
    if !seen_header {
        return Err(Error::parse(1, format!("missing header `{}`", header.unwrap())));
    }
    Ok(out)
}

fn ident(s: &str, line: usize) -> Result<&str> {
    let ok = s.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(s)
    } else {
        Err(Error::parse(line, format!("invalid identifier `{s}`")))
    }
}

fn once<'a>(es: &'a [Entry], key: &str) -> Result<Option<&'a Entry>> {
    let mut it = es.iter().filter(|e| e.key == key);
    let first = it.next();
    if let Some(dup) = it.next() {
        return Err(Error::parse(dup.line, format!("`{key}` given twice")));
    }
    Ok(first)
}

fn required<'a>(es: &'a [Entry], key: &str) -> Result<&'a Entry> {
    once(es, key)?.ok_or_else(|| Error::parse(0, format!("missing `{key}:`")))
}

/// A graph file: the declared graph and the vertices marked latent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphFile {
    pub graph: Admg,
    pub latent: VSet,
}

impl GraphFile {
    pub fn parse(src: &str) -> Result<Self> {
        let es = entries(src, None)?;
        for e in &es {
            if !["vars", "latent", "edges"].contains(&e.key.as_str()) {
                return Err(Error::parse(e.line, format!("unknown key `{}`", e.key)));
            }
        }
        Self::from_entries(&es)
    }

    fn from_entries(es: &[Entry]) -> Result<Self> {
        let vars = required(es, "vars")?;
        let mut b = Admg::builder();
        let mut names = Vec::new();
        for tok in vars.value.split_whitespace() {
            let (name, card) = match tok.split_once(':') {
                Some((n, c)) => {
                    let c: usize = c.parse().map_err(|_| Error::parse(vars.line, format!("bad cardinality in `{tok}`")))?;
                    (n, c)
                }
                None => (tok, 2),
            };
            if card == 0 {
                return Err(Error::parse(vars.line, format!("cardinality of `{name}` is 0")));
            }
            names.push(ident(name, vars.line)?.to_string());
            b = b.vertex(name, card);
        }
        let known = |n: &str, line: usize| -> Result<()> {
            if names.iter().any(|x| x == n) {
                Ok(())
            } else {
                Err(Error::parse(line, format!("unknown vertex `{n}`")))
            }
        };
        let mut latent_names = Vec::new();
        if let Some(l) = once(es, "latent")? {
            for n in l.value.split_whitespace() {
                known(n, l.line)?;
                latent_names.push(n.to_string());
            }
        }
        let mut edge_line = 0;
        if let Some(e) = once(es, "edges")? {
            edge_line = e.line;
            if !e.value.is_empty() {
                return Err(Error::parse(e.line, "edges go on indented lines after `edges:`"));
            }
            for (n, text) in &e.body {
                let toks: Vec<&str> = text.split_whitespace().collect();
                let [x, arrow, y] = toks[..] else {
                    return Err(Error::parse(*n, format!("expected `X -> Y`, `X <-> Y` or `X => Y`, got `{text}`")));
                };
                known(x, *n)?;
                known(y, *n)?;
                b = match arrow {
                    "->" => b.edge(x, y),
                    "=>" => b.copy_edge(x, y),
                    "<->" => b.bi(x, y),
                    _ => return Err(Error::parse(*n, format!("unknown edge mark `{arrow}`"))),
                };
            }
        }
        let graph = b.build().map_err(|e| Error::parse(edge_line.max(vars.line), e.to_string()))?;
        let latent = graph.set(&latent_names)?;
        if !latent.is_empty() && graph.has_bidirected() {
            return Err(Error::parse(edge_line, "latent vertices and bidirected edges cannot be mixed"));
        }
        Ok(GraphFile { graph, latent })
    }

    /// The graph over observed vertices.
    pub fn observed(&self) -> Result<Admg> {
        if self.latent.is_empty() {
            Ok(self.graph.clone())
        } else {
            Ok(self.hidden_dag()?.project())
        }
    }

    pub fn hidden_dag(&self) -> Result<HiddenDag> {
        HiddenDag::new(self.graph.clone(), self.latent.clone())
    }

    pub fn to_text(&self) -> String {
        graph_text(&self.graph, &self.latent)
    }
}

impl From<HiddenDag> for GraphFile {
    fn from(d: HiddenDag) -> Self {
        GraphFile { graph: d.dag, latent: d.hidden }
    }
}

fn graph_text(g: &Admg, latent: &VSet) -> String {
    let mut s = String::from("vars:");
    for v in g.vertices() {
        s.push(' ');
        s.push_str(&v.name);
        if v.card != 2 {
            let _ = write!(s, ":{}", v.card);
        }
    }
    s.push('\n');
    if !latent.is_empty() {
        let _ = writeln!(s, "latent: {}", g.names(latent).join(" "));
    }
    let mut dir: Vec<(usize, usize)> = g.directed_edges().collect();
    dir.sort_unstable();
    let mut bi: Vec<(usize, usize)> = g.bidirected_edges().map(|(a, b)| (a.min(b), a.max(b))).collect();
    bi.sort_unstable();
    if !dir.is_empty() || !bi.is_empty() {
        s.push_str("edges:\n");
    }
    for (a, b) in dir {
        let mark = if g.is_deterministic(a, b) { "=>" } else { "->" };
        let _ = writeln!(s, "  {} {mark} {}", g.name(a), g.name(b));
    }
    for (a, b) in bi {
        let _ = writeln!(s, "  {} <-> {}", g.name(a), g.name(b));
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryKind {
    Interventional,
    PathSpecific,
    ConditionalPathSpecific,
    Separable,
    Bounds,
}

impl QueryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::Interventional => "interventional",
            QueryKind::PathSpecific => "path_specific",
            QueryKind::ConditionalPathSpecific => "conditional_path_specific",
            QueryKind::Separable => "separable",
            QueryKind::Bounds => "bounds",
        }
    }

    fn parse(s: &str, line: usize) -> Result<Self> {
        Ok(match s {
            "interventional" => QueryKind::Interventional,
            "path_specific" => QueryKind::PathSpecific,
            "conditional_path_specific" => QueryKind::ConditionalPathSpecific,
            "separable" => QueryKind::Separable,
            "bounds" => QueryKind::Bounds,
            _ => return Err(Error::parse(line, format!("unknown query kind `{s}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreatmentSpec {
    pub var: String,
    pub active: Value,
    pub baseline: Option<Value>,
}

/// Active paths: every proper causal path, or an explicit list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathSpec {
    All,
    List(Vec<Vec<String>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryFile {
    pub kind: QueryKind,
    pub outcome: Vec<String>,
    pub treatments: Vec<TreatmentSpec>,
    pub mediator: Option<String>,
    pub paths: PathSpec,
    pub given: Vec<String>,
    pub format: Format,
}

fn parse_value(tok: &str, line: usize) -> Result<Value> {
    let (label, state) = tok.rsplit_once(':').ok_or_else(|| Error::parse(line, format!("expected `label:state`, got `{tok}`")))?;
    let state = state.parse().map_err(|_| Error::parse(line, format!("bad state in `{tok}`")))?;
    if label.is_empty() || label.contains([' ', ',', '|', '=', '(', ')']) {
        return Err(Error::parse(line, format!("bad value label `{label}`")));
    }
    Ok(Value::new(label, state))
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Text => "text",
        Format::Latex => "latex",
        Format::Structured => "structured",
    }
}

impl QueryFile {
    pub fn parse(src: &str) -> Result<Self> {
        let es = entries(src, Some(QUERY_HEADER))?;
        let mut q = QueryFile {
            kind: QueryKind::parse(&required(&es, "kind")?.value, required(&es, "kind")?.line)?,
            outcome: Vec::new(),
            treatments: Vec::new(),
            mediator: None,
            paths: PathSpec::List(Vec::new()),
            given: Vec::new(),
            format: Format::Text,
        };
        let mut paths = Vec::new();
        let mut all = false;
        for e in &es {
            let n = e.line;
            if !e.body.is_empty() {
                return Err(Error::parse(e.body[0].0, "unexpected indented line"));
            }
            match e.key.as_str() {
                "kind" => {}
                "outcome" => {
                    for v in e.value.split_whitespace() {
                        q.outcome.push(ident(v, n)?.to_string());
                    }
                }
                "given" => {
                    for v in e.value.split_whitespace() {
                        q.given.push(ident(v, n)?.to_string());
                    }
                }
                "mediator" => q.mediator = Some(ident(&e.value, n)?.to_string()),
                "format" => q.format = e.value.parse().map_err(|_| Error::parse(n, format!("unknown format `{}`", e.value)))?,
                "treatment" => {
                    let mut toks = e.value.split_whitespace();
                    let var = ident(toks.next().ok_or_else(|| Error::parse(n, "missing treatment"))?, n)?.to_string();
                    let (mut active, mut baseline) = (None, None);
                    for t in toks {
                        match t.split_once('=') {
                            Some(("active", v)) => active = Some(parse_value(v, n)?),
                            Some(("baseline", v)) => baseline = Some(parse_value(v, n)?),
                            _ => return Err(Error::parse(n, format!("unexpected `{t}`"))),
                        }
                    }
                    let active = active.ok_or_else(|| Error::parse(n, "treatment needs `active=label:state`"))?;
                    q.treatments.push(TreatmentSpec { var, active, baseline });
                }
                "path" => {
                    if e.value == "all" {
                        all = true;
                        continue;
                    }
                    let p: Vec<String> = e.value.split("->").map(|v| ident(v.trim(), n).map(str::to_string)).collect::<Result<_>>()?;
                    if p.len() < 2 {
                        return Err(Error::parse(n, "a path needs at least one edge"));
                    }
                    paths.push(p);
                }
                k => return Err(Error::parse(n, format!("unknown key `{k}`"))),
            }
        }
        if all && !paths.is_empty() {
            return Err(Error::parse(0, "`path: all` cannot be combined with explicit paths"));
        }
        q.paths = if all { PathSpec::All } else { PathSpec::List(paths) };
        if q.outcome.is_empty() {
            return Err(Error::parse(0, "missing `outcome:`"));
        }
        if q.treatments.is_empty() {
            return Err(Error::parse(0, "missing `treatment:`"));
        }
        Ok(q)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{QUERY_HEADER}\nkind: {}\noutcome: {}\n", self.kind.as_str(), self.outcome.join(" "));
        for t in &self.treatments {
            let _ = write!(s, "treatment: {} active={}:{}", t.var, t.active.label, t.active.state);
            if let Some(b) = &t.baseline {
                let _ = write!(s, " baseline={}:{}", b.label, b.state);
            }
            s.push('\n');
        }
        if let Some(m) = &self.mediator {
            let _ = writeln!(s, "mediator: {m}");
        }
        match &self.paths {
            PathSpec::All => s.push_str("path: all\n"),
            PathSpec::List(ps) => {
                for p in ps {
                    let _ = writeln!(s, "path: {}", p.join(" -> "));
                }
            }
        }
        if !self.given.is_empty() {
            let _ = writeln!(s, "given: {}", self.given.join(" "));
        }
        let _ = writeln!(s, "format: {}", format_name(self.format));
        s
    }

    /// The path-specific query against an observed graph.
    pub fn pse(&self, g: &Admg) -> Result<PseQuery> {
        let mut treatments = BTreeMap::new();
        for t in &self.treatments {
            let b = t
                .baseline
                .clone()
                .ok_or_else(|| Error::InvalidQuery(format!("treatment `{}` needs a baseline value", t.var)))?;
            treatments.insert(g.id(&t.var)?, (t.active.clone(), b));
        }
        let outcome = g.set(&self.outcome)?;
        let pi = match &self.paths {
            PathSpec::All => enumerate_proper_causal_paths(g, &treatments.keys().copied().collect(), &outcome)?,
            PathSpec::List(ps) => ps.iter().map(|p| g.set_ordered(p)).collect::<Result<_>>()?,
        };
        let q = PseQuery { outcome, treatments, pi, given: g.set(&self.given)? };
        q.validate(g)?;
        Ok(q)
    }

    /// Treatments at their active values.
    pub fn intervention(&self, g: &Admg) -> Result<BTreeMap<usize, Value>> {
        let mut out = BTreeMap::new();
        for t in &self.treatments {
            let v = g.id(&t.var)?;
            if t.active.state >= g.card(v) {
                return Err(Error::OutOfRange(format!("state {} of `{}`", t.active.state, t.var)));
            }
            out.insert(v, t.active.clone());
        }
        Ok(out)
    }

    /// Run the identification this query asks for.
    pub fn identify(&self, graph: &GraphFile) -> Result<Estimand> {
        match self.kind {
            QueryKind::Interventional => {
                if !self.given.is_empty() {
                    return Err(Error::InvalidQuery("interventional queries take no `given:`".into()));
                }
                let g = graph.observed()?;
                id(&g, &self.intervention(&g)?, &g.set(&self.outcome)?)
            }
            QueryKind::PathSpecific | QueryKind::ConditionalPathSpecific => {
                if self.kind == QueryKind::PathSpecific && !self.given.is_empty() {
                    return Err(Error::InvalidQuery("use kind `conditional_path_specific` with `given:`".into()));
                }
                let g = graph.observed()?;
                id_path_specific(&g, &self.pse(&g)?)
            }
            QueryKind::Separable => {
                if !graph.latent.is_empty() {
                    return Err(Error::InvalidQuery("separable queries need a fully observed graph".into()));
                }
                let ex = split_components(&graph.graph)?;
                let mut vals = BTreeMap::new();
                for t in &self.treatments {
                    let k = ex.graph.id(&t.var)?;
                    if !ex.is_copy(k) {
                        return Err(Error::InvalidQuery(format!("`{}` is not a treatment component", t.var)));
                    }
                    vals.insert(k, t.active.clone());
                }
                separable_query(&ex, &vals, &ex.graph.set(&self.outcome)?)
            }
            QueryKind::Bounds => Err(Error::InvalidQuery("bounds queries have no estimand".into())),
        }
    }
}

fn rational(tok: &str, line: usize) -> Result<Exact> {
    parse_rational(tok).ok_or_else(|| Error::parse(line, format!("bad probability `{tok}`")))
}

fn rationals<'a>(toks: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<Exact>> {
    toks.map(|t| rational(t, line)).collect()
}

/// Parse a model file.
pub fn parse_model(src: &str) -> Result<DiscreteNpsem<Exact>> {
    let es = entries(src, Some(MODEL_HEADER))?;
    let gf = GraphFile::from_entries(&es)?;
    let g = &gf.graph;
    let n = g.len();
    let mut pmfs: Vec<Option<Vec<Exact>>> = vec![None; n];
    let mut mech: Vec<Option<Vec<usize>>> = vec![None; n];
    let mut joint_cards = None;
    let mut joint: Option<Vec<Exact>> = None;
    for e in &es {
        let line = e.line;
        let mut key = e.key.split_whitespace();
        match (key.next(), key.next(), key.next()) {
            (Some("vars" | "latent" | "edges"), None, None) => {}
            (Some("noise"), Some(v), None) => {
                let i = g.id(v).map_err(|_| Error::parse(line, format!("unknown vertex `{v}`")))?;
                if pmfs[i].is_some() {
                    return Err(Error::parse(line, format!("noise for `{v}` given twice")));
                }
                pmfs[i] = Some(rationals(e.value.split_whitespace(), line)?);
            }
            (Some("mech"), Some(v), None) => {
                let i = g.id(v).map_err(|_| Error::parse(line, format!("unknown vertex `{v}`")))?;
                if mech[i].is_some() {
                    return Err(Error::parse(line, format!("mechanism for `{v}` given twice")));
                }
                let mut table = Vec::new();
                for tok in e.value.split_whitespace().filter(|t| *t != "|") {
                    table.push(tok.parse().map_err(|_| Error::parse(line, format!("bad state `{tok}`")))?);
                }
                mech[i] = Some(table);
            }
            (Some("joint-noise"), None, None) => {
                let cards: Vec<usize> = e
                    .value
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::parse(line, format!("bad cardinality `{t}`"))))
                    .collect::<Result<_>>()?;
                joint_cards = Some(cards);
            }
            (Some("joint"), None, None) => {
                let mut p = rationals(e.value.split_whitespace(), line)?;
                for (l, text) in &e.body {
                    p.extend(rationals(text.split_whitespace(), *l)?);
                }
                joint = Some(p);
            }
            _ => return Err(Error::parse(line, format!("unknown key `{}`", e.key))),
        }
    }
    let mech: Vec<Vec<usize>> = mech
        .into_iter()
        .enumerate()
        .map(|(v, m)| m.ok_or_else(|| Error::parse(0, format!("missing `mech {}:`", g.name(v)))))
        .collect::<Result<_>>()?;
    let noise = match (joint_cards, joint) {
        (Some(cards), Some(probs)) => {
            if let Some(v) = pmfs.iter().position(Option::is_some) {
                return Err(Error::parse(0, format!("`noise {}:` cannot be mixed with a joint noise table", g.name(v))));
            }
            Noise::Joint { cards, probs }
        }
        (None, None) => Noise::Independent(
            pmfs.into_iter()
                .enumerate()
                .map(|(v, p)| p.ok_or_else(|| Error::parse(0, format!("missing `noise {}:`", g.name(v)))))
                .collect::<Result<_>>()?,
        ),
        _ => return Err(Error::parse(0, "`joint-noise:` and `joint:` go together")),
    };
    DiscreteNpsem::new(gf.hidden_dag()?, noise, mech).map_err(|e| Error::parse(0, e.to_string()))
}

fn join_rationals(p: &[Exact]) -> String {
    p.iter().map(format_rational).collect::<Vec<_>>().join(" ")
}

/// Canonical text of a model.
pub fn model_text(m: &DiscreteNpsem<Exact>) -> String {
    let g = &m.graph().dag;
    let mut s = format!("{MODEL_HEADER}\n{}", graph_text(g, &m.graph().hidden));
    match m.noise() {
        Noise::Independent(p) => {
            for v in 0..g.len() {
                let _ = writeln!(s, "noise {}: {}", g.name(v), join_rationals(&p[v]));
            }
        }
        Noise::Joint { cards, probs } => {
            let cs: Vec<String> = cards.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "joint-noise: {}", cs.join(" "));
            s.push_str("joint:\n");
            let width = cards.last().copied().unwrap_or(1).max(1);
            for chunk in probs.chunks(width) {
                let _ = writeln!(s, "  {}", join_rationals(chunk));
            }
        }
    }
    for v in 0..g.len() {
        let nc = m.noise_card(v);
        let rows: Vec<String> = m.mechanisms()[v]
            .chunks(nc)
            .map(|r| r.iter().map(usize::to_string).collect::<Vec<_>>().join(" "))
            .collect();
        let _ = writeln!(s, "mech {}: {}", g.name(v), rows.join(" | "));
    }
    s
}

/// Parse a table file.
pub fn parse_table(src: &str) -> Result<JointTable<Exact>> {
    let es = entries(src, Some(TABLE_HEADER))?;
    let vars = required(&es, "vars")?;
    let mut decl = Vec::new();
    for tok in vars.value.split_whitespace() {
        let (name, card) = match tok.split_once(':') {
            Some((n, c)) => (n, c.parse().map_err(|_| Error::parse(vars.line, format!("bad cardinality in `{tok}`")))?),
            None => (tok, 2usize),
        };
        decl.push((ident(name, vars.line)?.to_string(), card));
    }
    let probs_e = required(&es, "probs")?;
    if let Some(e) = es.iter().find(|e| e.key != "vars" && e.key != "probs") {
        return Err(Error::parse(e.line, format!("unknown key `{}`", e.key)));
    }
    let size: usize = decl.iter().map(|v| v.1).product();
    let mut t = JointTable::<Exact>::unchecked(decl.clone(), vec![Exact::from_integer(0.into()); size])
        .map_err(|e| Error::parse(vars.line, e.to_string()))?;
    let mut seen = vec![false; size];
    for (n, text) in &probs_e.body {
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != decl.len() + 1 {
            return Err(Error::parse(*n, format!("expected {} states and a probability", decl.len())));
        }
        let mut st = Vec::new();
        for (k, tok) in toks[..decl.len()].iter().enumerate() {
            let x: usize = tok.parse().map_err(|_| Error::parse(*n, format!("bad state `{tok}`")))?;
            if x >= decl[k].1 {
                return Err(Error::parse(*n, format!("state {x} out of range for `{}`", decl[k].0)));
            }
            st.push(x);
        }
        let idx = crate::table::mixed_index(t.cards(), &st);
        if seen[idx] {
            return Err(Error::parse(*n, "row given twice"));
        }
        seen[idx] = true;
        t.add_at(&st, &rational(toks[decl.len()], *n)?);
    }
    JointTable::new(decl, t.probs().to_vec()).map_err(|e| Error::parse(probs_e.line, e.to_string()))
}

/// Canonical text of a table: every row, in mixed-radix order.
pub fn table_text(t: &JointTable<Exact>) -> String {
    let mut s = format!("{TABLE_HEADER}\nvars:");
    for (v, c) in t.vars().iter().zip(t.cards()) {
        s.push(' ');
        s.push_str(v);
        if *c != 2 {
            let _ = write!(s, ":{c}");
        }
    }
    s.push_str("\nprobs:\n");
    for (st, p) in t.rows() {
        let st: Vec<String> = st.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "  {} {}", st.join(" "), format_rational(p));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG: &str = "\
# comment
vars: H A M:3 Y
latent: H
edges:
  A -> M
  A -> Y
  M -> Y
  H -> M
  H -> Y
";

    #[test]
    fn graph_round_trip() {
        let g = GraphFile::parse(FIG).unwrap();
        let text = g.to_text();
        assert_eq!(GraphFile::parse(&text).unwrap(), g);
        assert_eq!(GraphFile::parse(&text).unwrap().to_text(), text);
        let p = g.observed().unwrap();
        assert!(p.has_bi(p.id("M").unwrap(), p.id("Y").unwrap()));
    }

    #[test]
    fn graph_errors_carry_lines() {
        let e = GraphFile::parse("vars: A Y\nedges:\n  A -> Z\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
        let e = GraphFile::parse("vars: A Y\nedges:\n  A -> Y\n  Y -> A\n").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
    }

    #[test]
    fn query_round_trip() {
        let src = "pathid-query 1\nkind: path_specific\noutcome: Y\ntreatment: A active=a:1 baseline=a′:0\npath: A -> Y\nformat: structured\n";
        let q = QueryFile::parse(src).unwrap();
        assert_eq!(q.to_text(), src);
        assert!(QueryFile::parse("kind: path_specific\n").is_err());
    }

    #[test]
    fn model_and_table_round_trip() {
        let g = crate::fixtures::river_blindness(&crate::fixtures::RiverBlindnessParams::<Exact>::default()).unwrap();
        let text = model_text(&g);
        let back = parse_model(&text).unwrap();
        assert_eq!(model_text(&back), text);
        let law = back.observed_law().unwrap();
        let tt = table_text(&law);
        assert_eq!(parse_table(&tt).unwrap(), law);
        assert_eq!(table_text(&parse_table(&tt).unwrap()), tt);
    }
}
