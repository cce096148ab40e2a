//! Symbolic functionals of the observed law.
//!
//! An [`Estimand`] is a tree of conditional probabilities under sums,
//! products and quotients. Variables are addressed by name. An atom without a
//! value refers to the variable's current binding: the nearest enclosing
//! [`Estimand::Sum`] over it, or, when free, an outcome value supplied by the
//! caller.
//!
//! A sum ranges only over bound variables that occur free in its body. A sum
//! over an unused variable is therefore the identity rather than a scaling by
//! the variable's cardinality, which makes dropping vacuous binders
//! evaluation-preserving.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::table::{mixed_states, JointTable};

/// A symbolic value label tied to a concrete state, e.g. `a′` ↦ 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Value {
    pub label: String,
    pub state: usize,
}

impl Value {
    pub fn new(label: &str, state: usize) -> Self {
        Value { label: label.to_string(), state }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub var: String,
    pub val: Option<Value>,
}

impl Atom {
    pub fn free(var: &str) -> Self {
        Atom { var: var.to_string(), val: None }
    }

    pub fn fixed(var: &str, val: Value) -> Self {
        Atom { var: var.to_string(), val: Some(val) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Estimand {
    Prob { target: Vec<Atom>, given: Vec<Atom> },
    /// The empty product is the constant 1.
    Product(Vec<Estimand>),
    Sum { vars: Vec<String>, body: Box<Estimand> },
    Quotient { num: Box<Estimand>, den: Box<Estimand> },
    /// Marginalization of a joint expression over some of its free variables.
    Marginal { vars: Vec<String>, body: Box<Estimand> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Latex,
    Structured,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Format::Text),
            "latex" => Ok(Format::Latex),
            "structured" => Ok(Format::Structured),
            other => Err(Error::InvalidQuery(format!("unknown format `{other}`"))),
        }
    }
}

impl Estimand {
    pub fn one() -> Self {
        Estimand::Product(Vec::new())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Estimand::Product(v) if v.is_empty())
    }

    pub fn prob(target: Vec<Atom>, given: Vec<Atom>) -> Self {
        Estimand::Prob { target, given }
    }

    pub fn product(factors: Vec<Estimand>) -> Self {
        Estimand::Product(factors)
    }

    pub fn sum(vars: Vec<String>, body: Estimand) -> Self {
        if vars.is_empty() {
            body
        } else {
            Estimand::Sum { vars, body: Box::new(body) }
        }
    }

    pub fn quotient(num: Estimand, den: Estimand) -> Self {
        Estimand::Quotient { num: Box::new(num), den: Box::new(den) }
    }

    pub fn marginal(vars: Vec<String>, body: Estimand) -> Self {
        Estimand::Marginal { vars, body: Box::new(body) }
    }

    /// Variables used without a value and not bound inside `self`.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            Estimand::Prob { target, given } => {
                for a in target.iter().chain(given) {
                    if a.val.is_none() {
                        out.insert(a.var.clone());
                    }
                }
            }
            Estimand::Product(fs) => fs.iter().for_each(|f| f.collect_free(out)),
            Estimand::Sum { vars, body } | Estimand::Marginal { vars, body } => {
                let mut inner = BTreeSet::new();
                body.collect_free(&mut inner);
                out.extend(inner.into_iter().filter(|v| !vars.contains(v)));
            }
            Estimand::Quotient { num, den } => {
                num.collect_free(out);
                den.collect_free(out);
            }
        }
    }

    pub fn has_free(&self, var: &str) -> bool {
        self.free_vars().contains(var)
    }

    /// Replace free occurrences of `var` by a fixed value, respecting binders.
    pub fn substitute(&self, var: &str, val: &Value) -> Estimand {
        match self {
            Estimand::Prob { target, given } => {
                let f = |a: &Atom| {
                    if a.var == var && a.val.is_none() {
                        Atom::fixed(var, val.clone())
                    } else {
                        a.clone()
                    }
                };
                Estimand::Prob { target: target.iter().map(f).collect(), given: given.iter().map(f).collect() }
            }
            Estimand::Product(fs) => Estimand::Product(fs.iter().map(|f| f.substitute(var, val)).collect()),
            Estimand::Sum { vars, body } if !vars.iter().any(|v| v == var) => {
                Estimand::Sum { vars: vars.clone(), body: Box::new(body.substitute(var, val)) }
            }
            Estimand::Marginal { vars, body } if !vars.iter().any(|v| v == var) => {
                Estimand::Marginal { vars: vars.clone(), body: Box::new(body.substitute(var, val)) }
            }
            Estimand::Sum { .. } | Estimand::Marginal { .. } => self.clone(),
            Estimand::Quotient { num, den } => {
                Estimand::quotient(num.substitute(var, val), den.substitute(var, val))
            }
        }
    }

    /// All variable names mentioned anywhere, bound or free.
    pub fn mentioned(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_probs(&mut |t, g| {
            for a in t.iter().chain(g) {
                out.insert(a.var.clone());
            }
        });
        out
    }

    fn visit_probs(&self, f: &mut impl FnMut(&[Atom], &[Atom])) {
        match self {
            Estimand::Prob { target, given } => f(target, given),
            Estimand::Product(fs) => fs.iter().for_each(|x| x.visit_probs(f)),
            Estimand::Sum { body, .. } | Estimand::Marginal { body, .. } => body.visit_probs(f),
            Estimand::Quotient { num, den } => {
                num.visit_probs(f);
                den.visit_probs(f);
            }
        }
    }

    fn factors(&self) -> Vec<Estimand> {
        match self {
            Estimand::Product(fs) => fs.clone(),
            other => vec![other.clone()],
        }
    }

    pub fn render(&self, fmt: Format) -> String {
        match fmt {
            Format::Text => render_text(self, &Scope::root(self)),
            Format::Latex => render_latex(self, &Scope::root(self)),
            Format::Structured => {
                let mut out = String::from("estimand v1\n");
                render_structured(self, 0, &mut out);
                out
            }
        }
    }
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(Format::Text))
    }
}

// ---------------------------------------------------------------------------
// Evaluation

enum Src {
    Fixed(usize),
    Slot(usize),
}

enum Node {
    Prob { num: Vec<(usize, Src)>, den: Vec<(usize, Src)>, text: String },
    Product(Vec<Node>),
    Sum { slots: Vec<(usize, usize)>, body: Box<Node> },
    Quotient { num: Box<Node>, den: Box<Node>, text: String },
}

struct Compiler<'a, S> {
    table: &'a JointTable<S>,
    slots: usize,
}

impl<S: Scalar> Compiler<'_, S> {
    fn compile(&mut self, e: &Estimand, scope: &HashMap<String, usize>) -> Result<Node> {
        Ok(match e {
            Estimand::Prob { target, given } => {
                let atom = |a: &Atom| -> Result<(usize, Src)> {
                    let i = self.table.index_of(&a.var)?;
                    let src = match &a.val {
                        Some(v) => Src::Fixed(v.state),
                        None => Src::Slot(*scope.get(&a.var).ok_or_else(|| Error::Unbound(a.var.clone()))?),
                    };
                    Ok((i, src))
                };
                let den: Vec<(usize, Src)> = given.iter().map(atom).collect::<Result<_>>()?;
                let num: Vec<(usize, Src)> = target.iter().chain(given).map(atom).collect::<Result<_>>()?;
                Node::Prob { num, den, text: render_text(e, &Scope::root(e)) }
            }
            Estimand::Product(fs) => {
                Node::Product(fs.iter().map(|f| self.compile(f, scope)).collect::<Result<_>>()?)
            }
            Estimand::Sum { vars, body } | Estimand::Marginal { vars, body } => {
                let used = body.free_vars();
                let mut inner = scope.clone();
                let mut slots = Vec::new();
                let mut seen = BTreeSet::new();
                for v in vars.iter().filter(|v| used.contains(*v)) {
                    if !seen.insert(v) {
                        continue;
                    }
                    let s = self.slots;
                    self.slots += 1;
                    inner.insert(v.clone(), s);
                    slots.push((s, self.table.card_of(v)?));
                }
                Node::Sum { slots, body: Box::new(self.compile(body, &inner)?) }
            }
            Estimand::Quotient { num, den } => Node::Quotient {
                num: Box::new(self.compile(num, scope)?),
                den: Box::new(self.compile(den, scope)?),
                text: render_text(den, &Scope::root(den)),
            },
        })
    }
}

fn event(spec: &[(usize, Src)], env: &[usize]) -> Vec<(usize, usize)> {
    spec.iter()
        .map(|(i, s)| {
            (
                *i,
                match s {
                    Src::Fixed(x) => *x,
                    Src::Slot(k) => env[*k],
                },
            )
        })
        .collect()
}

fn eval_node<S: Scalar>(n: &Node, t: &JointTable<S>, env: &mut Vec<usize>) -> Result<S> {
    match n {
        Node::Prob { num, den, text } => {
            let d = if den.is_empty() { S::one() } else { t.event_prob(&event(den, env)) };
            if d.is_zero() {
                return Err(Error::ZeroConditioning(text.clone()));
            }
            Ok(t.event_prob(&event(num, env)) / d)
        }
        Node::Product(fs) => {
            let mut acc = S::one();
            let mut err = None;
            for f in fs {
                match eval_node(f, t, env) {
                    Ok(v) if v.is_zero() => return Ok(S::zero()),
                    Ok(v) => acc = acc * v,
                    Err(e) => {
                        err.get_or_insert(e);
                    }
                }
            }
            match err {
                Some(e) => Err(e),
                None => Ok(acc),
            }
        }
        Node::Sum { slots, body } => {
            let cards: Vec<usize> = slots.iter().map(|s| s.1).collect();
            let total: usize = cards.iter().product();
            let mut acc = S::zero();
            for k in 0..total {
                let st = mixed_states(&cards, k);
                for ((slot, _), s) in slots.iter().zip(st) {
                    env[*slot] = s;
                }
                acc = acc + eval_node(body, t, env)?;
            }
            Ok(acc)
        }
        Node::Quotient { num, den, text } => {
            let d = eval_node(den, t, env)?;
            if d.is_zero() {
                return Err(Error::ZeroConditioning(text.clone()));
            }
            Ok(eval_node(num, t, env)? / d)
        }
    }
}

/// Compiled estimand bound to a table; reusable across outcome values.
pub struct Evaluator<'a, S> {
    table: &'a JointTable<S>,
    root: Node,
    free: Vec<String>,
    nslots: usize,
}

impl<'a, S: Scalar> Evaluator<'a, S> {
    pub fn new(e: &Estimand, table: &'a JointTable<S>) -> Result<Self> {
        let free: Vec<String> = e.free_vars().into_iter().collect();
        let mut c = Compiler { table, slots: free.len() };
        let scope: HashMap<String, usize> = free.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let root = c.compile(e, &scope)?;
        Ok(Evaluator { table, root, free, nslots: c.slots })
    }

    /// Free variables, sorted by name.
    pub fn free(&self) -> &[String] {
        &self.free
    }

    pub fn eval(&self, bindings: &[(&str, usize)]) -> Result<S> {
        let mut env = vec![0; self.nslots];
        for (i, v) in self.free.iter().enumerate() {
            let s = bindings
                .iter()
                .find(|b| b.0 == v)
                .map(|b| b.1)
                .ok_or_else(|| Error::Unbound(v.clone()))?;
            env[i] = s;
        }
        eval_node(&self.root, self.table, &mut env)
    }
}

/// Value of `e` on `t` with the free variables bound as given.
pub fn evaluate<S: Scalar>(e: &Estimand, t: &JointTable<S>, bindings: &[(&str, usize)]) -> Result<S> {
    Evaluator::new(e, t)?.eval(bindings)
}

/// Values of `e` on `t` over every configuration of its free variables,
/// arranged in the order `vars` (which must list exactly the free variables).
pub fn evaluate_table<S: Scalar>(e: &Estimand, t: &JointTable<S>, vars: &[&str]) -> Result<JointTable<S>> {
    let ev = Evaluator::new(e, t)?;
    let want: BTreeSet<&str> = vars.iter().copied().collect();
    let have: BTreeSet<&str> = ev.free().iter().map(String::as_str).collect();
    if let Some(v) = have.difference(&want).next() {
        return Err(Error::Unbound(v.to_string()));
    }
    let cards: Vec<usize> = vars.iter().map(|v| t.card_of(v)).collect::<Result<_>>()?;
    let mut out = JointTable::zeros(vars.iter().map(|v| v.to_string()).zip(cards.iter().copied()).collect());
    let total: usize = cards.iter().product();
    for k in 0..total {
        let st = mixed_states(&cards, k);
        let b: Vec<(&str, usize)> = vars.iter().copied().zip(st.iter().copied()).collect();
        let v = ev.eval(&b)?;
        out.add_at(&st, &v);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Simplification

/// Apply the local rewrites to a fixpoint. Every rewrite preserves evaluation
/// wherever the input evaluates without a zero-probability conditioning event.
pub fn simplify(e: &Estimand) -> Estimand {
    let mut cur = e.clone();
    loop {
        let next = simplify_once(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

fn sort_atoms(v: &[Atom]) -> Vec<Atom> {
    let mut v = v.to_vec();
    v.sort();
    v.dedup();
    v
}

fn simplify_once(e: &Estimand) -> Estimand {
    match e {
        Estimand::Prob { target, given } => {
            if target.is_empty() {
                return Estimand::one();
            }
            Estimand::Prob { target: sort_atoms(target), given: sort_atoms(given) }
        }
        Estimand::Product(fs) => {
            let mut flat = Vec::new();
            for f in fs {
                match simplify_once(f) {
                    Estimand::Product(inner) => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            if flat.len() == 1 {
                flat.pop().unwrap()
            } else {
                Estimand::Product(flat)
            }
        }
        Estimand::Marginal { vars, body } => Estimand::Sum { vars: vars.clone(), body: body.clone() },
        Estimand::Sum { vars, body } => simplify_sum(vars, &simplify_once(body)),
        Estimand::Quotient { num, den } => simplify_quotient(&simplify_once(num), &simplify_once(den)),
    }
}

fn simplify_sum(vars: &[String], body: &Estimand) -> Estimand {
    let used = body.free_vars();
    let mut vars: Vec<String> = vars.iter().filter(|v| used.contains(*v)).cloned().collect();
    vars.sort();
    vars.dedup();
    if vars.is_empty() {
        return body.clone();
    }
    if let Estimand::Sum { vars: inner, body: b } = body {
        let mut all = vars.clone();
        all.extend(inner.iter().cloned());
        return Estimand::Sum { vars: all, body: b.clone() };
    }
    let mut fs = body.factors();
    // Sum out a variable that appears only as an unvalued target of one factor.
    let mut changed = true;
    while changed {
        changed = false;
        for x in vars.clone() {
            let holders: Vec<usize> = (0..fs.len()).filter(|&i| fs[i].has_free(&x)).collect();
            if holders.len() != 1 {
                continue;
            }
            if let Estimand::Prob { target, given } = &fs[holders[0]] {
                let in_target = target.iter().filter(|a| a.var == x && a.val.is_none()).count() == 1;
                let in_given = given.iter().any(|a| a.var == x);
                let other_target = target.iter().any(|a| a.var == x && a.val.is_some());
                if in_target && !in_given && !other_target {
                    let t: Vec<Atom> = target.iter().filter(|a| a.var != x).cloned().collect();
                    if t.is_empty() {
                        fs.remove(holders[0]);
                    } else {
                        fs[holders[0]] = Estimand::Prob { target: t, given: given.clone() };
                    }
                    vars.retain(|v| v != &x);
                    changed = true;
                }
            }
        }
    }
    let (inside, outside): (Vec<Estimand>, Vec<Estimand>) =
        fs.into_iter().partition(|f| vars.iter().any(|v| f.has_free(v)));
    let inner = match inside.len() {
        0 => Estimand::one(),
        1 => inside.into_iter().next().unwrap(),
        _ => Estimand::Product(inside),
    };
    let summed = if vars.is_empty() || inner.is_one() {
        inner
    } else {
        Estimand::Sum { vars, body: Box::new(inner) }
    };
    if outside.is_empty() {
        summed
    } else {
        let mut all = outside;
        if !summed.is_one() {
            all.push(summed);
        }
        Estimand::Product(all)
    }
}

fn simplify_quotient(num: &Estimand, den: &Estimand) -> Estimand {
    if den.is_one() {
        return num.clone();
    }
    let mut nf = num.factors();
    let mut df = den.factors();
    let mut i = 0;
    while i < nf.len() {
        if let Some(j) = df.iter().position(|d| d == &nf[i]) {
            nf.remove(i);
            df.remove(j);
        } else {
            i += 1;
        }
    }
    if let ([Estimand::Prob { target: t1, given: g1 }], [Estimand::Prob { target: t2, given: g2 }]) =
        (nf.as_slice(), df.as_slice())
    {
        let s1: BTreeSet<&Atom> = t1.iter().collect();
        let s2: BTreeSet<&Atom> = t2.iter().collect();
        let gs1: BTreeSet<&Atom> = g1.iter().collect();
        let gs2: BTreeSet<&Atom> = g2.iter().collect();
        if gs1 == gs2 && s2.is_subset(&s1) && s2.len() < s1.len() {
            let target: Vec<Atom> = t1.iter().filter(|a| !s2.contains(a)).cloned().collect();
            let mut given: Vec<Atom> = t2.clone();
            given.extend(g1.iter().cloned());
            return Estimand::Prob { target: sort_atoms(&target), given: sort_atoms(&given) };
        }
    }
    let wrap = |mut v: Vec<Estimand>| match v.len() {
        1 => v.pop().unwrap(),
        _ => Estimand::Product(v),
    };
    if df.is_empty() {
        return wrap(nf);
    }
    Estimand::quotient(wrap(nf), wrap(df))
}

// ---------------------------------------------------------------------------
// Canonical ordering

/// Deterministic layout: atoms, summation indices and product factors are
/// ordered latest-first with respect to `order` (typically a topological
/// order of the graph), matching the usual way such formulae are written.
pub fn canonicalize(e: &Estimand, order: &[String]) -> Estimand {
    let pos: HashMap<&str, usize> = order.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    canon(e, &pos)
}

fn key_of(var: &str, pos: &HashMap<&str, usize>) -> (usize, String) {
    (pos.get(var).copied().unwrap_or(usize::MAX), var.to_string())
}

fn canon(e: &Estimand, pos: &HashMap<&str, usize>) -> Estimand {
    let sort = |v: &[Atom]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| key_of(&b.var, pos).cmp(&key_of(&a.var, pos)).then(a.val.cmp(&b.val)));
        v
    };
    match e {
        Estimand::Prob { target, given } => Estimand::Prob { target: sort(target), given: sort(given) },
        Estimand::Product(fs) => {
            let mut fs: Vec<Estimand> = fs.iter().map(|f| canon(f, pos)).collect();
            fs.sort_by_cached_key(|f| {
                let mut top = None;
                f.visit_probs(&mut |t, _| {
                    for a in t {
                        let k = key_of(&a.var, pos);
                        if top.as_ref().is_none_or(|x| &k > x) {
                            top = Some(k);
                        }
                    }
                });
                (std::cmp::Reverse(top), render_structured_string(f))
            });
            Estimand::Product(fs)
        }
        Estimand::Sum { vars, body } | Estimand::Marginal { vars, body } => {
            let mut vars = vars.clone();
            vars.sort_by_key(|v| std::cmp::Reverse(key_of(v, pos)));
            let body = Box::new(canon(body, pos));
            if matches!(e, Estimand::Sum { .. }) {
                Estimand::Sum { vars, body }
            } else {
                Estimand::Marginal { vars, body }
            }
        }
        Estimand::Quotient { num, den } => Estimand::quotient(canon(num, pos), canon(den, pos)),
    }
}

// ---------------------------------------------------------------------------
// Rendering

/// Display names for bound variables. A bound variable is shown in lower
/// case, starred until it clashes with no value label or other bound name.
#[derive(Clone, Default)]
struct Scope {
    labels: BTreeSet<String>,
    bound: BTreeMap<String, String>,
}

impl Scope {
    fn root(e: &Estimand) -> Self {
        let mut labels = BTreeSet::new();
        e.visit_probs(&mut |t, g| {
            for a in t.iter().chain(g) {
                if let Some(v) = &a.val {
                    labels.insert(v.label.clone());
                }
            }
        });
        Scope { labels, bound: BTreeMap::new() }
    }

    fn bind(&self, vars: &[String]) -> Scope {
        let mut s = self.clone();
        for v in vars {
            let mut n = v.to_lowercase();
            while s.labels.contains(&n) || s.bound.iter().any(|(k, d)| d == &n && k != v) {
                n.push('*');
            }
            s.bound.insert(v.clone(), n);
        }
        s
    }

    fn index(&self, vars: &[String]) -> Vec<String> {
        vars.iter().map(|v| self.bound[v].clone()).collect()
    }
}

fn atom_text(a: &Atom, sc: &Scope) -> String {
    match (&a.val, sc.bound.get(&a.var)) {
        (Some(v), _) => format!("{}={}", a.var, v.label),
        (None, Some(d)) => format!("{}={}", a.var, d),
        (None, None) => a.var.clone(),
    }
}

fn join_atoms(v: &[Atom], sc: &Scope, sep: &str, f: fn(&Atom, &Scope) -> String) -> String {
    v.iter().map(|a| f(a, sc)).collect::<Vec<_>>().join(sep)
}

fn sum_index(names: &[String], latex: bool) -> String {
    match (names.len(), latex) {
        (1, false) if names[0].chars().count() == 1 => format!("Σ_{}", names[0]),
        (_, false) => format!("Σ_{{{}}}", names.join(",")),
        (_, true) => format!("\\sum_{{{}}}", latex_escape(&names.join(","))),
    }
}

fn render_text(e: &Estimand, sc: &Scope) -> String {
    match e {
        Estimand::Prob { target, given } => {
            let t = join_atoms(target, sc, ",", atom_text);
            if given.is_empty() {
                format!("p({t})")
            } else {
                format!("p({t}|{})", join_atoms(given, sc, ",", atom_text))
            }
        }
        Estimand::Product(fs) if fs.is_empty() => "1".into(),
        Estimand::Product(fs) => fs
            .iter()
            .map(|f| match f {
                Estimand::Prob { .. } => render_text(f, sc),
                _ => format!("[{}]", render_text(f, sc)),
            })
            .collect::<Vec<_>>()
            .join("·"),
        Estimand::Sum { vars, body } | Estimand::Marginal { vars, body } => {
            let inner = sc.bind(vars);
            format!("{} {}", sum_index(&inner.index(vars), false), render_text(body, &inner))
        }
        Estimand::Quotient { num, den } => {
            let side = |x: &Estimand| match x {
                Estimand::Prob { .. } => render_text(x, sc),
                _ => format!("({})", render_text(x, sc)),
            };
            format!("{} / {}", side(num), side(den))
        }
    }
}

fn latex_escape(s: &str) -> String {
    s.replace('_', "\\_").replace('′', "'")
}

fn atom_latex(a: &Atom, sc: &Scope) -> String {
    latex_escape(&atom_text(a, sc))
}

fn render_latex(e: &Estimand, sc: &Scope) -> String {
    match e {
        Estimand::Prob { target, given } => {
            let t = join_atoms(target, sc, ", ", atom_latex);
            if given.is_empty() {
                format!("p({t})")
            } else {
                format!("p({t} \\mid {})", join_atoms(given, sc, ", ", atom_latex))
            }
        }
        Estimand::Product(fs) if fs.is_empty() => "1".into(),
        Estimand::Product(fs) => fs
            .iter()
            .map(|f| match f {
                Estimand::Sum { .. } | Estimand::Marginal { .. } => {
                    format!("\\left({}\\right)", render_latex(f, sc))
                }
                _ => render_latex(f, sc),
            })
            .collect::<Vec<_>>()
            .join(" \\, "),
        Estimand::Sum { vars, body } | Estimand::Marginal { vars, body } => {
            let inner = sc.bind(vars);
            format!("{} {}", sum_index(&inner.index(vars), true), render_latex(body, &inner))
        }
        Estimand::Quotient { num, den } => {
            format!("\\frac{{{}}}{{{}}}", render_latex(num, sc), render_latex(den, sc))
        }
    }
}

fn atom_structured(a: &Atom) -> String {
    match &a.val {
        Some(v) => format!("{}={}:{}", a.var, v.label, v.state),
        None => a.var.clone(),
    }
}

fn render_structured(e: &Estimand, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match e {
        Estimand::Prob { target, given } => {
            let mut line = format!("{pad}prob");
            for a in target {
                line.push(' ');
                line.push_str(&atom_structured(a));
            }
            if !given.is_empty() {
                line.push_str(" |");
                for a in given {
                    line.push(' ');
                    line.push_str(&atom_structured(a));
                }
            }
            out.push_str(&line);
            out.push('\n');
        }
        Estimand::Product(fs) => {
            out.push_str(&format!("{pad}product\n"));
            fs.iter().for_each(|f| render_structured(f, depth + 1, out));
        }
        Estimand::Sum { vars, body } => {
            out.push_str(&format!("{pad}sum {}\n", vars.join(" ")));
            render_structured(body, depth + 1, out);
        }
        Estimand::Marginal { vars, body } => {
            out.push_str(&format!("{pad}marginal {}\n", vars.join(" ")));
            render_structured(body, depth + 1, out);
        }
        Estimand::Quotient { num, den } => {
            out.push_str(&format!("{pad}quotient\n"));
            render_structured(num, depth + 1, out);
            render_structured(den, depth + 1, out);
        }
    }
}

fn render_structured_string(e: &Estimand) -> String {
    let mut s = String::new();
    render_structured(e, 0, &mut s);
    s
}

// ---------------------------------------------------------------------------
// Parsing the structured form

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic()) && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

fn parse_atom(tok: &str, line: usize) -> Result<Atom> {
    match tok.split_once('=') {
        None if is_ident(tok) => Ok(Atom::free(tok)),
        None => Err(Error::parse(line, format!("bad variable `{tok}`"))),
        Some((var, rest)) => {
            let (label, state) = rest
                .rsplit_once(':')
                .ok_or_else(|| Error::parse(line, format!("atom `{tok}` needs label:state")))?;
            let state: usize = state.parse().map_err(|_| Error::parse(line, format!("bad state in `{tok}`")))?;
            if !is_ident(var) || label.is_empty() {
                return Err(Error::parse(line, format!("bad atom `{tok}`")));
            }
            Ok(Atom::fixed(var, Value::new(label, state)))
        }
    }
}

struct Line<'a> {
    no: usize,
    depth: usize,
    text: &'a str,
}

fn parse_node(lines: &[Line], pos: &mut usize, depth: usize) -> Result<Estimand> {
    let l = lines.get(*pos).ok_or_else(|| Error::parse(0, "unexpected end of estimand"))?;
    if l.depth != depth {
        return Err(Error::parse(l.no, "bad indentation"));
    }
    *pos += 1;
    let mut words = l.text.split_whitespace();
    let head = words.next().unwrap_or("");
    let rest: Vec<&str> = words.collect();
    let children = |pos: &mut usize| -> Result<Vec<Estimand>> {
        let mut out = Vec::new();
        while *pos < lines.len() && lines[*pos].depth > depth {
            out.push(parse_node(lines, pos, depth + 1)?);
        }
        Ok(out)
    };
    let vars = |rest: &[&str]| -> Result<Vec<String>> {
        if rest.is_empty() || !rest.iter().all(|v| is_ident(v)) {
            return Err(Error::parse(l.no, "expected variable names"));
        }
        Ok(rest.iter().map(|v| v.to_string()).collect())
    };
    let one_child = |pos: &mut usize| -> Result<Box<Estimand>> {
        let mut c = children(pos)?;
        if c.len() != 1 {
            return Err(Error::parse(l.no, format!("`{head}` takes exactly one child")));
        }
        Ok(Box::new(c.pop().unwrap()))
    };
    match head {
        "prob" => {
            let split = rest.iter().position(|t| *t == "|");
            let (t, g) = match split {
                Some(i) => (&rest[..i], &rest[i + 1..]),
                None => (&rest[..], &[][..]),
            };
            let target = t.iter().map(|a| parse_atom(a, l.no)).collect::<Result<_>>()?;
            let given = g.iter().map(|a| parse_atom(a, l.no)).collect::<Result<_>>()?;
            Ok(Estimand::Prob { target, given })
        }
        "product" => Ok(Estimand::Product(children(pos)?)),
        "sum" => Ok(Estimand::Sum { vars: vars(&rest)?, body: one_child(pos)? }),
        "marginal" => Ok(Estimand::Marginal { vars: vars(&rest)?, body: one_child(pos)? }),
        "quotient" => {
            let mut c = children(pos)?;
            if c.len() != 2 {
                return Err(Error::parse(l.no, "`quotient` takes exactly two children"));
            }
            let den = c.pop().unwrap();
            let num = c.pop().unwrap();
            Ok(Estimand::quotient(num, den))
        }
        other => Err(Error::parse(l.no, format!("unknown node `{other}`"))),
    }
}

/// Parse the structured rendering back into the IR.
pub fn parse_structured(src: &str) -> Result<Estimand> {
    let mut it = src.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match it.next() {
        Some((_, l)) if l.trim() == "estimand v1" => {}
        Some((i, _)) => return Err(Error::parse(i + 1, "expected header `estimand v1`")),
        None => return Err(Error::parse(1, "empty estimand")),
    }
    let mut lines = Vec::new();
    for (i, l) in it {
        let indent = l.len() - l.trim_start_matches(' ').len();
        if indent % 2 != 0 {
            return Err(Error::parse(i + 1, "indentation must be a multiple of two spaces"));
        }
        lines.push(Line { no: i + 1, depth: indent / 2, text: l.trim() });
    }
    let mut pos = 0;
    let e = parse_node(&lines, &mut pos, 0)?;
    if let Some(l) = lines.get(pos) {
        return Err(Error::parse(l.no, "trailing content after estimand"));
    }
    Ok(e)
}

/// Values for the free variables of an estimand, keyed by name.
pub type Bindings = BTreeMap<String, usize>;

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type Q = BigRational;

    fn a(v: &str) -> Atom {
        Atom::free(v)
    }

    fn fx(v: &str, l: &str, s: usize) -> Atom {
        Atom::fixed(v, Value::new(l, s))
    }

    fn mediation() -> Estimand {
        Estimand::sum(
            vec!["M".into()],
            Estimand::product(vec![
                Estimand::prob(vec![a("Y")], vec![a("M"), fx("A", "a", 1)]),
                Estimand::prob(vec![a("M")], vec![fx("A", "a′", 0)]),
            ]),
        )
    }

    fn table(seed: u64) -> JointTable<Q> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        JointTable::random(&mut rng, vec![("A".into(), 2), ("M".into(), 2), ("Y".into(), 2)], 9)
    }

    #[test]
    fn text_rendering() {
        assert_eq!(mediation().render(Format::Text), "Σ_m p(Y|M=m,A=a)·p(M=m|A=a′)");
        let single = Estimand::prob(vec![a("Y")], vec![fx("A", "a", 1)]);
        assert_eq!(single.render(Format::Text), "p(Y|A=a)");
    }

    #[test]
    fn latex_rendering() {
        let q = Estimand::quotient(
            Estimand::prob(vec![a("Y"), a("M")], vec![]),
            Estimand::prob(vec![a("M")], vec![]),
        );
        assert_eq!(q.render(Format::Latex), "\\frac{p(Y, M)}{p(M)}");
        assert_eq!(mediation().render(Format::Latex), "\\sum_{m} p(Y \\mid M=m, A=a) \\, p(M=m \\mid A=a')");
    }

    #[test]
    fn structured_round_trip() {
        let e = Estimand::quotient(mediation(), Estimand::marginal(vec!["Y".into()], mediation()));
        let s = e.render(Format::Structured);
        assert_eq!(parse_structured(&s).unwrap(), e);
        assert_eq!(parse_structured("estimand v1\nproduct\n").unwrap(), Estimand::one());
    }

    #[test]
    fn structured_rejects_garbage() {
        assert!(parse_structured("estimand v2\nproduct\n").is_err());
        assert!(parse_structured("estimand v1\nsum M\n").is_err());
        assert!(parse_structured("estimand v1\nprob Y=a\n").is_err());
    }

    #[test]
    fn mediation_formula_by_hand() {
        let t = table(3);
        let v = evaluate(&mediation(), &t, &[("Y", 1)]).unwrap();
        let mut expect = Q::from_ratio(0, 1);
        for m in 0..2 {
            expect += t.conditional(&[("Y", 1)], &[("M", m), ("A", 1)]).unwrap()
                * t.conditional(&[("M", m)], &[("A", 0)]).unwrap();
        }
        assert_eq!(v, expect);
    }

    #[test]
    fn point_mass_conditional() {
        let t = JointTable::<Q>::point_mass(vec![("A".into(), 2), ("Y".into(), 2)], &[1, 0]);
        let e = Estimand::prob(vec![a("Y")], vec![fx("A", "a", 1)]);
        assert_eq!(evaluate(&e, &t, &[("Y", 0)]).unwrap(), Q::from_ratio(1, 1));
        let bad = Estimand::prob(vec![a("Y")], vec![fx("A", "a", 0)]);
        assert!(matches!(evaluate(&bad, &t, &[("Y", 0)]), Err(Error::ZeroConditioning(_))));
    }

    #[test]
    fn zero_weight_absorbs_undefined_conditional() {
        // p(A=0) is zero, so p(Y|A=0) is undefined, but the product is 0.
        let t = JointTable::<Q>::point_mass(vec![("A".into(), 2), ("Y".into(), 2)], &[1, 0]);
        let e = Estimand::product(vec![
            Estimand::prob(vec![a("Y")], vec![a("A")]),
            Estimand::prob(vec![a("A")], vec![]),
        ]);
        let s = Estimand::sum(vec!["A".into()], e);
        assert_eq!(evaluate(&s, &t, &[("Y", 0)]).unwrap(), Q::from_ratio(1, 1));
    }

    #[test]
    fn unbound_and_missing() {
        let t = table(1);
        let e = Estimand::prob(vec![a("Y")], vec![]);
        assert!(matches!(evaluate(&e, &t, &[]), Err(Error::Unbound(_))));
        let m = Estimand::prob(vec![a("Z")], vec![]);
        assert!(matches!(evaluate(&m, &t, &[("Z", 0)]), Err(Error::MissingVariable(_))));
    }

    #[test]
    fn simplify_rules() {
        let p = Estimand::prob(vec![a("Y")], vec![fx("A", "a", 1)]);
        assert_eq!(simplify(&Estimand::sum(vec!["M".into()], p.clone())), p);
        let x = Estimand::prob(vec![a("X")], vec![]);
        let nested = Estimand::product(vec![Estimand::product(vec![x.clone(), p.clone()]), x.clone()]);
        assert_eq!(simplify(&nested), Estimand::product(vec![x.clone(), p.clone(), x.clone()]));
        let q = Estimand::quotient(
            Estimand::prob(vec![a("Y"), a("M")], vec![fx("A", "a", 1)]),
            Estimand::prob(vec![a("M")], vec![fx("A", "a", 1)]),
        );
        assert_eq!(simplify(&q), Estimand::prob(vec![a("Y")], vec![fx("A", "a", 1), a("M")]));
    }

    #[test]
    fn sum_out_then_cancel() {
        let joint = Estimand::sum(
            vec!["M".into()],
            Estimand::product(vec![
                Estimand::prob(vec![a("C")], vec![]),
                Estimand::prob(vec![a("Y")], vec![a("M"), a("C")]),
                Estimand::prob(vec![a("M")], vec![a("C")]),
            ]),
        );
        let cond = Estimand::quotient(joint.clone(), Estimand::sum(vec!["Y".into()], joint));
        let s = simplify(&cond);
        assert_eq!(
            s,
            Estimand::sum(
                vec!["M".into()],
                Estimand::product(vec![
                    Estimand::prob(vec![a("Y")], vec![a("C"), a("M")]),
                    Estimand::prob(vec![a("M")], vec![a("C")]),
                ])
            )
        );
    }

    #[test]
    fn canonical_order_is_latest_first() {
        let order: Vec<String> = ["A", "M", "Y"].iter().map(|s| s.to_string()).collect();
        let e = Estimand::sum(
            vec!["M".into()],
            Estimand::product(vec![
                Estimand::prob(vec![a("M")], vec![fx("A", "a′", 0)]),
                Estimand::prob(vec![a("Y")], vec![fx("A", "a", 1), a("M")]),
            ]),
        );
        assert_eq!(canonicalize(&e, &order), mediation());
    }

    #[test]
    fn substitution_respects_binders() {
        let e = Estimand::product(vec![
            Estimand::prob(vec![a("A")], vec![]),
            Estimand::sum(vec!["A".into()], Estimand::prob(vec![a("Y")], vec![a("A")])),
        ]);
        let s = e.substitute("A", &Value::new("a", 1));
        assert_eq!(s.free_vars(), BTreeSet::from(["Y".to_string()]));
        let Estimand::Product(fs) = &s else { panic!() };
        assert_eq!(fs[1], e.factors()[1]);
    }

    #[test]
    fn evaluate_table_layout() {
        let t = table(5);
        let e = Estimand::prob(vec![a("Y"), a("M")], vec![]);
        let out = evaluate_table(&e, &t, &["M", "Y"]).unwrap();
        assert_eq!(out, t.marginal(&["M", "Y"]).unwrap());
    }
}
