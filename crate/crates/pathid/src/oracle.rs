//! Finite structural equation models evaluated by exhaustive enumeration of
//! noise configurations.
//!
//! Every vertex `v` has a noise coordinate and a mechanism table indexed by
//! `parent_config * noise_card(v) + noise`, where `parent_config` is the
//! mixed-radix index of the parents' states (parents in ascending vertex
//! order, first parent most significant).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Admg, HiddenDag, VSet};
use crate::paths::PseQuery;
use crate::scalar::Scalar;
use crate::table::{mixed_index, mixed_states, JointTable};

/// Default bound on the number of enumerated noise configurations.
pub const DEFAULT_ENUM_CAP: u128 = 10_000_000;

/// Current enumeration cap: `PATHID_ENUM_CAP` if set, else the default.
pub fn enum_cap() -> u128 {
    std::env::var("PATHID_ENUM_CAP").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_ENUM_CAP)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Noise<S> {
    /// Mutually independent noises, one pmf per vertex.
    Independent(Vec<Vec<S>>),
    /// One joint pmf over all noise coordinates, rows in mixed-radix order.
    Joint { cards: Vec<usize>, probs: Vec<S> },
}

type Configs<S> = Arc<Vec<(Vec<usize>, S)>>;

#[derive(Debug)]
pub struct DiscreteNpsem<S> {
    graph: HiddenDag,
    noise: Noise<S>,
    mech: Vec<Vec<usize>>,
    configs: OnceLock<Configs<S>>,
}

impl<S: Clone> Clone for DiscreteNpsem<S> {
    fn clone(&self) -> Self {
        DiscreteNpsem {
            graph: self.graph.clone(),
            noise: self.noise.clone(),
            mech: self.mech.clone(),
            configs: OnceLock::new(),
        }
    }
}

/// A counterfactual variable `var(assign)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterfactual {
    pub var: usize,
    pub assign: BTreeMap<usize, usize>,
}

/// Outcome of comparing the edge-copy intervention with the path recursion.
#[derive(Clone, Debug)]
pub struct ExpandedReport<S> {
    /// Law of the observed non-treatment vertices under the copy intervention.
    pub table: JointTable<S>,
    /// Same vertices under the path-specific recursion.
    pub recursion: JointTable<S>,
    pub configs: usize,
    /// Configurations where some ancestor of the outcome differs.
    pub mismatches: usize,
}

/// Arms of a two-component study and the reconstruction of a mixed arm.
#[derive(Clone, Debug)]
pub struct FourArm<S> {
    /// `(n, o)` ↦ joint law of (mediator, outcome).
    pub arms: BTreeMap<(usize, usize), JointTable<S>>,
    /// Mediator law of `(x, x*)` equals that of `(x, x)`, and so on.
    pub mediator_condition: bool,
    /// Outcome given mediator under `(1, x*)` equals that under `(0, x*)`.
    pub outcome_condition: bool,
    /// `p(Y(x*, x*) | M(x*, x*)) p(M(x, x))`.
    pub reconstructed: JointTable<S>,
    pub matches: bool,
}

struct PsePlan {
    treat: BTreeMap<usize, (usize, usize)>,
    outcome: VSet,
    pi_edges: BTreeSet<(usize, usize)>,
    active_first: BTreeSet<(usize, usize)>,
    witnesses: Vec<usize>,
}

impl<S: Scalar> DiscreteNpsem<S> {
    pub fn new(graph: HiddenDag, noise: Noise<S>, mech: Vec<Vec<usize>>) -> Result<Self> {
        let g = &graph.dag;
        let n = g.len();
        let ncards: Vec<usize> = match &noise {
            Noise::Independent(p) => {
                if p.len() != n {
                    return Err(Error::OutOfRange(format!("{} noise pmfs for {n} vertices", p.len())));
                }
                for (v, pmf) in p.iter().enumerate() {
                    check_pmf(pmf, g.name(v))?;
                }
                p.iter().map(Vec::len).collect()
            }
            Noise::Joint { cards, probs } => {
                if cards.len() != n || cards.iter().product::<usize>() != probs.len() {
                    return Err(Error::OutOfRange("joint noise table has the wrong shape".into()));
                }
                check_pmf(probs, "joint noise")?;
                cards.clone()
            }
        };
        if mech.len() != n {
            return Err(Error::OutOfRange(format!("{} mechanisms for {n} vertices", mech.len())));
        }
        for v in 0..n {
            let rows: usize = g.parents(v).iter().map(|&p| g.card(p)).product();
            if mech[v].len() != rows * ncards[v] {
                return Err(Error::OutOfRange(format!(
                    "mechanism of `{}` has {} entries, expected {}",
                    g.name(v),
                    mech[v].len(),
                    rows * ncards[v]
                )));
            }
            if let Some(&bad) = mech[v].iter().find(|&&x| x >= g.card(v)) {
                return Err(Error::OutOfRange(format!("mechanism of `{}` outputs state {bad}", g.name(v))));
            }
        }
        Ok(DiscreteNpsem { graph, noise, mech, configs: OnceLock::new() })
    }

    /// Independent uniform-ish noise with `card + 1` states per vertex and a
    /// random mechanism that reaches every state under every parent
    /// configuration. Noise weights are multiples of `1/denom` before
    /// normalization. Hidden roots copy their noise; a vertex whose only
    /// parent reaches it along a deterministic edge copies that parent.
    pub fn random<R: Rng>(rng: &mut R, graph: HiddenDag, denom: i64) -> Self {
        let g = &graph.dag;
        let mut pmfs = Vec::new();
        let mut mech = Vec::new();
        for v in 0..g.len() {
            let card = g.card(v);
            if let [p] = g.parents(v) {
                if g.is_deterministic(*p, v) {
                    pmfs.push(vec![S::one()]);
                    mech.push((0..g.card(*p)).map(|x| x.min(card - 1)).collect());
                    continue;
                }
            }
            let hidden_root = graph.hidden.contains(&v) && g.parents(v).is_empty();
            let nc = if hidden_root { card } else { card + 1 };
            let w: Vec<i64> = (0..nc).map(|_| rng.gen_range(1..=denom)).collect();
            let total: i64 = w.iter().sum();
            pmfs.push(w.iter().map(|&x| S::from_ratio(x, total)).collect());
            let rows: usize = g.parents(v).iter().map(|&p| g.card(p)).product();
            let mut table = Vec::with_capacity(rows * nc);
            for _ in 0..rows {
                if hidden_root {
                    table.extend(0..card);
                    continue;
                }
                let mut col: Vec<usize> = (0..card).collect();
                col.push(rng.gen_range(0..card));
                for i in (1..col.len()).rev() {
                    col.swap(i, rng.gen_range(0..=i));
                }
                table.extend(col);
            }
            mech.push(table);
        }
        DiscreteNpsem::new(graph, Noise::Independent(pmfs), mech).expect("random model is well formed")
    }

    /// An independent-noise model realizing the given conditional tables
    /// exactly: `cpts[v][parent_config][state]`. Each vertex's noise is a
    /// uniform variate discretized at every cumulative breakpoint, so all
    /// parent configurations share one monotone coupling.
    pub fn from_cpts(graph: HiddenDag, cpts: &[Vec<Vec<S>>]) -> Result<Self> {
        let g = &graph.dag;
        if cpts.len() != g.len() {
            return Err(Error::OutOfRange("one conditional table per vertex is required".into()));
        }
        let mut pmfs = Vec::new();
        let mut mech = Vec::new();
        for v in 0..g.len() {
            let rows: usize = g.parents(v).iter().map(|&p| g.card(p)).product();
            let card = g.card(v);
            if cpts[v].len() != rows || cpts[v].iter().any(|r| r.len() != card) {
                return Err(Error::OutOfRange(format!("conditional table of `{}` has the wrong shape", g.name(v))));
            }
            let mut cum: Vec<Vec<S>> = Vec::new();
            let mut points: Vec<S> = Vec::new();
            for row in &cpts[v] {
                check_pmf(row, g.name(v))?;
                let mut acc = S::zero();
                let mut c = Vec::new();
                for p in row {
                    acc = acc + p.clone();
                    c.push(acc.clone());
                    points.push(acc.clone());
                }
                *c.last_mut().unwrap() = S::one();
                cum.push(c);
            }
            points.push(S::zero());
            points.push(S::one());
            points.sort_by(|a, b| a.partial_cmp(b).expect("comparable probabilities"));
            points.dedup_by(|a, b| a.close_to(b, 1e-15));
            let mut pmf = Vec::new();
            let mut uppers = Vec::new();
            for w in points.windows(2) {
                if w[1] > w[0] {
                    pmf.push(w[1].clone() - w[0].clone());
                    uppers.push(w[1].clone());
                }
            }
            let mut table = Vec::with_capacity(rows * pmf.len());
            for c in &cum {
                for u in &uppers {
                    table.push(c.iter().position(|f| u <= f || u.close_to(f, 1e-15)).unwrap_or(card - 1));
                }
            }
            pmfs.push(pmf);
            mech.push(table);
        }
        DiscreteNpsem::new(graph, Noise::Independent(pmfs), mech)
    }

    pub fn graph(&self) -> &HiddenDag {
        &self.graph
    }

    pub fn noise(&self) -> &Noise<S> {
        &self.noise
    }

    pub fn mechanisms(&self) -> &[Vec<usize>] {
        &self.mech
    }

    pub fn is_independent(&self) -> bool {
        matches!(self.noise, Noise::Independent(_))
    }

    pub fn noise_card(&self, v: usize) -> usize {
        match &self.noise {
            Noise::Independent(p) => p[v].len(),
            Noise::Joint { cards, .. } => cards[v],
        }
    }

    /// Noise configurations with positive probability, enumerated once.
    pub fn configs(&self) -> Result<Configs<S>> {
        if let Some(c) = self.configs.get() {
            return Ok(c.clone());
        }
        let cards: Vec<usize> = (0..self.graph.dag.len()).map(|v| self.noise_card(v)).collect();
        let size: u128 = cards.iter().map(|&c| c as u128).product();
        let cap = enum_cap();
        if size > cap {
            return Err(Error::EnumerationCap { size, cap });
        }
        let mut out = Vec::new();
        match &self.noise {
            Noise::Independent(pmfs) => {
                for k in 0..size as usize {
                    let st = mixed_states(&cards, k);
                    let mut w = S::one();
                    for (v, &s) in st.iter().enumerate() {
                        w = w * pmfs[v][s].clone();
                        if w.is_zero() {
                            break;
                        }
                    }
                    if !w.is_zero() {
                        out.push((st, w));
                    }
                }
            }
            Noise::Joint { probs, .. } => {
                for (k, p) in probs.iter().enumerate() {
                    if !p.is_zero() {
                        out.push((mixed_states(&cards, k), p.clone()));
                    }
                }
            }
        }
        let out = Arc::new(out);
        let _ = self.configs.set(out.clone());
        Ok(out)
    }

    fn row(&self, v: usize, vals: &[usize]) -> usize {
        let g = &self.graph.dag;
        g.parents(v).iter().fold(0, |acc, &p| acc * g.card(p) + vals[p])
    }

    fn mech_at(&self, v: usize, row: usize, noise: &[usize]) -> usize {
        self.mech[v][row * self.noise_card(v) + noise[v]]
    }

    /// All vertex values for one noise configuration with some vertices set.
    pub fn solve(&self, noise: &[usize], set: &[Option<usize>]) -> Vec<usize> {
        let g = &self.graph.dag;
        let mut vals = vec![0; g.len()];
        for v in g.topological_order() {
            vals[v] = match set[v] {
                Some(x) => x,
                None => self.mech_at(v, self.row(v, &vals), noise),
            };
        }
        vals
    }

    fn observed_vec(&self) -> Vec<usize> {
        self.graph.observed_set().into_iter().collect()
    }

    fn table_of(&self, vars: &[usize]) -> JointTable<S> {
        let g = &self.graph.dag;
        JointTable::zeros(vars.iter().map(|&v| (g.name(v).to_string(), g.card(v))).collect())
    }

    fn accumulate(&self, vars: &[usize], f: impl Fn(&[usize]) -> Vec<usize>) -> Result<JointTable<S>> {
        let mut t = self.table_of(vars);
        for (noise, w) in self.configs()?.iter() {
            let vals = f(noise);
            let st: Vec<usize> = vars.iter().map(|&v| vals[v]).collect();
            t.add_at(&st, w);
        }
        Ok(t)
    }

    /// Joint law of the observed vertices, in declaration order.
    pub fn observed_law(&self) -> Result<JointTable<S>> {
        let n = self.graph.dag.len();
        let obs = self.observed_vec();
        self.accumulate(&obs, |noise| self.solve(noise, &vec![None; n]))
    }

    fn check_assign(&self, assign: &BTreeMap<usize, usize>) -> Result<Vec<Option<usize>>> {
        let g = &self.graph.dag;
        let mut set = vec![None; g.len()];
        for (&v, &x) in assign {
            if v >= g.len() {
                return Err(Error::UnknownVertex(format!("#{v}")));
            }
            if self.graph.hidden.contains(&v) {
                return Err(Error::InvalidQuery(format!("cannot intervene on hidden `{}`", g.name(v))));
            }
            if x >= g.card(v) {
                return Err(Error::OutOfRange(format!("state {x} of `{}`", g.name(v))));
            }
            set[v] = Some(x);
        }
        Ok(set)
    }

    /// Law of `targets` (in ascending order) with `assign` imposed.
    pub fn intervene(&self, assign: &BTreeMap<usize, usize>, targets: &VSet) -> Result<JointTable<S>> {
        let set = self.check_assign(assign)?;
        if let Some(&v) = targets.iter().find(|&&v| v >= self.graph.dag.len()) {
            return Err(Error::UnknownVertex(format!("#{v}")));
        }
        let t: Vec<usize> = targets.iter().copied().collect();
        self.accumulate(&t, |noise| self.solve(noise, &set))
    }

    /// Name-based [`Self::intervene`].
    pub fn intervene_named(&self, assign: &[(&str, usize)], targets: &[&str]) -> Result<JointTable<S>> {
        let g = &self.graph.dag;
        let mut a = BTreeMap::new();
        for (v, x) in assign {
            a.insert(g.id(v)?, *x);
        }
        self.intervene(&a, &g.set(targets)?)
    }

    /// Joint law of counterfactual variables, possibly from different worlds.
    /// Columns are named `V(X=x,...)`. Several worlds need independent noise.
    pub fn cross_world_table(&self, specs: &[Counterfactual]) -> Result<JointTable<S>> {
        let g = &self.graph.dag;
        let mut worlds: Vec<&BTreeMap<usize, usize>> = Vec::new();
        for s in specs {
            if !worlds.contains(&&s.assign) {
                worlds.push(&s.assign);
            }
        }
        if worlds.len() > 1 && !self.is_independent() {
            return Err(Error::ModeMismatch("cross-world laws are undefined for joint-noise models".into()));
        }
        let sets: Vec<Vec<Option<usize>>> = worlds.iter().map(|w| self.check_assign(w)).collect::<Result<_>>()?;
        let which: Vec<usize> = specs.iter().map(|s| worlds.iter().position(|w| **w == s.assign).unwrap()).collect();
        let vars: Vec<(String, usize)> = specs.iter().map(|s| (self.cf_name(s), g.card(s.var))).collect();
        let mut t = JointTable::zeros(vars);
        for (noise, w) in self.configs()?.iter() {
            let vals: Vec<Vec<usize>> = sets.iter().map(|s| self.solve(noise, s)).collect();
            let st: Vec<usize> = specs.iter().zip(&which).map(|(s, &k)| vals[k][s.var]).collect();
            t.add_at(&st, w);
        }
        Ok(t)
    }

    fn cf_name(&self, s: &Counterfactual) -> String {
        let g = &self.graph.dag;
        if s.assign.is_empty() {
            return g.name(s.var).to_string();
        }
        let a: Vec<String> = s.assign.iter().map(|(&v, &x)| format!("{}={x}", g.name(v))).collect();
        format!("{}({})", g.name(s.var), a.join(","))
    }

    /// Translate a query over the observed projection to DAG vertices and
    /// classify DAG paths by whether their observed trace is in π.
    fn plan(&self, q: &PseQuery) -> Result<PsePlan> {
        let g = &self.graph.dag;
        let proj = self.graph.project();
        q.validate(&proj)?;
        let obs = self.observed_vec();
        let treat: BTreeMap<usize, (usize, usize)> =
            q.treatments.iter().map(|(&t, (a, b))| (obs[t], (a.state, b.state))).collect();
        let a: VSet = treat.keys().copied().collect();
        let outcome: VSet = q.outcome.iter().map(|&v| obs[v]).collect();
        let pi: BTreeSet<Vec<usize>> = q.pi.iter().map(|p| p.iter().map(|&v| obs[v]).collect()).collect();
        let mut pi_edges = BTreeSet::new();
        let mut active_first = BTreeSet::new();
        let mut inactive_first = BTreeSet::new();
        for &s in &a {
            let mut stack = vec![vec![s]];
            while let Some(p) = stack.pop() {
                let last = *p.last().unwrap();
                for &c in g.children(last) {
                    if a.contains(&c) {
                        continue;
                    }
                    let mut path = p.clone();
                    path.push(c);
                    if outcome.contains(&c) {
                        let trace: Vec<usize> =
                            path.iter().copied().filter(|v| !self.graph.hidden.contains(v)).collect();
                        if pi.contains(&trace) {
                            pi_edges.extend(path.windows(2).map(|w| (w[0], w[1])));
                            active_first.insert((path[0], path[1]));
                        } else {
                            inactive_first.insert((path[0], path[1]));
                        }
                    }
                    stack.push(path);
                }
            }
        }
        let order = g.topological_order();
        let witnesses: Vec<usize> = order
            .into_iter()
            .filter(|&c| active_first.iter().any(|&(s, x)| x == c && inactive_first.contains(&(s, x))))
            .collect();
        Ok(PsePlan { treat, outcome, pi_edges, active_first, witnesses })
    }

    fn baseline_set(&self, plan: &PsePlan) -> Vec<Option<usize>> {
        let mut set = vec![None; self.graph.dag.len()];
        for (&t, &(_, b)) in &plan.treat {
            set[t] = Some(b);
        }
        set
    }

    /// Path recursion: a parent passes its path-specific value along π edges
    /// and its baseline-world value along every other edge.
    fn pse_world(&self, plan: &PsePlan, noise: &[usize], base: &[usize]) -> Vec<usize> {
        let g = &self.graph.dag;
        let mut vals = vec![0; g.len()];
        let mut mixed = vec![0; g.len()];
        for v in g.topological_order() {
            if let Some(&(a, _)) = plan.treat.get(&v) {
                vals[v] = a;
                continue;
            }
            for &p in g.parents(v) {
                mixed[p] = if plan.pi_edges.contains(&(p, v)) { vals[p] } else { base[p] };
            }
            vals[v] = self.mech_at(v, self.row(v, &mixed), noise);
        }
        vals
    }

    /// Every vertex feeds each child of a treatment the value of the copy on
    /// that edge: active on first edges of π, baseline elsewhere.
    fn copy_world(&self, plan: &PsePlan, noise: &[usize]) -> Vec<usize> {
        let g = &self.graph.dag;
        let mut vals = vec![0; g.len()];
        let mut mixed = vec![0; g.len()];
        for v in g.topological_order() {
            for &p in g.parents(v) {
                mixed[p] = match plan.treat.get(&p) {
                    Some(&(a, b)) => {
                        if plan.active_first.contains(&(p, v)) {
                            a
                        } else {
                            b
                        }
                    }
                    None => vals[p],
                };
            }
            vals[v] = self.mech_at(v, self.row(v, &mixed), noise);
        }
        vals
    }

    fn non_treatment_observed(&self, plan: &PsePlan) -> Vec<usize> {
        self.observed_vec().into_iter().filter(|v| !plan.treat.contains_key(v)).collect()
    }

    /// Law of the observed non-treatment vertices under the path-specific
    /// recursion. `q` refers to the observed projection.
    pub fn pse_counterfactual(&self, q: &PseQuery) -> Result<JointTable<S>> {
        let plan = self.plan(q)?;
        let bset = self.baseline_set(&plan);
        let vars = self.non_treatment_observed(&plan);
        self.accumulate(&vars, |noise| {
            let base = self.solve(noise, &bset);
            self.pse_world(&plan, noise, &base)
        })
    }

    /// Edge-copy intervention at the DAG level, compared configuration by
    /// configuration with [`Self::pse_counterfactual`] over the ancestors of
    /// the outcome. The query must be edge consistent at the DAG level.
    pub fn expanded_counterfactual(&self, q: &PseQuery) -> Result<ExpandedReport<S>> {
        let plan = self.plan(q)?;
        let g = &self.graph.dag;
        if !plan.witnesses.is_empty() {
            let all: Vec<String> = plan.witnesses.iter().map(|&v| g.name(v).to_string()).collect();
            return Err(Error::EdgeInconsistent { witness: all[0].clone(), all });
        }
        let bset = self.baseline_set(&plan);
        let vars = self.non_treatment_observed(&plan);
        let check: Vec<usize> = g.ancestors(&plan.outcome).into_iter().filter(|v| !plan.treat.contains_key(v)).collect();
        let mut table = self.table_of(&vars);
        let mut recursion = self.table_of(&vars);
        let mut mismatches = 0;
        let configs = self.configs()?;
        for (noise, w) in configs.iter() {
            let base = self.solve(noise, &bset);
            let rec = self.pse_world(&plan, noise, &base);
            let cop = self.copy_world(&plan, noise);
            if check.iter().any(|&v| rec[v] != cop[v]) {
                mismatches += 1;
            }
            let st: Vec<usize> = vars.iter().map(|&v| cop[v]).collect();
            table.add_at(&st, w);
            let st: Vec<usize> = vars.iter().map(|&v| rec[v]).collect();
            recursion.add_at(&st, w);
        }
        Ok(ExpandedReport { table, recursion, configs: configs.len(), mismatches })
    }

    /// Law of `y(a_outer, m(a_inner))`: the mediator takes its value under
    /// `a_inner`, then the outcome is computed with `a_outer` and that value.
    pub fn nested(&self, a: usize, a_outer: usize, m: usize, a_inner: usize, y: usize) -> Result<JointTable<S>> {
        if a_outer != a_inner && !self.is_independent() {
            return Err(Error::ModeMismatch("nested counterfactuals need independent noise".into()));
        }
        let n = self.graph.dag.len();
        let inner = self.check_assign(&BTreeMap::from([(a, a_inner)]))?;
        self.check_assign(&BTreeMap::from([(a, a_outer), (m, 0)]))?;
        let mut t = self.table_of(&[y]);
        for (noise, w) in self.configs()?.iter() {
            let mv = self.solve(noise, &inner)[m];
            let mut outer = vec![None; n];
            outer[a] = Some(a_outer);
            outer[m] = Some(mv);
            t.add_at(&[self.solve(noise, &outer)[y]], w);
        }
        Ok(t)
    }

    /// The four arms `do(n, o)` of a model whose treatment has been split into
    /// components `n` and `o`, and the reconstruction of arm `(x, 1 - x)`.
    pub fn four_arm(&self, n: usize, o: usize, m: usize, y: usize, x: usize) -> Result<FourArm<S>> {
        let g = &self.graph.dag;
        for v in [n, o, m, y] {
            if g.card(v) != 2 {
                return Err(Error::NotBinary(g.name(v).to_string()));
            }
        }
        let xs = 1 - x;
        let mut arms = BTreeMap::new();
        for i in 0..2 {
            for j in 0..2 {
                let t = self.intervene(&BTreeMap::from([(n, i), (o, j)]), &VSet::from([m, y]))?;
                arms.insert((i, j), t.reorder(&[g.name(m), g.name(y)])?);
            }
        }
        let (mn, yn) = (g.name(m), g.name(y));
        let mediator_condition = arms[&(x, 0)].marginal(&[mn])?.close_to(&arms[&(x, 1)].marginal(&[mn])?, 1e-12);
        let mut outcome_condition = true;
        for mv in 0..2 {
            for yv in 0..2 {
                let c1 = arms[&(1, xs)].conditional(&[(yn, yv)], &[(mn, mv)]);
                let c0 = arms[&(0, xs)].conditional(&[(yn, yv)], &[(mn, mv)]);
                if let (Ok(c1), Ok(c0)) = (c1, c0) {
                    outcome_condition &= c1.close_to(&c0, 1e-12);
                }
            }
        }
        let mut reconstructed = JointTable::zeros(vec![(mn.to_string(), 2), (yn.to_string(), 2)]);
        for mv in 0..2 {
            let pm = arms[&(x, x)].prob(&[(mn, mv)])?;
            if pm.is_zero() {
                continue;
            }
            for yv in 0..2 {
                let c = arms[&(xs, xs)].conditional(&[(yn, yv)], &[(mn, mv)])?;
                reconstructed.add_at(&[mv, yv], &(c * pm.clone()));
            }
        }
        let matches = reconstructed.close_to(&arms[&(x, xs)], 1e-12);
        Ok(FourArm { arms, mediator_condition, outcome_condition, reconstructed, matches })
    }

    /// Observed projection of the model's graph.
    pub fn projection(&self) -> Admg {
        self.graph.project()
    }

    /// Joint law of every vertex, hidden ones included, with a noise-free
    /// index per configuration; useful for separation checks.
    pub fn full_law(&self, set: &BTreeMap<usize, usize>) -> Result<JointTable<S>> {
        let s = self.check_assign(set)?;
        let all: Vec<usize> = (0..self.graph.dag.len()).collect();
        self.accumulate(&all, |noise| self.solve(noise, &s))
    }
}

fn check_pmf<S: Scalar>(p: &[S], what: &str) -> Result<()> {
    if p.is_empty() || p.iter().any(|x| x.is_negative()) {
        return Err(Error::OutOfRange(format!("invalid distribution for `{what}`")));
    }
    let total = p.iter().fold(S::zero(), |a, b| a + b.clone());
    if !total.close_to(&S::one(), 1e-12) {
        return Err(Error::OutOfRange(format!("distribution for `{what}` sums to {total}")));
    }
    Ok(())
}

/// Index of a parent configuration given the states of all vertices.
pub fn parent_row(g: &Admg, v: usize, states: &[usize]) -> usize {
    let cards: Vec<usize> = g.parents(v).iter().map(|&p| g.card(p)).collect();
    let st: Vec<usize> = g.parents(v).iter().map(|&p| states[p]).collect();
    mixed_index(&cards, &st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimand::Value;
    use num_rational::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    fn chain() -> HiddenDag {
        let g = Admg::builder().binary(&["A", "M", "Y"]).edge("A", "M").edge("M", "Y").build().unwrap();
        HiddenDag::observed(g).unwrap()
    }

    #[test]
    fn constant_mechanisms_give_a_point_mass() {
        let noise = Noise::Independent(vec![vec![q(1, 1)]; 3]);
        let m = DiscreteNpsem::new(chain(), noise, vec![vec![1], vec![0, 0], vec![1, 1]]).unwrap();
        let t = m.observed_law().unwrap();
        assert_eq!(t.get(&[1, 0, 1]), &q(1, 1));
    }

    #[test]
    fn chain_by_hand() {
        // A ~ Bern(1/2); M = A xor N_M with N_M ~ Bern(1/4); Y = M.
        let noise = Noise::Independent(vec![vec![q(1, 2), q(1, 2)], vec![q(3, 4), q(1, 4)], vec![q(1, 1)]]);
        let mech = vec![vec![0, 1], vec![0, 1, 1, 0], vec![0, 1]];
        let m = DiscreteNpsem::new(chain(), noise, mech).unwrap();
        let t = m.observed_law().unwrap();
        assert_eq!(t.get(&[0, 0, 0]), &q(3, 8));
        assert_eq!(t.get(&[0, 1, 1]), &q(1, 8));
        assert_eq!(t.get(&[1, 1, 1]), &q(3, 8));
        let d = m.intervene_named(&[("A", 1)], &["Y"]).unwrap();
        assert_eq!(d.probs(), &[q(1, 4), q(3, 4)]);
    }

    #[test]
    fn cpts_are_reproduced() {
        let g = Admg::builder().binary(&["A", "Y"]).edge("A", "Y").build().unwrap();
        let cpts = vec![vec![vec![q(2, 3), q(1, 3)]], vec![vec![q(1, 4), q(3, 4)], vec![q(5, 8), q(3, 8)]]];
        let m = DiscreteNpsem::from_cpts(HiddenDag::observed(g).unwrap(), &cpts).unwrap();
        let t = m.observed_law().unwrap();
        assert_eq!(t.conditional(&[("Y", 1)], &[("A", 1)]).unwrap(), q(3, 8));
        assert_eq!(t.prob(&[("A", 0)]).unwrap(), q(2, 3));
    }

    #[test]
    fn all_paths_is_the_intervention() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = Admg::builder().binary(&["A", "M", "Y"]).edge("A", "M").edge("A", "Y").edge("M", "Y").build().unwrap();
        let m: DiscreteNpsem<Q> = DiscreteNpsem::random(&mut rng, HiddenDag::observed(g.clone()).unwrap(), 7);
        let tr = BTreeMap::from([(0, (Value::new("a", 1), Value::new("a′", 0)))]);
        let qy = PseQuery::total(&g, VSet::from([2]), tr).unwrap();
        let pse = m.pse_counterfactual(&qy).unwrap();
        let direct = m.intervene(&BTreeMap::from([(0, 1)]), &VSet::from([1, 2])).unwrap();
        assert_eq!(pse, direct);
        let rep = m.expanded_counterfactual(&qy).unwrap();
        assert_eq!(rep.mismatches, 0);
        assert_eq!(rep.table, direct);
    }

    #[test]
    fn joint_mode_rejects_cross_world() {
        let g = Admg::builder().binary(&["A", "Y"]).edge("A", "Y").build().unwrap();
        let noise = Noise::Joint { cards: vec![1, 2], probs: vec![q(1, 2), q(1, 2)] };
        let m = DiscreteNpsem::new(HiddenDag::observed(g).unwrap(), noise, vec![vec![0], vec![0, 1, 1, 0]]).unwrap();
        let specs = [
            Counterfactual { var: 1, assign: BTreeMap::from([(0, 0)]) },
            Counterfactual { var: 1, assign: BTreeMap::from([(0, 1)]) },
        ];
        assert!(matches!(m.cross_world_table(&specs), Err(Error::ModeMismatch(_))));
        assert!(m.cross_world_table(&specs[..1]).is_ok());
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let mut b = Admg::builder();
        let names: Vec<String> = (0..16).map(|i| format!("V{i}")).collect();
        for n in &names {
            b = b.vertex(n, 2);
        }
        let g = b.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m: DiscreteNpsem<f64> = DiscreteNpsem::random(&mut rng, HiddenDag::observed(g).unwrap(), 3);
        // 3^16 configurations exceed the default cap of 10^7.
        assert!(matches!(m.observed_law(), Err(Error::EnumerationCap { .. })));
    }
}
