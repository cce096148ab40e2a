//! Identification of interventional, path-specific and conditional
//! path-specific distributions.
//!
//! Path-specific queries are identified on the unexpanded graph with one
//! value per treatment edge. This is equivalent to identifying the
//! expanded-graph intervention on the edge copies: each district of the
//! ancestral set of the outcome sees a single value of every treatment,
//! unless two of its edges from one treatment disagree, which is exactly a
//! recanting district. District factors are obtained by the recursive
//! district algorithm, whose failure yields a hedge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::estimand::{canonicalize, simplify, Atom, Estimand, Value};
use crate::graph::{Admg, VSet};
use crate::paths::{assignment_from_paths, edge_expand, ExpandedGraph, PseQuery};
use crate::swig::{construct_swig, Node};

/// Why a query is not identified, with the vertices responsible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NonIdentified {
    /// A vertex on the first edge of both an active and an inactive path.
    RecantingWitness { witness: String, all: Vec<String> },
    /// A district entered by edges from one treatment carrying different values.
    RecantingDistrict { district: Vec<String>, treatment: String, values: Vec<String> },
    /// A single district that cannot be reduced further.
    Hedge { district: Vec<String> },
    /// A vertex whose component parents of one treatment disagree.
    SeparabilityViolated { vertex: String, components: Vec<String> },
}

impl NonIdentified {
    pub fn kind(&self) -> &'static str {
        match self {
            NonIdentified::RecantingWitness { .. } => "recanting_witness",
            NonIdentified::RecantingDistrict { .. } => "recanting_district",
            NonIdentified::Hedge { .. } => "hedge",
            NonIdentified::SeparabilityViolated { .. } => "separability_violated",
        }
    }

    /// Vertices named by the certificate.
    pub fn vertices(&self) -> Vec<String> {
        match self {
            NonIdentified::RecantingWitness { witness, .. } => vec![witness.clone()],
            NonIdentified::RecantingDistrict { district, .. } | NonIdentified::Hedge { district } => district.clone(),
            NonIdentified::SeparabilityViolated { vertex, .. } => vec![vertex.clone()],
        }
    }
}

impl fmt::Display for NonIdentified {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonIdentified::RecantingWitness { witness, all } => {
                write!(f, "recanting witness {witness}")?;
                if all.len() > 1 {
                    write!(f, " (all witnesses: {})", all.join(", "))?;
                }
                Ok(())
            }
            NonIdentified::RecantingDistrict { district, treatment, values } => write!(
                f,
                "recanting district {{{}}} ({treatment} enters with {})",
                district.join(","),
                values.join(" and ")
            ),
            NonIdentified::Hedge { district } => write!(f, "hedge {{{}}}", district.join(",")),
            NonIdentified::SeparabilityViolated { vertex, components } => {
                write!(f, "separability violated at {vertex} (components {})", components.join(", "))
            }
        }
    }
}

/// Value of an intervened vertex: fixed, or whatever the enclosing scope
/// binds its name to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Val {
    Fixed(Value),
    Env,
}

type Vals = BTreeMap<usize, Val>;
type IdResult<T> = std::result::Result<T, NonIdentified>;

fn not_identified(n: NonIdentified) -> Error {
    Error::NotIdentified(n)
}

/// A distribution over the current vertex set.
#[derive(Clone, Debug)]
enum Dist {
    /// The observed law (marginalized to the current, ancestral, set).
    Observed,
    /// A product of per-vertex conditionals in topological order.
    Kernels(BTreeMap<usize, Estimand>),
    /// An arbitrary joint expression over the current set.
    Generic(Estimand),
}

struct Engine<'a> {
    g: &'a Admg,
    order: Vec<usize>,
    pos: Vec<usize>,
}

impl<'a> Engine<'a> {
    fn new(g: &'a Admg) -> Self {
        let order = g.topological_order();
        let mut pos = vec![0; g.len()];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        Engine { g, order, pos }
    }

    fn names(&self, s: &VSet) -> Vec<String> {
        s.iter().map(|&v| self.g.name(v).to_string()).collect()
    }

    fn ordered(&self, s: &VSet) -> Vec<usize> {
        self.order.iter().copied().filter(|v| s.contains(v)).collect()
    }

    fn atom(&self, u: usize, x: &VSet, random: &VSet, vals: &Vals) -> Atom {
        let name = self.g.name(u);
        if random.contains(&u) || !x.contains(&u) {
            return Atom::free(name);
        }
        match &vals[&u] {
            Val::Fixed(v) => Atom::fixed(name, v.clone()),
            Val::Env => Atom::free(name),
        }
    }

    fn fix(&self, e: &Estimand, set: impl IntoIterator<Item = usize>, vals: &Vals) -> Estimand {
        let mut e = e.clone();
        for u in set {
            if let Some(Val::Fixed(v)) = vals.get(&u) {
                e = e.substitute(self.g.name(u), v);
            }
        }
        e
    }

    /// `P(v | predecessors in s)`, with predecessors outside `random` set to
    /// their intervention values.
    fn conditional(&self, p: &Dist, v: usize, s: &VSet, x: &VSet, random: &VSet, vals: &Vals) -> Estimand {
        let pre: VSet = s.iter().copied().filter(|&u| self.pos[u] < self.pos[v]).collect();
        let fixed: Vec<usize> = pre.iter().copied().filter(|u| x.contains(u) && !random.contains(u)).collect();
        match p {
            Dist::Observed => {
                let mut t = pre.clone();
                t.insert(v);
                let dis = self.g.district_of(v, &t);
                let mut pillow: VSet = self.g.parents_of(&dis).intersection(&t).copied().collect();
                pillow.extend(dis.iter().copied());
                pillow.remove(&v);
                let given = self.ordered(&pillow).into_iter().map(|u| self.atom(u, x, random, vals)).collect();
                Estimand::prob(vec![Atom::free(self.g.name(v))], given)
            }
            Dist::Kernels(k) => self.fix(&k[&v], fixed, vals),
            Dist::Generic(e) => {
                let later: VSet = s.iter().copied().filter(|&u| self.pos[u] > self.pos[v]).collect();
                let mut with_v = later.clone();
                with_v.insert(v);
                let q = Estimand::quotient(
                    Estimand::sum(self.names(&later), e.clone()),
                    Estimand::sum(self.names(&with_v), e.clone()),
                );
                simplify(&self.fix(&q, fixed, vals))
            }
        }
    }

    fn joint_marginal(&self, p: &Dist, s: &VSet, keep: &VSet) -> Estimand {
        let out: VSet = s.difference(keep).copied().collect();
        match p {
            Dist::Observed if keep.is_empty() => Estimand::one(),
            Dist::Observed => {
                Estimand::prob(self.ordered(keep).into_iter().map(|v| Atom::free(self.g.name(v))).collect(), vec![])
            }
            Dist::Kernels(k) => Estimand::sum(
                self.names(&out),
                Estimand::product(self.ordered(s).iter().map(|v| k[v].clone()).collect()),
            ),
            Dist::Generic(e) => Estimand::sum(self.names(&out), e.clone()),
        }
    }

    fn restrict(&self, p: &Dist, s: &VSet, keep: &VSet) -> Dist {
        let removed: VSet = s.difference(keep).copied().collect();
        match p {
            Dist::Observed => Dist::Observed,
            Dist::Kernels(k) => {
                let refs_removed =
                    keep.iter().any(|v| removed.iter().any(|&r| k[v].has_free(self.g.name(r))));
                if refs_removed {
                    Dist::Generic(self.joint_marginal(p, s, keep))
                } else {
                    Dist::Kernels(keep.iter().map(|v| (*v, k[v].clone())).collect())
                }
            }
            Dist::Generic(e) => Dist::Generic(Estimand::sum(self.names(&removed), e.clone())),
        }
    }

    /// `P_x(y)` from `p` over the subgraph induced by `s`.
    fn id(&self, y: &VSet, x: &VSet, p: &Dist, s: &VSet, vals: &Vals) -> IdResult<Estimand> {
        if x.is_empty() {
            return Ok(self.joint_marginal(p, s, y));
        }
        let an = self.g.ancestors_in(y, s, &VSet::new());
        if an != *s {
            let x2: VSet = x.intersection(&an).copied().collect();
            return self.id(y, &x2, &self.restrict(p, s, &an), &an, vals);
        }
        let an_cut = self.g.ancestors_in(y, s, x);
        let w: VSet = s.iter().copied().filter(|v| !x.contains(v) && !an_cut.contains(v)).collect();
        if !w.is_empty() {
            let mut vals2 = vals.clone();
            for &v in &w {
                vals2.insert(v, Val::Env);
            }
            let x2: VSet = x.union(&w).copied().collect();
            return self.id(y, &x2, p, s, &vals2);
        }
        let rest: VSet = s.difference(x).copied().collect();
        let comps = self.g.districts(&rest);
        let summed: VSet = rest.difference(y).copied().collect();
        if comps.len() > 1 {
            let mut factors = Vec::new();
            for c in &comps {
                let xi: VSet = s.difference(c).copied().collect();
                let mut vals2 = vals.clone();
                for &v in xi.difference(x) {
                    vals2.insert(v, Val::Env);
                }
                factors.push(self.id(c, &xi, p, s, &vals2)?);
            }
            return Ok(Estimand::sum(self.names(&summed), Estimand::product(factors)));
        }
        let sd = &comps[0];
        let whole = self.g.districts(s);
        if whole.len() == 1 {
            return Err(NonIdentified::Hedge { district: self.names(s) });
        }
        if whole.contains(sd) {
            let factors = self.ordered(sd).into_iter().map(|v| self.conditional(p, v, s, x, sd, vals)).collect();
            return Ok(Estimand::sum(self.names(&summed), Estimand::product(factors)));
        }
        let sp = whole.into_iter().find(|d| d.is_superset(sd)).expect("district of S is contained in one of G");
        let kernels = sp.iter().map(|&v| (v, self.conditional(p, v, s, x, &sp, vals))).collect();
        let x2: VSet = x.intersection(&sp).copied().collect();
        self.id(y, &x2, &Dist::Kernels(kernels), &sp, vals)
    }

    fn finish(&self, e: &Estimand) -> Estimand {
        let s = simplify(e);
        let m = simplify(&merge_district_chains(&s, self.g));
        let names: Vec<String> = self.order.iter().map(|&v| self.g.name(v).to_string()).collect();
        canonicalize(&m, &names)
    }
}

/// Identify `p(Y(·))` where every edge out of a treatment carries its own
/// value. `default` supplies treatment values for districts a treatment has
/// no edge into. Free variables other than `y` and `keep_free` are averaged
/// out against their observed marginal.
fn identify_edges(
    g: &Admg,
    y: &VSet,
    treat: &VSet,
    edge_vals: &BTreeMap<(usize, usize), Val>,
    default: &BTreeMap<usize, Val>,
    keep_free: &VSet,
) -> IdResult<Estimand> {
    let e = Engine::new(g);
    let all = g.all();
    let non_treat: VSet = all.difference(treat).copied().collect();
    let d = g.ancestors_in(y, &non_treat, &VSet::new());
    let mut factors = Vec::new();
    for di in g.districts(&d) {
        let mut vals: Vals = BTreeMap::new();
        for &t in treat {
            let mut seen: Vec<&Val> = Vec::new();
            for c in g.children(t).iter().filter(|c| di.contains(c)) {
                let v = &edge_vals[&(t, *c)];
                if !seen.contains(&v) {
                    seen.push(v);
                }
            }
            let val = match seen.len() {
                0 => default[&t].clone(),
                1 => seen[0].clone(),
                _ => {
                    return Err(NonIdentified::RecantingDistrict {
                        district: e.names(&di),
                        treatment: g.name(t).to_string(),
                        values: seen
                            .iter()
                            .map(|v| match v {
                                Val::Fixed(v) => v.label.clone(),
                                Val::Env => g.name(t).to_lowercase(),
                            })
                            .collect(),
                    })
                }
            };
            vals.insert(t, val);
        }
        let x: VSet = all.difference(&di).copied().collect();
        for &v in x.difference(treat) {
            vals.insert(v, Val::Env);
        }
        factors.push(e.id(&di, &x, &Dist::Observed, &all, &vals)?);
    }
    let summed: VSet = d.difference(y).copied().collect();
    let mut expr = Estimand::sum(e.names(&summed), Estimand::product(factors));
    let keep: BTreeSet<String> = y.iter().chain(keep_free).map(|&v| g.name(v).to_string()).collect();
    let stray: Vec<String> = expr.free_vars().into_iter().filter(|v| !keep.contains(v)).collect();
    if !stray.is_empty() {
        let ids: VSet = stray.iter().map(|n| g.id(n).expect("free variables are vertices")).collect();
        let weight = Estimand::prob(e.ordered(&ids).into_iter().map(|v| Atom::free(g.name(v))).collect(), vec![]);
        expr = Estimand::sum(stray, Estimand::product(vec![weight, expr]));
    }
    Ok(e.finish(&expr))
}

fn check_targets(g: &Admg, x: &VSet, y: &VSet) -> Result<()> {
    if let Some(&v) = x.iter().chain(y).find(|&&v| v >= g.len()) {
        return Err(Error::UnknownVertex(format!("#{v}")));
    }
    if let Some(&v) = x.intersection(y).next() {
        return Err(Error::OverlappingSets(g.name(v).to_string()));
    }
    if y.is_empty() {
        return Err(Error::InvalidQuery("empty outcome set".into()));
    }
    Ok(())
}

/// Truncated factorization on a DAG: `Σ Π_{v ∉ X} p(v | pa(v))` with
/// intervened parents at their values.
pub fn g_formula(g: &Admg, intervention: &BTreeMap<usize, Value>, y: &VSet) -> Result<Estimand> {
    if g.has_bidirected() {
        return Err(Error::HasBidirected);
    }
    let x: VSet = intervention.keys().copied().collect();
    check_targets(g, &x, y)?;
    let e = Engine::new(g);
    let factors = e
        .order
        .iter()
        .filter(|v| !x.contains(v))
        .map(|&v| {
            let given = g
                .parents(v)
                .iter()
                .map(|p| match intervention.get(p) {
                    Some(val) => Atom::fixed(g.name(*p), val.clone()),
                    None => Atom::free(g.name(*p)),
                })
                .collect();
            Estimand::prob(vec![Atom::free(g.name(v))], given)
        })
        .collect();
    let summed: VSet = g.all().into_iter().filter(|v| !x.contains(v) && !y.contains(v)).collect();
    Ok(e.finish(&Estimand::sum(e.names(&summed), Estimand::product(factors))))
}

/// Identify `p(Y(x))` on an ADMG, or return a hedge.
pub fn id(g: &Admg, intervention: &BTreeMap<usize, Value>, y: &VSet) -> Result<Estimand> {
    let x: VSet = intervention.keys().copied().collect();
    check_targets(g, &x, y)?;
    let mut edge_vals = BTreeMap::new();
    for (&t, v) in intervention {
        for &c in g.children(t) {
            edge_vals.insert((t, c), Val::Fixed(v.clone()));
        }
    }
    let default = intervention.iter().map(|(&t, v)| (t, Val::Fixed(v.clone()))).collect();
    identify_edges(g, y, &x, &edge_vals, &default, &VSet::new()).map_err(not_identified)
}

fn edge_values(q: &PseQuery, g: &Admg) -> Result<BTreeMap<(usize, usize), Val>> {
    match assignment_from_paths(q, g) {
        Ok(a) => Ok(a.values.into_iter().map(|(k, v)| (k, Val::Fixed(v))).collect()),
        Err(Error::EdgeInconsistent { witness, all }) => {
            Err(not_identified(NonIdentified::RecantingWitness { witness, all }))
        }
        Err(e) => Err(e),
    }
}

fn baselines(q: &PseQuery) -> BTreeMap<usize, Val> {
    q.treatments.iter().map(|(&t, (_, b))| (t, Val::Fixed(b.clone()))).collect()
}

/// Identify `p(Y(π, a, a′))`, or `p(Y(π, a, a′) | W(π, a, a′))` when the
/// query has a conditioning set.
pub fn id_path_specific(g: &Admg, q: &PseQuery) -> Result<Estimand> {
    if !q.given.is_empty() {
        return idc_path_specific(g, q);
    }
    let edge_vals = edge_values(q, g)?;
    identify_edges(g, &q.outcome, &q.treatment_set(), &edge_vals, &baselines(q), &VSet::new())
        .map_err(not_identified)
}

/// Conditional path-specific identification: drop conditioning variables
/// into the intervention while the separation condition allows, identify
/// the remaining joint, then divide by its margin over the conditioning set.
pub fn idc_path_specific(g: &Admg, q: &PseQuery) -> Result<Estimand> {
    let mut edge_vals = edge_values(q, g)?;
    let x = q.treatment_set();
    let z = rule2_fixpoint(g, q)?;
    let kept: VSet = q.given.difference(&z).copied().collect();
    let mut treat = x.clone();
    let mut default = baselines(q);
    for &v in &z {
        treat.insert(v);
        default.insert(v, Val::Env);
        for &c in g.children(v) {
            edge_vals.insert((v, c), Val::Env);
        }
    }
    let outcome: VSet = q.outcome.union(&kept).copied().collect();
    let joint = identify_edges(g, &outcome, &treat, &edge_vals, &default, &z).map_err(not_identified)?;
    let e = Engine::new(g);
    let cond = Estimand::quotient(joint.clone(), Estimand::sum(e.names(&q.outcome), joint));
    Ok(e.finish(&cond))
}

/// Conditioning vertices that can be moved into the intervention. A vertex
/// `w` moves when, in the split graph of the edge expansion with the copies,
/// the moved set and `w` split, the random half of `w` is separated from
/// the outcomes given the rest of the conditioning set. Vertices are tried
/// in topological order until nothing changes.
pub fn rule2_fixpoint(g: &Admg, q: &PseQuery) -> Result<VSet> {
    let x = q.treatment_set();
    let ex = edge_expand(g, &x)?;
    let copies: BTreeMap<usize, String> = ex
        .origin
        .iter()
        .map(|(&k, (a, cs))| {
            let c = *cs.iter().next().expect("edge copies feed one child");
            let (act, base) = &q.treatments[a];
            let active = q.pi.iter().any(|p| p[0] == *a && p[1] == c);
            (k, if active { act.label.clone() } else { base.label.clone() })
        })
        .collect();
    let mut z = VSet::new();
    let order = g.topological_order();
    loop {
        let mut changed = false;
        for &w in &order {
            if !q.given.contains(&w) || z.contains(&w) {
                continue;
            }
            let mut split = copies.clone();
            for &v in z.iter().chain(std::iter::once(&w)) {
                split.insert(v, g.name(v).to_lowercase());
            }
            let swig = construct_swig(&ex.graph, &split)?;
            let ys: Vec<Node> = q.outcome.iter().map(|&v| Node::Random(v)).collect();
            let cond: Vec<Node> =
                q.given.iter().filter(|&&v| v != w && !z.contains(&v)).map(|&v| Node::Random(v)).collect();
            if swig.d_separated(&[Node::Random(w)], &ys, &cond)? {
                z.insert(w);
                changed = true;
            }
        }
        if !changed {
            return Ok(z);
        }
    }
}

/// The edge g-formula on a DAG: `Π_{v ∉ A} p(v | pa(v))` with each treatment
/// parent at the value its edge carries. The result is a joint over `V \ A`.
pub fn npsem_ie_edge_g(g: &Admg, q: &PseQuery) -> Result<Estimand> {
    if g.has_bidirected() {
        return Err(Error::HasBidirected);
    }
    let asg = assignment_from_paths(q, g)?;
    let x = q.treatment_set();
    let e = Engine::new(g);
    let factors = e
        .order
        .iter()
        .filter(|v| !x.contains(v))
        .map(|&v| {
            let given = g
                .parents(v)
                .iter()
                .map(|&p| match asg.get(p, v) {
                    Some(val) => Atom::fixed(g.name(p), val.clone()),
                    None => Atom::free(g.name(p)),
                })
                .collect();
            Estimand::prob(vec![Atom::free(g.name(v))], given)
        })
        .collect();
    Ok(e.finish(&Estimand::product(factors)))
}

/// [`npsem_ie_edge_g`] summed down to the outcome set.
pub fn npsem_ie_edge_g_marginal(g: &Admg, q: &PseQuery) -> Result<Estimand> {
    let joint = npsem_ie_edge_g(g, q)?;
    let x = q.treatment_set();
    let summed: VSet = g.all().into_iter().filter(|v| !x.contains(v) && !q.outcome.contains(v)).collect();
    let e = Engine::new(g);
    Ok(e.finish(&Estimand::sum(e.names(&summed), joint)))
}

/// Identify `p(Y)` when every component of a custom expansion is set to a
/// value. Each original edge takes the value of the component covering it;
/// a child covered by components of one treatment with different values
/// makes the query non-separable.
pub fn separable_query(ex: &ExpandedGraph, comp_vals: &BTreeMap<usize, Value>, y: &VSet) -> Result<Estimand> {
    let g = ex.contract()?;
    let mut edge_vals: BTreeMap<(usize, usize), (Val, Vec<usize>)> = BTreeMap::new();
    let order = g.topological_order();
    let mut conflicts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&k, (a, cs)) in &ex.origin {
        let v = comp_vals
            .get(&k)
            .ok_or_else(|| Error::InvalidQuery(format!("no value for component `{}`", ex.graph.name(k))))?;
        for &c in cs {
            match edge_vals.get_mut(&(*a, c)) {
                Some((Val::Fixed(old), comps)) => {
                    comps.push(k);
                    if old != v {
                        conflicts.insert(c, comps.clone());
                    }
                }
                _ => {
                    edge_vals.insert((*a, c), (Val::Fixed(v.clone()), vec![k]));
                }
            }
        }
    }
    if let Some(&c) = order.iter().find(|c| conflicts.contains_key(c)) {
        return Err(not_identified(NonIdentified::SeparabilityViolated {
            vertex: g.name(c).to_string(),
            components: conflicts[&c].iter().map(|&k| ex.graph.name(k).to_string()).collect(),
        }));
    }
    let treat: VSet = ex.origin.values().map(|(a, _)| *a).collect();
    check_targets(&g, &treat, y)?;
    let mut vals: BTreeMap<(usize, usize), Val> = edge_vals.into_iter().map(|(k, (v, _))| (k, v)).collect();
    let mut default = BTreeMap::new();
    for &t in &treat {
        let first = ex
            .origin
            .iter()
            .find(|(_, (a, _))| *a == t)
            .map(|(k, _)| Val::Fixed(comp_vals[k].clone()))
            .expect("treatment has a component");
        for &c in g.children(t) {
            vals.entry((t, c)).or_insert_with(|| first.clone());
        }
        default.insert(t, first);
    }
    identify_edges(&g, y, &treat, &vals, &default, &VSet::new()).map_err(not_identified)
}

/// Rewrite `p(X | Z, W) · p(Z | W)` as `p(X, Z | W)` inside products when a
/// target of the first factor shares a district of `g` with a target of the
/// second.
pub fn merge_district_chains(e: &Estimand, g: &Admg) -> Estimand {
    match e {
        Estimand::Prob { .. } => e.clone(),
        Estimand::Sum { vars, body } => Estimand::Sum { vars: vars.clone(), body: Box::new(merge_district_chains(body, g)) },
        Estimand::Marginal { vars, body } => {
            Estimand::Marginal { vars: vars.clone(), body: Box::new(merge_district_chains(body, g)) }
        }
        Estimand::Quotient { num, den } => {
            Estimand::quotient(merge_district_chains(num, g), merge_district_chains(den, g))
        }
        Estimand::Product(fs) => {
            let mut fs: Vec<Estimand> = fs.iter().map(|f| merge_district_chains(f, g)).collect();
            'outer: loop {
                for i in 0..fs.len() {
                    for j in 0..fs.len() {
                        if i == j {
                            continue;
                        }
                        if let Some(m) = chain_merge(&fs[i], &fs[j], g) {
                            fs[i] = m;
                            fs.remove(j);
                            continue 'outer;
                        }
                    }
                }
                return Estimand::Product(fs);
            }
        }
    }
}

fn chain_merge(a: &Estimand, b: &Estimand, g: &Admg) -> Option<Estimand> {
    let (Estimand::Prob { target: x, given: gx }, Estimand::Prob { target: z, given: gz }) = (a, b) else {
        return None;
    };
    let gx_set: BTreeSet<&Atom> = gx.iter().collect();
    let mut need: BTreeSet<&Atom> = z.iter().collect();
    if gz.iter().any(|w| need.contains(w)) {
        return None;
    }
    need.extend(gz.iter());
    if gx_set != need {
        return None;
    }
    let all = g.all();
    let linked = x.iter().any(|xa| {
        z.iter().any(|za| match (g.id(&xa.var), g.id(&za.var)) {
            (Ok(u), Ok(v)) => g.district_of(u, &all).contains(&v),
            _ => false,
        })
    });
    if !linked {
        return None;
    }
    let mut target = x.clone();
    target.extend(z.iter().cloned());
    Some(Estimand::prob(target, gz.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimand::Format;

    fn v(l: &str, s: usize) -> Value {
        Value::new(l, s)
    }

    fn t(e: &Estimand) -> String {
        e.render(Format::Text)
    }

    fn tri() -> Admg {
        Admg::builder().binary(&["A", "M", "Y"]).edge("A", "M").edge("A", "Y").edge("M", "Y").build().unwrap()
    }

    #[test]
    fn mediation_formula_shape() {
        let g = tri();
        let q = PseQuery::named(&g, &["Y"], &[("A", v("a", 1), v("a′", 0))], &[&["A", "Y"]], &[]).unwrap();
        assert_eq!(t(&id_path_specific(&g, &q).unwrap()), "Σ_m p(Y|M=m,A=a)·p(M=m|A=a′)");
        assert_eq!(t(&npsem_ie_edge_g_marginal(&g, &q).unwrap()), "Σ_m p(Y|M=m,A=a)·p(M=m|A=a′)");
    }

    fn separable(name: &str) -> Result<Estimand> {
        let g = &crate::fixtures::paper_graphs()[name].dag;
        let ex = crate::paths::split_components(g)?;
        let n = ex.graph.id("N")?;
        let o = ex.graph.id("O")?;
        let vals = BTreeMap::from([(n, v("x", 0)), (o, v("x*", 1))]);
        separable_query(&ex, &vals, &ex.graph.set(&["Y"])?)
    }

    #[test]
    fn separable_expansions() {
        assert_eq!(
            t(&separable("anomlpath_a").unwrap()),
            "Σ_{m,l} p(Y|M=m,L=l,A=x*)·p(M=m|L=l,A=x)·p(L=l|A=x)"
        );
        assert_eq!(
            t(&separable("anomlpath_b").unwrap()),
            "Σ_{m,l} p(Y|M=m,L=l,A=x*)·p(M=m|L=l,A=x)·p(L=l|A=x*)"
        );
        match separable("anomlpath_c") {
            Err(Error::NotIdentified(NonIdentified::SeparabilityViolated { vertex, .. })) => assert_eq!(vertex, "L"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn back_door_adjustment() {
        let g = Admg::builder().binary(&["C", "A", "Y"]).edge("C", "A").edge("A", "Y").edge("C", "Y").build().unwrap();
        let e = id(&g, &BTreeMap::from([(1, v("a", 1))]), &VSet::from([2])).unwrap();
        assert_eq!(t(&e), "Σ_c p(Y|A=a,C=c)·p(C=c)");
    }

    #[test]
    fn front_door() {
        let g = Admg::builder().binary(&["A", "M", "Y"]).edge("A", "M").edge("M", "Y").bi("A", "Y").build().unwrap();
        let e = id(&g, &BTreeMap::from([(0, v("a", 1))]), &VSet::from([2])).unwrap();
        assert_eq!(t(&e), "Σ_m [Σ_{a*} p(Y|M=m,A=a*)·p(A=a*)]·p(M=m|A=a)");
    }

    #[test]
    fn bow_is_a_hedge() {
        let g = Admg::builder().binary(&["A", "Y"]).edge("A", "Y").bi("A", "Y").build().unwrap();
        let e = id(&g, &BTreeMap::from([(0, v("a", 1))]), &VSet::from([1]));
        assert_eq!(e, Err(Error::NotIdentified(NonIdentified::Hedge { district: vec!["A".into(), "Y".into()] })));
    }

    #[test]
    fn confounded_mediator_recants() {
        let g = Admg::builder()
            .binary(&["A", "M", "Y"])
            .edge("A", "M")
            .edge("A", "Y")
            .edge("M", "Y")
            .bi("M", "Y")
            .build()
            .unwrap();
        let q = PseQuery::named(&g, &["Y"], &[("A", v("a", 1), v("a′", 0))], &[&["A", "Y"]], &[]).unwrap();
        match id_path_specific(&g, &q) {
            Err(Error::NotIdentified(NonIdentified::RecantingDistrict { district, treatment, .. })) => {
                assert_eq!(district, ["M", "Y"]);
                assert_eq!(treatment, "A");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn merge_only_within_districts() {
        let g = Admg::builder().binary(&["M", "Y"]).edge("M", "Y").build().unwrap();
        let e = Estimand::product(vec![
            Estimand::prob(vec![Atom::free("Y")], vec![Atom::free("M")]),
            Estimand::prob(vec![Atom::free("M")], vec![]),
        ]);
        assert_eq!(merge_district_chains(&e, &g), e);
        let h = Admg::builder().binary(&["M", "Y"]).edge("M", "Y").bi("M", "Y").build().unwrap();
        assert_eq!(
            merge_district_chains(&e, &h),
            Estimand::product(vec![Estimand::prob(vec![Atom::free("Y"), Atom::free("M")], vec![])])
        );
    }
}
