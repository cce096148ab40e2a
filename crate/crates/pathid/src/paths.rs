//! Path-specific queries: proper causal paths, per-edge treatment values and
//! graphs with treatment copies routed onto outgoing edges.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::estimand::Value;
use crate::graph::{Admg, VSet, Vertex};

/// A path-specific query `p(Y(π, a, a′) | W(π, a, a′))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseQuery {
    pub outcome: VSet,
    /// Treatment vertex ↦ (active, baseline).
    pub treatments: BTreeMap<usize, (Value, Value)>,
    /// Active paths, as vertex sequences.
    pub pi: Vec<Vec<usize>>,
    pub given: VSet,
}

impl PseQuery {
    pub fn treatment_set(&self) -> VSet {
        self.treatments.keys().copied().collect()
    }

    /// Same query with every proper causal path active.
    pub fn total(g: &Admg, outcome: VSet, treatments: BTreeMap<usize, (Value, Value)>) -> Result<Self> {
        let a: VSet = treatments.keys().copied().collect();
        let pi = enumerate_proper_causal_paths(g, &a, &outcome)?;
        Ok(PseQuery { outcome, treatments, pi, given: VSet::new() })
    }

    /// Name-based construction; paths are given as `["A", "M", "Y"]`.
    pub fn named(
        g: &Admg,
        outcome: &[&str],
        treatments: &[(&str, Value, Value)],
        pi: &[&[&str]],
        given: &[&str],
    ) -> Result<Self> {
        let mut t = BTreeMap::new();
        for (v, a, b) in treatments {
            t.insert(g.id(v)?, (a.clone(), b.clone()));
        }
        let pi = pi.iter().map(|p| p.iter().map(|v| g.id(v)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
        Ok(PseQuery { outcome: g.set(outcome)?, treatments: t, pi, given: g.set(given)? })
    }

    /// Checks sets are disjoint and every path is a proper causal path in `g`.
    pub fn validate(&self, g: &Admg) -> Result<()> {
        let a = self.treatment_set();
        for &v in a.iter().chain(&self.outcome).chain(&self.given) {
            if v >= g.len() {
                return Err(Error::UnknownVertex(format!("#{v}")));
            }
        }
        if self.outcome.is_empty() {
            return Err(Error::InvalidQuery("empty outcome set".into()));
        }
        if a.is_empty() {
            return Err(Error::InvalidQuery("no treatments".into()));
        }
        for (x, y) in [(&a, &self.outcome), (&a, &self.given), (&self.outcome, &self.given)] {
            if let Some(&v) = x.intersection(y).next() {
                return Err(Error::OverlappingSets(g.name(v).to_string()));
            }
        }
        for (&v, (act, base)) in &self.treatments {
            if act.state >= g.card(v) || base.state >= g.card(v) {
                return Err(Error::OutOfRange(format!("value of `{}` exceeds its cardinality", g.name(v))));
            }
        }
        for p in &self.pi {
            let show = || p.iter().map(|&v| g.name(v)).collect::<Vec<_>>().join(" -> ");
            if p.len() < 2 {
                return Err(Error::InvalidPath(format!("`{}` has no edges", show())));
            }
            if !a.contains(&p[0]) || !self.outcome.contains(p.last().unwrap()) {
                return Err(Error::InvalidPath(format!("`{}` must run from a treatment to an outcome", show())));
            }
            if p[1..].iter().any(|v| a.contains(v)) {
                return Err(Error::InvalidPath(format!("`{}` revisits the treatment set", show())));
            }
            if let Some(w) = p.windows(2).find(|w| !g.has_edge(w[0], w[1])) {
                return Err(Error::InvalidPath(format!("no edge {} -> {}", g.name(w[0]), g.name(w[1]))));
            }
            let distinct: BTreeSet<_> = p.iter().collect();
            if distinct.len() != p.len() {
                return Err(Error::InvalidPath(format!("`{}` repeats a vertex", show())));
            }
        }
        Ok(())
    }
}

/// Directed paths from `a` to `y` meeting `a` only at their source, sorted
/// by length and then lexicographically by vertex index. A path may pass
/// through one outcome on its way to another.
pub fn enumerate_proper_causal_paths(g: &Admg, a: &VSet, y: &VSet) -> Result<Vec<Vec<usize>>> {
    if let Some(&v) = a.iter().chain(y).find(|&&v| v >= g.len()) {
        return Err(Error::UnknownVertex(format!("#{v}")));
    }
    if let Some(&v) = a.intersection(y).next() {
        return Err(Error::OverlappingSets(g.name(v).to_string()));
    }
    let mut out = Vec::new();
    for &s in a {
        let mut stack = vec![vec![s]];
        while let Some(p) = stack.pop() {
            let last = *p.last().unwrap();
            for &c in g.children(last) {
                if a.contains(&c) {
                    continue;
                }
                let mut q = p.clone();
                q.push(c);
                if y.contains(&c) {
                    out.push(q.clone());
                }
                stack.push(q);
            }
        }
    }
    out.sort_by(|p, q| p.len().cmp(&q.len()).then_with(|| p.cmp(q)));
    Ok(out)
}

/// Value carried along each edge out of a treatment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeAssignment {
    pub values: BTreeMap<(usize, usize), Value>,
}

impl EdgeAssignment {
    pub fn get(&self, a: usize, child: usize) -> Option<&Value> {
        self.values.get(&(a, child))
    }
}

/// Active value on the first edge of every path in π, baseline on every
/// other edge out of a treatment. Fails when a first edge of π also starts a
/// proper causal path outside π; the edge's child is the recanting witness.
pub fn assignment_from_paths(q: &PseQuery, g: &Admg) -> Result<EdgeAssignment> {
    q.validate(g)?;
    let a = q.treatment_set();
    let all = enumerate_proper_causal_paths(g, &a, &q.outcome)?;
    let pi: BTreeSet<&Vec<usize>> = q.pi.iter().collect();
    let active: BTreeSet<(usize, usize)> = q.pi.iter().map(|p| (p[0], p[1])).collect();
    let mut witnesses = VSet::new();
    for p in all.iter().filter(|p| !pi.contains(p)) {
        if active.contains(&(p[0], p[1])) {
            witnesses.insert(p[1]);
        }
    }
    if !witnesses.is_empty() {
        let pos: BTreeMap<usize, usize> = g.topological_order().into_iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut w: Vec<usize> = witnesses.into_iter().collect();
        w.sort_by_key(|v| pos[v]);
        let names: Vec<String> = w.iter().map(|&v| g.name(v).to_string()).collect();
        return Err(Error::EdgeInconsistent { witness: names[0].clone(), all: names });
    }
    let mut values = BTreeMap::new();
    for (&t, (act, base)) in &q.treatments {
        for &c in g.children(t) {
            let v = if active.contains(&(t, c)) { act } else { base };
            values.insert((t, c), v.clone());
        }
    }
    Ok(EdgeAssignment { values })
}

/// A graph with copies of treatments inserted between each treatment and
/// (some of) its children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpandedGraph {
    pub graph: Admg,
    /// Copy vertex ↦ (treatment it copies, children it feeds).
    pub origin: BTreeMap<usize, (usize, VSet)>,
    /// Number of vertices of the unexpanded graph; copies follow them.
    pub base_len: usize,
}

fn fresh_name(taken: &BTreeSet<String>, want: String) -> String {
    let mut n = want;
    while taken.contains(&n) {
        n.push('_');
    }
    n
}

fn build_expanded(
    g: &Admg,
    comps: &[(usize, String, VSet)],
    direct: &BTreeSet<(usize, usize)>,
) -> Result<ExpandedGraph> {
    let mut vertices: Vec<Vertex> = g.vertices().to_vec();
    let mut taken: BTreeSet<String> = vertices.iter().map(|v| v.name.clone()).collect();
    let routed: BTreeSet<(usize, usize)> =
        comps.iter().flat_map(|(a, _, cs)| cs.iter().map(move |&c| (*a, c))).collect();
    let mut directed: Vec<(usize, usize)> = g
        .directed_edges()
        .filter(|e| !routed.contains(e) || direct.contains(e))
        .collect();
    let mut det: Vec<(usize, usize)> = g.deterministic_edges().filter(|e| directed.contains(e)).collect();
    let mut origin = BTreeMap::new();
    for (a, name, children) in comps {
        let id = vertices.len();
        let name = fresh_name(&taken, name.clone());
        taken.insert(name.clone());
        vertices.push(Vertex { name, card: g.card(*a) });
        directed.push((*a, id));
        det.push((*a, id));
        for &c in children {
            directed.push((id, c));
        }
        origin.insert(id, (*a, children.clone()));
    }
    let bi: Vec<(usize, usize)> = g.bidirected_edges().collect();
    let graph = Admg::from_indices(vertices, &directed, &bi, &det)?;
    Ok(ExpandedGraph { graph, origin, base_len: g.len() })
}

/// Route every edge `A → C` with `A ∈ a` through a fresh copy `A_C`.
pub fn edge_expand(g: &Admg, a: &VSet) -> Result<ExpandedGraph> {
    if let Some(&v) = a.iter().find(|&&v| v >= g.len()) {
        return Err(Error::UnknownVertex(format!("#{v}")));
    }
    let comps: Vec<(usize, String, VSet)> = a
        .iter()
        .flat_map(|&t| g.children(t).iter().map(move |&c| (t, c)))
        .map(|(t, c)| (t, format!("{}_{}", g.name(t), g.name(c)), VSet::from([c])))
        .collect();
    build_expanded(g, &comps, &BTreeSet::new())
}

/// Insert named components between each treatment and the children they
/// cover. A component named after the treatment itself leaves its children
/// attached directly. Every child must be covered by some component.
pub fn expand_custom(g: &Admg, decomposition: &BTreeMap<usize, Vec<(String, VSet)>>) -> Result<ExpandedGraph> {
    let mut comps = Vec::new();
    let mut direct = BTreeSet::new();
    for (&a, parts) in decomposition {
        if a >= g.len() {
            return Err(Error::UnknownVertex(format!("#{a}")));
        }
        let mut covered = VSet::new();
        for (name, cs) in parts {
            if let Some(&c) = cs.iter().find(|c| !g.children(a).contains(c)) {
                return Err(Error::InvalidQuery(format!(
                    "`{}` is not a child of `{}`",
                    g.vertices().get(c).map_or("?", |v| v.name.as_str()),
                    g.name(a)
                )));
            }
            covered.extend(cs.iter().copied());
            if name == g.name(a) {
                direct.extend(cs.iter().map(|&c| (a, c)));
            } else {
                comps.push((a, name.clone(), cs.clone()));
            }
        }
        if let Some(&c) = g.children(a).iter().find(|c| !covered.contains(c)) {
            return Err(Error::UncoveredChild(g.name(c).to_string()));
        }
    }
    build_expanded(g, &comps, &direct)
}

/// Read an expansion off a graph in which each component is a vertex whose
/// only parent is a treatment reached along a deterministic edge. Vertex
/// names are preserved; components are renumbered after the base vertices.
pub fn split_components(g: &Admg) -> Result<ExpandedGraph> {
    let comps: Vec<usize> = (0..g.len())
        .filter(|&v| matches!(g.parents(v), [p] if g.is_deterministic(*p, v)))
        .collect();
    if let Some(&c) = comps.iter().find(|&&c| comps.contains(&g.parents(c)[0])) {
        return Err(Error::InvalidQuery(format!("component `{}` feeds another component", g.name(c))));
    }
    let keep: Vec<usize> = (0..g.len()).filter(|v| !comps.contains(v)).collect();
    let new_id = |v: usize| keep.iter().position(|&k| k == v).expect("base vertex");
    let vertices: Vec<Vertex> = keep.iter().map(|&v| g.vertices()[v].clone()).collect();
    let mut directed: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut det = Vec::new();
    let mut decomposition: BTreeMap<usize, Vec<(String, VSet)>> = BTreeMap::new();
    for (a, b) in g.directed_edges() {
        if comps.contains(&b) {
            continue;
        }
        if comps.contains(&a) {
            let t = new_id(g.parents(a)[0]);
            directed.insert((t, new_id(b)));
            let parts = decomposition.entry(t).or_default();
            match parts.iter_mut().find(|(n, _)| n == g.name(a)) {
                Some((_, cs)) => {
                    cs.insert(new_id(b));
                }
                None => parts.push((g.name(a).to_string(), VSet::from([new_id(b)]))),
            }
        } else {
            directed.insert((new_id(a), new_id(b)));
            if g.is_deterministic(a, b) {
                det.push((new_id(a), new_id(b)));
            }
        }
    }
    // Original edges out of a treatment stay direct.
    for (a, b) in g.directed_edges() {
        if comps.contains(&a) || comps.contains(&b) {
            continue;
        }
        if let Some(parts) = decomposition.get_mut(&new_id(a)) {
            let own = g.name(a).to_string();
            match parts.iter_mut().find(|(n, _)| *n == own) {
                Some((_, cs)) => {
                    cs.insert(new_id(b));
                }
                None => parts.push((own, VSet::from([new_id(b)]))),
            }
        }
    }
    let directed: Vec<_> = directed.into_iter().collect();
    let bi: Vec<(usize, usize)> = g
        .bidirected_edges()
        .filter(|(a, b)| !comps.contains(a) && !comps.contains(b))
        .map(|(a, b)| (new_id(a), new_id(b)))
        .collect();
    let base = Admg::from_indices(vertices, &directed, &bi, &det)?;
    expand_custom(&base, &decomposition)
}

impl ExpandedGraph {
    pub fn is_copy(&self, v: usize) -> bool {
        self.origin.contains_key(&v)
    }

    /// The copy routing `a → child`, if the edge was expanded.
    pub fn copy_of(&self, a: usize, child: usize) -> Option<usize> {
        self.origin.iter().find(|(_, (t, cs))| *t == a && cs.contains(&child)).map(|(&k, _)| k)
    }

    /// Copy vertex ↦ value, reading each copy's edge from `assignment`.
    pub fn intervention(&self, assignment: &EdgeAssignment) -> Result<BTreeMap<usize, Value>> {
        let mut out = BTreeMap::new();
        for (&k, (a, cs)) in &self.origin {
            let c = *cs.iter().next().ok_or_else(|| Error::InvalidQuery("component with no children".into()))?;
            let v = assignment
                .get(*a, c)
                .ok_or_else(|| Error::InvalidQuery(format!("no value for edge into `{}`", self.graph.name(c))))?;
            out.insert(k, v.clone());
        }
        Ok(out)
    }

    /// Remove the copies and reconnect each treatment to the children they fed.
    pub fn contract(&self) -> Result<Admg> {
        let n = self.base_len;
        let vertices = self.graph.vertices()[..n].to_vec();
        let mut directed: BTreeSet<(usize, usize)> =
            self.graph.directed_edges().filter(|&(a, b)| a < n && b < n).collect();
        let mut det: Vec<(usize, usize)> =
            self.graph.deterministic_edges().filter(|&(a, b)| a < n && b < n).collect();
        for (a, cs) in self.origin.values() {
            directed.extend(cs.iter().map(|&c| (*a, c)));
        }
        det.retain(|e| directed.contains(e));
        let directed: Vec<_> = directed.into_iter().collect();
        let bi: Vec<_> = self.graph.bidirected_edges().filter(|&(a, b)| a < n && b < n).collect();
        Admg::from_indices(vertices, &directed, &bi, &det)
    }
}

/// True when every original vertex receives one value from all of its
/// component parents that share a treatment. `assignment` maps component
/// vertices to states.
pub fn lemma1_check(ex: &ExpandedGraph, assignment: &BTreeMap<usize, usize>) -> bool {
    for c in 0..ex.base_len {
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        for &p in ex.graph.parents(c) {
            if let (Some((a, _)), Some(&v)) = (ex.origin.get(&p), assignment.get(&p)) {
                if *seen.entry(*a).or_insert(v) != v {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amyl() -> Admg {
        Admg::builder()
            .binary(&["A", "L", "M", "Y"])
            .edge("A", "L")
            .edge("A", "M")
            .edge("A", "Y")
            .edge("L", "M")
            .edge("L", "Y")
            .edge("M", "Y")
            .build()
            .unwrap()
    }

    fn names(g: &Admg, ps: &[Vec<usize>]) -> Vec<String> {
        ps.iter().map(|p| p.iter().map(|&v| g.name(v)).collect::<Vec<_>>().join("")).collect()
    }

    fn v(l: &str, s: usize) -> Value {
        Value::new(l, s)
    }

    #[test]
    fn four_paths_in_order() {
        let g = amyl();
        let ps = enumerate_proper_causal_paths(&g, &g.set(&["A"]).unwrap(), &g.set(&["Y"]).unwrap()).unwrap();
        assert_eq!(names(&g, &ps), ["AY", "ALY", "AMY", "ALMY"]);
    }

    #[test]
    fn direct_path_assignment() {
        let g = amyl();
        let q = PseQuery::named(&g, &["Y"], &[("A", v("a", 1), v("a′", 0))], &[&["A", "Y"]], &[]).unwrap();
        let e = assignment_from_paths(&q, &g).unwrap();
        assert_eq!(e.get(0, 3).unwrap().state, 1);
        assert_eq!(e.get(0, 1).unwrap().state, 0);
        assert_eq!(e.get(0, 2).unwrap().state, 0);
    }

    #[test]
    fn shared_first_edge_recants() {
        let g = amyl();
        let q = PseQuery::named(&g, &["Y"], &[("A", v("a", 1), v("a′", 0))], &[&["A", "Y"], &["A", "L", "Y"]], &[])
            .unwrap();
        match assignment_from_paths(&q, &g) {
            Err(Error::EdgeInconsistent { witness, .. }) => assert_eq!(witness, "L"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_paths() {
        let g = amyl();
        let t = [("A", v("a", 1), v("a′", 0))];
        for p in [&["A", "M", "L", "Y"][..], &["A"], &["L", "Y"]] {
            let q = PseQuery::named(&g, &["Y"], &t, &[p], &[]).unwrap();
            assert!(matches!(q.validate(&g), Err(Error::InvalidPath(_))), "{p:?}");
        }
    }

    #[test]
    fn edge_expansion_and_contraction() {
        let g = amyl();
        let ex = edge_expand(&g, &g.set(&["A"]).unwrap()).unwrap();
        let eg = &ex.graph;
        assert_eq!(eg.len(), 7);
        let al = eg.id("A_L").unwrap();
        assert_eq!(eg.parents(eg.id("L").unwrap()), &[al]);
        assert!(eg.is_deterministic(0, al));
        assert_eq!(ex.contract().unwrap(), g);
    }

    #[test]
    fn custom_expansion_checks_cover() {
        let g = amyl();
        let mut d = BTreeMap::new();
        d.insert(0, vec![("N".to_string(), g.set(&["M", "L"]).unwrap())]);
        assert!(matches!(expand_custom(&g, &d), Err(Error::UncoveredChild(c)) if c == "Y"));
        d.get_mut(&0).unwrap().push(("O".to_string(), g.set(&["Y", "L"]).unwrap()));
        let ex = expand_custom(&g, &d).unwrap();
        let (n, o) = (ex.graph.id("N").unwrap(), ex.graph.id("O").unwrap());
        assert!(!lemma1_check(&ex, &BTreeMap::from([(n, 1), (o, 0)])));
        assert!(lemma1_check(&ex, &BTreeMap::from([(n, 1), (o, 1)])));
    }
}
