//! Mixed graphs over named finite-state vertices.
//!
//! Vertices are addressed by their declaration index. Every set is a
//! `BTreeSet<usize>`, so iteration follows declaration order and all
//! downstream output is deterministic.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

pub type VSet = BTreeSet<usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub name: String,
    /// Number of states; values are `0..card`.
    pub card: usize,
}

/// Acyclic directed mixed graph. Directed edges may carry a flag marking the
/// child as a deterministic copy of the parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Admg {
    vertices: Vec<Vertex>,
    index: HashMap<String, usize>,
    directed: BTreeSet<(usize, usize)>,
    bidirected: BTreeSet<(usize, usize)>,
    deterministic: BTreeSet<(usize, usize)>,
    pa: Vec<Vec<usize>>,
    ch: Vec<Vec<usize>>,
    sib: Vec<Vec<usize>>,
}

/// Name-based construction with eager validation.
#[derive(Clone, Debug, Default)]
pub struct AdmgBuilder {
    vertices: Vec<Vertex>,
    directed: Vec<(String, String)>,
    bidirected: Vec<(String, String)>,
    deterministic: Vec<(String, String)>,
}

impl AdmgBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(mut self, name: &str, card: usize) -> Self {
        self.vertices.push(Vertex { name: name.to_string(), card });
        self
    }

    /// Binary vertices, in order.
    pub fn binary(mut self, names: &[&str]) -> Self {
        for n in names {
            self = self.vertex(n, 2);
        }
        self
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.directed.push((from.into(), to.into()));
        self
    }

    /// Directed edge whose child deterministically copies the parent.
    pub fn copy_edge(mut self, from: &str, to: &str) -> Self {
        self.deterministic.push((from.into(), to.into()));
        self
    }

    pub fn bi(mut self, a: &str, b: &str) -> Self {
        self.bidirected.push((a.into(), b.into()));
        self
    }

    pub fn build(self) -> Result<Admg> {
        let mut index = HashMap::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if index.insert(v.name.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(v.name.clone()));
            }
            if v.card == 0 {
                return Err(Error::OutOfRange(format!("cardinality of `{}` is 0", v.name)));
            }
        }
        let id = |s: &str| index.get(s).copied().ok_or_else(|| Error::UnknownVertex(s.into()));
        let mut directed = Vec::new();
        let mut det = Vec::new();
        for (a, b) in &self.directed {
            directed.push((id(a)?, id(b)?));
        }
        for (a, b) in &self.deterministic {
            let e = (id(a)?, id(b)?);
            directed.push(e);
            det.push(e);
        }
        let mut bidirected = Vec::new();
        for (a, b) in &self.bidirected {
            bidirected.push((id(a)?, id(b)?));
        }
        Admg::from_indices(self.vertices, &directed, &bidirected, &det)
    }
}

impl Admg {
    pub fn builder() -> AdmgBuilder {
        AdmgBuilder::new()
    }

    /// Index-based construction. Rejects self-loops, duplicates and cycles.
    pub fn from_indices(
        vertices: Vec<Vertex>,
        directed: &[(usize, usize)],
        bidirected: &[(usize, usize)],
        deterministic: &[(usize, usize)],
    ) -> Result<Admg> {
        let n = vertices.len();
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.name.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(v.name.clone()));
            }
        }
        let name = |i: usize| vertices[i].name.clone();
        let mut d = BTreeSet::new();
        for &(a, b) in directed {
            if a >= n || b >= n {
                return Err(Error::UnknownVertex(format!("#{}", a.max(b))));
            }
            if a == b {
                return Err(Error::SelfLoop(name(a)));
            }
            if !d.insert((a, b)) {
                return Err(Error::DuplicateEdge(format!("{} -> {}", name(a), name(b))));
            }
        }
        let mut bi = BTreeSet::new();
        for &(a, b) in bidirected {
            if a >= n || b >= n {
                return Err(Error::UnknownVertex(format!("#{}", a.max(b))));
            }
            if a == b {
                return Err(Error::SelfLoop(name(a)));
            }
            if !bi.insert((a.min(b), a.max(b))) {
                return Err(Error::DuplicateEdge(format!("{} <-> {}", name(a), name(b))));
            }
        }
        let det: BTreeSet<_> = deterministic.iter().copied().collect();
        if let Some(&(a, b)) = det.iter().find(|e| !d.contains(e)) {
            return Err(Error::UnknownVertex(format!("{} => {}", name(a), name(b))));
        }
        let mut pa = vec![Vec::new(); n];
        let mut ch = vec![Vec::new(); n];
        let mut sib = vec![Vec::new(); n];
        for &(a, b) in &d {
            pa[b].push(a);
            ch[a].push(b);
        }
        for &(a, b) in &bi {
            sib[a].push(b);
            sib[b].push(a);
        }
        for l in pa.iter_mut().chain(ch.iter_mut()).chain(sib.iter_mut()) {
            l.sort_unstable();
        }
        let g = Admg { vertices, index, directed: d, bidirected: bi, deterministic: det, pa, ch, sib };
        if let Some(cycle) = g.find_cycle() {
            return Err(Error::CycleDetected(cycle.iter().map(|&i| g.name(i).to_string()).collect()));
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn all(&self) -> VSet {
        (0..self.len()).collect()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.vertices[v].name
    }

    pub fn card(&self, v: usize) -> usize {
        self.vertices[v].card
    }

    pub fn id(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn set<S: AsRef<str>>(&self, names: &[S]) -> Result<VSet> {
        names.iter().map(|n| self.id(n.as_ref())).collect()
    }

    /// Vertex ids for a sequence of names, keeping order and repeats.
    pub fn set_ordered<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.id(n.as_ref())).collect()
    }

    pub fn names(&self, s: &VSet) -> Vec<String> {
        s.iter().map(|&v| self.name(v).to_string()).collect()
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.directed.iter().copied()
    }

    pub fn bidirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bidirected.iter().copied()
    }

    pub fn deterministic_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.deterministic.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.directed.contains(&(a, b))
    }

    pub fn has_bi(&self, a: usize, b: usize) -> bool {
        self.bidirected.contains(&(a.min(b), a.max(b)))
    }

    pub fn is_deterministic(&self, a: usize, b: usize) -> bool {
        self.deterministic.contains(&(a, b))
    }

    pub fn has_bidirected(&self) -> bool {
        !self.bidirected.is_empty()
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.pa[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.ch[v]
    }

    pub fn siblings(&self, v: usize) -> &[usize] {
        &self.sib[v]
    }

    pub fn parents_of(&self, s: &VSet) -> VSet {
        s.iter().flat_map(|&v| self.pa[v].iter().copied()).collect()
    }

    pub fn children_of(&self, s: &VSet) -> VSet {
        s.iter().flat_map(|&v| self.ch[v].iter().copied()).collect()
    }

    /// Reflexive ancestors of `s`.
    pub fn ancestors(&self, s: &VSet) -> VSet {
        self.closure(s, &self.all(), &VSet::new(), true)
    }

    /// Reflexive descendants of `s`.
    pub fn descendants(&self, s: &VSet) -> VSet {
        self.closure(s, &self.all(), &VSet::new(), false)
    }

    /// Reflexive ancestors of `s` in the subgraph induced by `within`, with the
    /// incoming edges of `cut` removed.
    pub fn ancestors_in(&self, s: &VSet, within: &VSet, cut: &VSet) -> VSet {
        self.closure(s, within, cut, true)
    }

    fn closure(&self, s: &VSet, within: &VSet, cut: &VSet, up: bool) -> VSet {
        let mut seen: VSet = s.iter().copied().filter(|v| within.contains(v)).collect();
        let mut stack: Vec<usize> = seen.iter().copied().collect();
        while let Some(v) = stack.pop() {
            let next = if up {
                if cut.contains(&v) {
                    continue;
                }
                &self.pa[v]
            } else {
                &self.ch[v]
            };
            for &w in next {
                if !up && cut.contains(&w) {
                    continue;
                }
                if within.contains(&w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Bidirected-connected components of the subgraph induced by `s`, ordered
    /// by smallest member.
    pub fn districts(&self, s: &VSet) -> Vec<VSet> {
        let mut out = Vec::new();
        let mut seen = VSet::new();
        for &v in s {
            if seen.contains(&v) {
                continue;
            }
            let d = self.district_of(v, s);
            seen.extend(d.iter().copied());
            out.push(d);
        }
        out
    }

    /// The district of `v` within the subgraph induced by `s`.
    pub fn district_of(&self, v: usize, s: &VSet) -> VSet {
        let mut d = VSet::from([v]);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &w in &self.sib[u] {
                if s.contains(&w) && d.insert(w) {
                    stack.push(w);
                }
            }
        }
        d
    }

    /// Deterministic topological order: Kahn's algorithm, smallest index first.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.len();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.pa[v].len()).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.ch[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.len();
        let mut state = vec![0u8; n];
        let mut parent = vec![usize::MAX; n];
        for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            state[root] = 1;
            while let Some(&mut (v, ref mut i)) = stack.last_mut() {
                if *i < self.ch[v].len() {
                    let w = self.ch[v][*i];
                    *i += 1;
                    match state[w] {
                        0 => {
                            state[w] = 1;
                            parent[w] = v;
                            stack.push((w, 0));
                        }
                        1 => {
                            let mut path = vec![v];
                            let mut u = v;
                            while u != w {
                                u = parent[u];
                                path.push(u);
                            }
                            path.reverse();
                            path.push(w);
                            return Some(path);
                        }
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Latent projection onto the complement of `hidden`.
    ///
    /// `a -> b` when a directed path from `a` to `b` has only hidden interior
    /// vertices; `a <-> b` when some hidden vertex reaches both along hidden
    /// directed paths, or when the input already has `a <-> b`. Deterministic
    /// flags survive only on edges that already existed between observed vertices.
    pub fn latent_project(&self, hidden: &VSet) -> Result<Admg> {
        for &h in hidden {
            if h >= self.len() {
                return Err(Error::UnknownVertex(format!("#{h}")));
            }
        }
        let observed: Vec<usize> = (0..self.len()).filter(|v| !hidden.contains(v)).collect();
        let new_id: HashMap<usize, usize> = observed.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        // Observed vertices reachable from `v` along directed paths with hidden interior.
        let reach = |v: usize| -> VSet {
            let mut out = VSet::new();
            let mut seen = VSet::new();
            let mut stack: Vec<usize> = self.ch[v].clone();
            while let Some(w) = stack.pop() {
                if !seen.insert(w) {
                    continue;
                }
                if hidden.contains(&w) {
                    stack.extend(self.ch[w].iter().copied());
                } else {
                    out.insert(w);
                }
            }
            out
        };
        let mut directed = Vec::new();
        let mut det = Vec::new();
        for &a in &observed {
            for b in reach(a) {
                directed.push((new_id[&a], new_id[&b]));
                if self.is_deterministic(a, b) {
                    det.push((new_id[&a], new_id[&b]));
                }
            }
        }
        let mut bi = BTreeSet::new();
        for &(a, b) in &self.bidirected {
            if let (Some(&x), Some(&y)) = (new_id.get(&a), new_id.get(&b)) {
                bi.insert((x.min(y), x.max(y)));
            }
        }
        for &h in hidden {
            let r: Vec<usize> = reach(h).into_iter().collect();
            for i in 0..r.len() {
                for j in i + 1..r.len() {
                    let (x, y) = (new_id[&r[i]], new_id[&r[j]]);
                    bi.insert((x.min(y), x.max(y)));
                }
            }
        }
        for &(a, b) in &self.bidirected {
            // a <-> b with hidden endpoints: everything hidden-reachable from
            // one side is confounded with everything reachable from the other.
            let side = |v: usize| -> VSet {
                if hidden.contains(&v) {
                    reach(v)
                } else {
                    VSet::from([v])
                }
            };
            if hidden.contains(&a) || hidden.contains(&b) {
                for x in side(a) {
                    for y in side(b) {
                        if x != y {
                            let (x, y) = (new_id[&x], new_id[&y]);
                            bi.insert((x.min(y), x.max(y)));
                        }
                    }
                }
            }
        }
        let vertices = observed.iter().map(|&v| self.vertices[v].clone()).collect();
        let bi: Vec<_> = bi.into_iter().collect();
        Admg::from_indices(vertices, &directed, &bi, &det)
    }
}

/// A DAG together with the vertices that are unobserved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HiddenDag {
    pub dag: Admg,
    pub hidden: VSet,
}

impl HiddenDag {
    pub fn new(dag: Admg, hidden: VSet) -> Result<Self> {
        if dag.has_bidirected() {
            return Err(Error::HasBidirected);
        }
        if let Some(&h) = hidden.iter().find(|&&h| h >= dag.len()) {
            return Err(Error::UnknownVertex(format!("#{h}")));
        }
        Ok(HiddenDag { dag, hidden })
    }

    /// A DAG with nothing hidden.
    pub fn observed(dag: Admg) -> Result<Self> {
        Self::new(dag, VSet::new())
    }

    pub fn with_hidden<S: AsRef<str>>(dag: Admg, hidden: &[S]) -> Result<Self> {
        let h = dag.set(hidden)?;
        Self::new(dag, h)
    }

    pub fn observed_set(&self) -> VSet {
        (0..self.dag.len()).filter(|v| !self.hidden.contains(v)).collect()
    }

    pub fn project(&self) -> Admg {
        self.dag.latent_project(&self.hidden).expect("projection of a valid DAG")
    }
}

/// Deterministic topological order of `g`. Fails with a cycle listing only if
/// `g` was built bypassing validation, which the public constructors forbid.
pub fn topological_order(g: &Admg) -> Result<Vec<usize>> {
    let order = g.topological_order();
    if order.len() != g.len() {
        let cyc = g.find_cycle().unwrap_or_default();
        return Err(Error::CycleDetected(cyc.iter().map(|&i| g.name(i).to_string()).collect()));
    }
    Ok(order)
}

/// Districts of `s`, checking membership first.
pub fn districts(g: &Admg, s: &VSet) -> Result<Vec<VSet>> {
    if let Some(&v) = s.iter().find(|&&v| v >= g.len()) {
        return Err(Error::UnknownVertex(format!("#{v}")));
    }
    Ok(g.districts(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Admg {
        Admg::builder().binary(&["A", "M", "Y"]).edge("A", "M").edge("M", "Y").build().unwrap()
    }

    #[test]
    fn topo_chain() {
        let g = chain();
        assert_eq!(topological_order(&g).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn topo_declaration_tie_break() {
        let g = Admg::builder().binary(&["Y", "B", "A"]).edge("A", "Y").build().unwrap();
        let names: Vec<_> = g.topological_order().iter().map(|&v| g.name(v).to_string()).collect();
        assert_eq!(names, ["B", "A", "Y"]);
    }

    #[test]
    fn cycle_is_reported() {
        let e = Admg::builder()
            .binary(&["A", "B", "C"])
            .edge("A", "B")
            .edge("B", "C")
            .edge("C", "A")
            .build()
            .unwrap_err();
        match e {
            Error::CycleDetected(c) => {
                assert_eq!(c.first(), c.last());
                assert_eq!(c.len(), 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(
            Admg::builder().binary(&["A"]).edge("A", "A").build(),
            Err(Error::SelfLoop(_))
        ));
        assert!(matches!(
            Admg::builder().binary(&["A", "B"]).edge("A", "B").edge("A", "B").build(),
            Err(Error::DuplicateEdge(_))
        ));
        assert!(matches!(
            Admg::builder().binary(&["A", "B"]).bi("A", "B").bi("B", "A").build(),
            Err(Error::DuplicateEdge(_))
        ));
        assert!(matches!(
            Admg::builder().binary(&["A"]).edge("A", "Z").build(),
            Err(Error::UnknownVertex(_))
        ));
        assert!(matches!(
            Admg::builder().binary(&["A", "A"]).build(),
            Err(Error::DuplicateVertex(_))
        ));
    }

    #[test]
    fn ancestry() {
        let g = chain();
        assert_eq!(g.ancestors(&VSet::from([2])), VSet::from([0, 1, 2]));
        assert!(g.ancestors(&VSet::new()).is_empty());
        assert_eq!(g.descendants(&VSet::from([1])), VSet::from([1, 2]));
        // cutting incoming edges of M hides A
        assert_eq!(g.ancestors_in(&VSet::from([2]), &g.all(), &VSet::from([1])), VSet::from([1, 2]));
    }

    #[test]
    fn district_partition() {
        let g = Admg::builder()
            .binary(&["A", "M", "Y"])
            .edge("A", "M")
            .edge("M", "Y")
            .edge("A", "Y")
            .bi("M", "Y")
            .build()
            .unwrap();
        assert_eq!(g.districts(&g.all()), vec![VSet::from([0]), VSet::from([1, 2])]);
        assert_eq!(g.districts(&VSet::from([1, 2])), vec![VSet::from([1, 2])]);
        let c = chain();
        assert_eq!(c.districts(&c.all()).len(), 3);
    }

    #[test]
    fn projection_of_hidden_confounder() {
        let g = Admg::builder()
            .binary(&["A", "M", "Y", "H"])
            .edge("A", "M")
            .edge("M", "Y")
            .edge("A", "Y")
            .edge("H", "M")
            .edge("H", "Y")
            .build()
            .unwrap();
        let p = g.latent_project(&g.set(&["H"]).unwrap()).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.has_edge(0, 1) && p.has_edge(1, 2) && p.has_edge(0, 2));
        assert!(p.has_bi(1, 2));
        assert_eq!(p.bidirected_edges().count(), 1);
    }

    #[test]
    fn projection_without_hidden_is_identity() {
        let g = chain();
        assert_eq!(g.latent_project(&VSet::new()).unwrap(), g);
    }
}
