//! Single-world intervention graphs by node splitting, and separation with
//! fixed nodes that block every path through them.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::Admg;

/// A vertex of a split graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    /// The random half (or the unsplit vertex).
    Random(usize),
    /// The fixed half of an intervened vertex.
    Fixed(usize),
}

#[derive(Clone, Debug)]
pub struct Swig {
    base: Admg,
    fixed: BTreeMap<usize, String>,
    labels: Vec<BTreeSet<String>>,
}

/// Split every vertex in `interventions`. The fixed half takes the outgoing
/// directed edges and the random half keeps everything else.
pub fn construct_swig(g: &Admg, interventions: &BTreeMap<usize, String>) -> Result<Swig> {
    if let Some(&v) = interventions.keys().find(|&&v| v >= g.len()) {
        return Err(Error::UnknownVertex(format!("#{v}")));
    }
    let mut s = Swig { base: g.clone(), fixed: interventions.clone(), labels: vec![BTreeSet::new(); g.len()] };
    for v in g.topological_order() {
        let mut l = BTreeSet::new();
        for &p in g.parents(v) {
            match s.fixed.get(&p) {
                Some(lab) => {
                    l.insert(lab.clone());
                }
                None => l.extend(s.labels[p].iter().cloned()),
            }
        }
        s.labels[v] = l;
    }
    Ok(s)
}

/// Name-based convenience over [`construct_swig`].
pub fn construct_swig_named(g: &Admg, interventions: &[(&str, &str)]) -> Result<Swig> {
    let mut m = BTreeMap::new();
    for (v, lab) in interventions {
        m.insert(g.id(v)?, lab.to_string());
    }
    construct_swig(g, &m)
}

impl Swig {
    pub fn base(&self) -> &Admg {
        &self.base
    }

    pub fn is_split(&self, v: usize) -> bool {
        self.fixed.contains_key(&v)
    }

    pub fn fixed_label(&self, v: usize) -> Option<&str> {
        self.fixed.get(&v).map(String::as_str)
    }

    /// Value labels a random vertex carries, e.g. `{a, m}` for `Y(a, m)`.
    pub fn labels(&self, v: usize) -> &BTreeSet<String> {
        &self.labels[v]
    }

    fn source(&self, v: usize) -> Node {
        if self.fixed.contains_key(&v) {
            Node::Fixed(v)
        } else {
            Node::Random(v)
        }
    }

    /// Directed edges of the split graph.
    pub fn directed_edges(&self) -> Vec<(Node, Node)> {
        self.base.directed_edges().map(|(a, b)| (self.source(a), Node::Random(b))).collect()
    }

    /// Edges incident to `n` as `(neighbour, arrowhead at neighbour, arrowhead at n)`.
    fn incident(&self, n: Node) -> Vec<(Node, bool, bool)> {
        let mut out = Vec::new();
        match n {
            Node::Fixed(v) => {
                for &c in self.base.children(v) {
                    out.push((Node::Random(c), true, false));
                }
            }
            Node::Random(v) => {
                if !self.fixed.contains_key(&v) {
                    for &c in self.base.children(v) {
                        out.push((Node::Random(c), true, false));
                    }
                }
                for &p in self.base.parents(v) {
                    out.push((self.source(p), false, true));
                }
                for &s in self.base.siblings(v) {
                    out.push((Node::Random(s), true, true));
                }
            }
        }
        out
    }

    fn check(&self, n: Node) -> Result<()> {
        match n {
            Node::Random(v) if v < self.base.len() => Ok(()),
            Node::Fixed(v) if self.fixed.contains_key(&v) => Ok(()),
            Node::Random(v) | Node::Fixed(v) => Err(Error::UnknownVertex(match n {
                Node::Fixed(_) if v < self.base.len() => format!("fixed {}", self.base.name(v)),
                _ => format!("#{v}"),
            })),
        }
    }

    fn ancestors_of(&self, z: &BTreeSet<Node>) -> BTreeSet<Node> {
        let mut seen = z.clone();
        let mut stack: Vec<Node> = z.iter().copied().collect();
        while let Some(n) = stack.pop() {
            if let Node::Random(v) = n {
                for &p in self.base.parents(v) {
                    let s = self.source(p);
                    if seen.insert(s) {
                        stack.push(s);
                    }
                }
            }
        }
        seen
    }

    /// True when every path between `x` and `y` is blocked given `z`.
    ///
    /// A non-collider blocks when it is in `z`; a collider blocks unless it or
    /// a descendant is in `z`; a fixed node blocks whenever a path passes through it.
    pub fn d_separated(&self, x: &[Node], y: &[Node], z: &[Node]) -> Result<bool> {
        for &n in x.iter().chain(y).chain(z) {
            self.check(n)?;
        }
        let xs: BTreeSet<Node> = x.iter().copied().collect();
        let ys: BTreeSet<Node> = y.iter().copied().collect();
        let zs: BTreeSet<Node> = z.iter().copied().collect();
        if let Some(n) = xs.iter().filter(|n| ys.contains(n) || zs.contains(n)).chain(ys.intersection(&zs)).next() {
            return Err(Error::OverlappingSets(self.node_name(*n)));
        }
        let anc = self.ancestors_of(&zs);
        let mut seen: BTreeSet<(Node, bool)> = BTreeSet::new();
        let mut stack: Vec<(Node, bool)> = Vec::new();
        for &s in &xs {
            for (nb, head_nb, _) in self.incident(s) {
                stack.push((nb, head_nb));
            }
        }
        while let Some((n, head_in)) = stack.pop() {
            if !seen.insert((n, head_in)) {
                continue;
            }
            if ys.contains(&n) {
                return Ok(false);
            }
            if matches!(n, Node::Fixed(_)) {
                continue;
            }
            for (nb, head_nb, head_here) in self.incident(n) {
                let collider = head_in && head_here;
                let pass = if collider { anc.contains(&n) } else { !zs.contains(&n) };
                if pass {
                    stack.push((nb, head_nb));
                }
            }
        }
        Ok(true)
    }

    pub fn node_name(&self, n: Node) -> String {
        match n {
            Node::Random(v) => {
                let l = &self.labels[v];
                if l.is_empty() {
                    self.base.name(v).to_string()
                } else {
                    format!("{}({})", self.base.name(v), l.iter().cloned().collect::<Vec<_>>().join(","))
                }
            }
            Node::Fixed(v) => self.fixed[&v].clone(),
        }
    }

    /// Annotated text listing of the split graph.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (a, b) in self.directed_edges() {
            out.push_str(&format!("{} -> {}\n", self.node_name(a), self.node_name(b)));
        }
        for (a, b) in self.base.bidirected_edges() {
            out.push_str(&format!(
                "{} <-> {}\n",
                self.node_name(Node::Random(a)),
                self.node_name(Node::Random(b))
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(edges: &[(&str, &str)], bi: &[(&str, &str)], names: &[&str]) -> Admg {
        let mut b = Admg::builder().binary(names);
        for (x, y) in edges {
            b = b.edge(x, y);
        }
        for (x, y) in bi {
            b = b.bi(x, y);
        }
        b.build().unwrap()
    }

    #[test]
    fn chain_split_relabels() {
        let g = g(&[("A", "M"), ("M", "Y")], &[], &["A", "M", "Y"]);
        let s = construct_swig_named(&g, &[("A", "a")]).unwrap();
        assert_eq!(s.directed_edges()[0], (Node::Fixed(0), Node::Random(1)));
        assert_eq!(s.node_name(Node::Random(2)), "Y(a)");
        assert_eq!(s.node_name(Node::Random(0)), "A");
    }

    #[test]
    fn empty_intervention_is_identity() {
        let g = g(&[("A", "M")], &[], &["A", "M"]);
        let s = construct_swig(&g, &BTreeMap::new()).unwrap();
        assert_eq!(s.directed_edges(), vec![(Node::Random(0), Node::Random(1))]);
    }

    #[test]
    fn fixed_node_blocks() {
        // A -> M -> Y with M split: Y(m) is separated from A.
        let g = g(&[("A", "M"), ("M", "Y")], &[], &["A", "M", "Y"]);
        let s = construct_swig_named(&g, &[("M", "m")]).unwrap();
        assert!(s.d_separated(&[Node::Random(0)], &[Node::Random(2)], &[]).unwrap());
        assert!(!s.d_separated(&[Node::Fixed(1)], &[Node::Random(2)], &[]).unwrap());
    }

    #[test]
    fn collider_opens_on_descendant() {
        let g = g(&[("A", "C"), ("B", "C"), ("C", "D")], &[], &["A", "B", "C", "D"]);
        let s = construct_swig(&g, &BTreeMap::new()).unwrap();
        let (a, b, d) = (Node::Random(0), Node::Random(1), Node::Random(3));
        assert!(s.d_separated(&[a], &[b], &[]).unwrap());
        assert!(!s.d_separated(&[a], &[b], &[d]).unwrap());
    }

    #[test]
    fn bidirected_arrowheads() {
        let g = g(&[], &[("A", "B"), ("B", "C")], &["A", "B", "C"]);
        let s = construct_swig(&g, &BTreeMap::new()).unwrap();
        let (a, b, c) = (Node::Random(0), Node::Random(1), Node::Random(2));
        assert!(s.d_separated(&[a], &[c], &[]).unwrap());
        assert!(!s.d_separated(&[a], &[c], &[b]).unwrap());
    }

    #[test]
    fn overlap_is_an_error() {
        let g = g(&[], &[], &["A", "B"]);
        let s = construct_swig(&g, &BTreeMap::new()).unwrap();
        assert!(matches!(
            s.d_separated(&[Node::Random(0)], &[Node::Random(0)], &[]),
            Err(Error::OverlappingSets(_))
        ));
    }
}
