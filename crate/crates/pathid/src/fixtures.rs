//! Worked examples: the named graph registry and the ten-parameter River
//! Blindness model.
//!
//! The River Blindness model lives on U, A, S, M, Y with U hidden and
//! S = A. Its restrictions are encoded as mechanism rows that ignore U:
//! Y ignores U unless m = s = 1, and M ignores U when a = 1. The restriction
//! that Y ignores U at (m, s) = (0, 1) is an extra assumption made only to
//! cut the parameter count; it is kept.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Admg, HiddenDag};
use crate::oracle::DiscreteNpsem;
use crate::scalar::Scalar;

/// Parameters of the River Blindness model, all probabilities of state 1.
#[derive(Clone, Debug, PartialEq)]
pub struct RiverBlindnessParams<S> {
    pub theta_u: S,
    pub theta_a: S,
    /// `p(M(a0, u0) = 1)`.
    pub theta_m_a0_u0: S,
    /// `p(M(a0, u1) = 1)`.
    pub theta_m_a0_u1: S,
    /// `p(M(a1) = 1)`.
    pub theta_m_a1: S,
    /// `p(Y(m1, s1, u0) = 1)`.
    pub theta_y_m1s1_u0: S,
    /// `p(Y(m1, s1, u1) = 1)`.
    pub theta_y_m1s1_u1: S,
    /// `p(Y(m0, s0) = 1)`.
    pub theta_y_m0s0: S,
    /// `p(Y(m0, s1) = 1)`.
    pub theta_y_m0s1: S,
    /// `p(Y(m1, s0) = 1)`.
    pub theta_y_m1s0: S,
}

impl<S: Scalar> Default for RiverBlindnessParams<S> {
    /// A generic point: ten distinct multiples of 1/16.
    fn default() -> Self {
        let k = |n| S::from_ratio(n, 16);
        RiverBlindnessParams {
            theta_u: k(5),
            theta_a: k(7),
            theta_m_a0_u0: k(3),
            theta_m_a0_u1: k(11),
            theta_m_a1: k(9),
            theta_y_m1s1_u0: k(13),
            theta_y_m1s1_u1: k(4),
            theta_y_m0s0: k(2),
            theta_y_m0s1: k(10),
            theta_y_m1s0: k(6),
        }
    }
}

impl<S: Scalar> RiverBlindnessParams<S> {
    pub fn values(&self) -> [&S; 10] {
        [
            &self.theta_u,
            &self.theta_a,
            &self.theta_m_a0_u0,
            &self.theta_m_a0_u1,
            &self.theta_m_a1,
            &self.theta_y_m1s1_u0,
            &self.theta_y_m1s1_u1,
            &self.theta_y_m0s0,
            &self.theta_y_m0s1,
            &self.theta_y_m1s0,
        ]
    }

    fn check(&self) -> Result<()> {
        for (i, v) in self.values().into_iter().enumerate() {
            if !(v > &S::zero() && v < &S::one()) {
                return Err(Error::OutOfRange(format!("parameter {i} is {v}, outside (0, 1)")));
            }
        }
        Ok(())
    }

    /// Change in `E[Y(a1, M(a0))]` produced by [`perturb`] with this `eps`.
    pub fn pde_shift(&self, eps: &S) -> S {
        eps.clone() * (self.theta_y_m1s1_u0.clone() - self.theta_y_m1s1_u1.clone())
    }
}

/// Moves mass of `M(a0, u)` between the two values of U so that
/// `p(M = 1 | A = 0)` is unchanged.
pub fn perturb<S: Scalar>(p: &RiverBlindnessParams<S>, eps: &S) -> Result<RiverBlindnessParams<S>> {
    let mut q = p.clone();
    q.theta_m_a0_u0 = p.theta_m_a0_u0.clone() + eps.clone() / (S::one() - p.theta_u.clone());
    q.theta_m_a0_u1 = p.theta_m_a0_u1.clone() - eps.clone() / p.theta_u.clone();
    for v in [&q.theta_m_a0_u0, &q.theta_m_a0_u1] {
        if !(v > &S::zero() && v < &S::one()) {
            return Err(Error::EpsilonTooLarge(format!("ε = {eps} pushes a mediator parameter to {v}")));
        }
    }
    Ok(q)
}

/// The River Blindness DAG: U, A, S, M, Y with U hidden.
pub fn river_blindness_graph() -> HiddenDag {
    let g = Admg::builder()
        .binary(&["U", "A", "S", "M", "Y"])
        .edge("A", "S")
        .edge("A", "M")
        .edge("U", "M")
        .edge("S", "Y")
        .edge("M", "Y")
        .edge("U", "Y")
        .build()
        .expect("static graph");
    HiddenDag::with_hidden(g, &["U"]).expect("static graph")
}

/// The NPSEM-IE with the given parameters.
pub fn river_blindness<S: Scalar>(p: &RiverBlindnessParams<S>) -> Result<DiscreteNpsem<S>> {
    p.check()?;
    let bern = |t: &S| vec![S::one() - t.clone(), t.clone()];
    let zero_one = |x: usize| if x == 0 { vec![S::one(), S::zero()] } else { vec![S::zero(), S::one()] };
    // Parent rows: M has (U, A); Y has (U, S, M), first parent most significant.
    let m = vec![
        bern(&p.theta_m_a0_u0),
        bern(&p.theta_m_a1),
        bern(&p.theta_m_a0_u1),
        bern(&p.theta_m_a1),
    ];
    let mut y = Vec::new();
    for u in 0..2 {
        for s in 0..2 {
            for mv in 0..2 {
                let t = match (mv, s) {
                    (0, 0) => &p.theta_y_m0s0,
                    (0, 1) => &p.theta_y_m0s1,
                    (1, 0) => &p.theta_y_m1s0,
                    _ if u == 0 => &p.theta_y_m1s1_u0,
                    _ => &p.theta_y_m1s1_u1,
                };
                y.push(bern(t));
            }
        }
    }
    let cpts = vec![vec![bern(&p.theta_u)], vec![bern(&p.theta_a)], vec![zero_one(0), zero_one(1)], m, y];
    DiscreteNpsem::from_cpts(river_blindness_graph(), &cpts)
}

/// Named graphs from the worked examples.
pub fn paper_graphs() -> BTreeMap<&'static str, HiddenDag> {
    let mut out = BTreeMap::new();
    let obs = |g: Admg| HiddenDag::observed(g).expect("static graph");
    let hid = |g: Admg, h: &[&str]| HiddenDag::with_hidden(g, h).expect("static graph");
    let b = |names: &[&str]| Admg::builder().binary(names);

    out.insert("amyno_a", obs(b(&["A", "M", "Y"]).edge("A", "M").edge("M", "Y").edge("A", "Y").build().unwrap()));
    let amno = || b(&["A", "N", "O", "M", "Y"]).copy_edge("A", "N").copy_edge("A", "O");
    out.insert(
        "amyno_b",
        obs(amno().edge("N", "M").edge("O", "Y").edge("M", "Y").edge("N", "Y").edge("O", "M").build().unwrap()),
    );
    out.insert("amyno_c", obs(amno().edge("N", "M").edge("O", "Y").edge("M", "Y").build().unwrap()));
    out.insert(
        "amyno_d",
        obs(b(&["A", "N", "M", "Y"]).copy_edge("A", "N").edge("N", "M").edge("A", "Y").edge("M", "Y").build().unwrap()),
    );
    out.insert(
        "amyno_e",
        obs(b(&["A", "O", "M", "Y"]).copy_edge("A", "O").edge("A", "M").edge("O", "Y").edge("M", "Y").build().unwrap()),
    );
    out.insert(
        "amyl_a",
        obs(b(&["A", "L", "M", "Y"])
            .edge("A", "L")
            .edge("A", "M")
            .edge("A", "Y")
            .edge("L", "M")
            .edge("L", "Y")
            .edge("M", "Y")
            .build()
            .unwrap()),
    );
    out.insert(
        "amyl_b",
        hid(
            b(&["A", "H", "M", "Y"])
                .edge("A", "M")
                .edge("A", "Y")
                .edge("M", "Y")
                .edge("H", "M")
                .edge("H", "Y")
                .build()
                .unwrap(),
            &["H"],
        ),
    );
    let nol = || {
        b(&["A", "N", "O", "L", "M", "Y"])
            .copy_edge("A", "N")
            .copy_edge("A", "O")
            .edge("N", "M")
            .edge("O", "Y")
            .edge("M", "Y")
            .edge("L", "M")
            .edge("L", "Y")
    };
    out.insert("anomlpath_a", obs(nol().edge("N", "L").build().unwrap()));
    out.insert("anomlpath_b", obs(nol().edge("O", "L").build().unwrap()));
    out.insert("anomlpath_c", obs(nol().edge("N", "L").edge("O", "L").build().unwrap()));
    out.insert(
        "edge_expanded",
        obs(b(&["A", "A_L", "A_M", "A_Y", "L", "M", "Y"])
            .copy_edge("A", "A_L")
            .copy_edge("A", "A_M")
            .copy_edge("A", "A_Y")
            .edge("A_L", "L")
            .edge("A_M", "M")
            .edge("A_Y", "Y")
            .edge("L", "M")
            .edge("L", "Y")
            .edge("M", "Y")
            .build()
            .unwrap()),
    );
    let cam = || b(&["H1", "H2", "C", "A", "M", "Y"]).edge("C", "A").edge("A", "M").edge("M", "Y").edge("A", "Y");
    out.insert(
        "ex_po_calc_a",
        hid(
            cam().edge("H1", "C").edge("H1", "M").edge("H2", "C").edge("H2", "Y").build().unwrap(),
            &["H1", "H2"],
        ),
    );
    out.insert(
        "ex_po_calc_b",
        hid(cam().edge("C", "M").edge("H2", "C").edge("H2", "Y").build().unwrap(), &["H1", "H2"]),
    );
    out.insert(
        "torpedo",
        hid(
            b(&["U", "A", "S", "M", "R", "Y"])
                .edge("A", "S")
                .edge("A", "M")
                .edge("S", "R")
                .edge("M", "R")
                .edge("M", "Y")
                .edge("R", "Y")
                .edge("U", "R")
                .edge("U", "M")
                .build()
                .unwrap(),
            &["U", "S", "R"],
        ),
    );
    out
}

/// Fully observed registry entries used for randomized oracle checks.
pub const OBSERVED_DAGS: [&str; 9] = [
    "amyno_a",
    "amyno_b",
    "amyno_c",
    "amyno_d",
    "amyno_e",
    "amyl_a",
    "anomlpath_a",
    "anomlpath_b",
    "anomlpath_c",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    fn q(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    #[test]
    fn observed_conditionals_match_closed_form() {
        let p = RiverBlindnessParams::<Exact>::default();
        let law = river_blindness(&p).unwrap().observed_law().unwrap();
        assert_eq!(law.conditional(&[("M", 1)], &[("A", 1)]).unwrap(), p.theta_m_a1);
        let mixed = p.theta_y_m1s1_u0.clone() * (q(1, 1) - p.theta_u.clone())
            + p.theta_y_m1s1_u1.clone() * p.theta_u.clone();
        assert_eq!(law.conditional(&[("Y", 1)], &[("A", 1), ("M", 1)]).unwrap(), mixed);
        assert_eq!(law.conditional(&[("Y", 1)], &[("A", 0), ("M", 1)]).unwrap(), p.theta_y_m1s0);
        assert_eq!(law.conditional(&[("Y", 1)], &[("A", 0), ("M", 0)]).unwrap(), p.theta_y_m0s0);
    }

    #[test]
    fn perturbation_bounds() {
        let p = RiverBlindnessParams::<Exact>::default();
        assert_eq!(perturb(&p, &q(0, 1)).unwrap(), p);
        assert!(matches!(perturb(&p, &q(1, 2)), Err(Error::EpsilonTooLarge(_))));
    }

    #[test]
    fn registry_shapes() {
        let g = paper_graphs();
        assert_eq!(g.len(), 14);
        let a = g["ex_po_calc_a"].project();
        let (c, m, y) = (a.id("C").unwrap(), a.id("M").unwrap(), a.id("Y").unwrap());
        assert!(a.has_bi(c, m) && a.has_bi(c, y));
        let t = g["torpedo"].project();
        let (m, y) = (t.id("M").unwrap(), t.id("Y").unwrap());
        assert!(t.has_bi(m, y) && t.has_edge(t.id("A").unwrap(), y));
        let l = g["anomlpath_c"].dag.id("L").unwrap();
        assert_eq!(g["anomlpath_c"].dag.names(&g["anomlpath_c"].dag.parents(l).iter().copied().collect()), ["N", "O"]);
    }
}
