//! Mediation contrasts, the mediation formula and sharp bounds on the pure
//! direct effect for binary mediator and outcome.
//!
//! Conventions, with `a` active and `a′` baseline:
//! `ACE = E[Y(a)] - E[Y(a′)]`, `PDE = E[Y(a, M(a′))] - E[Y(a′)]`,
//! `TIE = E[Y(a)] - E[Y(a, M(a′))]`, `TDE = E[Y(a)] - E[Y(a′, M(a))]`,
//! `PIE = E[Y(a′, M(a))] - E[Y(a′)]`, `CDE(m) = E[Y(a, m)] - E[Y(a′, m)]`.
//! Outcomes are coded by state index.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Admg, HiddenDag};
use crate::oracle::{DiscreteNpsem, Noise};
use crate::scalar::Scalar;
use crate::table::JointTable;

pub use crate::identify::separable_query;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Computed from counterfactuals of a structural model.
    Oracle,
    /// Computed from the observed law through identifying functionals.
    Estimand,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MediationContrasts<S> {
    pub ace: S,
    pub pde: S,
    pub tde: S,
    pub tie: S,
    pub pie: S,
    /// `CDE(m)` for each mediator state.
    pub cde: Vec<S>,
    pub provenance: Provenance,
}

/// Names of the treatment, mediator and outcome variables.
#[derive(Clone, Copy, Debug)]
pub struct Triple<'a> {
    pub a: &'a str,
    pub m: &'a str,
    pub y: &'a str,
}

impl Default for Triple<'static> {
    fn default() -> Self {
        Triple { a: "A", m: "M", y: "Y" }
    }
}

fn cond_mean<S: Scalar>(t: &JointTable<S>, y: &str, given: &[(&str, usize)]) -> Result<S> {
    let mut acc = S::zero();
    for k in 1..t.card_of(y)? {
        acc = acc + t.conditional(&[(y, k)], given)? * S::from_ratio(k as i64, 1);
    }
    Ok(acc)
}

/// `Σ_m E[Y | m, a] p(m | a′)`; terms with `p(m | a′) = 0` are skipped.
pub fn mediated_mean<S: Scalar>(t: &JointTable<S>, v: Triple, a: usize, a_prime: usize) -> Result<S> {
    let mut acc = S::zero();
    for m in 0..t.card_of(v.m)? {
        let w = t.conditional(&[(v.m, m)], &[(v.a, a_prime)])?;
        if w.is_zero() {
            continue;
        }
        acc = acc + cond_mean(t, v.y, &[(v.m, m), (v.a, a)])? * w;
    }
    Ok(acc)
}

/// `Σ_m (E[Y | m, a] - E[Y | m, a′]) p(m | a′)`.
pub fn mediation_formula<S: Scalar>(t: &JointTable<S>, v: Triple, a: usize, a_prime: usize) -> Result<S> {
    Ok(mediated_mean(t, v, a, a_prime)? - mediated_mean(t, v, a_prime, a_prime)?)
}

/// All contrasts under a fully observed mediation triangle, from the
/// observed law alone.
pub fn contrasts_from_law<S: Scalar>(
    t: &JointTable<S>,
    v: Triple,
    a: usize,
    a_prime: usize,
) -> Result<MediationContrasts<S>> {
    let y_a = cond_mean(t, v.y, &[(v.a, a)])?;
    let y_b = cond_mean(t, v.y, &[(v.a, a_prime)])?;
    let cross = mediated_mean(t, v, a, a_prime)?;
    let rev = mediated_mean(t, v, a_prime, a)?;
    let cde = (0..t.card_of(v.m)?)
        .map(|m| Ok(cond_mean(t, v.y, &[(v.a, a), (v.m, m)])? - cond_mean(t, v.y, &[(v.a, a_prime), (v.m, m)])?))
        .collect::<Result<_>>()?;
    Ok(assemble(y_a, y_b, cross, rev, cde, Provenance::Estimand))
}

fn assemble<S: Scalar>(y_a: S, y_b: S, cross: S, rev: S, cde: Vec<S>, provenance: Provenance) -> MediationContrasts<S> {
    MediationContrasts {
        ace: y_a.clone() - y_b.clone(),
        pde: cross.clone() - y_b.clone(),
        tie: y_a.clone() - cross,
        tde: y_a - rev.clone(),
        pie: rev - y_b,
        cde,
        provenance,
    }
}

/// All contrasts from nested counterfactuals of an independent-noise model.
pub fn contrasts<S: Scalar>(model: &DiscreteNpsem<S>, v: Triple, a: usize, a_prime: usize) -> Result<MediationContrasts<S>> {
    if !model.is_independent() {
        return Err(Error::ModeMismatch("mediation contrasts need independent noise".into()));
    }
    let g = &model.graph().dag;
    let (av, mv, yv) = (g.id(v.a)?, g.id(v.m)?, g.id(v.y)?);
    let mean = |t: JointTable<S>| t.expectation(v.y);
    let total = |x: usize| model.intervene(&BTreeMap::from([(av, x)]), &[yv].into());
    let y_a = mean(total(a)?)?;
    let y_b = mean(total(a_prime)?)?;
    let cross = mean(model.nested(av, a, mv, a_prime, yv)?)?;
    let rev = mean(model.nested(av, a_prime, mv, a, yv)?)?;
    let mut cde = Vec::new();
    for m in 0..g.card(mv) {
        let hi = model.intervene(&BTreeMap::from([(av, a), (mv, m)]), &[yv].into())?;
        let lo = model.intervene(&BTreeMap::from([(av, a_prime), (mv, m)]), &[yv].into())?;
        cde.push(hi.expectation(v.y)? - lo.expectation(v.y)?);
    }
    Ok(assemble(y_a, y_b, cross, rev, cde, Provenance::Oracle))
}

/// Sharp bounds on the PDE. `l[m]` and `u[m]` bound
/// `p(Y(a, m) = 1 | M(a′) = m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeBounds<S> {
    pub lower: S,
    pub upper: S,
    pub l: [S; 2],
    pub u: [S; 2],
}

fn require_binary<S: Scalar>(t: &JointTable<S>, vars: &[&str]) -> Result<()> {
    for v in vars {
        if t.card_of(v)? != 2 {
            return Err(Error::NotBinary(v.to_string()));
        }
    }
    Ok(())
}

pub fn pde_bounds<S: Scalar>(t: &JointTable<S>, v: Triple, a: usize, a_prime: usize) -> Result<PdeBounds<S>> {
    require_binary(t, &[v.m, v.y])?;
    let base = t.conditional(&[(v.y, 1)], &[(v.a, a_prime)])?;
    let mut l: [S; 2] = [S::zero(), S::zero()];
    let mut u: [S; 2] = [S::zero(), S::zero()];
    let (mut lower, mut upper) = (-base.clone(), -base);
    for m in 0..2 {
        let pm = t.conditional(&[(v.m, m)], &[(v.a, a_prime)])?;
        if pm.is_zero() {
            // The stratum has no weight, so its response is unconstrained.
            l[m] = S::zero();
            u[m] = S::one();
            continue;
        }
        let r = t.conditional(&[(v.y, 1)], &[(v.a, a), (v.m, m)])?;
        let lo = S::one() + (r.clone() - S::one()) / pm.clone();
        l[m] = if lo > S::zero() { lo } else { S::zero() };
        let hi = r / pm.clone();
        u[m] = if hi < S::one() { hi } else { S::one() };
        lower = lower + l[m].clone() * pm.clone();
        upper = upper + u[m].clone() * pm;
    }
    Ok(PdeBounds { lower, upper, l, u })
}

/// A joint-noise model on `A -> M -> Y, A -> Y` (binary, `a = 1`,
/// `a′ = 0`) reproducing `t`, in which `(M(a′), Y(a, 0), Y(a, 1))` follows
/// `cells` (indexed `4 m + 2 y0 + y1`) and every other response is drawn
/// independently from its observed margin.
pub fn response_model<S: Scalar>(t: &JointTable<S>, v: Triple, cells: &[S; 8]) -> Result<DiscreteNpsem<S>> {
    require_binary(t, &[v.a, v.m, v.y])?;
    let g = Admg::builder().binary(&[v.a, v.m, v.y]).edge(v.a, v.m).edge(v.a, v.y).edge(v.m, v.y).build()?;
    let (a, ap) = (1usize, 0usize);
    let pa = [t.prob(&[(v.a, 0)])?, t.prob(&[(v.a, 1)])?];
    let pm_a = t.conditional(&[(v.m, 1)], &[(v.a, a)])?;
    let py_ap: Vec<S> =
        (0..2).map(|m| t.conditional(&[(v.y, 1)], &[(v.a, ap), (v.m, m)])).collect::<Result<_>>()?;
    let bern = |p: &S, x: usize| if x == 1 { p.clone() } else { S::one() - p.clone() };
    // M noise: bit `x` is M(x). Y noise: bit `2x + m` is Y(x, m).
    let bit = |k: usize, i: usize| (k >> i) & 1;
    let mut probs = Vec::with_capacity(2 * 4 * 16);
    for na in 0..2 {
        for nm in 0..4 {
            for ny in 0..16 {
                let q = cells[4 * bit(nm, ap) + 2 * bit(ny, 2 * a) + bit(ny, 2 * a + 1)].clone()
                    * bern(&pm_a, bit(nm, a))
                    * bern(&py_ap[0], bit(ny, 2 * ap))
                    * bern(&py_ap[1], bit(ny, 2 * ap + 1));
                probs.push(pa[na].clone() * q);
            }
        }
    }
    let mech = vec![
        vec![0, 1],
        (0..2).flat_map(|x| (0..4).map(move |k| bit(k, x))).collect(),
        (0..4).flat_map(|row| (0..16).map(move |k| bit(k, row))).collect(),
    ];
    DiscreteNpsem::new(HiddenDag::observed(g)?, Noise::Joint { cards: vec![2, 4, 16], probs }, mech)
}

/// `E[Y(1, M(0))] - E[Y(0)]` computed per noise configuration; valid in
/// either noise mode since every configuration fixes all responses.
pub fn response_pde<S: Scalar>(model: &DiscreteNpsem<S>, v: Triple) -> Result<S> {
    let g = &model.graph().dag;
    let (av, mv, yv) = (g.id(v.a)?, g.id(v.m)?, g.id(v.y)?);
    let n = g.len();
    let mut acc = S::zero();
    for (noise, w) in model.configs()?.iter() {
        let mut set = vec![None; n];
        set[av] = Some(0);
        let world0 = model.solve(noise, &set);
        set[av] = Some(1);
        set[mv] = Some(world0[mv]);
        let cross = model.solve(noise, &set)[yv];
        acc = acc + w.clone() * (S::from_ratio(cross as i64, 1) - S::from_ratio(world0[yv] as i64, 1));
    }
    Ok(acc)
}

/// Vertices of the polytope of laws of `(M(a′), Y(a, 0), Y(a, 1))` with
/// margins `p(M = 0 | a′) = p0`, `p(Y(a, m) = 1) = r[m]`.
pub fn response_vertices<S: Scalar>(p0: &S, r: &[S; 2]) -> Vec<[S; 8]> {
    // Constraint rows over cells 4m + 2y0 + y1: total, M = 0, Y(a,0) = 1, Y(a,1) = 1.
    let coef = |row: usize, c: usize| -> bool {
        let (m, y0, y1) = (c >> 2, (c >> 1) & 1, c & 1);
        match row {
            0 => true,
            1 => m == 0,
            2 => y0 == 1,
            _ => y1 == 1,
        }
    };
    let rhs = [S::one(), p0.clone(), r[0].clone(), r[1].clone()];
    let mut out: Vec<[S; 8]> = Vec::new();
    for mask in 0u32..256 {
        if mask.count_ones() != 4 {
            continue;
        }
        let cols: Vec<usize> = (0..8).filter(|&c| mask >> c & 1 == 1).collect();
        let mut m: Vec<Vec<S>> = (0..4)
            .map(|row| {
                let mut line: Vec<S> =
                    cols.iter().map(|&c| if coef(row, c) { S::one() } else { S::zero() }).collect();
                line.push(rhs[row].clone());
                line
            })
            .collect();
        let Some(x) = solve_square(&mut m) else { continue };
        if x.iter().any(|v| v.is_negative()) {
            continue;
        }
        let mut cells: [S; 8] = std::array::from_fn(|_| S::zero());
        for (k, &c) in cols.iter().enumerate() {
            cells[c] = x[k].clone();
        }
        if !out.contains(&cells) {
            out.push(cells);
        }
    }
    out
}

/// Gauss-Jordan on an augmented square system; `None` when singular.
fn solve_square<S: Scalar>(m: &mut [Vec<S>]) -> Option<Vec<S>> {
    let n = m.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for x in m[col].iter_mut() {
            *x = x.clone() / p.clone();
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..=n {
                    let d = m[col][c].clone() * f.clone();
                    m[r][c] = m[r][c].clone() - d;
                }
            }
        }
    }
    Some(m.iter().map(|row| row[n].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    fn q(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    fn amy(p: &[Exact]) -> JointTable<Exact> {
        JointTable::new(vec![("A".into(), 2), ("M".into(), 2), ("Y".into(), 2)], p.to_vec()).unwrap()
    }

    #[test]
    fn formula_vanishes_at_equal_levels() {
        let t = amy(&[q(1, 8), q(1, 16), q(3, 16), q(1, 8), q(1, 16), q(1, 8), q(1, 8), q(3, 16)]);
        assert_eq!(mediation_formula(&t, Triple::default(), 1, 1).unwrap(), q(0, 1));
    }

    #[test]
    fn bound_intermediates() {
        // p(A) uniform; p(M=0|A=0) = 1/2; p(Y=1|A=1,M=0) = 9/10.
        let t = amy(&[
            q(1, 8),
            q(1, 8),
            q(1, 8),
            q(1, 8),
            q(1, 40),
            q(9, 40),
            q(1, 8),
            q(1, 8),
        ]);
        let b = pde_bounds(&t, Triple::default(), 1, 0).unwrap();
        assert_eq!(b.l[0], q(4, 5));
        assert_eq!(b.u[0], q(1, 1));
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn deterministic_law_collapses_bounds() {
        // M = 1 always, Y = A.
        let mut p = vec![q(0, 1); 8];
        p[0b010] = q(1, 2);
        p[0b111] = q(1, 2);
        let b = pde_bounds(&amy(&p), Triple::default(), 1, 0).unwrap();
        assert_eq!(b.lower, b.upper);
        assert_eq!(b.lower, q(1, 1));
    }

    #[test]
    fn vertices_satisfy_margins() {
        let vs = response_vertices(&q(3, 8), &[q(1, 2), q(7, 8)]);
        assert!(vs.len() >= 2);
        for c in &vs {
            let tot: Exact = c.iter().sum();
            assert_eq!(tot, q(1, 1));
            assert_eq!(c[0].clone() + c[1].clone() + c[2].clone() + c[3].clone(), q(3, 8));
        }
    }
}
