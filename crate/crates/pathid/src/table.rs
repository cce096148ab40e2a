//! Dense probability tables over named finite variables.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A normalized table. Rows are in mixed-radix order with the first variable
/// most significant.
#[derive(Debug)]
pub struct JointTable<S> {
    vars: Vec<String>,
    cards: Vec<usize>,
    probs: Vec<S>,
    marginals: Mutex<HashMap<Vec<usize>, std::sync::Arc<Vec<S>>>>,
}

impl<S: Clone> Clone for JointTable<S> {
    fn clone(&self) -> Self {
        JointTable {
            vars: self.vars.clone(),
            cards: self.cards.clone(),
            probs: self.probs.clone(),
            marginals: Mutex::new(HashMap::new()),
        }
    }
}

impl<S: PartialEq> PartialEq for JointTable<S> {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.cards == other.cards && self.probs == other.probs
    }
}

/// Row index of `states` in a mixed-radix layout over `cards`.
pub(crate) fn mixed_index(cards: &[usize], states: &[usize]) -> usize {
    states.iter().zip(cards).fold(0, |acc, (&s, &c)| acc * c + s)
}

/// Inverse of [`mixed_index`].
pub(crate) fn mixed_states(cards: &[usize], mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for i in (0..cards.len()).rev() {
        out[i] = idx % cards[i];
        idx /= cards[i];
    }
    out
}

impl<S: Scalar> JointTable<S> {
    /// Validates shape, nonnegativity and normalization (exact for rationals,
    /// 1e-12 for floats).
    pub fn new(vars: Vec<(String, usize)>, probs: Vec<S>) -> Result<Self> {
        let t = Self::unchecked(vars, probs)?;
        if t.probs.iter().any(|p| p.is_negative()) {
            return Err(Error::OutOfRange("negative probability".into()));
        }
        let total = t.probs.iter().fold(S::zero(), |a, p| a + p.clone());
        if !total.close_to(&S::one(), 1e-12) {
            return Err(Error::OutOfRange(format!("table sums to {total}, not 1")));
        }
        Ok(t)
    }

    /// Shape checks only; used for intermediate accumulations.
    pub(crate) fn unchecked(vars: Vec<(String, usize)>, probs: Vec<S>) -> Result<Self> {
        let size: usize = vars.iter().map(|v| v.1).product();
        if size != probs.len() {
            return Err(Error::OutOfRange(format!("table has {} entries, expected {size}", probs.len())));
        }
        for (i, (n, c)) in vars.iter().enumerate() {
            if *c == 0 {
                return Err(Error::OutOfRange(format!("cardinality of `{n}` is 0")));
            }
            if vars[..i].iter().any(|(m, _)| m == n) {
                return Err(Error::DuplicateVertex(n.clone()));
            }
        }
        let (names, cards) = vars.into_iter().unzip();
        Ok(JointTable { vars: names, cards, probs, marginals: Mutex::new(HashMap::new()) })
    }

    pub fn zeros(vars: Vec<(String, usize)>) -> Self {
        let size = vars.iter().map(|v| v.1).product();
        Self::unchecked(vars, vec![S::zero(); size]).expect("valid shape")
    }

    /// Point mass at `states`.
    pub fn point_mass(vars: Vec<(String, usize)>, states: &[usize]) -> Self {
        let mut t = Self::zeros(vars);
        let i = mixed_index(&t.cards, states);
        t.probs[i] = S::one();
        t
    }

    /// A random strictly positive table with entries that are multiples of
    /// `1/denom` before normalization.
    pub fn random<R: Rng>(rng: &mut R, vars: Vec<(String, usize)>, denom: i64) -> Self {
        let size: usize = vars.iter().map(|v| v.1).product();
        let w: Vec<i64> = (0..size).map(|_| rng.gen_range(1..=denom)).collect();
        let total: i64 = w.iter().sum();
        let probs = w.iter().map(|&x| S::from_ratio(x, total)).collect();
        Self::unchecked(vars, probs).expect("valid shape")
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index_of(&self, var: &str) -> Result<usize> {
        self.vars.iter().position(|v| v == var).ok_or_else(|| Error::MissingVariable(var.to_string()))
    }

    pub fn card_of(&self, var: &str) -> Result<usize> {
        Ok(self.cards[self.index_of(var)?])
    }

    pub fn get(&self, states: &[usize]) -> &S {
        &self.probs[mixed_index(&self.cards, states)]
    }

    pub(crate) fn add_at(&mut self, states: &[usize], p: &S) {
        let i = mixed_index(&self.cards, states);
        self.probs[i] = self.probs[i].clone() + p.clone();
    }

    /// Iterate `(states, probability)` over all rows.
    pub fn rows(&self) -> impl Iterator<Item = (Vec<usize>, &S)> + '_ {
        self.probs.iter().enumerate().map(|(i, p)| (mixed_states(&self.cards, i), p))
    }

    /// Marginal over variable positions `idx` (sorted ascending), cached.
    fn marginal_idx(&self, idx: &[usize]) -> std::sync::Arc<Vec<S>> {
        if let Some(m) = self.marginals.lock().unwrap().get(idx) {
            return m.clone();
        }
        let cards: Vec<usize> = idx.iter().map(|&i| self.cards[i]).collect();
        let mut out = vec![S::zero(); cards.iter().product()];
        let mut sub = vec![0; idx.len()];
        for (row, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let st = mixed_states(&self.cards, row);
            for (k, &i) in idx.iter().enumerate() {
                sub[k] = st[i];
            }
            let j = mixed_index(&cards, &sub);
            out[j] = out[j].clone() + p.clone();
        }
        let out = std::sync::Arc::new(out);
        self.marginals.lock().unwrap().insert(idx.to_vec(), out.clone());
        out
    }

    /// Probability of the event `var = state` for every pair. Conflicting
    /// requirements on one variable give zero.
    pub fn event_prob(&self, event: &[(usize, usize)]) -> S {
        let mut ev: Vec<(usize, usize)> = event.to_vec();
        ev.sort_unstable();
        ev.dedup();
        if ev.windows(2).any(|w| w[0].0 == w[1].0) {
            return S::zero();
        }
        if ev.iter().any(|&(i, s)| s >= self.cards[i]) {
            return S::zero();
        }
        let idx: Vec<usize> = ev.iter().map(|e| e.0).collect();
        let states: Vec<usize> = ev.iter().map(|e| e.1).collect();
        let cards: Vec<usize> = idx.iter().map(|&i| self.cards[i]).collect();
        let m = self.marginal_idx(&idx);
        m[mixed_index(&cards, &states)].clone()
    }

    /// Probability of an event given by variable names.
    pub fn prob(&self, event: &[(&str, usize)]) -> Result<S> {
        let mut ev = Vec::with_capacity(event.len());
        for (v, s) in event {
            ev.push((self.index_of(v)?, *s));
        }
        Ok(self.event_prob(&ev))
    }

    /// Conditional probability `p(target | given)`.
    pub fn conditional(&self, target: &[(&str, usize)], given: &[(&str, usize)]) -> Result<S> {
        let den = self.prob(given)?;
        if den.is_zero() {
            return Err(Error::ZeroConditioning(
                given.iter().map(|(v, s)| format!("{v}={s}")).collect::<Vec<_>>().join(","),
            ));
        }
        let all: Vec<(&str, usize)> = target.iter().chain(given).copied().collect();
        Ok(self.prob(&all)? / den)
    }

    /// Marginal table over `vars`, in the order given.
    pub fn marginal(&self, vars: &[&str]) -> Result<JointTable<S>> {
        let idx: Vec<usize> = vars.iter().map(|v| self.index_of(v)).collect::<Result<_>>()?;
        let cards: Vec<usize> = idx.iter().map(|&i| self.cards[i]).collect();
        let mut out = JointTable::zeros(vars.iter().map(|v| v.to_string()).zip(cards.iter().copied()).collect());
        for (st, p) in self.rows() {
            let sub: Vec<usize> = idx.iter().map(|&i| st[i]).collect();
            out.add_at(&sub, p);
        }
        Ok(out)
    }

    /// Expectation of a variable coded by its state index.
    pub fn expectation(&self, var: &str) -> Result<S> {
        let i = self.index_of(var)?;
        let mut acc = S::zero();
        for (st, p) in self.rows() {
            acc = acc + p.clone() * S::from_ratio(st[i] as i64, 1);
        }
        Ok(acc)
    }

    /// Convert the scalar type entrywise.
    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> JointTable<T> {
        JointTable {
            vars: self.vars.clone(),
            cards: self.cards.clone(),
            probs: self.probs.iter().map(f).collect(),
            marginals: Mutex::new(HashMap::new()),
        }
    }

    /// Entrywise comparison up to `tol`, with identical variable layout.
    pub fn close_to(&self, other: &JointTable<S>, tol: f64) -> bool {
        self.vars == other.vars
            && self.cards == other.cards
            && self.probs.iter().zip(&other.probs).all(|(a, b)| a.close_to(b, tol))
    }

    /// Same table with variables permuted into `order`.
    pub fn reorder(&self, order: &[&str]) -> Result<JointTable<S>> {
        if order.len() != self.vars.len() {
            return Err(Error::OutOfRange("reorder must name every variable".into()));
        }
        self.marginal(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    fn ab() -> JointTable<Q> {
        JointTable::new(
            vec![("A".into(), 2), ("B".into(), 2)],
            vec![q(1, 8), q(3, 8), q(2, 8), q(2, 8)],
        )
        .unwrap()
    }

    #[test]
    fn rejects_unnormalized() {
        let e = JointTable::<Q>::new(vec![("A".into(), 2)], vec![q(1, 2), q(1, 3)]);
        assert!(matches!(e, Err(Error::OutOfRange(_))));
    }

    #[test]
    fn conditional_is_ratio_of_marginals() {
        let t = ab();
        assert_eq!(t.prob(&[("A", 0)]).unwrap(), q(1, 2));
        assert_eq!(t.conditional(&[("B", 1)], &[("A", 0)]).unwrap(), q(3, 4));
        assert_eq!(t.prob(&[("A", 0), ("A", 1)]).unwrap(), q(0, 1));
    }

    #[test]
    fn marginal_and_reorder() {
        let t = ab();
        let m = t.marginal(&["B"]).unwrap();
        assert_eq!(m.probs(), &[q(3, 8), q(5, 8)]);
        let r = t.reorder(&["B", "A"]).unwrap();
        assert_eq!(r.get(&[1, 0]), &q(3, 8));
    }

    #[test]
    fn zero_conditioning() {
        let t = JointTable::<Q>::point_mass(vec![("A".into(), 2), ("Y".into(), 2)], &[1, 0]);
        assert!(matches!(t.conditional(&[("Y", 0)], &[("A", 0)]), Err(Error::ZeroConditioning(_))));
        assert_eq!(t.conditional(&[("Y", 0)], &[("A", 1)]).unwrap(), q(1, 1));
    }
}
