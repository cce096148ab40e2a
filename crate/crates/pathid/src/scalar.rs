//! Numeric abstraction shared by tables, models and the evaluator.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Probability arithmetic. Rationals are exact; floats are the fallback.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    /// True when arithmetic is exact.
    const EXACT: bool;

    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn from_rational(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    /// Equality up to `tol` (relative for large magnitudes). Exact types ignore `tol`.
    fn close_to(&self, other: &Self, tol: f64) -> bool {
        if Self::EXACT {
            return self == other;
        }
        let (a, b) = (self.to_f64(), other.to_f64());
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    /// Rational rendering when exact, decimal otherwise.
    fn pretty(&self) -> String {
        format!("{self}")
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        (numer as f64 / denom as f64) as f32
    }

    fn from_rational(r: &BigRational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn close_to(&self, other: &Self, tol: f64) -> bool {
        let tol = tol.max(f32::EPSILON as f64 * 16.0);
        let (a, b) = (*self as f64, *other as f64);
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Parse `p`, `p/q` or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches('-'), frac);
        let n: BigInt = digits.parse().ok()?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = BigRational::new(n, d);
        return Some(if neg { -r } else { r });
    }
    let n: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(n))
}

/// Canonical text for an exact rational (`p/q`, or `p` when integral).
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        let r = parse_rational("3/12").unwrap();
        assert_eq!(format_rational(&r), "1/4");
        assert_eq!(parse_rational("0.125").unwrap(), BigRational::from_ratio(1, 8));
        assert_eq!(parse_rational("-0.5").unwrap(), BigRational::from_ratio(-1, 2));
        assert_eq!(format_rational(&parse_rational("7").unwrap()), "7");
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn float_tolerance() {
        assert!(0.1f64.close_to(&(0.1 + 1e-12), 1e-9));
        assert!(!0.1f64.close_to(&0.2, 1e-9));
        let a = BigRational::from_ratio(1, 3);
        assert!(!a.close_to(&BigRational::from_ratio(1, 3 + 1), 1.0));
    }
}
