//! Scalar abstraction for money quantities.
//!
//! Everything that touches values, welfare or transfers is generic over
//! [`Scalar`]. The crate default is the exact [`Rational64`](num_rational::Rational64);
//! `BigRational` is available when magnitudes might overflow `i64`, and `f64`
//! works for quick exploration where exact inequalities do not matter.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_rational::{BigRational, Rational64};
use num_traits::{FromPrimitive, Num};

pub trait Scalar:
    Num + Neg<Output = Self> + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    fn from_i64(v: i64) -> Self;

    /// Parses an exact decimal-integer or `p/q` string such as `"-80"` or `"41/2"`.
    fn parse_exact(s: &str) -> Option<Self>;

    /// Renders the value in the same `p/q` form accepted by [`Scalar::parse_exact`].
    fn to_exact_string(&self) -> String {
        self.to_string()
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for Rational64 {
    fn from_i64(v: i64) -> Self {
        Rational64::from_integer(v)
    }

    fn parse_exact(s: &str) -> Option<Self> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().ok()?;
                let d: i64 = d.trim().parse().ok()?;
                if d == 0 {
                    return None;
                }
                Some(Rational64::new(n, d))
            }
            None => s.parse::<i64>().ok().map(Rational64::from_integer),
        }
    }
}

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        <BigRational as FromPrimitive>::from_i64(v).expect("every i64 is a rational")
    }

    fn parse_exact(s: &str) -> Option<Self> {
        let s = s.trim();
        let r: BigRational = s.parse().ok()?;
        Some(r)
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn parse_exact(s: &str) -> Option<Self> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: f64 = n.trim().parse().ok()?;
                let d: f64 = d.trim().parse().ok()?;
                (d != 0.0).then(|| n / d)
            }
            None => s.parse().ok(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_strings_round_trip() {
        for s in ["-80", "41/2", "0", "-7/3"] {
            let v = Rational64::parse_exact(s).unwrap();
            assert_eq!(v.to_exact_string(), s);
        }
        assert_eq!(
            Rational64::parse_exact("82/4").unwrap().to_exact_string(),
            "41/2"
        );
        assert!(Rational64::parse_exact("1/0").is_none());
        assert!(Rational64::parse_exact("1.5").is_none());
    }

    #[test]
    fn big_and_float_parse() {
        assert_eq!(
            BigRational::parse_exact("41/2").unwrap().to_exact_string(),
            "41/2"
        );
        assert_eq!(f64::parse_exact("41/2"), Some(20.5));
        assert_eq!(f64::parse_exact("-80"), Some(-80.0));
    }

    #[test]
    fn max_of_prefers_larger() {
        let a = Rational64::from_integer(3);
        let b = Rational64::new(7, 2);
        assert_eq!(a.max_of(b), b);
        assert_eq!(b.max_of(a), b);
    }
}
