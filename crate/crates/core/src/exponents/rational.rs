use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{invalid, Result};

/// `n/d` as a big rational.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// A rational or `+∞`, totally ordered with `∞` above every finite value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtRat {
    Finite(BigRational),
    Infinity,
}

impl ExtRat {
    pub fn finite(n: i64, d: i64) -> Self {
        ExtRat::Finite(rat(n, d))
    }

    pub fn int(n: i64) -> Self {
        ExtRat::Finite(int(n))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtRat::Infinity)
    }

    pub fn as_finite(&self) -> Option<&BigRational> {
        match self {
            ExtRat::Finite(x) => Some(x),
            ExtRat::Infinity => None,
        }
    }

    /// `1/x`, with `1/∞ = 0`. `None` at zero.
    pub fn recip(&self) -> Option<BigRational> {
        match self {
            ExtRat::Infinity => Some(BigRational::zero()),
            ExtRat::Finite(x) if x.is_zero() => None,
            ExtRat::Finite(x) => Some(x.recip()),
        }
    }

    /// `num/den` where a non-positive denominator means the bound is absent.
    pub fn quotient_or_infinity(num: BigRational, den: BigRational) -> Self {
        if den.is_positive() {
            ExtRat::Finite(num / den)
        } else {
            ExtRat::Infinity
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtRat::Infinity => f64::INFINITY,
            ExtRat::Finite(x) => {
                let n: f64 = x.numer().to_string().parse().unwrap_or(f64::NAN);
                let d: f64 = x.denom().to_string().parse().unwrap_or(f64::NAN);
                n / d
            }
        }
    }
}

impl From<BigRational> for ExtRat {
    fn from(x: BigRational) -> Self {
        ExtRat::Finite(x)
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Infinity, ExtRat::Infinity) => Ordering::Equal,
            (ExtRat::Infinity, _) => Ordering::Greater,
            (_, ExtRat::Infinity) => Ordering::Less,
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialEq<BigRational> for ExtRat {
    fn eq(&self, other: &BigRational) -> bool {
        matches!(self, ExtRat::Finite(x) if x == other)
    }
}

impl PartialOrd<BigRational> for ExtRat {
    fn partial_cmp(&self, other: &BigRational) -> Option<Ordering> {
        Some(match self {
            ExtRat::Infinity => Ordering::Greater,
            ExtRat::Finite(x) => x.cmp(other),
        })
    }
}

pub fn fmt_rat(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Infinity => f.write_str("inf"),
            ExtRat::Finite(x) => f.write_str(&fmt_rat(x)),
        }
    }
}

impl Serialize for ExtRat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Parses `7`, `-3/4`, `2.25` (exact decimal) or a finite rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || invalid("rational", format!("cannot parse {t:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(invalid("rational", format!("zero denominator in {t:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.trim_start().starts_with('-');
        let w = if whole.is_empty() || whole == "-" || whole == "+" {
            BigInt::zero()
        } else {
            BigInt::from_str(whole).map_err(|_| bad())?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let f = BigInt::from_str(frac).map_err(|_| bad())?;
        let mag = w.abs() * &scale + f;
        let n = if negative { -mag } else { mag };
        return Ok(BigRational::new(n, scale));
    }
    Ok(BigRational::from_integer(BigInt::from_str(t).map_err(|_| bad())?))
}

impl FromStr for ExtRat {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "+inf" | "infinity" | "∞" => Ok(ExtRat::Infinity),
            other => parse_rational(other).map(ExtRat::Finite),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_infinity_last() {
        let mut v = vec![
            ExtRat::Infinity,
            ExtRat::finite(1, 3),
            ExtRat::int(-2),
            ExtRat::finite(1, 2),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                ExtRat::int(-2),
                ExtRat::finite(1, 3),
                ExtRat::finite(1, 2),
                ExtRat::Infinity
            ]
        );
        assert!(ExtRat::Infinity > rat(10_i64.pow(18), 1));
    }

    #[test]
    fn parsing() {
        assert_eq!("inf".parse::<ExtRat>().unwrap(), ExtRat::Infinity);
        assert_eq!("33/2".parse::<ExtRat>().unwrap(), ExtRat::finite(33, 2));
        assert_eq!("-2.25".parse::<ExtRat>().unwrap(), ExtRat::finite(-9, 4));
        assert_eq!("0.5".parse::<ExtRat>().unwrap(), ExtRat::finite(1, 2));
        assert_eq!("12".parse::<ExtRat>().unwrap(), ExtRat::int(12));
        assert!("1/0".parse::<ExtRat>().is_err());
        assert!("abc".parse::<ExtRat>().is_err());
        assert!("1.".parse::<ExtRat>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["inf", "7", "-3/4", "15/2"] {
            assert_eq!(s.parse::<ExtRat>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn reciprocal_of_infinity_is_zero() {
        assert_eq!(ExtRat::Infinity.recip(), Some(BigRational::zero()));
        assert_eq!(ExtRat::int(0).recip(), None);
        assert_eq!(ExtRat::finite(2, 3).recip(), Some(rat(3, 2)));
    }
}
