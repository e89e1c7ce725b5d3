//! Exact rational probabilities.

use alloc::string::String;
use core::fmt;
use core::ops::Deref;
use core::str::FromStr;

use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;

use crate::error::{Error, Result};

/// Exact rational number. Semimeasure values and weights are always of this type.
pub type Rational = RBig;

pub fn ratio(num: i64, den: u64) -> Rational {
    assert!(den != 0, "zero denominator");
    RBig::from_parts(IBig::from(num), UBig::from(den))
}

pub fn int(n: i64) -> Rational {
    RBig::from(IBig::from(n))
}

pub fn sum<I: IntoIterator<Item = Rational>>(items: I) -> Rational {
    items.into_iter().fold(RBig::ZERO, |acc, v| acc + v)
}

/// `2^-k`.
pub fn pow2_neg(k: usize) -> Rational {
    RBig::from_parts(IBig::ONE, UBig::ONE << k)
}

/// `2^k`.
pub fn pow2(k: usize) -> Rational {
    RBig::from(IBig::ONE << k)
}

/// `base^k` for a non-negative exponent.
pub fn powi(base: &Rational, k: usize) -> Rational {
    base.pow(isize::try_from(k).expect("exponent fits in isize"))
}

/// Parses `"p/q"` or an integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    RBig::from_str(s.trim()).map_err(|_| Error::InvalidParameter(alloc::format!("not a rational: \"{s}\"")))
}

/// Canonical `"p/q"` form, or `"p"` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.denominator().is_one() {
        alloc::format!("{}", r.numerator())
    } else {
        alloc::format!("{}/{}", r.numerator(), r.denominator())
    }
}

/// `floor(r 2^bits) / 2^bits`.
pub fn dyadic_floor(r: &Rational, bits: usize) -> Rational {
    let scaled = r * &pow2(bits);
    RBig::from_parts(scaled.floor(), UBig::ONE << bits)
}

/// `ceil(r 2^bits) / 2^bits`.
pub fn dyadic_ceil(r: &Rational, bits: usize) -> Rational {
    let scaled = r * &pow2(bits);
    RBig::from_parts(scaled.ceil(), UBig::ONE << bits)
}

pub fn min<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if b < a {
        b
    } else {
        a
    }
}

pub fn max<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if b > a {
        b
    } else {
        a
    }
}

/// A rational known to lie in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactProb(Rational);

impl ExactProb {
    pub fn new(r: Rational) -> Result<Self> {
        if r >= RBig::ZERO && r <= RBig::ONE {
            Ok(ExactProb(r))
        } else {
            Err(Error::ProbabilityOutOfRange(r))
        }
    }

    pub fn ratio(num: u64, den: u64) -> Result<Self> {
        Self::new(ratio(num as i64, den))
    }

    pub fn zero() -> Self {
        ExactProb(RBig::ZERO)
    }

    pub fn one() -> Self {
        ExactProb(RBig::ONE)
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }

    pub fn complement(&self) -> Self {
        ExactProb(RBig::ONE - &self.0)
    }

    pub fn mul(&self, other: &ExactProb) -> ExactProb {
        ExactProb(&self.0 * &other.0)
    }
}

impl Deref for ExactProb {
    type Target = Rational;
    fn deref(&self) -> &Rational {
        &self.0
    }
}

impl TryFrom<Rational> for ExactProb {
    type Error = Error;
    fn try_from(r: Rational) -> Result<Self> {
        ExactProb::new(r)
    }
}

impl FromStr for ExactProb {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExactProb::new(parse_rational(s)?)
    }
}

impl fmt::Display for ExactProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("2/6").unwrap(), ratio(1, 3));
        assert_eq!(format_rational(&ratio(4, 6)), "2/3");
        assert_eq!(format_rational(&int(3)), "3");
        assert!(parse_rational("x/2").is_err());
    }

    #[test]
    fn prob_range_is_enforced() {
        assert!(ExactProb::new(ratio(3, 2)).is_err());
        assert!(ExactProb::new(ratio(-1, 2)).is_err());
        assert_eq!(ExactProb::ratio(1, 3).unwrap().complement(), ExactProb::ratio(2, 3).unwrap());
        assert!("5/4".parse::<ExactProb>().is_err());
    }

    #[test]
    fn dyadic_rounding() {
        assert_eq!(dyadic_floor(&ratio(1, 3), 2), ratio(1, 4));
        assert_eq!(dyadic_ceil(&ratio(1, 3), 2), ratio(1, 2));
        assert_eq!(dyadic_floor(&ratio(1, 2), 1), ratio(1, 2));
        assert_eq!(powi(&ratio(1, 2), 10), pow2_neg(10));
        assert_eq!(pow2(3), int(8));
    }
}
