//! Working-precision reals for square roots, logarithms and exponentials.

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;

use crate::error::{Error, Result};
use crate::prob::Rational;

type F = FBig<HalfEven>;

/// Binary working precision. Inequality checks use a tolerance of `2^-(bits-20)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Precision {
    bits: usize,
}

impl Precision {
    pub const MIN_BITS: usize = 24;
    pub const DEFAULT: Precision = Precision { bits: 100 };

    pub fn new(bits: usize) -> Result<Self> {
        if bits < Self::MIN_BITS {
            Err(Error::PrecisionTooLow(bits))
        } else {
            Ok(Precision { bits })
        }
    }

    pub fn bits(self) -> usize {
        self.bits
    }

    pub fn tolerance(self) -> Real {
        Real(F::from_parts(IBig::ONE, -((self.bits - 20) as isize)))
    }

    pub fn tolerance_bits(self) -> usize {
        self.bits - 20
    }

    fn lift(self, v: F) -> F {
        v.with_precision(self.bits).value()
    }

    pub fn int(self, n: i64) -> Real {
        Real(self.lift(F::from(IBig::from(n))))
    }

    pub fn zero(self) -> Real {
        self.int(0)
    }

    pub fn one(self) -> Real {
        self.int(1)
    }

    pub fn rational(self, r: &Rational) -> Real {
        let n = self.lift(F::from(r.numerator().clone()));
        let d = self.lift(F::from(IBig::from(r.denominator().clone())));
        Real(n / d)
    }

    pub fn ln2(self) -> Real {
        self.int(2).ln()
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::DEFAULT
    }
}

#[derive(Clone, PartialEq, PartialOrd)]
pub struct Real(F);

impl Real {
    pub fn precision_bits(&self) -> usize {
        self.0.precision()
    }

    pub fn is_zero(&self) -> bool {
        self.0 == F::ZERO
    }

    pub fn is_negative(&self) -> bool {
        self.0 < F::ZERO
    }

    /// Square root; negative inputs are treated as zero.
    pub fn sqrt(&self) -> Real {
        if self.0 <= F::ZERO {
            Real(self.0.clone() * F::ZERO)
        } else {
            Real(self.0.sqrt())
        }
    }

    /// Natural logarithm of a positive value.
    pub fn ln(&self) -> Real {
        assert!(self.0 > F::ZERO, "logarithm of a non-positive value");
        Real(self.0.ln())
    }

    pub fn log2(&self) -> Real {
        let two = Real(F::from(IBig::from(2)).with_precision(self.0.precision()).value());
        Real(self.ln().0 / two.ln().0)
    }

    pub fn exp(&self) -> Real {
        Real(self.0.exp())
    }

    /// `self^e` for `self >= 0`; `0^e = 0` for `e > 0`.
    pub fn powf(&self, e: &Real) -> Real {
        if self.0 <= F::ZERO {
            return Real(self.0.clone() * F::ZERO);
        }
        Real(self.0.powf(&e.0))
    }

    pub fn square(&self) -> Real {
        Real(&self.0 * &self.0)
    }

    pub fn abs(&self) -> Real {
        if self.0 < F::ZERO {
            Real(-self.0.clone())
        } else {
            self.clone()
        }
    }

    pub fn max(self, other: Real) -> Real {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Real) -> Real {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `floor(self 2^bits) / 2^bits` as an exact rational.
    pub fn dyadic_floor(&self, bits: usize) -> Rational {
        let scaled = &self.0 * F::from_parts(IBig::ONE, bits as isize);
        let n: IBig = scaled.floor().to_int().value();
        Rational::from_parts(n, dashu_int::UBig::ONE << bits)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    /// `self <= other + tol`.
    pub fn le_tol(&self, other: &Real, tol: &Real) -> bool {
        self.0 <= &other.0 + &tol.0
    }

    pub fn cmp_total(&self, other: &Real) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f64(), f)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr<Real> for Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                Real(self.0.$m(rhs.0))
            }
        }
        impl<'a> $tr<&'a Real> for Real {
            type Output = Real;
            fn $m(self, rhs: &'a Real) -> Real {
                Real(self.0.$m(&rhs.0))
            }
        }
        impl<'a> $tr<&'a Real> for &'a Real {
            type Output = Real;
            fn $m(self, rhs: &'a Real) -> Real {
                Real((&self.0).$m(&rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0)
    }
}

impl core::iter::Sum for Real {
    fn sum<I: Iterator<Item = Real>>(iter: I) -> Real {
        let mut it = iter;
        match it.next() {
            None => Real(F::ZERO),
            Some(first) => it.fold(first, |a, b| a + b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::ratio;

    #[test]
    fn rational_conversion_and_sqrt() {
        let p = Precision::DEFAULT;
        let two_thirds = p.rational(&ratio(2, 3));
        assert!((two_thirds.to_f64() - 2.0 / 3.0).abs() < 1e-15);
        let s = p.int(2).sqrt();
        let err = (s.square() - p.int(2)).abs();
        assert!(err < p.tolerance());
        assert!(p.zero().sqrt().is_zero());
    }

    #[test]
    fn transcendental_functions() {
        let p = Precision::DEFAULT;
        assert!((p.ln2().to_f64() - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((p.one().exp().to_f64() - core::f64::consts::E).abs() < 1e-15);
        assert!((p.int(8).log2().to_f64() - 3.0).abs() < 1e-15);
        let q = p.rational(&ratio(1, 4)).powf(&p.rational(&ratio(1, 2)));
        assert!((q.to_f64() - 0.5).abs() < 1e-15);
        assert!(p.zero().powf(&p.int(2)).is_zero());
    }

    #[test]
    fn dyadic_floor_of_real() {
        let p = Precision::DEFAULT;
        assert_eq!(p.rational(&ratio(1, 3)).dyadic_floor(3), ratio(1, 8) * ratio(2, 1));
        assert_eq!(p.int(1).dyadic_floor(5), ratio(1, 1));
    }

    #[test]
    fn tolerance_matches_precision() {
        let p = Precision::new(100).unwrap();
        assert_eq!(p.tolerance(), Real(F::from_parts(IBig::ONE, -80)));
        assert!(Precision::new(10).is_err());
    }
}
