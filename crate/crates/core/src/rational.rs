//! Exact rational scalars.
//!
//! [`Rational`] wraps an arbitrary-precision fraction kept in lowest terms with
//! a positive denominator. It serializes as the string `"p/q"`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_big(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }

    /// `p/q`; panics if `q == 0`.
    pub fn new(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn from_bigs(p: BigInt, q: BigInt) -> Self {
        assert!(!q.is_zero(), "zero denominator");
        Rational(BigRational::new(p, q))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    /// -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        if self.0.is_zero() {
            0
        } else if self.0.is_positive() {
            1
        } else {
            -1
        }
    }

    /// Multiplicative inverse; panics on zero.
    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rational(self.0.recip())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Rational::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Largest integer `k` with `k*k <= self` for nonnegative `self`.
    pub fn isqrt_floor(&self) -> BigInt {
        assert!(!self.is_negative(), "square root of a negative rational");
        let fl = self.floor();
        let mut r = fl.sqrt();
        while Rational::from_big(&r * &r) > *self {
            r -= 1;
        }
        r
    }

    /// Canonical string form `p/q` (denominator always written).
    pub fn to_canonical(&self) -> String {
        format!("{}/{}", self.0.numer(), self.0.denom())
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn into_big(self) -> BigRational {
        self.0
    }

    pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
        values
            .into_iter()
            .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
    }
}

impl From<BigRational> for Rational {
    fn from(v: BigRational) -> Self {
        Rational(v)
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::from_int(v)
    }
}

impl From<i32> for Rational {
    fn from(v: i32) -> Self {
        Rational::from_int(v as i64)
    }
}

impl From<u64> for Rational {
    fn from(v: u64) -> Self {
        Rational::from_big(BigInt::from(v))
    }
}

impl From<usize> for Rational {
    fn from(v: usize) -> Self {
        Rational::from_big(BigInt::from(v))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRationalError(s.to_string());
        let t = s.trim();
        match t.split_once('/') {
            Some((p, q)) => {
                let p: BigInt = p.trim().parse().map_err(|_| err())?;
                let q: BigInt = q.trim().parse().map_err(|_| err())?;
                if q.is_zero() {
                    return Err(err());
                }
                Ok(Rational(BigRational::new(p, q)))
            }
            None => {
                let p: BigInt = t.parse().map_err(|_| err())?;
                Ok(Rational::from_big(p))
            }
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_canonical())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> de::Visitor<'de> for V {
            type Value = Rational;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational as \"p/q\" or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
                Ok(Rational::from_int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
                Ok(Rational::from(v))
            }
        }
        d.deserialize_any(V)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl<'a> $tr<&'a Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &'a Rational) -> Rational {
                Rational(self.0 $op &rhs.0)
            }
        }
        impl<'a> $tr<Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(&self.0 $op rhs.0)
            }
        }
        impl<'a, 'b> $tr<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, rhs: &'b Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Rational> for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

impl Product for Rational {
    fn product<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::one(), |a, b| a * b)
    }
}

/// Compare `|a|` with `|b|`.
pub fn cmp_abs(a: &Rational, b: &Rational) -> Ordering {
    a.abs().cmp(&b.abs())
}

/// Shorthand for `Rational::new`.
pub fn q(p: i64, d: i64) -> Rational {
    Rational::new(p, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_terms_and_sign() {
        let r = Rational::new(6, -4);
        assert_eq!(r.to_canonical(), "-3/2");
        assert_eq!(r.denom(), &BigInt::from(2));
    }

    #[test]
    fn parse_and_print() {
        let r: Rational = " 10/4 ".parse().unwrap();
        assert_eq!(r, q(5, 2));
        assert_eq!("7".parse::<Rational>().unwrap(), Rational::from_int(7));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
        assert_eq!(Rational::from_int(3).to_canonical(), "3/1");
    }

    #[test]
    fn serde_string_form() {
        let v = vec![q(1, 3), q(-2, 1)];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["1/3","-2/1"]"#);
        let back: Vec<Rational> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        let int: Rational = serde_json::from_str("5").unwrap();
        assert_eq!(int, Rational::from_int(5));
    }

    #[test]
    fn isqrt() {
        assert_eq!(q(17, 1).isqrt_floor(), BigInt::from(4));
        assert_eq!(q(1, 4).isqrt_floor(), BigInt::from(0));
        assert_eq!(q(16, 1).isqrt_floor(), BigInt::from(4));
    }
}
