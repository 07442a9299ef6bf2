//! Probability scalars.
//!
//! Every table in the crate is generic over [`Scalar`] so that identity checks can run
//! twice: once in `f64` and once in exact big-rational arithmetic. Configuration files
//! store probabilities as [`Rational`] (small `i64` fractions) which convert losslessly
//! into both.

use std::fmt;
use std::hash::Hash;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

/// Quantization step used when a float has to act as a hash key.
const KEY_SCALE: f64 = 1e12;

pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    type Key: Clone + Eq + Hash + Send + Sync + fmt::Debug;

    fn from_rational(r: Rational) -> Self;
    fn from_usize(n: usize) -> Self;
    /// Nearest representable value; exact for `BigRational` (the binary fraction itself).
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Hashable identity of the value; floats are quantized at 1e-12.
    fn key(&self) -> Self::Key;
    const EXACT: bool;
}

impl Scalar for f64 {
    type Key = i64;

    fn from_rational(r: Rational) -> Self {
        r.to_f64()
    }
    fn from_usize(n: usize) -> Self {
        n as f64
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn key(&self) -> i64 {
        (self * KEY_SCALE).round() as i64
    }
    const EXACT: bool = false;
}

impl Scalar for BigRational {
    type Key = BigRational;

    fn from_rational(r: Rational) -> Self {
        let r = r.0;
        BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
    }
    fn from_usize(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(BigRational::zero)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn key(&self) -> BigRational {
        self.clone()
    }
    const EXACT: bool = true;
}

/// Quantized float key shared by modules that intern real-valued labels.
pub fn float_key(x: f64) -> i64 {
    (x * KEY_SCALE).round() as i64
}

/// Sum of `terms` by pairwise reduction; order of `terms` fixes the result.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    match terms.len() {
        0 => 0.0,
        1 => terms[0],
        n if n <= 8 => terms.iter().sum(),
        n => {
            let (a, b) = terms.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

// ---------------------------------------------------------------------------
// Rational

/// A small exact fraction used in configuration tables.
///
/// Parses from integers, from strings like `"3/8"`, and from decimal floats
/// (which must round-trip through a fraction with denominator at most 10^6).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(pub Ratio<i64>);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        Rational(Ratio::new(numer, denom))
    }
    pub fn integer(n: i64) -> Self {
        Rational(Ratio::from_integer(n))
    }
    pub fn zero() -> Self {
        Self::integer(0)
    }
    pub fn one() -> Self {
        Self::integer(1)
    }
    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }
    pub fn is_negative(self) -> bool {
        self.0.is_negative()
    }
    pub fn numer(self) -> i64 {
        *self.0.numer()
    }
    pub fn denom(self) -> i64 {
        *self.0.denom()
    }

    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let r = Ratio::<i64>::approximate_float(x)?;
        if *r.denom() > 1_000_000 || (r.to_f64()? - x).abs() > 1e-12 {
            return None;
        }
        Some(Rational(r))
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, o: Rational) -> Rational {
        Rational(self.0 + o.0)
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, o: Rational) -> Rational {
        Rational(self.0 - o.0)
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, o: Rational) -> Rational {
        Rational(self.0 * o.0)
    }
}

impl Div for Rational {
    type Output = Rational;
    fn div(self, o: Rational) -> Rational {
        Rational(self.0 / o.0)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let a: i64 = a.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let b: i64 = b.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            if b == 0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            return Ok(Rational::new(a, b));
        }
        if let Ok(n) = s.parse::<i64>() {
            return Ok(Rational::integer(n));
        }
        let x: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
        Rational::from_f64(x).ok_or_else(|| format!("{s:?} has no small exact fraction"))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        if self.denom() == 1 {
            ser.serialize_i64(self.numer())
        } else {
            ser.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Rational;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a fraction string like \"3/8\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
                Ok(Rational::integer(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
                i64::try_from(v).map(Rational::integer).map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
                Rational::from_f64(v)
                    .ok_or_else(|| E::custom(format!("{v} has no small exact fraction")))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
                v.parse().map_err(E::custom)
            }
        }
        de.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_forms() {
        assert_eq!("3/8".parse::<Rational>().unwrap(), Rational::new(3, 8));
        assert_eq!("2".parse::<Rational>().unwrap(), Rational::integer(2));
        assert_eq!("0.25".parse::<Rational>().unwrap(), Rational::new(1, 4));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
    }

    #[test]
    fn exact_and_float_agree() {
        let r = Rational::new(2, 3);
        let big = BigRational::from_rational(r);
        assert!((Scalar::to_f64(&big) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(<f64 as Scalar>::from_rational(r), 2.0 / 3.0);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_short_input() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }
}
