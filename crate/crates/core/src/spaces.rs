//! Geometry of `l_p^n`: exponents, norms, and the exact solution of the
//! linear subproblem `max { Re Σ c_j x_j : ‖x‖_p ≤ 1 }`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Rational = Ratio<i64>;

/// Parses `"3/2"`, `"7"`, `"-2"` or a finite decimal such as `"1.25"` into an
/// exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::InvalidInput(format!("not a rational number: {text:?}"));
    if let Some((num, den)) = t.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        let den: i64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int_part: i64 = match int.trim_start_matches(['-', '+']) {
            "" => 0,
            digits => digits.parse().map_err(|_| bad())?,
        };
        let scale = 10i64.pow(frac.len() as u32);
        let frac_part: i64 = frac.parse().map_err(|_| bad())?;
        let magnitude = int_part
            .checked_mul(scale)
            .and_then(|v| v.checked_add(frac_part))
            .ok_or_else(bad)?;
        let value = Rational::new(magnitude, scale);
        return Ok(if negative { -value } else { value });
    }
    t.parse::<i64>().map(Rational::from_integer).map_err(|_| bad())
}

pub fn rational_to_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// An exponent `p ∈ [1, ∞]`. Finite values are exact rationals; `∞` is a
/// distinct value rather than a large float.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Rational),
    Infinite,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(Ratio::new_raw(1, 1));
    pub const TWO: Exponent = Exponent::Finite(Ratio::new_raw(2, 1));

    pub fn new(value: Rational) -> Result<Self> {
        if value < Rational::one() {
            return Err(Error::InvalidExponent(format!(
                "{} is below 1",
                format_rational(&value)
            )));
        }
        Ok(Exponent::Finite(value))
    }

    pub fn integer(value: i64) -> Result<Self> {
        Self::new(Rational::from_integer(value))
    }

    pub fn ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidExponent("zero denominator".into()));
        }
        Self::new(Rational::new(numer, denom))
    }

    /// Builds the exponent whose reciprocal is `r ∈ [0, 1]`.
    pub fn from_reciprocal(r: Rational) -> Result<Self> {
        if r.is_zero() {
            Ok(Exponent::Infinite)
        } else if r.is_negative() || r > Rational::one() {
            Err(Error::InvalidExponent(format!(
                "reciprocal {} outside [0, 1]",
                format_rational(&r)
            )))
        } else {
            Ok(Exponent::Finite(r.recip()))
        }
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn reciprocal(&self) -> Rational {
        match self {
            Exponent::Finite(p) => p.recip(),
            Exponent::Infinite => Rational::zero(),
        }
    }

    pub fn finite(&self) -> Option<Rational> {
        match self {
            Exponent::Finite(p) => Some(*p),
            Exponent::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(p) => rational_to_f64(*p),
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn is_one(&self) -> bool {
        *self == Exponent::ONE
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// Strict comparison against a rational, treating `∞` as larger than
    /// every finite value.
    pub fn exceeds(&self, r: Rational) -> bool {
        match self {
            Exponent::Finite(p) => *p > r,
            Exponent::Infinite => true,
        }
    }
}

/// The conjugate exponent `p*` with `1/p + 1/p* = 1`.
pub fn dual_exponent(p: Exponent) -> Exponent {
    match p {
        Exponent::Infinite => Exponent::ONE,
        Exponent::Finite(v) if v.is_one() => Exponent::Infinite,
        Exponent::Finite(v) => Exponent::Finite(v / (v - Rational::one())),
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => f.write_str(&format_rational(p)),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
            other => Exponent::new(parse_rational(other)?),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// `(Σ |x_j|^p)^{1/p}`, or `max |x_j|` for `p = ∞`.
pub fn lp_norm<S: Scalar>(x: &[S], p: Exponent) -> f64 {
    let largest = x.iter().map(|v| v.modulus()).fold(0.0, f64::max);
    if largest == 0.0 || p.is_infinite() {
        return largest;
    }
    if p.is_one() {
        return x.iter().map(|v| v.modulus()).sum();
    }
    let pf = p.to_f64();
    if pf == 2.0 {
        let sum: f64 = x
            .iter()
            .map(|v| {
                let r = v.modulus() / largest;
                r * r
            })
            .sum();
        return largest * sum.sqrt();
    }
    // scaled by the largest entry to avoid overflow and underflow
    let sum: f64 = x.iter().map(|v| (v.modulus() / largest).powf(pf)).sum();
    largest * sum.powf(1.0 / pf)
}

/// Norm of the functional `x ↦ Σ c_j x_j` on `l_p^n` together with a unit
/// vector attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalMax<S> {
    pub norm: f64,
    pub maximizer: Vec<S>,
    /// Set when `c = 0`; the maximizer is then the zero vector.
    pub degenerate: bool,
}

pub fn functional_norm_and_maximizer<S: Scalar>(c: &[S], p: Exponent) -> FunctionalMax<S> {
    let n = c.len();
    let largest = c.iter().map(|v| v.modulus()).fold(0.0, f64::max);
    if largest == 0.0 {
        return FunctionalMax {
            norm: 0.0,
            maximizer: vec![S::zero(); n],
            degenerate: true,
        };
    }
    let dual = dual_exponent(p);
    let norm = lp_norm(c, dual);
    let maximizer = match p {
        Exponent::Infinite => c.iter().map(|v| v.phase().conj()).collect(),
        Exponent::Finite(v) if v.is_one() => {
            let mut best = 0;
            for (j, v) in c.iter().enumerate() {
                if v.modulus() > c[best].modulus() {
                    best = j;
                }
            }
            let mut x = vec![S::zero(); n];
            x[best] = c[best].phase().conj();
            x
        }
        Exponent::Finite(_) => {
            // x_j = conj(sgn c_j) |c_j|^{q-1} / ‖c‖_q^{q-1}, computed on c / max|c|
            let q = dual.to_f64();
            let scaled_norm = norm / largest;
            let denom = scaled_norm.powf(q - 1.0);
            c.iter()
                .map(|v| {
                    let r = v.modulus() / largest;
                    v.phase().conj().scale(r.powf(q - 1.0) / denom)
                })
                .collect()
        }
    };
    FunctionalMax {
        norm,
        maximizer,
        degenerate: false,
    }
}

/// `Σ c_j x_j`.
pub fn pair<S: Scalar>(c: &[S], x: &[S]) -> S {
    c.iter().zip(x).fold(S::zero(), |acc, (&a, &b)| acc + a * b)
}
