//! Closed-form exponents and best constants for diagonal s-sums of
//! m-linear forms.
//!
//! Every exponent is computed in exact rational arithmetic; floating point
//! only appears when a power `n^t` is finally evaluated.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::SpaceSpec;
use crate::spaces::{dual_exponent, format_rational, rational_to_f64, Exponent, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    T1a,
    T1b,
    T1c,
    T2a,
    T2b,
    Zalduendo,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A regime together with the exponent `t` of `n` in its constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeTag {
    pub regime: Regime,
    #[serde(with = "rational_text")]
    pub exponent_of_n: Rational,
}

/// `n^t` with an exact rational exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerOfN {
    pub n: u64,
    #[serde(with = "rational_text")]
    pub exponent: Rational,
}

impl PowerOfN {
    pub fn new(n: u64, exponent: Rational) -> Self {
        Self { n, exponent }
    }

    /// The exact value when `n^t` is rational (e.g. `9^{1/2} = 3`).
    pub fn exact(&self) -> Option<Rational> {
        if self.exponent.is_zero() || self.n == 1 {
            return Some(Rational::one());
        }
        let den = u32::try_from(*self.exponent.denom()).ok()?;
        let root = integer_root(self.n, den)?;
        let num = self.exponent.numer().unsigned_abs();
        let power = i64::try_from(root).ok()?.checked_pow(u32::try_from(num).ok()?)?;
        let value = Rational::from_integer(power);
        Some(if self.exponent.is_negative() { value.recip() } else { value })
    }

    /// Floating value; `exp(t ln n)` unless the power is exactly rational.
    pub fn value(&self) -> f64 {
        match self.exact() {
            Some(r) => rational_to_f64(r),
            None => (rational_to_f64(self.exponent) * (self.n as f64).ln()).exp(),
        }
    }
}

fn integer_root(n: u64, k: u32) -> Option<u64> {
    if k == 1 {
        return Some(n);
    }
    let guess = (n as f64).powf(1.0 / k as f64).round() as u64;
    (guess.saturating_sub(1)..=guess + 1).find(|r| r.checked_pow(k) == Some(n))
}

/// One instance `(m, n, p_1, …, p_m, s)` of the best-constant problem.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantQuery {
    pub m: usize,
    pub n: usize,
    pub exponents: SpaceSpec,
    #[serde(with = "rational_text")]
    pub s: Rational,
}

impl ConstantQuery {
    pub fn new(m: usize, n: usize, exponents: SpaceSpec, s: Rational) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidInput(format!(
                "m and n must be positive (m = {m}, n = {n})"
            )));
        }
        if exponents.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: exponents.len(),
            });
        }
        if !s.is_positive() {
            return Err(Error::InvalidExponent(format!(
                "s must be positive, got {}",
                format_rational(&s)
            )));
        }
        Ok(Self { m, n, exponents, s })
    }

    pub fn s_f64(&self) -> f64 {
        rational_to_f64(self.s)
    }
}

/// The exact best constant and which branch produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestConstant {
    pub tag: RegimeTag,
    pub constant: PowerOfN,
}

impl BestConstant {
    pub fn value(&self) -> f64 {
        self.constant.value()
    }
}

fn require_order(m: usize) -> Result<i64> {
    if m < 2 {
        return Err(Error::OutOfRegime(format!("m must be at least 2, got {m}")));
    }
    Ok(m as i64)
}

fn zero_floor(r: Rational) -> Rational {
    if r.is_negative() {
        Rational::zero()
    } else {
        r
    }
}

/// `p/(p-m)`: the diagonal exponent with unit constant when `p > m`.
pub fn zalduendo_exponent(m: usize, p: Exponent) -> Result<Rational> {
    let mi = require_order(m)?;
    let p = p
        .finite()
        .ok_or_else(|| Error::OutOfRegime("p must be finite".into()))?;
    let m_r = Rational::from_integer(mi);
    if p <= m_r {
        return Err(Error::OutOfRegime(format!(
            "p > m required, got p = {} and m = {m}",
            format_rational(&p)
        )));
    }
    Ok(p / (p - m_r))
}

/// The exponent of `n` for equal exponents `p` in the three regimes
/// `p > m` (T1a), `2 ≤ p ≤ m` (T1b) and `1 < p < 2` (T1c).
///
/// T1c is an upper-bound exponent only; see [`t1c_gap`] for how it compares
/// with the exact constant.
pub fn theorem1_exponent(m: usize, p: Exponent, s: Rational) -> Result<RegimeTag> {
    let mi = require_order(m)?;
    let m_r = Rational::from_integer(mi);
    let one = Rational::one();
    let two = Rational::from_integer(2);
    if !p.exceeds(one) {
        return Err(Error::OutOfRegime("p > 1 required (p = 1 is covered by no regime)".into()));
    }
    if p.exceeds(m_r) {
        if s < one {
            return Err(Error::OutOfRegime(format!(
                "s >= 1 required for p > m, got s = {}",
                format_rational(&s)
            )));
        }
        let t = zero_floor(m_r * p.reciprocal() + s.recip() - one);
        return Ok(RegimeTag {
            regime: Regime::T1a,
            exponent_of_n: t,
        });
    }
    let pv = p.finite().expect("p <= m is finite");
    if pv >= two {
        if s < one {
            return Err(Error::OutOfRegime(format!(
                "s >= 1 required for 2 <= p <= m, got s = {}",
                format_rational(&s)
            )));
        }
        return Ok(RegimeTag {
            regime: Regime::T1b,
            exponent_of_n: Rational::zero(),
        });
    }
    if s < two / m_r {
        return Err(Error::OutOfRegime(format!(
            "s >= 2/m required for 1 < p < 2, got s = {}",
            format_rational(&s)
        )));
    }
    let t = (two * m_r * s + two * pv - s * pv * m_r) / (two * s * pv);
    Ok(RegimeTag {
        regime: Regime::T1c,
        exponent_of_n: t,
    })
}

/// Exact best constant: `n^{1/s}` when `Σ 1/p_i ≥ 1` (T2a), else
/// `n^{max(Σ 1/p_i + 1/s − 1, 0)}` (T2b). On `Σ 1/p_i = 1` both agree and T2a
/// is reported.
pub fn best_constant(q: &ConstantQuery) -> BestConstant {
    let one = Rational::one();
    let sum = q.exponents.reciprocal_sum();
    let tag = if sum >= one {
        RegimeTag {
            regime: Regime::T2a,
            exponent_of_n: q.s.recip(),
        }
    } else {
        RegimeTag {
            regime: Regime::T2b,
            exponent_of_n: zero_floor(sum + q.s.recip() - one),
        }
    };
    BestConstant {
        tag,
        constant: PowerOfN::new(q.n as u64, tag.exponent_of_n),
    }
}

fn below_zalduendo(m: usize, p: Exponent, s: Rational, inclusive: bool) -> Result<Rational> {
    let z = zalduendo_exponent(m, p)?;
    if s < Rational::one() {
        return Err(Error::OutOfRegime(format!(
            "s >= 1 required, got s = {}",
            format_rational(&s)
        )));
    }
    let outside = if inclusive { s > z } else { s >= z };
    if outside {
        return Err(Error::OutOfRegime(format!(
            "s = {} is not below p/(p-m) = {}",
            format_rational(&s),
            format_rational(&z)
        )));
    }
    Ok(z)
}

/// The `x` with `1/s = (p−m)/p + 1/x`, splitting the diagonal sum by Hölder
/// when `1 ≤ s < p/(p−m)`.
pub fn holder_interpolation_x(s: Rational, p: Exponent, m: usize) -> Result<Exponent> {
    let z = below_zalduendo(m, p, s, false)?;
    Exponent::from_reciprocal(s.recip() - z.recip())
}

/// `r = 2sm/(sm+2)` and whether `r < p*`.
pub fn inclusion_exponent(s: Rational, m: usize, p: Exponent) -> Result<(Rational, bool)> {
    let mi = require_order(m)?;
    let m_r = Rational::from_integer(mi);
    let two = Rational::from_integer(2);
    if s < two / m_r {
        return Err(Error::OutOfRegime(format!(
            "s >= 2/m required, got s = {}",
            format_rational(&s)
        )));
    }
    let r = two * s * m_r / (s * m_r + two);
    let below = dual_exponent(p).exceeds(r);
    Ok((r, below))
}

/// `m/p + 1/s − 1`: no exponent smaller than this is admissible for
/// `p > m`, `1 ≤ s ≤ p/(p−m)`, as the product form shows. It vanishes at
/// the endpoint `s = p/(p−m)`.
pub fn optimality_floor(m: usize, p: Exponent, s: Rational) -> Result<Rational> {
    below_zalduendo(m, p, s, true)?;
    let m_r = Rational::from_integer(m as i64);
    Ok(m_r * p.reciprocal() + s.recip() - Rational::one())
}

/// For `1 < p < 2`: the T1c exponent, the exact exponent, and their
/// difference (always `≥ 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct T1cGap {
    #[serde(with = "rational_text")]
    pub t1c: Rational,
    #[serde(with = "rational_text")]
    pub exact: Rational,
    #[serde(with = "rational_text")]
    pub gap: Rational,
}

pub fn t1c_gap(m: usize, p: Exponent, s: Rational) -> Result<T1cGap> {
    let tag = theorem1_exponent(m, p, s)?;
    if tag.regime != Regime::T1c {
        return Err(Error::OutOfRegime(format!(
            "1 < p < 2 required, got p = {p}"
        )));
    }
    let q = ConstantQuery::new(m, 2, SpaceSpec::uniform(m, p), s)?;
    let exact = best_constant(&q).tag.exponent_of_n;
    Ok(T1cGap {
        t1c: tag.exponent_of_n,
        exact,
        gap: tag.exponent_of_n - exact,
    })
}

/// Serializes rationals as exact text (`"3/2"`).
pub(crate) mod rational_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::spaces::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn p(s: &str) -> Exponent {
        s.parse().unwrap()
    }

    fn query(m: usize, n: usize, ps: &str, s: Rational) -> ConstantQuery {
        ConstantQuery::new(m, n, ps.parse().unwrap(), s).unwrap()
    }

    #[test]
    fn zalduendo_examples() {
        assert_eq!(zalduendo_exponent(2, p("4")).unwrap(), r(2, 1));
        assert_eq!(zalduendo_exponent(3, p("6")).unwrap(), r(2, 1));
        assert_eq!(zalduendo_exponent(2, p("3")).unwrap(), r(3, 1));
        assert!(matches!(zalduendo_exponent(2, p("2")), Err(Error::OutOfRegime(_))));
        assert!(zalduendo_exponent(2, Exponent::Infinite).is_err());
    }

    #[test]
    fn theorem1_examples() {
        let a = theorem1_exponent(2, p("4"), r(1, 1)).unwrap();
        assert_eq!((a.regime, a.exponent_of_n), (Regime::T1a, r(1, 2)));
        let b = theorem1_exponent(3, p("2"), r(5, 1)).unwrap();
        assert_eq!((b.regime, b.exponent_of_n), (Regime::T1b, r(0, 1)));
        let c = theorem1_exponent(2, p("3/2"), r(1, 1)).unwrap();
        assert_eq!((c.regime, c.exponent_of_n), (Regime::T1c, r(4, 3)));
    }

    #[test]
    fn theorem1_out_of_regime() {
        let err = theorem1_exponent(2, p("1"), r(1, 1)).unwrap_err();
        assert!(err.to_string().contains("p > 1"));
        let err = theorem1_exponent(3, p("3/2"), r(1, 2)).unwrap_err();
        assert!(err.to_string().contains("2/m"));
        assert!(theorem1_exponent(2, p("4"), r(1, 2)).is_err());
        assert!(theorem1_exponent(1, p("4"), r(1, 1)).is_err());
    }

    #[test]
    fn theorem1_infinite_p() {
        let t = theorem1_exponent(3, Exponent::Infinite, r(2, 1)).unwrap();
        assert_eq!((t.regime, t.exponent_of_n), (Regime::T1a, r(0, 1)));
    }

    #[test]
    fn best_constant_examples() {
        let c = best_constant(&query(2, 9, "2,2", r(2, 1)));
        assert_eq!(c.tag.regime, Regime::T2a);
        assert_eq!(c.constant.exact(), Some(r(3, 1)));
        let c = best_constant(&query(2, 16, "4,4", r(2, 1)));
        assert_eq!(c.tag.regime, Regime::T2b);
        assert_eq!(c.constant.exact(), Some(r(1, 1)));
        for ps in ["1,1", "4,4", "inf,3/2"] {
            for s in [r(1, 3), r(1, 1), r(7, 2)] {
                assert_eq!(best_constant(&query(2, 1, ps, s)).value(), 1.0);
            }
        }
    }

    #[test]
    fn boundary_reports_first_branch() {
        let c = best_constant(&query(3, 8, "3,3,3", r(3, 1)));
        assert_eq!(c.tag.regime, Regime::T2a);
        assert_eq!(c.constant.exact(), Some(r(2, 1)));
    }

    #[test]
    fn power_of_n_values() {
        assert_eq!(PowerOfN::new(27, r(2, 3)).exact(), Some(r(9, 1)));
        assert_eq!(PowerOfN::new(4, r(-1, 2)).exact(), Some(r(1, 2)));
        assert_eq!(PowerOfN::new(2, r(1, 2)).exact(), None);
        assert!((PowerOfN::new(2, r(1, 2)).value() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn holder_x_examples() {
        assert_eq!(holder_interpolation_x(r(1, 1), p("4"), 2).unwrap(), p("2"));
        assert_eq!(holder_interpolation_x(r(1, 1), p("3"), 2).unwrap(), p("3/2"));
        assert_eq!(holder_interpolation_x(r(1, 1), p("6"), 2).unwrap(), p("3"));
        // s = 3/2 is exactly p/(p-m) for p = 6, m = 2
        assert!(holder_interpolation_x(r(3, 2), p("6"), 2).is_err());
        assert!(matches!(
            holder_interpolation_x(r(2, 1), p("4"), 2),
            Err(Error::OutOfRegime(_))
        ));
    }

    #[test]
    fn inclusion_examples() {
        assert_eq!(inclusion_exponent(r(1, 1), 2, p("3/2")).unwrap(), (r(1, 1), true));
        assert_eq!(inclusion_exponent(r(2, 1), 2, p("3/2")).unwrap(), (r(4, 3), true));
        assert_eq!(inclusion_exponent(r(2, 3), 3, p("3/2")).unwrap(), (r(1, 1), true));
        // outside 1 < p < 2 the flag can fail
        assert!(!inclusion_exponent(r(10, 1), 2, p("5")).unwrap().1);
        assert!(inclusion_exponent(r(1, 2), 2, p("3/2")).is_err());
    }

    #[test]
    fn floor_examples() {
        assert_eq!(optimality_floor(2, p("4"), r(1, 1)).unwrap(), r(1, 2));
        assert_eq!(optimality_floor(3, p("6"), r(1, 1)).unwrap(), r(1, 2));
        assert_eq!(optimality_floor(2, p("8"), r(4, 3)).unwrap(), r(0, 1));
        assert!(optimality_floor(2, p("8"), r(2, 1)).is_err());
    }

    #[test]
    fn t1c_is_never_below_the_exact_exponent() {
        for m in 2..=4 {
            for pp in ["5/4", "3/2", "7/4"] {
                for s in [r(2, m as i64), r(1, 1), r(2, 1), r(5, 1)] {
                    let g = t1c_gap(m, p(pp), s).unwrap();
                    assert!(g.gap >= Rational::zero());
                    // closed form of the difference: m(2 - p) / (2p)
                    let pv = p(pp).finite().unwrap();
                    let m_r = Rational::from_integer(m as i64);
                    assert_eq!(g.gap, m_r * (Rational::from_integer(2) - pv) / (Rational::from_integer(2) * pv));
                }
            }
        }
    }

    #[test]
    fn query_validation() {
        assert!(ConstantQuery::new(2, 4, "2".parse().unwrap(), r(1, 1)).is_err());
        assert!(ConstantQuery::new(2, 4, "2,2".parse().unwrap(), r(0, 1)).is_err());
        assert!(ConstantQuery::new(2, 0, "2,2".parse().unwrap(), r(1, 1)).is_err());
    }

    #[test]
    fn query_json_is_exact() {
        let q = query(2, 4, "4/3,inf", r(3, 2));
        let json = serde_json::to_string(&q).unwrap();
        assert_eq!(json, r#"{"m":2,"n":4,"exponents":["4/3","inf"],"s":"3/2"}"#);
        assert_eq!(serde_json::from_str::<ConstantQuery>(&json).unwrap(), q);
    }
}
