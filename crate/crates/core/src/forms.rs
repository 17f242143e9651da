//! Dense m-linear forms on `l_{p_1}^n × … × l_{p_m}^n`.
//!
//! A form is stored by its coefficients `a[j_1, …, j_m] = T(e_{j_1}, …, e_{j_m})`
//! in row-major (lexicographic) order. Indices are 0-based in code.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{Coeffs, Scalar, ScalarMode};
use crate::spaces::{Exponent, Rational};

/// Upper bound on `n^m`.
pub const MAX_ENTRIES: usize = 10_000_000;

/// Checked `n^m` under the storage guard.
pub fn entry_count(order: usize, dim: usize) -> Result<usize> {
    if order == 0 || dim == 0 {
        return Err(Error::InvalidInput(format!(
            "order and dimension must be positive (m = {order}, n = {dim})"
        )));
    }
    let mut total: usize = 1;
    for _ in 0..order {
        total = total
            .checked_mul(dim)
            .filter(|t| *t <= MAX_ENTRIES)
            .ok_or_else(|| {
                Error::Capacity(format!(
                    "n^m = {dim}^{order} exceeds the {MAX_ENTRIES} entry guard"
                ))
            })?;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearForm<S = f64> {
    order: usize,
    dim: usize,
    coeffs: Vec<S>,
}

impl<S: Scalar> MultilinearForm<S> {
    pub fn new(order: usize, dim: usize, coeffs: Vec<S>) -> Result<Self> {
        let len = entry_count(order, dim)?;
        if coeffs.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: coeffs.len(),
            });
        }
        Ok(Self { order, dim, coeffs })
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        let len = entry_count(order, dim)?;
        Ok(Self {
            order,
            dim,
            coeffs: vec![S::zero(); len],
        })
    }

    /// Builds a bilinear form from the rows of its coefficient matrix.
    pub fn bilinear(rows: &[&[S]]) -> Result<Self> {
        let n = rows.len();
        let coeffs: Vec<S> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(2, n, coeffs)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.modulus() == 0.0)
    }

    pub fn max_modulus(&self) -> f64 {
        self.coeffs.iter().map(|c| c.modulus()).fold(0.0, f64::max)
    }

    fn flat_index(&self, index: &[usize]) -> usize {
        index.iter().fold(0, |acc, &j| acc * self.dim + j)
    }

    /// Coefficient at a 0-based multi-index.
    pub fn get(&self, index: &[usize]) -> S {
        assert_eq!(index.len(), self.order);
        self.coeffs[self.flat_index(index)]
    }

    pub fn set(&mut self, index: &[usize], value: S) {
        assert_eq!(index.len(), self.order);
        let i = self.flat_index(index);
        self.coeffs[i] = value;
    }

    /// Multi-index of a flat position.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.order];
        for slot in (0..self.order).rev() {
            index[slot] = flat % self.dim;
            flat /= self.dim;
        }
        index
    }

    pub fn scaled(&self, factor: S) -> Self {
        Self {
            order: self.order,
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|&c| c * factor).collect(),
        }
    }

    pub fn map_coeffs(&self, f: impl FnMut(S) -> S) -> Self {
        Self {
            order: self.order,
            dim: self.dim,
            coeffs: self.coeffs.iter().copied().map(f).collect(),
        }
    }

    fn check_args<V: AsRef<[S]>>(&self, xs: &[V]) -> Result<()> {
        if xs.len() != self.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                found: xs.len(),
            });
        }
        for x in xs {
            if x.as_ref().len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: x.as_ref().len(),
                });
            }
        }
        Ok(())
    }

    /// `T(x^1, …, x^m) = Σ a[j_1, …, j_m] x^1_{j_1} ⋯ x^m_{j_m}`.
    pub fn evaluate<V: AsRef<[S]>>(&self, xs: &[V]) -> Result<S> {
        self.check_args(xs)?;
        let mut buf = self.coeffs.clone();
        for slot in (0..self.order).rev() {
            buf = contract_trailing(&buf, xs[slot].as_ref());
        }
        Ok(buf[0])
    }

    /// Coefficient vector of the linear functional `y ↦ T(x^1, …, y, …, x^m)`
    /// with `y` in position `slot`. The entry of `xs` at `slot` is ignored.
    pub fn contract_except<V: AsRef<[S]>>(&self, slot: usize, xs: &[V]) -> Result<Vec<S>> {
        self.check_args(xs)?;
        if slot >= self.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                found: slot,
            });
        }
        Ok(self.contract_except_unchecked(slot, xs))
    }

    pub(crate) fn contract_except_unchecked<V: AsRef<[S]>>(&self, slot: usize, xs: &[V]) -> Vec<S> {
        let mut iter = (slot + 1..self.order).rev();
        let mut buf = match iter.next() {
            Some(last) => contract_trailing(&self.coeffs, xs[last].as_ref()),
            None => self.coeffs.clone(),
        };
        for s in iter {
            buf = contract_trailing(&buf, xs[s].as_ref());
        }
        for x in xs.iter().take(slot) {
            buf = contract_leading(&buf, x.as_ref());
        }
        buf
    }

    /// `(a[j, …, j])_j`.
    pub fn diagonal(&self) -> Vec<S> {
        let stride: usize = (0..self.order).fold(0, |acc, _| acc * self.dim + 1);
        (0..self.dim).map(|j| self.coeffs[j * stride]).collect()
    }

    /// `(Σ_j |a[j, …, j]|^s)^{1/s}` for any `s > 0`.
    pub fn diagonal_s_sum(&self, s: f64) -> Result<f64> {
        diagonal_sum_of(&self.diagonal(), s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FormDocument = serde_json::from_str(text)?;
        doc.into_form()
    }
}

/// `(Σ |d_j|^s)^{1/s}`; a quasi-norm for `0 < s < 1`.
pub fn diagonal_sum_of<S: Scalar>(d: &[S], s: f64) -> Result<f64> {
    if s.is_nan() || s <= 0.0 || !s.is_finite() {
        return Err(Error::InvalidExponent(format!(
            "diagonal sum exponent must be positive and finite, got {s}"
        )));
    }
    let largest = d.iter().map(|v| v.modulus()).fold(0.0, f64::max);
    if largest == 0.0 {
        return Ok(0.0);
    }
    if s == 1.0 {
        return Ok(d.iter().map(|v| v.modulus()).sum());
    }
    let sum: f64 = d.iter().map(|v| (v.modulus() / largest).powf(s)).sum();
    Ok(largest * sum.powf(1.0 / s))
}

fn contract_trailing<S: Scalar>(buf: &[S], x: &[S]) -> Vec<S> {
    let n = x.len();
    buf.chunks_exact(n)
        .map(|row| row.iter().zip(x).fold(S::zero(), |acc, (&a, &b)| acc + a * b))
        .collect()
}

fn contract_leading<S: Scalar>(buf: &[S], x: &[S]) -> Vec<S> {
    let rest = buf.len() / x.len();
    let mut out = vec![S::zero(); rest];
    for (block, &w) in buf.chunks_exact(rest).zip(x) {
        if w.modulus() == 0.0 {
            continue;
        }
        for (o, &a) in out.iter_mut().zip(block) {
            *o += a * w;
        }
    }
    out
}

/// `A(x^1, …, x^m) = Σ_j x^1_j ⋯ x^m_j`: ones on the main diagonal.
pub fn product_form<S: Scalar>(order: usize, dim: usize) -> Result<MultilinearForm<S>> {
    let mut form = MultilinearForm::zeros(order, dim)?;
    let stride: usize = (0..order).fold(0, |acc, _| acc * dim + 1);
    for j in 0..dim {
        form.coeffs[j * stride] = S::one();
    }
    Ok(form)
}

/// Coefficient distribution for seeded random forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Distribution {
    Gaussian,
    UniformSign,
    /// `k` gaussian entries at uniformly chosen distinct positions.
    Sparse(usize),
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Gaussian => f.write_str("gaussian"),
            Distribution::UniformSign => f.write_str("uniform-sign"),
            Distribution::Sparse(k) => write!(f, "sparse({k})"),
        }
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "gaussian" => Ok(Distribution::Gaussian),
            "uniform-sign" => Ok(Distribution::UniformSign),
            _ => s
                .strip_prefix("sparse(")
                .and_then(|rest| rest.strip_suffix(')'))
                .and_then(|k| k.trim().parse().ok())
                .map(Distribution::Sparse)
                .ok_or_else(|| Error::InvalidInput(format!("unknown distribution {s:?}"))),
        }
    }
}

impl Serialize for Distribution {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Seeded random form; identical inputs give identical coefficients.
pub fn random_form<S: Scalar>(
    order: usize,
    dim: usize,
    seed: u64,
    distribution: Distribution,
) -> Result<MultilinearForm<S>> {
    let len = entry_count(order, dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = match distribution {
        Distribution::Gaussian => (0..len).map(|_| S::gaussian(&mut rng)).collect(),
        Distribution::UniformSign => (0..len).map(|_| S::random_unit(&mut rng)).collect(),
        Distribution::Sparse(k) => {
            let mut coeffs = vec![S::zero(); len];
            for i in sample(&mut rng, len, k.min(len)).into_iter() {
                coeffs[i] = S::gaussian(&mut rng);
            }
            coeffs
        }
    };
    MultilinearForm::new(order, dim, coeffs)
}

/// Exponents `(p_1, …, p_m)` of the domain spaces.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpaceSpec {
    exponents: Vec<Exponent>,
}

impl SpaceSpec {
    pub fn new(exponents: Vec<Exponent>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidInput("empty exponent list".into()));
        }
        Ok(Self { exponents })
    }

    pub fn uniform(order: usize, p: Exponent) -> Self {
        Self {
            exponents: vec![p; order.max(1)],
        }
    }

    pub fn exponents(&self) -> &[Exponent] {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// The common exponent when all slots agree.
    pub fn common(&self) -> Option<Exponent> {
        let first = self.exponents[0];
        self.exponents.iter().all(|p| *p == first).then_some(first)
    }

    /// `Σ 1/p_i`.
    pub fn reciprocal_sum(&self) -> Rational {
        self.exponents.iter().map(Exponent::reciprocal).sum()
    }

    /// Semicolon-joined list, as used in CSV output.
    pub fn joined(&self, sep: &str) -> String {
        self.exponents
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(sep)
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.joined(","))
    }
}

impl FromStr for SpaceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let exponents = s
            .split([',', ';'])
            .map(str::parse)
            .collect::<Result<Vec<Exponent>>>()?;
        SpaceSpec::new(exponents)
    }
}

/// On-disk tensor document: `{m, n, scalar_mode, coeffs}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormDocument {
    pub m: usize,
    pub n: usize,
    pub scalar_mode: ScalarMode,
    pub coeffs: Coeffs,
}

impl FormDocument {
    pub fn into_form<S: Scalar>(self) -> Result<MultilinearForm<S>> {
        if self.scalar_mode != S::MODE {
            return Err(Error::InvalidInput(format!(
                "form file holds {} coefficients, {} requested",
                self.scalar_mode,
                S::MODE
            )));
        }
        MultilinearForm::new(self.m, self.n, S::decode(self.coeffs)?)
    }
}

impl<S: Scalar> Serialize for MultilinearForm<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        FormDocument {
            m: self.order,
            n: self.dim,
            scalar_mode: S::MODE,
            coeffs: S::encode(&self.coeffs),
        }
        .serialize(serializer)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for MultilinearForm<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        FormDocument::deserialize(deserializer)?
            .into_form()
            .map_err(serde::de::Error::custom)
    }
}
