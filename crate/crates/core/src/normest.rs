//! Computing `‖T‖ = sup { |T(x^1, …, x^m)| : ‖x^i‖_{p_i} ≤ 1 }`.
//!
//! Exact oracles cover the all-`l_1` case, real bilinear `l_2 × l_2`, and
//! small real all-`l_∞` forms. Everything else goes through multi-start
//! alternating ascent, which only ever certifies lower bounds.

use std::any::Any;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{derive_seed, Execution};
use crate::forms::{MultilinearForm, SpaceSpec};
use crate::scalar::{Coeffs, Scalar};
use crate::spaces::{functional_norm_and_maximizer, lp_norm, Exponent};

/// Largest `n·m` accepted by the sign-enumeration oracle.
pub const LINF_ENUMERATION_LIMIT: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    ExactOracle,
    LowerBound,
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormKind::ExactOracle => "exact-oracle",
            NormKind::LowerBound => "lower-bound",
        })
    }
}

/// The procedure that produced an estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    AlternatingAscent,
    L1Vertices,
    BilinearSpectral,
    LinfSigns,
    ZeroForm,
}

impl std::fmt::Display for NormMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormMethod::AlternatingAscent => "alternating-ascent",
            NormMethod::L1Vertices => "l1-vertices",
            NormMethod::BilinearSpectral => "bilinear-spectral",
            NormMethod::LinfSigns => "linf-signs",
            NormMethod::ZeroForm => "zero-form",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormEstimate<S = f64> {
    pub value: f64,
    pub kind: NormKind,
    pub method: NormMethod,
    /// One unit vector per slot with `|T(witnesses)| = value`.
    pub witnesses: Vec<Vec<S>>,
    /// Sweeps used by the winning start (0 for oracles).
    pub sweeps: usize,
    pub starts_used: usize,
    /// Set for the zero form.
    pub degenerate: bool,
    /// Objective after each accepted sweep, one sequence per start.
    pub traces: Vec<Vec<f64>>,
}

impl<S: Scalar> NormEstimate<S> {
    fn zero(form: &MultilinearForm<S>, spec: &SpaceSpec, kind: NormKind) -> Self {
        NormEstimate {
            value: 0.0,
            kind,
            method: NormMethod::ZeroForm,
            witnesses: uniform_start(form.dim(), spec),
            sweeps: 0,
            starts_used: 0,
            degenerate: true,
            traces: Vec::new(),
        }
    }

    fn oracle(method: NormMethod, value: f64, witnesses: Vec<Vec<S>>) -> Self {
        NormEstimate {
            value,
            kind: NormKind::ExactOracle,
            method,
            witnesses,
            sweeps: 0,
            starts_used: 0,
            degenerate: false,
            traces: Vec::new(),
        }
    }

    pub fn summary(&self) -> NormSummary {
        NormSummary {
            value: self.value,
            kind: self.kind,
            method: self.method,
            sweeps: self.sweeps,
            starts_used: self.starts_used,
        }
    }

    pub fn report(&self) -> NormReport {
        NormReport {
            summary: self.summary(),
            degenerate: self.degenerate,
            witnesses: self.witnesses.iter().map(|w| S::encode(w)).collect(),
        }
    }
}

/// Compact, serializable view of an estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSummary {
    pub value: f64,
    pub kind: NormKind,
    pub method: NormMethod,
    pub sweeps: usize,
    pub starts_used: usize,
}

/// Full serializable estimate including witnesses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    #[serde(flatten)]
    pub summary: NormSummary,
    pub degenerate: bool,
    pub witnesses: Vec<Coeffs>,
}

/// Parameters of the alternating ascent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AscentConfig {
    pub starts: usize,
    /// Stop once a sweep improves the objective by less than `tol` relative.
    pub tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            starts: 32,
            tol: 1e-10,
            max_sweeps: 500,
            seed: 12345,
            execution: Execution::default(),
        }
    }
}

impl AscentConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.max_sweeps == 0 || self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "ascent needs starts >= 1, max_sweeps >= 1 and tol > 0 (got {}, {}, {})",
                self.starts, self.max_sweeps, self.tol
            )));
        }
        Ok(())
    }
}

fn check_spec<S: Scalar>(form: &MultilinearForm<S>, spec: &SpaceSpec) -> Result<()> {
    if spec.len() != form.order() {
        return Err(Error::DimensionMismatch {
            expected: form.order(),
            found: spec.len(),
        });
    }
    Ok(())
}

/// `n^{-1/p_i} (1, …, 1)` in every slot.
fn uniform_start<S: Scalar>(dim: usize, spec: &SpaceSpec) -> Vec<Vec<S>> {
    spec.exponents()
        .iter()
        .map(|p| {
            let ones = vec![S::one(); dim];
            let norm = lp_norm(&ones, *p);
            ones.into_iter().map(|v| v.scale(1.0 / norm)).collect()
        })
        .collect()
}

fn random_start<S: Scalar>(dim: usize, spec: &SpaceSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<S>> {
    spec.exponents()
        .iter()
        .map(|p| loop {
            let x: Vec<S> = (0..dim).map(|_| S::gaussian(rng)).collect();
            let norm = lp_norm(&x, *p);
            if norm > 0.0 {
                break x.into_iter().map(|v| v.scale(1.0 / norm)).collect();
            }
        })
        .collect()
}

struct StartOutcome<S> {
    value: f64,
    witnesses: Vec<Vec<S>>,
    sweeps: usize,
    trace: Vec<f64>,
}

fn ascend_from<S: Scalar>(
    form: &MultilinearForm<S>,
    spec: &SpaceSpec,
    mut xs: Vec<Vec<S>>,
    tol: f64,
    max_sweeps: usize,
) -> StartOutcome<S> {
    let mut value = form.evaluate(&xs).map(|v| v.modulus()).unwrap_or(0.0);
    let mut trace = vec![value];
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        let previous = xs.clone();
        let mut objective = value;
        for (slot, p) in spec.exponents().iter().enumerate() {
            let c = form.contract_except_unchecked(slot, &xs);
            let step = functional_norm_and_maximizer(&c, *p);
            // a zero functional leaves the slot as is: every unit vector is optimal
            if !step.degenerate {
                xs[slot] = step.maximizer;
            }
            objective = step.norm;
        }
        if objective < value {
            // only rounding can get here; keep the better iterate
            xs = previous;
            break;
        }
        sweeps += 1;
        let gain = objective - value;
        value = objective;
        trace.push(value);
        if gain <= tol * value {
            break;
        }
    }
    let value = form.evaluate(&xs).map(|v| v.modulus()).unwrap_or(value);
    StartOutcome {
        value,
        witnesses: xs,
        sweeps,
        trace,
    }
}

/// Multi-start alternating maximization over the slots. Each slot update is
/// the exact maximizer of a linear functional, so the objective is
/// nondecreasing along every start. Start 0 uses the uniform vectors.
pub fn alternating_ascent<S: Scalar>(
    form: &MultilinearForm<S>,
    spec: &SpaceSpec,
    config: &AscentConfig,
) -> Result<NormEstimate<S>> {
    check_spec(form, spec)?;
    config.validate()?;
    if form.is_zero() {
        return Ok(NormEstimate::zero(form, spec, NormKind::LowerBound));
    }
    let dim = form.dim();
    let outcomes = config.execution.map_indexed(config.starts, |start| {
        let xs = if start == 0 {
            uniform_start(dim, spec)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, start as u64));
            random_start(dim, spec, &mut rng)
        };
        ascend_from(form, spec, xs, config.tol, config.max_sweeps)
    });

    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best].value {
            best = i;
        }
    }
    let traces = outcomes.iter().map(|o| o.trace.clone()).collect();
    let winner = outcomes.into_iter().nth(best).expect("at least one start");
    Ok(NormEstimate {
        value: winner.value,
        kind: NormKind::LowerBound,
        method: NormMethod::AlternatingAscent,
        witnesses: winner.witnesses,
        sweeps: winner.sweeps,
        starts_used: config.starts,
        degenerate: false,
        traces,
    })
}

/// Exact norm on `l_1^n × … × l_1^n`: the largest coefficient modulus,
/// attained at a tuple of signed basis vectors.
pub fn exact_norm_l1<S: Scalar>(form: &MultilinearForm<S>) -> NormEstimate<S> {
    let spec = SpaceSpec::uniform(form.order(), Exponent::ONE);
    if form.is_zero() {
        return NormEstimate::zero(form, &spec, NormKind::ExactOracle);
    }
    let coeffs = form.coeffs();
    let mut best = 0;
    for (i, c) in coeffs.iter().enumerate() {
        if c.modulus() > coeffs[best].modulus() {
            best = i;
        }
    }
    let index = form.unflatten(best);
    let n = form.dim();
    let last = index.len() - 1;
    let witnesses = index
        .iter()
        .enumerate()
        .map(|(slot, &j)| {
            let mut e = vec![S::zero(); n];
            e[j] = if slot == last {
                coeffs[best].phase().conj()
            } else {
                S::one()
            };
            e
        })
        .collect();
    NormEstimate::oracle(NormMethod::L1Vertices, coeffs[best].modulus(), witnesses)
}

const GRAM_TOL: f64 = 1e-12;
const GRAM_MAX_ITERS: usize = 10_000;

/// Exact norm of a bilinear form on `l_2^n × l_2^n`: the largest singular
/// value of the coefficient matrix. The top eigenvector of the Gram matrix
/// from a dense eigensolver seeds power iteration on the Gram map, which is
/// run to a relative fixed-point tolerance of `1e-12`.
pub fn exact_norm_bilinear_l2<S: Scalar>(form: &MultilinearForm<S>) -> Result<NormEstimate<S>> {
    if form.order() != 2 {
        return Err(Error::UnsupportedOracle(format!(
            "spectral oracle needs a bilinear form, got order {}",
            form.order()
        )));
    }
    if form.is_zero() {
        return Ok(NormEstimate::zero(
            form,
            &SpaceSpec::uniform(2, Exponent::TWO),
            NormKind::ExactOracle,
        ));
    }
    let n = form.dim();
    let a = form.coeffs();
    let apply = |v: &[S]| -> Vec<S> {
        a.chunks_exact(n)
            .map(|row| row.iter().zip(v).fold(S::zero(), |acc, (&x, &y)| acc + x * y))
            .collect()
    };
    // (A^H u)_k = Σ_j conj(a_jk) u_j
    let apply_adjoint = |u: &[S]| -> Vec<S> {
        let mut out = vec![S::zero(); n];
        for (row, &uj) in a.chunks_exact(n).zip(u) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x.conj() * uj;
            }
        }
        out
    };
    let normalize = |v: Vec<S>| -> Vec<S> {
        let norm = lp_norm(&v, Exponent::TWO);
        v.into_iter().map(|x| x.scale(1.0 / norm)).collect()
    };

    let (_, mut v) = S::gram_top_eigenpair(a, n);
    let mut sigma = lp_norm(&apply(&v), Exponent::TWO);
    if sigma == 0.0 {
        // numerically null eigenvector; fall back to the largest row
        let mut best = 0;
        for j in 0..n {
            if lp_norm(&a[j * n..(j + 1) * n], Exponent::TWO) > lp_norm(&a[best * n..(best + 1) * n], Exponent::TWO) {
                best = j;
            }
        }
        v = normalize(a[best * n..(best + 1) * n].iter().map(|x| x.conj()).collect());
        sigma = lp_norm(&apply(&v), Exponent::TWO);
    }
    for _ in 0..GRAM_MAX_ITERS {
        let next = apply_adjoint(&apply(&v));
        let next_norm = lp_norm(&next, Exponent::TWO);
        if next_norm == 0.0 {
            break;
        }
        let candidate = normalize(next);
        let candidate_sigma = lp_norm(&apply(&candidate), Exponent::TWO);
        if candidate_sigma < sigma {
            break;
        }
        let gain = candidate_sigma - sigma;
        v = candidate;
        sigma = candidate_sigma;
        if gain <= GRAM_TOL * sigma {
            break;
        }
    }
    // T(x, y) = x^T A y, so x = conj(A v / σ) pairs to σ
    let av = apply(&v);
    let x: Vec<S> = av.iter().map(|z| z.scale(1.0 / sigma).conj()).collect();
    Ok(NormEstimate::oracle(NormMethod::BilinearSpectral, sigma, vec![x, v]))
}

/// Exact norm of a real form on `l_∞^n × … × l_∞^n` by enumerating sign
/// vectors. Only the first `m - 1` slots are enumerated; the last slot is
/// solved in closed form (`‖c‖_1`), and the first sign is fixed by symmetry.
pub fn exact_norm_linf_real(form: &MultilinearForm<f64>) -> Result<NormEstimate<f64>> {
    let (m, n) = (form.order(), form.dim());
    if n * m > LINF_ENUMERATION_LIMIT {
        return Err(Error::Capacity(format!(
            "sign enumeration needs n*m <= {LINF_ENUMERATION_LIMIT}, got {}",
            n * m
        )));
    }
    let spec = SpaceSpec::uniform(m, Exponent::Infinite);
    if form.is_zero() {
        return Ok(NormEstimate::zero(form, &spec, NormKind::ExactOracle));
    }
    let free_bits = n * (m - 1);
    let combos: u64 = if free_bits == 0 { 1 } else { 1u64 << (free_bits - 1) };
    let signs_of = |mask: u64| -> Vec<Vec<f64>> {
        let mut xs: Vec<Vec<f64>> = (0..m - 1)
            .map(|slot| {
                (0..n)
                    .map(|j| {
                        let bit = slot * n + j;
                        // bit 0 is pinned to +1
                        if bit > 0 && (mask >> (bit - 1)) & 1 == 1 {
                            -1.0
                        } else {
                            1.0
                        }
                    })
                    .collect()
            })
            .collect();
        xs.push(vec![0.0; n]);
        xs
    };
    let mut best_value = -1.0;
    let mut best_mask = 0;
    for mask in 0..combos {
        let xs = signs_of(mask);
        let c = form.contract_except_unchecked(m - 1, &xs);
        let value: f64 = c.iter().map(|v| v.abs()).sum();
        if value > best_value {
            best_value = value;
            best_mask = mask;
        }
    }
    let mut witnesses = signs_of(best_mask);
    let c = form.contract_except_unchecked(m - 1, &witnesses);
    witnesses[m - 1] = c.iter().map(|v| v.phase()).collect();
    Ok(NormEstimate::oracle(NormMethod::LinfSigns, best_value, witnesses))
}

/// Routes to an exact oracle when one applies, otherwise to the ascent.
pub fn best_available_norm<S: Scalar>(
    form: &MultilinearForm<S>,
    spec: &SpaceSpec,
    budget: &AscentConfig,
) -> Result<NormEstimate<S>> {
    check_spec(form, spec)?;
    match spec.common() {
        Some(p) if p.is_one() => return Ok(exact_norm_l1(form)),
        Some(p) if p == Exponent::TWO && form.order() == 2 => return exact_norm_bilinear_l2(form),
        Some(Exponent::Infinite) if form.dim() * form.order() <= LINF_ENUMERATION_LIMIT => {
            if let Some(real) = (form as &dyn Any).downcast_ref::<MultilinearForm<f64>>() {
                let est = exact_norm_linf_real(real)?;
                return Ok(NormEstimate {
                    witnesses: est
                        .witnesses
                        .iter()
                        .map(|w| w.iter().map(|&v| S::from_real(v)).collect())
                        .collect(),
                    value: est.value,
                    kind: est.kind,
                    method: est.method,
                    sweeps: 0,
                    starts_used: 0,
                    degenerate: est.degenerate,
                    traces: Vec::new(),
                });
            }
        }
        _ => {}
    }
    alternating_ascent(form, spec, budget)
}
