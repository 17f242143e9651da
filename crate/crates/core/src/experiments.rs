//! Measuring `diagonal_s_sum(T) / ‖T‖` against the exact constants: single
//! ratios, searches for near-extremal forms, batch verification and
//! log-log growth fits.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constants::{best_constant, BestConstant, ConstantQuery, Regime};
use crate::error::{Error, Result};
use crate::exec::derive_seed;
use crate::forms::{entry_count, product_form, random_form, Distribution, FormDocument, MultilinearForm, SpaceSpec};
use crate::normest::{best_available_norm, AscentConfig, NormEstimate, NormKind, NormSummary};
use crate::scalar::{Scalar, ScalarMode};
use crate::spaces::Rational;

/// Violation tolerance when the norm comes from an exact oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-8;
/// Violation tolerance when the norm is only a lower bound.
pub const LOWER_BOUND_TOLERANCE: f64 = 1e-2;
pub const DEFAULT_NGRID: [usize; 5] = [2, 4, 8, 16, 32];

pub fn tolerance_for(kind: NormKind) -> f64 {
    match kind {
        NormKind::ExactOracle => ORACLE_TOLERANCE,
        NormKind::LowerBound => LOWER_BOUND_TOLERANCE,
    }
}

/// `diagonal_s_sum(T, s) / ‖T‖` with the norm from [`best_available_norm`].
pub fn ratio<S: Scalar>(
    form: &MultilinearForm<S>,
    spec: &SpaceSpec,
    s: f64,
    budget: &AscentConfig,
) -> Result<(f64, NormEstimate<S>)> {
    if form.is_zero() {
        return Err(Error::DegenerateForm("the ratio is undefined for T = 0".into()));
    }
    let diag = form.diagonal_s_sum(s)?;
    let est = best_available_norm(form, spec, budget)?;
    if est.value == 0.0 {
        return Err(Error::DegenerateForm("norm estimate vanished".into()));
    }
    Ok((diag / est.value, est))
}

/// Provenance of the form behind a record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormDescriptor {
    Product,
    Random { seed: u64, distribution: Distribution },
    Optimized { seed: u64, steps: usize },
    File(String),
}

impl fmt::Display for FormDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormDescriptor::Product => f.write_str("product"),
            FormDescriptor::Random { seed, distribution } => write!(f, "random({seed},{distribution})"),
            FormDescriptor::Optimized { seed, steps } => write!(f, "optimized({seed},{steps})"),
            FormDescriptor::File(path) => write!(f, "file({path})"),
        }
    }
}

impl FromStr for FormDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unknown form descriptor {s:?}"));
        if s == "product" {
            return Ok(FormDescriptor::Product);
        }
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let body = rest.strip_suffix(')').ok_or_else(bad)?;
        match head {
            "file" => Ok(FormDescriptor::File(body.to_string())),
            "random" | "optimized" => {
                let (seed, tail) = body.split_once(',').ok_or_else(bad)?;
                let seed = seed.parse().map_err(|_| bad())?;
                if head == "random" {
                    Ok(FormDescriptor::Random {
                        seed,
                        distribution: tail.parse()?,
                    })
                } else {
                    Ok(FormDescriptor::Optimized {
                        seed,
                        steps: tail.parse().map_err(|_| bad())?,
                    })
                }
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for FormDescriptor {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FormDescriptor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// One measured instance of the diagonal inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub query: ConstantQuery,
    pub regime: Regime,
    pub theoretical_constant: f64,
    pub measured_ratio: f64,
    pub form: FormDescriptor,
    pub norm: NormSummary,
    pub seed: u64,
    /// Left empty by every builder in this crate so that records stay
    /// byte-reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

pub const CSV_HEADER: [&str; 11] = [
    "m",
    "n",
    "p_list",
    "s",
    "regime",
    "theoretical_constant",
    "measured_ratio",
    "norm_value",
    "norm_kind",
    "form_descriptor",
    "seed",
];

impl ExperimentRecord {
    pub fn new<S: Scalar>(
        query: &ConstantQuery,
        constant: &BestConstant,
        measured_ratio: f64,
        norm: &NormEstimate<S>,
        form: FormDescriptor,
        seed: u64,
    ) -> Self {
        Self {
            query: query.clone(),
            regime: constant.tag.regime,
            theoretical_constant: constant.value(),
            measured_ratio,
            form,
            norm: norm.summary(),
            seed,
            timestamp: None,
        }
    }

    /// `measured_ratio ≤ C (1 + tol)` with the tolerance of the norm kind.
    pub fn within_bound(&self) -> bool {
        self.measured_ratio <= self.theoretical_constant * (1.0 + tolerance_for(self.norm.kind))
    }

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.query.m.to_string(),
            self.query.n.to_string(),
            self.query.exponents.joined(";"),
            crate::spaces::Exponent::Finite(self.query.s).to_string(),
            self.regime.to_string(),
            self.theoretical_constant.to_string(),
            self.measured_ratio.to_string(),
            self.norm.value.to_string(),
            self.norm.kind.to_string(),
            self.form.to_string(),
            self.seed.to_string(),
        ]
    }
}

pub fn write_csv<'a, W: Write>(records: impl IntoIterator<Item = &'a ExperimentRecord>, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in records {
        writer.write_record(r.csv_row())?;
    }
    writer.flush()?;
    Ok(())
}

fn trial_distribution(trial: usize, dim: usize) -> Distribution {
    match trial % 3 {
        0 => Distribution::Gaussian,
        1 => Distribution::UniformSign,
        _ => Distribution::Sparse(dim.max(1)),
    }
}

/// Budget for [`search_best_constant`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBudget {
    pub random_trials: usize,
    pub ascent_steps: usize,
    /// Perturbation scale relative to the largest coefficient modulus.
    pub step_size: f64,
    pub seed: u64,
    /// Norm budget for the final report; the search itself uses a reduced one.
    pub norm: AscentConfig,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            random_trials: 16,
            ascent_steps: 40,
            step_size: 0.2,
            seed: 12345,
            norm: AscentConfig::default(),
        }
    }
}

impl SearchBudget {
    fn inner_norm(&self) -> AscentConfig {
        AscentConfig {
            starts: (self.norm.starts / 4).max(4).min(self.norm.starts),
            tol: self.norm.tol.max(1e-8),
            max_sweeps: self.norm.max_sweeps.min(200),
            ..self.norm
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best_ratio: f64,
    pub record: ExperimentRecord,
    pub accepted_steps: usize,
}

struct Candidate<S> {
    form: MultilinearForm<S>,
    ratio: f64,
    descriptor: FormDescriptor,
}

/// Maximizes the ratio over forms: the product form, seeded random forms,
/// then hill climbing in coefficient space from the best of those. The
/// final answer is re-measured with the full norm budget and is never below
/// the product form's ratio.
pub fn search_best_constant<S: Scalar>(q: &ConstantQuery, budget: &SearchBudget) -> Result<SearchOutcome> {
    if budget.step_size.is_nan() || budget.step_size <= 0.0 {
        return Err(Error::InvalidInput("step_size must be positive".into()));
    }
    let spec = &q.exponents;
    let s = q.s_f64();
    let constant = best_constant(q);
    let inner = budget.inner_norm();
    let full = budget.norm.with_seed(budget.seed);

    let product = product_form::<S>(q.m, q.n)?;
    let (product_ratio, product_est) = ratio(&product, spec, s, &full)?;
    let (product_inner, _) = ratio(&product, spec, s, &inner.with_seed(budget.seed))?;

    let randoms = budget.norm.execution.map_indexed(budget.random_trials, |trial| -> Result<Option<Candidate<S>>> {
        let seed = derive_seed(budget.seed, trial as u64);
        let distribution = trial_distribution(trial, q.n);
        let form = random_form::<S>(q.m, q.n, seed, distribution)?;
        if form.is_zero() {
            return Ok(None);
        }
        let (r, _) = ratio(&form, spec, s, &inner.with_seed(seed))?;
        Ok(Some(Candidate {
            form,
            ratio: r,
            descriptor: FormDescriptor::Random { seed, distribution },
        }))
    });
    let mut best = Candidate {
        form: product.clone(),
        ratio: product_inner,
        descriptor: FormDescriptor::Product,
    };
    for candidate in randoms {
        if let Some(c) = candidate? {
            if c.ratio > best.ratio {
                best = c;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(budget.seed, u64::MAX));
    let mut accepted = 0;
    for step in 0..budget.ascent_steps {
        let scale = budget.step_size * best.form.max_modulus();
        let trial = best.form.map_coeffs(|c| c + S::gaussian(&mut rng).scale(scale));
        if trial.is_zero() {
            continue;
        }
        let norm_seed = derive_seed(budget.seed, (budget.random_trials + step) as u64);
        let (r, _) = ratio(&trial, spec, s, &inner.with_seed(norm_seed))?;
        if r > best.ratio {
            best.form = trial;
            best.ratio = r;
            accepted += 1;
        }
    }
    if accepted > 0 {
        best.descriptor = FormDescriptor::Optimized {
            seed: budget.seed,
            steps: budget.ascent_steps,
        };
    }

    let (final_ratio, final_est, descriptor) = if best.descriptor == FormDescriptor::Product {
        (product_ratio, product_est, FormDescriptor::Product)
    } else {
        let (r, est) = ratio(&best.form, spec, s, &full)?;
        if r > product_ratio {
            (r, est, best.descriptor)
        } else {
            (product_ratio, product_est, FormDescriptor::Product)
        }
    };
    Ok(SearchOutcome {
        best_ratio: final_ratio,
        record: ExperimentRecord::new(q, &constant, final_ratio, &final_est, descriptor, budget.seed),
        accepted_steps: accepted,
    })
}

/// A trial whose ratio exceeded the constant, with what is needed to
/// reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub tolerance: f64,
    pub record: ExperimentRecord,
    pub form: FormDocument,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub query: ConstantQuery,
    pub regime: Regime,
    pub theoretical_constant: f64,
    pub trials: usize,
    pub oracle_trials: usize,
    pub lower_bound_trials: usize,
    pub max_ratio: f64,
    pub violations: usize,
    /// Complex-mode runs are reported but never treated as failures.
    pub informational: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub summary: VerifySummary,
    pub records: Vec<ExperimentRecord>,
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    /// Violations that should fail a run (real scalar mode only).
    pub fn failing(&self) -> bool {
        !self.summary.informational && !self.violations.is_empty()
    }
}

/// Checks the inequality on `trials` seeded random forms.
pub fn verify_inequality<S: Scalar>(
    q: &ConstantQuery,
    trials: usize,
    seed: u64,
    norm: &AscentConfig,
) -> Result<VerifyReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial required".into()));
    }
    let spec = &q.exponents;
    let s = q.s_f64();
    let constant = best_constant(q);
    let outcomes = norm.execution.map_indexed(trials, |trial| -> Result<Option<(ExperimentRecord, Option<Violation>)>> {
        let trial_seed = derive_seed(seed, trial as u64);
        let distribution = trial_distribution(trial, q.n);
        let form = random_form::<S>(q.m, q.n, trial_seed, distribution)?;
        if form.is_zero() {
            return Ok(None);
        }
        let (r, est) = ratio(&form, spec, s, &norm.with_seed(trial_seed))?;
        let record = ExperimentRecord::new(
            q,
            &constant,
            r,
            &est,
            FormDescriptor::Random {
                seed: trial_seed,
                distribution,
            },
            trial_seed,
        );
        let violation = (!record.within_bound()).then(|| Violation {
            trial,
            tolerance: tolerance_for(est.kind),
            record: record.clone(),
            form: FormDocument {
                m: form.order(),
                n: form.dim(),
                scalar_mode: S::MODE,
                coeffs: S::encode(form.coeffs()),
            },
        });
        Ok(Some((record, violation)))
    });

    let mut records = Vec::with_capacity(trials);
    let mut violations = Vec::new();
    for outcome in outcomes {
        if let Some((record, violation)) = outcome? {
            records.push(record);
            violations.extend(violation);
        }
    }
    let oracle_trials = records.iter().filter(|r| r.norm.kind == NormKind::ExactOracle).count();
    let summary = VerifySummary {
        query: q.clone(),
        regime: constant.tag.regime,
        theoretical_constant: constant.value(),
        trials,
        oracle_trials,
        lower_bound_trials: records.len() - oracle_trials,
        max_ratio: records.iter().map(|r| r.measured_ratio).fold(0.0, f64::max),
        violations: violations.len(),
        informational: S::MODE == ScalarMode::Complex,
    };
    Ok(VerifyReport {
        summary,
        records,
        violations,
    })
}

/// Least-squares line through `(ln n, ln value)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual in log space.
    pub residual: f64,
}

impl FitResult {
    /// Two whitespace-separated columns `ln n  ln value`.
    pub fn plot_data(&self) -> String {
        let mut out = format!(
            "# slope {} intercept {} residual {}\n# ln_n\tln_value\n",
            self.slope, self.intercept, self.residual
        );
        for (n, v) in &self.points {
            out.push_str(&format!("{}\t{}\n", n.ln(), v.ln()));
        }
        out
    }
}

pub fn fit_exponent(points: &[(f64, f64)]) -> Result<FitResult> {
    if let Some((n, v)) = points.iter().find(|(n, v)| n.is_nan() || v.is_nan() || *n <= 0.0 || *v <= 0.0) {
        return Err(Error::InvalidFit(format!("non-positive point ({n}, {v})")));
    }
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InvalidFit(format!(
            "need at least 3 distinct n, got {}",
            distinct.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / k;
    let mean_y = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    Ok(FitResult {
        points: points.to_vec(),
        slope,
        intercept,
        residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub records: Vec<ExperimentRecord>,
    pub fit: FitResult,
}

/// Runs [`search_best_constant`] for every `n` in the grid (skipping sizes
/// beyond the storage guard) and fits the growth exponent of the best ratio.
pub fn fit_growth<S: Scalar>(
    m: usize,
    exponents: &SpaceSpec,
    s: Rational,
    ngrid: &[usize],
    budget: &SearchBudget,
) -> Result<GrowthFit> {
    let mut records = Vec::new();
    for &n in ngrid {
        if entry_count(m, n).is_err() {
            continue;
        }
        let q = ConstantQuery::new(m, n, exponents.clone(), s)?;
        let per_n = SearchBudget {
            seed: derive_seed(budget.seed, n as u64),
            ..*budget
        };
        records.push(search_best_constant::<S>(&q, &per_n)?.record);
    }
    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.query.n as f64, r.measured_ratio))
        .collect();
    let fit = fit_exponent(&points)?;
    Ok(GrowthFit { records, fit })
}
