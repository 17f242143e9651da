//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 out-of-regime parameters,
//! 3 inequality violation found by `verify`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{
    best_constant, t1c_gap, theorem1_exponent, zalduendo_exponent, ConstantQuery, PowerOfN, Regime, T1cGap,
};
use crate::error::{Error, Result};
use crate::experiments::{
    fit_growth, search_best_constant, verify_inequality, write_csv, ExperimentRecord, FitResult, SearchBudget,
    SearchOutcome, VerifySummary, Violation, DEFAULT_NGRID,
};
use crate::forms::{product_form, random_form, Distribution, FormDocument, MultilinearForm, SpaceSpec};
use crate::normest::{best_available_norm, AscentConfig, NormReport};
use crate::scalar::{Scalar, ScalarMode};
use crate::spaces::{format_rational, parse_rational, Rational};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_OUT_OF_REGIME: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const DEFAULT_SEED: u64 = 12345;

const GRAMMAR: &str = "\
grammar:
  constant --m INT --n INT --p LIST --s RAT [--theorem1]
  norm     --form {product|random|file PATH} [--seed INT] --m INT --n INT --p LIST [--starts INT --tol REAL --max-sweeps INT]
  verify   --m INT --n INT --p LIST --s RAT --trials INT [--seed INT]
  search   --m INT --n INT --p LIST --s RAT [--trials INT --steps INT --seed INT]
  fit      --m INT --p LIST --s RAT --ngrid LIST [--seed INT]
common: --format {table|json|csv}  --out PATH  --complex  --seed INT (default 12345)";

#[derive(Debug, Parser)]
#[command(name = "diagsum", version, about = "Diagonal-sum constants and norm experiments for multilinear forms on l_p^n")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Complex scalars (informational; never gates exit codes)
    #[arg(long, global = true)]
    complex: bool,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

fn rational_arg(text: &str) -> std::result::Result<Rational, String> {
    parse_rational(text).map_err(|e| e.to_string())
}

fn spec_arg(text: &str) -> std::result::Result<SpaceSpec, String> {
    text.parse().map_err(|e: Error| e.to_string())
}

#[derive(Clone, Debug)]
struct Grid(Vec<usize>);

fn grid_arg(text: &str) -> std::result::Result<Grid, String> {
    text.split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(Grid)
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact best constant and its regime
    Constant {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = spec_arg)]
        p: SpaceSpec,
        #[arg(long, value_parser = rational_arg)]
        s: Rational,
        /// Report the equal-exponent regime exponent instead
        #[arg(long)]
        theorem1: bool,
    },
    /// Estimate the operator norm of a form
    Norm {
        #[arg(long, num_args = 1..=2, value_names = ["KIND", "PATH"], required = true)]
        form: Vec<String>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_parser = spec_arg)]
        p: SpaceSpec,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long = "max-sweeps")]
        max_sweeps: Option<usize>,
    },
    /// Check the inequality on seeded random forms
    Verify {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = spec_arg)]
        p: SpaceSpec,
        #[arg(long, value_parser = rational_arg)]
        s: Rational,
        #[arg(long)]
        trials: usize,
    },
    /// Search for forms with a large diagonal-sum ratio
    Search {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = spec_arg)]
        p: SpaceSpec,
        #[arg(long, value_parser = rational_arg)]
        s: Rational,
        #[arg(long, default_value_t = 16)]
        trials: usize,
        #[arg(long, default_value_t = 40)]
        steps: usize,
    },
    /// Fit the growth exponent of the searched ratio over an n-grid
    Fit {
        #[arg(long)]
        m: usize,
        #[arg(long, value_parser = spec_arg)]
        p: SpaceSpec,
        #[arg(long, value_parser = rational_arg)]
        s: Rational,
        #[arg(long, value_parser = grid_arg)]
        ngrid: Option<Grid>,
        #[arg(long, default_value_t = 16)]
        trials: usize,
        #[arg(long, default_value_t = 40)]
        steps: usize,
        /// Plot file (defaults to `<out>.plot.tsv`, or `diagsum-fit.plot.tsv`)
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. Results go to `stdout` or `--out`; diagnostics to `stderr`.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}\n{GRAMMAR}\n");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::OutOfRegime(_) => EXIT_OUT_OF_REGIME,
                _ => EXIT_USAGE,
            }
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

fn emit(common: &Common, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &common.out {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)? + "\n")
}

fn records_csv<'a>(records: impl IntoIterator<Item = &'a ExperimentRecord>) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn simple_csv(header: &[&str], row: &[String]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    w.write_record(row)?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let common = &cli.common;
    match &cli.command {
        Command::Constant { m, n, p, s, theorem1 } => {
            let out = constant_output(*m, *n, p, *s, *theorem1)?;
            let text = match common.format {
                Format::Json => json_line(&out)?,
                Format::Csv => simple_csv(
                    &["m", "n", "p_list", "s", "regime", "exponent", "constant"],
                    &[
                        out.query.m.to_string(),
                        out.query.n.to_string(),
                        out.query.exponents.joined(";"),
                        format_rational(&out.query.s),
                        out.regime.to_string(),
                        out.exponent.clone(),
                        out.constant_text(),
                    ],
                )?,
                Format::Table => out.table(),
            };
            emit(common, &text, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Norm {
            form,
            m,
            n,
            p,
            starts,
            tol,
            max_sweeps,
        } => {
            let defaults = AscentConfig::default();
            let config = AscentConfig {
                starts: starts.unwrap_or(defaults.starts),
                tol: tol.unwrap_or(defaults.tol),
                max_sweeps: max_sweeps.unwrap_or(defaults.max_sweeps),
                seed: common.seed,
                ..defaults
            };
            let source = FormSource::parse(form, *m, *n, common.seed)?;
            let complex = common.complex || source.is_complex();
            let out = if complex {
                norm_output::<Complex64>(&source, p, &config)?
            } else {
                norm_output::<f64>(&source, p, &config)?
            };
            let text = match common.format {
                Format::Json => json_line(&out)?,
                Format::Csv => simple_csv(
                    &[
                        "m",
                        "n",
                        "p_list",
                        "form_descriptor",
                        "norm_value",
                        "norm_kind",
                        "method",
                        "sweeps",
                        "starts_used",
                    ],
                    &[
                        out.m.to_string(),
                        out.n.to_string(),
                        out.exponents.joined(";"),
                        out.form.clone(),
                        out.estimate.summary.value.to_string(),
                        out.estimate.summary.kind.to_string(),
                        out.estimate.summary.method.to_string(),
                        out.estimate.summary.sweeps.to_string(),
                        out.estimate.summary.starts_used.to_string(),
                    ],
                )?,
                Format::Table => {
                    let s = &out.estimate.summary;
                    format!(
                        "form      {}\nm         {}\nn         {}\np         {}\nscalars   {}\nvalue     {}\nkind      {}\nmethod    {}\nsweeps    {}\nstarts    {}\n",
                        out.form, out.m, out.n, out.exponents, out.scalar_mode, s.value, s.kind, s.method, s.sweeps, s.starts_used
                    )
                }
            };
            emit(common, &text, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Verify { m, n, p, s, trials } => {
            let q = ConstantQuery::new(*m, *n, p.clone(), *s)?;
            let norm = AscentConfig::default();
            let report = if common.complex {
                verify_inequality::<Complex64>(&q, *trials, common.seed, &norm)?
            } else {
                verify_inequality::<f64>(&q, *trials, common.seed, &norm)?
            };
            let text = match common.format {
                Format::Json => {
                    let mut text = String::new();
                    for r in &report.records {
                        text += &json_line(r)?;
                    }
                    text += &json_line(&VerifyTail {
                        summary: report.summary.clone(),
                        violations: report.violations.clone(),
                    })?;
                    text
                }
                Format::Csv => records_csv(&report.records)?,
                Format::Table => verify_table(&report.summary, &report.violations),
            };
            emit(common, &text, stdout)?;
            if report.summary.informational && !report.violations.is_empty() {
                writeln!(
                    stderr,
                    "note: {} complex-mode discrepancies (informational)",
                    report.violations.len()
                )?;
            }
            Ok(if report.failing() { EXIT_VIOLATION } else { EXIT_OK })
        }
        Command::Search {
            m,
            n,
            p,
            s,
            trials,
            steps,
        } => {
            let q = ConstantQuery::new(*m, *n, p.clone(), *s)?;
            let budget = SearchBudget {
                random_trials: *trials,
                ascent_steps: *steps,
                seed: common.seed,
                ..SearchBudget::default()
            };
            let out = if common.complex {
                search_best_constant::<Complex64>(&q, &budget)?
            } else {
                search_best_constant::<f64>(&q, &budget)?
            };
            let text = match common.format {
                Format::Json => json_line(&out)?,
                Format::Csv => records_csv([&out.record])?,
                Format::Table => search_table(&out),
            };
            emit(common, &text, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Fit {
            m,
            p,
            s,
            ngrid,
            trials,
            steps,
            plot,
        } => {
            let grid = ngrid.as_ref().map_or_else(|| DEFAULT_NGRID.to_vec(), |g| g.0.clone());
            let budget = SearchBudget {
                random_trials: *trials,
                ascent_steps: *steps,
                seed: common.seed,
                ..SearchBudget::default()
            };
            let growth = if common.complex {
                fit_growth::<Complex64>(*m, p, *s, &grid, &budget)?
            } else {
                fit_growth::<f64>(*m, p, *s, &grid, &budget)?
            };
            let text = match common.format {
                Format::Json => {
                    let mut text = String::new();
                    for r in &growth.records {
                        text += &json_line(r)?;
                    }
                    text + &json_line(&growth.fit)?
                }
                Format::Csv => records_csv(&growth.records)?,
                Format::Table => fit_table(&growth.records, &growth.fit),
            };
            emit(common, &text, stdout)?;
            let plot_path = plot.clone().unwrap_or_else(|| match &common.out {
                Some(out) => plot_path_for(out),
                None => PathBuf::from("diagsum-fit.plot.tsv"),
            });
            fs::write(&plot_path, growth.fit.plot_data())?;
            writeln!(stderr, "plot data written to {}", plot_path.display())?;
            Ok(EXIT_OK)
        }
    }
}

fn plot_path_for(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".plot.tsv");
    PathBuf::from(name)
}

/// Output of `constant`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantOutput {
    pub query: ConstantQuery,
    pub regime: Regime,
    /// Exponent of `n`, as exact text.
    pub exponent: String,
    pub constant: f64,
    /// Exact value when `n^t` is rational.
    pub exact: Option<String>,
    /// `p/(p-m)` when all exponents equal some finite `p > m`.
    pub zalduendo_exponent: Option<String>,
    /// T1c only: comparison with the exact exponent.
    pub t1c_gap: Option<T1cGap>,
}

impl ConstantOutput {
    fn constant_text(&self) -> String {
        self.exact.clone().unwrap_or_else(|| self.constant.to_string())
    }

    fn table(&self) -> String {
        let mut out = format!(
            "query     m={} n={} p={} s={}\nregime    {}\nexponent  {}\nconstant  {}\n",
            self.query.m,
            self.query.n,
            self.query.exponents,
            format_rational(&self.query.s),
            self.regime,
            self.exponent,
            self.constant_text()
        );
        if let Some(z) = &self.zalduendo_exponent {
            out += &format!("zalduendo p/(p-m) = {z}\n");
        }
        if let Some(g) = &self.t1c_gap {
            out += &format!(
                "upper bound only; exact exponent {} (gap {})\n",
                format_rational(&g.exact),
                format_rational(&g.gap)
            );
        }
        out
    }
}

fn constant_output(m: usize, n: usize, p: &SpaceSpec, s: Rational, theorem1: bool) -> Result<ConstantOutput> {
    let query = ConstantQuery::new(m, n, p.clone(), s)?;
    let zalduendo = p
        .common()
        .and_then(|p| zalduendo_exponent(m, p).ok())
        .map(|z| format_rational(&z));
    let (regime, exponent, gap) = if theorem1 {
        let common = p
            .common()
            .ok_or_else(|| Error::OutOfRegime("equal exponents p_1 = … = p_m required".into()))?;
        let tag = theorem1_exponent(m, common, s)?;
        let gap = if tag.regime == Regime::T1c {
            Some(t1c_gap(m, common, s)?)
        } else {
            None
        };
        (tag.regime, tag.exponent_of_n, gap)
    } else {
        let c = best_constant(&query);
        (c.tag.regime, c.tag.exponent_of_n, None)
    };
    let power = PowerOfN::new(n as u64, exponent);
    Ok(ConstantOutput {
        query,
        regime,
        exponent: format_rational(&exponent),
        constant: power.value(),
        exact: power.exact().map(|r| format_rational(&r)),
        zalduendo_exponent: zalduendo,
        t1c_gap: gap,
    })
}

enum FormSource {
    Product { m: usize, n: usize },
    Random { m: usize, n: usize, seed: u64 },
    File { path: String, doc: FormDocument },
}

impl FormSource {
    fn parse(form: &[String], m: Option<usize>, n: Option<usize>, seed: u64) -> Result<Self> {
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| Error::InvalidInput(format!("--{name} is required for this form")))
        };
        match (form.first().map(String::as_str), form.get(1)) {
            (Some("product"), None) => Ok(FormSource::Product {
                m: need(m, "m")?,
                n: need(n, "n")?,
            }),
            (Some("random"), None) => Ok(FormSource::Random {
                m: need(m, "m")?,
                n: need(n, "n")?,
                seed,
            }),
            (Some("file"), Some(path)) => {
                let doc: FormDocument = serde_json::from_str(&fs::read_to_string(path)?)?;
                for (given, actual, name) in [(m, doc.m, "m"), (n, doc.n, "n")] {
                    if let Some(g) = given {
                        if g != actual {
                            return Err(Error::InvalidInput(format!(
                                "--{name} {g} disagrees with the form file ({actual})"
                            )));
                        }
                    }
                }
                Ok(FormSource::File {
                    path: path.clone(),
                    doc,
                })
            }
            _ => Err(Error::InvalidInput(format!(
                "--form expects product, random or `file PATH`, got {form:?}"
            ))),
        }
    }

    fn is_complex(&self) -> bool {
        matches!(self, FormSource::File { doc, .. } if doc.scalar_mode == ScalarMode::Complex)
    }

    fn build<S: Scalar>(&self) -> Result<(MultilinearForm<S>, String)> {
        Ok(match self {
            FormSource::Product { m, n } => (product_form(*m, *n)?, "product".into()),
            FormSource::Random { m, n, seed } => (
                random_form(*m, *n, *seed, Distribution::Gaussian)?,
                format!("random({seed},{})", Distribution::Gaussian),
            ),
            FormSource::File { path, doc } => {
                let form = if S::MODE == doc.scalar_mode {
                    doc.clone().into_form()?
                } else {
                    // a real file read in complex mode
                    let values = S::decode(doc.coeffs.clone())?;
                    MultilinearForm::new(doc.m, doc.n, values)?
                };
                (form, format!("file({path})"))
            }
        })
    }
}

/// Output of `norm`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormOutput {
    pub m: usize,
    pub n: usize,
    pub exponents: SpaceSpec,
    pub scalar_mode: ScalarMode,
    pub form: String,
    pub estimate: NormReport,
}

fn norm_output<S: Scalar>(source: &FormSource, p: &SpaceSpec, config: &AscentConfig) -> Result<NormOutput> {
    let (form, descriptor) = source.build::<S>()?;
    let est = best_available_norm(&form, p, config)?;
    Ok(NormOutput {
        m: form.order(),
        n: form.dim(),
        exponents: p.clone(),
        scalar_mode: S::MODE,
        form: descriptor,
        estimate: est.report(),
    })
}

/// Last line of `verify --format json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyTail {
    pub summary: VerifySummary,
    pub violations: Vec<Violation>,
}

fn verify_table(summary: &VerifySummary, violations: &[Violation]) -> String {
    let q = &summary.query;
    let mut out = format!(
        "query       m={} n={} p={} s={}\nregime      {}\nconstant    {}\ntrials      {} ({} oracle, {} lower-bound)\nmax ratio   {}\nviolations  {}{}\n",
        q.m,
        q.n,
        q.exponents,
        format_rational(&q.s),
        summary.regime,
        summary.theoretical_constant,
        summary.trials,
        summary.oracle_trials,
        summary.lower_bound_trials,
        summary.max_ratio,
        summary.violations,
        if summary.informational { " (complex mode, informational)" } else { "" }
    );
    for v in violations {
        out += &format!(
            "  trial {}: ratio {} > {} (tol {}), form {}, seed {}\n",
            v.trial, v.record.measured_ratio, v.record.theoretical_constant, v.tolerance, v.record.form, v.record.seed
        );
    }
    out
}

fn search_table(out: &SearchOutcome) -> String {
    let r = &out.record;
    format!(
        "query       m={} n={} p={} s={}\nregime      {}\nconstant    {}\nbest ratio  {}\nform        {}\nnorm        {} ({}, {})\naccepted    {} steps\n",
        r.query.m,
        r.query.n,
        r.query.exponents,
        format_rational(&r.query.s),
        r.regime,
        r.theoretical_constant,
        out.best_ratio,
        r.form,
        r.norm.value,
        r.norm.kind,
        r.norm.method,
        out.accepted_steps
    )
}

fn fit_table(records: &[ExperimentRecord], fit: &FitResult) -> String {
    let mut out = String::from("n\tconstant\tmeasured\tnorm_kind\tform\n");
    for r in records {
        out += &format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.query.n, r.theoretical_constant, r.measured_ratio, r.norm.kind, r.form
        );
    }
    out += &format!(
        "slope {}\nintercept {}\nresidual {}\n",
        fit.slope, fit.intercept, fit.residual
    );
    out
}
