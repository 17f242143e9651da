//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs as a plain binary (`harness = false`).

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use diagsum::constants::{
    best_constant, holder_interpolation_x, inclusion_exponent, optimality_floor, theorem1_exponent,
    zalduendo_exponent, ConstantQuery, Regime,
};
use diagsum::experiments::{fit_exponent, ratio, verify_inequality, FitResult};
use diagsum::forms::{product_form, random_form, Distribution, MultilinearForm, SpaceSpec};
use diagsum::normest::{alternating_ascent, exact_norm_bilinear_l2, exact_norm_l1, AscentConfig, NormKind};
use diagsum::spaces::{rational_to_f64, Exponent, Rational};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)*));
        }
    };
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn exp(s: &str) -> Exponent {
    s.parse().unwrap()
}

fn spec(s: &str) -> SpaceSpec {
    s.parse().unwrap()
}

fn query(m: usize, n: usize, ps: &str, s: Rational) -> ConstantQuery {
    ConstantQuery::new(m, n, spec(ps), s).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn formula_goldens() -> Outcome {
    let constants = [
        (query(2, 9, "2,2", r(2, 1)), r(3, 1)),
        (query(2, 16, "4,4", r(2, 1)), r(1, 1)),
        (query(2, 16, "4,4", r(1, 1)), r(4, 1)),
    ];
    for (q, expected) in &constants {
        let c = best_constant(q);
        ensure!(c.constant.exact() == Some(*expected), "{q:?}: exact {:?}", c.constant.exact());
        // float route: exp(t ln n)
        let float = (rational_to_f64(c.tag.exponent_of_n) * (q.n as f64).ln()).exp();
        ensure!((float - rational_to_f64(*expected)).abs() <= 1e-12, "{q:?}: float {float}");
    }
    let t1 = [
        (2, "4", r(1, 1), Regime::T1a, r(1, 2)),
        (3, "2", r(5, 1), Regime::T1b, r(0, 1)),
        (2, "3/2", r(1, 1), Regime::T1c, r(4, 3)),
    ];
    for (m, p, s, regime, t) in t1 {
        let tag = theorem1_exponent(m, exp(p), s).map_err(|e| e.to_string())?;
        ensure!(tag.regime == regime && tag.exponent_of_n == t, "theorem1({m},{p},{s}) = {tag:?}");
    }
    let z = zalduendo_exponent(2, exp("4")).map_err(|e| e.to_string())?;
    ensure!(z == r(2, 1), "zalduendo(2,4) = {z}");
    Ok("3 constants, 3 regime exponents, Zalduendo exponent".into())
}

fn regime_consistency() -> Outcome {
    let mut checked = 0;
    for m in 2..=4usize {
        let mi = m as i64;
        for pv in [mi + 1, mi + 2, 2 * mi] {
            let p = Exponent::integer(pv).unwrap();
            let zal = r(pv, pv - mi);
            for s in [r(1, 1), r(3, 2), r(2, 1), zal] {
                let tag = theorem1_exponent(m, p, s).map_err(|e| e.to_string())?;
                ensure!(tag.regime == Regime::T1a, "regime {tag:?}");
                if s == zal {
                    ensure!(tag.exponent_of_n == r(0, 1), "s = p/(p-m) gives {}", tag.exponent_of_n);
                }
                if s <= zal {
                    let floor = optimality_floor(m, p, s).map_err(|e| e.to_string())?;
                    ensure!(floor == tag.exponent_of_n, "floor {floor} vs {}", tag.exponent_of_n);
                } else {
                    ensure!(tag.exponent_of_n == r(0, 1), "inactive branch should vanish");
                }
                for n in 1..=32 {
                    let c = best_constant(&ConstantQuery::new(m, n, SpaceSpec::uniform(m, p), s).unwrap());
                    ensure!(
                        c.tag.exponent_of_n == tag.exponent_of_n && c.constant.n == n as u64,
                        "m={m} p={pv} s={s} n={n}: {} vs {}",
                        c.tag.exponent_of_n,
                        tag.exponent_of_n
                    );
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} (m, p, s, n) points agree exactly"))
}

/// Evaluates a form on vectors by summing over the cartesian product of
/// their supports.
fn support_eval(form: &MultilinearForm, xs: &[Vec<f64>]) -> f64 {
    let supports: Vec<Vec<usize>> = xs
        .iter()
        .map(|x| (0..x.len()).filter(|&j| x[j] != 0.0).collect())
        .collect();
    let mut total = 0.0;
    let mut cursor = vec![0usize; xs.len()];
    if supports.iter().any(Vec::is_empty) {
        return 0.0;
    }
    loop {
        let index: Vec<usize> = cursor.iter().zip(&supports).map(|(&c, s)| s[c]).collect();
        let mut term = form.get(&index);
        for (x, &j) in xs.iter().zip(&index) {
            term *= x[j];
        }
        total += term;
        let mut slot = xs.len();
        loop {
            if slot == 0 {
                return total;
            }
            slot -= 1;
            cursor[slot] += 1;
            if cursor[slot] < supports[slot].len() {
                break;
            }
            cursor[slot] = 0;
        }
    }
}

/// Maximum of |T| over all tuples of signed basis vectors.
fn l1_vertex_bruteforce(form: &MultilinearForm) -> f64 {
    let (m, n) = (form.order(), form.dim());
    let vertices: Vec<Vec<f64>> = (0..2 * n)
        .map(|v| {
            let mut e = vec![0.0; n];
            e[v / 2] = if v % 2 == 0 { 1.0 } else { -1.0 };
            e
        })
        .collect();
    let total = (2 * n).pow(m as u32);
    let mut best: f64 = 0.0;
    for code in 0..total {
        let mut c = code;
        let xs: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let v = vertices[c % (2 * n)].clone();
                c /= 2 * n;
                v
            })
            .collect();
        best = best.max(support_eval(form, &xs).abs());
    }
    best
}

fn norm_engine_equivalence() -> Outcome {
    let cfg = AscentConfig {
        starts: 32,
        tol: 1e-12,
        max_sweeps: 200,
        ..AscentConfig::default()
    };
    let mut worst: f64 = 0.0;
    for i in 0..200u64 {
        let n = 1 + (i % 6) as usize;
        let t = random_form::<f64>(2, n, 1000 + i, Distribution::Gaussian).unwrap();
        let oracle = exact_norm_bilinear_l2(&t).map_err(|e| e.to_string())?;
        let est = alternating_ascent(&t, &spec("2,2"), &cfg.with_seed(i)).map_err(|e| e.to_string())?;
        let gap = rel(est.value, oracle.value);
        worst = worst.max(gap);
        ensure!(gap <= 1e-6, "form {i} (n={n}): ascent {} vs oracle {}", est.value, oracle.value);
        for trace in &est.traces {
            ensure!(trace.windows(2).all(|w| w[1] >= w[0]), "non-monotone trace on form {i}");
        }
    }
    let shapes: Vec<(usize, usize)> = (1..=3usize)
        .flat_map(|m| (1..=64usize).filter(move |n| n.pow(m as u32) <= 4096).map(move |n| (m, n)))
        .collect();
    for i in 0..200u64 {
        let (m, n) = shapes[(i as usize * 7) % shapes.len()];
        let dist = if i % 2 == 0 { Distribution::Gaussian } else { Distribution::UniformSign };
        let t = random_form::<f64>(m, n, 5000 + i, dist).unwrap();
        let oracle = exact_norm_l1(&t).value;
        let brute = l1_vertex_bruteforce(&t);
        ensure!(oracle == brute, "l1 oracle {oracle} vs enumeration {brute} (m={m}, n={n})");
    }
    Ok(format!("worst ascent/spectral gap {worst:.2e}; 200 l1 forms exact"))
}

fn extremal_attainment() -> Outcome {
    let cfg = AscentConfig::default();
    let mut checked = 0;
    for n in 1..=32 {
        for s in [r(1, 2), r(1, 1), r(2, 1)] {
            let q = query(2, n, "1,1", s);
            let (v, est) = ratio(&product_form::<f64>(2, n).unwrap(), &q.exponents, q.s_f64(), &cfg)
                .map_err(|e| e.to_string())?;
            ensure!(est.kind == NormKind::ExactOracle, "expected oracle");
            ensure!(rel(v, best_constant(&q).value()) <= 1e-6, "l1 n={n} s={s}: {v}");
            checked += 1;
        }
    }
    for n in 1..=6 {
        for s in [r(1, 1), r(2, 1), r(3, 1)] {
            let q = query(2, n, "2,2", s);
            let (v, est) = ratio(&product_form::<f64>(2, n).unwrap(), &q.exponents, q.s_f64(), &cfg)
                .map_err(|e| e.to_string())?;
            ensure!(est.kind == NormKind::ExactOracle, "expected oracle");
            ensure!(rel(v, best_constant(&q).value()) <= 1e-6, "l2 n={n} s={s}: {v}");
            checked += 1;
        }
    }
    for (m, n, p) in [(2usize, 2usize, "4"), (2, 4, "3"), (3, 3, "6")] {
        let q = ConstantQuery::new(m, n, SpaceSpec::uniform(m, exp(p)), r(1, 1)).unwrap();
        let (v, est) = ratio(&product_form::<f64>(m, n).unwrap(), &q.exponents, 1.0, &cfg).map_err(|e| e.to_string())?;
        ensure!(est.kind == NormKind::LowerBound, "expected ascent");
        let c = best_constant(&q).value();
        ensure!(rel(v, c) <= 1e-4, "ascent (m={m}, n={n}, p={p}): ratio {v} vs constant {c}");
        checked += 1;
    }
    Ok(format!("{checked} product-form ratios match the constants"))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_diagsum")
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin()).args(args).output().expect("run diagsum");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn inequality_never_violated() -> Outcome {
    let cfg = AscentConfig::default();
    let configs = [
        query(2, 4, "1,1", r(1, 1)),
        query(2, 4, "2,2", r(2, 1)),
        query(3, 3, "1,1,1", r(1, 2)),
        query(2, 4, "4,4", r(2, 1)),
    ];
    let mut notes = Vec::new();
    for q in &configs {
        let report = verify_inequality::<f64>(q, 1000, 12345, &cfg).map_err(|e| e.to_string())?;
        ensure!(
            report.summary.violations == 0,
            "{q:?}: {} violations, max ratio {}",
            report.summary.violations,
            report.summary.max_ratio
        );
        notes.push(format!("{:.4}/{:.4}", report.summary.max_ratio, report.summary.theoretical_constant));
    }
    let (code, out, err) = run_cli(&["verify", "--m", "2", "--n", "4", "--p", "1,1", "--s", "1", "--trials", "100"]);
    ensure!(code == 0, "CLI verify exit {code}: {err}");
    ensure!(out.contains("violations  0"), "CLI output: {out}");
    Ok(format!("4000 trials, max ratio/constant {}; CLI exit 0", notes.join(", ")))
}

fn cli_fit(dir: &Path, name: &str, ps: &str, grid: &str) -> Result<FitResult, String> {
    let out = dir.join(name);
    let out_s = out.to_str().unwrap();
    let (code, _, err) = run_cli(&[
        "fit", "--m", "2", "--p", ps, "--s", "1", "--ngrid", grid, "--format", "json", "--out", out_s,
    ]);
    ensure!(code == 0, "fit exit {code}: {err}");
    let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    let last = text.lines().last().ok_or("empty fit output")?;
    let fit: FitResult = serde_json::from_str(last).map_err(|e| e.to_string())?;
    ensure!(dir.join(format!("{name}.plot.tsv")).exists(), "plot file missing");
    Ok(fit)
}

fn growth_exponent_fit() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let l1 = cli_fit(dir.path(), "l1.json", "1,1", "2,4,8,16,32")?;
    ensure!((l1.slope - 1.0).abs() <= 0.05, "l1 slope {}", l1.slope);
    let l4 = cli_fit(dir.path(), "l4.json", "4,4", "2,4,8,16")?;
    ensure!((l4.slope - 0.5).abs() <= 0.1, "l4 slope {}", l4.slope);
    // the fitter itself on exact power-law data
    let exact = fit_exponent(&[(2.0, 2f64.powf(0.5)), (4.0, 2.0), (8.0, 8f64.powf(0.5))]).map_err(|e| e.to_string())?;
    ensure!(exact.residual <= 1e-12, "exact residual {}", exact.residual);
    Ok(format!(
        "slope {:.4} (residual {:.1e}) and {:.4} (residual {:.1e})",
        l1.slope, l1.residual, l4.slope, l4.residual
    ))
}

fn proof_side_exponents() -> Outcome {
    let x = holder_interpolation_x(r(1, 1), exp("4"), 2).map_err(|e| e.to_string())?;
    ensure!(x == exp("2"), "holder x = {x}");
    let mut checked = 0;
    for m in [2usize, 3] {
        for s in [r(2, m as i64), r(1, 1), r(2, 1)] {
            for p in ["5/4", "3/2", "7/4"] {
                let (value, below) = inclusion_exponent(s, m, exp(p)).map_err(|e| e.to_string())?;
                ensure!(below, "2sm/(sm+2) = {value} not below p* for s={s} m={m} p={p}");
                checked += 1;
            }
        }
    }
    Ok(format!("holder x = 2; inclusion flag true on {checked} grid points"))
}

fn determinism_and_io() -> Outcome {
    let runs: [&[&str]; 4] = [
        &["verify", "--m", "2", "--n", "3", "--p", "3,3", "--s", "3/2", "--trials", "20", "--seed", "99", "--format", "json"],
        &["verify", "--m", "2", "--n", "3", "--p", "3,3", "--s", "3/2", "--trials", "20", "--seed", "99", "--format", "csv"],
        &["search", "--m", "2", "--n", "3", "--p", "4,4", "--s", "1", "--trials", "4", "--steps", "8", "--format", "json"],
        &["norm", "--form", "random", "--m", "3", "--n", "3", "--p", "3,4,5", "--format", "json"],
    ];
    for args in runs {
        let (c1, a, _) = run_cli(args);
        let (c2, b, _) = run_cli(args);
        ensure!(c1 == 0 && c2 == 0, "{args:?} exit codes {c1}, {c2}");
        ensure!(!a.is_empty() && a == b, "{args:?} differs between runs");
    }
    let mut forms = Vec::new();
    for seed in 0..20u64 {
        let t = random_form::<f64>(1 + (seed % 3) as usize, 3, seed, Distribution::Gaussian).unwrap();
        forms.push(t.map_coeffs(|c| c * 10f64.powi((seed as i32 % 7) * 40 - 120)));
    }
    forms.push(MultilinearForm::new(1, 4, vec![f64::MIN_POSITIVE, -0.0, f64::MAX, 1.0 / 3.0]).unwrap());
    for t in &forms {
        let back = MultilinearForm::<f64>::from_json(&t.to_json().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let same = t.coeffs().iter().zip(back.coeffs()).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure!(same && back.order() == t.order() && back.dim() == t.dim(), "round trip changed bits");
    }
    Ok(format!("4 CLI invocations byte-identical; {} tensors round-trip bit-exactly", forms.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 formula goldens", formula_goldens),
        ("2 regime consistency", regime_consistency),
        ("3 norm-engine oracle equivalence", norm_engine_equivalence),
        ("4 extremal attainment", extremal_attainment),
        ("5 inequality never violated", inequality_never_violated),
        ("6 growth-exponent fit", growth_exponent_fit),
        ("7 proof-side exponents", proof_side_exponents),
        ("8 determinism and I/O", determinism_and_io),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
