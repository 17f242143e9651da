use diagsum::constants::{best_constant, theorem1_exponent, ConstantQuery, Regime};
use diagsum::forms::{random_form, Distribution, MultilinearForm, SpaceSpec};
use diagsum::spaces::{dual_exponent, functional_norm_and_maximizer, lp_norm, pair, Exponent, Rational};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        Just(Exponent::ONE),
        Just(Exponent::Infinite),
        (1i64..40, 1i64..12).prop_filter_map("p >= 1", |(a, b)| Exponent::new(Rational::new(a.max(b), b)).ok()),
    ]
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, n)
}

proptest! {
    #[test]
    fn dual_exponent_is_an_involution(p in exponent()) {
        prop_assert_eq!(dual_exponent(dual_exponent(p)), p);
        prop_assert_eq!(p.reciprocal() + dual_exponent(p).reciprocal(), Rational::from_integer(1));
    }

    #[test]
    fn maximizer_pairs_to_the_dual_norm(c in (1usize..9).prop_flat_map(vector), p in exponent()) {
        prop_assume!(c.iter().any(|v| *v != 0.0));
        let r = functional_norm_and_maximizer(&c, p);
        prop_assert!((pair(&c, &r.maximizer) - r.norm).abs() <= 1e-12 * r.norm);
        prop_assert!((lp_norm(&r.maximizer, p) - 1.0).abs() <= 1e-12);
        prop_assert!((r.norm - lp_norm(&c, dual_exponent(p))).abs() <= 1e-12 * r.norm);
    }

    #[test]
    fn diagonal_sum_is_nonincreasing_in_s(seed in any::<u64>(), s1 in 0.1f64..6.0, ds in 0.0f64..6.0) {
        let t = random_form::<f64>(2, 5, seed, Distribution::Gaussian).unwrap();
        let a = t.diagonal_s_sum(s1).unwrap();
        let b = t.diagonal_s_sum(s1 + ds).unwrap();
        prop_assert!(b <= a * (1.0 + 1e-12));
    }

    #[test]
    fn evaluation_is_linear_in_each_slot(
        seed in any::<u64>(),
        m in 1usize..4,
        n in 1usize..5,
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
    ) {
        let t = random_form::<f64>(m, n, seed, Distribution::Gaussian).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
        let mut gauss = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.sample(StandardNormal)).collect() };
        let xs: Vec<Vec<f64>> = (0..m).map(|_| gauss(n)).collect();
        let u = gauss(n);
        let v = gauss(n);
        for slot in 0..m {
            let with = |w: &[f64]| {
                let mut ys = xs.clone();
                ys[slot] = w.to_vec();
                t.evaluate(&ys).unwrap()
            };
            let combo: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = with(&combo);
            let rhs = alpha * with(&u) + beta * with(&v);
            let scale = 1.0 + lhs.abs().max(rhs.abs());
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale * (n as f64).powi(m as i32));
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact(seed in any::<u64>(), m in 1usize..4, n in 1usize..5, e in -300i32..300) {
        let t = random_form::<f64>(m, n, seed, Distribution::Gaussian).unwrap().map_coeffs(|c| c * 10f64.powi(e));
        let back = MultilinearForm::<f64>::from_json(&t.to_json().unwrap()).unwrap();
        prop_assert!(t.coeffs().iter().zip(back.coeffs()).all(|(a, b)| a.to_bits() == b.to_bits()));
        let z = random_form::<Complex64>(m, n, seed, Distribution::Gaussian).unwrap();
        let zb = MultilinearForm::<Complex64>::from_json(&z.to_json().unwrap()).unwrap();
        prop_assert!(z.coeffs().iter().zip(zb.coeffs()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
    }

    #[test]
    fn best_constant_monotonicity(
        ps in prop::collection::vec(exponent(), 2..4),
        bump in 0usize..3,
        s_num in 1i64..12,
        s_den in 1i64..6,
        n in 1usize..40,
    ) {
        let m = ps.len();
        let s = Rational::new(s_num, s_den);
        let spec = SpaceSpec::new(ps.clone()).unwrap();
        let c = best_constant(&ConstantQuery::new(m, n, spec.clone(), s).unwrap());
        let c_next = best_constant(&ConstantQuery::new(m, n + 1, spec, s).unwrap());
        prop_assert!(c_next.value() >= c.value());
        // raising one exponent never raises the constant
        let mut larger = ps.clone();
        let i = bump % m;
        larger[i] = match larger[i] {
            Exponent::Finite(p) => Exponent::Finite(p + Rational::new(1, 2)),
            Exponent::Infinite => Exponent::Infinite,
        };
        let c_larger = best_constant(&ConstantQuery::new(m, n, SpaceSpec::new(larger).unwrap(), s).unwrap());
        prop_assert!(c_larger.value() <= c.value());
    }

    #[test]
    fn branches_agree_on_the_boundary(m in 1usize..5, n in 1usize..50, s_num in 1i64..9, s_den in 1i64..4) {
        // Σ 1/p_i = 1 exactly with p_i = m
        let spec = SpaceSpec::uniform(m, Exponent::integer(m as i64).unwrap());
        let s = Rational::new(s_num, s_den);
        let c = best_constant(&ConstantQuery::new(m, n, spec, s).unwrap());
        prop_assert_eq!(c.tag.regime, Regime::T2a);
        let second_branch = Rational::from_integer(1) + s.recip() - Rational::from_integer(1);
        prop_assert_eq!(c.tag.exponent_of_n, second_branch);
    }

    #[test]
    fn equal_exponents_reduce_to_the_first_regime(m in 2usize..5, extra in 1i64..20, den in 1i64..4, s_num in 4i64..20, n in 1usize..33) {
        let p = Exponent::new(Rational::from_integer(m as i64) + Rational::new(extra, den)).unwrap();
        let s = Rational::new(s_num, 4);
        let tag = theorem1_exponent(m, p, s).unwrap();
        let c = best_constant(&ConstantQuery::new(m, n, SpaceSpec::uniform(m, p), s).unwrap());
        prop_assert_eq!(tag.exponent_of_n, c.tag.exponent_of_n);
    }
}

#[test]
fn maximizer_beats_random_unit_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for p in ["1", "5/4", "2", "3", "inf"] {
        let p: Exponent = p.parse().unwrap();
        for trial in 0..5 {
            let c: Vec<f64> = (0..4 + trial).map(|_| rng.sample(StandardNormal)).collect();
            let best = functional_norm_and_maximizer(&c, p).norm;
            for _ in 0..1000 {
                let y: Vec<f64> = (0..c.len()).map(|_| rng.sample(StandardNormal)).collect();
                let norm = lp_norm(&y, p);
                let y: Vec<f64> = y.iter().map(|v| v / norm).collect();
                assert!(pair(&c, &y) <= best + 1e-10);
            }
        }
    }
}
