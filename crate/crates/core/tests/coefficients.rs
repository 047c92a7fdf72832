use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use superharm_core::coefficients::{
    a_coefficients, a_coefficients_exact, check_power_rule_identity, gamma_coefficient, power_rule_sum,
    power_rule_sum_exact, riesz_constant, sign_ledger, Sign,
};
use superharm_core::StableIndex;

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

#[test]
fn power_rule_identity_is_exact_for_small_orders() {
    for m in 3..=6 {
        let idx = StableIndex::from_m(m).unwrap();
        for q in 0..=8u32 {
            for k in 0..=q {
                let got = check_power_rule_identity(q, k, &idx).unwrap();
                let expected = if k < q { 0 } else { (1..=q as i64).product::<i64>() };
                assert_eq!(got, BigRational::from_integer(BigInt::from(expected)), "m={m} q={q} k={k}");
            }
        }
    }
}

#[test]
fn exact_power_rule_beyond_k_equal_q_is_falling_factorial() {
    // k!/(k-q)! for k > q follows from the same derivation.
    for m in [3u32, 5] {
        for q in 0..=5u32 {
            for k in q..=q + 4 {
                let expected: i64 = ((k - q + 1)..=k).map(i64::from).product();
                assert_eq!(power_rule_sum_exact(q, k, m), BigRational::from_integer(BigInt::from(expected)));
            }
        }
    }
}

#[test]
fn exact_coefficients_agree_with_floating_point() {
    for m in 3..=6u32 {
        let idx = StableIndex::from_m(m).unwrap();
        for q in 0..=8 {
            let exact = a_coefficients_exact(q, m);
            let float = a_coefficients(q, &idx);
            for (e, f) in exact.iter().zip(&float) {
                let e: f64 = e.to_string().parse().unwrap();
                assert!((e - f).abs() <= 1e-12 * e.abs().max(1.0), "m={m} q={q}: {e} vs {f}");
            }
        }
    }
}

#[test]
fn power_rule_identity_holds_for_random_indices() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let alpha: f64 = rng.random_range(0.01..1.0);
        for q in 0..=8u32 {
            let qf = factorial(q);
            for k in 0..q {
                let v = power_rule_sum(q, k, alpha);
                assert!(v.abs() <= 1e-10 * qf, "alpha={alpha} q={q} k={k}: {v}");
            }
            let v = power_rule_sum(q, q, alpha);
            assert!((v / qf - 1.0).abs() <= 1e-12, "alpha={alpha} q={q}: {v}");
        }
    }
}

/// `∫_0^∞ (1 - J₀(r)) r^{-2} dr` by composite Simpson on `[0, R]` plus the
/// `1/R` tail; `libm::j0` is the Bessel oracle.
fn planar_symbol_integral() -> f64 {
    let r_max = 4000.0;
    let n = 800_000;
    let h = r_max / n as f64;
    let f = |r: f64| if r == 0.0 { 0.25 } else { (1.0 - libm::j0(r)) / (r * r) };
    let mut s = f(0.0) + f(r_max);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    s * h / 3.0 + 1.0 / r_max
}

#[test]
fn planar_riesz_constant_normalises_the_symbol() {
    // c_{2,1} ∫_{R²} (1 - cos y₁) |y|^{-3} dy = 1, and the integral is 2π ∫ (1 - J₀(r)) r^{-2} dr.
    let idx = StableIndex::new(1.0).unwrap();
    let c = riesz_constant(2, &idx).unwrap();
    let integral = 2.0 * PI * planar_symbol_integral();
    assert!((c * integral - 1.0).abs() < 1e-6, "{}", c * integral);
}

#[test]
fn line_riesz_constant_normalises_the_symbol() {
    // c_{1,α} · 2 ∫_0^∞ (1 - cos y) y^{-1-α} dy = 1, and for α < 1 the
    // integral is Γ(1-α) cos(πα/2) / α.
    for &alpha in &[0.25, 0.5, 2.0 / 3.0, 0.9] {
        let idx = StableIndex::new(alpha).unwrap();
        let c = riesz_constant(1, &idx).unwrap();
        let g = libm::tgamma(1.0 - alpha) * (PI * alpha / 2.0).cos() / alpha;
        assert!((c * 2.0 * g - 1.0).abs() < 1e-13, "alpha={alpha}");
    }
}

#[test]
fn sign_ledger_is_nonpositive_for_theorem_indices() {
    for m in 3..=10 {
        let ledger = sign_ledger(m).unwrap();
        assert_eq!(ledger.len(), m as usize);
        assert_eq!(ledger[0].sign, Sign::Zero);
        assert_eq!(ledger[0].value, 0.0);
        assert!(ledger[1..].iter().all(|e| e.sign == Sign::Negative), "m={m}");
    }
}

proptest! {
    #[test]
    fn a_coefficients_shape(alpha in 0.01f64..1.99, q in 0u32..10) {
        let idx = StableIndex::new(alpha).unwrap();
        let a = a_coefficients(q, &idx);
        prop_assert_eq!(a.len(), q as usize + 1);
        let top = (-2.0 / alpha).powi(q as i32);
        prop_assert!((a[q as usize] - top).abs() <= 1e-12 * top.abs());
    }

    #[test]
    fn gamma_ratio_follows_log_gamma(alpha in 0.05f64..0.95, k in 1u32..40) {
        let idx = StableIndex::new(alpha).unwrap();
        let b = alpha / 2.0;
        let (g0, g1) = (gamma_coefficient(k, &idx), gamma_coefficient(k + 1, &idx));
        let s0 = (PI * f64::from(k) * b).sin();
        let s1 = (PI * f64::from(k + 1) * b).sin();
        prop_assume!(s0.abs() > 1e-3 && s1.abs() > 1e-3);
        let kf = f64::from(k);
        let ln_ratio = libm::lgamma((kf + 1.0) * b + 1.0) - libm::lgamma(kf * b + 1.0) - (kf + 1.0).ln();
        let expected = ln_ratio.exp() * (s1 / s0).abs();
        prop_assert!(((g1 / g0).abs() / expected - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn riesz_constant_is_continuous(alpha in 0.05f64..1.9, d in 1u32..4) {
        let eps = 1e-7;
        let a = riesz_constant(d, &StableIndex::new(alpha).unwrap()).unwrap();
        let b = riesz_constant(d, &StableIndex::new(alpha + eps).unwrap()).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-4 * a);
    }
}
