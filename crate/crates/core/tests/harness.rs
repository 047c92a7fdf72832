use std::f64::consts::PI;

use superharm_core::eigen::{smallest_eigenpair, DiscreteFracLap, EigenPair, Grid1D};
use superharm_core::extrapolate::richardson;
use superharm_core::harness::{
    build_r1, concavity_check, identity_study, limit_formula, ptr1_dt_q, run_full_verification, superharmonicity_check,
    theorem_identity_check, FieldSpec, RemainderField, VerificationConfig,
};
use superharm_core::quadrature::{FixedRule, QuadratureSpec};
use superharm_core::StableIndex;

fn pair(n: usize, alpha: f64) -> EigenPair {
    let grid = Grid1D::new(-1.0, 1.0, n).unwrap();
    smallest_eigenpair(&DiscreteFracLap::new(grid, alpha).unwrap(), 1e-12).unwrap()
}

fn setup(m: u32, n: usize) -> (StableIndex, EigenPair, RemainderField) {
    let idx = StableIndex::from_m(m).unwrap();
    let p = pair(n, idx.alpha());
    let f = build_r1(&p, &idx, &FieldSpec::default()).unwrap();
    (idx, p, f)
}

#[test]
fn remainder_field_support_and_far_field() {
    let (idx, p, field) = setup(3, 255);
    for &y in &[-1.0, -0.5, 0.0, 0.99, 1.0] {
        assert_eq!(field.value_at(y), 0.0);
    }
    assert!(field.nodes.iter().all(|n| n.value > 0.0 && n.y.abs() > 1.0));
    // r₁(y)|y|^{1+α} → c_{1,α} ∫φ₁ as |y| → ∞.
    let target = field.riesz * field.phi_mass;
    for y in [50.0, -50.0] {
        let v = field.value_at(y) * f64::abs(y).powf(1.0 + idx.alpha());
        assert!((v / target - 1.0).abs() < 0.01, "y={y}: {v} vs {target}");
    }
    assert!(field.tail_bound <= 1e-8 * field.mass * 1.0001);
    assert!(field.phi_mass > 0.0 && p.phi1.iter().all(|v| *v > 0.0));
}

#[test]
fn remainder_mass_matches_swapped_integral() {
    // ∫_{D^c} r₁ = c ∫_D φ₁(z) [(1+z)^{-α} + (1-z)^{-α}] / α dz.
    let (idx, p, field) = setup(3, 127);
    let alpha = idx.alpha();
    let phi = p.with_boundary();
    let rule = FixedRule::new(30);
    let mut oracle = 0.0;
    for k in 0..phi.len() - 1 {
        let z0 = -1.0 + k as f64 * p.grid.h;
        for (z, w) in rule.mapped(z0, z0 + p.grid.h) {
            let v = phi[k] + (phi[k + 1] - phi[k]) * (z - z0) / p.grid.h;
            oracle += w * v * ((1.0 + z).powf(-alpha) + (1.0 - z).powf(-alpha)) / alpha;
        }
    }
    oracle *= field.riesz;
    let total = field.mass + field.tail_bound;
    assert!((total / oracle - 1.0).abs() < 1e-6, "{total} vs {oracle}");
}

#[test]
fn zeroth_order_vanishes_in_the_limit() {
    let (idx, _, field) = setup(3, 255);
    let quad = QuadratureSpec::default();
    assert_eq!(limit_formula(0, 0.0, &field, &idx).unwrap(), 0.0);
    let vals: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&t| ptr1_dt_q(0, t, 0.0, &field, &idx, &quad).unwrap())
        .collect();
    assert!(vals.iter().all(|v| *v > 0.0));
    assert!(vals.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn time_derivative_matches_finite_difference() {
    let (idx, _, field) = setup(3, 255);
    let quad = QuadratureSpec::default();
    for q in 1..=2 {
        let t = 0.1;
        let h = 1e-3 * t;
        let f = |t: f64| ptr1_dt_q(q - 1, t, 0.3, &field, &idx, &quad).unwrap();
        let fd = (f(t + h) - f(t - h)) / (2.0 * h);
        let d = ptr1_dt_q(q, t, 0.3, &field, &idx, &quad).unwrap();
        assert!((d / fd - 1.0).abs() < 1e-4, "q={q}: {d} vs {fd}");
    }
}

#[test]
fn first_derivative_extrapolates_to_limit() {
    let (idx, _, field) = setup(3, 255);
    let quad = QuadratureSpec::default();
    let ts = [0.2, 0.1, 0.05];
    let vals: Vec<f64> = ts.iter().map(|&t| ptr1_dt_q(1, t, 0.0, &field, &idx, &quad).unwrap()).collect();
    let ext = richardson(ts, [vals[0], vals[1], vals[2]]);
    let limit = limit_formula(1, 0.0, &field, &idx).unwrap();
    assert!((ext.value / limit - 1.0).abs() < 0.01, "{ext:?} vs {limit}");
    // Monotone approach from below.
    assert!(vals.windows(2).all(|w| w[0] < w[1] && w[1] < limit));
}

#[test]
fn limit_signs_follow_the_ledger() {
    for m in [3, 4, 5] {
        let (idx, _, field) = setup(m, 127);
        for &x in &[-0.6, 0.0, 0.45] {
            for q in 0..m {
                let l = limit_formula(q, x, &field, &idx).unwrap();
                let signed = if q % 2 == 0 { l } else { -l };
                assert!(signed <= 0.0, "m={m} q={q} x={x}: {l}");
            }
        }
    }
}

#[test]
fn boundary_points_are_refused() {
    let (idx, _, field) = setup(3, 63);
    let quad = QuadratureSpec::default();
    assert!(ptr1_dt_q(1, 0.1, 1.0, &field, &idx, &quad).is_err());
    assert!(ptr1_dt_q(1, 0.1, -1.2, &field, &idx, &quad).is_err());
    assert!(limit_formula(1, -1.0, &field, &idx).is_err());
    assert!(ptr1_dt_q(1, 0.0, 0.0, &field, &idx, &quad).is_err());
}

#[test]
fn identity_closes_after_refinement() {
    let idx = StableIndex::from_m(3).unwrap();
    let grids: Vec<_> = [127, 255, 511]
        .iter()
        .map(|&n| {
            let p = pair(n, idx.alpha());
            let f = build_r1(&p, &idx, &FieldSpec::default()).unwrap();
            (p, f)
        })
        .collect();
    for &x in &[0.0, 0.3, -0.6] {
        let s = identity_study(x, &grids, &idx).unwrap();
        assert!(s.gap <= 0.05, "x={x}: {s:?}");
        assert!(s.rhs.value < 0.0 && s.per_grid.iter().all(|t| t.rhs < 0.0));
    }
    let rec = theorem_identity_check(0.0, &grids[2].0, &grids[2].1, &idx, 0.05).unwrap();
    assert!(rec.passed, "{rec:?}");
}

#[test]
fn identity_sign_is_scale_free() {
    let idx = StableIndex::from_m(3).unwrap();
    let grid = Grid1D::new(-2.0, 2.0, 255).unwrap();
    let p = smallest_eigenpair(&DiscreteFracLap::new(grid, idx.alpha()).unwrap(), 1e-12).unwrap();
    let f = build_r1(&p, &idx, &FieldSpec::default()).unwrap();
    for &x in &[0.0, 0.6, -1.2] {
        let rec = theorem_identity_check(x, &p, &f, &idx, 0.05).unwrap();
        assert!(rec.measured.iter().find(|m| m.label == "rhs").unwrap().value < 0.0);
    }
}

#[test]
fn identity_needs_theorem_index() {
    let idx = StableIndex::new(1.0).unwrap();
    let p = pair(63, 1.0);
    let m3 = StableIndex::from_m(3).unwrap();
    let f = build_r1(&pair(63, m3.alpha()), &m3, &FieldSpec::default()).unwrap();
    assert!(theorem_identity_check(0.0, &p, &f, &idx, 0.05).is_err());
    assert!(build_r1(&p, &m3, &FieldSpec::default()).is_err());
}

#[test]
fn classical_anchor_second_difference() {
    let p = pair(255, 2.0);
    assert!((p.lambda1 / (PI * PI / 4.0) - 1.0).abs() < 1e-4);
    for i in 1..=p.grid.n {
        let d2 = p.second_difference(i);
        assert!((d2 + p.lambda1 * p.phi1[i - 1]).abs() <= 1e-8 * p.lambda1, "i={i}");
        assert!(d2 < 0.0);
    }
}

#[test]
fn superharmonicity_and_concavity() {
    let pairs: Vec<_> = [255, 511, 1023].iter().map(|&n| pair(n, 2.0 / 3.0)).collect();
    let rec = superharmonicity_check(&pairs, 4, 1e-2).unwrap();
    assert!(rec.passed, "{rec:?}");
    assert!(superharmonicity_check(&pairs, 3, 1e-2).is_err());
    let rec = concavity_check(&pair(511, 1.0));
    assert!(rec.passed, "{rec:?}");
}

#[test]
fn small_full_run_passes_and_is_repeatable() {
    let idx = StableIndex::from_m(3).unwrap();
    let config = VerificationConfig { n: 255, levels: 3, ..VerificationConfig::default() };
    let a = run_full_verification(&idx, [-1.0, 1.0], &config).unwrap();
    let failures: Vec<_> = a.failures().collect();
    assert!(a.passed, "{failures:?}");
    let b = run_full_verification(&idx, [-1.0, 1.0], &config).unwrap();
    assert_eq!(a, b);
    assert!(run_full_verification(&StableIndex::new(0.7).unwrap(), [-1.0, 1.0], &config).is_err());
}
