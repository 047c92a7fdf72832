//! Numerical execution of the small-time argument for `Δφ₁`: the exterior
//! field `r₁`, the limits of `∂ᵗ^q P_t r₁`, the identity for `Δφ₁`, and the
//! sign checks, assembled into a [`VerificationReport`].

pub mod limits;
pub mod remainder;
pub mod report;
pub mod theorem;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

pub use limits::{left_piece_diagnostic, limit_formula, limit_study, ptr1_dt_q, tail_diagnostic, LimitStudy};
pub use remainder::{build_r1, FieldNode, FieldSpec, RemainderField};
pub use report::{CheckRecord, Measurement, VerificationReport};
pub use theorem::{
    concavity_check, identity_study, identity_terms, max_interior_second_difference, superharmonicity_check,
    theorem_identity_check, IdentityStudy, IdentityTerms,
};

use crate::coefficients::{check_power_rule_identity, sign_ledger, Sign, StableIndex};
use crate::eigen::{smallest_eigenpair, DiscreteFracLap, EigenPair, Grid1D};
use crate::error::{invalid, Result};
use crate::extrapolate::richardson;
use crate::kernel::{transition_density_fourier_1d, TransitionDensity};
use crate::quadrature::QuadratureSpec;
use crate::subordinator::{laplace_residual, pde_coefficient_residual};

/// Settings for [`run_full_verification`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationConfig {
    /// Finest grid; coarser grids use `((n + 1) >> k) - 1` nodes.
    pub n: usize,
    /// Number of grids in the refinement sequence (at least 3).
    pub levels: usize,
    pub eigen_tol: f64,
    pub quad: QuadratureSpec,
    pub field: FieldSpec,
    /// Decreasing times for the small-time limits.
    pub t_values: Vec<f64>,
    /// Split multipliers for the tail diagnostic.
    pub multipliers: Vec<f64>,
    /// Times over which the tail diagnostic takes its supremum.
    pub tail_t_values: Vec<f64>,
    /// Test points as fractions of the half-length, measured from the midpoint.
    pub x_fractions: Vec<f64>,
    pub margin_nodes: usize,
    pub superharmonic_tol: f64,
    pub identity_tol: f64,
    pub limit_tol: f64,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            n: 1023,
            levels: 4,
            eigen_tol: 1e-12,
            quad: QuadratureSpec::default(),
            field: FieldSpec::default(),
            t_values: (3..=8).map(|k| 0.5f64.powi(k)).collect(),
            multipliers: vec![5.0, 10.0, 20.0, 40.0],
            tail_t_values: (0..=6).map(|k| 0.5f64.powi(k)).collect(),
            x_fractions: vec![-0.6, -0.3, 0.0, 0.3, 0.6],
            margin_nodes: 4,
            superharmonic_tol: 1e-2,
            identity_tol: 0.05,
            limit_tol: 0.01,
        }
    }
}

impl VerificationConfig {
    pub fn grid_sizes(&self) -> Vec<usize> {
        (0..self.levels).rev().map(|k| ((self.n + 1) >> k) - 1).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 3 {
            return Err(invalid("levels", "need at least three grids"));
        }
        let sizes = self.grid_sizes();
        if sizes[0] < Grid1D::MIN_NODES {
            return Err(invalid("n", format!("coarsest grid has {} nodes, below {}", sizes[0], Grid1D::MIN_NODES)));
        }
        if !(self.eigen_tol > 0.0 && self.eigen_tol <= 1e-6) {
            return Err(invalid("eigen_tol", "must lie in (0, 1e-6]"));
        }
        self.quad.validate()?;
        let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]) && v.iter().all(|t| *t > 0.0);
        if self.t_values.len() < 3 || !decreasing(&self.t_values) {
            return Err(invalid("t_values", "need at least three positive, strictly decreasing times"));
        }
        if self.tail_t_values.is_empty() || self.tail_t_values.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(invalid("tail_t_values", "times must lie in (0, 1]"));
        }
        if self.multipliers.len() < 2 || self.multipliers.windows(2).any(|w| w[1] <= w[0]) || self.multipliers[0] <= 1.0 {
            return Err(invalid("multipliers", "need at least two increasing values above 1"));
        }
        if self.x_fractions.is_empty() || self.x_fractions.iter().any(|f| f.abs() >= 1.0) {
            return Err(invalid("x_fractions", "points must lie strictly inside the interval"));
        }
        if self.margin_nodes < 4 {
            return Err(invalid("margin_nodes", "must be at least 4"));
        }
        for (name, v) in [
            ("superharmonic_tol", self.superharmonic_tol),
            ("identity_tol", self.identity_tol),
            ("limit_tol", self.limit_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive"));
            }
        }
        Ok(())
    }
}

fn solve_grids(a: f64, b: f64, idx: &StableIndex, config: &VerificationConfig) -> Result<Vec<EigenPair>> {
    config
        .grid_sizes()
        .into_iter()
        .map(|n| smallest_eigenpair(&DiscreteFracLap::new(Grid1D::new(a, b, n)?, idx.alpha())?, config.eigen_tol))
        .collect()
}

fn power_rule_record(m: u32) -> CheckRecord {
    let idx = StableIndex::from_m(m).expect("m ≥ 2");
    let mut rec = CheckRecord::new("power_rule_identity", "Σ_j a_j(q)(-1)^j (kα/2+1)_j = k!/(k-q)!, exact", 0.0);
    let mut failures = 0u32;
    for q in 0..=8 {
        for k in 0..=q {
            if let Err(e) = check_power_rule_identity(q, k, &idx) {
                failures += 1;
                rec.note(format!("{e}"));
            }
        }
    }
    rec.measure("failures", f64::from(failures)).require(failures == 0);
    rec
}

fn pde_record(m: u32) -> Result<CheckRecord> {
    let tol = 1e-12;
    let mut rec = CheckRecord::new("series_pde_termwise", "(∂_s - (-1)^m ∂_t^m) f_t = 0 termwise", tol);
    let mut worst = 0.0f64;
    for k in 0..=20 {
        worst = worst.max(pde_coefficient_residual(k, m)?);
    }
    rec.measure("max_rel_defect", worst).require(worst <= tol);
    Ok(rec)
}

fn laplace_record(idx: &StableIndex, quad: &QuadratureSpec) -> Result<CheckRecord> {
    let tol = 1e-8;
    let mut rec = CheckRecord::new("laplace_certificate", "∫ e^{-λs} f_t(s) ds = exp(-t λ^{α/2})", tol);
    let mut worst = 0.0f64;
    for &lambda in &[0.1, 1.0, 10.0] {
        for &t in &[0.5, 1.0, 2.0] {
            worst = worst.max(laplace_residual(lambda, t, idx, quad)?);
        }
    }
    rec.measure("max_abs_residual", worst).require(worst <= tol);
    Ok(rec)
}

fn kernel_record(idx: &StableIndex, quad: &QuadratureSpec) -> Result<CheckRecord> {
    let tol = 1e-6;
    let mut rec = CheckRecord::new("kernel_fourier_equivalence", "∫ g(s,·) f_t(s) ds = (1/π) ∫ cos(rξ) e^{-tξ^α} dξ", tol);
    let kernel = TransitionDensity::new(idx, quad)?;
    let mut worst = 0.0f64;
    for &t in &[0.5, 1.0, 2.0] {
        for &r in &[0.0, 0.5, 1.0, 2.0] {
            let a = kernel.at_distance(t, r, 1)?;
            let b = transition_density_fourier_1d(t, r, idx)?;
            worst = worst.max((a - b).abs());
        }
    }
    rec.measure("max_abs_diff", worst).require(worst <= tol);
    Ok(rec)
}

fn eigen_record(pairs: &[EigenPair]) -> CheckRecord {
    let mut rec = CheckRecord::new("eigenpair", "(-Δ)^{α/2} φ₁ = λ₁ φ₁ in D, φ₁ = 0 off D", 1e-10);
    let k = pairs.len() - 3;
    let h = [pairs[k].grid.h, pairs[k + 1].grid.h, pairs[k + 2].grid.h];
    let lam = [pairs[k].lambda1, pairs[k + 1].lambda1, pairs[k + 2].lambda1];
    let ext = richardson(h, lam);
    for p in pairs {
        rec.measure(format!("lambda1_n={}", p.grid.n), p.lambda1);
    }
    rec.measure("lambda1_extrapolated", ext.value);
    if let Some(p) = ext.order {
        rec.measure("order", p);
    }
    if ext.warning {
        rec.note("eigenvalue extrapolation fell back to the finest grid");
    }
    let finest = &pairs[pairs.len() - 1];
    let n = finest.phi1.len();
    let asym = (0..n).map(|i| (finest.phi1[i] - finest.phi1[n - 1 - i]).abs()).fold(0.0, f64::max);
    let positive = pairs.iter().all(|p| p.phi1.iter().all(|v| *v > 0.0));
    rec.measure("max_asymmetry", asym).measure("relative_residual", finest.residual);
    rec.require(positive && asym <= 1e-10 && ext.value.is_finite());
    rec
}

fn ledger_record(m: u32) -> Result<CheckRecord> {
    let mut rec = CheckRecord::new("sign_ledger", "(-1)^q γ_q ≤ 0 for q < m", 0.0);
    let mut ok = true;
    for e in sign_ledger(m)? {
        rec.measure(format!("q={}", e.q), e.value);
        ok &= e.sign != Sign::Positive;
    }
    rec.require(ok);
    Ok(rec)
}

/// Runs every check for `α = 2/m` on `(a, b)`.
///
/// For `m > 2` this covers the coefficient identities, the density and
/// kernel certificates, the eigenpair, the sign ledger, the small-time
/// limits with their diagnostics, the identity for `Δφ₁` and the discrete
/// superharmonicity check. For `m = 2` the limit machinery is skipped and
/// concavity of `φ₁` is checked instead.
pub fn run_full_verification(idx: &StableIndex, interval: [f64; 2], config: &VerificationConfig) -> Result<VerificationReport> {
    config.validate()?;
    let m = idx.m().ok_or_else(|| invalid("alpha", format!("verification needs α = 2/m, got {}", idx.alpha())))?;
    let [a, b] = interval;
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(invalid("interval", format!("({a}, {b}) is not a bounded interval")));
    }
    let mut report = VerificationReport::new(idx.alpha(), Some(m), interval);
    report.push(power_rule_record(m));
    let quad = config.quad;

    if m == 2 {
        report.push(laplace_record(idx, &quad)?);
        report.push(kernel_record(idx, &quad)?);
        let pairs = solve_grids(a, b, idx, config)?;
        report.push(eigen_record(&pairs));
        report.push(concavity_check(&pairs[pairs.len() - 1]));
        return Ok(report);
    }

    report.push(pde_record(m)?);
    report.push(laplace_record(idx, &quad)?);
    report.push(kernel_record(idx, &quad)?);
    let pairs = solve_grids(a, b, idx, config)?;
    report.push(eigen_record(&pairs));
    report.push(ledger_record(m)?);

    let fields = pairs.iter().map(|p| build_r1(p, idx, &config.field)).collect::<Result<Vec<_>>>()?;
    let finest_field = &fields[fields.len() - 1];
    let mut rec = CheckRecord::new("remainder_field", "r₁ = c_{1,α} ∫_D φ₁(z)|y-z|^{-1-α} dz ≥ 0 off D", config.field.rel_tail);
    let nonneg = finest_field.nodes.iter().all(|n| n.value >= 0.0);
    rec.measure("nodes", finest_field.nodes.len() as f64)
        .measure("truncation_radius", finest_field.truncation_radius)
        .measure("tail_bound", finest_field.tail_bound)
        .measure("mass", finest_field.mass)
        .require(nonneg && finest_field.tail_bound <= 2.0 * config.field.rel_tail * finest_field.mass);
    report.push(rec);

    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let xs: Vec<f64> = config.x_fractions.iter().map(|f| mid + f * half).collect();

    for q in 0..m {
        let anchor = if q == 0 {
            "P_t r₁(x) → 0 as t → 0"
        } else {
            "lim_{t→0} ∂ᵗ^q P_t r₁(x) = q! γ_q ∫ (∫ s^{-qα/2-1} g ds) r₁ dy"
        };
        let mut rec = CheckRecord::new(&format!("small_time_limit_q={q}"), anchor, config.limit_tol);
        for &x in &xs {
            let s = limit_study(q, x, &config.t_values, finest_field, idx, &quad)?;
            rec.measure(format!("rel_error_x={x}"), s.rel_error);
            rec.measure(format!("extrapolated_x={x}"), s.extrapolated.value);
            rec.measure(format!("limit_x={x}"), s.limit);
            let mut ok = s.rel_error <= config.limit_tol;
            if q == 0 {
                // The values themselves must shrink toward zero.
                ok &= s.values.windows(2).all(|w| w[1].abs() < w[0].abs());
            }
            if s.extrapolated.warning {
                rec.note(format!("x={x}: extrapolation fell back to the smallest t"));
            }
            rec.require(ok);
        }
        report.push(rec);
    }

    for q in 1..m {
        let left = left_piece_diagnostic(q, mid, &config.t_values, finest_field, idx, &quad)?;
        let mut rec = CheckRecord::new(&format!("left_piece_q={q}"), "t^{-q} ∫_0^{Mt^{2/α}} g ∂ᵗ^q f_t ds → 0", 1e-10);
        for (t, v) in config.t_values.iter().zip(&left) {
            rec.measure(format!("t={t}"), *v);
        }
        let last = left[left.len() - 1];
        rec.require(left.windows(2).all(|w| w[1] <= w[0]) && last <= 1e-10);
        report.push(rec);

        let tail = tail_diagnostic(q, mid, &config.multipliers, &config.tail_t_values, finest_field, idx, &quad)?;
        let mut rec = CheckRecord::new(&format!("tail_piece_q={q}"), "sup_{t≤1} tail beyond M t^{2/α} → 0 as M → ∞", 0.0);
        for (mm, v) in config.multipliers.iter().zip(&tail) {
            rec.measure(format!("M={mm}"), *v);
        }
        rec.require(tail.windows(2).all(|w| w[1] < w[0]));
        report.push(rec);
    }

    let grids: Vec<(EigenPair, RemainderField)> = pairs.iter().cloned().zip(fields).collect();
    for &x in &xs {
        let s = identity_study(x, &grids, idx)?;
        let mut rec = CheckRecord::new(
            &format!("identity_x={x}"),
            "Δφ₁(x) = -λ₁^m φ₁(x) + Σ_{q<m} (-1)^q λ₁^{m-1-q} L_q(x)",
            config.identity_tol,
        );
        for t in &s.per_grid {
            rec.measure(format!("lhs_h={}", t.h), t.lhs);
            rec.measure(format!("rhs_h={}", t.h), t.rhs);
        }
        rec.measure("lhs_extrapolated", s.lhs.value).measure("rhs_extrapolated", s.rhs.value).measure("gap", s.gap);
        if s.lhs.warning || s.rhs.warning {
            rec.note("slow or irregular convergence; the finest grid value is used for at least one side");
        }
        let rhs_nonpositive = s.rhs.value <= 0.0 && s.per_grid.iter().all(|t| t.rhs <= 0.0);
        rec.require(s.gap <= config.identity_tol && rhs_nonpositive);
        report.push(rec);
    }

    report.push(superharmonicity_check(&pairs, config.margin_nodes, config.superharmonic_tol)?);
    Ok(report)
}
