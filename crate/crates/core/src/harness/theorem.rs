//! The second-derivative identity for `φ₁` and the discrete sign checks.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

use super::limits::limit_formula;
use super::remainder::RemainderField;
use super::report::CheckRecord;
use crate::coefficients::StableIndex;
use crate::eigen::EigenPair;
use crate::error::{invalid, Result};
use crate::extrapolate::{richardson, Extrapolated};

/// Minimum distance from `∂D`, in grid widths, for identity points.
pub const IDENTITY_MARGIN_NODES: f64 = 4.0;
/// Below this fitted order the extrapolation amplifies noise more than it
/// removes bias; the finest grid is used instead.
pub const MIN_TRUSTED_ORDER: f64 = 0.5;

/// Both sides of `Δφ₁(x) = -λ₁^m φ₁(x) + Σ_{q<m} (-1)^q λ₁^{m-1-q} L_q(x)` on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityTerms {
    pub x: f64,
    pub h: f64,
    pub lambda1: f64,
    pub phi: f64,
    /// Interpolated second central difference of `φ₁`.
    pub lhs: f64,
    pub rhs: f64,
    /// `L_q(x) = lim_{t→0} ∂ᵗ^q P_t r₁(x)` for `q = 0..m`.
    pub limits: Vec<f64>,
}

impl IdentityTerms {
    pub fn gap(&self) -> f64 {
        relative_gap(self.lhs, self.rhs)
    }
}

fn relative_gap(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs()
}

/// Linear interpolation of node data `v(i)`, `i = 0..=n+1`, at `x`.
fn interpolate(pair: &EigenPair, x: f64, v: impl Fn(usize) -> f64) -> f64 {
    let g = pair.grid;
    let s = (x - g.a) / g.h;
    let i = (s.floor() as usize).min(g.n);
    let w = s - i as f64;
    if w == 0.0 {
        v(i)
    } else {
        (1.0 - w) * v(i) + w * v(i + 1)
    }
}

pub fn identity_terms(x: f64, pair: &EigenPair, field: &RemainderField, idx: &StableIndex) -> Result<IdentityTerms> {
    let m = idx.theorem_m()?;
    let g = pair.grid;
    if (pair.alpha - idx.alpha()).abs() > 1e-15 || field.interval != [g.a, g.b] {
        return Err(invalid("pair", "eigenpair, field and index disagree"));
    }
    let margin = IDENTITY_MARGIN_NODES * g.h;
    if !(x >= g.a + margin && x <= g.b - margin) {
        return Err(invalid("x", format!("{x} is within {IDENTITY_MARGIN_NODES} grid widths of the boundary")));
    }
    let lhs = interpolate(pair, x, |i| pair.second_difference(i));
    let phi_b = pair.with_boundary();
    let phi = interpolate(pair, x, |i| phi_b[i]);
    let lambda = pair.lambda1;
    let limits = (0..m).map(|q| limit_formula(q, x, field, idx)).collect::<Result<Vec<_>>>()?;
    let mut rhs = -lambda.powi(m as i32) * phi;
    for (q, l) in limits.iter().enumerate() {
        let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
        rhs += sign * lambda.powi((m - 1) as i32 - q as i32) * l;
    }
    Ok(IdentityTerms { x, h: g.h, lambda1: lambda, phi, lhs, rhs, limits })
}

/// Single-grid record: raw gap and the sign of the right-hand side.
pub fn theorem_identity_check(
    x: f64,
    pair: &EigenPair,
    field: &RemainderField,
    idx: &StableIndex,
    tol: f64,
) -> Result<CheckRecord> {
    let terms = identity_terms(x, pair, field, idx)?;
    let mut rec = CheckRecord::new(&format!("identity_x={x}"), "Δφ₁ = -λ₁^m φ₁ + Σ (-1)^q λ₁^{m-1-q} L_q", tol);
    rec.measure("lhs", terms.lhs)
        .measure("rhs", terms.rhs)
        .measure("gap", terms.gap())
        .require(terms.gap() <= tol && terms.rhs <= 0.0);
    Ok(rec)
}

/// Both sides of the identity over a grid sequence, extrapolated in `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityStudy {
    pub x: f64,
    pub per_grid: Vec<IdentityTerms>,
    pub lhs: Extrapolated,
    pub rhs: Extrapolated,
    pub gap: f64,
}

fn extrapolate_side(terms: &[IdentityTerms], side: impl Fn(&IdentityTerms) -> f64) -> Extrapolated {
    let k = terms.len() - 3;
    let h = [terms[k].h, terms[k + 1].h, terms[k + 2].h];
    let v = [side(&terms[k]), side(&terms[k + 1]), side(&terms[k + 2])];
    let e = richardson(h, v);
    match e.order {
        Some(p) if p >= MIN_TRUSTED_ORDER => e,
        _ => Extrapolated { value: v[2], order: e.order, warning: true },
    }
}

/// `grids` must be ordered coarse to fine, at least three of them.
pub fn identity_study(x: f64, grids: &[(EigenPair, RemainderField)], idx: &StableIndex) -> Result<IdentityStudy> {
    if grids.len() < 3 {
        return Err(invalid("grids", "need at least three grids"));
    }
    let per_grid = grids.iter().map(|(p, f)| identity_terms(x, p, f, idx)).collect::<Result<Vec<_>>>()?;
    let lhs = extrapolate_side(&per_grid, |t| t.lhs);
    let rhs = extrapolate_side(&per_grid, |t| t.rhs);
    let gap = relative_gap(lhs.value, rhs.value);
    Ok(IdentityStudy { x, per_grid, lhs, rhs, gap })
}

/// Largest second difference over nodes at least `margin_nodes` from `∂D`.
pub fn max_interior_second_difference(pair: &EigenPair, margin_nodes: usize) -> Result<f64> {
    let n = pair.grid.n;
    if margin_nodes + 1 > n - margin_nodes {
        return Err(invalid("margin_nodes", format!("{margin_nodes} leaves no interior nodes for n = {n}")));
    }
    Ok((margin_nodes + 1..=n - margin_nodes).map(|i| pair.second_difference(i)).fold(f64::NEG_INFINITY, f64::max))
}

/// `max Δ_h φ₁ ≤ tol` on the finest grid, with a refinement trend: the positive
/// part of the maxima never grows and successive changes contract.
///
/// `pairs` go coarse to fine.
pub fn superharmonicity_check(pairs: &[EigenPair], margin_nodes: usize, tol: f64) -> Result<CheckRecord> {
    if margin_nodes < 4 {
        return Err(invalid("margin_nodes", format!("{margin_nodes} is below the minimum of 4")));
    }
    if pairs.is_empty() {
        return Err(invalid("pairs", "need at least one eigenpair"));
    }
    let maxima = pairs.iter().map(|p| max_interior_second_difference(p, margin_nodes)).collect::<Result<Vec<_>>>()?;
    let finest = maxima[maxima.len() - 1];
    let mut rec = CheckRecord::new("superharmonicity", "Δφ₁ ≤ 0 on D", tol);
    for (p, v) in pairs.iter().zip(&maxima) {
        rec.measure(format!("max_d2_n={}", p.grid.n), *v);
    }
    let positive_non_increasing = maxima.windows(2).all(|w| w[1].max(0.0) <= w[0].max(0.0));
    let steps: Vec<f64> = maxima.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let contracting = steps.windows(2).all(|s| s[1] <= s[0]);
    rec.require(finest <= tol && positive_non_increasing && contracting);
    if !positive_non_increasing {
        rec.note("positive part of the maximum grew under refinement");
    }
    if !contracting {
        rec.note(String::from("maxima do not settle under refinement"));
    }
    Ok(rec)
}

/// Every interior second difference strictly negative.
pub fn concavity_check(pair: &EigenPair) -> CheckRecord {
    let n = pair.grid.n;
    let max = (1..=n).map(|i| pair.second_difference(i)).fold(f64::NEG_INFINITY, f64::max);
    let mut rec = CheckRecord::new("concavity", "φ₁ concave on D", 0.0);
    rec.measure(format!("max_d2_n={n}"), max).require(max < 0.0);
    rec
}
