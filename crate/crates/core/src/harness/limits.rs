//! `∂ᵗ^q P_t r₁(x)`, its small-time limit and the diagnostics for the two
//! pieces of the split `s ≶ M t^{2/α}`.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

use super::remainder::RemainderField;
use crate::coefficients::{gamma_coefficient, StableIndex};
use crate::error::{invalid, Error, Result};
use crate::extrapolate::{richardson, Extrapolated};
use crate::kernel::{inner_integral, left_piece, right_piece};
use crate::quadrature::{Integral, QuadratureSpec};
use crate::special::{factorial, CompensatedSum};
use crate::subordinator::{DensitySeries, SeriesPolicy};

fn check_inside(x: f64, field: &RemainderField) -> Result<()> {
    let [a, b] = field.interval;
    if x > a && x < b {
        Ok(())
    } else {
        Err(invalid("x", format!("{x} is not strictly inside ({a}, {b})")))
    }
}

fn check_regime(idx: &StableIndex, field: &RemainderField) -> Result<()> {
    if idx.alpha() > 1.0 {
        return Err(invalid("alpha", format!("needs α ≤ 1, got {}", idx.alpha())));
    }
    if (idx.alpha() - field.alpha).abs() > 1e-15 {
        return Err(invalid("alpha", "field was built for a different index"));
    }
    Ok(())
}

/// Decay exponent of `g(τu, c) W_q(u)` in `u` (d = 1).
fn tail_kappa(q: u32, idx: &StableIndex) -> f64 {
    0.5 + f64::from(q.max(1)) * idx.beta()
}

/// Weighted sum over the exterior nodes of `r₁(y) · piece(|x - y|²/4)`,
/// failing if any piece missed its tolerance.
fn weighted_sum<F>(x: f64, field: &RemainderField, quad: &QuadratureSpec, mut piece: F) -> Result<f64>
where
    F: FnMut(f64) -> Integral,
{
    let mut sum = CompensatedSum::default();
    for node in &field.nodes {
        let r = x - node.y;
        let int = piece(0.25 * r * r);
        let v = int.require(quad)?;
        sum.add(node.weight * node.value * v);
    }
    Ok(sum.value())
}

/// `∂ᵗ^q P_t r₁(x) = ∫_{D^c} (∫_0^∞ g(s,x,y) ∂ᵗ^q f_t(s) ds) r₁(y) dy`.
///
/// The inner integral is split at `s = M t^{2/α}` with `M = quad.split_multiplier`.
pub fn ptr1_dt_q(q: u32, t: f64, x: f64, field: &RemainderField, idx: &StableIndex, quad: &QuadratureSpec) -> Result<f64> {
    check_inside(x, field)?;
    check_regime(idx, field)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("{t} must be positive and finite")));
    }
    quad.validate()?;
    let series = DensitySeries::time_derivative(q, idx, &SeriesPolicy::for_index(idx))?;
    let tau = t.powf(idx.inv());
    let kappa = tail_kappa(q, idx);
    let scale = t.powi(-(q as i32));
    let inner = weighted_sum(x, field, quad, |c| {
        left_piece(&series, tau, c, 1, quad).combine(right_piece(&series, tau, c, 1, kappa, quad))
    })?;
    Ok(scale * inner)
}

/// `q! γ_q ∫_{D^c} (∫_0^∞ s^{-qα/2-1} g(s,x,y) ds) r₁(y) dy`; exactly zero for `q = 0`.
pub fn limit_formula(q: u32, x: f64, field: &RemainderField, idx: &StableIndex) -> Result<f64> {
    check_inside(x, field)?;
    if q == 0 {
        return Ok(0.0);
    }
    let mut sum = CompensatedSum::default();
    for node in &field.nodes {
        sum.add(node.weight * node.value * inner_integral(q, 1, idx, (x - node.y).abs())?);
    }
    Ok(factorial(q) * gamma_coefficient(q, idx) * sum.value())
}

/// Small-time behaviour of `∂ᵗ^q P_t r₁(x)` along a decreasing `t` sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitStudy {
    pub q: u32,
    pub x: f64,
    pub t_values: Vec<f64>,
    pub values: Vec<f64>,
    /// Richardson estimate from the three smallest `t`.
    pub extrapolated: Extrapolated,
    pub limit: f64,
    /// `|extrapolated - limit| / |limit|`, or `|extrapolated| / |values[0]|`
    /// when the limit is zero.
    pub rel_error: f64,
}

pub fn limit_study(
    q: u32,
    x: f64,
    t_values: &[f64],
    field: &RemainderField,
    idx: &StableIndex,
    quad: &QuadratureSpec,
) -> Result<LimitStudy> {
    if t_values.len() < 3 || t_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("t_values", "need at least three strictly decreasing times"));
    }
    let values = t_values.iter().map(|&t| ptr1_dt_q(q, t, x, field, idx, quad)).collect::<Result<Vec<_>>>()?;
    let k = values.len();
    let extrapolated = richardson(
        [t_values[k - 3], t_values[k - 2], t_values[k - 1]],
        [values[k - 3], values[k - 2], values[k - 1]],
    );
    let limit = limit_formula(q, x, field, idx)?;
    let rel_error = if limit == 0.0 {
        if values[0] == 0.0 {
            return Err(Error::InsufficientData("ptr1 vanishes at the coarsest time".into()));
        }
        (extrapolated.value / values[0]).abs()
    } else {
        ((extrapolated.value - limit) / limit).abs()
    };
    Ok(LimitStudy { q, x, t_values: t_values.to_vec(), values, extrapolated, limit, rel_error })
}

/// `t^{-q} Σ_y w r₁(y) |∫_0^{M t^{2/α}} g(s,x,y) ∂ᵗ^q f_t(s) ds|` for each `t`;
/// the small-`s` piece that must vanish as `t → 0`.
pub fn left_piece_diagnostic(
    q: u32,
    x: f64,
    t_values: &[f64],
    field: &RemainderField,
    idx: &StableIndex,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    check_inside(x, field)?;
    check_regime(idx, field)?;
    let series = DensitySeries::time_derivative(q, idx, &SeriesPolicy::for_index(idx))?;
    t_values
        .iter()
        .map(|&t| {
            let tau = t.powf(idx.inv());
            let mut sum = CompensatedSum::default();
            for node in &field.nodes {
                let r = x - node.y;
                let v = left_piece(&series, tau, 0.25 * r * r, 1, quad).require(quad)?;
                sum.add(node.weight * node.value * v.abs());
            }
            Ok(t.powi(-(q as i32)) * sum.value())
        })
        .collect()
}

/// For each `M`: the supremum over `t ∈ t_values` and the exterior nodes of
/// `|t^{-q} ∫_{M t^{2/α}}^∞ g(s,x,y) ∂ᵗ^q F_t(s) ds|`, where `F_t` keeps only
/// the series terms `k > q`. Must shrink as `M` grows.
pub fn tail_diagnostic(
    q: u32,
    x: f64,
    multipliers: &[f64],
    t_values: &[f64],
    field: &RemainderField,
    idx: &StableIndex,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    check_inside(x, field)?;
    check_regime(idx, field)?;
    let series = DensitySeries::time_derivative(q, idx, &SeriesPolicy::for_index(idx))?.without_leading_terms(q);
    let kappa = 0.5 + f64::from(q + 1) * idx.beta();
    multipliers
        .iter()
        .map(|&m| {
            let spec = quad.with_split_multiplier(m);
            spec.validate()?;
            let mut sup = 0.0f64;
            for &t in t_values {
                let tau = t.powf(idx.inv());
                let scale = t.powi(-(q as i32));
                for node in &field.nodes {
                    let r = x - node.y;
                    let v = right_piece(&series, tau, 0.25 * r * r, 1, kappa, &spec).require(&spec)?;
                    sup = sup.max((scale * v).abs());
                }
            }
            Ok(sup)
        })
        .collect()
}
