//! The exterior field `r₁(y) = c_{1,α} ∫_D φ₁(z) |y - z|^{-1-α} dz`, `y ∉ D̄`,
//! tabulated on a quadrature rule for `D^c`.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

use crate::coefficients::{riesz_constant, StableIndex};
use crate::eigen::EigenPair;
use crate::error::{invalid, Result};
use crate::quadrature::FixedRule;
use crate::special::exprel;

/// Controls for the exterior quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    /// Width of one panel in `ln(dist(y, D))`.
    pub panel_width: f64,
    pub nodes_per_panel: usize,
    /// Innermost distance, relative to the interval length.
    pub inner_distance: f64,
    /// Allowed tail mass beyond the truncation radius, relative to the total.
    pub rel_tail: f64,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self { panel_width: 1.5, nodes_per_panel: 8, inner_distance: 1e-12, rel_tail: 1e-8 }
    }
}

/// One node of the exterior rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldNode {
    pub y: f64,
    pub weight: f64,
    pub value: f64,
}

/// `r₁` sampled on a quadrature rule for `D^c`, truncated at distance
/// `truncation_radius` from `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderField {
    pub interval: [f64; 2],
    pub alpha: f64,
    pub nodes: Vec<FieldNode>,
    pub truncation_radius: f64,
    /// Estimated `∫ r₁` beyond the truncation radius, both sides.
    pub tail_bound: f64,
    /// `Σ w r₁` over the nodes.
    pub mass: f64,
    /// `∫_D φ₁`.
    pub phi_mass: f64,
    pub riesz: f64,
    h: f64,
    /// `φ₁` on `a, a+h, ..., b` including the boundary zeros.
    phi: Vec<f64>,
}

/// Cells closer than this many widths use the exact linear-times-power formula.
const NEAR_CELLS: f64 = 10.0;

impl RemainderField {
    /// `r₁(y)`; zero on `D̄`.
    pub fn value_at(&self, y: f64) -> f64 {
        let [a, b] = self.interval;
        if y >= a && y <= b {
            return 0.0;
        }
        let rule = FixedRule::new(4);
        self.riesz * self.kernel_integral(y, &rule)
    }

    fn kernel_integral(&self, y: f64, rule: &FixedRule) -> f64 {
        let [a, b] = self.interval;
        let h = self.h;
        let alpha = self.alpha;
        let cells = self.phi.len() - 1;
        let mut total = 0.0;
        for k in 0..cells {
            // Cell endpoints ordered nearest-first as distances u1 < u0.
            let (u1, v_near, v_far) = if y > b {
                let j = cells - 1 - k;
                (y - (a + (j + 1) as f64 * h), self.phi[j + 1], self.phi[j])
            } else {
                (a + k as f64 * h - y, self.phi[k], self.phi[k + 1])
            };
            if v_near == 0.0 && v_far == 0.0 {
                continue;
            }
            let u0 = u1 + h;
            let slope = (v_far - v_near) / h;
            if u1 < NEAR_CELLS * h {
                let l = (u0 / u1).ln();
                let f1 = u1.powf(-alpha) * l * exprel(-alpha * l);
                let f2 = u1.powf(1.0 - alpha) * l * exprel((1.0 - alpha) * l);
                total += v_near * f1 + slope * (f2 - u1 * f1);
            } else {
                for (u, w) in rule.mapped(u1, u0) {
                    total += w * (v_near + slope * (u - u1)) * u.powf(-1.0 - alpha);
                }
            }
        }
        total
    }
}

/// Tabulates `r₁` from a computed ground state.
pub fn build_r1(pair: &EigenPair, idx: &StableIndex, spec: &FieldSpec) -> Result<RemainderField> {
    if (pair.alpha - idx.alpha()).abs() > 1e-15 {
        return Err(invalid("alpha", format!("eigenpair has α = {}, index has {}", pair.alpha, idx.alpha())));
    }
    if !(spec.panel_width > 0.0 && spec.nodes_per_panel >= 2 && spec.inner_distance > 0.0 && spec.rel_tail > 0.0) {
        return Err(invalid("field_spec", "panel width, node count, inner distance and tail must be positive"));
    }
    let grid = pair.grid;
    let alpha = idx.alpha();
    let riesz = riesz_constant(1, idx)?;
    let phi = pair.with_boundary();
    let phi_mass = grid.h * phi.iter().sum::<f64>();
    let mut field = RemainderField {
        interval: [grid.a, grid.b],
        alpha,
        nodes: Vec::new(),
        truncation_radius: 0.0,
        tail_bound: 0.0,
        mass: 0.0,
        phi_mass,
        riesz,
        h: grid.h,
        phi,
    };
    let len = grid.b - grid.a;
    let rule = FixedRule::new(spec.nodes_per_panel);
    let kernel = FixedRule::new(4);
    let w_min = spec.inner_distance * len;
    let near_radius = 1e3 * len;

    let push_range = |field: &mut RemainderField, lo: f64, hi: f64| {
        let (vlo, vhi) = (lo.ln(), hi.ln());
        let panels = ((vhi - vlo) / spec.panel_width).ceil().max(1.0) as usize;
        let dv = (vhi - vlo) / panels as f64;
        let mut added = Vec::new();
        for p in 0..panels {
            let v0 = vlo + p as f64 * dv;
            for (v, wv) in rule.mapped(v0, v0 + dv) {
                let dist = v.exp();
                for y in [grid.b + dist, grid.a - dist] {
                    let value = riesz * field.kernel_integral(y, &kernel);
                    added.push(FieldNode { y, weight: wv * dist, value });
                }
            }
        }
        field.nodes.extend(added);
    };

    push_range(&mut field, w_min, near_radius);
    let near_mass: f64 = field.nodes.iter().map(|n| n.weight * n.value).sum();
    // Far field: r₁(y) ≈ c m₀ |y|^{-1-α}, so each side beyond R carries c m₀ R^{-α}/α.
    let far = |r: f64| 2.0 * riesz * phi_mass * r.powf(-alpha) / alpha;
    let radius_for_tail = (2.0 * riesz * phi_mass / (alpha * spec.rel_tail * near_mass)).powf(1.0 / alpha);
    let radius = radius_for_tail.clamp(near_radius, 1e30 * len);
    if radius > near_radius {
        push_range(&mut field, near_radius, radius);
    }
    field.truncation_radius = radius;
    field.tail_bound = far(radius);
    field.mass = field.nodes.iter().map(|n| n.weight * n.value).sum();
    Ok(field)
}
