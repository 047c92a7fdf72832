use std::fmt::Write as _;

use serde::Serialize;
use superharm_core::coefficients::{
    a_coefficients, a_coefficients_exact, check_power_rule_identity, gamma_coefficient, power_rule_sum, sign_ledger,
};
use superharm_core::eigen::{smallest_eigenpair, DiscreteFracLap, Grid1D};
use superharm_core::extrapolate::richardson;
use superharm_core::harness::{run_full_verification, VerificationConfig, VerificationReport};
use superharm_core::kernel::{transition_density_fourier_1d, TransitionDensity};
use superharm_core::montecarlo::{estimate_lambda1, survival_curve, Clock, McConfig, Start, WindowPolicy};
use superharm_core::subordinator::{density_ft, laplace_residual, pde_coefficient_residual, SeriesPolicy};
use superharm_core::{Error as CoreError, StableIndex};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, Output, Table, VERSION};

pub const LAPLACE_TOL: f64 = 1e-8;
pub const KERNEL_TOL: f64 = 1e-6;
pub const FLOAT_IDENTITY_TOL: f64 = 1e-10;
pub const TERMWISE_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-12;

fn stable_index(cfg: &RunConfig) -> Result<StableIndex, CliError> {
    Ok(match cfg.m {
        Some(m) if m >= 2 => StableIndex::from_m(m)?,
        _ => StableIndex::new(cfg.alpha)?,
    })
}

fn factorial(q: u32) -> f64 {
    (1..=q).map(f64::from).product()
}

/// Tables of `a_j(q)`, `γ_k` and the power-rule identity.
pub fn coeffs(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let idx = stable_index(cfg)?;
    let q = cfg.q;
    let m = idx.m();
    let mut failures = Vec::new();

    let float = a_coefficients(q, &idx);
    let exact = m.map(|m| a_coefficients_exact(q, m));
    let mut a = Table::new("coefficients", &["j", "a_j", "a_j_exact"]);
    for (j, v) in float.iter().enumerate() {
        let e = exact.as_ref().map_or(String::new(), |e| e[j].to_string());
        a.push(vec![j.into(), (*v).into(), e.into()]);
    }

    let theorem_m = m.filter(|m| *m > 2);
    let k_max = q.max(20);
    let mut g = Table::new("gamma", &["k", "gamma_k", "termwise_defect"]);
    for k in 0..=k_max {
        let defect = match theorem_m {
            Some(m) => {
                let d = pde_coefficient_residual(k, m)?;
                if d > TERMWISE_TOL {
                    failures.push(format!("termwise identity at k={k}: defect {d:.3e}"));
                }
                Cell::Num(d)
            }
            None => Cell::Text(String::new()),
        };
        g.push(vec![k.into(), gamma_coefficient(k, &idx).into(), defect]);
    }

    let qf = factorial(q);
    let mut id = Table::new("power_rule", &["k", "float_sum", "expected", "float_defect", "exact_sum", "exact_ok"]);
    for k in 0..=q {
        let v = power_rule_sum(q, k, idx.alpha());
        let expected = if k < q { 0.0 } else { qf };
        let defect = if k < q { v.abs() / qf } else { (v / qf - 1.0).abs() };
        if defect > FLOAT_IDENTITY_TOL {
            failures.push(format!("float power rule at k={k}: defect {defect:.3e}"));
        }
        let (exact_sum, exact_ok) = match m {
            Some(_) => match check_power_rule_identity(q, k, &idx) {
                Ok(r) => (Cell::Text(r.to_string()), Cell::Bool(true)),
                Err(CoreError::IdentityViolated { what }) => {
                    failures.push(format!("exact power rule: {what}"));
                    (Cell::Text(String::new()), Cell::Bool(false))
                }
                Err(e) => return Err(e.into()),
            },
            None => (Cell::Text(String::new()), Cell::Text(String::new())),
        };
        id.push(vec![k.into(), v.into(), expected.into(), defect.into(), exact_sum, exact_ok]);
    }

    out.table(&a)?;
    out.table(&g)?;
    out.table(&id)?;

    println!("alpha = {}  q = {q}", idx.alpha());
    println!("{:>3}  {:>24}  {:>16}", "j", "a_j", "exact");
    for row in &a.rows {
        println!("{:>3}  {:>24}  {:>16}", row[0].render(), row[1].render(), row[2].render());
    }
    println!("{:>3}  {:>24}  {:>10}  {:>8}", "k", "power-rule sum", "defect", "exact");
    for row in &id.rows {
        println!("{:>3}  {:>24}  {:>10}  {:>8}", row[0].render(), row[1].render(), sci(&row[3]), row[4].render());
    }

    if let Some(m) = theorem_m {
        let ledger = sign_ledger(m)?;
        let mut s = Table::new("sign_ledger", &["q", "signed_gamma", "sign"]);
        for e in &ledger {
            let sign = serde_json::to_value(e.sign).expect("sign serialises");
            s.push(vec![e.q.into(), e.value.into(), Cell::Text(sign.as_str().unwrap_or_default().to_string())]);
        }
        out.table(&s)?;
        println!("sign ledger (-1)^q γ_q, q < {m}:");
        for row in &s.rows {
            println!("{:>3}  {:>24}  {}", row[0].render(), row[1].render(), row[2].render());
        }
    }
    finish(failures)
}

/// `f_t(s)` with truncation diagnostics, and the Laplace certificate.
pub fn density(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let idx = stable_index(cfg)?;
    let policy = SeriesPolicy::for_index(&idx);
    let mut failures = Vec::new();
    let mut d = Table::new("density", &["t", "s", "f_t", "terms_used", "tail_estimate", "certified"]);
    for &t in &cfg.t {
        for &s in &cfg.s {
            let e = density_ft(t, s, &idx, &policy)?;
            if !e.certified {
                failures.push(format!("f_{t}({s}) is not certified"));
            }
            println!("f_{t}({s}) = {:.10}{}", e.value, if e.certified { "" } else { "  (uncertified)" });
            d.push(vec![t.into(), s.into(), e.value.into(), e.terms_used.into(), e.tail_estimate.into(), e.certified.into()]);
        }
    }
    let mut l = Table::new("laplace", &["t", "lambda", "residual", "passed"]);
    for &t in &cfg.t {
        for &lambda in &cfg.lambda {
            let r = laplace_residual(lambda, t, &idx, &cfg.quad)?;
            let ok = r <= LAPLACE_TOL;
            if !ok {
                failures.push(format!("Laplace residual {r:.3e} at t={t}, lambda={lambda}"));
            }
            println!("laplace t={t} lambda={lambda}: residual {r:.3e}");
            l.push(vec![t.into(), lambda.into(), r.into(), ok.into()]);
        }
    }
    out.table(&d)?;
    out.table(&l)?;
    finish(failures)
}

/// Subordination against Fourier inversion in one dimension.
pub fn kernel(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let idx = stable_index(cfg)?;
    let td = TransitionDensity::new(&idx, &cfg.quad)?;
    let mut failures = Vec::new();
    let mut k = Table::new("kernel", &["t", "r", "p_subordination", "p_fourier", "abs_diff"]);
    println!("{:>6} {:>6} {:>20} {:>20} {:>10}", "t", "r", "subordination", "fourier", "diff");
    for &t in &cfg.t {
        for &r in &cfg.r {
            let ps = td.at_distance(t, r, 1)?;
            let pf = transition_density_fourier_1d(t, r, &idx)?;
            let diff = (ps - pf).abs();
            if diff > KERNEL_TOL {
                failures.push(format!("kernel mismatch {diff:.3e} at t={t}, r={r}"));
            }
            println!("{t:>6} {r:>6} {ps:>20.14} {pf:>20.14} {diff:>10.2e}");
            k.push(vec![t.into(), r.into(), ps.into(), pf.into(), diff.into()]);
        }
    }
    out.table(&k)?;
    finish(failures)
}

#[derive(Serialize)]
struct EigReport {
    alpha: f64,
    interval: [f64; 2],
    n_sequence: Vec<usize>,
    lambda_per_grid: Vec<f64>,
    order_estimate: Option<f64>,
    lambda_extrapolated: f64,
    extrapolation_warning: bool,
    residual: f64,
}

/// Three nested grids ending at `n` nodes: `((n + 1) >> k) - 1`.
fn grid_sequence(n: usize) -> Vec<usize> {
    (0..3).rev().map(|k| ((n + 1) >> k) - 1).collect()
}

/// `λ₁` on three grids with extrapolation, and `φ₁` on the finest.
pub fn eig(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let [a, b] = cfg.interval;
    let ns = grid_sequence(cfg.n);
    let mut lambdas = Vec::new();
    let mut hs = Vec::new();
    let mut finest = None;
    for &n in &ns {
        let grid = Grid1D::new(a, b, n)?;
        let pair = smallest_eigenpair(&DiscreteFracLap::new(grid, cfg.alpha)?, EIGEN_TOL)?;
        println!("n = {n:>5}  lambda_1 = {:.12}", pair.lambda1);
        lambdas.push(pair.lambda1);
        hs.push(grid.h);
        finest = Some(pair);
    }
    let pair = finest.expect("three grids");
    let ext = richardson([hs[0], hs[1], hs[2]], [lambdas[0], lambdas[1], lambdas[2]]);
    let report = EigReport {
        alpha: cfg.alpha,
        interval: cfg.interval,
        n_sequence: ns,
        lambda_per_grid: lambdas,
        order_estimate: ext.order,
        lambda_extrapolated: ext.value,
        extrapolation_warning: ext.warning,
        residual: pair.residual,
    };
    match ext.order {
        Some(p) => println!("extrapolated lambda_1 = {:.12}  (order {p:.3})", ext.value),
        None => println!("extrapolated lambda_1 = {:.12}  (finest grid; order not fitted)", ext.value),
    }
    out.json("eig.json", &report)?;
    let mut t = Table::new("eigenfunction", &["x", "phi1"]);
    for (i, v) in pair.with_boundary().into_iter().enumerate() {
        t.push(vec![(a + i as f64 * pair.grid.h).into(), v.into()]);
    }
    out.table(&t)?;
    Ok(())
}

fn verification_index(cfg: &RunConfig) -> Result<StableIndex, CliError> {
    let idx = stable_index(cfg)?;
    match idx.m() {
        Some(m) if m > 2 => Ok(idx),
        Some(2) if !cfg.theorem_mode => Ok(idx),
        Some(2) => Err(CliError::Usage("verify needs m > 2; use --alpha 1 for the concavity check".into())),
        _ => Err(CliError::Usage(format!("verify needs α = 2/m with m > 2 or α = 1, got {}", cfg.alpha))),
    }
}

/// Usage checks that must pass before anything is written.
pub fn preflight(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.command {
        Command::Verify => verification_index(cfg).map(|_| ()),
        Command::Eig | Command::Mc => Ok(()),
        Command::Kernel if cfg.alpha > 1.0 => Err(CliError::Usage(format!("kernel needs α ≤ 1, got {}", cfg.alpha))),
        _ if cfg.alpha == 2.0 => Err(CliError::Usage(format!("{:?} needs α < 2", cfg.command).to_lowercase())),
        _ => Ok(()),
    }
}

/// Full verification run; exits 0 iff the report passes.
pub fn verify(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let idx = verification_index(cfg)?;
    let config = VerificationConfig { n: cfg.n, quad: cfg.quad, ..VerificationConfig::default() };
    let report = run_full_verification(&idx, cfg.interval, &config)?;
    out.json("report.json", &report)?;
    let text = render_report(&report, out.hash());
    out.text("report.txt", &text)?;
    print!("{text}");
    if report.passed {
        return Ok(());
    }
    let mut msg = String::from("verification failed:");
    for rec in report.failures() {
        let _ = write!(msg, "\n{}", serde_json::to_string_pretty(rec).expect("record serialises"));
    }
    Err(CliError::Failed(msg))
}

/// Aligned text rendering of a verification report.
pub fn render_report(report: &VerificationReport, hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "superharm {VERSION}  config {hash}");
    let m = report.m.map_or("-".to_string(), |m| m.to_string());
    let [a, b] = report.interval;
    let _ = writeln!(s, "alpha = {}  m = {m}  interval = ({a}, {b})", report.alpha);
    let _ = writeln!(s, "overall: {}", if report.passed { "PASS" } else { "FAIL" });
    let _ = writeln!(s);
    let width = report.checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(5).max(5);
    let _ = writeln!(s, "{:<width$}  {:<8}  {:>10}  anchor", "check", "status", "tolerance");
    for c in &report.checks {
        let status = match (c.passed, c.mandatory) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "advisory",
        };
        let _ = writeln!(s, "{:<width$}  {:<8}  {:>10.2e}  {}", c.name, status, c.tolerance, c.anchor);
        for mm in &c.measured {
            let _ = writeln!(s, "{:<width$}    {} = {:.6e}", "", mm.label, mm.value);
        }
        for note in &c.notes {
            let _ = writeln!(s, "{:<width$}    note: {note}", "");
        }
    }
    s
}

#[derive(Serialize)]
struct McSummary {
    alpha: f64,
    clock: &'static str,
    interval: [f64; 2],
    n_paths: usize,
    dt: f64,
    t_max: f64,
    seed: u64,
    lambda_hat: f64,
    stderr: f64,
    window: [f64; 2],
    r_squared: f64,
    points: usize,
}

/// Survival curve by simulation and the fitted decay rate.
pub fn mc(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (clock, name) = if cfg.alpha == 2.0 {
        (Clock::Brownian, "brownian")
    } else {
        (Clock::Stable(stable_index(cfg)?), "stable")
    };
    let s = &cfg.mc;
    let config = McConfig {
        n_paths: s.paths,
        dt: s.dt,
        t_max: s.t_max,
        seed: s.seed,
        stride: ((0.05 / s.dt).round() as usize).max(1),
        start: Start::Midpoint,
    };
    let curve = survival_curve(cfg.interval, &clock, &config)?;
    let mut t = Table::new("survival", &["t", "survival", "stderr"]);
    for i in 0..curve.t_grid.len() {
        t.push(vec![curve.t_grid[i].into(), curve.survival[i].into(), curve.standard_errors[i].into()]);
    }
    out.table(&t)?;
    let est = estimate_lambda1(&curve, &WindowPolicy::default())?;
    let summary = McSummary {
        alpha: cfg.alpha,
        clock: name,
        interval: cfg.interval,
        n_paths: s.paths,
        dt: s.dt,
        t_max: s.t_max,
        seed: s.seed,
        lambda_hat: est.lambda_hat,
        stderr: est.stderr,
        window: est.window,
        r_squared: est.r_squared,
        points: est.points,
    };
    out.json("mc.json", &summary)?;
    println!(
        "lambda_hat = {:.6} ± {:.6}  window [{}, {}]  R² = {:.5}",
        est.lambda_hat, est.stderr, est.window[0], est.window[1], est.r_squared
    );
    Ok(())
}

fn finish(failures: Vec<String>) -> Result<(), CliError> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(failures.join("\n")))
    }
}

fn sci(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format!("{v:.2e}"),
        other => other.render(),
    }
}
