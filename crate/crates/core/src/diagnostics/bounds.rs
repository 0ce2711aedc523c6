//! Pointwise field bounds and the truncated-kernel Fourier transform bound.

use super::{check_grid, MeshRule, SweepResult, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{dist_to_screen, Screen};
use crate::sobolev::WaveContext;
use crate::solver::{eval_field, solve_problem_S};
use crate::spectral::truncated_kernel_ft;
use crate::trace::{Role, TraceData};
use rayon::prelude::*;

/// k-dependence of the pointwise bound on the sound-soft field at distance
/// d from a screen of diameter L.
pub fn pointwise_shape(dim: usize, k: f64, l: f64, d: f64) -> f64 {
    let (kl, kd) = (k * l, k * d);
    let a = 1.0 + 1.0 / kl.sqrt();
    if dim == 3 {
        a * (1.0 + kd.powf(-1.5)) * (1.0 + kl * kl)
    } else {
        a * (1.0 + 1.0 / kd.sqrt()) * (2.0 + 1.0 / kd).ln() * (2.0 + kl).ln().sqrt() * (1.0 + kl.sqrt())
    }
}

/// Bound shape for |Φ̂_L(ξ, x_n)| √(k² + |ξ|²).
pub fn kernel_ft_shape(dim: usize, k: f64, l: f64, xn: f64) -> f64 {
    let kl = k * l;
    if dim == 3 {
        1.0 + kl.sqrt()
    } else {
        (2.0 + 1.0 / kl).ln() * (1.0 + kl.sqrt() + (k * xn.abs()).sqrt() * (2.0 + kl).ln())
    }
}

/// Solves the sound-soft problem per k and compares |u(x)| with the bound
/// shape, the constant being fixed at the smallest k. Passes if no ratio
/// exceeds 3.
pub fn pointwise_bound_check(
    screen: &Screen,
    k_grid: &[f64],
    x: &[f64],
    data: &TraceData,
    rule: MeshRule,
    tol: f64,
) -> Result<SweepResult> {
    const OP: &str = "diagnostics::pointwise_bound_check";
    check_grid(k_grid, "k", OP)?;
    rule.validate(OP)?;
    if data.role != Role::Dirichlet {
        return Err(Error::input(OP, "needs Dirichlet data"));
    }
    if x.len() != screen.dim() {
        return Err(Error::input(OP, format!("point must have {} coordinates", screen.dim())));
    }
    let l = screen.diameter();
    let d = dist_to_screen(x, screen);
    let floor = 0.5 * rule.h(k_grid[0]);
    if d < floor {
        return Err(Error::input(OP, format!("point is {d:.3e} from the screen, below the floor {floor:.3e}")));
    }
    let values: Vec<Result<(f64, f64)>> = k_grid
        .par_iter()
        .map(|&k| {
            let h = rule.h(k);
            let sol = solve_problem_S(screen, WaveContext::new(k)?, data, h, tol)?;
            Ok((h, eval_field(&sol, &[x.to_vec()])?[0].norm()))
        })
        .collect();
    let mut res = SweepResult::new("pointwise_bound", &["k"], &["h", "abs_u", "shape", "ratio"]);
    let mut c = None;
    let mut max_ratio: f64 = 0.0;
    for (&k, v) in k_grid.iter().zip(values) {
        let (h, u) = v?;
        let shape = pointwise_shape(screen.dim(), k, l, d);
        let c0 = *c.get_or_insert(u / shape);
        let ratio = if u == 0.0 { 0.0 } else { u / (c0 * shape) };
        max_ratio = max_ratio.max(ratio);
        res.push(vec![k], vec![h, u, shape, ratio], ratio.is_finite() && ratio <= 3.0)?;
    }
    res.summary = vec![("constant".into(), c.unwrap_or(0.0)), ("max_ratio".into(), max_ratio), ("distance".into(), d)];
    res.verdict = Verdict::from_bool(res.all_pass());
    Ok(res)
}

fn refine(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        out.push(w[0]);
        out.push(if w[0] > 0.0 { (w[0] * w[1]).sqrt() } else { 0.5 * w[1] });
    }
    out.extend(grid.last());
    out
}

/// (k, ξ, value, shape, value / shape)
type GridValue = (f64, f64, f64, f64, f64);

fn normalized_values(dim: usize, l: f64, xn: f64, ks: &[f64], xis: &[f64]) -> Result<Vec<GridValue>> {
    let pairs: Vec<(f64, f64)> = ks.iter().flat_map(|&k| xis.iter().map(move |&x| (k, x))).collect();
    pairs
        .par_iter()
        .map(|&(k, xi)| {
            let xv = if dim == 2 { vec![xi] } else { vec![xi, 0.0] };
            let v = truncated_kernel_ft(&xv, l, k, xn)?.norm() * (k * k + xi * xi).sqrt();
            let shape = kernel_ft_shape(dim, k, l, xn);
            Ok((k, xi, v, shape, v / shape))
        })
        .collect()
}

/// |Φ̂_L(ξ, x_n)| √(k² + ξ²) divided by its bound shape on a (k, ξ) grid;
/// the supremum must agree within a factor 2 with the supremum on the
/// grid refined by midpoints.
pub fn kernel_ft_bound_check(dim: usize, l: f64, xn: f64, k_grid: &[f64], xi_grid: &[f64]) -> Result<SweepResult> {
    const OP: &str = "diagnostics::kernel_ft_bound_check";
    check_grid(k_grid, "k", OP)?;
    if dim != 2 && dim != 3 {
        return Err(Error::input(OP, format!("dimension must be 2 or 3, got {dim}")));
    }
    if xi_grid.is_empty() || xi_grid.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || xi_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input(OP, "ξ grid must be non-negative and strictly increasing"));
    }
    if !(l > 0.0 && l.is_finite() && xn.is_finite()) {
        return Err(Error::input(OP, "L must be positive and x_n finite"));
    }
    let coarse = normalized_values(dim, l, xn, k_grid, xi_grid)?;
    let fine = normalized_values(dim, l, xn, &refine(k_grid), &refine(xi_grid))?;
    let mut res = SweepResult::new("kernel_ft_bound", &["k", "xi"], &["value", "shape", "normalized"]);
    for &(k, xi, v, s, r) in &coarse {
        res.push(vec![k, xi], vec![v, s, r], r.is_finite())?;
    }
    let sup_c = coarse.iter().map(|t| t.4).fold(0.0, f64::max);
    let sup_f = fine.iter().map(|t| t.4).fold(0.0, f64::max);
    let ratio = sup_f / sup_c;
    res.summary = vec![("sup_coarse".into(), sup_c), ("sup_refined".into(), sup_f), ("ratio".into(), ratio)];
    res.verdict = Verdict::from_bool(res.all_pass() && (0.5..=2.0).contains(&ratio));
    Ok(res)
}
