//! Operator-norm surrogates and the sharpness families.

use super::{check_grid, hull_bump, loglog_fit, MeshRule, SweepResult, Verdict, CONTINUITY_SLACK, T_CONTINUITY};
use crate::error::{Error, Result};
use crate::geometry::{build_mesh, BasisKind, Mesh, Screen};
use crate::linalg::{congruence_inverse, CVector};
use crate::operators::{assemble_hypersingular, assemble_single_layer, GalerkinSystem, OperatorKind};
use crate::sobolev::{GramMatrix, WaveContext};
use num_complex::Complex64;
use rayon::prelude::*;

/// Largest generalized singular value of the pairing matrix in the trial
/// norm: sup |dᴴMc| / (‖c‖ ‖d‖) over the discrete space. This is a lower
/// bound for the operator norm on the continuous spaces.
pub fn continuity_estimate(system: &GalerkinSystem) -> Result<f64> {
    const OP: &str = "diagnostics::continuity_estimate";
    let g = system.trial_gram()?;
    let r = congruence_inverse(g.factor(), system.matrix(), OP)?;
    Ok(r.singular_values().iter().cloned().fold(0.0, f64::max))
}

/// σ_max / σ_min of G^{-1/2} M G^{-1/2}, the condition number in the
/// energy norm.
pub fn condition_estimate(system: &GalerkinSystem) -> Result<f64> {
    const OP: &str = "diagnostics::condition_estimate";
    let g = system.trial_gram()?;
    let r = congruence_inverse(g.factor(), system.matrix(), OP)?;
    let sv = r.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(Error::linalg(OP, "singular pairing matrix"));
    }
    Ok(max / min)
}

/// Growth shape of the single-layer norm in kL: 1 + √(kL) for n = 3, with
/// an extra log(2 + 1/(kL)) factor for n = 2.
pub fn single_layer_shape(dim: usize, kl: f64) -> f64 {
    let base = 1.0 + kl.sqrt();
    if dim == 2 {
        (2.0 + 1.0 / kl).ln() * base
    } else {
        base
    }
}

/// ‖Mc‖_* / ‖c‖ with the dual norm taken against the same Gram matrix.
fn image_ratio(system: &GalerkinSystem, g: &GramMatrix, c: &CVector) -> Result<f64> {
    let image = system.matrix() * c;
    let dual =
        g.factor().solve_lower_triangular(&image).ok_or_else(|| Error::linalg("diagnostics::sharpness", "singular Gram factor"))?.norm();
    Ok(dual / g.norm(c))
}

/// Continuity surrogate per k. For the single-layer operator the estimate
/// divided by its kL shape must vary by at most a factor 3; for the
/// hypersingular operator every estimate must stay below 1/2.
pub fn continuity_sweep(screen: &Screen, operator: OperatorKind, k_grid: &[f64], rule: MeshRule, tol: f64) -> Result<SweepResult> {
    const OP: &str = "diagnostics::continuity_sweep";
    check_grid(k_grid, "k", OP)?;
    rule.validate(OP)?;
    let l = screen.diameter();
    let dim = screen.dim();
    let rows: Vec<Result<(f64, usize, f64)>> = k_grid
        .par_iter()
        .map(|&k| {
            let h = rule.h(k);
            let ctx = WaveContext::new(k)?;
            let sys = match operator {
                OperatorKind::SingleLayer => assemble_single_layer(&build_mesh(screen, h, BasisKind::P0)?, ctx, tol)?,
                OperatorKind::Hypersingular => assemble_hypersingular(&build_mesh(screen, h, BasisKind::P1)?, ctx, tol)?,
            };
            Ok((h, sys.mesh().len(), continuity_estimate(&sys)?))
        })
        .collect();
    let mut res = SweepResult::new("continuity", &["k"], &["h", "dofs", "estimate", "shape", "normalized"]);
    for (&k, row) in k_grid.iter().zip(rows) {
        let (h, n, est) = row?;
        let shape = match operator {
            OperatorKind::SingleLayer => single_layer_shape(dim, k * l),
            OperatorKind::Hypersingular => 1.0,
        };
        let pass = match operator {
            OperatorKind::SingleLayer => est.is_finite(),
            OperatorKind::Hypersingular => est <= T_CONTINUITY + CONTINUITY_SLACK,
        };
        res.push(vec![k], vec![h, n as f64, est, shape, est / shape], pass)?;
    }
    let norm = res.column("normalized").unwrap_or_default();
    let max = norm.iter().cloned().fold(0.0, f64::max);
    let min = norm.iter().cloned().fold(f64::INFINITY, f64::min);
    res.summary = vec![("max_normalized".into(), max), ("min_normalized".into(), min), ("spread".into(), max / min)];
    res.verdict = match operator {
        OperatorKind::SingleLayer => Verdict::from_bool(res.all_pass() && max / min <= 3.0),
        OperatorKind::Hypersingular => Verdict::from_bool(res.all_pass()),
    };
    Ok(res)
}

/// P0 coefficients of e^{ik d̃·x} ψ(x) for the smooth hull bump ψ.
pub fn modulated_bump(mesh: &Mesh, k: f64, direction: &[f64]) -> CVector {
    let bump = hull_bump(mesh.screen(), 1.0);
    CVector::from_vec(
        mesh.dofs()
            .iter()
            .map(|b| {
                let y = b.center();
                let phase: f64 = y.iter().zip(direction).map(|(a, e)| a * e).sum::<f64>() * k;
                Complex64::from_polar(bump(&y), phase)
            })
            .collect(),
    )
}

/// ‖S_kφ‖ / ‖φ‖ for the modulated bump φ = e^{ik d̃·x}ψ; the fitted
/// log-log slope must lie in [0.4, 0.6].
#[allow(non_snake_case)]
pub fn sharpness_S(screen: &Screen, k_grid: &[f64], direction: &[f64], rule: MeshRule, tol: f64) -> Result<SweepResult> {
    const OP: &str = "diagnostics::sharpness_S";
    check_grid(k_grid, "k", OP)?;
    rule.validate(OP)?;
    let d = screen.dim() - 1;
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if direction.len() != d || (norm - 1.0).abs() > 1e-12 {
        return Err(Error::input(OP, format!("direction must be a unit vector with {d} components")));
    }
    let rows: Vec<Result<(f64, usize, f64)>> = k_grid
        .par_iter()
        .map(|&k| {
            let h = rule.h(k);
            let mesh = build_mesh(screen, h, BasisKind::P0)?;
            let sys = assemble_single_layer(&mesh, WaveContext::new(k)?, tol)?;
            let c = modulated_bump(&mesh, k, direction);
            Ok((h, mesh.len(), image_ratio(&sys, sys.gram_minus()?, &c)?))
        })
        .collect();
    let mut res = SweepResult::new("sharpness_S", &["k"], &["h", "dofs", "ratio"]);
    for (&k, row) in k_grid.iter().zip(rows) {
        let (h, n, r) = row?;
        res.push(vec![k], vec![h, n as f64, r], r > 0.0)?;
    }
    let positive = Verdict::from_bool(res.all_pass());
    res.verdict = if k_grid.len() >= super::fit::MIN_FIT_POINTS && res.all_pass() {
        let fit = loglog_fit(k_grid, &res.column("ratio").unwrap_or_default())?;
        res.fit = Some(fit);
        res.summary = vec![("slope".into(), fit.slope), ("r_squared".into(), fit.r_squared)];
        positive.and(fit.verdict(|s| (0.4..=0.6).contains(&s)))
    } else {
        positive.and(Verdict::Inconclusive)
    };
    Ok(res)
}

/// ‖T_kφ‖ / ‖φ‖ for a fixed smooth bump φ. Every ratio must be at most
/// 1/2, and above 0.1 once k ≥ `k_asymptotic`.
#[allow(non_snake_case)]
pub fn sharpness_T(screen: &Screen, k_grid: &[f64], k_asymptotic: f64, rule: MeshRule, tol: f64) -> Result<SweepResult> {
    const OP: &str = "diagnostics::sharpness_T";
    check_grid(k_grid, "k", OP)?;
    rule.validate(OP)?;
    let rows: Vec<Result<(f64, usize, f64)>> = k_grid
        .par_iter()
        .map(|&k| {
            let h = rule.h(k);
            let mesh = build_mesh(screen, h, BasisKind::P1)?;
            let sys = assemble_hypersingular(&mesh, WaveContext::new(k)?, tol)?;
            let bump = hull_bump(screen, 1.0);
            let c = CVector::from_vec(mesh.dofs().iter().map(|b| Complex64::new(bump(&b.center()), 0.0)).collect());
            Ok((h, mesh.len(), image_ratio(&sys, sys.gram_plus()?, &c)?))
        })
        .collect();
    let mut res = SweepResult::new("sharpness_T", &["k"], &["h", "dofs", "ratio"]);
    let mut min_large = f64::INFINITY;
    for (&k, row) in k_grid.iter().zip(rows) {
        let (h, n, r) = row?;
        let mut pass = r > 0.0 && r <= T_CONTINUITY + CONTINUITY_SLACK;
        if k >= k_asymptotic {
            pass &= r > 0.1;
            min_large = min_large.min(r);
        }
        res.push(vec![k], vec![h, n as f64, r], pass)?;
    }
    res.summary = vec![("min_ratio_large_k".into(), min_large), ("asymptotic_constant".into(), 3f64.sqrt() / (8.0 * 2f64.sqrt()))];
    res.verdict = Verdict::from_bool(res.all_pass());
    Ok(res)
}
