//! Sound-soft scattering by successive Cantor prefractals.

use super::{SweepResult, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{cantor_prefractal, BasisKind};
use crate::sobolev::WaveContext;
use crate::solver::{eval_field, far_field, solve_problem_S, Solution};
use crate::trace::TraceData;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Largest system the prefractal study will assemble.
pub const MAX_PREFRACTAL_DOFS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// Far-field pattern on `directions` equispaced (n = 2) or Fibonacci
    /// (n = 3) directions, compared in the discrete L² norm.
    FarField { directions: usize },
    /// Scattered field at one point.
    Field { point: Vec<f64> },
}

/// m unit directions, equispaced on the circle (n = 2) or on a Fibonacci
/// lattice of the sphere (n = 3), with the common quadrature weight.
pub fn far_field_directions(dim: usize, m: usize) -> (Vec<Vec<f64>>, f64) {
    if dim == 2 {
        let dirs = (0..m).map(|j| {
            let t = 2.0 * PI * (j as f64 + 0.5) / m as f64;
            vec![t.cos(), t.sin()]
        });
        (dirs.collect(), 2.0 * PI / m as f64)
    } else {
        let golden = PI * (3.0 - 5f64.sqrt());
        let dirs = (0..m).map(|j| {
            let z = 1.0 - 2.0 * (j as f64 + 0.5) / m as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * j as f64;
            vec![r * a.cos(), r * a.sin(), z]
        });
        (dirs.collect(), 4.0 * PI / m as f64)
    }
}

fn observe(sol: &Solution, obs: &Observable) -> Result<(Vec<Complex64>, f64)> {
    match obs {
        Observable::FarField { directions: m } => {
            let (d, w) = far_field_directions(sol.mesh().dim(), *m);
            Ok((far_field(sol, &d)?, w))
        }
        Observable::Field { point } => Ok((eval_field(sol, std::slice::from_ref(point))?, 1.0)),
    }
}

/// Solves the sound-soft problem on Cantor prefractals of ratio α at each
/// level, with `elements_per_feature` elements across the smallest
/// interval. Records the observable norm, its change from the previous
/// level and the density L¹ mass. Trends are recorded, not asserted.
#[allow(clippy::too_many_arguments)]
pub fn prefractal_convergence(
    n: usize,
    alpha: f64,
    levels: &[usize],
    ctx: WaveContext,
    data: &TraceData,
    observable: &Observable,
    elements_per_feature: usize,
    tol: f64,
) -> Result<SweepResult> {
    const OP: &str = "diagnostics::prefractal_convergence";
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input(OP, "levels must be non-empty and strictly increasing"));
    }
    if elements_per_feature == 0 {
        return Err(Error::input(OP, "elements per feature must be positive"));
    }
    if let Observable::FarField { directions: 0 } = observable {
        return Err(Error::input(OP, "need at least one far-field direction"));
    }
    let mut res = SweepResult::new("prefractal", &["level"], &["h", "dofs", "observable_norm", "diff_previous", "l1_mass"]);
    let mut prev: Option<Vec<Complex64>> = None;
    let mut diffs = Vec::new();
    for &level in levels {
        let screen = cantor_prefractal(n, level, alpha)?;
        let h = alpha.powi(level as i32) / elements_per_feature as f64;
        let dofs = screen.boxes().len() * elements_per_feature.pow(n as u32 - 1);
        if dofs > MAX_PREFRACTAL_DOFS {
            return Err(Error::input(OP, format!("level {level} needs {dofs} dofs, above the cap {MAX_PREFRACTAL_DOFS}")));
        }
        let sol = solve_problem_S(&screen, ctx, data, h, tol)?;
        debug_assert_eq!(sol.mesh().kind(), BasisKind::P0);
        let (values, w) = observe(&sol, observable)?;
        let norm = (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt();
        let diff = match &prev {
            Some(p) => (p.iter().zip(&values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * w).sqrt(),
            None => f64::NAN,
        };
        if diff.is_finite() {
            diffs.push(diff);
        }
        let cell = h.powi(n as i32 - 1);
        let mass: f64 = sol.density().coefficients().iter().map(|c| c.norm()).sum::<f64>() * cell;
        res.push(vec![level as f64], vec![h, sol.mesh().len() as f64, norm, diff, mass], true)?;
        prev = Some(values);
    }
    let monotone = diffs.windows(2).all(|w| w[1] < w[0]);
    res.summary = vec![("monotone_differences".into(), if monotone { 1.0 } else { 0.0 })];
    res.verdict = Verdict::Pass;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_screen;
    use crate::trace::Incident;

    #[test]
    fn level_zero_matches_the_plain_interval() {
        let ctx = WaveContext::new(3.0).unwrap();
        let g = TraceData::sound_soft(Incident::plane_wave(vec![0.6, -0.8]));
        let obs = Observable::FarField { directions: 16 };
        let r = prefractal_convergence(2, 1.0 / 3.0, &[0, 1, 2], ctx, &g, &obs, 8, 1e-7).unwrap();
        assert_eq!(r.points.len(), 3);
        let interval = make_screen(2, vec![(vec![0.0], vec![1.0])]).unwrap();
        let sol = solve_problem_S(&interval, ctx, &g, 1.0 / 8.0, 1e-7).unwrap();
        let (v, w) = observe(&sol, &obs).unwrap();
        let norm = (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * w).sqrt();
        assert_eq!(r.points[0].values[2], norm);
        assert!(r.points[0].values[3].is_nan());
        assert!(r.points[1].values[3] > 0.0);
    }

    #[test]
    fn dof_cap_is_enforced() {
        let ctx = WaveContext::new(1.0).unwrap();
        let g = TraceData::sound_soft(Incident::plane_wave(vec![0.0, -1.0]));
        let e = prefractal_convergence(2, 1.0 / 3.0, &[8], ctx, &g, &Observable::FarField { directions: 4 }, 32, 1e-6).unwrap_err();
        assert!(e.to_string().contains("cap"));
    }
}
