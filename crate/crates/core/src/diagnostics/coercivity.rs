//! Sampled coercivity quotients |cᴴMc| / ‖c‖²_G.

use super::{check_grid, hull_bump, loglog_fit, t_coercivity_exponent, MeshRule, SweepResult, Verdict, COERCIVITY_SLACK, S_COERCIVITY};
use crate::error::{Error, Result};
use crate::geometry::{build_mesh, BasisKind, Mesh, Screen};
use crate::linalg::{congruence_inverse, hermitian_part, CMatrix, CVector};
use crate::operators::{assemble_hypersingular, GalerkinSystem, OperatorKind};
use crate::sobolev::{GramMatrix, WaveContext};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFamily {
    /// Lowest eigenvector of the Hermitian part of e^{-iθ} G^{-1/2} M G^{-1/2}.
    Pencil,
    /// Plane-wave modulated smooth bump.
    Bump,
    /// Complex Gaussian coefficients.
    Random,
}

impl SampleFamily {
    pub fn code(self) -> f64 {
        match self {
            SampleFamily::Pencil => 0.0,
            SampleFamily::Bump => 1.0,
            SampleFamily::Random => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub quotient: f64,
    pub family: SampleFamily,
}

fn quotient(m: &CMatrix, g: &GramMatrix, c: &CVector) -> f64 {
    let num = c.dotc(&(m * c)).norm();
    let den = c.dotc(&(g.entries() * c)).re;
    num / den
}

fn bump_coefficients(mesh: &Mesh, k: f64, j: usize) -> CVector {
    let d = mesh.dim() - 1;
    let ndir = if d == 1 { 2 } else { 8 };
    let mult = [0.0, 0.5, 1.0, 1.5, 2.0][j % 5];
    let dir_idx = (j / 5) % ndir;
    let scale = if (j / (5 * ndir)).is_multiple_of(2) { 1.0 } else { 0.5 };
    let dir: Vec<f64> = if d == 1 {
        vec![if dir_idx == 0 { 1.0 } else { -1.0 }]
    } else {
        let a = 2.0 * PI * dir_idx as f64 / ndir as f64;
        vec![a.cos(), a.sin()]
    };
    let bump = hull_bump(mesh.screen(), scale);
    let v: Vec<Complex64> = mesh
        .dofs()
        .iter()
        .map(|b| {
            let y = b.center();
            let phase: f64 = y.iter().zip(&dir).map(|(a, e)| a * e).sum::<f64>() * mult * k;
            Complex64::from_polar(bump(&y), phase)
        })
        .collect();
    CVector::from_vec(v)
}

fn bump_family_size(mesh: &Mesh) -> usize {
    if mesh.dim() == 2 {
        20
    } else {
        80
    }
}

/// `count` sampled quotients for the pairing matrix M against the Gram
/// matrix G: pencil eigenvectors first, then modulated bumps, then seeded
/// complex Gaussians.
pub fn sample_quotients(m: &CMatrix, g: &GramMatrix, mesh: &Mesh, k: f64, count: usize, seed: u64) -> Result<Vec<Sample>> {
    const OP: &str = "diagnostics::sample_quotients";
    let n = mesh.len();
    if m.nrows() != n || g.len() != n {
        return Err(Error::input(OP, "matrix sizes do not match the mesh"));
    }
    let n_pencil = (count / 4).min(64).max(count.min(1));
    let n_bump = (count / 4).min(bump_family_size(mesh)).min(count - n_pencil);
    let n_random = count - n_pencil - n_bump;
    let mut out = Vec::with_capacity(count);

    let reduced = congruence_inverse(g.factor(), m, OP)?;
    // lowest eigenpair of Herm(e^{-iθ} R)
    let lowest = |theta: f64| {
        let rot = &reduced * Complex64::from_polar(1.0, -theta);
        let eig = hermitian_part(&rot).symmetric_eigen();
        let (imin, lmin) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &v)| if v < a.1 { (i, v) } else { a });
        (lmin, eig.eigenvectors.column(imin).into_owned())
    };
    let sample = |v: &CVector| Sample { quotient: v.dotc(&(&reduced * v)).norm() / v.norm_squared(), family: SampleFamily::Pencil };
    let n_grid = if n_pencil > 1 { n_pencil - 1 } else { n_pencil };
    let grid: Vec<(f64, f64, CVector)> = (0..n_grid)
        .into_par_iter()
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n_grid as f64;
            let (l, v) = lowest(theta);
            (theta, l, v)
        })
        .collect();
    let mut pencil: Vec<Sample> = grid.iter().map(|(_, _, v)| sample(v)).collect();
    if n_pencil > 1 {
        // the distance from 0 to the numerical range is max_θ λ_min(θ);
        // refine around the best grid angle by golden-section search
        let (t0, _) = grid.iter().fold((0.0, f64::NEG_INFINITY), |a, (t, l, _)| if *l > a.1 { (*t, *l) } else { a });
        let step = 2.0 * PI / n_grid as f64;
        let (mut a, mut b) = (t0 - step, t0 + step);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (lowest(c).0, lowest(d).0);
        for _ in 0..40 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = lowest(c).0;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = lowest(d).0;
            }
        }
        pencil.push(sample(&lowest(0.5 * (a + b)).1));
    }
    out.extend(pencil);
    for j in 0..n_bump {
        let c = bump_coefficients(mesh, k, j);
        out.push(Sample { quotient: quotient(m, g, &c), family: SampleFamily::Bump });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        let c = CVector::from_fn(n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        });
        out.push(Sample { quotient: quotient(m, g, &c), family: SampleFamily::Random });
    }
    Ok(out)
}

/// Sampled |a(φ,φ)| / ‖φ‖²_{H̃^{-1/2}_k} on an assembled single-layer
/// system. Each sample passes if it is at least 1/(2√2) − 10⁻³.
#[allow(non_snake_case)]
pub fn coercivity_scan_S(system: &GalerkinSystem, sample_count: usize, seed: u64) -> Result<SweepResult> {
    const OP: &str = "diagnostics::coercivity_scan_S";
    if system.kind() != OperatorKind::SingleLayer {
        return Err(Error::input(OP, "needs a single-layer system"));
    }
    if sample_count == 0 {
        return Err(Error::input(OP, "sample count must be positive"));
    }
    let g = system.gram_minus()?;
    let samples = sample_quotients(system.matrix(), g, system.mesh(), system.ctx().k(), sample_count, seed)?;
    let mut res = SweepResult::new("coercivity_S", &["sample"], &["quotient", "family"]);
    let line = S_COERCIVITY - COERCIVITY_SLACK;
    let mut min = f64::INFINITY;
    for (i, s) in samples.iter().enumerate() {
        min = min.min(s.quotient);
        res.push(vec![i as f64], vec![s.quotient, s.family.code()], s.quotient >= line)?;
    }
    res.summary = vec![("k".into(), system.ctx().k()), ("min_quotient".into(), min), ("bound".into(), S_COERCIVITY)];
    res.verdict = Verdict::from_bool(res.all_pass());
    Ok(res)
}

/// Minimum sampled |b(φ,φ)| / ‖φ‖²_{H̃^{1/2}_k} for each k, with a log-log
/// slope that must not fall below β − 1/4.
#[allow(non_snake_case)]
pub fn coercivity_scan_T(screen: &Screen, k_grid: &[f64], sample_count: usize, seed: u64, rule: MeshRule, tol: f64) -> Result<SweepResult> {
    const OP: &str = "diagnostics::coercivity_scan_T";
    check_grid(k_grid, "k", OP)?;
    rule.validate(OP)?;
    if sample_count == 0 {
        return Err(Error::input(OP, "sample count must be positive"));
    }
    let rows: Vec<Result<(f64, usize, f64)>> = k_grid
        .par_iter()
        .map(|&k| {
            let h = rule.h(k);
            let mesh = build_mesh(screen, h, BasisKind::P1)?;
            let sys = assemble_hypersingular(&mesh, WaveContext::new(k)?, tol)?;
            let g = sys.gram_plus()?;
            let s = sample_quotients(sys.matrix(), g, &mesh, k, sample_count, seed)?;
            let min = s.iter().map(|x| x.quotient).fold(f64::INFINITY, f64::min);
            Ok((h, mesh.len(), min))
        })
        .collect();
    let mut res = SweepResult::new("coercivity_T", &["k"], &["h", "dofs", "min_quotient"]);
    for (&k, row) in k_grid.iter().zip(rows) {
        let (h, n, q) = row?;
        res.push(vec![k], vec![h, n as f64, q], q > 0.0)?;
    }
    let beta = t_coercivity_exponent(screen.dim());
    res.summary.push(("beta".into(), beta));
    let positive = Verdict::from_bool(res.all_pass());
    res.verdict = if k_grid.len() >= super::fit::MIN_FIT_POINTS && res.all_pass() {
        let fit = loglog_fit(k_grid, &res.column("min_quotient").unwrap_or_default())?;
        res.fit = Some(fit);
        res.summary.push(("slope".into(), fit.slope));
        res.summary.push(("r_squared".into(), fit.r_squared));
        positive.and(fit.verdict(|s| s >= beta - 0.25))
    } else {
        positive.and(Verdict::Inconclusive)
    };
    Ok(res)
}
