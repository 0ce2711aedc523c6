//! Screen and aperture problems: Galerkin solves, potentials, far fields
//! and residual measurements.

use crate::error::{Error, Result};
use crate::geometry::{build_mesh, dist_to_screen, BasisFunction, BasisKind, Mesh, Screen};
use crate::linalg::{lu_solve, CVector};
use crate::operators::{assemble_hypersingular, assemble_single_layer, GalerkinSystem, OperatorKind};
use crate::quad::GaussLegendre;
use crate::sobolev::{discrete_dual_norm, gram, rhs_functional, Density, WaveContext};
use crate::trace::{fundamental_solution, fundamental_solution_dr, Incident, Role, TraceData};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// Which boundary integral equation produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// −S_kφ = g_D; φ = [∂u/∂n], u = −𝒮_kφ.
    ScreenS,
    /// T_kψ = g_N; ψ = [u], u = 𝒟_kψ.
    ScreenT,
    /// T_k⦃u⦄ = g_H/2; u = ±𝒟_k⦃u⦄ on U^±.
    ApertureH,
    /// −S_k⦃∂u/∂n⦄ = g_I/2; u = ∓𝒮_k⦃∂u/∂n⦄ on U^±.
    ApertureI,
}

impl Problem {
    pub fn operator(self) -> OperatorKind {
        match self {
            Problem::ScreenS | Problem::ApertureI => OperatorKind::SingleLayer,
            Problem::ScreenT | Problem::ApertureH => OperatorKind::Hypersingular,
        }
    }

    fn role(self) -> Role {
        match self {
            Problem::ScreenS => Role::Dirichlet,
            Problem::ScreenT => Role::Neumann,
            Problem::ApertureH => Role::ApertureH,
            Problem::ApertureI => Role::ApertureI,
        }
    }

    fn is_aperture(self) -> bool {
        matches!(self, Problem::ApertureH | Problem::ApertureI)
    }
}

/// Galerkin density with the system and data that produced it.
#[derive(Debug, Clone)]
pub struct Solution {
    problem: Problem,
    density: Density,
    system: Arc<GalerkinSystem>,
    data: TraceData,
    rhs: CVector,
    algebraic_residual: f64,
}

impl Solution {
    pub fn problem(&self) -> Problem {
        self.problem
    }
    pub fn density(&self) -> &Density {
        &self.density
    }
    pub fn system(&self) -> &GalerkinSystem {
        &self.system
    }
    pub fn shared_system(&self) -> Arc<GalerkinSystem> {
        self.system.clone()
    }
    pub fn data(&self) -> &TraceData {
        &self.data
    }
    /// Load vector f of the solved system.
    pub fn rhs(&self) -> &CVector {
        &self.rhs
    }
    /// ‖M c − f‖ / ‖f‖ for the linear solve (0 when f = 0).
    pub fn algebraic_residual(&self) -> f64 {
        self.algebraic_residual
    }
    pub fn mesh(&self) -> &Mesh {
        self.density.mesh()
    }
    pub fn k(&self) -> f64 {
        self.system.ctx().k()
    }
}

fn check_role(problem: Problem, g: &TraceData, op: &'static str) -> Result<()> {
    if g.role != problem.role() {
        return Err(Error::input(op, format!("trace data has role {:?}, expected {:?}", g.role, problem.role())));
    }
    Ok(())
}

fn check_incident(problem: Problem, g: &TraceData, dim: usize, op: &'static str) -> Result<()> {
    let Some(inc) = g.incident() else { return Ok(()) };
    inc.validate(dim)?;
    if problem.is_aperture() {
        match inc {
            Incident::PlaneWaves { directions, .. } => {
                if directions.iter().any(|d| d[dim - 1] >= 0.0) {
                    return Err(Error::input(op, "aperture incidence needs plane-wave directions with d_n < 0"));
                }
            }
            Incident::PointSource { source } => {
                if source[dim - 1] <= 0.0 {
                    return Err(Error::input(op, "aperture point source must lie in the upper half-space"));
                }
            }
        }
    }
    Ok(())
}

/// Assembles the system for `problem` on a fresh mesh of size h.
pub fn assemble_for(problem: Problem, screen: &Screen, ctx: WaveContext, h: f64, tol: f64) -> Result<GalerkinSystem> {
    match problem.operator() {
        OperatorKind::SingleLayer => assemble_single_layer(&build_mesh(screen, h, BasisKind::P0)?, ctx, tol),
        OperatorKind::Hypersingular => assemble_hypersingular(&build_mesh(screen, h, BasisKind::P1)?, ctx, tol),
    }
}

/// Solves `problem` with an already assembled system.
pub fn solve_with_system(problem: Problem, system: Arc<GalerkinSystem>, g: &TraceData) -> Result<Solution> {
    const OP: &str = "solver::solve";
    if system.kind() != problem.operator() {
        return Err(Error::input(OP, "system operator does not match the problem"));
    }
    check_role(problem, g, OP)?;
    let mesh = system.mesh().clone();
    check_incident(problem, g, mesh.dim(), OP)?;
    let ctx = system.ctx();
    let data = if problem.is_aperture() { g.scaled(Complex64::new(0.5, 0.0)) } else { g.clone() };
    let rhs = rhs_functional(&data, &mesh, ctx, system.tol())?;
    let m = match problem.operator() {
        OperatorKind::SingleLayer => -system.matrix(),
        OperatorKind::Hypersingular => system.matrix().clone(),
    };
    let fnorm = rhs.norm();
    let (c, algebraic_residual) = if fnorm == 0.0 {
        (CVector::zeros(mesh.len()), 0.0)
    } else {
        let c = lu_solve(&m, &rhs, OP)?;
        let r = (&m * &c - &rhs).norm() / fnorm;
        (c, r)
    };
    Ok(Solution { problem, density: Density::new(mesh, c)?, system, data: g.clone(), rhs, algebraic_residual })
}

fn solve(problem: Problem, screen: &Screen, ctx: WaveContext, g: &TraceData, h: f64, tol: f64) -> Result<Solution> {
    check_role(problem, g, "solver::solve")?;
    let system = assemble_for(problem, screen, ctx, h, tol)?;
    solve_with_system(problem, Arc::new(system), g)
}

/// Sound-soft screen: −S_kφ = g_D with P0 elements.
#[allow(non_snake_case)]
pub fn solve_problem_S(screen: &Screen, ctx: WaveContext, g_d: &TraceData, h: f64, tol: f64) -> Result<Solution> {
    solve(Problem::ScreenS, screen, ctx, g_d, h, tol)
}

/// Sound-hard screen: T_kψ = g_N with P1 elements.
#[allow(non_snake_case)]
pub fn solve_problem_T(screen: &Screen, ctx: WaveContext, g_n: &TraceData, h: f64, tol: f64) -> Result<Solution> {
    solve(Problem::ScreenT, screen, ctx, g_n, h, tol)
}

/// Aperture in a sound-soft plane: T_k⦃u⦄ = g_H/2.
#[allow(non_snake_case)]
pub fn solve_aperture_H(screen: &Screen, ctx: WaveContext, g_h: &TraceData, h: f64, tol: f64) -> Result<Solution> {
    solve(Problem::ApertureH, screen, ctx, g_h, h, tol)
}

/// Aperture in a sound-hard plane: −S_k⦃∂u/∂n⦄ = g_I/2.
#[allow(non_snake_case)]
pub fn solve_aperture_I(screen: &Screen, ctx: WaveContext, g_i: &TraceData, h: f64, tol: f64) -> Result<Solution> {
    solve(Problem::ApertureI, screen, ctx, g_i, h, tol)
}

/// ∫ K(x, y) φ(y) dy over the support of one basis function, with panels
/// refined near x.
fn basis_potential(b: &BasisFunction, x: &[f64], kernel: &dyn Fn(f64) -> Complex64) -> Complex64 {
    let gl = GaussLegendre::order16();
    let d = b.factors.len();
    let xn = x[d];
    let segments: Vec<Vec<(f64, f64)>> = b.factors.iter().map(|f| f.breaks().windows(2).map(|w| (w[0], w[1])).collect()).collect();
    let mut total = Complex64::new(0.0, 0.0);
    let cell = |idx: &[usize]| -> Vec<(f64, f64)> { idx.iter().enumerate().map(|(m, &i)| segments[m][i]).collect() };
    let mut idx = vec![0usize; d];
    loop {
        let c = cell(&idx);
        let mut d2 = xn * xn;
        let mut size: f64 = 0.0;
        for (m, &(a, e)) in c.iter().enumerate() {
            let t = if x[m] < a {
                a - x[m]
            } else if x[m] > e {
                x[m] - e
            } else {
                0.0
            };
            d2 += t * t;
            size = size.max(e - a);
        }
        let dist = d2.sqrt();
        let parts = ((2.0 * size / dist).ceil() as usize).clamp(1, 32);
        let pieces: Vec<Vec<(f64, f64)>> = c
            .iter()
            .map(|&(a, e)| {
                let step = (e - a) / parts as f64;
                (0..parts).flat_map(|p| gl.mapped(a + p as f64 * step, a + (p + 1) as f64 * step)).collect()
            })
            .collect();
        if d == 1 {
            for &(y, w) in &pieces[0] {
                let r = ((x[0] - y).powi(2) + xn * xn).sqrt();
                total += kernel(r) * (w * b.eval(&[y]));
            }
        } else {
            for &(y1, w1) in &pieces[1] {
                for &(y0, w0) in &pieces[0] {
                    let r = ((x[0] - y0).powi(2) + (x[1] - y1).powi(2) + xn * xn).sqrt();
                    total += kernel(r) * (w0 * w1 * b.eval(&[y0, y1]));
                }
            }
        }
        // next cell
        let mut m = 0;
        loop {
            if m == d {
                return total;
            }
            idx[m] += 1;
            if idx[m] < segments[m].len() {
                break;
            }
            idx[m] = 0;
            m += 1;
        }
    }
}

/// 𝒮_kφ(x) for a P0/P1 expansion.
pub fn single_layer_potential(density: &Density, k: f64, x: &[f64]) -> Complex64 {
    let dim = x.len();
    let kernel = |r: f64| fundamental_solution(dim, k, r);
    density
        .mesh()
        .dofs()
        .iter()
        .zip(density.coefficients().iter())
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(b, c)| c * basis_potential(b, x, &kernel))
        .sum()
}

/// 𝒟_kψ(x) = ∫ ∂Φ(x, y)/∂n(y) ψ(y) dy with n = e_n.
pub fn double_layer_potential(density: &Density, k: f64, x: &[f64]) -> Complex64 {
    let dim = x.len();
    let xn = x[dim - 1];
    let kernel = |r: f64| -fundamental_solution_dr(dim, k, r) * (xn / r);
    density
        .mesh()
        .dofs()
        .iter()
        .zip(density.coefficients().iter())
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(b, c)| c * basis_potential(b, x, &kernel))
        .sum()
}

/// Scattered field u at each point. Points closer than h/2 to Γ̄ are
/// refused; aperture solutions also refuse points on the plane x_n = 0.
pub fn eval_field(sol: &Solution, points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    const OP: &str = "solver::eval_field";
    let mesh = sol.mesh();
    let dim = mesh.dim();
    let floor = 0.5 * mesh.h();
    for x in points {
        if x.len() != dim {
            return Err(Error::input(OP, format!("evaluation point must have {dim} coordinates")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::input(OP, "evaluation point is not finite"));
        }
        let dist = dist_to_screen(x, mesh.screen());
        if dist < floor {
            return Err(Error::input(OP, format!("point {x:?} is {dist:.3e} from the screen, below the floor {floor:.3e}")));
        }
        if sol.problem.is_aperture() && x[dim - 1] == 0.0 {
            return Err(Error::input(OP, format!("point {x:?} lies in the screen plane; aperture fields need x_n ≠ 0")));
        }
    }
    let k = sol.k();
    let out = points
        .par_iter()
        .map(|x| {
            let side = if x[dim - 1] > 0.0 { 1.0 } else { -1.0 };
            match sol.problem {
                Problem::ScreenS => -single_layer_potential(&sol.density, k, x),
                Problem::ScreenT => double_layer_potential(&sol.density, k, x),
                Problem::ApertureH => double_layer_potential(&sol.density, k, x) * side,
                Problem::ApertureI => -single_layer_potential(&sol.density, k, x) * side,
            }
        })
        .collect();
    Ok(out)
}

/// Far-field pattern u^∞ with u(Rx̂) ≈ e^{ikR} R^{-(n-1)/2} u^∞(x̂).
pub fn far_field(sol: &Solution, directions: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    const OP: &str = "solver::far_field";
    let mesh = sol.mesh();
    let dim = mesh.dim();
    let d = dim - 1;
    let k = sol.k();
    for x in directions {
        if x.len() != dim {
            return Err(Error::input(OP, format!("direction must have {dim} components")));
        }
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::input(OP, format!("direction {x:?} is not a unit vector")));
        }
    }
    // ∫ e^{-ikx̂·y} φ_j = (2π)^{d/2} φ̂_j(kx̂̃); Φ ~ pre · e^{ikR}/R^{d/2} · e^{-ikx̂·y}
    let pre = if dim == 2 {
        Complex64::from_polar(1.0 / (8.0 * PI * k).sqrt(), PI / 4.0) * (2.0 * PI).sqrt()
    } else {
        Complex64::new(1.0 / (4.0 * PI) * 2.0 * PI, 0.0)
    };
    let out = directions
        .iter()
        .map(|x| {
            let xi: Vec<f64> = x[..d].iter().map(|v| k * v).collect();
            let s: Complex64 =
                mesh.dofs().iter().zip(sol.density.coefficients().iter()).map(|(b, c)| c * b.ft(&xi)).sum::<Complex64>() * pre;
            let xn = x[d];
            let dl = Complex64::new(0.0, -k * xn);
            let side = if xn > 0.0 {
                1.0
            } else if xn < 0.0 {
                -1.0
            } else {
                0.0
            };
            match sol.problem {
                Problem::ScreenS => -s,
                Problem::ScreenT => s * dl,
                Problem::ApertureH => s * dl * side,
                Problem::ApertureI => -s * side,
            }
        })
        .collect();
    Ok(out)
}

/// |u(Rx̂)| R^{(n-1)/2} along a ray; tends to |u^∞(x̂)|.
pub fn sommerfeld_profile(sol: &Solution, direction: &[f64], radii: &[f64]) -> Result<Vec<f64>> {
    let points: Vec<Vec<f64>> = radii.iter().map(|r| direction.iter().map(|v| v * r).collect()).collect();
    let u = eval_field(sol, &points)?;
    let p = (sol.mesh().dim() as f64 - 1.0) / 2.0;
    Ok(u.iter().zip(radii).map(|(v, r)| v.norm() * r.powf(p)).collect())
}

/// Transfers a density to a nested finer mesh of the same kind (exact).
pub fn prolong(density: &Density, fine: &Mesh) -> Result<Density> {
    const OP: &str = "solver::prolong";
    let coarse = density.mesh();
    if fine.kind() != coarse.kind() || fine.screen() != coarse.screen() {
        return Err(Error::input(OP, "meshes must share screen and basis kind"));
    }
    let ratio = coarse.h() / fine.h();
    if ratio < 1.0 - 1e-12 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
        return Err(Error::input(OP, format!("fine h = {} does not nest in coarse h = {}", fine.h(), coarse.h())));
    }
    let coeffs: Vec<Complex64> =
        fine.dofs().iter().map(|b| coarse.eval_expansion(density.coefficients().as_slice(), &b.center())).collect();
    Density::new(fine.clone(), CVector::from_vec(coeffs))
}

/// Boundary residual of a computed solution, measured on a finer nested
/// reference mesh: ‖r‖ in the discrete dual norm, with r_j the residual
/// tested against the j-th reference basis function. Dirichlet residuals use
/// the H^{-1/2}_k Gram matrix and Neumann residuals the H^{1/2}_k one.
pub fn boundary_residual(sol: &Solution, h_ref: f64) -> Result<f64> {
    ResidualReference::new(sol.problem, sol.mesh().screen(), sol.system.ctx(), &sol.data, h_ref, sol.system.tol())?.residual(sol)
}

/// Reference operator, data functional and Gram factor for
/// [`boundary_residual`], assembled once and reused across solutions on
/// coarser nested meshes.
pub struct ResidualReference {
    problem: Problem,
    mesh: Mesh,
    k: f64,
    matrix: crate::linalg::CMatrix,
    rhs: CVector,
    gram: crate::sobolev::GramMatrix,
}

impl ResidualReference {
    pub fn new(problem: Problem, screen: &Screen, ctx: WaveContext, data: &TraceData, h_ref: f64, tol: f64) -> Result<Self> {
        check_role(problem, data, "solver::boundary_residual")?;
        let kind = match problem.operator() {
            OperatorKind::SingleLayer => BasisKind::P0,
            OperatorKind::Hypersingular => BasisKind::P1,
        };
        let mesh = build_mesh(screen, h_ref, kind)?;
        let data = if problem.is_aperture() { data.scaled(Complex64::new(0.5, 0.0)) } else { data.clone() };
        let rhs = rhs_functional(&data, &mesh, ctx, tol)?;
        let (matrix, s) = match problem.operator() {
            OperatorKind::SingleLayer => (-assemble_single_layer(&mesh, ctx, tol)?.matrix(), -0.5),
            OperatorKind::Hypersingular => (assemble_hypersingular(&mesh, ctx, tol)?.matrix().clone(), 0.5),
        };
        let gram = gram(&mesh, s, ctx, tol)?;
        Ok(ResidualReference { problem, mesh, k: ctx.k(), matrix, rhs, gram })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// Residual of `sol`, which must solve the same problem at the same k on
    /// a mesh nested in the reference mesh.
    pub fn residual(&self, sol: &Solution) -> Result<f64> {
        const OP: &str = "solver::boundary_residual";
        if sol.problem != self.problem || sol.k() != self.k {
            return Err(Error::input(OP, "solution does not match the reference problem or wavenumber"));
        }
        let fine = prolong(&sol.density, &self.mesh)?;
        let r = &self.matrix * fine.coefficients() - &self.rhs;
        discrete_dual_norm(&r, &self.gram)
    }
}

/// H^{∓1/2}_k norm of the solution density.
pub fn density_norm(sol: &Solution) -> Result<f64> {
    Ok(sol.system.trial_gram()?.norm(sol.density.coefficients()))
}
