//! Wavenumber-dependent Sobolev norms H^s_k, Gram matrices, duality
//! pairings and computable surrogates for H^{±1/2}(Γ) norms.

use crate::error::{Error, Result};
use crate::geometry::{BasisKind, Mesh, Screen};
use crate::linalg::{cholesky, CMatrix, CVector};
use crate::quad::{adaptive, adaptive_real, AdaptiveOptions, GaussLegendre};
use crate::spectral::{build_quadrature, SymbolKind};
use crate::trace::{dist, fundamental_solution, fundamental_solution_dr, TraceData};
use num_complex::Complex64;
use rayon::prelude::*;

/// Wavenumber k > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveContext {
    k: f64,
}

impl WaveContext {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::input("sobolev::wave_context", format!("wavenumber must be positive and finite, got {k}")));
        }
        Ok(WaveContext { k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

/// Coefficients over a mesh basis; P0 densities live in H̃^{-1/2}, P1 in H̃^{1/2}.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    mesh: Mesh,
    coefficients: CVector,
}

impl Density {
    pub fn new(mesh: Mesh, coefficients: CVector) -> Result<Self> {
        if coefficients.len() != mesh.len() {
            return Err(Error::input(
                "sobolev::density",
                format!("{} coefficients for a mesh with {} dofs", coefficients.len(), mesh.len()),
            ));
        }
        Ok(Density { mesh, coefficients })
    }

    pub fn zeros(mesh: Mesh) -> Self {
        let n = mesh.len();
        Density { mesh, coefficients: CVector::zeros(n) }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn coefficients(&self) -> &CVector {
        &self.coefficients
    }

    /// Sobolev order of the trial space: −1/2 for P0, +1/2 for P1.
    pub fn space_order(&self) -> f64 {
        match self.mesh.kind() {
            BasisKind::P0 => -0.5,
            BasisKind::P1 => 0.5,
        }
    }

    pub fn scaled(&self, c: Complex64) -> Density {
        Density { mesh: self.mesh.clone(), coefficients: &self.coefficients * c }
    }
}

/// Admissible Sobolev orders for Gram assembly on a basis kind.
pub fn admissible_orders(kind: BasisKind) -> (f64, f64) {
    match kind {
        BasisKind::P0 => (-2.0, 0.5),
        BasisKind::P1 => (-2.0, 1.5),
    }
}

/// G_ij = ∫ (k² + |ξ|²)^s φ̂_i conj(φ̂_j) dξ with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    s: f64,
    k: f64,
    h: f64,
    kind: BasisKind,
    entries: CMatrix,
    factor: CMatrix,
}

impl GramMatrix {
    /// Wraps an explicit Hermitian positive-definite matrix.
    pub fn from_matrix(s: f64, k: f64, mesh: &Mesh, entries: CMatrix) -> Result<Self> {
        const OP: &str = "sobolev::gram";
        if entries.nrows() != mesh.len() || entries.ncols() != mesh.len() {
            return Err(Error::input(OP, "Gram size does not match the mesh"));
        }
        let factor = cholesky(&entries, OP)?.l();
        Ok(GramMatrix { s, k, h: mesh.h(), kind: mesh.kind(), entries, factor })
    }

    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }
    /// Lower Cholesky factor L with G = L Lᴴ.
    pub fn factor(&self) -> &CMatrix {
        &self.factor
    }
    pub fn len(&self) -> usize {
        self.entries.nrows()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, mesh: &Mesh) -> Result<()> {
        if mesh.len() != self.len() || mesh.kind() != self.kind || mesh.h() != self.h {
            return Err(Error::input("sobolev::hsk_norm", "density mesh does not match the Gram matrix mesh"));
        }
        Ok(())
    }

    /// √(cᴴ G c).
    pub fn norm(&self, c: &CVector) -> f64 {
        let lc = self.factor.adjoint() * c;
        lc.norm()
    }

    /// G⁻¹ f.
    pub fn solve(&self, f: &CVector) -> Result<CVector> {
        let y =
            self.factor.solve_lower_triangular(f).ok_or_else(|| Error::linalg("sobolev::discrete_dual_norm", "singular Gram matrix"))?;
        self.factor.adjoint().solve_upper_triangular(&y).ok_or_else(|| Error::linalg("sobolev::discrete_dual_norm", "singular Gram matrix"))
    }
}

/// Gram matrix of the mesh basis in H^s_k.
pub fn gram(mesh: &Mesh, s: f64, ctx: WaveContext, tol: f64) -> Result<GramMatrix> {
    const OP: &str = "sobolev::gram";
    let (lo, hi) = admissible_orders(mesh.kind());
    if !(s >= lo && s < hi) {
        return Err(Error::input(OP, format!("order s = {s} outside the admissible range [{lo}, {hi}) for {:?}", mesh.kind())));
    }
    let quad = build_quadrature(SymbolKind::Bessel(s), ctx.k(), mesh, tol)?;
    let mut entries = quad.assemble(mesh.dofs());
    for z in entries.iter_mut() {
        z.im = 0.0;
    }
    GramMatrix::from_matrix(s, ctx.k(), mesh, entries)
}

/// ‖density‖ in H^s_k with the Gram matrix of order s.
pub fn hsk_norm(density: &Density, gram: &GramMatrix) -> Result<f64> {
    gram.check(density.mesh())?;
    Ok(gram.norm(density.coefficients()))
}

/// √(fᴴ G⁻¹ f): the norm of the functional c ↦ cᴴ f on the discrete space.
pub fn discrete_dual_norm(f: &CVector, gram: &GramMatrix) -> Result<f64> {
    if f.len() != gram.len() {
        return Err(Error::input("sobolev::discrete_dual_norm", "vector length does not match the Gram matrix"));
    }
    let y = gram.factor.solve_lower_triangular(f).ok_or_else(|| Error::linalg("sobolev::discrete_dual_norm", "singular Gram matrix"))?;
    Ok(y.norm())
}

/// f_j = ∫_Γ g(y) φ_j(y) dy by composite tensor Gauss–Legendre rules.
/// Panels are shorter than 4/k and than half the distance to a point source.
pub fn rhs_functional(g: &TraceData, mesh: &Mesh, ctx: WaveContext, tol: f64) -> Result<CVector> {
    const OP: &str = "sobolev::rhs_functional";
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::input(OP, "tolerance must be positive"));
    }
    let k = ctx.k();
    let screen = mesh.screen();
    let l = screen.diameter();
    if let Some(src) = g.source() {
        if src.len() != screen.dim() {
            return Err(Error::input(OP, "point source dimension does not match the screen"));
        }
        if crate::geometry::dist_to_screen(src, screen) <= 1e-12 * l {
            return Err(Error::input(OP, "point source lies on the screen closure"));
        }
    }
    if let Some(inc) = g.incident() {
        inc.validate(screen.dim())?;
    }
    let gl = GaussLegendre::order16();
    let vals: Result<Vec<Complex64>> = mesh
        .dofs()
        .par_iter()
        .map(|b| {
            let d = b.factors.len();
            let mut ell = 4.0 / k;
            if let Some(src) = g.source() {
                let mut e2 = src[d] * src[d];
                for (m, f) in b.factors.iter().enumerate() {
                    let (a, c) = f.support();
                    let e = (a - src[m]).max(0.0).max(src[m] - c);
                    e2 += e * e;
                }
                ell = ell.min(0.5 * e2.sqrt());
            }
            let mut axis_nodes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(d);
            for f in &b.factors {
                let br = f.breaks();
                let mut nodes = Vec::new();
                for w in br.windows(2) {
                    let pieces = ((w[1] - w[0]) / ell).ceil().max(1.0);
                    if pieces > 4096.0 {
                        return Err(Error::quad(OP, "source too close to the screen for the composite rule"));
                    }
                    let p = pieces as usize;
                    for i in 0..p {
                        let a = w[0] + (w[1] - w[0]) * i as f64 / p as f64;
                        let c = w[0] + (w[1] - w[0]) * (i + 1) as f64 / p as f64;
                        for (x, wt) in gl.mapped(a, c) {
                            nodes.push((x, wt * f.eval(x)));
                        }
                    }
                }
                axis_nodes.push(nodes);
            }
            let mut sum = Complex64::new(0.0, 0.0);
            if d == 1 {
                for &(x, w) in &axis_nodes[0] {
                    sum += g.eval(k, &[x]) * w;
                }
            } else {
                for &(y2, w2) in &axis_nodes[1] {
                    for &(y1, w1) in &axis_nodes[0] {
                        sum += g.eval(k, &[y1, y2]) * (w1 * w2);
                    }
                }
            }
            Ok(sum)
        })
        .collect();
    Ok(CVector::from_vec(vals?))
}

/// Function whose H^{1/2}_k(Γ) norm is bounded by [`cutoff_extension_norm`].
#[derive(Debug, Clone, PartialEq)]
pub enum ExtensionKind {
    /// e^{ik d·x} restricted to the plane.
    PlaneWave(Vec<f64>),
    /// Φ(x, ·) restricted to the plane.
    FundamentalSolution(Vec<f64>),
}

fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (1.0, 0.0)
    } else if t >= 1.0 {
        (0.0, 0.0)
    } else {
        (1.0 - t * t * (3.0 - 2.0 * t), -6.0 * t * (1.0 - t))
    }
}

struct Cutoff {
    lo: Vec<f64>,
    hi: Vec<f64>,
    width: f64,
    hole: Option<(Vec<f64>, f64)>,
}

impl Cutoff {
    /// χ and ∇χ at an in-plane point.
    fn eval(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let d = y.len();
        let e: Vec<f64> = (0..d)
            .map(|m| {
                if y[m] < self.lo[m] {
                    y[m] - self.lo[m]
                } else if y[m] > self.hi[m] {
                    y[m] - self.hi[m]
                } else {
                    0.0
                }
            })
            .collect();
        let r = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (eta, deta) = smoothstep(r / self.width);
        let mut chi = eta;
        let mut grad: Vec<f64> = if r > 0.0 { e.iter().map(|v| deta / self.width * v / r).collect() } else { vec![0.0; d] };
        if let Some((c, rho0)) = &self.hole {
            let rho = dist(y, c);
            let t = (rho0 - rho) / (0.5 * rho0);
            let (z, dz_dt) = smoothstep(t);
            let dz = dz_dt * (-2.0 / rho0);
            let unit: Vec<f64> = if rho > 0.0 { (0..d).map(|m| (y[m] - c[m]) / rho).collect() } else { vec![0.0; d] };
            for m in 0..d {
                grad[m] = grad[m] * z + chi * dz * unit[m];
            }
            chi *= z;
        }
        (chi, grad)
    }
}

/// Upper bound for ‖w‖_{H^{1/2}_k(Γ)} from an explicit extension χw̃:
/// ‖χw̃‖_{H^{1/2}_k} ≤ k^{-1/2} ‖χw̃‖_{H^1_k}, with χ = 1 on Γ, decaying
/// over a distance εL outside the hull of Γ (ε = 1 for plane waves,
/// min(1, d/(2L)) for Φ(x, ·)), and vanishing near the foot of x when x is
/// closer to the plane than to Γ.
pub fn cutoff_extension_norm(w: &ExtensionKind, screen: &Screen, ctx: WaveContext, tol: f64) -> Result<f64> {
    const OP: &str = "sobolev::cutoff_extension_norm";
    let n = screen.dim();
    let dd = n - 1;
    let k = ctx.k();
    let l = screen.diameter();
    let hull = screen.hull();
    let (eps, hole, source) = match w {
        ExtensionKind::PlaneWave(dir) => {
            if dir.len() != n {
                return Err(Error::input(OP, format!("direction must have {n} components")));
            }
            (1.0, None, None)
        }
        ExtensionKind::FundamentalSolution(x) => {
            if x.len() != n {
                return Err(Error::input(OP, format!("source must have {n} coordinates")));
            }
            let d = crate::geometry::dist_to_screen(x, screen);
            if d < 1e-8 * l {
                return Err(Error::input(OP, format!("source at distance {d:.3e} from the screen is below the floor 1e-8·L")));
            }
            let xn = x[dd].abs();
            let rho0 = (d * d - xn * xn).max(0.0).sqrt();
            let hole = if rho0 > 0.0 && xn < rho0 { Some((x[..dd].to_vec(), rho0)) } else { None };
            ((d / (2.0 * l)).min(1.0), hole, Some(x.clone()))
        }
    };
    let width = eps * l;
    let cut = Cutoff { lo: hull.lower.clone(), hi: hull.upper.clone(), width, hole: hole.clone() };
    let value = |y: &[f64]| -> f64 {
        let (chi, gchi) = cut.eval(y);
        if chi == 0.0 && gchi.iter().all(|g| *g == 0.0) {
            return 0.0;
        }
        let (wv, gw): (Complex64, Vec<Complex64>) = match w {
            ExtensionKind::PlaneWave(dir) => {
                let ph = Complex64::from_polar(1.0, k * (0..dd).map(|m| dir[m] * y[m]).sum::<f64>());
                (ph, (0..dd).map(|m| ph * Complex64::new(0.0, k * dir[m])).collect())
            }
            ExtensionKind::FundamentalSolution(x) => {
                let mut p = y.to_vec();
                p.push(0.0);
                let r = dist(&p, x);
                let dphi = fundamental_solution_dr(n, k, r);
                (fundamental_solution(n, k, r), (0..dd).map(|m| dphi * ((y[m] - x[m]) / r)).collect())
            }
        };
        let mut s = k * k * (chi * wv).norm_sqr();
        for m in 0..dd {
            s += (gw[m] * chi + wv * gchi[m]).norm_sqr();
        }
        s
    };
    let breaks_axis = |m: usize| -> Vec<f64> {
        let mut b = vec![hull.lower[m] - width, hull.lower[m], hull.upper[m], hull.upper[m] + width];
        if let Some(x) = &source {
            let c = x[m];
            match &hole {
                Some((_, r0)) => b.extend([c - r0, c - 0.5 * r0, c + 0.5 * r0, c + r0]),
                None => b.push(c),
            }
        }
        let (a, z) = (b[0], b[3]);
        b.retain(|v| *v >= a && *v <= z);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    };
    let opts = AdaptiveOptions { abs_tol: 0.0, rel_tol: tol, max_intervals: 20_000 };
    let h1sq = if dd == 1 {
        adaptive_real(|t| value(&[t]), &breaks_axis(0), opts)?
    } else {
        let b1 = breaks_axis(0);
        let inner_opts = AdaptiveOptions { abs_tol: 0.0, rel_tol: 0.1 * tol, max_intervals: 20_000 };
        let mut failure = None;
        let outer = adaptive(
            |y2| match adaptive_real(|y1| value(&[y1, y2]), &b1, inner_opts) {
                Ok(v) => Complex64::new(v, 0.0),
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            },
            &breaks_axis(1),
            opts,
        )?;
        if let Some(e) = failure {
            return Err(Error::quad(OP, e.to_string()));
        }
        outer.re
    };
    Ok(h1sq.sqrt() / k.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, cantor_prefractal, make_screen};
    use crate::trace::Incident;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit() -> Screen {
        make_screen(2, vec![(vec![0.0], vec![1.0])]).unwrap()
    }

    fn ctx(k: f64) -> WaveContext {
        WaveContext::new(k).unwrap()
    }

    #[test]
    fn gram_l2_examples() {
        let m = build_mesh(&unit(), 0.125, BasisKind::P0).unwrap();
        let g = gram(&m, 0.0, ctx(1.0), 1e-5).unwrap();
        for i in 0..m.len() {
            for j in 0..m.len() {
                let want = if i == j { 0.125 } else { 0.0 };
                assert!((g.entries()[(i, j)].re - want).abs() < 1e-5 * 0.125);
            }
        }
        let p1 = build_mesh(&make_screen(2, vec![(vec![0.0], vec![3.0])]).unwrap(), 1.0, BasisKind::P1).unwrap();
        let g = gram(&p1, 0.0, ctx(1.0), 1e-9).unwrap();
        assert_relative_eq!(g.entries()[(0, 0)].re, 2.0 / 3.0, max_relative = 1e-8);
        assert_relative_eq!(g.entries()[(0, 1)].re, 1.0 / 6.0, max_relative = 1e-8);
    }

    #[test]
    fn gram_minus_half_single_element_against_direct_quadrature() {
        // 2 ∫_0^∞ (1+ξ²)^{-1/2} sinc²(ξ/2) / (2π) dξ, by an independent adaptive rule in u = ln(1+ξ)
        let direct = adaptive_real(
            |u: f64| {
                let xi = u.exp() - 1.0;
                let s = crate::special::sinc(0.5 * xi);
                2.0 * (1.0 + xi * xi).powf(-0.5) * s * s / (2.0 * PI) * u.exp()
            },
            &(0..=60).map(|i| i as f64 * 0.25).collect::<Vec<_>>(),
            AdaptiveOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 100_000 },
        )
        .unwrap();
        // remainder beyond ξ = e^15: ≤ (2/π)·(1/2)·X^{-2}
        let m = build_mesh(&unit(), 1.0, BasisKind::P0).unwrap();
        let g = gram(&m, -0.5, ctx(1.0), 1e-9).unwrap();
        assert_relative_eq!(g.entries()[(0, 0)].re, direct, max_relative = 1e-8);
    }

    #[test]
    fn gram_rejects_inadmissible_orders() {
        let m = build_mesh(&unit(), 0.25, BasisKind::P0).unwrap();
        assert!(gram(&m, 0.5, ctx(1.0), 1e-6).is_err());
        assert!(gram(&m, -2.5, ctx(1.0), 1e-6).is_err());
    }

    #[test]
    fn norm_examples() {
        let m = build_mesh(&unit(), 0.25, BasisKind::P0).unwrap();
        let g = gram(&m, 0.0, ctx(2.0), 1e-5).unwrap();
        let zero = Density::zeros(m.clone());
        assert_eq!(hsk_norm(&zero, &g).unwrap(), 0.0);
        let mut c = CVector::zeros(4);
        c[1] = Complex64::new(1.0, 0.0);
        let one = Density::new(m.clone(), c).unwrap();
        assert_relative_eq!(hsk_norm(&one, &g).unwrap(), 0.5, max_relative = 1e-5);
        assert_relative_eq!(
            hsk_norm(&one.scaled(Complex64::new(2.0, 0.0)), &g).unwrap(),
            2.0 * hsk_norm(&one, &g).unwrap(),
            max_relative = 1e-14
        );
        let other = build_mesh(&unit(), 0.125, BasisKind::P0).unwrap();
        assert!(hsk_norm(&Density::zeros(other), &g).is_err());
    }

    #[test]
    fn dual_norm_examples() {
        let m = build_mesh(&unit(), 0.125, BasisKind::P0).unwrap();
        let g = gram(&m, -0.5, ctx(3.0), 1e-8).unwrap();
        let c = CVector::from_fn(m.len(), |i, _| Complex64::new(i as f64 - 2.0, 0.5 * i as f64));
        let f = g.entries() * &c;
        assert_relative_eq!(discrete_dual_norm(&f, &g).unwrap(), g.norm(&c), max_relative = 1e-10);
        assert_eq!(discrete_dual_norm(&CVector::zeros(m.len()), &g).unwrap(), 0.0);
        let eye = GramMatrix::from_matrix(0.0, 1.0, &m, CMatrix::identity(m.len(), m.len())).unwrap();
        assert_relative_eq!(discrete_dual_norm(&c, &eye).unwrap(), c.norm(), max_relative = 1e-14);
    }

    #[test]
    fn norm_equivalence_and_embedding_chain() {
        let m = build_mesh(&unit(), 0.125, BasisKind::P1).unwrap();
        let c = CVector::from_fn(m.len(), |i, _| Complex64::new((i as f64).sin(), (2.0 * i as f64).cos()));
        for &k in &[0.5, 4.0] {
            for &s in &[-0.5, 0.5] {
                let gk = gram(&m, s, ctx(k), 1e-7).unwrap().norm(&c);
                let g1 = gram(&m, s, ctx(1.0), 1e-7).unwrap().norm(&c);
                let (lo, hi) = (k.powf(s).min(1.0), k.powf(s).max(1.0));
                assert!(lo * g1 <= gk * (1.0 + 1e-6) && gk <= hi * g1 * (1.0 + 1e-6), "k={k} s={s}");
            }
            let m12 = gram(&m, -0.5, ctx(k), 1e-7).unwrap().norm(&c);
            let m0 = gram(&m, 0.0, ctx(k), 1e-7).unwrap().norm(&c);
            let p12 = gram(&m, 0.5, ctx(k), 1e-7).unwrap().norm(&c);
            assert!(m12 <= m0 / k.sqrt() * (1.0 + 1e-6));
            assert!(m0 / k.sqrt() <= p12 / k * (1.0 + 1e-6));
        }
    }

    #[test]
    fn rhs_examples() {
        let m = build_mesh(&unit(), 0.25, BasisKind::P0).unwrap();
        let one = TraceData::custom(crate::trace::Role::Dirichlet, |_| Complex64::new(1.0, 0.0));
        let f = rhs_functional(&one, &m, ctx(1.0), 1e-10).unwrap();
        assert!(f.iter().all(|v| (v - 0.25).norm() < 1e-14));
        let k = 2.0 * PI / 0.25;
        let pw = TraceData {
            kind: crate::trace::TraceKind::Field {
                incident: Incident::plane_wave(vec![1.0, 0.0]),
                normal_derivative: false,
                scale: Complex64::new(1.0, 0.0),
            },
            role: crate::trace::Role::Dirichlet,
        };
        let f = rhs_functional(&pw, &m, ctx(k), 1e-10).unwrap();
        assert!(f.iter().all(|v| v.norm() < 1e-13));
    }

    #[test]
    fn rhs_point_source_against_independent_quadrature() {
        let m = build_mesh(&unit(), 1.0, BasisKind::P0).unwrap();
        let k = 3.0;
        let src = vec![0.5, 0.3];
        let g = TraceData {
            kind: crate::trace::TraceKind::Field {
                incident: Incident::PointSource { source: src.clone() },
                normal_derivative: false,
                scale: Complex64::new(1.0, 0.0),
            },
            role: crate::trace::Role::Dirichlet,
        };
        let f = rhs_functional(&g, &m, ctx(k), 1e-10).unwrap();
        // ∫_0^1 (i/4) H0(k √((y-0.5)² + 0.09)) dy by adaptive bisection
        let oracle = adaptive(
            |y| Complex64::new(0.0, 0.25) * crate::special::hankel0(k * ((y - 0.5f64).powi(2) + 0.09).sqrt()),
            &[0.0, 0.5, 1.0],
            AdaptiveOptions::new(1e-14, 1e-13),
        )
        .unwrap();
        assert!((f[0] - oracle).norm() < 1e-12);
        let bad = TraceData {
            kind: crate::trace::TraceKind::Field {
                incident: Incident::PointSource { source: vec![0.5, 0.0] },
                normal_derivative: false,
                scale: Complex64::new(1.0, 0.0),
            },
            role: crate::trace::Role::Dirichlet,
        };
        assert!(rhs_functional(&bad, &m, ctx(k), 1e-10).is_err());
    }

    #[test]
    fn cutoff_norm_plane_wave_shape() {
        let s = unit();
        let d = vec![0.6, -0.8];
        let v1 = cutoff_extension_norm(&ExtensionKind::PlaneWave(d.clone()), &s, ctx(1.0), 1e-8).unwrap();
        assert!(v1.is_finite() && v1 > 0.0);
        let mut ratios = Vec::new();
        for j in 0..7 {
            let k = 2f64.powi(j);
            let v = cutoff_extension_norm(&ExtensionKind::PlaneWave(d.clone()), &s, ctx(k), 1e-8).unwrap();
            ratios.push(v / (1.0 + k.sqrt()));
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi / lo < 3.0, "{ratios:?}");
        let moved = cutoff_extension_norm(&ExtensionKind::PlaneWave(d.clone()), &s.translated(&[3.7]), ctx(4.0), 1e-8).unwrap();
        let here = cutoff_extension_norm(&ExtensionKind::PlaneWave(d), &s, ctx(4.0), 1e-8).unwrap();
        assert_relative_eq!(moved, here, max_relative = 1e-6);
    }

    #[test]
    fn cutoff_norm_point_source_on_plane_uses_hole() {
        let s = cantor_prefractal(2, 1, 1.0 / 3.0).unwrap();
        let v = cutoff_extension_norm(&ExtensionKind::FundamentalSolution(vec![0.5, 0.0]), &s, ctx(2.0), 1e-7).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(cutoff_extension_norm(&ExtensionKind::FundamentalSolution(vec![0.2, 0.0]), &s, ctx(2.0), 1e-7).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn duality_cauchy_schwarz(re in proptest::collection::vec(-1.0f64..1.0, 8), im in proptest::collection::vec(-1.0f64..1.0, 8), fre in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let m = build_mesh(&unit(), 0.125, BasisKind::P0).unwrap();
            let g = gram(&m, -0.5, ctx(2.0), 1e-6).unwrap();
            let c = CVector::from_fn(8, |i, _| Complex64::new(re[i], im[i]));
            let f = CVector::from_fn(8, |i, _| Complex64::new(fre[i], -re[i]));
            prop_assert!(c.dotc(&f).norm() <= discrete_dual_norm(&f, &g).unwrap() * g.norm(&c) * (1.0 + 1e-10));
        }

        #[test]
        fn gram_monotone_in_k(re in proptest::collection::vec(-1.0f64..1.0, 3), k in 0.5f64..8.0) {
            let m = build_mesh(&unit(), 0.25, BasisKind::P1).unwrap();
            let c = CVector::from_fn(3, |i, _| Complex64::new(re[i], 0.0));
            let up = |s: f64, k: f64| gram(&m, s, ctx(k), 1e-7).unwrap().norm(&c);
            prop_assert!(up(0.5, k) <= up(0.5, 1.5 * k) * (1.0 + 1e-6));
            prop_assert!(up(-0.5, 1.5 * k) <= up(-0.5, k) * (1.0 + 1e-6));
        }
    }
}
