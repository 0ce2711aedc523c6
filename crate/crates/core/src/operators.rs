//! Galerkin matrices of the single-layer and hypersingular operators, and
//! two independent reference assemblies.

use crate::error::{Error, Result};
use crate::geometry::{BasisFunction, BasisKind, Mesh, Shape};
use crate::linalg::CMatrix;
use crate::quad::{adaptive, AdaptiveOptions, GaussLegendre};
use crate::sobolev::{gram, GramMatrix, WaveContext};
use crate::special::hankel0;
use crate::spectral::{build_quadrature_for, QuadOptions, SymbolKind, SymbolQuadrature};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    SingleLayer,
    Hypersingular,
}

/// Pairing matrix of S_k (P0) or T_k (P1), with lazily built Gram matrices.
#[derive(Debug)]
pub struct GalerkinSystem {
    kind: OperatorKind,
    matrix: CMatrix,
    mesh: Mesh,
    ctx: WaveContext,
    tol: f64,
    quad: SymbolQuadrature,
    gram_minus: OnceLock<GramMatrix>,
    gram_plus: OnceLock<GramMatrix>,
}

impl GalerkinSystem {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }
    /// M_ij = ∫ σ φ̂_i conj(φ̂_j), complex symmetric.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }
    pub fn ctx(&self) -> WaveContext {
        self.ctx
    }
    pub fn tol(&self) -> f64 {
        self.tol
    }
    pub fn quadrature(&self) -> &SymbolQuadrature {
        &self.quad
    }

    /// Gram matrix of H^{-1/2}_k on the trial basis.
    pub fn gram_minus(&self) -> Result<&GramMatrix> {
        if let Some(g) = self.gram_minus.get() {
            return Ok(g);
        }
        let g = gram(&self.mesh, -0.5, self.ctx, self.tol)?;
        Ok(self.gram_minus.get_or_init(|| g))
    }

    /// Gram matrix of H^{1/2}_k on the trial basis (P1 only).
    pub fn gram_plus(&self) -> Result<&GramMatrix> {
        if let Some(g) = self.gram_plus.get() {
            return Ok(g);
        }
        let g = gram(&self.mesh, 0.5, self.ctx, self.tol)?;
        Ok(self.gram_plus.get_or_init(|| g))
    }

    /// Gram matrix of the trial space norm.
    pub fn trial_gram(&self) -> Result<&GramMatrix> {
        match self.kind {
            OperatorKind::SingleLayer => self.gram_minus(),
            OperatorKind::Hypersingular => self.gram_plus(),
        }
    }

    /// cᴴ M c, i.e. a(φ, φ) or b(φ, φ).
    pub fn form(&self, c: &crate::linalg::CVector) -> Complex64 {
        crate::linalg::quadratic_form(&self.matrix, c)
    }
}

/// Derivative functions ∂_m ψ_i of a P1 basis, axis-major.
pub fn hat_derivatives(mesh: &Mesh) -> Vec<BasisFunction> {
    let d = mesh.dim() - 1;
    (0..d).flat_map(|m| mesh.dofs().iter().map(move |b| b.derivative(m))).collect()
}

fn maue_rule(mesh: &Mesh, ctx: WaveContext, tol: f64) -> Result<SymbolQuadrature> {
    let slopes = hat_derivatives(mesh);
    build_quadrature_for(
        &[(SymbolKind::Hypersingular, &[mesh.dofs()]), (SymbolKind::SingleLayer, &[mesh.dofs(), &slopes])],
        ctx.k(),
        mesh.dim(),
        QuadOptions::new(tol),
    )
}

/// A_ij = (i/2) ∫ Z⁻¹ φ̂_i conj(φ̂_j) dξ on a P0 mesh.
pub fn assemble_single_layer(mesh: &Mesh, ctx: WaveContext, tol: f64) -> Result<GalerkinSystem> {
    if mesh.kind() != BasisKind::P0 {
        return Err(Error::input("operators::assemble_single_layer", "single-layer assembly requires a P0 mesh"));
    }
    let quad = build_quadrature_for(&[(SymbolKind::SingleLayer, &[mesh.dofs()])], ctx.k(), mesh.dim(), QuadOptions::new(tol))?;
    let matrix = quad.assemble(mesh.dofs());
    Ok(GalerkinSystem {
        kind: OperatorKind::SingleLayer,
        matrix,
        mesh: mesh.clone(),
        ctx,
        tol,
        quad,
        gram_minus: OnceLock::new(),
        gram_plus: OnceLock::new(),
    })
}

/// B_ij = (i/2) ∫ Z ψ̂_i conj(ψ̂_j) dξ on a P1 mesh. The rule is also
/// valid for the single-layer symbol on hats and their derivatives, so the
/// Maue reference shares its nodes.
pub fn assemble_hypersingular(mesh: &Mesh, ctx: WaveContext, tol: f64) -> Result<GalerkinSystem> {
    const OP: &str = "operators::assemble_hypersingular";
    if mesh.kind() != BasisKind::P1 {
        return Err(Error::input(OP, "hypersingular assembly requires a P1 mesh (P0 gives a non-integrable symbol integral)"));
    }
    let quad = maue_rule(mesh, ctx, tol)?;
    let matrix = quad.assemble(mesh.dofs());
    Ok(GalerkinSystem {
        kind: OperatorKind::Hypersingular,
        matrix,
        mesh: mesh.clone(),
        ctx,
        tol,
        quad,
        gram_minus: OnceLock::new(),
        gram_plus: OnceLock::new(),
    })
}

/// B^or = k² A[ψ] − Σ_m A[∂_m ψ] with single-layer symbol integrals.
pub fn maue_oracle_hypersingular(mesh: &Mesh, ctx: WaveContext, tol: f64) -> Result<CMatrix> {
    if mesh.kind() != BasisKind::P1 {
        return Err(Error::input("operators::maue_oracle_hypersingular", "requires a P1 mesh"));
    }
    let quad = maue_rule(mesh, ctx, tol)?.with_kind(SymbolKind::SingleLayer);
    let n = mesh.len();
    let d = mesh.dim() - 1;
    let slopes = hat_derivatives(mesh);
    let k2 = ctx.k() * ctx.k();
    let mut out = quad.assemble(mesh.dofs()) * Complex64::new(k2, 0.0);
    for m in 0..d {
        out -= quad.assemble(&slopes[m * n..(m + 1) * n]);
    }
    Ok(out)
}

/// Exact ∫_a^b ∫_c^e ln|x − y| dy dx.
fn log_double_integral(a: f64, b: f64, c: f64, e: f64) -> f64 {
    let g = |u: f64| if u == 0.0 { 0.0 } else { 0.5 * u * u * u.abs().ln() - 0.75 * u * u };
    g(b - c) - g(a - c) - g(b - e) + g(a - e)
}

/// Φ(r) + ln(r)/(2π) for n = 2, finite at r = 0.
fn smooth_part_2d(k: f64, r: f64) -> Complex64 {
    if r < 1e-300 {
        return Complex64::new(-((0.5 * k).ln() + EULER_GAMMA) / (2.0 * PI), 0.25);
    }
    Complex64::new(0.0, 0.25) * hankel0(k * r) + r.ln() / (2.0 * PI)
}

fn oracle_entry_2d(a: &BasisFunction, b: &BasisFunction, k: f64, rel: f64) -> Result<Complex64> {
    let (fa, fb) = (a.factors[0], b.factors[0]);
    let (a0, a1) = fa.support();
    let (b0, b1) = fb.support();
    let log_part = -log_double_integral(a0, a1, b0, b1) / (2.0 * PI);
    // x − y = δ + t with triangular weight of the two box widths
    let (ha, hb) = (fa.width, fb.width);
    let delta = fa.center - fb.center;
    let lo = -(ha + hb) / 2.0;
    let hi = (ha + hb) / 2.0;
    let kink = (ha - hb).abs() / 2.0;
    let weight = move |t: f64| {
        let u = t.abs();
        if u <= kink {
            ha.min(hb)
        } else {
            (hi - u).max(0.0)
        }
    };
    let mut breaks = vec![lo, -kink, kink, hi, -delta];
    breaks.retain(|x| *x >= lo && *x <= hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let f = |t: f64| smooth_part_2d(k, (delta + t).abs()) * weight(t);
    let scale = ha * hb;
    let coarse = adaptive(f, &breaks, AdaptiveOptions { abs_tol: 1e-3 * rel * scale, rel_tol: 1e-3 * rel, max_intervals: 10_000 })?;
    let fine = adaptive(f, &breaks, AdaptiveOptions { abs_tol: 1e-5 * rel * scale, rel_tol: 1e-5 * rel, max_intervals: 40_000 })?;
    let total = fine + log_part;
    if (fine - coarse).norm() > rel.max(1e-12) * total.norm() {
        return Err(Error::quad("operators::kernel_oracle_single_layer", "refinement did not stabilise"));
    }
    Ok(total)
}

/// Tensor Gauss rule on a rectangle with the singular point at corner (x0, y0),
/// through the Duffy map of the two triangles.
fn duffy_rect<F: Fn(f64, f64) -> Complex64>(f: &F, x0: f64, x1: f64, y0: f64, y1: f64, g: &GaussLegendre) -> Complex64 {
    let (a, b) = (x1 - x0, y1 - y0);
    let mut s = Complex64::new(0.0, 0.0);
    for (u, wu) in g.mapped(0.0, 1.0) {
        for (v, wv) in g.mapped(0.0, 1.0) {
            // triangle below the diagonal: (a u, b u v); above: (a u v, b u)
            s += f(x0 + a * u, y0 + b * u * v) * (wu * wv * a.abs() * b.abs() * u);
            s += f(x0 + a * u * v, y0 + b * u) * (wu * wv * a.abs() * b.abs() * u);
        }
    }
    s
}

fn tensor_rect<F: Fn(f64, f64) -> Complex64>(f: &F, x0: f64, x1: f64, y0: f64, y1: f64, g: &GaussLegendre) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (x, wx) in g.mapped(x0, x1) {
        for (y, wy) in g.mapped(y0, y1) {
            s += f(x, y) * (wx * wy);
        }
    }
    s
}

fn oracle_entry_3d(a: &BasisFunction, b: &BasisFunction, k: f64, rel: f64) -> Result<Complex64> {
    let mut delta = [0.0; 2];
    let mut w = [[0.0; 2]; 2];
    for m in 0..2 {
        if a.factors[m].shape != Shape::Box || b.factors[m].shape != Shape::Box || a.factors[m].width != b.factors[m].width {
            return Err(Error::input("operators::kernel_oracle_single_layer", "oracle expects equal-size P0 elements"));
        }
        delta[m] = a.factors[m].center - b.factors[m].center;
        w[m] = [a.factors[m].width, 0.0];
    }
    let h = [w[0][0], w[1][0]];
    let f = |t1: f64, t2: f64| {
        let r = ((delta[0] + t1).powi(2) + (delta[1] + t2).powi(2)).sqrt();
        let wt = (h[0] - t1.abs()) * (h[1] - t2.abs());
        Complex64::from_polar(wt / (4.0 * PI * r), k * r)
    };
    let cuts = |m: usize| {
        let mut c = vec![-h[m], 0.0, h[m], -delta[m]];
        c.retain(|x| *x >= -h[m] && *x <= h[m]);
        c.sort_by(f64::total_cmp);
        c.dedup_by(|x, y| (*x - *y).abs() < 1e-14 * h[m]);
        c
    };
    let (c1, c2) = (cuts(0), cuts(1));
    let sing = [-delta[0], -delta[1]];
    let eval = |p: usize| {
        let g = GaussLegendre::new(p);
        let mut s = Complex64::new(0.0, 0.0);
        for wx in c1.windows(2) {
            for wy in c2.windows(2) {
                let near = |v: f64, e: f64, m: usize| (v - e).abs() < 1e-14 * h[m];
                let cx = if near(wx[0], sing[0], 0) {
                    Some((wx[0], wx[1]))
                } else if near(wx[1], sing[0], 0) {
                    Some((wx[1], wx[0]))
                } else {
                    None
                };
                let cy = if near(wy[0], sing[1], 1) {
                    Some((wy[0], wy[1]))
                } else if near(wy[1], sing[1], 1) {
                    Some((wy[1], wy[0]))
                } else {
                    None
                };
                s += match (cx, cy) {
                    (Some((x0, x1)), Some((y0, y1))) => duffy_rect(&f, x0, x1, y0, y1, &g),
                    _ => tensor_rect(&f, wx[0], wx[1], wy[0], wy[1], &g),
                };
            }
        }
        s
    };
    let mut prev = eval(8);
    for p in [16, 32, 64] {
        let cur = eval(p);
        if (cur - prev).norm() <= rel.max(1e-13) * cur.norm() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::quad("operators::kernel_oracle_single_layer", "Gauss order doubling did not stabilise at order 64"))
}

/// ∫∫ Φ(x, y) φ_j(y) φ_i(x) by direct kernel quadrature: for n = 2 the
/// logarithmic part is integrated in closed form and the remainder
/// adaptively; for n = 3 the singular corners are resolved by Duffy maps.
/// Entries are accepted once two refinements agree to `tol` relative.
pub fn kernel_oracle_single_layer(mesh: &Mesh, ctx: WaveContext, tol: f64) -> Result<CMatrix> {
    const OP: &str = "operators::kernel_oracle_single_layer";
    if mesh.kind() != BasisKind::P0 {
        return Err(Error::input(OP, "requires a P0 mesh"));
    }
    if mesh.len() > 400 {
        return Err(Error::input(OP, format!("oracle limited to at most 400 dofs, mesh has {}", mesh.len())));
    }
    let n = mesh.len();
    let dofs = mesh.dofs();
    let idx: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let k = ctx.k();
    let vals: Result<Vec<Complex64>> = idx
        .par_iter()
        .map(
            |&(i, j)| {
                if mesh.dim() == 2 {
                    oracle_entry_2d(&dofs[i], &dofs[j], k, tol)
                } else {
                    oracle_entry_3d(&dofs[i], &dofs[j], k, tol)
                }
            },
        )
        .collect();
    let vals = vals?;
    let mut out = CMatrix::zeros(n, n);
    for (&(i, j), v) in idx.iter().zip(vals) {
        out[(i, j)] = v;
        out[(j, i)] = v;
    }
    Ok(out)
}

/// Writes (row, col, re, im) lines with a header.
pub fn export_matrix_csv(m: &CMatrix, path: &Path) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "row,col,re,im")?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            writeln!(w, "{i},{j},{:.16e},{:.16e}", z.re, z.im)?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, make_screen};
    use crate::linalg::{max_abs, CVector};
    use proptest::prelude::*;

    fn unit_mesh(h: f64, kind: BasisKind) -> Mesh {
        build_mesh(&make_screen(2, vec![(vec![0.0], vec![1.0])]).unwrap(), h, kind).unwrap()
    }

    fn ctx(k: f64) -> WaveContext {
        WaveContext::new(k).unwrap()
    }

    #[test]
    fn log_closed_form_matches_quadrature() {
        let (a, b, c, e) = (0.0, 0.5, 0.25, 1.0);
        let inner = |x: f64| {
            let g = |u: f64| if u == 0.0 { 0.0 } else { u * u.abs().ln() - u };
            // ∫_c^e ln|x−y| dy = G'(x−c) − G'(x−e)
            g(x - c) - g(x - e)
        };
        let num = crate::quad::adaptive_real(inner, &[a, c, b], AdaptiveOptions::new(1e-14, 1e-13)).unwrap();
        assert!((num - log_double_integral(a, b, c, e)).abs() < 1e-12);
    }

    #[test]
    fn single_element_matches_kernel_oracle() {
        let m = unit_mesh(1.0, BasisKind::P0);
        let s = assemble_single_layer(&m, ctx(1.0), 1e-9).unwrap();
        let o = kernel_oracle_single_layer(&m, ctx(1.0), 1e-10).unwrap();
        let (a, b) = (s.matrix()[(0, 0)], o[(0, 0)]);
        assert!((a - b).norm() <= 1e-6 * b.norm(), "{a} vs {b}");
    }

    #[test]
    fn far_entries_follow_midpoint_rule() {
        let s = make_screen(2, vec![(vec![0.0], vec![0.01]), (vec![5.0], vec![5.01])]).unwrap();
        let m = build_mesh(&s, 0.01, BasisKind::P0).unwrap();
        let o = kernel_oracle_single_layer(&m, ctx(2.0), 1e-10).unwrap();
        let mid = crate::trace::fundamental_solution(2, 2.0, 5.0) * 1e-4;
        assert!((o[(0, 1)] - mid).norm() < 1e-4 * mid.norm());
        assert_eq!(o[(0, 1)], o[(1, 0)]);
    }

    #[test]
    fn oracle_3d_far_entry_and_symmetry() {
        let s = make_screen(3, vec![(vec![0.0, 0.0], vec![1.0, 1.0])]).unwrap();
        let m = build_mesh(&s, 0.5, BasisKind::P0).unwrap();
        let o = kernel_oracle_single_layer(&m, ctx(1.0), 1e-9).unwrap();
        let a = assemble_single_layer(&m, ctx(1.0), 1e-3).unwrap();
        let scale = a.matrix()[(0, 0)].norm();
        assert!(max_abs(&(o.clone() - a.matrix())) < 2e-3 * scale, "{}", max_abs(&(o - a.matrix())) / scale);
    }

    #[test]
    fn assemblies_are_complex_symmetric() {
        let m = unit_mesh(1.0 / 16.0, BasisKind::P0);
        let s = assemble_single_layer(&m, ctx(3.0), 1e-6).unwrap();
        assert_eq!(s.matrix(), &s.matrix().transpose());
        let p = unit_mesh(1.0 / 16.0, BasisKind::P1);
        let t = assemble_hypersingular(&p, ctx(3.0), 1e-6).unwrap();
        assert_eq!(t.matrix(), &t.matrix().transpose());
        assert!(assemble_hypersingular(&m, ctx(3.0), 1e-6).is_err());
        assert!(assemble_single_layer(&p, ctx(3.0), 1e-6).is_err());
    }

    #[test]
    fn maue_single_hat_terms() {
        let p = unit_mesh(0.5, BasisKind::P1);
        let k = 3.0;
        let t = assemble_hypersingular(&p, ctx(k), 1e-8).unwrap();
        let o = maue_oracle_hypersingular(&p, ctx(k), 1e-8).unwrap();
        assert!((t.matrix()[(0, 0)] - o[(0, 0)]).norm() <= 1e-8 * o[(0, 0)].norm());
        // k → 0: derivative term dominates with negative real part
        let small = maue_oracle_hypersingular(&p, ctx(1e-3), 1e-6).unwrap();
        assert!(small[(0, 0)].re < 0.0 && small[(0, 0)].re.abs() > small[(0, 0)].im.abs());
    }

    #[test]
    fn csv_export_round_trip() {
        let m = unit_mesh(0.5, BasisKind::P0);
        let s = assemble_single_layer(&m, ctx(1.0), 1e-6).unwrap();
        let dir = std::env::temp_dir().join(format!("screenwave-op-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.csv");
        export_matrix_csv(s.matrix(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "row,col,re,im");
        assert_eq!(lines.len(), 5);
        let parts: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(parts[2].parse::<f64>().unwrap(), s.matrix()[(0, 0)].re);
        std::fs::remove_dir_all(dir).ok();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn single_layer_sign_structure(c in proptest::collection::vec(-1.0f64..1.0, 8), k in 0.5f64..12.0) {
            let m = unit_mesh(0.125, BasisKind::P0);
            let s = assemble_single_layer(&m, ctx(k), 1e-6).unwrap();
            let v = CVector::from_fn(8, |i, _| Complex64::new(c[i], 0.0));
            let a = s.form(&v);
            let scale = s.matrix()[(0, 0)].norm() * 1e-6 * v.norm_squared();
            prop_assert!(a.re >= -scale && a.im >= -scale);
        }

        #[test]
        fn hypersingular_sign_structure(c in proptest::collection::vec(-1.0f64..1.0, 7), k in 0.5f64..12.0) {
            let m = unit_mesh(0.125, BasisKind::P1);
            let t = assemble_hypersingular(&m, ctx(k), 1e-6).unwrap();
            let v = CVector::from_fn(7, |i, _| Complex64::new(c[i], 0.0));
            let b = t.form(&v);
            let scale = t.matrix()[(0, 0)].norm() * 1e-6 * v.norm_squared();
            prop_assert!(b.re <= scale && b.im >= -scale);
        }
    }
}
