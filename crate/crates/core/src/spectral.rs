//! Fourier symbols and the panelized quadrature that evaluates
//! ∫ σ(ξ) φ̂_i(ξ) conj(φ̂_j(ξ)) dξ over ℝ^{n-1}.
//!
//! The radial variable is split at |ξ| = k. Below the ring we substitute
//! ρ = k sin t, above it ρ = k cosh t up to 2k, so that dρ/|Z| = dt and
//! the inverse square-root singularity of the single-layer symbol disappears.
//! Beyond 2k plain Gauss–Legendre panels run up to a truncation radius
//! chosen from an analytic bound on the discarded tail.

use crate::error::{Error, Result};
use crate::geometry::{profile_ft, BasisFunction, Mesh, Shape};
use crate::quad::{adaptive, AdaptiveOptions, GaussLegendre};
use crate::special::{bessel_j0, hankel0};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;

/// One-dimensional factor profiles (shape, width) of a basis function.
type Profile = Vec<(Shape, f64)>;
/// Per-axis profile indices of both functions, then per-axis offset indices.
type JobKey = ([usize; 2], [usize; 2], [usize; 2]);

/// Pseudodifferential symbol of an operator or Sobolev weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolKind {
    /// σ = i / (2Z)
    SingleLayer,
    /// σ = (i/2) Z
    Hypersingular,
    /// σ = (k² + |ξ|²)^s
    Bessel(f64),
}

/// Z(ξ) = √(k² − |ξ|²) inside the ring, i√(|ξ|² − k²) outside.
pub fn symbol_z(xi: &[f64], k: f64) -> Complex64 {
    z_radial(xi.iter().map(|x| x * x).sum::<f64>().sqrt(), k)
}

pub fn z_radial(rho: f64, k: f64) -> Complex64 {
    if rho <= k {
        Complex64::new(((k - rho) * (k + rho)).sqrt(), 0.0)
    } else {
        Complex64::new(0.0, ((rho - k) * (rho + k)).sqrt())
    }
}

impl SymbolKind {
    pub fn symbol(&self, rho: f64, k: f64) -> Complex64 {
        match *self {
            SymbolKind::SingleLayer => Complex64::new(0.0, 0.5) / z_radial(rho, k),
            SymbolKind::Hypersingular => Complex64::new(0.0, 0.5) * z_radial(rho, k),
            SymbolKind::Bessel(s) => Complex64::new((k * k + rho * rho).powf(s), 0.0),
        }
    }

    /// (B, q) with |σ(ρ)| ≤ B ρ^q for ρ ≥ 2k.
    fn growth(&self) -> (f64, f64) {
        match *self {
            SymbolKind::SingleLayer => (1.0 / 3f64.sqrt(), -1.0),
            SymbolKind::Hypersingular => (0.5, 1.0),
            SymbolKind::Bessel(s) => (1.25f64.powf(s.max(0.0)), 2.0 * s),
        }
    }

    /// σ(ρ(t)) ρ'(t) for the substituted variable.
    fn substituted(&self, sub: Substitution, t: f64, k: f64) -> Complex64 {
        let half_i = Complex64::new(0.0, 0.5);
        match sub {
            Substitution::Sin => {
                let (s, c) = t.sin_cos();
                match *self {
                    SymbolKind::SingleLayer => half_i,
                    SymbolKind::Hypersingular => half_i * (k * c) * (k * c),
                    SymbolKind::Bessel(p) => Complex64::new((k * k * (1.0 + s * s)).powf(p) * k * c, 0.0),
                }
            }
            Substitution::Cosh => {
                let (ch, sh) = (t.cosh(), t.sinh());
                match *self {
                    SymbolKind::SingleLayer => Complex64::new(0.5, 0.0),
                    SymbolKind::Hypersingular => Complex64::new(-0.5 * (k * sh) * (k * sh), 0.0),
                    SymbolKind::Bessel(p) => Complex64::new((k * k * (1.0 + ch * ch)).powf(p) * k * sh, 0.0),
                }
            }
            Substitution::Plain => self.symbol(t, k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substitution {
    /// ρ = k sin t on (0, k)
    Sin,
    /// ρ = k cosh t on (k, 2k)
    Cosh,
    /// ρ = t
    Plain,
}

/// One radial panel of the rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub rho_a: f64,
    pub rho_b: f64,
    pub sub: Substitution,
    pub nodes: usize,
    t_a: f64,
    t_b: f64,
    angular: usize,
}

impl Panel {
    /// Angular trapezoid node count over the full circle (n = 3 only, 0 otherwise).
    pub fn angular_nodes(&self) -> usize {
        self.angular
    }
}

/// Controls for [`build_quadrature`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Target for the truncated tail and panel resolution, relative to the
    /// largest self-interaction of the basis family.
    pub tol: f64,
    /// Cap on radial × angular nodes.
    pub max_nodes: usize,
}

impl QuadOptions {
    pub fn new(tol: f64) -> Self {
        QuadOptions { tol, max_nodes: 40_000_000 }
    }
}

/// Panelized quadrature over ℝ^{n-1} for one symbol and basis family.
#[derive(Debug, Clone)]
pub struct SymbolQuadrature {
    kind: SymbolKind,
    k: f64,
    dim: usize,
    xi_max: f64,
    panels: Vec<Panel>,
    tail_bound: f64,
    abs_target: f64,
}

impl SymbolQuadrature {
    pub fn kind(&self) -> SymbolKind {
        self.kind
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }
    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }
    /// Bound on the discarded |ξ| > xi_max part, for every pair of the family.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }
    /// Absolute error target the rule was built for.
    pub fn abs_target(&self) -> f64 {
        self.abs_target
    }

    pub fn node_count(&self) -> usize {
        self.panels.iter().map(|p| p.nodes * p.angular.max(2) / 2).sum()
    }

    /// Same radial and angular layout, different symbol.
    pub fn with_kind(&self, kind: SymbolKind) -> SymbolQuadrature {
        SymbolQuadrature { kind, ..self.clone() }
    }

    /// ∫ σ φ̂_a conj(φ̂_b) dξ for every pair, sharing node evaluations.
    pub fn integrate_pairs(&self, pairs: &[(&BasisFunction, &BasisFunction)]) -> Vec<Complex64> {
        if pairs.is_empty() {
            return Vec::new();
        }
        let batch = Batch::new(pairs, self.dim - 1);
        let sums = batch.run(self);
        batch.pair_job.iter().map(|&j| sums[j]).collect()
    }

    /// Full matrix M_ij = ∫ σ φ̂_i conj(φ̂_j); only i ≤ j is integrated and mirrored.
    pub fn assemble(&self, funcs: &[BasisFunction]) -> nalgebra::DMatrix<Complex64> {
        let n = funcs.len();
        let mut idx = Vec::with_capacity(n * (n + 1) / 2);
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                idx.push((i, j));
                pairs.push((&funcs[i], &funcs[j]));
            }
        }
        let vals = self.integrate_pairs(&pairs);
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for (&(i, j), v) in idx.iter().zip(vals) {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }
}

/// Builds a rule for the basis of `mesh`.
pub fn build_quadrature(kind: SymbolKind, k: f64, mesh: &Mesh, tol: f64) -> Result<SymbolQuadrature> {
    build_quadrature_for(&[(kind, &[mesh.dofs()])], k, mesh.dim(), QuadOptions::new(tol))
}

/// Builds one rule valid for every listed (symbol, basis families)
/// requirement; the stored kind is that of the first entry.
pub fn build_quadrature_for(reqs: &[(SymbolKind, &[&[BasisFunction]])], k: f64, dim: usize, opts: QuadOptions) -> Result<SymbolQuadrature> {
    const OP: &str = "spectral::build_quadrature";
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::input(OP, format!("wavenumber must be positive and finite, got {k}")));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::input(OP, format!("tolerance must be positive, got {}", opts.tol)));
    }
    if dim != 2 && dim != 3 {
        return Err(Error::input(OP, format!("ambient dimension must be 2 or 3, got {dim}")));
    }
    if reqs.is_empty() {
        return Err(Error::input(OP, "empty symbol list"));
    }
    let d = dim - 1;
    let mut per_req: Vec<(SymbolKind, Vec<Profile>)> = Vec::new();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    let mut wmax: f64 = 0.0;
    for (kind, families) in reqs {
        let mut profiles: Vec<Vec<(Shape, f64)>> = Vec::new();
        for f in families.iter().flat_map(|f| f.iter()) {
            if f.factors.len() != d {
                return Err(Error::input(OP, "basis function dimension does not match"));
            }
            let p: Vec<(Shape, f64)> = f.factors.iter().map(|x| (x.shape, x.width)).collect();
            if !profiles.contains(&p) {
                profiles.push(p);
            }
            for (m, x) in f.factors.iter().enumerate() {
                let (a, b) = x.support();
                lo[m] = lo[m].min(a);
                hi[m] = hi[m].max(b);
                wmax = wmax.max(x.width);
            }
        }
        if profiles.is_empty() {
            return Err(Error::input(OP, "empty basis family"));
        }
        per_req.push((*kind, profiles));
    }
    // geometric oscillation scale: extent of all supports
    let extent = (0..d).map(|m| (hi[m] - lo[m]).powi(2)).sum::<f64>().sqrt();
    let freq = extent + d as f64 * wmax;

    // pilot self-interactions set the absolute scale
    let mut scale: f64 = 0.0;
    for (kind, profiles) in &per_req {
        scale = scale.max(pilot_scale(*kind, k, dim, profiles)?);
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::quad(OP, "could not determine integrand scale"));
    }
    let target = opts.tol * scale;
    let mut x_needed: f64 = 2.0 * k;
    for (kind, profiles) in &per_req {
        x_needed = x_needed.max(truncation_radius(*kind, k, dim, profiles, target, OP)?);
    }
    let mut tail_bound: f64 = 0.0;
    for (kind, profiles) in &per_req {
        tail_bound = tail_bound.max(tail_all(*kind, profiles, dim, x_needed).unwrap_or(f64::INFINITY));
    }
    let estimate = estimate_nodes(k, x_needed, freq, dim);
    if estimate > opts.max_nodes as f64 {
        return Err(Error::quad(
            OP,
            format!(
                "tolerance {} unachievable: needs about {estimate:.3e} nodes (cap {}), xi_max = {x_needed:.3e}",
                opts.tol, opts.max_nodes
            ),
        ));
    }
    let panels = make_panels(k, x_needed, freq, dim);
    Ok(SymbolQuadrature { kind: reqs[0].0, k, dim, xi_max: x_needed, panels, tail_bound, abs_target: target })
}

fn pilot_scale(kind: SymbolKind, k: f64, dim: usize, profiles: &[Vec<(Shape, f64)>]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for p in profiles {
        let wmin = p.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let xp = 2.0 * k + 40.0 / wmin;
        let freq = p.iter().map(|x| x.1).sum::<f64>();
        let rule = SymbolQuadrature {
            kind,
            k,
            dim,
            xi_max: xp,
            panels: make_panels(k, xp, freq, dim),
            tail_bound: f64::NAN,
            abs_target: f64::NAN,
        };
        let f = BasisFunction { factors: p.iter().map(|&(shape, width)| crate::geometry::Factor { shape, center: 0.0, width }).collect() };
        let v = rule.integrate_pairs(&[(&f, &f)])[0];
        best = best.max(v.norm());
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy)]
struct Envelope {
    c0: f64,
    a: f64,
    p: f64,
}

fn factor_envelope(shape: Shape, w: f64) -> (f64, f64, f64) {
    match shape {
        Shape::Box => (w, 2.0, 1.0),
        Shape::Hat => (w, 4.0 / w, 2.0),
        Shape::HatSlope => (1.5, 4.0 / w, 1.0),
    }
}

fn pair_envelope(a: (Shape, f64), b: (Shape, f64)) -> Envelope {
    let (ca, aa, pa) = factor_envelope(a.0, a.1);
    let (cb, ab, pb) = factor_envelope(b.0, b.1);
    Envelope { c0: ca * cb / (2.0 * PI), a: aa * ab / (2.0 * PI), p: pa + pb }
}

/// ∫_a^∞ t^r min(C0, A t^{-P}) dt, or None when divergent.
fn envelope_moment(e: Envelope, r: f64, a: f64) -> Option<f64> {
    if e.p - r - 1.0 <= 0.0 {
        return None;
    }
    let ts = (e.a / e.c0).powf(1.0 / e.p);
    let far = |from: f64| e.a * from.powf(r - e.p + 1.0) / (e.p - r - 1.0);
    if a >= ts {
        return Some(far(a));
    }
    let head = if (r + 1.0).abs() < 1e-14 {
        if a <= 0.0 {
            return None;
        }
        e.c0 * (ts / a).ln()
    } else if r + 1.0 < 0.0 && a <= 0.0 {
        return None;
    } else {
        e.c0 * (ts.powf(r + 1.0) - if a > 0.0 { a.powf(r + 1.0) } else { 0.0 }) / (r + 1.0)
    };
    Some(head + far(ts))
}

/// Bound on |∫_{|ξ|>X} σ P| for one pair of profiles.
fn tail_pair(kind: SymbolKind, pa: &[(Shape, f64)], pb: &[(Shape, f64)], dim: usize, x: f64) -> Option<f64> {
    let (b, q) = kind.growth();
    if dim == 2 {
        let e = pair_envelope(pa[0], pb[0]);
        let ex = e.p - q - 1.0;
        if ex <= 0.0 {
            return None;
        }
        return Some(2.0 * b * e.a * x.powf(-ex) / ex);
    }
    let e = [pair_envelope(pa[0], pb[0]), pair_envelope(pa[1], pb[1])];
    let a = x / 2f64.sqrt();
    let mut total = 0.0;
    for m in 0..2 {
        let (em, eo) = (e[m], e[1 - m]);
        if q <= 0.0 {
            total += b * 2.0 * envelope_moment(em, q, a)? * 2.0 * envelope_moment(eo, 0.0, 0.0)?;
        } else {
            let cq = 2f64.powf(q - 1.0).max(1.0);
            total += b
                * cq
                * (2.0 * envelope_moment(em, q, a)? * 2.0 * envelope_moment(eo, 0.0, 0.0)?
                    + 2.0 * envelope_moment(em, 0.0, a)? * 2.0 * envelope_moment(eo, q, 0.0)?);
        }
    }
    Some(total)
}

fn tail_all(kind: SymbolKind, profiles: &[Vec<(Shape, f64)>], dim: usize, x: f64) -> Option<f64> {
    let mut worst: f64 = 0.0;
    for pa in profiles {
        for pb in profiles {
            worst = worst.max(tail_pair(kind, pa, pb, dim, x)?);
        }
    }
    Some(worst)
}

fn truncation_radius(kind: SymbolKind, k: f64, dim: usize, profiles: &[Vec<(Shape, f64)>], target: f64, op: &'static str) -> Result<f64> {
    let wmin = profiles.iter().flatten().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let mut x = (2.0 * k).max(1.0 / wmin);
    let tail = |x: f64| {
        tail_all(kind, profiles, dim, x)
            .ok_or_else(|| Error::quad(op, format!("non-integrable tail: symbol {kind:?} with this basis does not decay at infinity")))
    };
    if tail(x)? <= target {
        return Ok(x);
    }
    let mut steps = 0;
    while tail(x)? > target {
        x *= 2.0;
        steps += 1;
        if steps > 80 {
            return Err(Error::quad(op, "tail bound does not reach the tolerance"));
        }
    }
    let (mut lo, mut hi) = (0.5 * x, x);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if tail(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

fn estimate_nodes(k: f64, x_max: f64, freq: f64, dim: usize) -> f64 {
    let n_plain = ((x_max - 2.0 * k).max(0.0) * freq / PI).ceil() + 2.0 * (freq * k).ceil() + 4.0;
    if dim == 2 {
        16.0 * n_plain
    } else {
        16.0 * n_plain * (4.0 * x_max * freq + 12.0)
    }
}

fn make_panels(k: f64, x_max: f64, freq: f64, dim: usize) -> Vec<Panel> {
    let gl = 16;
    let mut out = Vec::new();
    let angular = |rho: f64| if dim == 3 { 8 * (rho * freq).ceil() as usize + 16 } else { 0 };
    let mut push = |ta: f64, tb: f64, sub: Substitution, rho: &dyn Fn(f64) -> f64| {
        let rb = rho(tb);
        out.push(Panel { rho_a: rho(ta), rho_b: rb, sub, nodes: gl, t_a: ta, t_b: tb, angular: angular(rb) });
    };
    // (0, k): t ∈ (0, π/2), dρ/dt ≤ k
    let n_sin = ((0.5 * PI) * freq * k / PI).ceil().max(2.0) as usize;
    let sin_rho = |t: f64| if t >= 0.5 * PI { k } else { k * t.sin() };
    for i in 0..n_sin {
        let ta = 0.5 * PI * i as f64 / n_sin as f64;
        let tb = 0.5 * PI * (i + 1) as f64 / n_sin as f64;
        push(ta, tb, Substitution::Sin, &sin_rho);
    }
    // (k, 2k): t ∈ (0, acosh 2), dρ/dt ≤ √3 k
    let tc = 2f64.acosh();
    let n_cosh = (tc * freq * 3f64.sqrt() * k / PI).ceil().max(2.0) as usize;
    let cosh_rho = |t: f64| if t == 0.0 { k } else { k * t.cosh() };
    for i in 0..n_cosh {
        let ta = tc * i as f64 / n_cosh as f64;
        let tb = if i + 1 == n_cosh { tc } else { tc * (i + 1) as f64 / n_cosh as f64 };
        push(ta, tb, Substitution::Cosh, &cosh_rho);
    }
    // (2k, x_max)
    let start = 2.0 * k;
    if x_max > start {
        let len = x_max - start;
        let n_plain = (len * freq / PI).ceil().max(1.0) as usize;
        let id = |t: f64| t;
        for i in 0..n_plain {
            let ta = start + len * i as f64 / n_plain as f64;
            let tb = if i + 1 == n_plain { x_max } else { start + len * (i + 1) as f64 / n_plain as f64 };
            push(ta, tb, Substitution::Plain, &id);
        }
    }
    out
}

/// Offsets along one axis, either integer multiples of the grid step or raw.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Offset {
    Multiple(i64),
    Raw(f64),
}

#[derive(Debug, Clone, Copy)]
struct Job {
    prof_a: [usize; 2],
    prof_b: [usize; 2],
    off: [usize; 2],
}

struct Batch {
    d: usize,
    fprofs: Vec<(Shape, f64)>,
    step: f64,
    offsets: Vec<Vec<Offset>>,
    max_mult: Vec<usize>,
    jobs: Vec<Job>,
    pair_job: Vec<usize>,
}

impl Batch {
    fn new(pairs: &[(&BasisFunction, &BasisFunction)], d: usize) -> Batch {
        let mut fprofs: Vec<(Shape, f64)> = Vec::new();
        let mut wmin = f64::INFINITY;
        for (a, b) in pairs {
            for f in a.factors.iter().chain(&b.factors) {
                if !fprofs.iter().any(|&(s, w)| s == f.shape && w.to_bits() == f.width.to_bits()) {
                    fprofs.push((f.shape, f.width));
                }
                wmin = wmin.min(f.width);
            }
        }
        let step = 0.5 * wmin;
        let mut offsets: Vec<Vec<Offset>> = vec![Vec::new(); d];
        let mut off_index: Vec<HashMap<(u8, u64), usize>> = vec![HashMap::new(); d];
        let mut max_mult = vec![0usize; d];
        let mut jobs = Vec::new();
        let mut job_index: HashMap<JobKey, usize> = HashMap::new();
        let mut pair_job = Vec::with_capacity(pairs.len());
        let prof_id = |s: Shape, w: f64| fprofs.iter().position(|&(s2, w2)| s2 == s && w2.to_bits() == w.to_bits()).unwrap();
        for (a, b) in pairs {
            let mut pa = [0usize; 2];
            let mut pb = [0usize; 2];
            let mut off = [0usize; 2];
            for m in 0..d {
                let (fa, fb) = (a.factors[m], b.factors[m]);
                pa[m] = prof_id(fa.shape, fa.width);
                pb[m] = prof_id(fb.shape, fb.width);
                let delta = fa.center - fb.center;
                let r = (delta / step).round();
                let o = if (delta - r * step).abs() <= 1e-9 * step { Offset::Multiple(r as i64) } else { Offset::Raw(delta) };
                let key = match o {
                    Offset::Multiple(i) => (0u8, i as u64),
                    Offset::Raw(x) => (1u8, x.to_bits()),
                };
                let idx = *off_index[m].entry(key).or_insert_with(|| {
                    offsets[m].push(o);
                    offsets[m].len() - 1
                });
                if let Offset::Multiple(i) = o {
                    max_mult[m] = max_mult[m].max(i.unsigned_abs() as usize);
                }
                off[m] = idx;
            }
            let j = *job_index.entry((pa, pb, off)).or_insert_with(|| {
                jobs.push(Job { prof_a: pa, prof_b: pb, off });
                jobs.len() - 1
            });
            pair_job.push(j);
        }
        Batch { d, fprofs, step, offsets, max_mult, jobs, pair_job }
    }

    fn run(&self, rule: &SymbolQuadrature) -> Vec<Complex64> {
        let gl = GaussLegendre::order16();
        let panels = &rule.panels;
        let chunks = 64usize.min(panels.len()).max(1);
        let per = panels.len().div_ceil(chunks);
        let partial: Vec<Vec<Complex64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = vec![Complex64::new(0.0, 0.0); self.jobs.len()];
                let mut ws = Workspace::new(self);
                for p in panels.iter().skip(c * per).take(per) {
                    for (t, w) in gl.mapped(p.t_a, p.t_b) {
                        let rho = match p.sub {
                            Substitution::Sin => rule.k * t.sin(),
                            Substitution::Cosh => rule.k * t.cosh(),
                            Substitution::Plain => t,
                        };
                        let omega = rule.kind.substituted(p.sub, t, rule.k) * w;
                        if self.d == 1 {
                            self.accumulate(&mut ws, &[rho], omega * 2.0, &mut acc);
                        } else {
                            let m = p.angular;
                            let dth = 2.0 * PI / m as f64;
                            let om = omega * (2.0 * rho * dth);
                            for j in 0..m / 2 {
                                let (s, c) = (j as f64 * dth).sin_cos();
                                self.accumulate(&mut ws, &[rho * c, rho * s], om, &mut acc);
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); self.jobs.len()];
        for part in partial {
            for (o, v) in out.iter_mut().zip(part) {
                *o += v;
            }
        }
        out
    }

    #[inline]
    fn accumulate(&self, ws: &mut Workspace, xi: &[f64], omega: Complex64, acc: &mut [Complex64]) {
        for (m, &x) in xi.iter().enumerate().take(self.d) {
            for (g, &(s, w)) in ws.g[m].iter_mut().zip(&self.fprofs) {
                *g = profile_ft(s, w, x);
            }
            // powers of e^{-i x step}
            let (sn, cs) = (x * self.step).sin_cos();
            let base = Complex64::new(cs, -sn);
            let pw = &mut ws.pow[m];
            pw[0] = Complex64::new(1.0, 0.0);
            for i in 1..=self.max_mult[m] {
                pw[i] = pw[i - 1] * base;
                if i % 32 == 0 {
                    let (s2, c2) = (x * self.step * i as f64).sin_cos();
                    pw[i] = Complex64::new(c2, -s2);
                }
            }
            for (ph, o) in ws.phase[m].iter_mut().zip(&self.offsets[m]) {
                *ph = match *o {
                    Offset::Multiple(i) if i >= 0 => pw[i as usize],
                    Offset::Multiple(i) => pw[(-i) as usize].conj(),
                    Offset::Raw(dx) => {
                        let (s2, c2) = (x * dx).sin_cos();
                        Complex64::new(c2, -s2)
                    }
                };
            }
        }
        for (a, job) in acc.iter_mut().zip(&self.jobs) {
            let mut z = ws.g[0][job.prof_a[0]] * ws.g[0][job.prof_b[0]].conj() * ws.phase[0][job.off[0]];
            if self.d == 2 {
                z *= ws.g[1][job.prof_a[1]] * ws.g[1][job.prof_b[1]].conj() * ws.phase[1][job.off[1]];
            }
            *a += omega * z.re;
        }
    }
}

struct Workspace {
    g: Vec<Vec<Complex64>>,
    pow: Vec<Vec<Complex64>>,
    phase: Vec<Vec<Complex64>>,
}

impl Workspace {
    fn new(b: &Batch) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Workspace {
            g: (0..b.d).map(|_| vec![z; b.fprofs.len()]).collect(),
            pow: (0..b.d).map(|m| vec![z; b.max_mult[m] + 1]).collect(),
            phase: (0..b.d).map(|m| vec![z; b.offsets[m].len()]).collect(),
        }
    }
}

/// ∫ σ φ̂_i conj(φ̂_j) dξ for a single pair.
pub fn symbol_integral(i: &BasisFunction, j: &BasisFunction, quad: &SymbolQuadrature) -> Complex64 {
    quad.integrate_pairs(&[(i, j)])[0]
}

/// Fourier transform of the fundamental solution truncated to |x̃| < L at
/// height x_n, using the radial formulas (cosine transform for n = 2,
/// Hankel transform of order zero for n = 3).
pub fn truncated_kernel_ft(xi: &[f64], l: f64, k: f64, xn: f64) -> Result<Complex64> {
    const OP: &str = "spectral::truncated_kernel_ft";
    if !(l > 0.0 && k > 0.0) {
        return Err(Error::input(OP, "L and k must be positive"));
    }
    let n = xi.len() + 1;
    let x = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let chunk = PI / (k + x + 1.0 / l);
    let pieces = (l / chunk).ceil() as usize;
    if pieces > 200_000 {
        return Err(Error::quad(OP, format!("oscillation cap exceeded ({pieces} chunks)")));
    }
    let mut breaks: Vec<f64> = (0..=pieces).map(|i| l * i as f64 / pieces as f64).collect();
    if xn == 0.0 && n == 2 {
        // log singularity at r = 0: grade the first chunk
        let b1 = breaks[1];
        let mut extra: Vec<f64> = (1..30).map(|j| b1 * 0.5f64.powi(j)).collect();
        extra.reverse();
        breaks.splice(1..1, extra);
    }
    let opts = AdaptiveOptions { abs_tol: 1e-14, rel_tol: 1e-11, max_intervals: 50_000 };
    let val = if n == 2 {
        let f = |r: f64| {
            let rr = (r * r + xn * xn).sqrt();
            Complex64::new(0.0, 0.25) * hankel0(k * rr) * (x * r).cos()
        };
        adaptive(f, &breaks, opts)? * (2.0 / PI).sqrt()
    } else {
        let f = |r: f64| {
            let rr = (r * r + xn * xn).sqrt();
            if rr == 0.0 {
                return Complex64::new(1.0 / (4.0 * PI), 0.0) * bessel_j0(0.0);
            }
            Complex64::from_polar(1.0 / (4.0 * PI * rr), k * rr) * bessel_j0(x * r) * r
        };
        adaptive(f, &breaks, opts)?
    };
    Ok(val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, make_screen, BasisKind, Factor};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_mesh(h: f64, kind: BasisKind) -> Mesh {
        build_mesh(&make_screen(2, vec![(vec![0.0], vec![1.0])]).unwrap(), h, kind).unwrap()
    }

    #[test]
    fn z_examples() {
        assert_eq!(symbol_z(&[0.0], 2.0), Complex64::new(2.0, 0.0));
        assert_eq!(symbol_z(&[1.0], 1.0), Complex64::new(0.0, 0.0));
        assert_relative_eq!(symbol_z(&[2.0], 1.0).im, 3f64.sqrt(), epsilon = 1e-15);
        assert_eq!(symbol_z(&[2.0], 1.0).re, 0.0);
    }

    proptest! {
        #[test]
        fn z_branch(x1 in -10.0f64..10.0, x2 in -10.0f64..10.0, k in 0.01f64..10.0) {
            let z = symbol_z(&[x1, x2], k);
            prop_assert!(z.re >= 0.0 && z.im >= 0.0);
            let r = (x1 * x1 + x2 * x2).sqrt();
            if (r - k).abs() > 1e-9 { prop_assert!(z.re == 0.0 || z.im == 0.0); }
        }

        #[test]
        fn substitution_matches_plain_symbol_times_jacobian(t in 0.01f64..1.5, k in 0.1f64..20.0, which in 0usize..4) {
            let kind = [SymbolKind::SingleLayer, SymbolKind::Hypersingular, SymbolKind::Bessel(0.5), SymbolKind::Bessel(-0.5)][which];
            let (rho, jac) = (k * t.sin(), k * t.cos());
            let want = kind.symbol(rho, k) * jac;
            prop_assert!((kind.substituted(Substitution::Sin, t, k) - want).norm() <= 1e-12 * want.norm().max(1.0));
            let tc = t.min(1.3);
            let (rho, jac) = (k * tc.cosh(), k * tc.sinh());
            let want = kind.symbol(rho, k) * jac;
            prop_assert!((kind.substituted(Substitution::Cosh, tc, k) - want).norm() <= 1e-12 * want.norm().max(1.0));
        }
    }

    #[test]
    fn panels_cover_range_and_split_at_k() {
        let m = unit_mesh(0.25, BasisKind::P0);
        let q = build_quadrature(SymbolKind::SingleLayer, 5.0, &m, 1e-8).unwrap();
        let p = q.panels();
        assert_eq!(p[0].rho_a, 0.0);
        for w in p.windows(2) {
            assert_relative_eq!(w[0].rho_b, w[1].rho_a, max_relative = 1e-14);
        }
        let last_sin = p.iter().rposition(|x| x.sub == Substitution::Sin).unwrap();
        assert_eq!(p[last_sin].rho_b, 5.0);
        assert_eq!(p[last_sin + 1].rho_a, 5.0);
        assert_eq!(p[last_sin + 1].sub, Substitution::Cosh);
        assert_eq!(p.last().unwrap().rho_b, q.xi_max());
        assert!(q.tail_bound() <= q.abs_target());
    }

    #[test]
    fn p0_single_layer_tail_follows_inverse_square() {
        // P0 n = 2: |σ| |φ̂_i φ̂_j| ≤ (1/√3)(2/π) ξ^{-3}, tail = (2/(π√3)) X^{-2}
        let m = unit_mesh(0.25, BasisKind::P0);
        let q = build_quadrature(SymbolKind::SingleLayer, 5.0, &m, 1e-8).unwrap();
        let x = q.xi_max();
        assert_relative_eq!(q.tail_bound(), 2.0 / (PI * 3f64.sqrt()) / (x * x), max_relative = 1e-12);
        assert!(q.tail_bound() <= 1e-8 * 0.25 * 0.25);
    }

    #[test]
    fn hypersingular_p0_is_rejected() {
        let m = unit_mesh(0.25, BasisKind::P0);
        let e = build_quadrature(SymbolKind::Hypersingular, 1.0, &m, 1e-6).unwrap_err();
        assert!(e.to_string().contains("non-integrable"));
    }

    #[test]
    fn parseval_examples() {
        let one = unit_mesh(1.0, BasisKind::P0);
        let q = build_quadrature(SymbolKind::Bessel(0.0), 1.0, &one, 1e-5).unwrap();
        assert_relative_eq!(symbol_integral(&one.dofs()[0], &one.dofs()[0], &q).re, 1.0, epsilon = 1e-5);
        let m = unit_mesh(0.25, BasisKind::P0);
        let q = build_quadrature(SymbolKind::Bessel(0.0), 1.0, &m, 1e-5).unwrap();
        let g = q.assemble(m.dofs());
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.25 } else { 0.0 };
                assert!((g[(i, j)] - want).norm() < 1e-5 * 0.25, "({i},{j}) {}", g[(i, j)]);
            }
        }
        let p1 = unit_mesh(0.25, BasisKind::P1);
        let q = build_quadrature(SymbolKind::Bessel(0.0), 1.0, &p1, 1e-9).unwrap();
        let g = q.assemble(p1.dofs());
        assert_relative_eq!(g[(0, 0)].re, 2.0 / 3.0 * 0.25, max_relative = 1e-8);
        assert_relative_eq!(g[(0, 1)].re, 1.0 / 6.0 * 0.25, max_relative = 1e-8);
        assert!(g[(0, 2)].norm() < 1e-10);
    }

    #[test]
    fn parseval_n3_tensor() {
        let s = make_screen(3, vec![(vec![0.0, 0.0], vec![1.0, 1.0])]).unwrap();
        let h = 0.25;
        let m = build_mesh(&s, h, BasisKind::P1).unwrap();
        let q = build_quadrature(SymbolKind::Bessel(0.0), 1.0, &m, 1e-5).unwrap();
        let g = q.assemble(m.dofs());
        let mass = |d: f64| {
            if d == 0.0 {
                2.0 * h / 3.0
            } else if (d.abs() - h).abs() < 1e-12 {
                h / 6.0
            } else {
                0.0
            }
        };
        for (i, a) in m.dofs().iter().enumerate() {
            for (j, b) in m.dofs().iter().enumerate() {
                let want = mass(a.factors[0].center - b.factors[0].center) * mass(a.factors[1].center - b.factors[1].center);
                assert!((g[(i, j)] - want).norm() < 1e-5 * g[(0, 0)].norm(), "({i},{j})");
            }
        }
    }

    #[test]
    fn halving_tolerance_is_self_consistent() {
        let m = unit_mesh(0.125, BasisKind::P0);
        let a1 = build_quadrature(SymbolKind::SingleLayer, 5.0, &m, 1e-6).unwrap().assemble(m.dofs());
        let a2 = build_quadrature(SymbolKind::SingleLayer, 5.0, &m, 5e-7).unwrap().assemble(m.dofs());
        let scale = a1[(0, 0)].norm();
        assert!((&a1 - &a2).iter().all(|z| z.norm() < 1e-6 * scale));
    }

    #[test]
    fn doubling_xi_max_changes_less_than_tolerance() {
        let m = unit_mesh(0.25, BasisKind::P0);
        let q = build_quadrature(SymbolKind::SingleLayer, 5.0, &m, 1e-8).unwrap();
        let base = q.assemble(m.dofs());
        let mut wide = q.clone();
        wide.xi_max *= 2.0;
        wide.panels = make_panels(5.0, wide.xi_max, 1.0 + 2.0 * 0.25, 2);
        let ext = wide.assemble(m.dofs());
        assert!((&base - &ext).iter().all(|z| z.norm() <= q.abs_target()));
    }

    #[test]
    fn pair_integral_is_symmetric_and_sign_structured() {
        let m = unit_mesh(1.0 / 16.0, BasisKind::P0);
        let q = build_quadrature(SymbolKind::SingleLayer, 7.0, &m, 1e-6).unwrap();
        let a = q.assemble(m.dofs());
        let pairs: Vec<_> = (0..m.len()).map(|i| (&m.dofs()[m.len() - 1 - i], &m.dofs()[i])).collect();
        let swapped = q.integrate_pairs(&pairs);
        for (i, v) in swapped.iter().enumerate() {
            assert!((v - a[(m.len() - 1 - i, i)]).norm() < 1e-12 * a[(0, 0)].norm());
        }
        for i in 0..m.len() {
            assert!(a[(i, i)].re > 0.0 && a[(i, i)].im > 0.0);
        }
    }

    #[test]
    fn offset_not_on_grid_uses_raw_phase() {
        let q = build_quadrature(SymbolKind::Bessel(0.0), 1.0, &unit_mesh(0.5, BasisKind::P0), 1e-5).unwrap();
        let a = BasisFunction { factors: vec![Factor { shape: Shape::Box, center: 0.0, width: 0.5 }] };
        let b = BasisFunction { factors: vec![Factor { shape: Shape::Box, center: 0.1234567, width: 0.5 }] };
        let v = symbol_integral(&a, &b, &q);
        assert_relative_eq!(v.re, 0.5 - 0.1234567, max_relative = 1e-5);
    }

    #[test]
    fn truncated_kernel_ft_closed_form_n3() {
        // ∫_0^1 e^{ir}/(4π) dr
        let v = truncated_kernel_ft(&[0.0, 0.0], 1.0, 1.0, 0.0).unwrap();
        let want = (Complex64::new(0.0, 1.0).exp() - 1.0) / Complex64::new(0.0, 4.0 * PI);
        assert!((v - want).norm() < 1e-12);
        // ξ → -ξ symmetry (radial)
        let a = truncated_kernel_ft(&[3.0], 2.0, 1.5, 0.0).unwrap();
        let b = truncated_kernel_ft(&[-3.0], 2.0, 1.5, 0.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_kernel_ft_n2_against_direct_integral() {
        // direct √(2/π) ∫_0^L (i/4) H0(kr) cos(ξ r) dr by substitution r = u²
        let (l, k, xi) = (1.0, 2.0, 1.5);
        let opts = AdaptiveOptions::new(1e-13, 1e-12);
        let direct = adaptive(|u| Complex64::new(0.0, 0.25) * hankel0(k * u * u) * (xi * u * u).cos() * 2.0 * u, &[0.0, 0.5, 1.0], opts)
            .unwrap()
            * (2.0 / PI).sqrt();
        let v = truncated_kernel_ft(&[xi], l, k, 0.0).unwrap();
        assert!((v - direct).norm() < 1e-10);
    }
}
