//! Gauss–Legendre rules and a globally adaptive bisection integrator.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Cached 16-point rule used by the spectral panels.
    pub fn order16() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }

    pub fn order10() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(10))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + r * x, r * w))
    }

    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Error targets and limits of [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl AdaptiveOptions {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        AdaptiveOptions { abs_tol, rel_tol, max_intervals: 20_000 }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

fn estimate<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> Piece {
    let g = GaussLegendre::order10();
    let m = 0.5 * (a + b);
    let whole = g.integrate(a, b, &mut *f);
    let halves = g.integrate(a, m, &mut *f) + g.integrate(m, b, &mut *f);
    Piece { a, b, value: halves, err: (whole - halves).norm() }
}

/// Globally adaptive integration of `f` over consecutive `breaks`
/// (at least two increasing points). Each interval is estimated by a
/// 10-point rule on both halves; the error indicator is the gap to the
/// single 10-point result.
pub fn adaptive<F: FnMut(f64) -> Complex64>(mut f: F, breaks: &[f64], opts: AdaptiveOptions) -> Result<Complex64> {
    const OP: &str = "quad::adaptive";
    if breaks.len() < 2 {
        return Err(Error::input(OP, "need at least two break points"));
    }
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(estimate(&mut f, w[0], w[1]));
        }
    }
    loop {
        let total: Complex64 = heap.iter().map(|p| p.value).sum();
        let err: f64 = heap.iter().map(|p| p.err).sum();
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::quad(OP, "integrand produced a non-finite value"));
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.norm()) {
            return Ok(total);
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::quad(OP, format!("no convergence within {} intervals (error estimate {err:.3e})", opts.max_intervals)));
        }
        let worst = heap.pop().expect("non-empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            return Err(Error::quad(OP, "interval width reached machine precision"));
        }
        heap.push(estimate(&mut f, worst.a, m));
        heap.push(estimate(&mut f, m, worst.b));
    }
}

/// Real-valued convenience wrapper.
pub fn adaptive_real<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], opts: AdaptiveOptions) -> Result<f64> {
    adaptive(|x| Complex64::new(f(x), 0.0), breaks, opts).map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 10, 16, 33] {
            let g = GaussLegendre::new(n);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let got: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((got - exact).abs() < 1e-13, "n={n}");
            let wsum: f64 = g.weights.iter().sum();
            assert_relative_eq!(wsum, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = adaptive_real(|x| x.sqrt().ln(), &[0.0, 1.0], AdaptiveOptions::new(1e-12, 1e-12)).unwrap();
        assert_relative_eq!(v, -0.5, epsilon = 1e-10);
    }

    #[test]
    fn adaptive_oscillatory() {
        let v = adaptive(|x| Complex64::new(0.0, 40.0 * x).exp(), &[0.0, 1.0], AdaptiveOptions::new(1e-12, 0.0)).unwrap();
        let exact = (Complex64::new(0.0, 40.0).exp() - 1.0) / Complex64::new(0.0, 40.0);
        assert!((v - exact).norm() < 1e-11);
    }

    #[test]
    fn adaptive_reports_failure() {
        let mut o = AdaptiveOptions::new(1e-14, 0.0);
        o.max_intervals = 4;
        assert!(adaptive_real(|x| 1.0 / x.abs().sqrt(), &[-1.0, 1.0], o).is_err());
    }
}
