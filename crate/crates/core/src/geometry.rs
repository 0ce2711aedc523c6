//! Planar screens built from axis-aligned boxes, Cantor prefractals and
//! uniform meshes with P0/P1 bases.

use crate::error::{Error, Result};
use crate::special::sinc;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Largest Cantor level accepted for n = 2.
pub const MAX_CANTOR_LEVEL_2D: usize = 8;
/// Largest Cantor level accepted for n = 3.
pub const MAX_CANTOR_LEVEL_3D: usize = 4;

/// Open axis-aligned box in the screen plane (coordinates of ℝ^{n-1}).
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        AxisBox { lower, upper }
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn contains_closed(&self, other: &AxisBox, tol: f64) -> bool {
        (0..self.lower.len()).all(|m| other.lower[m] >= self.lower[m] - tol && other.upper[m] <= self.upper[m] + tol)
    }

    /// Squared distance from an in-plane point to the closed box.
    pub fn dist2(&self, y: &[f64]) -> f64 {
        (0..self.lower.len())
            .map(|m| {
                let e = (self.lower[m] - y[m]).max(0.0).max(y[m] - self.upper[m]);
                e * e
            })
            .sum()
    }
}

/// Bounded relatively open subset of the hyperplane x_n = 0, given as a
/// union of disjoint open boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct Screen {
    dim: usize,
    boxes: Vec<AxisBox>,
    diameter: f64,
}

/// Validates the boxes and computes the diameter.
pub fn make_screen(n: usize, boxes: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Screen> {
    const OP: &str = "geometry::make_screen";
    if n != 2 && n != 3 {
        return Err(Error::input(OP, format!("ambient dimension must be 2 or 3, got {n}")));
    }
    if boxes.is_empty() {
        return Err(Error::input(OP, "box list is empty"));
    }
    let d = n - 1;
    let mut out = Vec::with_capacity(boxes.len());
    for (i, (lo, up)) in boxes.into_iter().enumerate() {
        if lo.len() != d || up.len() != d {
            return Err(Error::input(OP, format!("box {i} must have {d} coordinates per corner")));
        }
        if lo.iter().chain(&up).any(|v| !v.is_finite()) {
            return Err(Error::input(OP, format!("box {i} has non-finite coordinates")));
        }
        if lo.iter().zip(&up).any(|(l, u)| u <= l) {
            return Err(Error::input(OP, format!("box {i} is degenerate (zero volume or reversed corners)")));
        }
        out.push(AxisBox::new(lo, up));
    }
    let diameter = diameter_of(&out);
    let tol = 1e-12 * diameter;
    for i in 0..out.len() {
        for j in i + 1..out.len() {
            let overlap = (0..d).all(|m| out[i].upper[m].min(out[j].upper[m]) - out[i].lower[m].max(out[j].lower[m]) > tol);
            if overlap {
                return Err(Error::input(OP, format!("boxes {i} and {j} overlap")));
            }
        }
    }
    Ok(Screen { dim: n, boxes: out, diameter })
}

fn diameter_of(boxes: &[AxisBox]) -> f64 {
    let mut best: f64 = 0.0;
    for a in boxes {
        for b in boxes {
            let s: f64 = (0..a.lower.len())
                .map(|m| {
                    let e = (a.upper[m] - b.lower[m]).abs().max((b.upper[m] - a.lower[m]).abs());
                    e * e
                })
                .sum();
            best = best.max(s);
        }
    }
    best.sqrt()
}

impl Screen {
    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    /// Diameter L.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn measure(&self) -> f64 {
        self.boxes.iter().map(AxisBox::volume).sum()
    }

    /// Smallest box containing the screen.
    pub fn hull(&self) -> AxisBox {
        let d = self.dim - 1;
        let mut lo = vec![f64::INFINITY; d];
        let mut up = vec![f64::NEG_INFINITY; d];
        for b in &self.boxes {
            for m in 0..d {
                lo[m] = lo[m].min(b.lower[m]);
                up[m] = up[m].max(b.upper[m]);
            }
        }
        AxisBox::new(lo, up)
    }

    /// Squared distance from an in-plane point to the closure.
    pub fn in_plane_dist2(&self, y: &[f64]) -> f64 {
        self.boxes.iter().map(|b| b.dist2(y)).fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, shift: &[f64]) -> Screen {
        let boxes = self
            .boxes
            .iter()
            .map(|b| {
                AxisBox::new(
                    b.lower.iter().zip(shift).map(|(l, s)| l + s).collect(),
                    b.upper.iter().zip(shift).map(|(u, s)| u + s).collect(),
                )
            })
            .collect();
        Screen { dim: self.dim, boxes, diameter: self.diameter }
    }
}

/// Level-j Cantor prefractal of [0,1] (n = 2) or Cantor dust of [0,1]² (n = 3).
pub fn cantor_prefractal(n: usize, level: usize, ratio: f64) -> Result<Screen> {
    const OP: &str = "geometry::cantor_prefractal";
    if !(ratio > 0.0 && ratio < 0.5) {
        return Err(Error::input(OP, format!("ratio {ratio} outside (0, 1/2)")));
    }
    let cap = match n {
        2 => MAX_CANTOR_LEVEL_2D,
        3 => MAX_CANTOR_LEVEL_3D,
        _ => return Err(Error::input(OP, format!("ambient dimension must be 2 or 3, got {n}"))),
    };
    if level > cap {
        return Err(Error::input(OP, format!("level {level} exceeds maximum {cap} for n={n}")));
    }
    let intervals = cantor_intervals(level, ratio);
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = if n == 2 {
        intervals.iter().map(|&(a, b)| (vec![a], vec![b])).collect()
    } else {
        let mut v = Vec::with_capacity(intervals.len() * intervals.len());
        for &(a2, b2) in &intervals {
            for &(a1, b1) in &intervals {
                v.push((vec![a1, a2], vec![b1, b2]));
            }
        }
        v
    };
    make_screen(n, boxes).map_err(|e| Error::input(OP, e.to_string()))
}

/// Intervals of the level-j middle-removal Cantor construction on [0,1].
/// Left endpoints are sums of distinct terms (1-α)α^i, so they are formed
/// from those terms directly to keep the grid exact where possible.
pub fn cantor_intervals(level: usize, ratio: f64) -> Vec<(f64, f64)> {
    let len = ratio.powi(level as i32);
    (0..1usize << level)
        .map(|bits| {
            let mut a = 0.0;
            for i in 0..level {
                if bits >> (level - 1 - i) & 1 == 1 {
                    a += (1.0 - ratio) * ratio.powi(i as i32);
                }
            }
            (a, a + len)
        })
        .collect()
}

/// Euclidean distance from x ∈ ℝ^n to the closure of the screen.
pub fn dist_to_screen(x: &[f64], screen: &Screen) -> f64 {
    let n = screen.dim;
    let xn = x[n - 1];
    (screen.in_plane_dist2(&x[..n - 1]) + xn * xn).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// Piecewise constants, conforming in H̃^{-1/2}.
    P0,
    /// Continuous piecewise linears vanishing on box boundaries, conforming in H̃^{1/2}.
    P1,
}

/// One-dimensional factor of a tensor-product basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    /// Indicator of (c - w/2, c + w/2).
    Box,
    /// Hat with apex at c and half-width w.
    Hat,
    /// Derivative of the hat: 1/w on (c - w, c), -1/w on (c, c + w).
    HatSlope,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor {
    pub shape: Shape,
    pub center: f64,
    pub width: f64,
}

impl Factor {
    pub fn eval(&self, t: f64) -> f64 {
        let u = t - self.center;
        let w = self.width;
        match self.shape {
            Shape::Box => {
                if u.abs() < 0.5 * w {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Hat => (1.0 - u.abs() / w).max(0.0),
            Shape::HatSlope => {
                if u > -w && u < 0.0 {
                    1.0 / w
                } else if u > 0.0 && u < w {
                    -1.0 / w
                } else {
                    0.0
                }
            }
        }
    }

    /// Support interval.
    pub fn support(&self) -> (f64, f64) {
        let r = match self.shape {
            Shape::Box => 0.5 * self.width,
            Shape::Hat | Shape::HatSlope => self.width,
        };
        (self.center - r, self.center + r)
    }

    /// Points where the factor is not smooth, in increasing order.
    pub fn breaks(&self) -> Vec<f64> {
        let (a, b) = self.support();
        match self.shape {
            Shape::Box => vec![a, b],
            Shape::Hat | Shape::HatSlope => vec![a, self.center, b],
        }
    }

    pub fn integral(&self) -> f64 {
        match self.shape {
            Shape::Box | Shape::Hat => self.width,
            Shape::HatSlope => 0.0,
        }
    }

    /// Centred transform g with φ̂(ξ) = e^{-iξc} g(ξ).
    pub fn ft_profile(&self, xi: f64) -> Complex64 {
        profile_ft(self.shape, self.width, xi)
    }

    pub fn ft(&self, xi: f64) -> Complex64 {
        Complex64::from_polar(1.0, -xi * self.center) * self.ft_profile(xi)
    }
}

/// Centred one-dimensional transform of a factor shape of width w.
pub fn profile_ft(shape: Shape, w: f64, xi: f64) -> Complex64 {
    let s = 1.0 / (2.0 * PI).sqrt();
    let a = 0.5 * xi * w;
    match shape {
        Shape::Box => Complex64::new(w * sinc(a) * s, 0.0),
        Shape::Hat => {
            let c = sinc(a);
            Complex64::new(w * c * c * s, 0.0)
        }
        // FT of 1/w on (-w,0) minus FT of 1/w on (0,w)
        Shape::HatSlope => Complex64::new(0.0, 2.0 * a.sin() * sinc(a) * s),
    }
}

/// Tensor-product basis function on the screen plane.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisFunction {
    pub factors: Vec<Factor>,
}

impl BasisFunction {
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.factors.iter().zip(y).map(|(f, &t)| f.eval(t)).product()
    }

    /// φ̂(ξ) with the (2π)^{-(n-1)/2} normalisation.
    pub fn ft(&self, xi: &[f64]) -> Complex64 {
        self.factors.iter().zip(xi).map(|(f, &x)| f.ft(x)).product()
    }

    pub fn integral(&self) -> f64 {
        self.factors.iter().map(Factor::integral).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.center).collect()
    }

    /// Partial derivative along axis m (only defined for hat factors).
    pub fn derivative(&self, m: usize) -> BasisFunction {
        let mut factors = self.factors.clone();
        assert_eq!(factors[m].shape, Shape::Hat, "derivative requires a hat factor");
        factors[m].shape = Shape::HatSlope;
        BasisFunction { factors }
    }
}

/// Uniform mesh of a screen together with its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    screen: Screen,
    h: f64,
    kind: BasisKind,
    elements_per_axis: Vec<Vec<usize>>,
    dofs: Vec<BasisFunction>,
    dof_box: Vec<usize>,
}

/// Partitions every box into cubes of side h and builds the basis.
pub fn build_mesh(screen: &Screen, h: f64, kind: BasisKind) -> Result<Mesh> {
    const OP: &str = "geometry::build_mesh";
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::input(OP, format!("element size must be positive, got {h}")));
    }
    let d = screen.dim - 1;
    let mut elements_per_axis = Vec::with_capacity(screen.boxes.len());
    let mut dofs = Vec::new();
    let mut dof_box = Vec::new();
    for (bi, b) in screen.boxes.iter().enumerate() {
        let mut counts = Vec::with_capacity(d);
        for m in 0..d {
            let r = (b.upper[m] - b.lower[m]) / h;
            let c = r.round();
            if c < 1.0 || (r - c).abs() > 1e-9 * r.max(1.0) {
                return Err(Error::input(OP, format!("h={h} does not divide edge {m} of box {bi} (length {})", b.upper[m] - b.lower[m])));
            }
            if kind == BasisKind::P1 && c < 2.0 {
                return Err(Error::input(OP, format!("P1 needs at least 2 elements per edge; box {bi} has {c} along axis {m}")));
            }
            counts.push(c as usize);
        }
        let axis_factors: Vec<Vec<Factor>> = (0..d)
            .map(|m| match kind {
                BasisKind::P0 => {
                    (0..counts[m]).map(|i| Factor { shape: Shape::Box, center: b.lower[m] + (i as f64 + 0.5) * h, width: h }).collect()
                }
                BasisKind::P1 => {
                    (1..counts[m]).map(|i| Factor { shape: Shape::Hat, center: b.lower[m] + i as f64 * h, width: h }).collect()
                }
            })
            .collect();
        if d == 1 {
            for f in &axis_factors[0] {
                dofs.push(BasisFunction { factors: vec![*f] });
                dof_box.push(bi);
            }
        } else {
            for f2 in &axis_factors[1] {
                for f1 in &axis_factors[0] {
                    dofs.push(BasisFunction { factors: vec![*f1, *f2] });
                    dof_box.push(bi);
                }
            }
        }
        elements_per_axis.push(counts);
    }
    Ok(Mesh { screen: screen.clone(), h, kind, elements_per_axis, dofs, dof_box })
}

impl Mesh {
    pub fn screen(&self) -> &Screen {
        &self.screen
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.screen.dim
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn dofs(&self) -> &[BasisFunction] {
        &self.dofs
    }

    pub fn dof_box(&self, i: usize) -> usize {
        self.dof_box[i]
    }

    pub fn element_count(&self) -> usize {
        self.elements_per_axis.iter().map(|c| c.iter().product::<usize>()).sum()
    }

    pub fn elements_per_axis(&self) -> &[Vec<usize>] {
        &self.elements_per_axis
    }

    /// Evaluates Σ c_i φ_i at an in-plane point.
    pub fn eval_expansion(&self, coeffs: &[Complex64], y: &[f64]) -> Complex64 {
        self.dofs.iter().zip(coeffs).map(|(b, c)| c * b.eval(y)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn screen_examples() {
        let s = make_screen(2, vec![(vec![0.0], vec![1.0])]).unwrap();
        assert_eq!(s.diameter(), 1.0);
        let e = make_screen(2, vec![(vec![0.0], vec![1.0]), (vec![0.5], vec![2.0])]).unwrap_err();
        assert!(e.to_string().contains("geometry::make_screen"));
        assert!(e.to_string().contains("overlap"));
        let sq = make_screen(3, vec![(vec![0.0, 0.0], vec![1.0, 1.0])]).unwrap();
        assert_relative_eq!(sq.diameter(), 2f64.sqrt(), epsilon = 1e-15);
        assert!(make_screen(2, vec![]).is_err());
        assert!(make_screen(2, vec![(vec![1.0], vec![1.0])]).is_err());
        // touching boxes are disjoint as open sets
        assert!(make_screen(2, vec![(vec![0.0], vec![1.0]), (vec![1.0], vec![2.0])]).is_ok());
    }

    #[test]
    fn cantor_examples() {
        let c0 = cantor_prefractal(2, 0, 1.0 / 3.0).unwrap();
        assert_eq!(c0.boxes(), &[AxisBox::new(vec![0.0], vec![1.0])]);
        let c1 = cantor_prefractal(2, 1, 1.0 / 3.0).unwrap();
        assert_relative_eq!(c1.boxes()[0].upper[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c1.boxes()[1].lower[0], 2.0 / 3.0, epsilon = 1e-15);
        let c2 = cantor_prefractal(2, 2, 1.0 / 3.0).unwrap();
        let lows: Vec<f64> = c2.boxes().iter().map(|b| b.lower[0]).collect();
        for (got, want) in lows.iter().zip([0.0, 2.0 / 9.0, 2.0 / 3.0, 8.0 / 9.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-15);
        }
        assert!(c2.boxes().iter().all(|b| (b.upper[0] - b.lower[0] - 1.0 / 9.0).abs() < 1e-15));
        assert_eq!(c2.diameter(), 1.0);
        let d = cantor_prefractal(3, 2, 0.25).unwrap();
        assert_eq!(d.boxes().len(), 16);
        assert_relative_eq!(d.diameter(), 2f64.sqrt(), epsilon = 1e-15);
        assert!(cantor_prefractal(2, 9, 0.3).is_err());
        assert!(cantor_prefractal(3, 5, 0.3).is_err());
        assert!(cantor_prefractal(2, 1, 0.5).is_err());
    }

    #[test]
    fn distance_examples() {
        let s = make_screen(2, vec![(vec![0.0], vec![1.0])]).unwrap();
        assert_eq!(dist_to_screen(&[0.5, 1.0], &s), 1.0);
        assert_eq!(dist_to_screen(&[2.0, 0.0], &s), 1.0);
        assert_relative_eq!(dist_to_screen(&[2.0, 1.5], &s), (1.0f64 + 2.25).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn mesh_examples() {
        let s = make_screen(2, vec![(vec![0.0], vec![1.0])]).unwrap();
        assert_eq!(build_mesh(&s, 0.25, BasisKind::P0).unwrap().len(), 4);
        assert_eq!(build_mesh(&s, 0.25, BasisKind::P1).unwrap().len(), 3);
        let sq = make_screen(3, vec![(vec![0.0, 0.0], vec![1.0, 1.0])]).unwrap();
        assert_eq!(build_mesh(&sq, 0.5, BasisKind::P1).unwrap().len(), 1);
        assert!(build_mesh(&s, 0.3, BasisKind::P0).is_err());
        assert!(build_mesh(&s, 1.0, BasisKind::P1).is_err());
    }

    #[test]
    fn p0_partition_of_unity() {
        let s = cantor_prefractal(3, 1, 1.0 / 3.0).unwrap();
        let m = build_mesh(&s, 1.0 / 9.0, BasisKind::P0).unwrap();
        let ones = vec![Complex64::new(1.0, 0.0); m.len()];
        for &(y1, y2, inside) in &[(0.05, 0.05, true), (0.3, 0.8, true), (0.5, 0.5, false), (0.9, 0.2, true), (0.2, 0.5, false)] {
            let v = m.eval_expansion(&ones, &[y1, y2]).re;
            assert_eq!(v, if inside { 1.0 } else { 0.0 }, "at ({y1},{y2})");
        }
        let area: f64 = m.dofs().iter().map(BasisFunction::integral).sum();
        assert_relative_eq!(area, s.measure(), epsilon = 1e-14);
    }

    #[test]
    fn basis_ft_examples() {
        let b = Factor { shape: Shape::Box, center: 0.0, width: 1.0 };
        let s = 1.0 / (2.0 * PI).sqrt();
        assert_relative_eq!(b.ft(0.0).re, s, epsilon = 1e-16);
        assert!(b.ft(2.0 * PI).norm() < 1e-16);
        let hat = Factor { shape: Shape::Hat, center: 0.0, width: 1.0 };
        assert_relative_eq!(hat.ft(0.0).re, s, epsilon = 1e-16);
    }

    #[test]
    fn slope_ft_is_i_xi_times_hat_ft() {
        let hat = Factor { shape: Shape::Hat, center: 0.3, width: 0.125 };
        let slope = Factor { shape: Shape::HatSlope, ..hat };
        for &xi in &[-40.0, -3.0, 0.0, 0.5, 17.0, 300.0] {
            let lhs = slope.ft(xi);
            let rhs = Complex64::new(0.0, xi) * hat.ft(xi);
            assert!((lhs - rhs).norm() < 1e-15, "xi={xi}");
        }
    }

    fn numeric_ft(f: &Factor, xi: f64) -> Complex64 {
        let opts = crate::quad::AdaptiveOptions::new(1e-14, 1e-13);
        crate::quad::adaptive(|t| Complex64::from_polar(f.eval(t), -xi * t), &f.breaks(), opts).unwrap() / (2.0 * PI).sqrt()
    }

    proptest! {
        #[test]
        fn factor_ft_matches_quadrature(c in -2.0f64..2.0, w in 0.01f64..1.0, xi in -80.0f64..80.0, which in 0usize..3) {
            let shape = [Shape::Box, Shape::Hat, Shape::HatSlope][which];
            let f = Factor { shape, center: c, width: w };
            let num = numeric_ft(&f, xi);
            let scale = if shape == Shape::HatSlope { 1.0 } else { w };
            prop_assert!((f.ft(xi) - num).norm() <= 1e-10 * scale);
        }

        #[test]
        fn ft_conjugate_symmetry(c in -2.0f64..2.0, w in 0.01f64..1.0, xi in 0.0f64..100.0, which in 0usize..3) {
            let shape = [Shape::Box, Shape::Hat, Shape::HatSlope][which];
            let f = Factor { shape, center: c, width: w };
            prop_assert!((f.ft(-xi) - f.ft(xi).conj()).norm() < 1e-14);
        }

        #[test]
        fn cantor_volume_and_nesting(level in 0usize..6, ratio in 0.05f64..0.49, n in 2usize..4) {
            let level = if n == 3 { level.min(3) } else { level };
            let s = cantor_prefractal(n, level, ratio).unwrap();
            let expected = (2.0 * ratio).powi((level * (n - 1)) as i32);
            prop_assert!((s.measure() - expected).abs() < 1e-12);
            if level > 0 {
                let parent = cantor_prefractal(n, level - 1, ratio).unwrap();
                for b in s.boxes() {
                    prop_assert!(parent.boxes().iter().any(|p| p.contains_closed(b, 1e-13)));
                }
            }
        }

        #[test]
        fn distance_is_one_lipschitz(x in proptest::collection::vec(-3.0f64..3.0, 3), y in proptest::collection::vec(-3.0f64..3.0, 3)) {
            let s = cantor_prefractal(3, 1, 0.3).unwrap();
            let dxy = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            prop_assert!((dist_to_screen(&x, &s) - dist_to_screen(&y, &s)).abs() <= dxy + 1e-12);
        }
    }
}
