//! Boundary data on the screen plane: traces of plane waves and point
//! sources, or user closures.

use crate::error::{Error, Result};
use crate::special::{hankel0, hankel1};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Fundamental solution Φ(x, y) of Δ + k².
pub fn fundamental_solution(dim: usize, k: f64, r: f64) -> Complex64 {
    if dim == 2 {
        Complex64::new(0.0, 0.25) * hankel0(k * r)
    } else {
        Complex64::from_polar(1.0 / (4.0 * PI * r), k * r)
    }
}

/// dΦ/dr.
pub fn fundamental_solution_dr(dim: usize, k: f64, r: f64) -> Complex64 {
    if dim == 2 {
        Complex64::new(0.0, -0.25 * k) * hankel1(k * r)
    } else {
        Complex64::from_polar(1.0 / (4.0 * PI * r * r), k * r) * Complex64::new(-1.0, k * r)
    }
}

/// Incident field u^i.
#[derive(Debug, Clone, PartialEq)]
pub enum Incident {
    /// Σ a_j e^{ik x·d_j} with unit directions d_j ∈ ℝ^n.
    PlaneWaves { amplitudes: Vec<Complex64>, directions: Vec<Vec<f64>> },
    /// Φ(x_s, ·).
    PointSource { source: Vec<f64> },
}

impl Incident {
    pub fn plane_wave(direction: Vec<f64>) -> Incident {
        Incident::PlaneWaves { amplitudes: vec![Complex64::new(1.0, 0.0)], directions: vec![direction] }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        const OP: &str = "solver::trace_data";
        match self {
            Incident::PlaneWaves { amplitudes, directions } => {
                if amplitudes.len() != directions.len() || directions.is_empty() {
                    return Err(Error::input(OP, "plane-wave amplitudes and directions must be non-empty and of equal length"));
                }
                for d in directions {
                    if d.len() != dim {
                        return Err(Error::input(OP, format!("direction must have {dim} components")));
                    }
                    let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if (n - 1.0).abs() > 1e-12 {
                        return Err(Error::input(OP, format!("direction {d:?} is not a unit vector")));
                    }
                }
            }
            Incident::PointSource { source } => {
                if source.len() != dim {
                    return Err(Error::input(OP, format!("point source must have {dim} coordinates")));
                }
            }
        }
        Ok(())
    }

    /// u^i(x) at a point of ℝ^n.
    pub fn value(&self, k: f64, x: &[f64]) -> Complex64 {
        match self {
            Incident::PlaneWaves { amplitudes, directions } => {
                amplitudes.iter().zip(directions).map(|(a, d)| a * Complex64::from_polar(1.0, k * dot(x, d))).sum()
            }
            Incident::PointSource { source } => fundamental_solution(x.len(), k, dist(x, source)),
        }
    }

    /// ∂u^i/∂x_n at a point of ℝ^n.
    pub fn normal_derivative(&self, k: f64, x: &[f64]) -> Complex64 {
        let n = x.len();
        match self {
            Incident::PlaneWaves { amplitudes, directions } => amplitudes
                .iter()
                .zip(directions)
                .map(|(a, d)| a * Complex64::new(0.0, k * d[n - 1]) * Complex64::from_polar(1.0, k * dot(x, d)))
                .sum(),
            Incident::PointSource { source } => {
                let r = dist(x, source);
                fundamental_solution_dr(n, k, r) * ((x[n - 1] - source[n - 1]) / r)
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Which boundary-value problem the data feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Dirichlet,
    Neumann,
    ApertureH,
    ApertureI,
}

pub type Sampler = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub enum TraceKind {
    /// scale · u^i or scale · ∂u^i/∂n restricted to x_n = 0.
    Field { incident: Incident, normal_derivative: bool, scale: Complex64 },
    /// Arbitrary smooth function of the in-plane coordinates.
    Custom(Sampler),
}

impl fmt::Debug for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceKind::Field { incident, normal_derivative, scale } => f
                .debug_struct("Field")
                .field("incident", incident)
                .field("normal_derivative", normal_derivative)
                .field("scale", scale)
                .finish(),
            TraceKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Boundary data g on the screen plane with its role.
#[derive(Debug, Clone)]
pub struct TraceData {
    pub kind: TraceKind,
    pub role: Role,
}

impl TraceData {
    /// g_D = −u^i (sound-soft screen).
    pub fn sound_soft(incident: Incident) -> TraceData {
        TraceData { kind: TraceKind::Field { incident, normal_derivative: false, scale: Complex64::new(-1.0, 0.0) }, role: Role::Dirichlet }
    }

    /// g_N = −∂u^i/∂n (sound-hard screen).
    pub fn sound_hard(incident: Incident) -> TraceData {
        TraceData { kind: TraceKind::Field { incident, normal_derivative: true, scale: Complex64::new(-1.0, 0.0) }, role: Role::Neumann }
    }

    /// g_H = −2∂u^i/∂n (aperture in a sound-soft screen).
    pub fn aperture_h(incident: Incident) -> TraceData {
        TraceData { kind: TraceKind::Field { incident, normal_derivative: true, scale: Complex64::new(-2.0, 0.0) }, role: Role::ApertureH }
    }

    /// g_I = −2u^i (aperture in a sound-hard screen).
    pub fn aperture_i(incident: Incident) -> TraceData {
        TraceData { kind: TraceKind::Field { incident, normal_derivative: false, scale: Complex64::new(-2.0, 0.0) }, role: Role::ApertureI }
    }

    pub fn custom(role: Role, f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> TraceData {
        TraceData { kind: TraceKind::Custom(Arc::new(f)), role }
    }

    pub fn zero(role: Role) -> TraceData {
        TraceData::custom(role, |_| Complex64::new(0.0, 0.0))
    }

    /// Same data multiplied by a constant.
    pub fn scaled(&self, c: Complex64) -> TraceData {
        let kind = match &self.kind {
            TraceKind::Field { incident, normal_derivative, scale } => {
                TraceKind::Field { incident: incident.clone(), normal_derivative: *normal_derivative, scale: scale * c }
            }
            TraceKind::Custom(f) => {
                let f = f.clone();
                TraceKind::Custom(Arc::new(move |y: &[f64]| f(y) * c))
            }
        };
        TraceData { kind, role: self.role }
    }

    /// g at an in-plane point ỹ.
    pub fn eval(&self, k: f64, y: &[f64]) -> Complex64 {
        match &self.kind {
            TraceKind::Field { incident, normal_derivative, scale } => {
                let mut x = y.to_vec();
                x.push(0.0);
                let v = if *normal_derivative { incident.normal_derivative(k, &x) } else { incident.value(k, &x) };
                scale * v
            }
            TraceKind::Custom(f) => f(y),
        }
    }

    /// Point source location, if any.
    pub fn source(&self) -> Option<&[f64]> {
        match &self.kind {
            TraceKind::Field { incident: Incident::PointSource { source }, .. } => Some(source),
            _ => None,
        }
    }

    pub fn incident(&self) -> Option<&Incident> {
        match &self.kind {
            TraceKind::Field { incident, .. } => Some(incident),
            TraceKind::Custom(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_wave_normal_derivative_matches_finite_difference() {
        let d = vec![0.6, -0.8];
        let inc = Incident::plane_wave(d);
        let k = 3.0;
        let x = [0.3, 0.0];
        let e = 1e-6;
        let fd = (inc.value(k, &[0.3, e]) - inc.value(k, &[0.3, -e])) / (2.0 * e);
        assert!((inc.normal_derivative(k, &x) - fd).norm() < 1e-8);
    }

    #[test]
    fn point_source_derivative_matches_finite_difference() {
        for dim in [2usize, 3] {
            let src: Vec<f64> = if dim == 2 { vec![0.5, 0.3] } else { vec![0.5, 0.2, 0.3] };
            let inc = Incident::PointSource { source: src };
            let k = 2.5;
            let mut xp = vec![0.1; dim];
            let mut xm = xp.clone();
            let e = 1e-6;
            xp[dim - 1] = e;
            xm[dim - 1] = -e;
            let mut x0 = xp.clone();
            x0[dim - 1] = 0.0;
            let fd = (inc.value(k, &xp) - inc.value(k, &xm)) / (2.0 * e);
            assert!((inc.normal_derivative(k, &x0) - fd).norm() < 1e-7 * fd.norm().max(1.0), "dim {dim}");
        }
    }

    #[test]
    fn fundamental_solution_solves_helmholtz_radially() {
        // n = 3: (rΦ)'' + k² rΦ = 0
        let (k, r, e) = (2.0, 0.7, 1e-4);
        let f = |r: f64| fundamental_solution(3, k, r) * r;
        let lap = (f(r + e) - f(r) * 2.0 + f(r - e)) / (e * e);
        assert!((lap + f(r) * k * k).norm() < 1e-5);
    }
}
