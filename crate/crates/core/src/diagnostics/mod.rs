//! Wavenumber-explicit verification sweeps, slope fits and the s-nullity
//! advisor.

mod bounds;
mod coercivity;
pub mod fit;
mod norms;
pub mod nullity;
mod prefractal;

pub use bounds::{kernel_ft_bound_check, kernel_ft_shape, pointwise_bound_check, pointwise_shape};
pub use coercivity::{coercivity_scan_S, coercivity_scan_T, sample_quotients, Sample, SampleFamily};
pub use fit::{loglog_fit, LogLogFit, Verdict};
pub use norms::{condition_estimate, continuity_estimate, continuity_sweep, modulated_bump, sharpness_S, sharpness_T, single_layer_shape};
pub use nullity::{nullity_advisor, BoundaryRegularity, Nullity, NullityRule, NullityVerdict, SetDescriptor};
pub use prefractal::{far_field_directions, prefractal_convergence, Observable, MAX_PREFRACTAL_DOFS};

use crate::error::{Error, Result};
use crate::geometry::Screen;
use std::f64::consts::PI;

/// 1/(2√2), the coercivity constant of the single-layer form.
pub const S_COERCIVITY: f64 = 0.353_553_390_593_273_8;
/// Continuity constant of the hypersingular operator.
pub const T_CONTINUITY: f64 = 0.5;
/// Absolute slack on the single-layer coercivity check.
pub const COERCIVITY_SLACK: f64 = 1e-3;
/// Slack on the hypersingular continuity check.
pub const CONTINUITY_SLACK: f64 = 1e-6;

/// Exponent β of the hypersingular coercivity bound C k^β.
pub fn t_coercivity_exponent(dim: usize) -> f64 {
    if dim == 2 {
        -0.5
    } else {
        -2.0 / 3.0
    }
}

/// Element size as a function of k: halve `h_max` until there are at least
/// `points_per_wavelength` elements per wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshRule {
    pub h_max: f64,
    pub points_per_wavelength: f64,
}

impl MeshRule {
    pub fn new(h_max: f64) -> Self {
        MeshRule { h_max, points_per_wavelength: 10.0 }
    }

    pub fn h(&self, k: f64) -> f64 {
        let mut h = self.h_max;
        while h * k * self.points_per_wavelength > 2.0 * PI {
            h /= 2.0;
        }
        h
    }

    pub(crate) fn validate(&self, op: &'static str) -> Result<()> {
        if !(self.h_max > 0.0 && self.h_max.is_finite() && self.points_per_wavelength > 0.0) {
            return Err(Error::input(op, "mesh rule needs positive h_max and points per wavelength"));
        }
        Ok(())
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub params: Vec<f64>,
    pub values: Vec<f64>,
    pub pass: bool,
}

/// Table of measurements over a strictly increasing parameter grid, with
/// an optional slope fit and an overall verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub name: String,
    pub param_names: Vec<String>,
    pub columns: Vec<String>,
    pub points: Vec<SweepPoint>,
    pub fit: Option<LogLogFit>,
    pub summary: Vec<(String, f64)>,
    pub verdict: Verdict,
}

impl SweepResult {
    pub fn new(name: &str, params: &[&str], columns: &[&str]) -> Self {
        SweepResult {
            name: name.to_string(),
            param_names: params.iter().map(|s| s.to_string()).collect(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            points: Vec::new(),
            fit: None,
            summary: Vec::new(),
            verdict: Verdict::Inconclusive,
        }
    }

    /// Appends a row; parameters must increase lexicographically.
    pub fn push(&mut self, params: Vec<f64>, values: Vec<f64>, pass: bool) -> Result<()> {
        const OP: &str = "diagnostics::sweep";
        if params.len() != self.param_names.len() || values.len() != self.columns.len() {
            return Err(Error::input(OP, "row does not match the sweep layout"));
        }
        if let Some(last) = self.points.last() {
            let ord = params.iter().zip(&last.params).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne());
            if ord != Some(std::cmp::Ordering::Greater) {
                return Err(Error::input(OP, format!("parameter grid must be strictly increasing at {params:?}")));
            }
        }
        self.points.push(SweepPoint { params, values, pass });
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.points.iter().map(|p| p.values[i]).collect())
    }

    pub fn param(&self, i: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.params[i]).collect()
    }

    pub fn summary_value(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn all_pass(&self) -> bool {
        self.points.iter().all(|p| p.pass)
    }
}

pub(crate) fn check_grid(grid: &[f64], what: &str, op: &'static str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::input(op, format!("{what} grid is empty")));
    }
    if grid.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::input(op, format!("{what} values must be positive and finite")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input(op, format!("{what} grid must be strictly increasing")));
    }
    Ok(())
}

/// Smooth bump e^{1 − 1/(1−t²)} per axis over the hull of a screen, shrunk
/// by `scale` about the centre.
pub(crate) fn hull_bump(screen: &Screen, scale: f64) -> impl Fn(&[f64]) -> f64 {
    let hull = screen.hull();
    let centre: Vec<f64> = hull.lower.iter().zip(&hull.upper).map(|(a, b)| 0.5 * (a + b)).collect();
    let radius: Vec<f64> = hull.lower.iter().zip(&hull.upper).map(|(a, b)| 0.5 * (b - a) * scale).collect();
    move |y: &[f64]| {
        let mut v = 1.0;
        for m in 0..centre.len() {
            let t = (y[m] - centre[m]) / radius[m];
            if t.abs() >= 1.0 {
                return 0.0;
            }
            v *= (1.0 - 1.0 / (1.0 - t * t)).exp();
        }
        v
    }
}
