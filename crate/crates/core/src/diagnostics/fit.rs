//! Least-squares fits of log-log data and pass/fail verdicts.

use crate::error::{Error, Result};

/// Minimum number of points for a slope fit.
pub const MIN_FIT_POINTS: usize = 4;
/// Minimum coefficient of determination before a fit may decide a check.
pub const MIN_R_SQUARED: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The data could not decide (poor fit or too few points).
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Pass only if both pass; any failure fails; otherwise inconclusive.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Pass, Verdict::Pass) => Verdict::Pass,
            _ => Verdict::Inconclusive,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// log y ≈ intercept + slope · log x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl LogLogFit {
    pub fn is_reliable(&self) -> bool {
        self.points >= MIN_FIT_POINTS && self.r_squared >= MIN_R_SQUARED
    }

    /// Applies `accept` to the slope if the fit is reliable.
    pub fn verdict(&self, accept: impl Fn(f64) -> bool) -> Verdict {
        if !self.is_reliable() {
            Verdict::Inconclusive
        } else {
            Verdict::from_bool(accept(self.slope))
        }
    }
}

pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    const OP: &str = "diagnostics::loglog_fit";
    if x.len() != y.len() {
        return Err(Error::input(OP, "x and y lengths differ"));
    }
    if x.len() < MIN_FIT_POINTS {
        return Err(Error::input(OP, format!("need at least {MIN_FIT_POINTS} points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::input(OP, "log-log fit needs positive finite data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::input(OP, "x values are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LogLogFit { slope, intercept, r_squared, points: x.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0, 16.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        let f = loglog_fit(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert_eq!(f.verdict(|s| s >= -0.75), Verdict::Pass);
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(loglog_fit(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn noisy_fit_is_inconclusive() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [1.0, 5.0, 0.5, 4.0, 0.7, 3.0];
        let f = loglog_fit(&x, &y).unwrap();
        assert!(f.r_squared < MIN_R_SQUARED);
        assert_eq!(f.verdict(|_| true), Verdict::Inconclusive);
    }

    proptest! {
        #[test]
        fn slope_is_scale_invariant(c in 0.01f64..100.0, p in -2.0f64..2.0) {
            let x = [1.0, 2.0, 5.0, 9.0, 20.0];
            let y: Vec<f64> = x.iter().map(|v: &f64| v.powf(p) * (1.0 + 0.1 * v.sin())).collect();
            let a = loglog_fit(&x, &y).unwrap();
            let yc: Vec<f64> = y.iter().map(|v| v * c).collect();
            let b = loglog_fit(&x, &yc).unwrap();
            prop_assert!((a.slope - b.slope).abs() < 1e-10);
            prop_assert!((a.r_squared - b.r_squared).abs() < 1e-10);
        }
    }
}
