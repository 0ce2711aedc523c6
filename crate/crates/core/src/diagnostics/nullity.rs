//! Decidable s-nullity rules for a few set families in ℝ^m.
//!
//! A set is s-null if it supports no non-zero H^s(ℝ^m) distribution. The
//! rules here are sufficient conditions only; anything they cannot settle
//! is reported as undecided.

use crate::error::{Error, Result};

const DIMENSION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryRegularity {
    Continuous,
    Holder(f64),
    Lipschitz,
}

/// Sets the advisor understands. `ambient` is m, the dimension of the
/// space containing the set (m = n − 1 for screens in ℝ^n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetDescriptor {
    /// Limit of the Cantor prefractals of ratio α in [0,1]^{n−1}.
    CantorLimitSet { n: usize, alpha: f64 },
    /// Bounded relatively open piece of a hyperplane of ℝ^m.
    Hyperplane { ambient: usize },
    /// Non-empty finite point set.
    FiniteSet { ambient: usize },
    /// Boundary of a bounded open set of the given regularity.
    Boundary { ambient: usize, regularity: BoundaryRegularity },
    /// Any set with non-empty interior.
    WithInterior { ambient: usize },
}

impl SetDescriptor {
    pub fn ambient(&self) -> usize {
        match *self {
            SetDescriptor::CantorLimitSet { n, .. } => n - 1,
            SetDescriptor::Hyperplane { ambient }
            | SetDescriptor::FiniteSet { ambient }
            | SetDescriptor::Boundary { ambient, .. }
            | SetDescriptor::WithInterior { ambient } => ambient,
        }
    }

    /// Hausdorff dimension where known exactly.
    pub fn hausdorff_dim(&self) -> Option<f64> {
        match *self {
            SetDescriptor::CantorLimitSet { n, alpha } => Some((n - 1) as f64 * 2f64.ln() / (1.0 / alpha).ln()),
            SetDescriptor::Hyperplane { ambient } => Some(ambient as f64 - 1.0),
            SetDescriptor::FiniteSet { .. } => Some(0.0),
            SetDescriptor::Boundary { ambient, regularity: BoundaryRegularity::Lipschitz } => Some(ambient as f64 - 1.0),
            SetDescriptor::Boundary { .. } => None,
            SetDescriptor::WithInterior { ambient } => Some(ambient as f64),
        }
    }

    fn zero_measure(&self) -> bool {
        !matches!(self, SetDescriptor::WithInterior { .. })
    }

    fn validate(&self) -> Result<()> {
        const OP: &str = "diagnostics::nullity_advisor";
        match *self {
            SetDescriptor::CantorLimitSet { n, alpha } => {
                if n != 2 && n != 3 {
                    return Err(Error::input(OP, format!("Cantor sets are supported for n = 2, 3, got {n}")));
                }
                if !(alpha > 0.0 && alpha < 0.5) {
                    return Err(Error::input(OP, format!("Cantor ratio must lie in (0, 1/2), got {alpha}")));
                }
            }
            SetDescriptor::Boundary { regularity: BoundaryRegularity::Holder(a), .. } if !(a > 0.0 && a < 1.0) => {
                return Err(Error::input(OP, format!("Hölder exponent must lie in (0, 1), got {a}")));
            }
            _ => {}
        }
        if self.ambient() == 0 {
            return Err(Error::input(OP, "ambient dimension must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nullity {
    Null,
    NotNull,
    Undecided,
}

/// The rule that settled a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullityRule {
    /// Non-empty sets support delta functions when s < −m/2.
    BelowDeltaThreshold,
    /// Interior points support smooth bumps.
    NonEmptyInterior,
    /// Measure-zero sets are null for s ≥ 0.
    ZeroMeasure,
    /// Finite sets are null at s = −m/2.
    FiniteAtThreshold,
    /// Nullity passes to larger s.
    Monotone,
    /// dim_H < m + 2s with −m/2 < s < 0.
    DimensionBelow,
    /// dim_H > m + 2s rules out nullity for −m/2 ≤ s < 0.
    DimensionAbove,
    /// Lipschitz boundaries are null exactly when s ≥ −1/2.
    LipschitzBoundary,
    /// C⁰ boundaries are null for s ≥ 0 and not null for s < −1/2.
    ContinuousBoundary,
    /// C^{0,α} boundaries are null for s > −α/2.
    HolderBoundary,
    /// dim_H = m + 2s: the dimension test cannot decide.
    BoundaryCase,
    /// No rule applies.
    NoRule,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullityVerdict {
    pub descriptor: SetDescriptor,
    pub s: f64,
    pub verdict: Nullity,
    pub rule: NullityRule,
}

pub fn nullity_advisor(descriptor: SetDescriptor, s: f64) -> Result<NullityVerdict> {
    descriptor.validate()?;
    if !s.is_finite() {
        return Err(Error::input("diagnostics::nullity_advisor", "s must be finite"));
    }
    let (verdict, rule) = decide(&descriptor, s);
    Ok(NullityVerdict { descriptor, s, verdict, rule })
}

fn decide(desc: &SetDescriptor, s: f64) -> (Nullity, NullityRule) {
    let m = desc.ambient() as f64;
    if s < -m / 2.0 {
        return (Nullity::NotNull, NullityRule::BelowDeltaThreshold);
    }
    if let SetDescriptor::WithInterior { .. } = desc {
        return (Nullity::NotNull, NullityRule::NonEmptyInterior);
    }
    if s >= 0.0 && desc.zero_measure() {
        return (Nullity::Null, NullityRule::ZeroMeasure);
    }
    match *desc {
        SetDescriptor::FiniteSet { .. } => {
            if s == -m / 2.0 {
                (Nullity::Null, NullityRule::FiniteAtThreshold)
            } else {
                (Nullity::Null, NullityRule::Monotone)
            }
        }
        SetDescriptor::Hyperplane { .. } | SetDescriptor::Boundary { regularity: BoundaryRegularity::Lipschitz, .. } => {
            if s >= -0.5 {
                (Nullity::Null, NullityRule::LipschitzBoundary)
            } else {
                (Nullity::NotNull, NullityRule::LipschitzBoundary)
            }
        }
        SetDescriptor::Boundary { regularity, .. } => {
            if s < -0.5 {
                return (Nullity::NotNull, NullityRule::ContinuousBoundary);
            }
            if let BoundaryRegularity::Holder(a) = regularity {
                if s > -a / 2.0 {
                    return (Nullity::Null, NullityRule::HolderBoundary);
                }
            }
            (Nullity::Undecided, NullityRule::NoRule)
        }
        SetDescriptor::CantorLimitSet { .. } => {
            let dim = desc.hausdorff_dim().unwrap_or(f64::NAN);
            let threshold = m + 2.0 * s;
            // −m/2 ≤ s < 0 here; equality is judged up to rounding
            if (dim - threshold).abs() <= DIMENSION_TOL {
                (Nullity::Undecided, NullityRule::BoundaryCase)
            } else if dim > threshold {
                (Nullity::NotNull, NullityRule::DimensionAbove)
            } else if s > -m / 2.0 {
                (Nullity::Null, NullityRule::DimensionBelow)
            } else {
                (Nullity::Undecided, NullityRule::NoRule)
            }
        }
        SetDescriptor::WithInterior { .. } => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        let cantor = SetDescriptor::CantorLimitSet { n: 2, alpha: 1.0 / 3.0 };
        assert!((cantor.hausdorff_dim().unwrap() - 0.630_929_753_571_457_4).abs() < 1e-15);
        assert_eq!(nullity_advisor(cantor, -0.1).unwrap().verdict, Nullity::Null);
        assert_eq!(nullity_advisor(cantor, -0.1).unwrap().rule, NullityRule::DimensionBelow);
        let v = nullity_advisor(cantor, -1.0).unwrap();
        assert_eq!((v.verdict, v.rule), (Nullity::NotNull, NullityRule::BelowDeltaThreshold));
        let s_star = (cantor.hausdorff_dim().unwrap() - 1.0) / 2.0;
        assert_eq!(nullity_advisor(cantor, s_star).unwrap().verdict, Nullity::Undecided);
    }

    #[test]
    fn other_families() {
        let line = SetDescriptor::Hyperplane { ambient: 2 };
        assert_eq!(nullity_advisor(line, -0.5).unwrap().verdict, Nullity::Null);
        assert_eq!(nullity_advisor(line, -0.6).unwrap().verdict, Nullity::NotNull);
        let pts = SetDescriptor::FiniteSet { ambient: 2 };
        assert_eq!(nullity_advisor(pts, -1.0).unwrap().rule, NullityRule::FiniteAtThreshold);
        assert_eq!(nullity_advisor(pts, -1.01).unwrap().verdict, Nullity::NotNull);
        let open = SetDescriptor::WithInterior { ambient: 1 };
        assert_eq!(nullity_advisor(open, 3.0).unwrap().verdict, Nullity::NotNull);
        let c0 = SetDescriptor::Boundary { ambient: 2, regularity: BoundaryRegularity::Continuous };
        assert_eq!(nullity_advisor(c0, -0.25).unwrap().verdict, Nullity::Undecided);
        assert_eq!(nullity_advisor(c0, 0.0).unwrap().verdict, Nullity::Null);
        let holder = SetDescriptor::Boundary { ambient: 2, regularity: BoundaryRegularity::Holder(0.5) };
        assert_eq!(nullity_advisor(holder, -0.2).unwrap().verdict, Nullity::Null);
        assert!(nullity_advisor(SetDescriptor::CantorLimitSet { n: 2, alpha: 0.6 }, 0.0).is_err());
    }

    proptest! {
        // nullity is monotone in s: once null, null for every larger s
        #[test]
        fn verdicts_are_monotone_in_s(alpha in 0.05f64..0.49, n in 2usize..4, s in -2.0f64..1.0, ds in 0.0f64..1.0) {
            let d = SetDescriptor::CantorLimitSet { n, alpha };
            let a = nullity_advisor(d, s).unwrap().verdict;
            let b = nullity_advisor(d, s + ds).unwrap().verdict;
            if a == Nullity::Null {
                prop_assert_eq!(b, Nullity::Null);
            }
            if b == Nullity::NotNull {
                prop_assert_eq!(a, Nullity::NotNull);
            }
        }
    }
}
