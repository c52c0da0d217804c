//! Ensemble-fitted constants and their refinement stability.
//!
//! An estimate of the form `LHS ≤ C·RHS` is materialized as the largest
//! observed ratio over an ensemble; comparing the fit at two resolutions
//! tells whether the constant is a property of the continuous functions or
//! of the grid.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Ratios of one estimate over an ensemble.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EstimateReport {
    pub name: String,
    /// `LHS/RHS` per member; members with vanishing RHS are skipped.
    pub ratios: Vec<f64>,
    /// Smallest constant covering every member.
    pub constant: f64,
}

impl EstimateReport {
    pub fn from_ratios<T: Real>(name: &str, ratios: impl IntoIterator<Item = T>) -> Self {
        let ratios: Vec<f64> = ratios.into_iter().map(Real::as_f64).collect();
        let constant = ratios.iter().copied().fold(0.0, f64::max);
        Self {
            name: name.to_string(),
            ratios,
            constant,
        }
    }

    /// Whether every ratio stays below `bound`.
    pub fn within(&self, bound: f64) -> bool {
        self.ratios.iter().all(|&r| r <= bound)
    }
}

/// `LHS/RHS`, or `None` when the right side vanishes.
pub fn ratio<T: Real>(lhs: T, rhs: T) -> Option<T> {
    if rhs > T::zero() {
        Some(lhs / rhs)
    } else {
        None
    }
}

/// `|fine − coarse| / |coarse|` (zero when both vanish).
pub fn relative_drift(coarse: f64, fine: f64) -> f64 {
    if coarse == 0.0 {
        if fine == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (fine - coarse).abs() / coarse.abs()
    }
}

/// A fitted constant measured at two resolutions.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RefinementReport {
    pub check_name: String,
    pub coarse_n: usize,
    pub fine_n: usize,
    pub fitted_c_coarse: f64,
    pub fitted_c_fine: f64,
    pub refinement_drift: f64,
}

impl RefinementReport {
    pub fn new(
        check_name: &str,
        (coarse_n, coarse): (usize, &EstimateReport),
        (fine_n, fine): (usize, &EstimateReport),
    ) -> Self {
        Self {
            check_name: check_name.to_string(),
            coarse_n,
            fine_n,
            fitted_c_coarse: coarse.constant,
            fitted_c_fine: fine.constant,
            refinement_drift: relative_drift(coarse.constant, fine.constant),
        }
    }

    pub fn stable(&self, tolerance: f64) -> bool {
        self.refinement_drift.is_finite() && self.refinement_drift < tolerance
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Observed order from three errors at step ratios 1 : 1/2 : 1/4.
pub fn richardson_order(coarse: f64, mid: f64, fine: f64) -> f64 {
    ((coarse - mid) / (mid - fine)).abs().log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_max_ratio() {
        let r = EstimateReport::from_ratios("x", [0.5_f64, 2.0, 1.0]);
        assert_eq!(r.constant, 2.0);
        assert!(r.within(2.0));
        assert!(!r.within(1.9));
        assert_eq!(EstimateReport::from_ratios::<f64>("e", []).constant, 0.0);
    }

    #[test]
    fn drift_and_slope() {
        assert_eq!(relative_drift(2.0, 2.1), 0.050000000000000044);
        assert_eq!(relative_drift(0.0, 0.0), 0.0);
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
        assert!((log_log_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn richardson_on_quadratic_error() {
        let e = |h: f64| 1.0 + 5.0 * h * h;
        let order = richardson_order(e(0.1), e(0.05), e(0.025));
        assert!((order - 2.0).abs() < 1e-9);
    }
}
