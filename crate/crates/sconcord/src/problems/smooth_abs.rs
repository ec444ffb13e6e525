//! Smooth absolute value h_α(x) = α⁻¹(log(1+e^{αx}) + log(1+e^{−αx})),
//! the softplus-pair approximation of |x| used to smooth ℓ₁ terms. Only the
//! scalar calculus ships (see the crate non-goals); the coordinatewise-sum
//! oracle exists for derivative tests.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::oracle::Oracle;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmoothAbs {
    pub alpha: f64,
}

/// (h_α, h_α′, h_α″, h_α‴) at x, stable for any |αx| (large arguments hit
/// the rearrangement h_α(x) = |x| + (2/α)·log(1+e^{−α|x|})).
pub fn smooth_abs_eval(alpha: f64, x: f64) -> (f64, f64, f64, f64) {
    assert!(alpha > 0.0);
    let ax = alpha * x;
    let value = x.abs() + 2.0 / alpha * (-ax.abs()).exp().ln_1p();
    let t = (0.5 * ax).tanh();
    let sech2 = 1.0 - t * t;
    let first = t;
    let second = 0.5 * alpha * sech2;
    let third = -0.5 * alpha * alpha * t * sech2;
    (value, first, second, third)
}

/// Σᵢ h_α(xᵢ) over ℝⁿ.
#[derive(Debug, Clone)]
pub struct SmoothAbsOracle {
    pub dim: usize,
    pub alpha: f64,
}

impl Oracle for SmoothAbsOracle {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        x.iter().map(|&t| smooth_abs_eval(self.alpha, t).0).sum()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim, |i, _| smooth_abs_eval(self.alpha, x[i]).1)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_fn(self.dim, |i, _| {
            smooth_abs_eval(self.alpha, x[i]).2
        }))
    }
    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim, |i, _| smooth_abs_eval(self.alpha, x[i]).2 * v[i])
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        x.iter().all(|t| t.is_finite())
    }
}
