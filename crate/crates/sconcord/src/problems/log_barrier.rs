//! Separable log-barrier demo problem: f(x) = Σᵢ (q/2·xᵢ² + cᵢxᵢ − log xᵢ)
//! on the positive orthant. Classically 1-self-concordant (zero reference),
//! with a closed-form minimizer — handy for exact optimality gaps.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::oracle::{LogUniformSampler, Oracle, ReferencePair, ZeroOracle};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogBarrierInstance {
    pub dim: usize,
    /// Quadratic weight q ≥ 0.
    pub quad: f64,
    /// Linear coefficients c (positive when q = 0, else f is unbounded).
    pub linear: Vec<f64>,
    pub seed: u64,
    pub optimal_value: f64,
}

#[derive(Debug, Clone)]
pub struct LogBarrierOracle {
    pub quad: f64,
    pub linear: DVector<f64>,
}

impl Oracle for LogBarrierOracle {
    fn dim(&self) -> usize {
        self.linear.len()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        if !self.in_domain(x) {
            return f64::INFINITY;
        }
        x.iter()
            .zip(self.linear.iter())
            .map(|(&t, &c)| 0.5 * self.quad * t * t + c * t - t.ln())
            .sum()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| self.quad * x[i] + self.linear[i] - 1.0 / x[i])
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_fn(x.len(), |i, _| {
            self.quad + 1.0 / (x[i] * x[i])
        }))
    }
    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| (self.quad + 1.0 / (x[i] * x[i])) * v[i])
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        x.iter().all(|&t| t > 0.0 && t.is_finite())
    }
}

/// Per-coordinate argmin of q/2·t² + ct − log t over t > 0.
fn coordinate_min(quad: f64, c: f64) -> f64 {
    if quad > 0.0 {
        (-c + (c * c + 4.0 * quad).sqrt()) / (2.0 * quad)
    } else {
        assert!(c > 0.0, "log-barrier demo needs c > 0 when q = 0");
        1.0 / c
    }
}

/// Coefficients cᵢ ~ U[0.5, 1.5]; exact optimum recorded for gap reporting.
pub fn make_log_barrier(dim: usize, quad: f64, seed: u64) -> LogBarrierInstance {
    assert!(dim >= 1 && quad >= 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let linear: Vec<f64> = (0..dim).map(|_| 0.5 + rand::Rng::random::<f64>(&mut rng)).collect();
    let oracle = LogBarrierOracle { quad, linear: DVector::from_vec(linear.clone()) };
    let x_star = DVector::from_fn(dim, |i, _| coordinate_min(quad, linear[i]));
    let optimal_value = oracle.value(&x_star);
    LogBarrierInstance { dim, quad, linear, seed, optimal_value }
}

pub fn log_barrier_oracles(instance: &LogBarrierInstance) -> ReferencePair {
    let f = Arc::new(LogBarrierOracle {
        quad: instance.quad,
        linear: DVector::from_vec(instance.linear.clone()),
    });
    let mut pair = ReferencePair::new(f, Arc::new(ZeroOracle { dim: instance.dim }), 1.0);
    pair.kappa_ref = Some(0.0);
    pair.lower_bound_hint = Some(instance.optimal_value);
    pair.sampler = Some(Arc::new(LogUniformSampler { dim: instance.dim, lo: 1e-2, hi: 1e1 }));
    pair
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::check_derivatives;

    #[test]
    fn minimizer_is_stationary_and_optimal_value_matches() {
        let inst = make_log_barrier(6, 0.3, 42);
        let pair = log_barrier_oracles(&inst);
        let x_star = DVector::from_fn(6, |i, _| coordinate_min(0.3, inst.linear[i]));
        assert!(pair.objective.gradient(&x_star).norm() < 1e-12);
        assert!((pair.objective.value(&x_star) - inst.optimal_value).abs() < 1e-14);
        // Any other point sits above the recorded optimum.
        let x = DVector::from_element(6, 2.5);
        assert!(pair.objective.value(&x) > inst.optimal_value);
    }

    #[test]
    fn derivatives_check_out() {
        let inst = make_log_barrier(5, 0.0, 7);
        let pair = log_barrier_oracles(&inst);
        let x = DVector::from_element(5, 0.8);
        let report = check_derivatives(pair.objective.as_ref(), &x, 6, 99).unwrap();
        assert!(report.worst_grad_rel_err <= 1e-5 && report.worst_hess_rel_err <= 1e-5);
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let a = make_log_barrier(8, 0.1, 5);
        let b = make_log_barrier(8, 0.1, 5);
        assert_eq!(a.linear, b.linear);
        assert_eq!(a.optimal_value.to_bits(), b.optimal_value.to_bits());
        let c = make_log_barrier(8, 0.1, 6);
        assert_ne!(a.linear, c.linear);
    }
}
