//! Polynomial objectives paired with the quartic-style reference
//! F(x) = w·(‖x‖²+1)^p. Any polynomial of degree ≤ 2p admits some weight w
//! making the pair 1-self-concordant; the weight itself is existential, so
//! it is fitted numerically on a doubling grid and flagged as a sampler
//! artifact. Ships the x₁² − x₂² + x₂⁴ saddle benchmark.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::oracle::{fit_reference_weight, GaussianSampler, Oracle, ReferencePair};
use crate::Result;

/// F(x) = weight·(‖x‖²+1)^p.
#[derive(Debug, Clone)]
pub struct PolyReferenceOracle {
    pub dim: usize,
    pub p: u32,
    pub weight: f64,
}

impl Oracle for PolyReferenceOracle {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.weight * (x.norm_squared() + 1.0).powi(self.p as i32)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let r1 = x.norm_squared() + 1.0;
        x * (self.weight * 2.0 * self.p as f64 * r1.powi(self.p as i32 - 1))
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let p = self.p as f64;
        let r1 = x.norm_squared() + 1.0;
        let mut h =
            DMatrix::identity(self.dim, self.dim) * (2.0 * p * r1.powi(self.p as i32 - 1));
        h.ger(4.0 * p * (p - 1.0) * r1.powi(self.p as i32 - 2), x, x, 1.0);
        h * self.weight
    }
    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let p = self.p as f64;
        let r1 = x.norm_squared() + 1.0;
        let lin = v * (2.0 * p * r1.powi(self.p as i32 - 1));
        let rank1 = x * (4.0 * p * (p - 1.0) * r1.powi(self.p as i32 - 2) * x.dot(v));
        (lin + rank1) * self.weight
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        x.iter().all(|t| t.is_finite())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialReference {
    /// 2p — even degree bound of the objectives this reference certifies.
    pub degree_bound: u32,
    pub weight: f64,
}

impl PolynomialReference {
    pub fn p(&self) -> u32 {
        self.degree_bound / 2
    }

    pub fn oracle(&self, dim: usize) -> PolyReferenceOracle {
        PolyReferenceOracle { dim, p: self.p(), weight: self.weight }
    }

    /// Self-concordance constant of the reference itself: the supremum of
    /// |∇³F[h,h,h]| / (2·∇²F[h,h]^{3/2}) reduces to two scalars r = ‖x‖²
    /// and s = xᵀh (‖h‖ = 1). For p = 2 the supremum is exactly
    /// 1/(3√weight), attained at r = 1/6, s = √r; for general p a dense
    /// grid scan over (r, s) bounds it.
    pub fn kappa_ref(&self) -> f64 {
        let p = self.p() as f64;
        let w = self.weight;
        if self.p() == 2 {
            return 1.0 / (3.0 * w.sqrt());
        }
        let mut worst = 0.0_f64;
        for i in 0..=600 {
            // r log-spaced over [1e−4, 1e8] plus r = 0.
            let r = if i == 0 { 0.0 } else { 1e-4 * (1e12_f64).powf((i as f64 - 1.0) / 599.0) };
            let smax = r.sqrt();
            for j in 0..=200 {
                let s = smax * j as f64 / 200.0;
                let r1 = r + 1.0;
                let d2 = 2.0 * p * w * r1.powf(p - 1.0)
                    + 4.0 * p * (p - 1.0) * w * r1.powf(p - 2.0) * s * s;
                let d3 = 12.0 * p * (p - 1.0) * w * s * r1.powf(p - 2.0)
                    + 8.0 * p * (p - 1.0) * (p - 2.0) * w * s.powi(3) * r1.powf(p - 3.0);
                worst = worst.max(d3.abs() / (2.0 * d2.powf(1.5)));
            }
        }
        worst
    }
}

/// Fit the smallest doubling-grid weight w such that (f, w·(‖x‖²+1)^p)
/// passes the sampled self-concordance check at κ = 1; ×2 safety applied by
/// the underlying fitter. The result is an artifact of sampler and budget.
pub fn polynomial_reference_fit(
    f: Arc<dyn Oracle>,
    p: u32,
    sample_budget: usize,
    seed: u64,
) -> Result<PolynomialReference> {
    assert!(p >= 2, "degree bound 2p needs p ≥ 2");
    let dim = f.dim();
    let reference = Arc::new(PolyReferenceOracle { dim, p, weight: 1.0 });
    let sampler = Arc::new(GaussianSampler { dim, scale: 1.5 });
    let weight = fit_reference_weight(f, reference, 1.0, sampler, sample_budget, 10, seed)?;
    Ok(PolynomialReference { degree_bound: 2 * p, weight })
}

/// f(x₁,x₂) = x₁² − x₂² + x₂⁴: gradient-stationary saddle at the origin,
/// two global minima at (0, ±1/√2) with value −1/4.
#[derive(Debug, Clone)]
pub struct SaddleOracle;

impl Oracle for SaddleOracle {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        x[0] * x[0] - x[1] * x[1] + x[1].powi(4)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_column_slice(&[2.0 * x[0], -2.0 * x[1] + 4.0 * x[1].powi(3)])
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&[
            2.0,
            -2.0 + 12.0 * x[1] * x[1],
        ]))
    }
    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_column_slice(&[2.0 * v[0], (-2.0 + 12.0 * x[1] * x[1]) * v[1]])
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        x.iter().all(|t| t.is_finite())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaddleInstance {
    pub reference: PolynomialReference,
    pub seed: u64,
}

pub fn make_polynomial_saddle(seed: u64) -> Result<SaddleInstance> {
    let reference = polynomial_reference_fit(Arc::new(SaddleOracle), 2, 120, seed)?;
    Ok(SaddleInstance { reference, seed })
}

pub fn saddle_oracles(instance: &SaddleInstance) -> ReferencePair {
    let mut pair = ReferencePair::new(
        Arc::new(SaddleOracle),
        Arc::new(instance.reference.oracle(2)),
        1.0,
    );
    pair.kappa_ref = Some(instance.reference.kappa_ref());
    pair.lower_bound_hint = Some(-0.25);
    pair.sampler = Some(Arc::new(GaussianSampler { dim: 2, scale: 1.5 }));
    pair
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{check_derivatives, check_self_concordance};

    #[test]
    fn reference_derivatives_match() {
        for p in [2u32, 3, 4] {
            let oracle = PolyReferenceOracle { dim: 3, p, weight: 0.7 };
            let x = DVector::from_column_slice(&[0.4, -1.2, 0.9]);
            let report = check_derivatives(&oracle, &x, 8, 31).unwrap();
            assert!(report.worst_grad_rel_err <= 1e-5, "p={p}");
            assert!(report.worst_hess_rel_err <= 1e-5, "p={p}");
        }
    }

    #[test]
    fn kappa_ref_closed_form_for_quartic() {
        // Grid scan agrees with the exact 1/(3√w) supremum at p = 2.
        let exact = PolynomialReference { degree_bound: 4, weight: 2.3 };
        let scanned = PolynomialReference { degree_bound: 6, weight: 2.3 };
        assert!((exact.kappa_ref() - 1.0 / (3.0 * 2.3f64.sqrt())).abs() < 1e-15);
        // And the reference itself passes an SC check at its own κ.
        let pair = ReferencePair {
            objective: Arc::new(crate::oracle::ZeroOracle { dim: 3 }),
            reference: Arc::new(exact.oracle(3)),
            kappa: exact.kappa_ref(),
            kappa_ref: None,
            lower_bound_hint: None,
            sampler: Some(Arc::new(GaussianSampler { dim: 3, scale: 1.5 })),
        };
        let report = check_self_concordance(&pair, 20, 10, 1e-3, 4242).unwrap();
        assert!(report.pass, "worst ratio {} vs κ {}", report.worst_ratio, pair.kappa);
        // p = 3 scan produces something finite and positive.
        assert!(scanned.kappa_ref().is_finite() && scanned.kappa_ref() > 0.0);
    }

    #[test]
    fn zero_objective_fits_at_the_grid_floor() {
        let fit = polynomial_reference_fit(
            Arc::new(crate::oracle::ZeroOracle { dim: 2 }),
            2,
            30,
            9,
        )
        .unwrap();
        // Smallest grid value 1e−6 passes (F alone is 1-SC for any w at
        // p = 2 once 1/(3√w) ≤ 1… which fails for tiny w, so the fitter
        // must climb until 1/(3√w) ≤ 1+slack: w ≈ 1/9).
        assert!(fit.weight >= 1.0 / 9.0 * 0.9);
        assert!(fit.weight <= 1.0);
    }

    #[test]
    fn saddle_fit_produces_a_certified_pair() {
        let inst = make_polynomial_saddle(7).unwrap();
        let pair = saddle_oracles(&inst);
        // Held-out re-verification at a fresh seed.
        let report = check_self_concordance(&pair, 200, 5, 1e-3, 90210).unwrap();
        assert!(report.pass, "worst ratio {}", report.worst_ratio);
        assert!(pair.kappa_ref.unwrap() > 0.0);

        // Fit stability across seeds: doubling-grid resolution means the
        // weights agree within a factor of 4.
        let other = make_polynomial_saddle(8).unwrap();
        let ratio = inst.reference.weight / other.reference.weight;
        assert!(ratio <= 4.0 && ratio >= 0.25, "weights {} vs {}", inst.reference.weight, other.reference.weight);
    }

    #[test]
    fn saddle_geometry() {
        let f = SaddleOracle;
        let zero = DVector::zeros(2);
        assert_eq!(f.value(&zero), 0.0);
        assert!(f.gradient(&zero).norm() == 0.0);
        let h = f.hessian(&zero);
        assert_eq!(h[(0, 0)], 2.0);
        assert_eq!(h[(1, 1)], -2.0);
        let best = DVector::from_column_slice(&[0.0, 1.0 / 2.0f64.sqrt()]);
        assert!((f.value(&best) + 0.25).abs() < 1e-15);
        assert!(f.gradient(&best).norm() < 1e-15);
    }
}
