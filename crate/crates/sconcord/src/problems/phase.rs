//! Generalized phase retrieval over the realified variable x = (z^R; z^I):
//!
//!   f(x) = (1/2m) Σₖ ((c₁ₖᵀx)² + (c₂ₖᵀx)² − yₖ²)²,
//!   c₁ₖ = (aₖ^R; aₖ^I)/√2,  c₂ₖ = (−aₖ^I; aₖ^R)/√2,
//!
//! which is (4, ℓ)-weakly self-concordant. Each summand admits the modulus
//! ‖c₁ₖ‖² + ‖c₂ₖ‖² = ‖aₖ^R‖² + ‖aₖ^I‖², inflated by (1 + 4yₖ²) to absorb
//! the −2yₖ²·(·) cross term; the instance ℓ takes the (1/2m)-weighted sum
//! of those moduli, floors it at the largest per-term bound, and doubles
//! the result as a safety factor. The paired reference is F = (ℓ/2)‖·‖².

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::oracle::{standard_normal_vector, GaussianSampler, Oracle, ReferencePair, ScaledNormSquared};

#[derive(Debug, Clone)]
pub struct PhaseRetrievalInstance {
    /// m×n stack of aₖ^R rows.
    pub sensing_real: DMatrix<f64>,
    /// m×n stack of aₖ^I rows.
    pub sensing_imag: DMatrix<f64>,
    /// yₖ² values (nonnegative).
    pub targets: DVector<f64>,
    pub ell: f64,
    pub kappa: f64,
    pub seed: u64,
}

impl PhaseRetrievalInstance {
    pub fn n(&self) -> usize {
        self.sensing_real.ncols()
    }
    pub fn m(&self) -> usize {
        self.sensing_real.nrows()
    }
    /// Dimension of the realified variable (z^R; z^I).
    pub fn dim(&self) -> usize {
        2 * self.n()
    }
}

/// The loss oracle: rows of `c1`/`c2` hold c₁ₖᵀ and c₂ₖᵀ.
#[derive(Debug, Clone)]
pub struct PhaseRetrievalOracle {
    c1: DMatrix<f64>,
    c2: DMatrix<f64>,
    targets: DVector<f64>,
}

impl PhaseRetrievalOracle {
    pub fn new(instance: &PhaseRetrievalInstance) -> Self {
        let (m, n) = (instance.m(), instance.n());
        let s = 0.5f64.sqrt();
        let mut c1 = DMatrix::zeros(m, 2 * n);
        let mut c2 = DMatrix::zeros(m, 2 * n);
        for k in 0..m {
            for j in 0..n {
                let ar = instance.sensing_real[(k, j)];
                let ai = instance.sensing_imag[(k, j)];
                c1[(k, j)] = s * ar;
                c1[(k, n + j)] = s * ai;
                c2[(k, j)] = -s * ai;
                c2[(k, n + j)] = s * ar;
            }
        }
        Self { c1, c2, targets: instance.targets.clone() }
    }

    fn m(&self) -> usize {
        self.c1.nrows()
    }
}

impl Oracle for PhaseRetrievalOracle {
    fn dim(&self) -> usize {
        self.c1.ncols()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        let u = &self.c1 * x;
        let v = &self.c2 * x;
        let m = self.m();
        let mut acc = 0.0;
        for k in 0..m {
            let r = u[k] * u[k] + v[k] * v[k] - self.targets[k];
            acc += r * r;
        }
        acc / (2.0 * m as f64)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let u = &self.c1 * x;
        let v = &self.c2 * x;
        let m = self.m();
        let mut ru = DVector::zeros(m);
        let mut rv = DVector::zeros(m);
        for k in 0..m {
            let r = u[k] * u[k] + v[k] * v[k] - self.targets[k];
            ru[k] = r * u[k];
            rv[k] = r * v[k];
        }
        (self.c1.transpose() * ru + self.c2.transpose() * rv) * (2.0 / m as f64)
    }
    fn hvp(&self, x: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        let u = &self.c1 * x;
        let v = &self.c2 * x;
        let du = &self.c1 * h;
        let dv = &self.c2 * h;
        let m = self.m();
        let mut au = DVector::zeros(m);
        let mut av = DVector::zeros(m);
        for k in 0..m {
            let r = u[k] * u[k] + v[k] * v[k] - self.targets[k];
            let dr = 2.0 * (u[k] * du[k] + v[k] * dv[k]);
            au[k] = dr * u[k] + r * du[k];
            av[k] = dr * v[k] + r * dv[k];
        }
        (self.c1.transpose() * au + self.c2.transpose() * av) * (2.0 / m as f64)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        // (1/m) Σₖ [∇qₖ∇qₖᵀ + rₖ·2(c₁c₁ᵀ + c₂c₂ᵀ)], ∇qₖ = 2uₖc₁ₖ + 2vₖc₂ₖ.
        let d = self.dim();
        let m = self.m();
        let u = &self.c1 * x;
        let v = &self.c2 * x;
        let mut h = DMatrix::zeros(d, d);
        for k in 0..m {
            let c1k = self.c1.row(k).transpose();
            let c2k = self.c2.row(k).transpose();
            let r = u[k] * u[k] + v[k] * v[k] - self.targets[k];
            let grad_q = &c1k * (2.0 * u[k]) + &c2k * (2.0 * v[k]);
            h.ger(1.0 / m as f64, &grad_q, &grad_q, 1.0);
            h.ger(2.0 * r / m as f64, &c1k, &c1k, 1.0);
            h.ger(2.0 * r / m as f64, &c2k, &c2k, 1.0);
        }
        h
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        x.iter().all(|t| t.is_finite())
    }
}

/// Standard-normal sensing vectors, targets planted from a standard-normal
/// signal (zero noise: f(z⋆) = 0 exactly).
pub fn make_phase_retrieval(n: usize, m: usize, seed: u64) -> PhaseRetrievalInstance {
    assert!(n >= 1 && m >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sensing_real = DMatrix::from_fn(m, n, |_, _| standard_normal_vector(&mut rng, 1)[0]);
    let sensing_imag = DMatrix::from_fn(m, n, |_, _| standard_normal_vector(&mut rng, 1)[0]);
    let z_star = standard_normal_vector(&mut rng, 2 * n);

    let mut instance = PhaseRetrievalInstance {
        sensing_real,
        sensing_imag,
        targets: DVector::zeros(m),
        ell: 0.0,
        kappa: 4.0,
        seed,
    };
    let oracle = PhaseRetrievalOracle::new(&instance);
    let u = &oracle.c1 * &z_star;
    let v = &oracle.c2 * &z_star;
    instance.targets = DVector::from_fn(m, |k, _| u[k] * u[k] + v[k] * v[k]);

    let mut weighted_sum = 0.0;
    let mut per_term_max = 0.0_f64;
    for k in 0..m {
        let bound = instance.sensing_real.row(k).norm_squared()
            + instance.sensing_imag.row(k).norm_squared();
        per_term_max = per_term_max.max(bound);
        weighted_sum += bound * (1.0 + 4.0 * instance.targets[k]);
    }
    instance.ell = 2.0 * (weighted_sum / (2.0 * m as f64)).max(per_term_max);
    instance
}

pub fn phase_oracles(instance: &PhaseRetrievalInstance) -> ReferencePair {
    let dim = instance.dim();
    let mut pair = ReferencePair::new(
        Arc::new(PhaseRetrievalOracle::new(instance)),
        Arc::new(ScaledNormSquared { dim, weight: instance.ell }),
        instance.kappa,
    );
    pair.kappa_ref = Some(0.0);
    pair.lower_bound_hint = Some(0.0);
    pair.sampler = Some(Arc::new(GaussianSampler { dim, scale: 1.0 }));
    pair
}
