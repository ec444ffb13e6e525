//! Inexact proximal point method for (κ,ℓ)-weakly self-concordant
//! objectives. Each outer step minimizes f_j(y) = f(y) + ½μ‖y − z_j‖²
//! (κ-self-concordant once μ > ℓ) with the Newton-CG inner solver; the
//! outer loop terminates when an inner call certifies its own start point.
//! Also hosts the Moreau-envelope stationarity conversion used to read the
//! output certificate as ‖∇f_{1/μ}‖ ≤ ε.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::newton_cg::{newton_cg_solve, NewtonCgCertificate, NewtonCgConfig};
use crate::numerics::{solve_pd, sqrt_cond};
use crate::oracle::{Oracle, ProxOracle};
use crate::scalar::AppendixConstants;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IppmConfig {
    pub kappa: f64,
    /// Weak-self-concordance offset ℓ (reference ½ℓ‖·‖²).
    pub ell: f64,
    /// Prox weight μ > ℓ.
    pub mu: f64,
    /// Target tolerance ε for ν_{f,½μ‖·‖²}.
    pub eps: f64,
    /// Conditioning bound: β² ≥ cond(∇²f(z₀) + μI) is assumed, validated
    /// post hoc (logged, never asserted).
    pub beta: f64,
    pub fail_prob: f64,
    /// Upper bound Δ ≥ f(z₀) − inf f. Drives K and the inner budgets.
    pub gap_budget: f64,
    pub max_outer: usize,
}

impl IppmConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.kappa >= 0.0
            && self.ell >= 0.0
            && self.mu > self.ell
            && self.eps > 0.0
            && self.beta > 1.0
            && (0.0..1.0).contains(&self.fail_prob)
            && self.gap_budget > 0.0
            && self.max_outer > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "ippm: need κ ≥ 0, 0 ≤ ℓ < μ, ε > 0, β > 1, δ ∈ [0,1), Δ > 0, max_outer ≥ 1"
                    .into(),
            ))
        }
    }

    /// K = 8μΔ/((μ−ℓ)ε²).
    pub fn k_bound(&self) -> f64 {
        8.0 * self.mu * self.gap_budget / ((self.mu - self.ell) * self.eps * self.eps)
    }

    /// δ′ = (K+2)⁻¹δ.
    pub fn inner_fail_prob(&self) -> f64 {
        self.fail_prob / (self.k_bound() + 2.0)
    }

    /// β′ = C₃²β.
    pub fn inner_beta(&self) -> f64 {
        AppendixConstants::standard().c3.powi(2) * self.beta
    }

    /// ε′ = (√((1−α⋆)/(1+α⋆)) − 0.5)·ε.
    pub fn inner_eps(&self) -> f64 {
        let a = AppendixConstants::standard().alpha_star;
        (((1.0 - a) / (1.0 + a)).sqrt() - 0.5) * self.eps
    }

    /// Guaranteed outer-iteration budget ⌊K⌋ + 2.
    pub fn suggested_outer(&self) -> usize {
        self.k_bound().floor() as usize + 2
    }

    fn inner_config(&self) -> NewtonCgConfig {
        let max_iters = if self.kappa > 0.0 {
            NewtonCgConfig::with_gap_budget(
                self.kappa,
                self.eps,
                self.inner_eps(),
                self.inner_beta(),
                self.inner_fail_prob(),
                self.gap_budget,
            )
            .max_iters
        } else {
            64
        };
        NewtonCgConfig {
            kappa: self.kappa,
            eps0: self.eps,
            eps1: self.inner_eps(),
            beta: self.inner_beta(),
            fail_prob: self.inner_fail_prob(),
            max_iters,
            hvp_only: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IppmOuterRecord {
    pub j: usize,
    /// f(z_j) (without the prox term).
    pub f: f64,
    pub inner_iterations: usize,
    pub certificate: NewtonCgCertificate,
    /// √cond(∇²f(z_j) + μI) Lanczos estimate, logged to audit β.
    pub cond_sqrt_est: f64,
    pub hvp_cumulative: u64,
}

#[derive(Debug, Clone)]
pub struct IppmReport {
    pub y: DVector<f64>,
    /// ν_{f,½μ‖·‖²}(y), recomputed by a direct factorization solve.
    pub nu: f64,
    pub outer_iterations: usize,
    pub trace: Vec<IppmOuterRecord>,
    pub hvp_count: u64,
}

/// ν_{f,½μ‖·‖²}(x) = √(∇f(x)ᵀ(∇²f(x)+μI)⁻¹∇f(x)) by factorization — the
/// regularized Newton decrement the theorem certifies at the output.
pub fn nu_moreau(f: &dyn Oracle, mu: f64, x: &DVector<f64>) -> Result<f64> {
    let g = f.gradient(x);
    let mut h = f.hessian(x);
    for i in 0..h.nrows() {
        h[(i, i)] += mu;
    }
    let solved = solve_pd(&h, &g)?;
    if !solved.success {
        return Err(Error::AssumptionViolation(format!(
            "nu_moreau: ∇²f + μI not positive definite (pivot {})",
            solved.smallest_pivot
        )));
    }
    Ok(g.dot(&solved.solution.unwrap()).max(0.0).sqrt())
}

/// ν tolerance that certifies ‖∇f_{1/μ}(x)‖ ≤ ε:
/// √(μ−ℓ)·ε / (μ + κ√(μ−ℓ)·ε).
pub fn nu_threshold_for_moreau(mu: f64, ell: f64, kappa: f64, eps: f64) -> Result<f64> {
    if !(mu > ell) || eps <= 0.0 || kappa < 0.0 || ell < 0.0 {
        return Err(Error::InvalidConfig(
            "nu_threshold_for_moreau: need μ > ℓ ≥ 0, ε > 0, κ ≥ 0".into(),
        ));
    }
    let s = (mu - ell).sqrt() * eps;
    Ok(s / (mu + kappa * s))
}

/// μ·‖x − argmin_y {f(y) + ½μ‖y−x‖²}‖ = ‖∇f_{1/μ}(x)‖, with the prox point
/// found by the Newton-CG solver to gradient tolerance `inner_tol`. κ is
/// the self-concordance constant handed to the inner solver (the prox
/// objective is κ-self-concordant for μ > ℓ). Validation helper for the
/// envelope lemma; never called inside the solver loop.
pub fn moreau_grad_norm(
    f: Arc<dyn Oracle>,
    kappa: f64,
    ell: f64,
    mu: f64,
    x: &DVector<f64>,
    inner_tol: f64,
) -> Result<f64> {
    if !(mu > ell) {
        return Err(Error::InvalidConfig("moreau_grad_norm: need μ > ℓ".into()));
    }
    let prox = Arc::new(ProxOracle { f, mu, center: x.clone() });
    let cfg = NewtonCgConfig {
        kappa,
        eps0: inner_tol,
        eps1: inner_tol,
        beta: 1e6,
        fail_prob: 1e-6,
        max_iters: 10_000,
        hvp_only: false,
    };
    let report = newton_cg_solve(prox, x, &cfg)?;
    Ok(mu * (x - &report.y).norm())
}

pub fn ippm_solve(
    f: Arc<dyn Oracle>,
    z0: &DVector<f64>,
    cfg: &IppmConfig,
) -> Result<IppmReport> {
    cfg.validate()?;
    if z0.len() != f.dim() {
        return Err(Error::DimensionMismatch("ippm: z0 has wrong dimension".into()));
    }
    if !f.in_domain(z0) {
        return Err(Error::DomainViolation("ippm: z0 outside the domain".into()));
    }
    let inner_cfg = cfg.inner_config();
    let mut z = z0.clone();
    let mut trace: Vec<IppmOuterRecord> = Vec::new();
    let mut hvp_total: u64 = 0;

    for j in 0..cfg.max_outer {
        let f_z = f.value(&z);
        let prox = Arc::new(ProxOracle { f: f.clone(), mu: cfg.mu, center: z.clone() });
        // Audit the conditioning assumption at z_j (logged only).
        let cond_sqrt_est = {
            let h = prox.hessian(&z);
            sqrt_cond(&h, 1e-2, cfg.inner_beta(), 0x1b0a ^ j as u64)?.value
        };
        let inner = newton_cg_solve(prox.clone(), &z, &inner_cfg).map_err(|e| {
            Error::Diagnostic(format!("ippm: inner solve failed at outer step {j}: {e}"))
        })?;
        hvp_total += inner.hvp_count;
        trace.push(IppmOuterRecord {
            j,
            f: f_z,
            inner_iterations: inner.iterations,
            certificate: inner.certificate,
            cond_sqrt_est,
            hvp_cumulative: hvp_total,
        });
        if inner.certificate == NewtonCgCertificate::EarlyExitAtX0 {
            let nu = nu_moreau(f.as_ref(), cfg.mu, &z)?;
            return Ok(IppmReport {
                y: z,
                nu,
                outer_iterations: trace.len(),
                trace,
                hvp_count: hvp_total,
            });
        }
        z = inner.y;
    }
    Err(Error::Diagnostic(format!(
        "ippm: no early-exit certificate within {} outer iterations \
         (K-budget suggests {}); gap_budget or β may be too small",
        cfg.max_outer,
        cfg.suggested_outer()
    )))
}
