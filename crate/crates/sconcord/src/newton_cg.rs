//! A line-search-free Newton-CG method for convex κ-self-concordant
//! functions. Condition numbers are estimated by Lanczos (sqrt-cond), the
//! Newton system is solved by a fixed number of CG iterations, and the step
//! size comes from the self-concordance calculus: a global phase with
//! damped steps and multiplicatively growing β_k, then a local phase with
//! a frozen β_local and Q-linear decrement contraction.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::numerics::{cg_inverse, solve_pd, sqrt_cond, HessianOperator};
use crate::oracle::{CountingOracle, Oracle};
use crate::scalar::{omega, AppendixConstants};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewtonCgConfig {
    /// κ of the objective. κ = 0 (quadratic-like) is routed to a
    /// direct-solve Newton loop, since the two-phase thresholds R₁²/κ²
    /// degenerate.
    pub kappa: f64,
    /// Coarse tolerance ε₀ tested only at k = 0.
    pub eps0: f64,
    /// Output tolerance ε₁.
    pub eps1: f64,
    /// β > 1 with β² ≥ cond(∇²f(x₀)) (caller-asserted).
    pub beta: f64,
    /// Total failure probability δ, split 0.5δ + 0.5δ over the two
    /// sqrt-cond calls.
    pub fail_prob: f64,
    pub max_iters: usize,
    /// Drive CG by Hessian-vector products instead of assembling the
    /// Hessian once per iteration.
    pub hvp_only: bool,
}

impl NewtonCgConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.kappa >= 0.0
            && self.eps0 > 0.0
            && self.eps1 > 0.0
            && self.beta > 1.0
            && (0.0..1.0).contains(&self.fail_prob)
            && self.max_iters > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "newton_cg: need κ ≥ 0, ε₀ > 0, ε₁ > 0, β > 1, δ ∈ [0,1), max_iters ≥ 1".into(),
            ))
        }
    }

    /// Iteration budget 2 + ⌊K₁⌋ + max(⌊K₂⌋, 0) from a bound Δ on the
    /// initial gap: K₁ = κ²Δ/ω(R₃) global steps, K₂ = 2·log_{1/C₂}(R₂/(κε₁))
    /// local steps.
    pub fn with_gap_budget(
        kappa: f64,
        eps0: f64,
        eps1: f64,
        beta: f64,
        fail_prob: f64,
        gap: f64,
    ) -> Self {
        assert!(kappa > 0.0 && gap > 0.0, "gap budget needs κ > 0 and Δ > 0");
        let c = AppendixConstants::standard();
        let k1 = (kappa * kappa * gap / omega(c.r3)).floor();
        let k2 = (2.0 * (c.r2 / (kappa * eps1)).ln() / (1.0 / c.c2).ln()).floor();
        let max_iters = 2 + k1 as usize + k2.max(0.0) as usize;
        Self { kappa, eps0, eps1, beta, fail_prob, max_iters, hvp_only: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonCgCertificate {
    /// Returned at k = 0 with ρ₀ ≤ (1−α⋆)ε₀²: the start point was already
    /// ε₀-stationary. IPPM keys its outer termination on this.
    EarlyExitAtX0,
    /// Returned with ρ_k ≤ (1−α⋆)ε₁².
    Converged,
}

/// One iteration of the solver (including the terminal one, which has no
/// step).
#[derive(Debug, Clone)]
pub struct NewtonCgIterate {
    pub k: usize,
    pub x: DVector<f64>,
    pub f: f64,
    pub rho: f64,
    pub delta: f64,
    pub t: Option<f64>,
    pub beta_k: f64,
    pub global_phase: bool,
}

#[derive(Debug, Clone)]
pub struct NewtonCgReport {
    pub y: DVector<f64>,
    pub certificate: NewtonCgCertificate,
    pub iterations: usize,
    pub trace: Vec<NewtonCgIterate>,
    pub beta_local: Option<f64>,
    /// Equivalent HVP count: direct HVPs plus n per assembled Hessian.
    pub hvp_count: u64,
}

/// Exact Newton decrement λ_f(x) = √(∇fᵀ(∇²f)⁻¹∇f), by factorization.
pub fn lambda_f(oracle: &dyn Oracle, x: &DVector<f64>) -> Result<f64> {
    let g = oracle.gradient(x);
    let h = oracle.hessian(x);
    let solved = solve_pd(&h, &g)?;
    if !solved.success {
        return Err(Error::AssumptionViolation(format!(
            "lambda_f: Hessian not positive definite (pivot {})",
            solved.smallest_pivot
        )));
    }
    Ok(g.dot(&solved.solution.unwrap()).max(0.0).sqrt())
}

pub fn newton_cg_solve(
    oracle: Arc<dyn Oracle>,
    x0: &DVector<f64>,
    cfg: &NewtonCgConfig,
) -> Result<NewtonCgReport> {
    cfg.validate()?;
    if x0.len() != oracle.dim() {
        return Err(Error::DimensionMismatch("newton_cg: x0 has wrong dimension".into()));
    }
    if !oracle.in_domain(x0) {
        return Err(Error::DomainViolation("newton_cg: x0 outside the domain".into()));
    }
    let n = oracle.dim();
    let (counted, counters) = CountingOracle::wrap(oracle);
    let consts = AppendixConstants::standard();
    let alpha = consts.alpha_star;

    let mut x = x0.clone();
    let mut f_x = counted.value(&x);
    let mut trace: Vec<NewtonCgIterate> = Vec::new();

    // κ = 0: thresholds degenerate; run exact damped-Newton steps t = ρ/δ
    // with factorization solves (the quadratic route).
    let kappa = cfg.kappa;
    let two_phase = kappa > 0.0;

    let mut beta_k = if two_phase {
        let h0 = counted.hessian(&x);
        sqrt_cond(&h0, 0.5 * cfg.fail_prob, cfg.beta, 0x5c0d)?.value
    } else {
        cfg.beta
    };
    let mut beta_local: Option<f64> = None;
    let mut flag = true;
    let early_threshold = (1.0 - alpha) * cfg.eps0 * cfg.eps0;
    let stop_threshold = (1.0 - alpha) * cfg.eps1 * cfg.eps1;
    let global_gate = if two_phase { consts.r1 * consts.r1 / (kappa * kappa) } else { f64::INFINITY };

    let hvps = move || {
        let s = counters.snapshot();
        s.hvp + n as u64 * s.hessian
    };

    for k in 0..cfg.max_iters {
        let g = counted.gradient(&x);
        // One assembly (or none in hvp_only mode) reused for CG and δ_k.
        let h = if cfg.hvp_only { None } else { Some(counted.hessian(&x)) };
        let hvp_op = HessianOperator { oracle: counted.as_ref(), x: &x };
        let (h_k, delta_k) = if two_phase {
            let cg = match &h {
                Some(hm) => cg_inverse(hm, &g, beta_k, alpha)?,
                None => cg_inverse(&hvp_op, &g, beta_k, alpha)?,
            };
            let hk = cg.solution;
            let dk = match &h {
                Some(hm) => hk.dot(&(hm * &hk)),
                None => hk.dot(&counted.hvp(&x, &hk)),
            };
            (hk, dk)
        } else {
            let hm = match &h {
                Some(hm) => hm.clone(),
                None => counted.hessian(&x),
            };
            let solved = solve_pd(&hm, &g)?;
            if !solved.success {
                return Err(Error::AssumptionViolation(format!(
                    "newton_cg: Hessian not positive definite at iteration {k} (pivot {})",
                    solved.smallest_pivot
                )));
            }
            let hk = solved.solution.unwrap();
            let dk = hk.dot(&g); // exact solve: hᵀHh = hᵀg
            (hk, dk)
        };
        let rho_k = h_k.dot(&g);

        if rho_k <= stop_threshold || (k == 0 && rho_k <= early_threshold) {
            trace.push(NewtonCgIterate {
                k,
                x: x.clone(),
                f: f_x,
                rho: rho_k,
                delta: delta_k,
                t: None,
                beta_k,
                global_phase: rho_k > global_gate,
            });
            let certificate = if k == 0 && rho_k <= early_threshold {
                NewtonCgCertificate::EarlyExitAtX0
            } else {
                NewtonCgCertificate::Converged
            };
            return Ok(NewtonCgReport {
                y: x,
                certificate,
                iterations: trace.len(),
                trace,
                beta_local,
                hvp_count: hvps(),
            });
        }

        if rho_k < 0.0 || delta_k <= 0.0 {
            return Err(Error::Diagnostic(format!(
                "newton_cg: CG produced unusable curvature at iteration {k} \
                 (ρ = {rho_k}, δ = {delta_k}); β likely underestimates the condition number"
            )));
        }

        let global = rho_k > global_gate;
        let beta_used = beta_k;
        let t_k = if global {
            let t = rho_k / (delta_k + kappa * rho_k * delta_k.sqrt());
            let b_k = {
                let s = (1.0 + alpha).sqrt() / (1.0 - alpha);
                (1.0 + s * kappa * rho_k.sqrt()).powi(2)
            };
            beta_k *= b_k;
            t
        } else if two_phase {
            if flag {
                let bstar = match &h {
                    Some(hm) => sqrt_cond(hm, 0.5 * cfg.fail_prob, beta_k, 0x10ca1)?.value,
                    None => sqrt_cond(&hvp_op, 0.5 * cfg.fail_prob, beta_k, 0x10ca1)?.value,
                };
                beta_local = Some(consts.c3.powi(4) * bstar);
                flag = false;
            }
            beta_k = beta_local.unwrap();
            rho_k / (delta_k + 2.0 * kappa * rho_k * delta_k.sqrt())
        } else {
            rho_k / delta_k
        };

        trace.push(NewtonCgIterate {
            k,
            x: x.clone(),
            f: f_x,
            rho: rho_k,
            delta: delta_k,
            t: Some(t_k),
            beta_k: beta_used,
            global_phase: global,
        });

        let x_next = &x - &h_k * t_k;
        if !counted.in_domain(&x_next) {
            return Err(Error::Diagnostic(format!(
                "newton_cg: step left the domain at iteration {k}; \
                 β likely underestimates the condition number"
            )));
        }
        let f_next = counted.value(&x_next);
        if !f_next.is_finite() || f_next > f_x + 1e-12 * (1.0 + f_x.abs()) {
            return Err(Error::Diagnostic(format!(
                "newton_cg: objective increased at iteration {k} ({f_x} -> {f_next}); \
                 CG solution quality collapsed"
            )));
        }
        x = x_next;
        f_x = f_next;
    }

    Err(Error::Diagnostic(format!(
        "newton_cg: no convergence within {} iterations; \
         β may underestimate cond(∇²f(x₀)) or f may not be κ-self-concordant",
        cfg.max_iters
    )))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::oracle::QuadraticOracle;
    use nalgebra::DMatrix;

    /// f(x) = Σ (q/2·x_i² + l·x_i − log x_i) on x > 0.
    pub(crate) struct LinLogBarrier {
        pub dim: usize,
        pub q: f64,
        pub l: f64,
    }

    impl Oracle for LinLogBarrier {
        fn dim(&self) -> usize {
            self.dim
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            if !self.in_domain(x) {
                return f64::INFINITY;
            }
            x.iter().map(|&t| 0.5 * self.q * t * t + self.l * t - t.ln()).sum()
        }
        fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
            DVector::from_fn(self.dim, |i, _| self.q * x[i] + self.l - 1.0 / x[i])
        }
        fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_fn(self.dim, self.dim, |i, j| {
                if i == j {
                    self.q + 1.0 / (x[i] * x[i])
                } else {
                    0.0
                }
            })
        }
        fn in_domain(&self, x: &DVector<f64>) -> bool {
            x.iter().all(|&t| t > 0.0 && t.is_finite())
        }
    }

    fn barrier(dim: usize) -> Arc<dyn Oracle> {
        // f = Σ(x_i − log x_i): minimizer at 1, 1-self-concordant.
        Arc::new(LinLogBarrier { dim, q: 0.0, l: 1.0 })
    }

    #[test]
    fn lambda_f_closed_forms() {
        let quad = QuadraticOracle {
            a: DMatrix::identity(3, 3),
            b: DVector::zeros(3),
            c: 0.0,
        };
        let x = DVector::from_column_slice(&[3.0, 0.0, 4.0]);
        assert!((lambda_f(&quad, &x).unwrap() - 5.0).abs() < 1e-12);

        let f = LinLogBarrier { dim: 2, q: 0.0, l: 1.0 };
        let x = DVector::from_element(2, 2.0);
        assert!((lambda_f(&f, &x).unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
        let x = DVector::from_element(2, 1.0);
        assert!(lambda_f(&f, &x).unwrap() < 1e-15);

        let indef = QuadraticOracle {
            a: DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1.0])),
            b: DVector::zeros(2),
            c: 0.0,
        };
        assert!(lambda_f(&indef, &DVector::from_element(2, 1.0)).is_err());
    }

    #[test]
    fn early_exit_at_stationary_start() {
        let f = barrier(3);
        let x0 = DVector::from_element(3, 1.0 + 1e-9);
        let cfg = NewtonCgConfig {
            kappa: 1.0,
            eps0: 1e-3,
            eps1: 1e-6,
            beta: 2.0,
            fail_prob: 1e-3,
            max_iters: 50,
            hvp_only: false,
        };
        let report = newton_cg_solve(f, &x0, &cfg).unwrap();
        assert_eq!(report.certificate, NewtonCgCertificate::EarlyExitAtX0);
        assert_eq!(report.y, x0);
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn two_phase_run_on_log_barrier() {
        let f = barrier(2);
        let x0 = DVector::from_element(2, 2.0);
        let cfg = NewtonCgConfig {
            kappa: 1.0,
            eps0: 1e-3,
            eps1: 1e-6,
            beta: 2.0,
            fail_prob: 1e-3,
            max_iters: 200,
            hvp_only: false,
        };
        let report = newton_cg_solve(f.clone(), &x0, &cfg).unwrap();
        assert_eq!(report.certificate, NewtonCgCertificate::Converged);
        assert!(lambda_f(f.as_ref(), &report.y).unwrap() <= 1e-6);
        // λ_f(x₀) = √2 is far above the ε₀ gate.
        assert!(lambda_f(f.as_ref(), &x0).unwrap() > 1.4);

        let consts = AppendixConstants::standard();
        // β_local frozen exactly once; local-phase contraction ρ_{k+1} ≤ C₂ρ_k.
        assert!(report.beta_local.is_some());
        let mut prev: Option<&NewtonCgIterate> = None;
        for it in &report.trace {
            if let Some(p) = prev {
                if !p.global_phase {
                    assert!(!it.global_phase, "phase went back to global");
                    assert!(
                        it.rho <= consts.c2 * p.rho + 1e-15,
                        "local contraction failed: {} -> {}",
                        p.rho,
                        it.rho
                    );
                }
            }
            prev = Some(it);
        }
        // Global-phase decrease floor κ⁻²ω(R₃).
        let floor = omega(consts.r3);
        for w in report.trace.windows(2) {
            if w[0].global_phase && w[0].t.is_some() {
                assert!(w[0].f - w[1].f >= floor - 1e-9);
            }
        }
    }

    #[test]
    fn hvp_only_mode_matches_assembled() {
        let x0 = DVector::from_element(2, 3.0);
        let mk_cfg = |hvp_only| NewtonCgConfig {
            kappa: 1.0,
            eps0: 1e-3,
            eps1: 1e-8,
            beta: 4.0,
            fail_prob: 1e-3,
            max_iters: 200,
            hvp_only,
        };
        let a = newton_cg_solve(barrier(2), &x0, &mk_cfg(false)).unwrap();
        let b = newton_cg_solve(barrier(2), &x0, &mk_cfg(true)).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert!((&a.y - &b.y).norm() < 1e-12);
    }

    #[test]
    fn kappa_zero_routes_to_direct_newton() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 5.0]));
        let f = Arc::new(QuadraticOracle {
            a,
            b: DVector::from_column_slice(&[-1.0, 0.0]),
            c: 0.0,
        });
        let cfg = NewtonCgConfig {
            kappa: 0.0,
            eps0: 1e-8,
            eps1: 1e-10,
            beta: 10.0,
            fail_prob: 1e-3,
            max_iters: 10,
            hvp_only: false,
        };
        let report = newton_cg_solve(f.clone(), &DVector::from_element(2, 4.0), &cfg).unwrap();
        assert_eq!(report.certificate, NewtonCgCertificate::Converged);
        // One exact Newton step lands on the minimizer (1, 0).
        assert!(report.iterations <= 3);
        assert!((report.y[0] - 1.0).abs() < 1e-10 && report.y[1].abs() < 1e-10);
    }

    #[test]
    fn budget_formula() {
        let c = AppendixConstants::standard();
        let cfg = NewtonCgConfig::with_gap_budget(1.0, 1e-3, 1e-6, 2.0, 1e-3, 1.0);
        let k1 = (1.0 / omega(c.r3)).floor() as usize;
        let k2 = (2.0 * (c.r2 / 1e-6).ln() / (1.0 / c.c2).ln()).floor() as usize;
        assert_eq!(cfg.max_iters, 2 + k1 + k2);
        assert!(cfg.max_iters > k2);
    }

    #[test]
    fn exhausted_budget_is_a_diagnostic() {
        let f = barrier(2);
        let cfg = NewtonCgConfig {
            kappa: 1.0,
            eps0: 1e-6,
            eps1: 1e-9,
            beta: 2.0,
            fail_prob: 1e-3,
            max_iters: 1,
            hvp_only: false,
        };
        let err = newton_cg_solve(f, &DVector::from_element(2, 50.0), &cfg);
        assert!(matches!(err, Err(Error::Diagnostic(_))));
    }
}
