//! Regularized Newton method for a pair (f, F): the full-Hessian baseline
//! solver. Each step solves (∇²f + ∇²F)d = −∇f, measures ν = √(−∇fᵀd), and
//! damps by t = 1/(1+κν), which guarantees f decreases by at least κ⁻²ω(κν).

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::numerics::solve_pd;
use crate::oracle::ReferencePair;
use crate::report::{SolveReport, Status, TraceRecord};
use crate::scalar::gamma_f;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RnmConfig {
    /// Stop once ν ≤ tol.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for RnmConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iters: 500 }
    }
}

/// One regularized Newton step at x.
#[derive(Debug, Clone)]
pub struct RnmStep {
    pub direction: DVector<f64>,
    /// ν = √(∇fᵀ(∇²f+∇²F)⁻¹∇f).
    pub nu: f64,
    /// Damping t = 1/(1+κν).
    pub step_size: f64,
    pub next: DVector<f64>,
}

pub fn rnm_step(pair: &ReferencePair, x: &DVector<f64>) -> Result<RnmStep> {
    if x.len() != pair.dim() {
        return Err(Error::DimensionMismatch("rnm_step: point has wrong dimension".into()));
    }
    let g = pair.objective.gradient(x);
    let h = pair.sum_hessian(x, 1.0);
    let solved = solve_pd(&h, &g)?;
    if !solved.success {
        return Err(Error::AssumptionViolation(format!(
            "rnm_step: combined Hessian is not positive definite (pivot {})",
            solved.smallest_pivot
        )));
    }
    let hinv_g = solved.solution.unwrap();
    let direction = -&hinv_g;
    let nu = g.dot(&hinv_g).max(0.0).sqrt();
    let step_size = 1.0 / (1.0 + pair.kappa * nu);
    let next = x + &direction * step_size;
    Ok(RnmStep { direction, nu, step_size, next })
}

/// Bound on min_{j≤k} ν_j from a gap bound Δ ≥ f(x₀) − inf f:
/// √(2(1+Γ_f(Δ,κ))Δ/(k+1)).
pub fn rnm_prefix_bound(gap: f64, kappa: f64, k: usize) -> f64 {
    let gamma = gamma_f(gap, kappa);
    (2.0 * (1.0 + gamma) * gap / ((k + 1) as f64)).sqrt()
}

pub fn rnm_solve(pair: &ReferencePair, x0: &DVector<f64>, cfg: &RnmConfig) -> Result<SolveReport> {
    if x0.len() != pair.dim() {
        return Err(Error::DimensionMismatch("rnm_solve: x0 has wrong dimension".into()));
    }
    if !pair.in_domain(x0) {
        return Err(Error::DomainViolation("rnm_solve: x0 outside the domain".into()));
    }
    assert!(cfg.tol > 0.0 && cfg.max_iters > 0, "rnm_solve: bad config");

    let started = Instant::now();
    let (counted, obj_counters, ref_counters) = pair.counted();
    let mut x = x0.clone();
    let mut f = counted.objective.value(&x);
    let mut best_f = f;
    let mut min_nu = f64::INFINITY;
    let mut trace = Vec::new();
    let mut status = Status::MaxIters;
    let mut final_nu = None;
    let mut stalls = 0usize;

    for iter in 0..cfg.max_iters {
        let step = match rnm_step(&counted, &x) {
            Ok(s) => s,
            Err(Error::AssumptionViolation(_)) => {
                status = Status::AssumptionViolation;
                break;
            }
            Err(e) => return Err(e),
        };
        min_nu = min_nu.min(step.nu);
        final_nu = Some(step.nu);
        let converged = step.nu <= cfg.tol;
        trace.push(TraceRecord {
            iter,
            f,
            nu: Some(step.nu),
            sigma: None,
            ratio: None,
            // The damped step is unconditional: every non-terminal
            // iteration accepts exactly one step.
            accepted: if converged { None } else { Some(true) },
            lambda_min_est: None,
            step: if converged { None } else { Some(step.step_size) },
            oracle_calls: obj_counters.snapshot(),
            wall_nanos: started.elapsed().as_nanos() as u64,
        });
        if converged {
            status = Status::Converged;
            break;
        }
        if !counted.in_domain(&step.next) {
            status = Status::DomainRejection;
            break;
        }
        let f_next = counted.objective.value(&step.next);
        if !f_next.is_finite() {
            status = Status::DomainRejection;
            break;
        }
        if f_next >= f - 1e-15 * (1.0 + f.abs()) {
            // The damped step has a guaranteed decrease; repeated failure to
            // realize it means arithmetic has bottomed out.
            stalls += 1;
            if stalls >= 5 {
                status = Status::Stalled;
                break;
            }
        } else {
            stalls = 0;
        }
        x = step.next;
        f = f_next;
        best_f = best_f.min(f);
    }

    Ok(SolveReport {
        status,
        final_point: x,
        final_nu,
        best_f,
        min_nu,
        iterations: trace.len(),
        trace,
        oracle_calls: obj_counters.snapshot(),
        reference_calls: ref_counters.snapshot(),
        wall_nanos: started.elapsed().as_nanos() as u64,
    })
}
