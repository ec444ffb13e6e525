//! Adaptive regularization method: accept/reject steps scored against the
//! ω⋆-model of an F-based κ-self-concordant pair, with a multiplicatively
//! adapted σ. Four direction options are supported — caller-supplied descent
//! directions, preconditioned gradient, σ-regularized Newton, and negative
//! curvature descent — each with its own termination condition.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::numerics::{
    lanczos_extreme, solve_pd, EigenEstimate, ExtremeMode, HessianOperator, LanczosConfig,
};
use crate::oracle::{ReferencePair, StepQuantities};
use crate::report::{SolveReport, Status, TraceRecord};
use crate::scalar::{omega_star, scaled_omega, scaled_omega_star};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmOption {
    /// Caller-supplied d_j (must be descent for large σ).
    General,
    /// d_j = −H_j∇f with a positive definite preconditioner H_j.
    PrecondGd,
    /// d_j = −(∇²(f+σF))⁻¹∇f.
    Newton,
    /// Newton step unless ∇²f has eigenvalue below −σ√ε_H·∇²F[v,v], in which
    /// case d_j = ±v.
    #[serde(rename = "negcurv")]
    NegCurv,
}

/// Which endpoint of the published σ-update intervals to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaUpdatePolicy {
    /// max(σ_min, γ₁σ) / σ / γ₂σ — shrinks eagerly, grows as little as the
    /// rule allows.
    EndpointAggressive,
    /// σ / γ₂σ / γ₃σ — never shrinks below the incumbent σ.
    EndpointConservative,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmConfig {
    pub sigma0: f64,
    pub sigma_min: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub kappa: f64,
    /// κ_F of the reference; required for the negcurv option.
    pub kappa_ref: Option<f64>,
    /// First-order tolerance ε.
    pub eps: f64,
    /// Gradient tolerance ε_g (negcurv option).
    pub eps_g: f64,
    /// Curvature tolerance ε_H (negcurv option).
    pub eps_h: f64,
    pub option: ArmOption,
    pub max_iters: usize,
    pub sigma_update_policy: SigmaUpdatePolicy,
}

impl Default for ArmConfig {
    /// The shipped hyperparameters: σ₀ = 1, η₁ = 0.01, η₂ = 0.9, γ₁ = 0.5,
    /// γ₂ = γ₃ = 2, κ = 1, aggressive endpoints.
    fn default() -> Self {
        Self {
            sigma0: 1.0,
            sigma_min: 1e-8,
            eta1: 0.01,
            eta2: 0.9,
            gamma1: 0.5,
            gamma2: 2.0,
            gamma3: 2.0,
            kappa: 1.0,
            kappa_ref: None,
            eps: 1e-8,
            eps_g: 1e-6,
            eps_h: 1e-4,
            option: ArmOption::Newton,
            max_iters: 500,
            sigma_update_policy: SigmaUpdatePolicy::EndpointAggressive,
        }
    }
}

impl ArmConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma_min > 0.0
            && self.sigma_min <= self.sigma0
            && self.eta1 > 0.0
            && self.eta1 <= self.eta2
            && self.eta2 < 1.0
            && self.gamma1 > 0.0
            && self.gamma1 < 1.0
            && self.gamma2 > 1.0
            && self.gamma2 <= self.gamma3
            && self.kappa >= 0.0
            && self.eps >= 0.0
            && self.eps_g >= 0.0
            && self.eps_h >= 0.0
            && self.max_iters > 0;
        if !ok {
            return Err(Error::InvalidConfig(
                "arm: need 0 < σ_min ≤ σ₀, 0 < η₁ ≤ η₂ < 1, 0 < γ₁ < 1 < γ₂ ≤ γ₃, \
                 nonnegative tolerances, max_iters ≥ 1"
                    .into(),
            ));
        }
        if self.option == ArmOption::NegCurv && self.kappa_ref.is_none() {
            return Err(Error::InvalidConfig("arm: negcurv option requires kappa_ref".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionKind {
    NewtonLike,
    NegCurvature,
    Preconditioned,
}

/// A proposed direction with its scalar step data. `quantities.delta_ref`
/// carries σ_j·Δ_j, so `quantities.curvature()` is the model curvature
/// δ_j + σ_jΔ_j used everywhere below.
#[derive(Debug, Clone)]
pub struct DirectionOutcome {
    pub d: DVector<f64>,
    pub quantities: StepQuantities,
    pub kind: DirectionKind,
    pub lambda_min_est: Option<EigenEstimate>,
    /// The σ-scaled system was not positive definite; the loop must score
    /// this iteration as a failure and raise σ.
    pub rejected: bool,
}

/// External rule supplying directions (option = general) or preconditioners
/// (option = precond_gd).
pub trait DirectionProvider: Send + Sync {
    /// d_j for option = general.
    fn direction(
        &self,
        pair: &ReferencePair,
        x: &DVector<f64>,
        sigma: f64,
        iter: usize,
    ) -> DVector<f64>;

    /// Positive definite H_j for option = precond_gd; identity by default,
    /// which makes the option plain gradient descent.
    fn preconditioner(&self, pair: &ReferencePair, _x: &DVector<f64>, _iter: usize) -> DMatrix<f64> {
        DMatrix::identity(pair.dim(), pair.dim())
    }

    /// The σ̄ above which the supplied directions are guaranteed descent;
    /// reporting-only.
    fn sigma_bar(&self) -> Option<f64> {
        None
    }
}

/// m_j(t) for the first-option model:
///
/// ```text
///   f(x) − ρt + κ⁻²ω⋆(κt√curv)   if curv ≥ 0,
///   0                            if curv < 0 and t = 0,
///   +∞                           otherwise,
/// ```
///
/// with curv = δ_j + σ_jΔ_j. At κ = 0 the ω⋆ term reads as 0 and the model
/// is linear; the loop never minimizes it in that regime (the step formula
/// caps t at ρ/curv).
pub fn model_value(rho: f64, curv: f64, kappa: f64, t: f64, f_x: f64) -> f64 {
    assert!(t >= 0.0, "model_value: t must be nonnegative");
    if curv >= 0.0 {
        let bending = if kappa == 0.0 {
            0.0
        } else {
            omega_star(kappa * t * curv.sqrt()) / (kappa * kappa)
        };
        f_x - rho * t + bending
    } else if t == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Minimizer t_j = ρ/(curv + κρ√curv) of the first-option model. curv = 0
/// with ρ > 0 leaves the model unbounded; +∞ signals the caller to reject
/// and raise σ.
pub fn step_first_option(rho: f64, curv: f64, kappa: f64) -> f64 {
    assert!(rho >= 0.0 && curv >= 0.0, "step_first_option: need ρ ≥ 0, curv ≥ 0");
    if rho == 0.0 {
        return 0.0;
    }
    if curv == 0.0 {
        return f64::INFINITY;
    }
    rho / (curv + kappa * rho * curv.sqrt())
}

/// Minimizer of the curvature-branch model
/// f(x) − κ_F⁻²ω(κ_F t√(σΔ)) + κ⁻²ω⋆(κt√(δ+σΔ)) for δ < 0 < δ + σΔ:
///
/// ```text
///   t_j = −δ / (√(σΔ)·√(δ+σΔ)·(κ_F√(δ+σΔ) + κ√(σΔ))).
/// ```
pub fn step_negcurv(delta: f64, sig_delta_ref: f64, kappa: f64, kappa_ref: f64) -> f64 {
    assert!(
        delta < 0.0 && sig_delta_ref > 0.0 && delta + sig_delta_ref > 0.0,
        "step_negcurv: need δ < 0 and δ + σΔ > 0"
    );
    let curv = delta + sig_delta_ref;
    let sd = sig_delta_ref.sqrt();
    let sc = curv.sqrt();
    -delta / (sd * sc * (kappa_ref * sc + kappa * sd))
}

/// Curvature-branch model value (see [`step_negcurv`]).
pub fn model_value_negcurv(
    f_x: f64,
    delta: f64,
    sig_delta_ref: f64,
    kappa: f64,
    kappa_ref: f64,
    t: f64,
) -> f64 {
    assert!(t >= 0.0);
    let curv = delta + sig_delta_ref;
    if curv < 0.0 {
        return if t == 0.0 { 0.0 } else { f64::INFINITY };
    }
    f_x - scaled_omega(kappa_ref, t * sig_delta_ref.sqrt())
        + scaled_omega_star(kappa, t * curv.sqrt())
}

fn quantities_along(
    pair: &ReferencePair,
    x: &DVector<f64>,
    g: &DVector<f64>,
    d: &DVector<f64>,
    sigma: f64,
    kappa: f64,
) -> StepQuantities {
    let rho = -g.dot(d);
    let delta = d.dot(&pair.objective.hvp(x, d));
    let delta_ref = sigma * d.dot(&pair.reference.hvp(x, d));
    StepQuantities::compute(rho, delta, delta_ref, kappa)
}

/// σ-regularized Newton direction. An indefinite system is not an error:
/// the outcome comes back `rejected` and the loop raises σ.
pub fn direction_newton(
    pair: &ReferencePair,
    x: &DVector<f64>,
    sigma: f64,
    kappa: f64,
) -> Result<DirectionOutcome> {
    let g = pair.objective.gradient(x);
    let h = pair.sum_hessian(x, sigma);
    let solved = solve_pd(&h, &g)?;
    if !solved.success {
        return Ok(DirectionOutcome {
            d: DVector::zeros(x.len()),
            quantities: StepQuantities {
                rho: 0.0,
                delta: solved.smallest_pivot,
                delta_ref: 0.0,
                eta: f64::INFINITY,
                t_bar: f64::INFINITY,
            },
            kind: DirectionKind::NewtonLike,
            lambda_min_est: None,
            rejected: true,
        });
    }
    let d = -solved.solution.unwrap();
    let quantities = quantities_along(pair, x, &g, &d, sigma, kappa);
    Ok(DirectionOutcome {
        d,
        quantities,
        kind: DirectionKind::NewtonLike,
        lambda_min_est: None,
        rejected: false,
    })
}

/// Negative-curvature rule: estimate (λ_min(∇²f), v) by Lanczos; if
/// λ̂ < −λ_nc with λ_nc = σ√ε_H·∇²F[v,v], step along ±v (sign making it a
/// descent direction), otherwise take the Newton direction. A Lanczos run
/// that misses its residual target falls back to the Newton branch, with
/// the unconverged estimate still recorded.
pub fn direction_negcurv(
    pair: &ReferencePair,
    x: &DVector<f64>,
    sigma: f64,
    kappa: f64,
    eps_h: f64,
    eig_cfg: &LanczosConfig,
) -> Result<DirectionOutcome> {
    let hess_op = HessianOperator { oracle: pair.objective.as_ref(), x };
    let est = lanczos_extreme(&hess_op, ExtremeMode::Smallest, eig_cfg)?;
    let delta_ref_v = est.vector.dot(&pair.reference.hvp(x, &est.vector));
    let lambda_nc = sigma * eps_h.sqrt() * delta_ref_v;
    if est.converged && est.value < -lambda_nc {
        let g = pair.objective.gradient(x);
        let d = if g.dot(&est.vector) <= 0.0 { est.vector.clone() } else { -est.vector.clone() };
        let rho = -g.dot(&d);
        // δ is the Rayleigh quotient of the vector actually stepped along,
        // which is what the curvature model needs.
        let quantities = StepQuantities::compute(rho, est.value, sigma * delta_ref_v, kappa);
        return Ok(DirectionOutcome {
            d,
            quantities,
            kind: DirectionKind::NegCurvature,
            lambda_min_est: Some(est),
            rejected: false,
        });
    }
    let mut out = direction_newton(pair, x, sigma, kappa)?;
    out.lambda_min_est = Some(est);
    Ok(out)
}

fn direction_precond(
    pair: &ReferencePair,
    x: &DVector<f64>,
    sigma: f64,
    kappa: f64,
    precond: &DMatrix<f64>,
) -> DirectionOutcome {
    let g = pair.objective.gradient(x);
    let d = -(precond * &g);
    let quantities = quantities_along(pair, x, &g, &d, sigma, kappa);
    DirectionOutcome {
        d,
        quantities,
        kind: DirectionKind::Preconditioned,
        lambda_min_est: None,
        rejected: false,
    }
}

/// Outcome of one scored iteration, before the σ update.
enum Scored {
    /// (trial point, trial value, ratio, step, model decrease)
    Trial(DVector<f64>, f64, f64, f64),
    /// Rejection without a usable trial (ascent, unbounded or negative-curv
    /// model, infeasible point, indefinite system).
    Failure,
    /// Model decrease at working precision: nothing left to measure.
    Stall,
}

fn score_iteration(
    pair: &ReferencePair,
    x: &DVector<f64>,
    f_x: f64,
    outcome: &DirectionOutcome,
    cfg: &ArmConfig,
) -> (Scored, f64) {
    if outcome.rejected {
        return (Scored::Failure, 0.0);
    }
    let q = &outcome.quantities;
    if q.rho < 0.0 {
        // ∇fᵀd > 0: t_j = 0, no decrease to score.
        return (Scored::Failure, 0.0);
    }
    // The model decrease f(x_j) − m_j(t_j) is evaluated in closed form, not
    // by subtracting two O(f) numbers: near termination it is ~ε²/2 and the
    // subtraction would round to zero, turning clean convergence into a
    // spurious failure cascade.
    let curv = q.curvature();
    let (t, decrease) = match outcome.kind {
        DirectionKind::NegCurvature => {
            if curv <= 0.0 || q.delta_ref <= 0.0 {
                return (Scored::Failure, 0.0);
            }
            let kappa_ref = cfg.kappa_ref.expect("negcurv requires kappa_ref");
            let t = step_negcurv(q.delta, q.delta_ref, cfg.kappa, kappa_ref);
            let decrease = scaled_omega(kappa_ref, t * q.delta_ref.sqrt())
                - scaled_omega_star(cfg.kappa, t * curv.sqrt());
            (t, decrease)
        }
        _ => {
            if curv < 0.0 {
                return (Scored::Failure, 0.0);
            }
            let t = step_first_option(q.rho, curv, cfg.kappa);
            if !t.is_finite() {
                return (Scored::Failure, 0.0);
            }
            // At the minimizer, −ρt + κ⁻²ω⋆(κt√curv) = −κ⁻²ω(κη) by
            // conjugacy; the κ = 0 model is linear with decrease ρt.
            let decrease =
                if cfg.kappa == 0.0 { q.rho * t } else { scaled_omega(cfg.kappa, q.eta) };
            (t, decrease)
        }
    };
    if !decrease.is_finite() || decrease < 0.0 {
        return (Scored::Failure, t);
    }
    if decrease <= 1e-15 * (1.0 + f_x.abs()) {
        return (Scored::Stall, t);
    }
    let y = x + &outcome.d * t;
    if !pair.in_domain(&y) {
        return (Scored::Failure, t);
    }
    let f_y = pair.objective.value(&y);
    if !f_y.is_finite() {
        return (Scored::Failure, t);
    }
    let ratio = (f_x - f_y) / decrease;
    (Scored::Trial(y, f_y, ratio, t), decrease)
}

fn next_sigma(cfg: &ArmConfig, sigma: f64, ratio: f64) -> f64 {
    match cfg.sigma_update_policy {
        SigmaUpdatePolicy::EndpointAggressive => {
            if ratio >= cfg.eta2 {
                (cfg.gamma1 * sigma).max(cfg.sigma_min)
            } else if ratio > cfg.eta1 {
                sigma
            } else {
                cfg.gamma2 * sigma
            }
        }
        SigmaUpdatePolicy::EndpointConservative => {
            if ratio >= cfg.eta2 {
                sigma
            } else if ratio > cfg.eta1 {
                cfg.gamma2 * sigma
            } else {
                cfg.gamma3 * sigma
            }
        }
    }
}

pub fn arm_solve(
    pair: &ReferencePair,
    x0: &DVector<f64>,
    cfg: &ArmConfig,
    provider: Option<&dyn DirectionProvider>,
) -> Result<SolveReport> {
    cfg.validate()?;
    if x0.len() != pair.dim() {
        return Err(Error::DimensionMismatch("arm_solve: x0 has wrong dimension".into()));
    }
    if !pair.in_domain(x0) {
        return Err(Error::DomainViolation("arm_solve: x0 outside the domain".into()));
    }
    if cfg.option == ArmOption::General && provider.is_none() {
        return Err(Error::InvalidConfig(
            "arm_solve: option=general needs a direction provider".into(),
        ));
    }

    let started = Instant::now();
    let (counted, obj_counters, ref_counters) = pair.counted();
    let mut x = x0.clone();
    let mut f_x = counted.objective.value(&x);
    let mut sigma = cfg.sigma0;
    let mut best_f = f_x;
    let mut min_nu = f64::INFINITY;
    let mut final_nu = None;
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut status = Status::MaxIters;

    for iter in 0..cfg.max_iters {
        let outcome = match cfg.option {
            ArmOption::Newton => direction_newton(&counted, &x, sigma, cfg.kappa)?,
            ArmOption::NegCurv => {
                let eig_cfg = LanczosConfig {
                    rel_tol: 1e-2,
                    fail_prob: 1e-6,
                    max_iters: counted.dim(),
                    seed: 0x5eed ^ (iter as u64),
                    beta_bound: None,
                };
                direction_negcurv(&counted, &x, sigma, cfg.kappa, cfg.eps_h, &eig_cfg)?
            }
            ArmOption::PrecondGd => {
                let h = match provider {
                    Some(p) => p.preconditioner(&counted, &x, iter),
                    None => DMatrix::identity(counted.dim(), counted.dim()),
                };
                direction_precond(&counted, &x, sigma, cfg.kappa, &h)
            }
            ArmOption::General => {
                let d = provider.unwrap().direction(&counted, &x, sigma, iter);
                let g = counted.objective.gradient(&x);
                let quantities = {
                    let rho = -g.dot(&d);
                    let delta = d.dot(&counted.objective.hvp(&x, &d));
                    let delta_ref = sigma * d.dot(&counted.reference.hvp(&x, &d));
                    StepQuantities::compute(rho, delta, delta_ref, cfg.kappa)
                };
                DirectionOutcome {
                    d,
                    quantities,
                    kind: DirectionKind::NewtonLike,
                    lambda_min_est: None,
                    rejected: false,
                }
            }
        };

        let q = &outcome.quantities;
        let nu_now = if !outcome.rejected && q.rho >= 0.0 && q.eta.is_finite() {
            Some(q.eta)
        } else {
            None
        };
        if let Some(nu) = nu_now {
            min_nu = min_nu.min(nu);
            final_nu = Some(nu);
        }

        // Termination test on the pre-trial quantities; the incumbent x_j is
        // returned, never the trial.
        let terminate = if outcome.rejected {
            false
        } else {
            match cfg.option {
                ArmOption::Newton => q.eta <= cfg.eps && q.rho >= 0.0,
                ArmOption::General => q.rho >= 0.0 && q.eta <= cfg.eps,
                ArmOption::PrecondGd => q.rho >= 0.0 && q.rho.sqrt() <= cfg.eps,
                ArmOption::NegCurv => {
                    outcome.kind == DirectionKind::NewtonLike && q.rho >= 0.0 && q.eta <= cfg.eps_g
                }
            }
        };
        if terminate {
            trace.push(TraceRecord {
                iter,
                f: f_x,
                nu: nu_now,
                sigma: Some(sigma),
                ratio: None,
                accepted: None,
                lambda_min_est: outcome.lambda_min_est.as_ref().map(|e| e.value),
                step: None,
                oracle_calls: obj_counters.snapshot(),
                wall_nanos: started.elapsed().as_nanos() as u64,
            });
            status = Status::Converged;
            break;
        }

        let f_at_iterate = f_x;
        let (scored, _decrease) = score_iteration(&counted, &x, f_x, &outcome, cfg);
        let (ratio, accepted, step_len) = match scored {
            Scored::Trial(y, f_y, ratio, t) => {
                let accepted = ratio >= cfg.eta1;
                if accepted {
                    x = y;
                    f_x = f_y;
                    best_f = best_f.min(f_x);
                }
                (ratio, accepted, Some(t))
            }
            Scored::Failure => (f64::NEG_INFINITY, false, Some(0.0)),
            Scored::Stall => {
                trace.push(TraceRecord {
                    iter,
                    f: f_x,
                    nu: nu_now,
                    sigma: Some(sigma),
                    ratio: None,
                    accepted: None,
                    lambda_min_est: outcome.lambda_min_est.as_ref().map(|e| e.value),
                    step: None,
                    oracle_calls: obj_counters.snapshot(),
                    wall_nanos: started.elapsed().as_nanos() as u64,
                });
                status = Status::Stalled;
                break;
            }
        };
        trace.push(TraceRecord {
            iter,
            f: f_at_iterate,
            nu: nu_now,
            sigma: Some(sigma),
            ratio: Some(ratio),
            accepted: Some(accepted),
            lambda_min_est: outcome.lambda_min_est.as_ref().map(|e| e.value),
            step: step_len,
            oracle_calls: obj_counters.snapshot(),
            wall_nanos: started.elapsed().as_nanos() as u64,
        });
        sigma = next_sigma(cfg, sigma, ratio);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{Oracle, QuadraticOracle, ScaledNormSquared};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn quad_pair(a: DMatrix<f64>, b: DVector<f64>, kappa: f64) -> ReferencePair {
        let n = b.len();
        let f = Arc::new(QuadraticOracle { a, b, c: 0.0 });
        let reference = Arc::new(ScaledNormSquared { dim: n, weight: 1.0 });
        ReferencePair::new(f, reference, kappa)
    }

    #[test]
    fn model_value_branches() {
        assert!((model_value(1.0, 1.0, 0.0, 0.5, 10.0) - 9.5).abs() < 1e-15);
        assert_eq!(model_value(3.0, -1.0, 1.0, 0.0, 42.0), 0.0);
        assert_eq!(model_value(3.0, -1.0, 1.0, 0.1, 42.0), f64::INFINITY);
        let m = model_value(1.0, 1.0, 1.0, 0.5, 0.0);
        assert!((m - (-0.5 + omega_star(0.5))).abs() < 1e-15);
        assert!((m + 0.306_852_819_440_054_7).abs() < 1e-9);
    }

    #[test]
    fn step_first_option_examples() {
        assert!((step_first_option(1.0, 1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((step_first_option(1.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(step_first_option(0.0, 5.0, 1.0), 0.0);
        assert_eq!(step_first_option(1.0, 0.0, 1.0), f64::INFINITY);
    }

    #[test]
    fn step_negcurv_closed_form() {
        let t = step_negcurv(-1.0, 2.0, 1.0, 1.0);
        assert!((t - 1.0 / (2.0 + 2.0f64.sqrt())).abs() < 1e-12, "got {t}");
        // t → 0 as δ → 0⁻.
        assert!(step_negcurv(-1e-9, 2.0, 1.0, 1.0) < 1e-8);
        // Strict model decrease at the optimal step.
        let m_t = model_value_negcurv(5.0, -1.0, 2.0, 1.0, 1.0, t);
        assert!(m_t < 5.0);
    }

    #[test]
    fn newton_direction_on_quadratic() {
        // f = ½xᵀx, F = ½‖x‖², σ = 1, κ = 0, x = (2,0): H = 2I, d = (−1,0),
        // t = 1.
        let pair = quad_pair(DMatrix::identity(2, 2), DVector::zeros(2), 0.0);
        let x = DVector::from_column_slice(&[2.0, 0.0]);
        let out = direction_newton(&pair, &x, 1.0, 0.0).unwrap();
        assert!(!out.rejected);
        assert!((out.d[0] + 1.0).abs() < 1e-12 && out.d[1].abs() < 1e-14);
        assert!((out.quantities.rho - 2.0).abs() < 1e-12);
        let t = step_first_option(out.quantities.rho, out.quantities.curvature(), 0.0);
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn newton_nu_nonincreasing_in_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = DMatrix::from_fn(5, 5, |_, _| rng.random::<f64>() - 0.5);
        let a = &m * m.transpose() + DMatrix::identity(5, 5);
        let b = DVector::from_fn(5, |i, _| (i as f64).cos());
        let pair = quad_pair(a, b, 1.0);
        let x = DVector::from_element(5, 0.3);
        let nu_at = |sigma: f64| {
            direction_newton(&pair, &x, sigma, 1.0).unwrap().quantities.eta
        };
        let (nu1, nu2) = (nu_at(1.0), nu_at(2.0));
        assert!(nu2 <= nu1 + 1e-12, "ν grew with σ: {nu1} -> {nu2}");
    }

    #[test]
    fn newton_indefinite_comes_back_rejected() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, -6.0]));
        let pair = quad_pair(a, DVector::zeros(2), 1.0);
        let out = direction_newton(&pair, &DVector::from_element(2, 1.0), 1.0, 1.0).unwrap();
        assert!(out.rejected);
        assert!(out.quantities.eta.is_infinite());
    }

    #[test]
    fn negcurv_branches_at_a_saddle_hessian() {
        // ∇²f = diag(2,−2) at x = 0 with F = ½‖x‖²: λ_min = −2 below
        // −λ_nc = −σ√ε_H·1 = −0.1, so the curvature branch fires with d = ±e₂.
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, -2.0]));
        let pair = quad_pair(a, DVector::zeros(2), 1.0);
        let eig_cfg = LanczosConfig {
            rel_tol: 1e-2,
            fail_prob: 1e-6,
            max_iters: 2,
            seed: 3,
            beta_bound: None,
        };
        let out =
            direction_negcurv(&pair, &DVector::zeros(2), 1.0, 1.0, 0.01, &eig_cfg).unwrap();
        assert_eq!(out.kind, DirectionKind::NegCurvature);
        assert!((out.quantities.delta + 2.0).abs() < 1e-9);
        assert!(out.d[0].abs() < 1e-6 && (out.d[1].abs() - 1.0).abs() < 1e-9);
        assert!((out.d.norm() - 1.0).abs() < 1e-12);

        // Positive definite Hessian → Newton branch, estimate still carried.
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, 1.0]));
        let pair = quad_pair(a, DVector::from_column_slice(&[1.0, 0.0]), 1.0);
        let out =
            direction_negcurv(&pair, &DVector::zeros(2), 1.0, 1.0, 0.01, &eig_cfg).unwrap();
        assert_eq!(out.kind, DirectionKind::NewtonLike);
        assert!(out.lambda_min_est.is_some());
    }

    #[test]
    fn negcurv_sign_rule_gives_descent() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, -2.0]));
        // Gradient with positive second component: whatever sign Lanczos
        // returns for v ≈ ±e₂, d must satisfy ∇fᵀd ≤ 0.
        let b = DVector::from_column_slice(&[0.0, 3.0]);
        let pair = quad_pair(a, b, 1.0);
        let eig_cfg = LanczosConfig {
            rel_tol: 1e-2,
            fail_prob: 1e-6,
            max_iters: 2,
            seed: 11,
            beta_bound: None,
        };
        let out =
            direction_negcurv(&pair, &DVector::zeros(2), 1.0, 1.0, 0.01, &eig_cfg).unwrap();
        assert_eq!(out.kind, DirectionKind::NegCurvature);
        assert!(out.quantities.rho >= 0.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ArmConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.eta1 = 0.0;
        assert!(cfg.validate().is_err());
        cfg = ArmConfig { option: ArmOption::NegCurv, kappa_ref: None, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.kappa_ref = Some(1.0);
        assert!(cfg.validate().is_ok());
        cfg = ArmConfig { sigma_min: 2.0, sigma0: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn solve_newton_on_strongly_convex_quadratic() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 4.0, 9.0]));
        let pair = quad_pair(a, DVector::from_column_slice(&[1.0, -2.0, 0.5]), 1.0);
        let cfg = ArmConfig { eps: 1e-7, max_iters: 200, ..Default::default() };
        let report = arm_solve(&pair, &DVector::from_element(3, 2.0), &cfg, None).unwrap();
        assert_eq!(report.status, Status::Converged);
        assert!(report.final_nu.unwrap() <= 1e-7);
        // Monotone objective along the trace, ratio consistency on accepts,
        // σ within the published cap.
        let mut prev = f64::INFINITY;
        for rec in &report.trace {
            assert!(rec.f <= prev + 1e-12);
            prev = rec.f;
            if rec.accepted == Some(true) {
                assert!(rec.ratio.unwrap() >= cfg.eta1);
            }
            let sigma = rec.sigma.unwrap();
            assert!(sigma <= cfg.sigma0.max(cfg.gamma3) * (1.0 + 1e-12));
            assert!(sigma >= cfg.sigma_min);
        }
        let g = pair.objective.gradient(&report.final_point);
        assert!(g.norm() < 1e-6);
    }

    /// dom = (0, ∞), f = x: the model pushes left and the first trials land
    /// outside the domain.
    struct HalfLine;
    impl Oracle for HalfLine {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            if x[0] > 0.0 {
                x[0]
            } else {
                f64::INFINITY
            }
        }
        fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
            DVector::from_element(1, 1.0)
        }
        fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::zeros(1, 1)
        }
        fn in_domain(&self, x: &DVector<f64>) -> bool {
            x[0] > 0.0
        }
    }

    struct SteepestDescent;
    impl DirectionProvider for SteepestDescent {
        fn direction(
            &self,
            _pair: &ReferencePair,
            _x: &DVector<f64>,
            _sigma: f64,
            _iter: usize,
        ) -> DVector<f64> {
            DVector::from_element(1, -1.0)
        }
    }

    #[test]
    fn infeasible_trials_reject_and_raise_sigma() {
        let pair = ReferencePair::new(
            Arc::new(HalfLine),
            Arc::new(ScaledNormSquared { dim: 1, weight: 1.0 }),
            1.0,
        );
        let cfg = ArmConfig {
            option: ArmOption::General,
            eps: 1e-12,
            max_iters: 30,
            ..Default::default()
        };
        let report =
            arm_solve(&pair, &DVector::from_element(1, 0.25), &cfg, Some(&SteepestDescent))
                .unwrap();
        // With σ₀ = 1 the optimal step 1/(1+1) = 0.5 exits the domain: the
        // first iterations must reject in place and double σ.
        let first = &report.trace[0];
        assert_eq!(first.accepted, Some(false));
        assert_eq!(first.ratio, Some(f64::NEG_INFINITY));
        assert_eq!(report.trace[1].sigma, Some(cfg.gamma2 * cfg.sigma0));
        // Eventually σ is large enough to keep trials feasible.
        assert!(report.trace.iter().any(|r| r.accepted == Some(true)));
        assert!(report.final_point[0] > 0.0);
    }

    #[test]
    fn precond_gd_defaults_to_gradient_descent() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 4.0]));
        let pair = quad_pair(a, DVector::zeros(2), 0.0);
        let cfg = ArmConfig {
            option: ArmOption::PrecondGd,
            kappa: 0.0,
            eps: 1e-7,
            max_iters: 400,
            ..Default::default()
        };
        let report = arm_solve(&pair, &DVector::from_element(2, 1.5), &cfg, None).unwrap();
        assert_eq!(report.status, Status::Converged);
        // Termination is on √(∇fᵀH∇f) = ‖∇f‖ for the identity preconditioner.
        let g = pair.objective.gradient(&report.final_point);
        assert!(g.norm() <= 1e-7 * (1.0 + 1e-9));
    }

    #[test]
    fn newton_from_exact_saddle_stays_put() {
        // f = x₁² − x₂² + x₂⁴ has ∇f(0) = 0: the Newton option terminates at
        // the saddle itself once σ makes the system positive definite.
        struct Saddle;
        impl Oracle for Saddle {
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
        }
        let pair = ReferencePair {
            objective: Arc::new(Saddle),
            reference: Arc::new(ScaledNormSquared { dim: 2, weight: 1.0 }),
            kappa: 1.0,
            kappa_ref: Some(0.0),
            lower_bound_hint: None,
            sampler: None,
        };
        let newton_cfg = ArmConfig { eps: 1e-10, max_iters: 50, ..Default::default() };
        let report = arm_solve(&pair, &DVector::zeros(2), &newton_cfg, None).unwrap();
        assert_eq!(report.status, Status::Converged);
        assert_eq!(report.final_point, DVector::zeros(2));

        let negcurv_cfg = ArmConfig {
            option: ArmOption::NegCurv,
            kappa_ref: Some(0.0),
            eps_g: 1e-8,
            eps_h: 1e-4,
            max_iters: 200,
            ..Default::default()
        };
        let report = arm_solve(&pair, &DVector::zeros(2), &negcurv_cfg, None).unwrap();
        assert_eq!(report.status, Status::Converged);
        let f_final = pair.objective.value(&report.final_point);
        assert!(f_final < 0.0, "negcurv failed to escape: f = {f_final}");
    }
}
