//! Dense symmetric linear algebra used by the solvers: a pivot-reporting
//! LLᵀ solve, a Lanczos extreme-eigenvalue estimator with full
//! reorthogonalization, the √cond estimator built from two Lanczos calls,
//! and conjugate gradients run for an a-priori fixed iteration count.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::oracle::{random_unit_direction, Oracle};
use crate::{Error, Result};

/// Abstract symmetric operator (dense matrix or Hessian-vector products).
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &DVector<f64>) -> DVector<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self * v
    }
}

/// Hessian of `oracle` at `x` as an operator (counts HVP calls on the
/// oracle's own counters when wrapped).
pub struct HessianOperator<'a> {
    pub oracle: &'a dyn Oracle,
    pub x: &'a DVector<f64>,
}

impl LinearOperator for HessianOperator<'_> {
    fn dim(&self) -> usize {
        self.oracle.dim()
    }
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.oracle.hvp(self.x, v)
    }
}

/// shift·I − A (the smallest-eigenvalue reduction).
struct ShiftNegate<'a> {
    op: &'a dyn LinearOperator,
    shift: f64,
}

impl LinearOperator for ShiftNegate<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        v * self.shift - self.op.apply(v)
    }
}

/// Outcome of [`solve_pd`].
#[derive(Debug, Clone)]
pub struct PdSolveResult {
    /// Present iff the factorization succeeded.
    pub solution: Option<DVector<f64>>,
    pub success: bool,
    /// Smallest pivot seen; on failure, the offending nonpositive pivot.
    pub smallest_pivot: f64,
}

/// Solve Hs = g for symmetric positive definite H by LLᵀ with one pass of
/// iterative refinement. Fails (success = false) exactly when a nonpositive
/// pivot appears; the pivot is reported either way.
pub fn solve_pd(h: &DMatrix<f64>, g: &DVector<f64>) -> Result<PdSolveResult> {
    let n = h.nrows();
    if h.ncols() != n || g.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "solve_pd: H is {}x{}, g has length {}",
            h.nrows(),
            h.ncols(),
            g.len()
        )));
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut smallest = f64::INFINITY;
    for j in 0..n {
        let mut pivot = h[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        smallest = smallest.min(pivot);
        if pivot <= 0.0 || !pivot.is_finite() {
            return Ok(PdSolveResult { solution: None, success: false, smallest_pivot: pivot });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let solve_with = |rhs: &DVector<f64>| -> DVector<f64> {
        // Forward then back substitution.
        let mut y = rhs.clone();
        for i in 0..n {
            for k in 0..i {
                let t = l[(i, k)] * y[k];
                y[i] -= t;
            }
            y[i] /= l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = l[(k, i)] * y[k];
                y[i] -= t;
            }
            y[i] /= l[(i, i)];
        }
        y
    };
    let mut s = solve_with(g);
    // One refinement pass.
    let r = g - h * &s;
    s += solve_with(&r);
    Ok(PdSolveResult { solution: Some(s), success: true, smallest_pivot: smallest })
}

/// Which end of the spectrum to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremeMode {
    Largest,
    Smallest,
}

#[derive(Debug, Clone)]
pub struct LanczosConfig {
    /// Target relative error of the eigenvalue estimate.
    pub rel_tol: f64,
    /// Allowed failure probability (drives the default budget).
    pub fail_prob: f64,
    /// Matvec budget per stage (capped at the dimension; full
    /// reorthogonalization exhausts the Krylov space after n steps).
    pub max_iters: usize,
    pub seed: u64,
    /// Caller's bound β ≥ √cond, used by the smallest mode to set the shift
    /// accuracy ε′ = 1/(10β²). Optional for merely-symmetric operators.
    pub beta_bound: Option<f64>,
}

/// Result of a Lanczos run. `value` is the exact Rayleigh quotient of the
/// returned unit vector (one extra matvec), so downstream step formulas see
/// curvature that is consistent with the vector they use.
#[derive(Debug, Clone)]
pub struct EigenEstimate {
    pub value: f64,
    pub vector: DVector<f64>,
    pub iterations: usize,
    /// Whether the residual certificate met the target within budget;
    /// callers decide how to treat flagged estimates.
    pub converged: bool,
}

/// Matvec budget C_L·min{n, ⌈β·log(n/δ²)⌉} with C_L = 8, capped at n.
pub fn lanczos_budget(n: usize, beta: f64, fail_prob: f64) -> usize {
    let log_term = ((n as f64) / (fail_prob * fail_prob)).ln().max(1.0);
    let inner = (beta * log_term).ceil() as usize;
    (8 * inner.min(n)).min(n).max(2)
}

/// Lanczos with full reorthogonalization from a seeded random start.
/// Largest mode works for any symmetric operator; smallest mode reduces to
/// largest of (2λ̂₁/(1−ε′))·I − A and is guaranteed for positive definite A.
pub fn lanczos_extreme(
    op: &dyn LinearOperator,
    mode: ExtremeMode,
    cfg: &LanczosConfig,
) -> Result<EigenEstimate> {
    match mode {
        ExtremeMode::Largest => lanczos_largest(op, cfg.rel_tol, cfg.max_iters, cfg.seed),
        ExtremeMode::Smallest => {
            // Stage 1: crude upper-end estimate at fixed relative error 1/3.
            let stage1 = lanczos_largest(op, 1.0 / 3.0, cfg.max_iters, cfg.seed)?;
            let eps_prime = match cfg.beta_bound {
                Some(beta) => 1.0 / (10.0 * beta * beta),
                None => (cfg.rel_tol / 4.0).min(1e-2),
            };
            // Stage 2: largest of the shifted-negated operator. The shift
            // 2λ̂₁/(1−ε′) dominates λ_max even with the stage-1 error.
            let shift = 2.0 * stage1.value.max(0.0) / (1.0 - eps_prime)
                + if stage1.value <= 0.0 { stage1.value.abs() + 1.0 } else { 0.0 };
            let m = ShiftNegate { op, shift };
            let stage2 = lanczos_largest(&m, eps_prime, cfg.max_iters, cfg.seed.wrapping_add(1))?;
            // Exact Rayleigh quotient of the returned vector in A.
            let v = stage2.vector;
            let value = v.dot(&op.apply(&v));
            Ok(EigenEstimate {
                value,
                vector: v,
                iterations: stage1.iterations + stage2.iterations,
                converged: stage1.converged && stage2.converged,
            })
        }
    }
}

fn lanczos_largest(
    op: &dyn LinearOperator,
    rel_tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<EigenEstimate> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::DimensionMismatch("lanczos on empty operator".into()));
    }
    let budget = max_iters.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(budget);
    let mut alphas: Vec<f64> = Vec::with_capacity(budget);
    let mut betas: Vec<f64> = Vec::with_capacity(budget);
    basis.push(random_unit_direction(&mut rng, n));
    let mut converged = false;
    let mut ritz_value = f64::NEG_INFINITY;
    let mut ritz_weights: DVector<f64> = DVector::zeros(1);
    let mut k = 0usize;
    while k < budget {
        let v = &basis[k];
        let mut w = op.apply(v);
        let alpha = v.dot(&w);
        alphas.push(alpha);
        w -= v * alpha;
        if k > 0 {
            let b = betas[k - 1];
            w -= &basis[k - 1] * b;
        }
        // Full reorthogonalization, twice for numerical insurance.
        for _ in 0..2 {
            for u in &basis {
                let c = u.dot(&w);
                w -= u * c;
            }
        }
        let beta = w.norm();
        k += 1;

        // Max Ritz pair of the k×k tridiagonal section.
        let t = tridiagonal(&alphas, &betas);
        let eig = t.symmetric_eigen();
        let (mut best_i, mut best_v) = (0usize, f64::NEG_INFINITY);
        for (i, &ev) in eig.eigenvalues.iter().enumerate() {
            if ev > best_v {
                best_v = ev;
                best_i = i;
            }
        }
        ritz_value = best_v;
        ritz_weights = eig.eigenvectors.column(best_i).into_owned();
        let residual = beta * ritz_weights[k - 1].abs();
        let scale = ritz_value.abs().max(1e-300);
        if residual <= 0.25 * rel_tol * scale {
            converged = true;
            break;
        }
        if beta <= 1e-13 * scale.max(1.0) {
            // Invariant subspace: the tridiagonal section is exact.
            converged = true;
            break;
        }
        if k < budget {
            betas.push(beta);
            basis.push(w / beta);
        }
    }
    // Assemble the Ritz vector and return its exact Rayleigh quotient.
    let mut v = DVector::zeros(n);
    for (i, u) in basis.iter().enumerate().take(k) {
        v += u * ritz_weights[i];
    }
    let norm = v.norm();
    if norm <= 0.0 {
        return Err(Error::EstimatorFailure("lanczos produced a null Ritz vector".into()));
    }
    v /= norm;
    let value = v.dot(&op.apply(&v));
    let _ = ritz_value;
    Ok(EigenEstimate { value, vector: v, iterations: k, converged })
}

fn tridiagonal(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t
}

#[derive(Debug, Clone)]
pub struct SqrtCondEstimate {
    /// √(2λ̂₁/λ̂₂) ∈ [√cond, 2√cond] with probability ≥ 1−fail_prob.
    pub value: f64,
    pub lambda_max_est: f64,
    pub lambda_min_est: f64,
    pub matvecs: usize,
}

/// Estimate √cond(A) for symmetric positive definite A: largest and
/// smallest eigenvalues by Lanczos at relative error 1/3 each (half the
/// failure budget apiece), then √(2λ̂₁/λ̂₂).
pub fn sqrt_cond(
    op: &dyn LinearOperator,
    fail_prob: f64,
    beta_bound: f64,
    seed: u64,
) -> Result<SqrtCondEstimate> {
    assert!(beta_bound >= 1.0, "sqrt_cond: beta bound must be >= 1");
    let n = op.dim();
    let budget = lanczos_budget(n, beta_bound, fail_prob / 2.0);
    let largest = lanczos_extreme(
        op,
        ExtremeMode::Largest,
        &LanczosConfig {
            rel_tol: 1.0 / 3.0,
            fail_prob: fail_prob / 2.0,
            max_iters: budget,
            seed,
            beta_bound: None,
        },
    )?;
    let smallest = lanczos_extreme(
        op,
        ExtremeMode::Smallest,
        &LanczosConfig {
            rel_tol: 1.0 / 3.0,
            fail_prob: fail_prob / 2.0,
            max_iters: budget,
            seed: seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
            beta_bound: Some(beta_bound),
        },
    )?;
    if smallest.value <= 0.0 {
        return Err(Error::AssumptionViolation(format!(
            "sqrt_cond: smallest-eigenvalue estimate {} is nonpositive",
            smallest.value
        )));
    }
    Ok(SqrtCondEstimate {
        value: (2.0 * largest.value / smallest.value).sqrt(),
        lambda_max_est: largest.value,
        lambda_min_est: smallest.value,
        matvecs: largest.iterations + smallest.iterations + 2,
    })
}

/// The fixed CG iteration count min{n, ⌊log_{(β−1)/(β+1)}(α/2)⌋ + 1}.
pub fn cg_iteration_count(n: usize, beta: f64, alpha: f64) -> usize {
    assert!(beta > 1.0, "cg_iteration_count: beta must exceed 1");
    assert!(alpha > 0.0 && alpha < 1.0);
    let q = (beta - 1.0) / (beta + 1.0);
    let k = (0.5 * alpha).ln() / q.ln();
    n.min(k.floor() as usize + 1)
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub solution: DVector<f64>,
    pub iterations: usize,
}

/// CG from the zero vector for exactly [`cg_iteration_count`] iterations
/// (early exit only on an exactly-zero residual). When β ≥ √cond(H), the
/// output h satisfies ‖h − H⁻¹g‖_H ≤ α‖g‖_{H⁻¹} and the energy sandwich
/// (1−α)gᵀH⁻¹g ≤ hᵀg ≤ (1+α)gᵀH⁻¹g.
pub fn cg_inverse(
    op: &dyn LinearOperator,
    g: &DVector<f64>,
    beta: f64,
    alpha: f64,
) -> Result<CgResult> {
    let n = op.dim();
    if g.len() != n {
        return Err(Error::DimensionMismatch("cg_inverse: rhs length != operator dim".into()));
    }
    let count = cg_iteration_count(n, beta, alpha);
    let mut x = DVector::zeros(n);
    let mut r = g.clone();
    let mut p = r.clone();
    let mut rs = r.norm_squared();
    let mut iters = 0usize;
    for _ in 0..count {
        if rs == 0.0 {
            break;
        }
        let ap = op.apply(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            return Err(Error::AssumptionViolation(format!(
                "cg_inverse: encountered nonpositive curvature pᵀHp = {pap}"
            )));
        }
        let step = rs / pap;
        x += &p * step;
        r -= &ap * step;
        let rs_new = r.norm_squared();
        p = &r + &p * (rs_new / rs);
        rs = rs_new;
        iters += 1;
    }
    Ok(CgResult { solution: x, iterations: iters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rotation(n: usize, seed: u64) -> DMatrix<f64> {
        // QR of a random Gaussian matrix gives a deterministic orthogonal Q.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| {
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        });
        a.qr().q()
    }

    fn spd_with_spectrum(spectrum: &[f64], seed: u64) -> DMatrix<f64> {
        let n = spectrum.len();
        let q = rotation(n, seed);
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(spectrum));
        &q * d * q.transpose()
    }

    #[test]
    fn solve_pd_hand_2x2() {
        let h = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let g = DVector::from_column_slice(&[1.0, 2.0]);
        let r = solve_pd(&h, &g).unwrap();
        assert!(r.success);
        let s = r.solution.unwrap();
        // H⁻¹ = (1/11)[[3,−1],[−1,4]] ⇒ s = (1/11, 7/11).
        assert!((s[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((s[1] - 7.0 / 11.0).abs() < 1e-14);
        assert!(r.smallest_pivot > 0.0);
    }

    #[test]
    fn solve_pd_identity() {
        let h = DMatrix::identity(4, 4);
        let g = DVector::from_fn(4, |i, _| i as f64);
        let r = solve_pd(&h, &g).unwrap();
        assert_eq!(r.solution.unwrap(), g);
        assert_eq!(r.smallest_pivot, 1.0);
    }

    #[test]
    fn solve_pd_rejects_indefinite() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let g = DVector::from_column_slice(&[1.0, 1.0]);
        let r = solve_pd(&h, &g).unwrap();
        assert!(!r.success);
        assert!(r.solution.is_none());
        assert!((r.smallest_pivot + 1.0).abs() < 1e-15);
    }

    #[test]
    fn solve_pd_residual_on_conditioned_system() {
        // cond ≈ 1e6, n = 40: refined residual stays at ≤ 1e−10·(1+‖g‖).
        let spectrum: Vec<f64> = (0..40).map(|i| 10f64.powf(6.0 * i as f64 / 39.0)).collect();
        let h = spd_with_spectrum(&spectrum, 3);
        let g = DVector::from_fn(40, |i, _| ((i * 7 + 1) as f64).sin());
        let r = solve_pd(&h, &g).unwrap();
        let res = (&g - &h * r.solution.unwrap()).norm();
        assert!(res <= 1e-10 * (1.0 + g.norm()), "residual {res}");
    }

    #[test]
    fn lanczos_small_exact() {
        let h = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0, 3.0]));
        let cfg = LanczosConfig {
            rel_tol: 1.0 / 3.0,
            fail_prob: 1e-3,
            max_iters: 10,
            seed: 1,
            beta_bound: Some(2.0),
        };
        let top = lanczos_extreme(&h, ExtremeMode::Largest, &cfg).unwrap();
        assert!((top.value - 3.0).abs() <= 1.0, "rel 1/3 bracket");
        assert!(top.converged);
        let bot = lanczos_extreme(&h, ExtremeMode::Smallest, &cfg).unwrap();
        assert!((bot.value - 1.0).abs() <= 1.0 / 3.0 + 1e-9, "got {}", bot.value);
    }

    #[test]
    fn lanczos_multiseed_bracket() {
        // 50×50, spectrum [1, 100], budget-limited to 12 matvecs: the
        // largest eigenvalue lands within 1/3 relative error on ≥ 95/100
        // seeds (theory says essentially always).
        let spectrum: Vec<f64> = (0..50).map(|i| 1.0 + 2.0 * i as f64).collect();
        let h = spd_with_spectrum(&spectrum, 11);
        let mut ok = 0;
        for seed in 0..100 {
            let cfg = LanczosConfig {
                rel_tol: 1.0 / 3.0,
                fail_prob: 1e-2,
                max_iters: 12,
                seed,
                beta_bound: None,
            };
            let est = lanczos_extreme(&h, ExtremeMode::Largest, &cfg).unwrap();
            if (est.value - 99.0).abs() <= 33.0 {
                ok += 1;
            }
        }
        assert!(ok >= 95, "only {ok}/100 within the 1/3 bracket");
    }

    #[test]
    fn lanczos_smallest_of_indefinite() {
        // Indefinite diag(−2, 1, 5): smallest mode must find ≈ −2 and the
        // returned value must equal the Rayleigh quotient of the vector.
        let h = DMatrix::from_diagonal(&DVector::from_column_slice(&[-2.0, 1.0, 5.0]));
        let cfg = LanczosConfig {
            rel_tol: 1e-2,
            fail_prob: 1e-3,
            max_iters: 10,
            seed: 4,
            beta_bound: None,
        };
        let est = lanczos_extreme(&h, ExtremeMode::Smallest, &cfg).unwrap();
        assert!((est.value + 2.0).abs() < 1e-6, "got {}", est.value);
        let rq = est.vector.dot(&(&h * &est.vector));
        assert!((est.value - rq).abs() < 1e-12);
    }

    #[test]
    fn sqrt_cond_identity_and_diagonal() {
        let id = DMatrix::<f64>::identity(6, 6);
        let e = sqrt_cond(&id, 1e-3, 2.0, 9).unwrap();
        // Exact λ's: estimate √2, inside the guaranteed [1, 2].
        assert!((e.value - 2.0f64.sqrt()).abs() < 1e-10);

        let mut ok = 0;
        let spectrum: Vec<f64> = (0..30).map(|i| 1.0 + 99.0 * (i as f64) / 29.0).collect();
        let h = spd_with_spectrum(&spectrum, 21);
        for seed in 0..100 {
            let e = sqrt_cond(&h, 1e-2, 12.0, seed).unwrap();
            if e.value >= 10.0 - 1e-9 && e.value <= 20.0 + 1e-9 {
                ok += 1;
            }
        }
        assert!(ok >= 95, "sqrt_cond bracket held on {ok}/100 seeds");
    }

    #[test]
    fn cg_count_formula() {
        // β=2 ⇒ q=1/3; log_{1/3}(5e−5) ≈ 9.01 ⇒ ⌊·⌋+1 = 10, capped at n.
        assert_eq!(cg_iteration_count(5, 2.0, 1e-4), 5);
        assert_eq!(cg_iteration_count(100, 2.0, 1e-4), 10);
        assert_eq!(cg_iteration_count(1, 10.0, 0.5), 1);
    }

    #[test]
    fn cg_identity_is_one_step() {
        let h = DMatrix::<f64>::identity(7, 7);
        let g = DVector::from_fn(7, |i, _| 1.0 + i as f64);
        let r = cg_inverse(&h, &g, 1.5, 0.5).unwrap();
        assert!((&r.solution - &g).norm() < 1e-14);
    }

    #[test]
    fn cg_energy_bound_and_sandwich() {
        let spectrum: Vec<f64> = (0..30).map(|i| 1.0 + 15.0 * i as f64 / 29.0).collect();
        let h = spd_with_spectrum(&spectrum, 5);
        let beta = 4.0; // = √cond
        let alpha = 1e-3;
        let hinv = h.clone().try_inverse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..20 {
            let g = DVector::from_fn(30, |_, _| rng.random::<f64>() - 0.5);
            let r = cg_inverse(&h, &g, beta, alpha).unwrap();
            let exact = &hinv * &g;
            let err = &r.solution - &exact;
            let err_h = err.dot(&(&h * &err)).sqrt();
            let g_hinv = g.dot(&exact).sqrt();
            assert!(err_h <= alpha * g_hinv * (1.0 + 1e-9), "energy bound: {err_h} vs {}", alpha * g_hinv);
            let rho = r.solution.dot(&g);
            assert!(rho >= (1.0 - alpha) * g.dot(&exact) - 1e-12);
            assert!(rho <= (1.0 + alpha) * g.dot(&exact) + 1e-12);
        }
    }

    #[test]
    fn cg_rejects_indefinite() {
        let h = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1.0]));
        let g = DVector::from_column_slice(&[1.0, 1.0]);
        assert!(cg_inverse(&h, &g, 2.0, 0.1).is_err());
    }
}
