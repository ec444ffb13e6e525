//! Second-order oracles, reference pairs, and the finite-difference
//! verification tools (derivative checks, third directional derivatives,
//! self-concordance certificates).
//!
//! An [`Oracle`] exposes value/gradient/Hessian (and optionally HVP) of a
//! C³ function on an open domain; `value` returns +∞ exactly off-domain.
//! A [`ReferencePair`] bundles the objective f with its convex reference F
//! and the constant κ for which f + F is κ-self-concordant:
//!
//! ```text
//!   |∇³(f+F)(x)[h,h,h]| ≤ 2κ (∇²(f+F)(x)[h,h])^{3/2}.
//! ```

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Second-order oracle for a function on an open domain of Rⁿ.
///
/// `value` must return +∞ exactly when `in_domain` is false. The default
/// `hvp` multiplies by the assembled Hessian; HVP-only sources can instead
/// assemble via [`hessian_from_hvp`].
pub trait Oracle: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.hessian(x) * v
    }

    fn in_domain(&self, x: &DVector<f64>) -> bool {
        x.iter().all(|t| t.is_finite())
    }
}

/// Assemble a dense Hessian column-by-column from unit-vector HVPs.
pub fn hessian_from_hvp<F>(dim: usize, mut hvp: F) -> DMatrix<f64>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let mut h = DMatrix::zeros(dim, dim);
    let mut e = DVector::zeros(dim);
    for j in 0..dim {
        e[j] = 1.0;
        h.set_column(j, &hvp(&e));
        e[j] = 0.0;
    }
    h
}

/// The zero function (reference F ≡ 0 for plainly self-concordant f).
pub struct ZeroOracle {
    pub dim: usize,
}

impl Oracle for ZeroOracle {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &DVector<f64>) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.dim)
    }
    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.dim, self.dim)
    }
    fn hvp(&self, _x: &DVector<f64>, _v: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.dim)
    }
}

/// (w/2)‖x‖² — the reference of the weakly self-concordant case.
pub struct ScaledNormSquared {
    pub dim: usize,
    pub weight: f64,
}

impl Oracle for ScaledNormSquared {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.weight * x.norm_squared()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x * self.weight
    }
    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) * self.weight
    }
    fn hvp(&self, _x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        v * self.weight
    }
}

/// ½xᵀAx + bᵀx + c on all of Rⁿ (A symmetric). Test workhorse.
pub struct QuadraticOracle {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

impl Oracle for QuadraticOracle {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.a * x)) + self.b.dot(x) + self.c
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b
    }
    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }
    fn hvp(&self, _x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        &self.a * v
    }
}

/// w·g for an inner oracle g.
pub struct ScaledOracle {
    pub inner: Arc<dyn Oracle>,
    pub weight: f64,
}

impl Oracle for ScaledOracle {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.weight * self.inner.value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.inner.gradient(x) * self.weight
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.inner.hessian(x) * self.weight
    }
    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.inner.hvp(x, v) * self.weight
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        self.inner.in_domain(x)
    }
}

/// f + w·g (used for f + F, f + σF).
pub struct SumOracle {
    pub f: Arc<dyn Oracle>,
    pub g: Arc<dyn Oracle>,
    pub weight_g: f64,
}

impl SumOracle {
    pub fn new(f: Arc<dyn Oracle>, g: Arc<dyn Oracle>, weight_g: f64) -> Self {
        assert_eq!(f.dim(), g.dim(), "sum oracle dims must agree");
        Self { f, g, weight_g }
    }
}

impl Oracle for SumOracle {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.f.value(x) + self.weight_g * self.g.value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.f.gradient(x) + self.g.gradient(x) * self.weight_g
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.f.hessian(x) + self.g.hessian(x) * self.weight_g
    }
    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.f.hvp(x, v) + self.g.hvp(x, v) * self.weight_g
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        self.f.in_domain(x) && self.g.in_domain(x)
    }
}

/// f(y) + (μ/2)‖y − z‖² — the proximal subproblem oracle.
pub struct ProxOracle {
    pub f: Arc<dyn Oracle>,
    pub mu: f64,
    pub center: DVector<f64>,
}

impl Oracle for ProxOracle {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.f.value(x) + 0.5 * self.mu * (x - &self.center).norm_squared()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.f.gradient(x) + (x - &self.center) * self.mu
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = self.f.hessian(x);
        for i in 0..h.nrows() {
            h[(i, i)] += self.mu;
        }
        h
    }
    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.f.hvp(x, v) + v * self.mu
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        self.f.in_domain(x)
    }
}

/// Per-kind oracle call counters (thread-safe; solvers wrap oracles in
/// [`CountingOracle`] and snapshot into trace records).
#[derive(Debug, Default)]
pub struct CallCounters {
    value: AtomicU64,
    gradient: AtomicU64,
    hessian: AtomicU64,
    hvp: AtomicU64,
}

impl CallCounters {
    pub fn snapshot(&self) -> OracleCallCounts {
        OracleCallCounts {
            value: self.value.load(Ordering::Relaxed),
            gradient: self.gradient.load(Ordering::Relaxed),
            hessian: self.hessian.load(Ordering::Relaxed),
            hvp: self.hvp.load(Ordering::Relaxed),
        }
    }
}

/// Immutable snapshot of call counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCallCounts {
    pub value: u64,
    pub gradient: u64,
    pub hessian: u64,
    pub hvp: u64,
}

/// Counting wrapper; forwards every call and bumps the matching counter.
pub struct CountingOracle {
    pub inner: Arc<dyn Oracle>,
    pub counters: Arc<CallCounters>,
}

impl CountingOracle {
    pub fn wrap(inner: Arc<dyn Oracle>) -> (Arc<Self>, Arc<CallCounters>) {
        let counters = Arc::new(CallCounters::default());
        (Arc::new(Self { inner, counters: counters.clone() }), counters)
    }
}

impl Oracle for CountingOracle {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.counters.value.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.counters.gradient.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient(x)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.counters.hessian.fetch_add(1, Ordering::Relaxed);
        self.inner.hessian(x)
    }
    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.counters.hvp.fetch_add(1, Ordering::Relaxed);
        self.inner.hvp(x, v)
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        self.inner.in_domain(x)
    }
}

/// Sampling distribution over the (open) domain, supplied by each problem
/// for the self-concordance checks.
pub trait Sampler: Send + Sync {
    fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64>;
}

/// Componentwise log-uniform on [lo, hi] — probes near-boundary behavior of
/// barrier domains.
pub struct LogUniformSampler {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Sampler for LogUniformSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let (llo, lhi) = (self.lo.ln(), self.hi.ln());
        DVector::from_fn(self.dim, |_, _| {
            let u: f64 = rng.random();
            (llo + u * (lhi - llo)).exp()
        })
    }
}

/// Isotropic Gaussian with the given scale — full-space problems.
pub struct GaussianSampler {
    pub dim: usize,
    pub scale: f64,
}

impl Sampler for GaussianSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        standard_normal_vector(rng, self.dim) * self.scale
    }
}

/// Box–Muller standard normal vector.
pub fn standard_normal_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| {
        let u1: f64 = rng.random::<f64>().max(1e-300);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    })
}

/// Random unit direction.
pub fn random_unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = standard_normal_vector(rng, dim);
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Objective f with its convex reference F, the constant κ of the pair, and
/// problem-supplied metadata used by solvers and checks.
#[derive(Clone)]
pub struct ReferencePair {
    pub objective: Arc<dyn Oracle>,
    pub reference: Arc<dyn Oracle>,
    /// f + F is κ-self-concordant.
    pub kappa: f64,
    /// Self-concordance constant of F itself (needed by the negative
    /// curvature option); None when unknown.
    pub kappa_ref: Option<f64>,
    /// A valid lower bound on inf f when available (used only to evaluate
    /// theorem bounds conservatively).
    pub lower_bound_hint: Option<f64>,
    /// Sampling distribution over the domain for SC checks.
    pub sampler: Option<Arc<dyn Sampler>>,
}

impl ReferencePair {
    pub fn new(objective: Arc<dyn Oracle>, reference: Arc<dyn Oracle>, kappa: f64) -> Self {
        assert_eq!(objective.dim(), reference.dim());
        assert!(kappa >= 0.0 && kappa.is_finite());
        Self { objective, reference, kappa, kappa_ref: None, lower_bound_hint: None, sampler: None }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn in_domain(&self, x: &DVector<f64>) -> bool {
        self.objective.in_domain(x) && self.reference.in_domain(x)
    }

    /// ∇²f(x) + σ·∇²F(x).
    pub fn sum_hessian(&self, x: &DVector<f64>, sigma: f64) -> DMatrix<f64> {
        self.objective.hessian(x) + self.reference.hessian(x) * sigma
    }

    /// The combined oracle f + σF.
    pub fn sum_oracle(&self, sigma: f64) -> SumOracle {
        SumOracle::new(self.objective.clone(), self.reference.clone(), sigma)
    }

    /// Wrap both oracles in counters; returns the counted pair and the
    /// (objective, reference) counter handles.
    pub fn counted(&self) -> (ReferencePair, Arc<CallCounters>, Arc<CallCounters>) {
        let (obj, obj_c) = CountingOracle::wrap(self.objective.clone());
        let (rf, ref_c) = CountingOracle::wrap(self.reference.clone());
        let pair = ReferencePair {
            objective: obj,
            reference: rf,
            kappa: self.kappa,
            kappa_ref: self.kappa_ref,
            lower_bound_hint: self.lower_bound_hint,
            sampler: self.sampler.clone(),
        };
        (pair, obj_c, ref_c)
    }
}

/// Per-step scalars of the descent machinery:
///
/// ```text
///   ρ = −∇fᵀd,  δ = ∇²f[d,d],  Δ = ∇²F[d,d],
///   η = ρ/√(δ+Δ),  t̄ = ρ/(δ+Δ+κρ√(δ+Δ)),
/// ```
///
/// with η, t̄ finite only when δ+Δ > 0. The guaranteed decrease at t̄ is
/// κ⁻²ω(κη).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepQuantities {
    pub rho: f64,
    pub delta: f64,
    pub delta_ref: f64,
    pub eta: f64,
    pub t_bar: f64,
}

impl StepQuantities {
    pub fn compute(rho: f64, delta: f64, delta_ref: f64, kappa: f64) -> Self {
        let curv = delta + delta_ref;
        let (eta, t_bar) = if curv > 0.0 {
            let s = curv.sqrt();
            (rho / s, rho / (curv + kappa * rho * s))
        } else if rho == 0.0 {
            (0.0, 0.0)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        Self { rho, delta, delta_ref, eta, t_bar }
    }

    pub fn curvature(&self) -> f64 {
        self.delta + self.delta_ref
    }

    /// κ⁻²ω(κη) — the model decrease realized at t̄.
    pub fn model_decrease(&self, kappa: f64) -> f64 {
        crate::scalar::scaled_omega(kappa, self.eta)
    }
}

/// How far finite differences may perturb the Hessian quadratic form before
/// ε is shrunk again; keeps truncation error well under the certificate
/// slacks even at near-boundary sample points.
const FD_STABILITY_TOL: f64 = 5e-3;
const FD_MAX_SHRINKS: usize = 10;

/// Choose a stable ε for central differences along h at x, shrinking from
/// `base` while x ± εh leaves the domain or the curvature along h varies by
/// more than [`FD_STABILITY_TOL`]. Returns (ε, Q(x−εh), Q(x), Q(x+εh)) with
/// Q(y) = ∇²g(y)[h,h].
fn stable_probe(
    g: &dyn Oracle,
    x: &DVector<f64>,
    h: &DVector<f64>,
    base: f64,
) -> Result<(f64, f64, f64, f64)> {
    let q0 = h.dot(&g.hvp(x, h));
    let mut eps = base;
    for _ in 0..=FD_MAX_SHRINKS {
        let xp = x + h * eps;
        let xm = x - h * eps;
        if g.in_domain(&xp) && g.in_domain(&xm) {
            let qp = h.dot(&g.hvp(&xp, h));
            let qm = h.dot(&g.hvp(&xm, h));
            let stable = if q0 > 0.0 {
                (qp / q0 - 1.0).abs() <= FD_STABILITY_TOL && (qm / q0 - 1.0).abs() <= FD_STABILITY_TOL
            } else {
                qp.is_finite() && qm.is_finite()
            };
            if stable {
                return Ok((eps, qm, q0, qp));
            }
        }
        eps *= 0.5;
    }
    Err(Error::DomainViolation(format!(
        "no stable finite-difference step after {FD_MAX_SHRINKS} shrinks from eps={base}"
    )))
}

/// Worst relative errors of the analytic gradient and Hessian against
/// central differences.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeReport {
    pub worst_grad_rel_err: f64,
    pub worst_hess_rel_err: f64,
    pub dirs_checked: usize,
}

/// Check ∇f and ∇²f at x against central differences along `n_dirs` random
/// unit directions. ε starts at ∛(machine ε)·(1+‖x‖) and shrinks (up to 10
/// times) on domain violations or unstable curvature; errors are relative
/// with an absolute floor of 1.
pub fn check_derivatives(
    oracle: &dyn Oracle,
    x: &DVector<f64>,
    n_dirs: usize,
    seed: u64,
) -> Result<DerivativeReport> {
    if !oracle.in_domain(x) {
        return Err(Error::DomainViolation("check_derivatives: x not in domain".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = f64::EPSILON.cbrt() * (1.0 + x.norm());
    let grad = oracle.gradient(x);
    let mut worst_g = 0.0_f64;
    let mut worst_h = 0.0_f64;
    for _ in 0..n_dirs {
        let h = random_unit_direction(&mut rng, oracle.dim());
        let (eps, _, _, _) = stable_probe(oracle, x, &h, base)?;
        let xp = x + &h * eps;
        let xm = x - &h * eps;

        let fd_dir = (oracle.value(&xp) - oracle.value(&xm)) / (2.0 * eps);
        let exact_dir = grad.dot(&h);
        worst_g = worst_g.max((fd_dir - exact_dir).abs() / (1.0 + exact_dir.abs()));

        let fd_hess = (oracle.gradient(&xp) - oracle.gradient(&xm)) / (2.0 * eps);
        let exact_hess = oracle.hvp(x, &h);
        worst_h =
            worst_h.max((&fd_hess - &exact_hess).norm() / (1.0 + exact_hess.norm()));
    }
    Ok(DerivativeReport {
        worst_grad_rel_err: worst_g,
        worst_hess_rel_err: worst_h,
        dirs_checked: n_dirs,
    })
}

/// Central-difference estimate of ∇³g(x)[h,h,h] by differencing the Hessian
/// quadratic form: (∇²g(x+εh)[h,h] − ∇²g(x−εh)[h,h])/(2ε) with
/// ε = ⁴√(machine ε)·(1+‖x‖) unless overridden, subject to the same
/// domain/stability shrinking as the other checks.
pub fn third_directional(
    g: &dyn Oracle,
    x: &DVector<f64>,
    h: &DVector<f64>,
    eps_override: Option<f64>,
) -> Result<f64> {
    if !g.in_domain(x) {
        return Err(Error::DomainViolation("third_directional: x not in domain".into()));
    }
    let base = eps_override.unwrap_or_else(|| f64::EPSILON.powf(0.25) * (1.0 + x.norm()));
    let (eps, qm, _, qp) = stable_probe(g, x, h, base)?;
    Ok((qp - qm) / (2.0 * eps))
}

/// Outcome of a sampled self-concordance certificate.
#[derive(Debug, Clone)]
pub struct ScCheckReport {
    pub kappa: f64,
    pub slack: f64,
    /// max over samples of |∇³(f+F)[h,h,h]| / (2 (∇²(f+F)[h,h])^{3/2}).
    pub worst_ratio: f64,
    pub pass: bool,
    pub points_checked: usize,
    pub dirs_per_point: usize,
    /// Samples where ∇²(f+F) failed to factor positive definite or a
    /// directional curvature came out nonpositive — the convexity
    /// assumption itself failed; reported distinctly from ratio failures.
    pub assumption_violations: usize,
    /// Location of the worst ratio, for diagnostics.
    pub worst_point: Option<DVector<f64>>,
}

/// Sample points from the pair's domain sampler and random unit directions,
/// estimate ∇³(f+F)[h,h,h] by central differences, and compare against
/// 2κ(∇²(f+F)[h,h])^{3/2}. Passes when the worst ratio is ≤ κ(1+slack) and
/// no curvature sample was nonpositive; `slack` absorbs finite-difference
/// error near the equality case.
pub fn check_self_concordance(
    pair: &ReferencePair,
    n_points: usize,
    n_dirs: usize,
    slack: f64,
    seed: u64,
) -> Result<ScCheckReport> {
    let sampler = pair.sampler.as_ref().ok_or_else(|| {
        Error::InvalidConfig("check_self_concordance: pair has no domain sampler".into())
    })?;
    let sum = pair.sum_oracle(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut worst_point = None;
    let mut violations = 0usize;
    for _ in 0..n_points {
        let x = sampler.sample(&mut rng);
        if !sum.in_domain(&x) {
            return Err(Error::DomainViolation(
                "sampler produced a point outside the domain".into(),
            ));
        }
        // Factorization audit of ∇²(f+F)(x): random directions miss thin
        // negative eigenspaces in high dimension, and downstream solvers
        // factor this exact matrix.
        if nalgebra::Cholesky::new(sum.hessian(&x)).is_none() {
            violations += 1;
            continue;
        }
        for _ in 0..n_dirs {
            let h = random_unit_direction(&mut rng, pair.dim());
            let s = h.dot(&sum.hvp(&x, &h));
            if s <= 0.0 {
                violations += 1;
                continue;
            }
            let t = third_directional(&sum, &x, &h, None)?;
            let ratio = t.abs() / (2.0 * s.powf(1.5));
            if ratio > worst {
                worst = ratio;
                worst_point = Some(x.clone());
            }
        }
    }
    Ok(ScCheckReport {
        kappa: pair.kappa,
        slack,
        worst_ratio: worst,
        pass: violations == 0 && worst <= pair.kappa * (1.0 + slack),
        points_checked: n_points,
        dirs_per_point: n_dirs,
        assumption_violations: violations,
        worst_point,
    })
}

/// Find the smallest weight w on the doubling grid {1e−6·2^k} such that
/// (f, w·F) passes [`check_self_concordance`] at the target κ, then return
/// 2w as a safety margin. Fails diagnostically once the grid exceeds 1e12.
/// The fitted constant is an artifact of the sampler and budget.
pub fn fit_reference_weight(
    objective: Arc<dyn Oracle>,
    reference: Arc<dyn Oracle>,
    kappa: f64,
    sampler: Arc<dyn Sampler>,
    n_points: usize,
    n_dirs: usize,
    seed: u64,
) -> Result<f64> {
    let mut w = 1e-6;
    while w <= 1e12 {
        let pair = ReferencePair {
            objective: objective.clone(),
            reference: Arc::new(ScaledOracle { inner: reference.clone(), weight: w }),
            kappa,
            kappa_ref: None,
            lower_bound_hint: None,
            sampler: Some(sampler.clone()),
        };
        let report = check_self_concordance(&pair, n_points, n_dirs, 1e-3, seed)?;
        if report.pass {
            return Ok(2.0 * w);
        }
        w *= 2.0;
    }
    Err(Error::Diagnostic(
        "no reference weight up to 1e12 certifies the pair; wrong degree or unbounded third derivative".into(),
    ))
}
