//! Runtime verification suites behind the CLI's `verify` subcommand:
//! scalar identities, derivative checks, self-concordance certificates, and
//! the linear-algebra invariants. Each suite reports one line per check with
//! its worst observed margin, so failures localize immediately.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::{cg_inverse, lanczos_extreme, solve_pd, ExtremeMode, LanczosConfig};
use crate::oracle::{
    check_derivatives, check_self_concordance, standard_normal_vector, LogUniformSampler,
    ReferencePair, Sampler, ZeroOracle,
};
use crate::par;
use crate::problems::log_barrier::LogBarrierOracle;
use crate::problems::{
    make_log_barrier, make_nmf_kl, make_nmf_mse, make_phase_retrieval, make_polynomial_saddle,
    ProblemInstance,
};
use crate::report::TraceRecord;
use crate::scalar::{conjugate_argmax, gamma_f, omega, omega_star, scaled_omega};
use crate::Result;

/// One named check with its worst observed margin against its bound.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    /// Worst observed value of the monitored quantity.
    pub worst: f64,
    /// The bound `worst` is held against (pass ⇔ worst ≤ bound, unless the
    /// check states otherwise in `detail`).
    pub bound: f64,
    pub detail: String,
}

impl CheckLine {
    fn of(name: &str, worst: f64, bound: f64, detail: String) -> Self {
        CheckLine { name: name.to_string(), pass: worst <= bound, worst, bound, detail }
    }

    pub fn render(&self) -> String {
        format!(
            "[{}] {:<38} worst={:>12.5e} bound={:>9.3e}  {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.bound,
            self.detail
        )
    }
}

/// All checks of one `verify` scope.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub scope: String,
    pub lines: Vec<CheckLine>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    pub fn render(&self) -> String {
        let mut out = format!("== {} ==\n", self.scope);
        for l in &self.lines {
            out.push_str(&l.render());
            out.push('\n');
        }
        out.push_str(&format!(
            "{}: {}\n",
            self.scope,
            if self.pass() { "all checks passed" } else { "FAILURES above" }
        ));
        out
    }
}

/// Grid identities of ω, ω⋆, and Γ.
pub fn scalar_identities() -> SuiteReport {
    let mut lines = Vec::new();

    // Fenchel conjugacy: ω⋆(z) = z·t⋆ − ω(t⋆) at t⋆ = z/(1−z).
    let mut worst = 0.0_f64;
    let mut z = 1e-6;
    while z < 0.999 {
        let t = conjugate_argmax(z).expect("z in [0,1)");
        let gap = (omega_star(z) - (z * t - omega(t))).abs();
        worst = worst.max(gap / (1.0 + omega_star(z)));
        z *= 1.35;
    }
    lines.push(CheckLine::of(
        "scalar.conjugacy_grid",
        worst,
        1e-9,
        "ω⋆(z) = z·t⋆ − ω(t⋆), t⋆ = z/(1−z)".into(),
    ));

    // Quadratic lower bound: ω(z) ≥ z²/(2(1+Γ)) for z ∈ [0, Γ].
    let mut worst = 0.0_f64;
    for &gap in &[1e-8, 1e-4, 1e-2, 0.5, 1.0, 10.0] {
        for &kappa in &[0.25, 1.0, 4.0] {
            let g = gamma_f(gap, kappa);
            for i in 0..=20 {
                let z = g * (i as f64) / 20.0;
                let deficit = z * z / (2.0 * (1.0 + g)) - omega(z);
                worst = worst.max(deficit / (1.0 + omega(z)));
            }
        }
    }
    lines.push(CheckLine::of(
        "scalar.quadratic_lower_bound",
        worst,
        1e-12,
        "ω(z) ≥ z²/(2(1+Γ)) on [0, Γ]".into(),
    ));

    // Γ inverts ω at every scale: ω(Γ(gap,κ)) = κ²·gap.
    let mut worst = 0.0_f64;
    for &gap in &[1e-10, 1e-6, 1e-3, 0.1, 1.0, 25.0] {
        for &kappa in &[1e-3, 0.5, 1.0, 4.0, 20.0] {
            let g = gamma_f(gap, kappa);
            let target = kappa * kappa * gap;
            worst = worst.max((omega(g) - target).abs() / (1.0 + target));
        }
    }
    lines.push(CheckLine::of(
        "scalar.gamma_inverts_omega",
        worst,
        1e-9,
        "ω(Γ(gap,κ)) = κ²·gap".into(),
    ));

    SuiteReport { scope: "scalar_identities".into(), lines }
}

/// The five shipped desk-scale problems, one instance each.
pub fn standard_pairs(seed: u64) -> Result<Vec<(String, ReferencePair)>> {
    let instances = vec![
        ProblemInstance::Nmf(make_nmf_mse(20, 10, 5, seed)?),
        ProblemInstance::Nmf(make_nmf_kl(20, 10, 5, 0.01, seed)?),
        ProblemInstance::PhaseRetrieval(make_phase_retrieval(4, 12, seed)),
        ProblemInstance::PolynomialSaddle(make_polynomial_saddle(seed)?),
        ProblemInstance::LogBarrier(make_log_barrier(20, 1.0, seed)),
    ];
    Ok(instances
        .into_iter()
        .map(|i| (i.kind().to_string(), i.build_pair()))
        .collect())
}

/// Finite-difference validation of every pair's gradient and Hessian at
/// sampled interior points. Barrier-domain pairs are probed away from the
/// boundary (the 1/x² curvature there puts central differences at the 1e−5
/// noise floor; boundary behavior belongs to the self-concordance suite).
pub fn derivative_suite(pairs: &[(String, ReferencePair)], seed: u64) -> SuiteReport {
    let lines = pairs
        .iter()
        .enumerate()
        .map(|(idx, (name, pair))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((idx as u64) << 8));
            let barrier_domain = !pair.in_domain(&DVector::from_element(pair.dim(), -1.0));
            let points: Vec<DVector<f64>> = if barrier_domain {
                let interior = LogUniformSampler { dim: pair.dim(), lo: 1e-1, hi: 1e1 };
                (0..10).map(|_| interior.sample(&mut rng)).collect()
            } else {
                let sampler = pair.sampler.as_ref().expect("shipped pairs carry samplers");
                (0..10).map(|_| sampler.sample(&mut rng)).collect()
            };
            let objective = Arc::clone(&pair.objective);
            let reference = Arc::clone(&pair.reference);
            let reports = par::map_batch(points, move |x| {
                let f = check_derivatives(objective.as_ref(), &x, 10, 0xd1f)?;
                let g = check_derivatives(reference.as_ref(), &x, 10, 0xd2f)?;
                Ok::<_, crate::Error>((f, g))
            });
            let mut worst = 0.0_f64;
            for r in reports {
                let (f, g) = r.expect("derivative check evaluates");
                worst = worst
                    .max(f.worst_grad_rel_err)
                    .max(f.worst_hess_rel_err)
                    .max(g.worst_grad_rel_err)
                    .max(g.worst_hess_rel_err);
            }
            CheckLine::of(
                &format!("derivatives.{name}"),
                worst,
                1e-5,
                "∇ and ∇² of f and F vs central differences, 10 pts × 10 dirs".into(),
            )
        })
        .collect();
    SuiteReport { scope: "derivatives".into(), lines }
}

/// Sampled self-concordance certificates at each pair's declared κ, plus the
/// 1-D pure log barrier pinned at the equality boundary.
pub fn self_concordance_suite(pairs: &[(String, ReferencePair)], seed: u64) -> SuiteReport {
    let mut lines = Vec::new();

    // −log x against the zero reference sits exactly at ratio 1.
    let barrier = LogBarrierOracle { quad: 0.0, linear: DVector::zeros(1) };
    let mut pure = ReferencePair::new(Arc::new(barrier), Arc::new(ZeroOracle { dim: 1 }), 1.0);
    pure.sampler = Some(Arc::new(LogUniformSampler { dim: 1, lo: 1e-2, hi: 1e1 }));
    let rep = check_self_concordance(&pure, 10, 2, 1e-3, seed).expect("1-D barrier check");
    let off_equality = (rep.worst_ratio - 1.0).abs();
    lines.push(CheckLine {
        name: "self_concordance.neg_log_boundary".into(),
        pass: off_equality <= 1e-4 && rep.assumption_violations == 0,
        worst: rep.worst_ratio,
        bound: 1.0 + 1e-4,
        detail: "equality case: worst ratio must sit in 1 ± 1e−4".into(),
    });

    for (idx, (name, pair)) in pairs.iter().enumerate() {
        let rep = check_self_concordance(pair, 10, 10, 1e-3, seed ^ ((idx as u64 + 1) << 16))
            .expect("certificate evaluates");
        lines.push(CheckLine {
            name: format!("self_concordance.{name}"),
            pass: rep.pass,
            worst: rep.worst_ratio,
            bound: pair.kappa * (1.0 + rep.slack),
            detail: format!(
                "κ={} over {}×{} samples, {} curvature violations",
                pair.kappa, rep.points_checked, rep.dirs_per_point, rep.assumption_violations
            ),
        });
    }

    SuiteReport { scope: "self_concordance".into(), lines }
}

/// Margins of one random PD system for [`numerics_suite`].
struct SystemMargins {
    cg_energy: f64,
    sandwich_low: f64,
    sandwich_high: f64,
    residual: f64,
    rayleigh_excess: f64,
}

fn one_system(seed: u64) -> SystemMargins {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // The α-budget iteration count must not hit the `min(n, ·)` cap: the
    // capped branch leans on exact-arithmetic Krylov termination, which
    // floating point does not honor at high condition numbers. cond ≤ 25
    // gives a count of at most 25 iterations at α = 1e−4, so n ≥ 26 keeps
    // every system in the formula-count regime.
    let n = 26 + (rng.random::<u64>() % 15) as usize;
    let cond = 10f64.powf(rng.random::<f64>() * (25f64).log10());
    let scale = 10f64.powf(rng.random::<f64>() * 4.0 - 2.0);
    let mut eigs: Vec<f64> = vec![scale, scale * cond];
    for _ in 2..n {
        eigs.push(scale * cond.powf(rng.random::<f64>()));
    }
    // Known spectrum, random orthogonal frame from a QR factorization.
    let gauss = DMatrix::from_fn(n, n, |_, _| standard_normal_vector(&mut rng, 1)[0]);
    let q = gauss.qr().q();
    let h = &q * DMatrix::from_diagonal(&DVector::from_vec(eigs.clone())) * q.transpose();
    let h = (&h + h.transpose()) * 0.5;
    let g = standard_normal_vector(&mut rng, n);

    let lam_max = eigs.iter().cloned().fold(f64::MIN, f64::max);
    let lam_min = eigs.iter().cloned().fold(f64::MAX, f64::min);
    let beta = (lam_max / lam_min).sqrt().max(1.0 + 1e-6);
    let alpha = 1e-4;

    let exact = solve_pd(&h, &g).expect("dims agree");
    let hinv_g = exact.solution.clone().expect("system is PD");
    let residual = (&h * &hinv_g - &g).norm() / (1.0 + g.norm());

    let cg = cg_inverse(&h, &g, beta, alpha).expect("budgeted CG");
    let err = &cg.solution - &hinv_g;
    let energy_err = err.dot(&(&h * &err)).max(0.0).sqrt();
    let energy_bound = alpha * g.dot(&hinv_g).max(0.0).sqrt();
    let lambda_sq = g.dot(&hinv_g);
    let rho = cg.solution.dot(&g);

    let est = lanczos_extreme(
        &h,
        ExtremeMode::Largest,
        &LanczosConfig {
            rel_tol: 1e-2,
            fail_prob: 1e-3,
            max_iters: n,
            seed: seed ^ 0xace,
            beta_bound: None,
        },
    )
    .expect("largest-mode Lanczos");

    SystemMargins {
        cg_energy: energy_err / (energy_bound + 1e-300),
        sandwich_low: ((1.0 - alpha) * lambda_sq - rho) / (1.0 + lambda_sq),
        sandwich_high: (rho - (1.0 + alpha) * lambda_sq) / (1.0 + lambda_sq),
        residual,
        rayleigh_excess: (est.value - lam_max) / lam_max,
    }
}

/// Linear-algebra invariants on 100 random PD systems with known spectra
/// and β set to the true √cond. This is the data-parallel hot path; runs
/// sequentially when the `parallel` feature is off or forced off.
pub fn numerics_suite(seed: u64) -> SuiteReport {
    let margins = par::map_batch((0..100u64).collect(), move |i| one_system(seed ^ (i * 7919)));

    let fold = |f: fn(&SystemMargins) -> f64| {
        margins.iter().map(f).fold(f64::MIN, f64::max)
    };
    let lines = vec![
        CheckLine::of(
            "numerics.cg_energy_bound",
            fold(|m| m.cg_energy),
            1.0 + 1e-12,
            "‖h−H⁻¹g‖_H / (α‖g‖_{H⁻¹}) on 100 systems".into(),
        ),
        CheckLine::of(
            "numerics.cg_sandwich_lower",
            fold(|m| m.sandwich_low),
            1e-12,
            "(1−α)gᵀH⁻¹g ≤ hᵀg (normalized deficit)".into(),
        ),
        CheckLine::of(
            "numerics.cg_sandwich_upper",
            fold(|m| m.sandwich_high),
            1e-12,
            "hᵀg ≤ (1+α)gᵀH⁻¹g (normalized excess)".into(),
        ),
        CheckLine::of(
            "numerics.solve_pd_residual",
            fold(|m| m.residual),
            1e-10,
            "‖Hs−g‖ ≤ 1e−10·(1+‖g‖)".into(),
        ),
        CheckLine::of(
            "numerics.lanczos_rayleigh_upper",
            fold(|m| m.rayleigh_excess),
            1e-12,
            "largest-mode estimate never exceeds λ_max".into(),
        ),
    ];
    SuiteReport { scope: "numerics".into(), lines }
}

/// Normalized descent margins of consecutive accepted steps in a trace:
/// (f_{j+1} − f_j + κ⁻²ω(κν_j)) / (1 + |f_j|), one entry per accepted step
/// with a recorded successor (`final_f` supplies the successor of the last
/// row). Nonpositive margins certify the per-step decrease inequality.
pub fn descent_margins(trace: &[TraceRecord], final_f: Option<f64>, kappa: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for w in 0..trace.len() {
        let row = &trace[w];
        if row.accepted == Some(false) {
            continue;
        }
        let Some(nu) = row.nu else { continue };
        let next_f = if w + 1 < trace.len() { Some(trace[w + 1].f) } else { final_f };
        let Some(next_f) = next_f else { continue };
        let required = scaled_omega(kappa, nu);
        out.push((next_f - row.f + required) / (1.0 + row.f.abs()));
    }
    out
}

/// Run the suites selected by `scope` ∈ {scalar_identities, derivatives,
/// self_concordance, numerics, all}.
pub fn run_scope(scope: &str, seed: u64) -> Result<Vec<SuiteReport>> {
    let mut reports = Vec::new();
    let wants = |s: &str| scope == s || scope == "all";
    if wants("scalar_identities") {
        reports.push(scalar_identities());
    }
    if wants("derivatives") || wants("self_concordance") {
        let pairs = standard_pairs(seed)?;
        if wants("derivatives") {
            reports.push(derivative_suite(&pairs, seed));
        }
        if wants("self_concordance") {
            reports.push(self_concordance_suite(&pairs, seed));
        }
    }
    if wants("numerics") {
        reports.push(numerics_suite(seed));
    }
    if reports.is_empty() {
        return Err(crate::Error::InvalidConfig(format!(
            "unknown verify scope {scope:?}; expected scalar_identities | derivatives | \
             self_concordance | numerics | all"
        )));
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_suite_is_green() {
        let rep = scalar_identities();
        assert!(rep.pass(), "{}", rep.render());
        assert_eq!(rep.lines.len(), 3);
    }

    #[test]
    fn numerics_suite_is_green() {
        let rep = numerics_suite(2024);
        assert!(rep.pass(), "{}", rep.render());
        // The iteration-count formula targets q^count ≤ α/2, so the worst
        // system may use most of the α-budget but never exceeds it.
        assert!(rep.lines[0].worst > 1e-6, "{}", rep.lines[0].render());
    }

    #[test]
    fn pair_suites_are_green_on_the_shipped_problems() {
        let pairs = standard_pairs(41).unwrap();
        assert_eq!(pairs.len(), 5);
        let d = derivative_suite(&pairs, 41);
        assert!(d.pass(), "{}", d.render());
        let s = self_concordance_suite(&pairs, 41);
        assert!(s.pass(), "{}", s.render());
        // The boundary line really sits at the equality case.
        let boundary = &s.lines[0];
        assert!((boundary.worst - 1.0).abs() <= 1e-4, "{}", boundary.render());
    }

    #[test]
    fn descent_margin_bookkeeping() {
        use crate::oracle::OracleCallCounts;
        let row = |iter: usize, f: f64, nu: Option<f64>, accepted: Option<bool>| TraceRecord {
            iter,
            f,
            nu,
            sigma: None,
            ratio: None,
            accepted,
            lambda_min_est: None,
            step: None,
            oracle_calls: OracleCallCounts::default(),
            wall_nanos: 0,
        };
        // ω(1) ≈ 0.3069; a drop of 0.4 over-satisfies, 0.2 violates.
        let trace = vec![
            row(0, 1.0, Some(1.0), Some(true)),
            row(1, 0.6, Some(1.0), Some(false)), // rejected: not scored
            row(2, 0.6, None, Some(true)),       // no ν recorded: not scored
            row(3, 0.6, Some(1.0), Some(true)),
        ];
        let margins = descent_margins(&trace, Some(0.4), 1.0);
        assert_eq!(margins.len(), 2);
        assert!(margins[0] < 0.0, "satisfied step should be negative: {}", margins[0]);
        assert!(margins[1] > 0.0, "violating step should be positive: {}", margins[1]);
    }

    #[test]
    fn run_scope_dispatch() {
        let all = run_scope("all", 7).unwrap();
        assert_eq!(all.len(), 4);
        assert!(all.iter().all(|r| r.pass()));
        assert!(run_scope("bogus", 7).is_err());
        let one = run_scope("scalar_identities", 7).unwrap();
        assert_eq!(one.len(), 1);
    }
}
