//! Drives one solver run described by a [`RunSpec`] and renders its two
//! artifacts: the report JSON and the trace CSV.
//!
//! All methods share the same trace schema; columns a method does not
//! produce stay empty (see `sconcord::report::TRACE_COLUMNS`).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use sconcord::arm::{arm_solve, ArmConfig, ArmOption};
use sconcord::ippm::{ippm_solve, IppmConfig};
use sconcord::newton_cg::{newton_cg_solve, NewtonCgCertificate, NewtonCgConfig};
use sconcord::oracle::{CountingOracle, Oracle, OracleCallCounts, ReferencePair};
use sconcord::problems::ProblemInstance;
use sconcord::report::{trace_header_line, trace_schema_fingerprint, SolveReport, TRACE_COLUMNS};
use sconcord::rnm::{rnm_solve, RnmConfig};

use crate::spec::{generate, Method, RunSpec};
use crate::CliError;

/// Start points are drawn from a stream distinct from the generator's, so a
/// regenerated instance and its start never alias the same ChaCha draws.
const X0_STREAM: u64 = 0x5eed_ba5e;

/// Version string stamped into every report. The build script supplies the
/// commit when the artifact is built inside a checkout.
pub fn artifact_version() -> String {
    let commit = option_env!("SCONCORD_BUILD_COMMIT").unwrap_or("untracked");
    format!("sconcord-{}+g{}", env!("CARGO_PKG_VERSION"), commit)
}

pub struct RunOutcome {
    pub report: Value,
    pub trace_csv: String,
    pub status: String,
    pub final_f: f64,
    pub gap: Option<f64>,
    /// (iter, f, wall_nanos) per trace row, for bench aggregation.
    pub trajectory: Vec<(usize, f64, u64)>,
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x == f64::NEG_INFINITY => "-inf".into(),
        Some(x) if x == f64::INFINITY => "inf".into(),
        Some(x) => format!("{x}"),
    }
}

/// One CSV row in TRACE_COLUMNS order with explicit empties.
#[allow(clippy::too_many_arguments)]
fn csv_row(
    iter: usize,
    f: f64,
    nu: Option<f64>,
    sigma: Option<f64>,
    ratio: Option<f64>,
    accepted: Option<bool>,
    lambda_min_est: Option<f64>,
    step: Option<f64>,
    grad_calls: Option<u64>,
    hess_calls: Option<u64>,
    hvp_calls: Option<u64>,
    wall_nanos: u64,
) -> String {
    let cells = [
        iter.to_string(),
        format!("{f}"),
        fmt_opt(nu),
        fmt_opt(sigma),
        fmt_opt(ratio),
        accepted.map(|b| b.to_string()).unwrap_or_default(),
        fmt_opt(lambda_min_est),
        fmt_opt(step),
        grad_calls.map(|c| c.to_string()).unwrap_or_default(),
        hess_calls.map(|c| c.to_string()).unwrap_or_default(),
        hvp_calls.map(|c| c.to_string()).unwrap_or_default(),
        wall_nanos.to_string(),
    ];
    debug_assert_eq!(cells.len(), TRACE_COLUMNS.len());
    cells.join(",")
}

fn trace_file(rows: Vec<String>) -> String {
    let mut out = String::new();
    out.push_str(&trace_header_line());
    out.push('\n');
    out.push_str(&TRACE_COLUMNS.join(","));
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// β with β² ≥ cond(H), measured by a dense eigendecomposition of the
/// start-point Hessian (demo dimensions make this cheap), with 20% headroom.
fn measured_beta(h: &DMatrix<f64>) -> Result<f64, CliError> {
    let eig = h.clone().symmetric_eigen().eigenvalues;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in eig.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(lo > 0.0) {
        return Err(CliError::failure_msg(format!(
            "start-point Hessian is not positive definite (λ_min = {lo:.3e}); \
             pass an explicit beta"
        )));
    }
    Ok(((hi / lo).sqrt() * 1.2).max(1.001))
}

fn calls_json(c: OracleCallCounts) -> Value {
    json!({ "value": c.value, "gradient": c.gradient, "hessian": c.hessian, "hvp": c.hvp })
}

/// Everything a method hands back for report/trace assembly.
struct MethodOutput {
    status: String,
    final_f: f64,
    iterations: usize,
    oracle_calls: OracleCallCounts,
    reference_calls: Option<OracleCallCounts>,
    hvp_count: u64,
    wall_nanos: u64,
    final_nu: Option<f64>,
    min_nu: Option<f64>,
    outer_iterations: Option<usize>,
    outer_budget: Option<f64>,
    certificate: Option<String>,
    resolved_config: Value,
    rows: Vec<String>,
    trajectory: Vec<(usize, f64, u64)>,
}

fn from_solve_report(rep: &SolveReport, deterministic: bool) -> (Vec<String>, Vec<(usize, f64, u64)>) {
    let mut rows = Vec::with_capacity(rep.trace.len());
    let mut traj = Vec::with_capacity(rep.trace.len());
    for r in &rep.trace {
        let wall = if deterministic { 0 } else { r.wall_nanos };
        let mut r2 = r.clone();
        r2.wall_nanos = wall;
        rows.push(r2.to_csv_row());
        traj.push((r.iter, r.f, wall));
    }
    (rows, traj)
}

fn run_rnm(pair: &ReferencePair, x0: &DVector<f64>, spec: &RunSpec, det: bool) -> Result<MethodOutput, CliError> {
    let s = &spec.solver;
    let cfg = RnmConfig { tol: s.eps.unwrap_or(1e-8), max_iters: s.max_iters.unwrap_or(500) };
    let rep = rnm_solve(pair, x0, &cfg).map_err(CliError::failure)?;
    let (rows, trajectory) = from_solve_report(&rep, det);
    Ok(MethodOutput {
        status: rep.status.to_string(),
        final_f: rep.best_f,
        iterations: rep.iterations,
        oracle_calls: rep.oracle_calls,
        reference_calls: Some(rep.reference_calls),
        hvp_count: rep.oracle_calls.hvp + rep.reference_calls.hvp,
        wall_nanos: if det { 0 } else { rep.wall_nanos },
        final_nu: rep.final_nu,
        min_nu: Some(rep.min_nu),
        outer_iterations: None,
        outer_budget: None,
        certificate: None,
        resolved_config: serde_json::to_value(&cfg).map_err(CliError::failure)?,
        rows,
        trajectory,
    })
}

fn run_arm(pair: &ReferencePair, x0: &DVector<f64>, spec: &RunSpec, det: bool) -> Result<MethodOutput, CliError> {
    let s = &spec.solver;
    let mut cfg = ArmConfig {
        kappa: pair.kappa,
        kappa_ref: pair.kappa_ref,
        option: match spec.method {
            Method::ArmNewton => ArmOption::Newton,
            Method::ArmNegcurv => ArmOption::NegCurv,
            Method::ArmPrecondGd => ArmOption::PrecondGd,
            _ => unreachable!("run_arm called for {}", spec.method),
        },
        ..ArmConfig::default()
    };
    // First-order tolerances default to 1e-4 here: the adaptive methods
    // polish ν slowly once the objective sits on its floating-point floor
    // (desk NMF bottoms out near ν ≈ 3e-5 with the gap already ≤ 1e-6), so
    // tighter defaults would report max_iters for runs that in fact
    // finished. Pass --eps to tighten.
    cfg.eps = s.eps.unwrap_or(1e-4);
    cfg.eps_g = s.eps_g.unwrap_or(1e-4);
    if let Some(v) = s.eps_h {
        cfg.eps_h = v;
    }
    if let Some(v) = s.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = s.sigma0 {
        cfg.sigma0 = v;
    }
    if let Some(v) = s.eta1 {
        cfg.eta1 = v;
    }
    if let Some(v) = s.eta2 {
        cfg.eta2 = v;
    }
    if let Some(v) = s.gamma1 {
        cfg.gamma1 = v;
    }
    if let Some(v) = s.gamma2 {
        cfg.gamma2 = v;
    }
    if let Some(v) = s.gamma3 {
        cfg.gamma3 = v;
    }
    let rep = arm_solve(pair, x0, &cfg, None).map_err(CliError::failure)?;
    let (rows, trajectory) = from_solve_report(&rep, det);
    Ok(MethodOutput {
        status: rep.status.to_string(),
        final_f: rep.best_f,
        iterations: rep.iterations,
        oracle_calls: rep.oracle_calls,
        reference_calls: Some(rep.reference_calls),
        hvp_count: rep.oracle_calls.hvp + rep.reference_calls.hvp,
        wall_nanos: if det { 0 } else { rep.wall_nanos },
        final_nu: rep.final_nu,
        min_nu: Some(rep.min_nu),
        outer_iterations: None,
        outer_budget: None,
        certificate: None,
        resolved_config: serde_json::to_value(&cfg).map_err(CliError::failure)?,
        rows,
        trajectory,
    })
}

fn run_newton_cg(pair: &ReferencePair, x0: &DVector<f64>, spec: &RunSpec) -> Result<MethodOutput, CliError> {
    let s = &spec.solver;
    let eps1 = s.eps.unwrap_or(1e-8);
    let beta = match s.beta {
        Some(b) => b,
        None => measured_beta(&pair.objective.hessian(x0))?,
    };
    let cfg = NewtonCgConfig {
        kappa: pair.kappa,
        eps0: s.eps0.unwrap_or(eps1),
        eps1,
        beta,
        fail_prob: s.fail_prob.unwrap_or(0.01),
        max_iters: s.max_iters.unwrap_or(400),
        hvp_only: false,
    };
    let (counted, counters) = CountingOracle::wrap(pair.objective.clone());
    let rep = newton_cg_solve(counted, x0, &cfg).map_err(CliError::failure)?;
    let final_f = rep.trace.last().map(|it| it.f).unwrap_or_else(|| pair.objective.value(&rep.y));
    let rows: Vec<String> = rep
        .trace
        .iter()
        .map(|it| {
            csv_row(
                it.k,
                it.f,
                Some(it.rho.max(0.0).sqrt()),
                None,
                None,
                Some(true),
                None,
                it.t,
                None,
                None,
                None,
                0,
            )
        })
        .collect();
    let trajectory = rep.trace.iter().map(|it| (it.k, it.f, 0)).collect();
    Ok(MethodOutput {
        status: "converged".into(),
        final_f,
        iterations: rep.iterations,
        oracle_calls: counters.snapshot(),
        reference_calls: None,
        hvp_count: rep.hvp_count,
        wall_nanos: 0,
        final_nu: rep.trace.last().map(|it| it.rho.max(0.0).sqrt()),
        min_nu: None,
        outer_iterations: None,
        outer_budget: None,
        certificate: Some(
            match rep.certificate {
                NewtonCgCertificate::EarlyExitAtX0 => "early_exit_at_x0",
                NewtonCgCertificate::Converged => "converged",
            }
            .into(),
        ),
        resolved_config: serde_json::to_value(&cfg).map_err(CliError::failure)?,
        rows,
        trajectory,
    })
}

fn run_ippm(
    instance: &ProblemInstance,
    pair: &ReferencePair,
    x0: &DVector<f64>,
    spec: &RunSpec,
) -> Result<MethodOutput, CliError> {
    let ProblemInstance::PhaseRetrieval(inst) = instance else {
        return Err(CliError::Usage("ippm needs a weakly self-concordant problem".into()));
    };
    let s = &spec.solver;
    let ell = inst.ell;
    let mu = s.mu.unwrap_or(2.0 * ell);
    let eps = s.eps.unwrap_or(1e-3);
    let (counted, counters) = CountingOracle::wrap(pair.objective.clone());
    let f0 = counted.value(x0);
    // inf f = 0 for the noiseless sum-of-squares objective, so f(z₀) is a
    // valid gap bound out of the box.
    let gap_budget = s.gap_budget.unwrap_or(f0.max(1e-6));
    let beta = match s.beta {
        Some(b) => b,
        None => {
            let mut h = counted.hessian(x0);
            for i in 0..h.nrows() {
                h[(i, i)] += mu;
            }
            measured_beta(&h)?
        }
    };
    let cfg = IppmConfig {
        kappa: pair.kappa,
        ell,
        mu,
        eps,
        beta,
        fail_prob: s.fail_prob.unwrap_or(0.01),
        gap_budget,
        max_outer: s.max_outer.unwrap_or(30_000),
    };
    let rep = ippm_solve(counted.clone(), x0, &cfg).map_err(CliError::failure)?;
    let final_f = counted.value(&rep.y);
    let outer_budget = (8.0 * mu * gap_budget / ((mu - ell) * eps * eps)).floor() + 2.0;
    let rows: Vec<String> = rep
        .trace
        .iter()
        .map(|r| {
            csv_row(
                r.j,
                r.f,
                None,
                None,
                None,
                Some(true),
                None,
                None,
                None,
                None,
                Some(r.hvp_cumulative),
                0,
            )
        })
        .collect();
    let trajectory = rep.trace.iter().map(|r| (r.j, r.f, 0)).collect();
    Ok(MethodOutput {
        status: "converged".into(),
        final_f,
        iterations: rep.outer_iterations,
        oracle_calls: counters.snapshot(),
        reference_calls: None,
        hvp_count: rep.hvp_count,
        wall_nanos: 0,
        final_nu: Some(rep.nu),
        min_nu: None,
        outer_iterations: Some(rep.outer_iterations),
        outer_budget: Some(outer_budget),
        certificate: Some("early_exit_at_x0".into()),
        resolved_config: serde_json::to_value(&cfg).map_err(CliError::failure)?,
        rows,
        trajectory,
    })
}

/// Run the spec end to end and assemble both artifacts in memory.
pub fn execute(spec: &RunSpec, deterministic: bool) -> Result<RunOutcome, CliError> {
    spec.validate()?;
    let instance = match &spec.outputs.instance {
        Some(stem) => {
            let inst = ProblemInstance::load(stem).map_err(CliError::failure)?;
            if inst.kind() != spec.problem {
                return Err(CliError::Usage(format!(
                    "instance at {} is {}, but the spec says {}",
                    stem.display(),
                    inst.kind(),
                    spec.problem
                )));
            }
            inst
        }
        None => generate(&spec.problem, &spec.generator, spec.seed)?,
    };
    let pair = instance.build_pair();
    let sampler = pair
        .sampler
        .as_ref()
        .ok_or_else(|| CliError::failure_msg("problem has no start-point sampler"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ X0_STREAM);
    let x0 = sampler.sample(&mut rng);

    let out = match spec.method {
        Method::Rnm => run_rnm(&pair, &x0, spec, deterministic)?,
        Method::ArmNewton | Method::ArmNegcurv | Method::ArmPrecondGd => {
            run_arm(&pair, &x0, spec, deterministic)?
        }
        Method::NewtonCg => run_newton_cg(&pair, &x0, spec)?,
        Method::Ippm => run_ippm(&instance, &pair, &x0, spec)?,
    };

    let gap = instance.optimal_value_hint().map(|h| out.final_f - h);
    let mut result = json!({
        "status": out.status,
        "final_f": out.final_f,
        "iterations": out.iterations,
        "oracle_calls": calls_json(out.oracle_calls),
        "reference_calls": out.reference_calls.map(calls_json),
        "hvp_count": out.hvp_count,
        "final_nu": out.final_nu,
        "min_nu": out.min_nu,
        "outer_iterations": out.outer_iterations,
        "outer_budget": out.outer_budget,
        "certificate": out.certificate,
        "wall_nanos": out.wall_nanos,
    });
    if let Some(g) = gap {
        result["gap"] = json!(g);
    }
    // The echo drops the artifact destinations: a run is identified by
    // problem/method/seed/configs (plus the instance source), not by where
    // its files land, and reports must be byte-identical across locations.
    let spec_echo = {
        let mut copy = spec.clone();
        copy.outputs.report = None;
        copy.outputs.trace = None;
        serde_json::to_value(&copy).map_err(CliError::failure)?
    };
    let report = json!({
        "schema": "sconcord.report.v1",
        "artifact_version": artifact_version(),
        "trace_schema_fingerprint": trace_schema_fingerprint(),
        "spec": spec_echo,
        "resolved_config": out.resolved_config,
        "result": result,
    });
    Ok(RunOutcome {
        report,
        trace_csv: trace_file(out.rows),
        status: out.status,
        final_f: out.final_f,
        gap,
        trajectory: out.trajectory,
    })
}

/// Serialize the report with a trailing newline (files diff cleanly).
pub fn report_to_string(report: &Value) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}
