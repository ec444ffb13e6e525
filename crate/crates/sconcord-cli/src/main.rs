//! `sconcord` — generate instances, run solvers, verify invariants, and
//! benchmark method grids.
//!
//! Exit codes: 0 success, 1 run/suite failure, 2 usage error.

mod bench;
mod run;
mod spec;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use sconcord::par;
use sconcord::problems::ProblemInstance;

use crate::bench::{run_bench, BenchGrid};
use crate::run::{execute, report_to_string};
use crate::spec::{generate, GeneratorConfig, Method, RunSpec, SolverConfig};

/// Failures that should exit 2 (caller mistakes) vs 1 (runs that went bad).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(anyhow::Error),
}

impl CliError {
    pub fn failure(e: impl std::error::Error + Send + Sync + 'static) -> Self {
        CliError::Failure(anyhow::Error::new(e))
    }

    pub fn failure_msg(m: impl Into<String>) -> Self {
        CliError::Failure(anyhow::anyhow!(m.into()))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Failure(e) => write!(f, "{e:#}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "sconcord",
    version,
    about = "Second-order solvers for objectives that are self-concordant \
             relative to a convex reference"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a problem instance (JSON sidecar + binary matrix container)
    Gen(GenArgs),
    /// Run one solver; writes a report JSON and a trace CSV
    Solve(Box<SolveArgs>),
    /// Run invariant suites and print worst-case margins
    Verify(VerifyArgs),
    /// Run a methods × seeds grid and aggregate median trajectories
    Bench(BenchArgs),
}

/// Generator flags shared by `gen` and `bench`. Only the flags that apply
/// to the chosen problem are accepted.
#[derive(Args)]
struct SizeArgs {
    /// Rows (NMF) or measurement count (phase retrieval)
    #[arg(long)]
    m: Option<usize>,
    /// Columns (NMF) or signal dimension (phase retrieval)
    #[arg(long)]
    n: Option<usize>,
    /// NMF factorization rank
    #[arg(long)]
    r: Option<usize>,
    /// NMF-KL noise amplitude (default 0.01)
    #[arg(long)]
    noise: Option<f64>,
    /// Barrier-demo dimension (default 20)
    #[arg(long)]
    dim: Option<usize>,
    /// Barrier-demo quadratic weight (default 1.0)
    #[arg(long)]
    quad: Option<f64>,
    /// Full-scale NMF sizes (100, 20, 10) instead of desk scale (20, 10, 5)
    #[arg(long)]
    full_scale: bool,
}

impl SizeArgs {
    fn into_generator(self) -> GeneratorConfig {
        GeneratorConfig {
            m: self.m,
            n: self.n,
            r: self.r,
            noise: self.noise,
            dim: self.dim,
            quad: self.quad,
            full_scale: self.full_scale,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// nmf_mse | nmf_kl | phase_retrieval | polynomial_saddle | log_barrier_demo
    problem: String,
    #[command(flatten)]
    size: SizeArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output stem; writes {out}.json and {out}.scmx
    #[arg(long)]
    out: PathBuf,
}

/// Solver overrides shared by `solve` and `bench`; unset flags fall back to
/// the shipped defaults, which the report echoes.
#[derive(Args)]
struct SolverArgs {
    /// Primary tolerance (RNM tol 1e-8, ARM ε 1e-4, Newton-CG ε₁ 1e-8,
    /// prox target ε 1e-3)
    #[arg(long)]
    eps: Option<f64>,
    /// ARM negcurv gradient tolerance ε_g (default 1e-4)
    #[arg(long)]
    eps_g: Option<f64>,
    /// ARM negcurv curvature tolerance ε_H
    #[arg(long)]
    eps_h: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    eta1: Option<f64>,
    #[arg(long)]
    eta2: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long)]
    gamma3: Option<f64>,
    /// Newton-CG coarse tolerance ε₀ (defaults to ε₁)
    #[arg(long)]
    eps0: Option<f64>,
    /// Conditioning bound β (measured at the start point when omitted)
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    fail_prob: Option<f64>,
    /// Prox weight μ (default 2ℓ)
    #[arg(long)]
    mu: Option<f64>,
    /// Upper bound on f(z₀) − inf f for the prox budget (default f(z₀))
    #[arg(long)]
    gap_budget: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
}

impl SolverArgs {
    fn merge_into(&self, cfg: &mut SolverConfig) {
        macro_rules! merge {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = Some(v); })*
            };
        }
        merge!(
            eps, eps_g, eps_h, max_iters, sigma0, eta1, eta2, gamma1, gamma2, gamma3, eps0,
            beta, fail_prob, mu, gap_budget, max_outer
        );
    }
}

#[derive(Args)]
struct SolveArgs {
    /// JSON RunSpec file (alternative to --instance/--method)
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Instance stem created by `gen`
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Start-point seed (and instance seed when regenerating)
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Report JSON path (default: {instance}.{method}.report.json)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Trace CSV path (default: {instance}.{method}.trace.csv)
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Force sequential numerics and zero all wall-clock fields
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// scalar_identities | derivatives | self_concordance | numerics | all
    #[arg(default_value = "all")]
    scope: String,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Problem to run the grid on
    #[arg(long)]
    problem: String,
    /// Comma-separated methods, e.g. rnm,arm_newton,arm_negcurv
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    methods: Vec<Method>,
    /// Number of seeds (instances seed0..seed0+seeds)
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed0: u64,
    #[command(flatten)]
    size: SizeArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Directory for per-run artifacts and aggregate.csv
    #[arg(long)]
    out_dir: PathBuf,
    /// Directory of external baseline CSVs (iter, f, wall_nanos) to join
    #[arg(long)]
    baseline_dir: Option<PathBuf>,
    /// Force sequential numerics and zero all wall-clock fields
    #[arg(long)]
    deterministic: bool,
}

fn cmd_gen(a: GenArgs) -> Result<(), CliError> {
    let g = a.size.into_generator();
    let inst = generate(&a.problem, &g, a.seed)?;
    inst.save(&a.out).map_err(CliError::failure)?;
    let (json_path, bin_path) = ProblemInstance::paths(&a.out);
    println!(
        "wrote {} and {} ({}, dim {}, seed {})",
        json_path.display(),
        bin_path.display(),
        inst.kind(),
        inst.dim(),
        inst.seed()
    );
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> Result<(), CliError> {
    let mut spec: RunSpec = match (&a.spec, &a.instance, a.method) {
        (Some(path), _, _) => {
            let text = fs::read_to_string(path).map_err(CliError::failure)?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Usage(format!("malformed run spec {}: {e}", path.display()))
            })?
        }
        (None, Some(stem), Some(method)) => {
            let inst = ProblemInstance::load(stem).map_err(CliError::failure)?;
            let mut spec = RunSpec {
                problem: inst.kind().to_string(),
                method,
                seed: a.seed.unwrap_or(0),
                generator: GeneratorConfig::default(),
                solver: SolverConfig::default(),
                outputs: Default::default(),
            };
            spec.outputs.instance = Some(stem.clone());
            spec
        }
        _ => {
            return Err(CliError::Usage(
                "solve needs either --spec FILE or both --instance STEM and --method M".into(),
            ))
        }
    };
    // Explicit flags override the spec file.
    if let Some(m) = a.method {
        spec.method = m;
    }
    if let Some(stem) = &a.instance {
        spec.outputs.instance = Some(stem.clone());
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    a.solver.merge_into(&mut spec.solver);
    if let Some(p) = &a.report {
        spec.outputs.report = Some(p.clone());
    }
    if let Some(p) = &a.trace {
        spec.outputs.trace = Some(p.clone());
    }
    spec.validate()?;

    if a.deterministic {
        par::force_sequential(true);
    }
    let outcome = execute(&spec, a.deterministic)?;

    let base = spec
        .outputs
        .instance
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}_s{}", spec.problem, spec.seed)));
    let report_path = spec
        .outputs
        .report
        .clone()
        .unwrap_or_else(|| base.with_extension(format!("{}.report.json", spec.method)));
    let trace_path = spec
        .outputs
        .trace
        .clone()
        .unwrap_or_else(|| base.with_extension(format!("{}.trace.csv", spec.method)));
    fs::write(&report_path, report_to_string(&outcome.report)).map_err(CliError::failure)?;
    fs::write(&trace_path, &outcome.trace_csv).map_err(CliError::failure)?;

    let gap_text = match outcome.gap {
        Some(g) => format!("{g:.3e}"),
        None => "n/a".into(),
    };
    println!(
        "{} on {} seed {}: status {}, final f {:.6e}, gap {gap_text}; report {}, trace {}",
        spec.method,
        spec.problem,
        spec.seed,
        outcome.status,
        outcome.final_f,
        report_path.display(),
        trace_path.display()
    );
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let reports = sconcord::verify::run_scope(&a.scope, a.seed).map_err(|e| match e {
        sconcord::Error::InvalidConfig(m) => CliError::Usage(m),
        other => CliError::failure(other),
    })?;
    let mut ok = true;
    for rep in &reports {
        print!("{}", rep.render());
        ok &= rep.pass();
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::failure_msg("verification failed (see FAIL lines above)"))
    }
}

fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    if a.deterministic {
        par::force_sequential(true);
    }
    let mut solver = SolverConfig::default();
    a.solver.merge_into(&mut solver);
    let grid = BenchGrid {
        problem: a.problem,
        methods: a.methods,
        seeds: a.seeds,
        seed0: a.seed0,
        generator: a.size.into_generator(),
        solver,
        out_dir: a.out_dir,
        baseline_dir: a.baseline_dir,
        deterministic: a.deterministic,
    };
    run_bench(&grid)
}

fn main() {
    if let Ok(threads) = std::env::var("SCONCORD_THREADS") {
        match threads.trim().parse::<usize>() {
            Ok(n) => par::configure_threads(n),
            Err(_) => {
                eprintln!("error: SCONCORD_THREADS must be a non-negative integer, got {threads:?}");
                std::process::exit(2);
            }
        }
    }
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Solve(a) => cmd_solve(*a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            std::process::exit(2);
        }
        Err(CliError::Failure(e)) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
