//! Run specifications: what to solve, with which method, from which seed.
//!
//! A [`RunSpec`] (plus the binary version) pins a run completely: the
//! instance is either loaded from disk or regenerated from the generator
//! block, the start point is sampled from `seed`, and every solver knob is
//! either an explicit override or a recorded default.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use sconcord::problems::{
    make_log_barrier, make_nmf_kl, make_nmf_mse, make_phase_retrieval, make_polynomial_saddle,
    ProblemInstance,
};

use crate::CliError;

pub const PROBLEMS: [&str; 5] =
    ["nmf_mse", "nmf_kl", "phase_retrieval", "polynomial_saddle", "log_barrier_demo"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    Rnm,
    ArmNewton,
    ArmNegcurv,
    ArmPrecondGd,
    Ippm,
    NewtonCg,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rnm => "rnm",
            Method::ArmNewton => "arm_newton",
            Method::ArmNegcurv => "arm_negcurv",
            Method::ArmPrecondGd => "arm_precond_gd",
            Method::Ippm => "ippm",
            Method::NewtonCg => "newton_cg",
        }
    }

    /// Which problems a method may run on. The Newton-CG driver assumes a
    /// convex self-concordant objective (only the barrier demo qualifies);
    /// the proximal wrapper assumes a weakly self-concordant objective with
    /// a recorded ℓ (only phase retrieval carries one). The RNM/ARM family
    /// works against any shipped (f, F) pair.
    pub fn compatible_with(self, problem: &str) -> bool {
        match self {
            Method::Rnm | Method::ArmNewton | Method::ArmNegcurv | Method::ArmPrecondGd => true,
            Method::NewtonCg => problem == "log_barrier_demo",
            Method::Ippm => problem == "phase_retrieval",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Instance-generation knobs. Every field is optional; per-problem defaults
/// are desk-scale, and `full_scale` switches the NMF sizes to the full
/// (100, 20, 10) protocol.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub r: Option<usize>,
    /// NMF-KL noise amplitude (default 0.01).
    pub noise: Option<f64>,
    /// Barrier-demo dimension (default 20).
    pub dim: Option<usize>,
    /// Barrier-demo quadratic weight (default 1.0).
    pub quad: Option<f64>,
    pub full_scale: bool,
}

impl GeneratorConfig {
    /// Reject flags that have no meaning for `problem`, so a typo'd grid
    /// does not silently generate something else.
    pub fn check_applicability(&self, problem: &str) -> Result<(), CliError> {
        let complain = |flag: &str| {
            Err(CliError::Usage(format!("--{flag} does not apply to problem {problem}")))
        };
        match problem {
            "nmf_mse" | "nmf_kl" => {
                if self.dim.is_some() {
                    return complain("dim");
                }
                if self.quad.is_some() {
                    return complain("quad");
                }
                if problem == "nmf_mse" && self.noise.is_some() {
                    return complain("noise");
                }
            }
            "phase_retrieval" => {
                for (set, flag) in [
                    (self.r.is_some(), "r"),
                    (self.noise.is_some(), "noise"),
                    (self.dim.is_some(), "dim"),
                    (self.quad.is_some(), "quad"),
                    (self.full_scale, "full-scale"),
                ] {
                    if set {
                        return complain(flag);
                    }
                }
            }
            "polynomial_saddle" => {
                for (set, flag) in [
                    (self.m.is_some(), "m"),
                    (self.n.is_some(), "n"),
                    (self.r.is_some(), "r"),
                    (self.noise.is_some(), "noise"),
                    (self.dim.is_some(), "dim"),
                    (self.quad.is_some(), "quad"),
                    (self.full_scale, "full-scale"),
                ] {
                    if set {
                        return complain(flag);
                    }
                }
            }
            "log_barrier_demo" => {
                for (set, flag) in [
                    (self.m.is_some(), "m"),
                    (self.n.is_some(), "n"),
                    (self.r.is_some(), "r"),
                    (self.noise.is_some(), "noise"),
                    (self.full_scale, "full-scale"),
                ] {
                    if set {
                        return complain(flag);
                    }
                }
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unknown problem {other:?}; expected one of {}",
                    PROBLEMS.join(" | ")
                )));
            }
        }
        Ok(())
    }

    fn nmf_sizes(&self) -> (usize, usize, usize) {
        let (dm, dn, dr) = if self.full_scale { (100, 20, 10) } else { (20, 10, 5) };
        (self.m.unwrap_or(dm), self.n.unwrap_or(dn), self.r.unwrap_or(dr))
    }
}

/// Build the instance a spec describes, deterministically in `seed`.
pub fn generate(problem: &str, g: &GeneratorConfig, seed: u64) -> Result<ProblemInstance, CliError> {
    g.check_applicability(problem)?;
    let inst = match problem {
        "nmf_mse" => {
            let (m, n, r) = g.nmf_sizes();
            ProblemInstance::Nmf(make_nmf_mse(m, n, r, seed).map_err(CliError::failure)?)
        }
        "nmf_kl" => {
            let (m, n, r) = g.nmf_sizes();
            let noise = g.noise.unwrap_or(0.01);
            ProblemInstance::Nmf(make_nmf_kl(m, n, r, noise, seed).map_err(CliError::failure)?)
        }
        "phase_retrieval" => ProblemInstance::PhaseRetrieval(make_phase_retrieval(
            g.n.unwrap_or(4),
            g.m.unwrap_or(12),
            seed,
        )),
        "polynomial_saddle" => {
            ProblemInstance::PolynomialSaddle(make_polynomial_saddle(seed).map_err(CliError::failure)?)
        }
        "log_barrier_demo" => ProblemInstance::LogBarrier(make_log_barrier(
            g.dim.unwrap_or(20),
            g.quad.unwrap_or(1.0),
            seed,
        )),
        // check_applicability already rejected anything else
        other => unreachable!("problem {other} passed applicability"),
    };
    Ok(inst)
}

/// Solver overrides. `eps` is the method's primary tolerance (RNM tol, ARM
/// ε, Newton-CG ε₁, the prox target ε); everything else falls back to the
/// shipped defaults, which the report echoes after resolution.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub eps: Option<f64>,
    pub eps_g: Option<f64>,
    pub eps_h: Option<f64>,
    pub max_iters: Option<usize>,
    pub sigma0: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma3: Option<f64>,
    /// Newton-CG coarse tolerance ε₀ (defaults to ε₁).
    pub eps0: Option<f64>,
    /// Conditioning bound β; measured at the start point when absent.
    pub beta: Option<f64>,
    pub fail_prob: Option<f64>,
    /// Prox weight μ (default 2ℓ).
    pub mu: Option<f64>,
    /// Upper bound on f(z₀) − inf f for the prox budget (default f(z₀),
    /// valid because the shipped weak-SC objective is a sum of squares).
    pub gap_budget: Option<f64>,
    pub max_outer: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// Existing instance stem to load instead of regenerating.
    pub instance: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

/// A complete, reproducible description of one solver run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub problem: String,
    pub method: Method,
    /// Seeds the start-point draw (and the instance, when regenerating).
    pub seed: u64,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl RunSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if !PROBLEMS.contains(&self.problem.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown problem {:?}; expected one of {}",
                self.problem,
                PROBLEMS.join(" | ")
            )));
        }
        if !self.method.compatible_with(&self.problem) {
            return Err(CliError::Usage(format!(
                "method {} is not applicable to problem {}: newton_cg needs a convex \
                 self-concordant objective (log_barrier_demo), ippm a weakly self-concordant \
                 one (phase_retrieval)",
                self.method, self.problem
            )));
        }
        Ok(())
    }
}
