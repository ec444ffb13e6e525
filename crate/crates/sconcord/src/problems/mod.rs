//! Benchmark objectives with matching convex references, samplers, and
//! seed-deterministic generators, plus instance (de)serialization.
//!
//! Every problem exposes a [`ReferencePair`] via `build_pair`, so solvers and
//! the verification suite never special-case a problem type.

pub mod io;
pub mod log_barrier;
pub mod nmf;
pub mod phase;
pub mod poly;
pub mod smooth_abs;

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::oracle::ReferencePair;
use crate::{Error, Result};

pub use log_barrier::{log_barrier_oracles, make_log_barrier, LogBarrierInstance};
pub use nmf::{make_nmf_kl, make_nmf_mse, nmf_oracles, NmfInstance, NmfLoss};
pub use phase::{make_phase_retrieval, phase_oracles, PhaseRetrievalInstance};
pub use poly::{
    make_polynomial_saddle, polynomial_reference_fit, saddle_oracles, PolynomialReference,
    SaddleInstance,
};
pub use smooth_abs::{smooth_abs_eval, SmoothAbs, SmoothAbsOracle};

/// A generated problem instance of any supported kind.
#[derive(Debug, Clone)]
pub enum ProblemInstance {
    Nmf(NmfInstance),
    PhaseRetrieval(PhaseRetrievalInstance),
    PolynomialSaddle(SaddleInstance),
    LogBarrier(LogBarrierInstance),
}

/// Scalar metadata stored next to the binary matrix container. The `kind`
/// tag doubles as the CLI problem name.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Sidecar {
    NmfMse {
        m: usize,
        n: usize,
        r: usize,
        barrier_weight: f64,
        quartic_weight: f64,
        optimal_value_hint: Option<f64>,
        seed: u64,
    },
    NmfKl {
        m: usize,
        n: usize,
        r: usize,
        barrier_weight: f64,
        quartic_weight: f64,
        optimal_value_hint: Option<f64>,
        seed: u64,
    },
    PhaseRetrieval {
        n: usize,
        m: usize,
        ell: f64,
        kappa: f64,
        seed: u64,
    },
    PolynomialSaddle {
        degree_bound: u32,
        weight: f64,
        seed: u64,
    },
    LogBarrierDemo {
        dim: usize,
        quad: f64,
        linear: Vec<f64>,
        seed: u64,
        optimal_value: f64,
    },
}

impl ProblemInstance {
    /// CLI-facing problem name.
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemInstance::Nmf(i) => match i.loss {
                NmfLoss::Frobenius => "nmf_mse",
                NmfLoss::Kl => "nmf_kl",
            },
            ProblemInstance::PhaseRetrieval(_) => "phase_retrieval",
            ProblemInstance::PolynomialSaddle(_) => "polynomial_saddle",
            ProblemInstance::LogBarrier(_) => "log_barrier_demo",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProblemInstance::Nmf(i) => i.dim(),
            ProblemInstance::PhaseRetrieval(i) => i.dim(),
            ProblemInstance::PolynomialSaddle(_) => 2,
            ProblemInstance::LogBarrier(i) => i.dim,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ProblemInstance::Nmf(i) => i.seed,
            ProblemInstance::PhaseRetrieval(i) => i.seed,
            ProblemInstance::PolynomialSaddle(i) => i.seed,
            ProblemInstance::LogBarrier(i) => i.seed,
        }
    }

    /// The optimal objective value when the generator knows it (exactly for
    /// the barrier demo, the saddle, and noiseless plants; an attained
    /// Eckart–Young floor for NMF-MSE; absent for noisy NMF-KL).
    pub fn optimal_value_hint(&self) -> Option<f64> {
        match self {
            ProblemInstance::Nmf(i) => i.optimal_value_hint,
            // Targets are planted without noise, so f(z⋆) = 0 exactly.
            ProblemInstance::PhaseRetrieval(_) => Some(0.0),
            // min of x₁² − x₂² + x₂⁴ is −1/4 at (0, ±1/√2).
            ProblemInstance::PolynomialSaddle(_) => Some(-0.25),
            ProblemInstance::LogBarrier(i) => Some(i.optimal_value),
        }
    }

    /// Objective/reference pair with sampler and constants for this instance.
    pub fn build_pair(&self) -> ReferencePair {
        match self {
            ProblemInstance::Nmf(i) => nmf_oracles(i),
            ProblemInstance::PhaseRetrieval(i) => phase_oracles(i),
            ProblemInstance::PolynomialSaddle(i) => saddle_oracles(i),
            ProblemInstance::LogBarrier(i) => log_barrier_oracles(i),
        }
    }

    fn sidecar(&self) -> Sidecar {
        match self {
            ProblemInstance::Nmf(i) => {
                let common = (
                    i.m,
                    i.n,
                    i.r,
                    i.barrier_weight,
                    i.quartic_weight,
                    i.optimal_value_hint,
                    i.seed,
                );
                match i.loss {
                    NmfLoss::Frobenius => Sidecar::NmfMse {
                        m: common.0,
                        n: common.1,
                        r: common.2,
                        barrier_weight: common.3,
                        quartic_weight: common.4,
                        optimal_value_hint: common.5,
                        seed: common.6,
                    },
                    NmfLoss::Kl => Sidecar::NmfKl {
                        m: common.0,
                        n: common.1,
                        r: common.2,
                        barrier_weight: common.3,
                        quartic_weight: common.4,
                        optimal_value_hint: common.5,
                        seed: common.6,
                    },
                }
            }
            ProblemInstance::PhaseRetrieval(i) => Sidecar::PhaseRetrieval {
                n: i.n(),
                m: i.m(),
                ell: i.ell,
                kappa: i.kappa,
                seed: i.seed,
            },
            ProblemInstance::PolynomialSaddle(i) => Sidecar::PolynomialSaddle {
                degree_bound: i.reference.degree_bound,
                weight: i.reference.weight,
                seed: i.seed,
            },
            ProblemInstance::LogBarrier(i) => Sidecar::LogBarrierDemo {
                dim: i.dim,
                quad: i.quad,
                linear: i.linear.clone(),
                seed: i.seed,
                optimal_value: i.optimal_value,
            },
        }
    }

    /// Paths used by `save`/`load` for a given stem.
    pub fn paths(stem: &Path) -> (PathBuf, PathBuf) {
        (stem.with_extension("json"), stem.with_extension("scmx"))
    }

    /// Writes `{stem}.json` (scalars) and `{stem}.scmx` (matrices). Both files
    /// are produced even when the matrix container is empty, and identical
    /// instances serialize to byte-identical files.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let (json_path, bin_path) = Self::paths(stem);
        let mut text = serde_json::to_string_pretty(&self.sidecar())?;
        text.push('\n');
        std::fs::write(&json_path, text)?;
        let targets_mat;
        let matrices: Vec<(&str, &DMatrix<f64>)> = match self {
            ProblemInstance::Nmf(i) => vec![("Z", &i.z)],
            ProblemInstance::PhaseRetrieval(i) => {
                targets_mat =
                    DMatrix::from_column_slice(i.targets.len(), 1, i.targets.as_slice());
                vec![
                    ("AR", &i.sensing_real),
                    ("AI", &i.sensing_imag),
                    ("Y2", &targets_mat),
                ]
            }
            ProblemInstance::PolynomialSaddle(_) | ProblemInstance::LogBarrier(_) => vec![],
        };
        io::write_matrices(&bin_path, &matrices)
    }

    pub fn load(stem: &Path) -> Result<ProblemInstance> {
        let (json_path, bin_path) = Self::paths(stem);
        let text = std::fs::read_to_string(&json_path)?;
        let sidecar: Sidecar = serde_json::from_str(&text)?;
        let matrices = io::read_matrices(&bin_path)?;
        let loss_tag = if matches!(sidecar, Sidecar::NmfKl { .. }) {
            NmfLoss::Kl
        } else {
            NmfLoss::Frobenius
        };
        let instance = match sidecar {
            Sidecar::NmfMse {
                m,
                n,
                r,
                barrier_weight,
                quartic_weight,
                optimal_value_hint,
                seed,
            }
            | Sidecar::NmfKl {
                m,
                n,
                r,
                barrier_weight,
                quartic_weight,
                optimal_value_hint,
                seed,
            } => {
                let z = io::find_matrix(&matrices, "Z")?.clone();
                if z.nrows() != m || z.ncols() != n {
                    return Err(Error::MalformedInstance(format!(
                        "Z is {}x{} but sidecar says {m}x{n}",
                        z.nrows(),
                        z.ncols()
                    )));
                }
                ProblemInstance::Nmf(NmfInstance {
                    z,
                    m,
                    n,
                    r,
                    loss: loss_tag,
                    barrier_weight,
                    quartic_weight,
                    optimal_value_hint,
                    seed,
                })
            }
            Sidecar::PhaseRetrieval {
                n,
                m,
                ell,
                kappa,
                seed,
            } => {
                let ar = io::find_matrix(&matrices, "AR")?.clone();
                let ai = io::find_matrix(&matrices, "AI")?.clone();
                let y2 = io::find_matrix(&matrices, "Y2")?;
                if ar.shape() != (m, n) || ai.shape() != (m, n) || y2.nrows() != m {
                    return Err(Error::MalformedInstance(
                        "phase retrieval matrix shapes disagree with sidecar".into(),
                    ));
                }
                ProblemInstance::PhaseRetrieval(PhaseRetrievalInstance {
                    sensing_real: ar,
                    sensing_imag: ai,
                    targets: DVector::from_column_slice(y2.as_slice()),
                    ell,
                    kappa,
                    seed,
                })
            }
            Sidecar::PolynomialSaddle {
                degree_bound,
                weight,
                seed,
            } => ProblemInstance::PolynomialSaddle(SaddleInstance {
                reference: PolynomialReference {
                    degree_bound,
                    weight,
                },
                seed,
            }),
            Sidecar::LogBarrierDemo {
                dim,
                quad,
                linear,
                seed,
                optimal_value,
            } => {
                if linear.len() != dim {
                    return Err(Error::MalformedInstance(
                        "linear coefficient count disagrees with dim".into(),
                    ));
                }
                ProblemInstance::LogBarrier(LogBarrierInstance {
                    dim,
                    quad,
                    linear,
                    seed,
                    optimal_value,
                })
            }
        };
        Ok(instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn bits(xs: &[f64]) -> Vec<u64> {
        xs.iter().map(|x| x.to_bits()).collect()
    }

    #[test]
    fn every_kind_round_trips_through_disk() {
        let dir = tempdir().unwrap();
        let instances = vec![
            ProblemInstance::Nmf(make_nmf_mse(6, 4, 2, 11).unwrap()),
            ProblemInstance::Nmf(make_nmf_kl(5, 4, 2, 0.01, 12).unwrap()),
            ProblemInstance::PhaseRetrieval(make_phase_retrieval(3, 8, 13)),
            ProblemInstance::PolynomialSaddle(make_polynomial_saddle(14).unwrap()),
            ProblemInstance::LogBarrier(make_log_barrier(4, 0.5, 15)),
        ];
        for (idx, inst) in instances.iter().enumerate() {
            let stem = dir.path().join(format!("case{idx}"));
            inst.save(&stem).unwrap();
            let back = ProblemInstance::load(&stem).unwrap();
            assert_eq!(back.kind(), inst.kind());
            assert_eq!(back.dim(), inst.dim());
            assert_eq!(back.seed(), inst.seed());
            match (inst, &back) {
                (ProblemInstance::Nmf(a), ProblemInstance::Nmf(b)) => {
                    assert_eq!(bits(a.z.as_slice()), bits(b.z.as_slice()));
                    assert_eq!(a.barrier_weight.to_bits(), b.barrier_weight.to_bits());
                    assert_eq!(a.quartic_weight.to_bits(), b.quartic_weight.to_bits());
                    assert_eq!(
                        a.optimal_value_hint.map(f64::to_bits),
                        b.optimal_value_hint.map(f64::to_bits)
                    );
                }
                (ProblemInstance::PhaseRetrieval(a), ProblemInstance::PhaseRetrieval(b)) => {
                    assert_eq!(bits(a.sensing_real.as_slice()), bits(b.sensing_real.as_slice()));
                    assert_eq!(bits(a.sensing_imag.as_slice()), bits(b.sensing_imag.as_slice()));
                    assert_eq!(bits(a.targets.as_slice()), bits(b.targets.as_slice()));
                    assert_eq!(a.ell.to_bits(), b.ell.to_bits());
                }
                (ProblemInstance::PolynomialSaddle(a), ProblemInstance::PolynomialSaddle(b)) => {
                    assert_eq!(a.reference.weight.to_bits(), b.reference.weight.to_bits());
                    assert_eq!(a.reference.degree_bound, b.reference.degree_bound);
                }
                (ProblemInstance::LogBarrier(a), ProblemInstance::LogBarrier(b)) => {
                    assert_eq!(bits(&a.linear), bits(&b.linear));
                    assert_eq!(a.optimal_value.to_bits(), b.optimal_value.to_bits());
                }
                _ => panic!("kind changed across round trip"),
            }
            // Saving the loaded copy reproduces both files byte for byte.
            let stem2 = dir.path().join(format!("case{idx}_again"));
            back.save(&stem2).unwrap();
            let (j1, b1) = ProblemInstance::paths(&stem);
            let (j2, b2) = ProblemInstance::paths(&stem2);
            assert_eq!(std::fs::read(j1).unwrap(), std::fs::read(j2).unwrap());
            assert_eq!(std::fs::read(b1).unwrap(), std::fs::read(b2).unwrap());
        }
    }

    #[test]
    fn build_pair_dispatches_for_every_kind() {
        let instances = vec![
            ProblemInstance::Nmf(make_nmf_mse(6, 4, 2, 21).unwrap()),
            ProblemInstance::PhaseRetrieval(make_phase_retrieval(3, 8, 23)),
            ProblemInstance::PolynomialSaddle(make_polynomial_saddle(24).unwrap()),
            ProblemInstance::LogBarrier(make_log_barrier(4, 0.5, 25)),
        ];
        for inst in &instances {
            let pair = inst.build_pair();
            assert_eq!(pair.objective.dim(), inst.dim());
            assert_eq!(pair.reference.dim(), inst.dim());
            assert!(pair.kappa > 0.0);
        }
    }
}
