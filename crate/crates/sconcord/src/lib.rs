//! Second-order optimization for non-convex objectives that are
//! self-concordant *relative to a convex reference*.
//!
//! The setting: minimize f over the (open) domain of a convex reference F,
//! where the sum f + F is κ-self-concordant,
//!
//! ```text
//!   |∇³(f+F)(x)[h,h,h]| ≤ 2κ (∇²(f+F)(x)[h,h])^{3/2}.
//! ```
//!
//! The weakly self-concordant case is F = (ℓ/2)‖·‖². Four solvers share this
//! structure:
//!
//! * [`rnm`] — regularized Newton with the step size 1/(1+κν),
//! * [`arm`] — adaptive regularization that learns the reference weight σ,
//! * [`newton_cg`] — two-phase inexact Newton-CG with Lanczos-estimated
//!   condition bounds (convex case),
//! * [`ippm`] — inexact proximal point wrapping `newton_cg` for weakly
//!   self-concordant objectives.
//!
//! [`scalar`] holds the ω/ω⋆/Γ calculus shared by all of them, [`oracle`]
//! the derivative/self-concordance verification tools, [`numerics`] the
//! dense linear algebra (pivoted LLᵀ, Lanczos, fixed-count CG), and
//! [`problems`] the shipped test problems (NMF, phase retrieval, barrier
//! demos, a polynomial saddle).
//!
//! Everything is deterministic given a seed; the `parallel` feature only
//! fans independent runs out over threads.

pub mod arm;
pub mod error;
pub mod ippm;
pub mod newton_cg;
pub mod numerics;
pub mod oracle;
pub mod par;
pub mod problems;
pub mod report;
pub mod rnm;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
