//! Scalar calculus of self-concordance: the auxiliary functions
//!
//! ```text
//!   ω(z)  = z − log(1+z)          (z ≥ 0)
//!   ω⋆(z) = −z − log(1−z)         (0 ≤ z < 1, +∞ otherwise)
//! ```
//!
//! their Fenchel conjugacy ω⋆(z) = sup_t { zt − ω(t) } (attained at
//! t = z/(1−z)), the inverse map Γ, and the fixed constants used by the
//! two-phase Newton-CG driver.

use crate::{Error, Result};

/// ω(z) = z − log(1+z). Increasing and convex on z ≥ 0, ω(0) = 0.
///
/// Switches to the series z²/2 − z³/3 + z⁴/4 − z⁵/5 for tiny z to avoid the
/// cancellation in z − log1p(z).
pub fn omega(z: f64) -> f64 {
    assert!(z >= 0.0 && z.is_finite(), "omega: need finite z >= 0, got {z}");
    if z < 1e-3 {
        let z2 = z * z;
        z2 * (0.5 - z / 3.0 + z2 / 4.0 - z2 * z / 5.0)
    } else {
        z - z.ln_1p()
    }
}

/// ω⋆(z) = −z − log(1−z) for 0 ≤ z < 1; +∞ for z ≥ 1.
pub fn omega_star(z: f64) -> f64 {
    assert!(z >= 0.0 && !z.is_nan(), "omega_star: need z >= 0, got {z}");
    if z >= 1.0 {
        return f64::INFINITY;
    }
    if z < 1e-3 {
        let z2 = z * z;
        z2 * (0.5 + z / 3.0 + z2 / 4.0 + z2 * z / 5.0)
    } else {
        -z - (-z).ln_1p()
    }
}

/// κ⁻²·ω(κz), continuously extended to z²/2 at κ = 0.
pub fn scaled_omega(kappa: f64, z: f64) -> f64 {
    assert!(kappa >= 0.0, "scaled_omega: need kappa >= 0");
    if kappa == 0.0 {
        0.5 * z * z
    } else {
        omega(kappa * z) / (kappa * kappa)
    }
}

/// κ⁻²·ω⋆(κz), continuously extended to z²/2 at κ = 0.
pub fn scaled_omega_star(kappa: f64, z: f64) -> f64 {
    assert!(kappa >= 0.0, "scaled_omega_star: need kappa >= 0");
    if kappa == 0.0 {
        0.5 * z * z
    } else {
        omega_star(kappa * z) / (kappa * kappa)
    }
}

/// Γ(gap, κ): the unique t ≥ 0 with ω(t) = κ²·gap.
///
/// Every z in [0, Γ] then satisfies the quadratic lower bound
/// ω(z) ≥ z²/(2(1+Γ)), which converts ω-decreases into ε²-decreases.
/// Bisection to a tight bracket, then Newton polish; absolute tolerance
/// 1e−12. Γ(0, κ) = Γ(gap, 0) = 0.
pub fn gamma_f(gap: f64, kappa: f64) -> f64 {
    assert!(
        gap >= 0.0 && gap.is_finite() && kappa >= 0.0 && kappa.is_finite(),
        "gamma_f: need finite gap >= 0 and kappa >= 0, got gap={gap} kappa={kappa}"
    );
    let target = kappa * kappa * gap;
    if target == 0.0 {
        return 0.0;
    }
    // Bracket: ω grows without bound, roughly like t for large t.
    let mut hi = 1.0;
    while omega(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if omega(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton from the upper end: ω is convex with ω'(t) = t/(1+t), so the
    // iteration decreases monotonically onto the root.
    let mut t = hi;
    for _ in 0..60 {
        let step = (omega(t) - target) * (1.0 + t) / t;
        t -= step;
        if step.abs() <= 1e-13 {
            break;
        }
    }
    debug_assert!((omega(t) - target).abs() <= 1e-12 * (1.0 + target));
    t.max(0.0)
}

/// Constants of the two-phase Newton-CG analysis. Only α⋆, R₁, C₁, C₂ are
/// free; R₂, R₃, C₃ are derived:
///
/// ```text
///   R₂ = R₁/√(1−α⋆),   R₃ = (√(1−α⋆)/(1+α⋆))·R₁,   C₃ = (R₂⁻¹−1)/(R₂⁻¹−2).
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixConstants {
    pub alpha_star: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl AppendixConstants {
    /// Reference values: α⋆ = 10⁻⁴, R₁ = 0.49, C₁ = 9, C₂ = 0.95.
    pub fn standard() -> Self {
        Self::derive(1e-4, 0.49, 9.0, 0.95)
    }

    /// Derive the dependent constants from the free ones.
    pub fn derive(alpha_star: f64, r1: f64, c1: f64, c2: f64) -> Self {
        assert!(alpha_star > 0.0 && alpha_star < 1.0);
        assert!(r1 > 0.0 && r1 < 0.5);
        assert!(c2 > 0.0 && c2 < 1.0);
        let r2 = r1 / (1.0 - alpha_star).sqrt();
        let r3 = (1.0 - alpha_star).sqrt() / (1.0 + alpha_star) * r1;
        assert!(r2 < 0.5, "R2 = R1/sqrt(1-alpha_star) must stay below 1/2");
        let c3 = (r2.recip() - 1.0) / (r2.recip() - 2.0);
        Self { alpha_star, r1, r2, r3, c1, c2, c3 }
    }
}

impl Default for AppendixConstants {
    fn default() -> Self {
        Self::standard()
    }
}

/// Inverse of the ω⋆-argument map u ↦ u/(1+u) used by the conjugacy
/// identity; exposed for tests.
pub fn conjugate_argmax(z: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::InvalidConfig(format!(
            "conjugate argmax defined on [0,1), got {z}"
        )));
    }
    Ok(z / (1.0 - z))
}
