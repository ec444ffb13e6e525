//! Nonnegative matrix factorization in the flattened variable
//! v = (vec X, vec Y), X ∈ ℝ^{m×r}, Y ∈ ℝ^{r×n}, on the strictly positive
//! orthant. Two losses:
//!
//!   f₁(X,Y) = (1/2mn)‖Z − XY‖_F²            (frobenius)
//!   f₂(X,Y) = (1/mn) Σᵢⱼ D(Zᵢⱼ ‖ (XY)ᵢⱼ)    (kl), D(x‖y) = x log(x/y) − x + y
//!
//! paired with convex references:
//!
//!   MSE:  ℓ·[(‖X‖_F²+‖Y‖_F²+1)² − Σ log Xᵢₖ − Σ log Yₖⱼ], ℓ closed-form
//!   KL:   Σᵢ aᵢ·(−Σₖ log Xᵢₖ) + Σⱼ bⱼ·(−Σₖ log Yₖⱼ) + c_q·(‖X‖_F²+‖Y‖_F²+1)²
//!         with aᵢ = τ·Rᵢ/mn + margin, bⱼ = τ·Cⱼ/mn + margin (R/C row and
//!         column sums of Z, τ = 4), c_q fitted on the bilinear remainder
//!
//! The KL barrier weights come from the per-row/column curvature budget: in
//! log-scaled directions u = h_X./X, v = h_Y./Y each −log((XY)ᵢⱼ) term obeys
//! ∇²[h,h] ≥ −3·Sᵢⱼ and |∇³[h,h,h]| ≤ 7√2·Sᵢⱼ^{3/2} with
//! Sᵢⱼ = ‖uᵢ,·‖² + ‖v·,ⱼ‖², and (x+y)^{3/2} ≤ √2(x^{3/2}+y^{3/2}) folds the
//! double sum into rows and columns. A row barrier weight a then certifies a
//! unit self-concordance constant iff 2(a − 3w)^{3/2} ≥ 14w + 2a for the
//! row's mass w = Rᵢ/mn — solved numerically per row/column below. The
//! additive margin (≥ 1.25 even at w = 0) is what keeps the barrier's own
//! cubic term in check: a bare −c·log x is only c^{-1/2}-self-concordant.
//!
//! Each pair is 1-self-concordant; fitted weights are sampler artifacts and
//! re-verified on held-out samples.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::oracle::{LogUniformSampler, Oracle, ReferencePair};
use crate::problems::poly::polynomial_reference_fit;
use crate::Result;

/// Multiplier on the Z-proportional part of the KL barrier weights.
pub const KL_TAU: f64 = 4.0;

/// Smallest row/column barrier weight certifying the unit constant for a
/// row (or column) of the KL loss carrying mass `w` = (row sum of Z)/mn:
/// the least `a` with 2(a − 3w)^{3/2} ≥ 14w + 2a, padded by 5% and floored
/// at τ·w + 1.25 so the τ-scaled part stays intact.
fn kl_barrier_weight(tau: f64, w: f64) -> f64 {
    let ok = |a: f64| 2.0 * (a - 3.0 * w).powf(1.5) >= 14.0 * w + 2.0 * a;
    let mut lo = 3.0 * w + 1.0;
    if !ok(lo) {
        let mut hi = 3.0 * w + 4.0;
        while !ok(hi) {
            hi *= 2.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo = hi;
    }
    (1.05 * lo).max(tau * w + 1.25)
}

/// Single reference weight for the Frobenius pair, from a closed-form
/// curvature budget rather than sampling. Along h = (U, W) with
/// A = UY + XW, B = UW, R = XY − Z:
///
///   ∇²f₁[h,h]  = (‖A‖² + 2⟨R,B⟩)/mn,   |∇³f₁[h,h,h]| = 6|⟨A,B⟩|/mn,
///
/// and ‖B‖ ≤ ‖h‖²/2, ‖R‖ ≤ ‖v‖²/2 + ‖Z‖_F, so with the quartic's curvature
/// 4ℓ(‖v‖²+1)‖h‖² and cubic 24ℓ|⟨v,h⟩|‖h‖², writing s² = ‖A‖²/mn and
/// p² = c(‖v‖²+1)‖h‖², c = 4ℓ − max(½, ‖Z‖_F)/mn, the sharp elementary
/// bounds s·p² ≤ (2/3√3)(s²+p²)^{3/2} and t/(t²+1)^{3/2} ≤ 2/3√3 give
///
///   |∇³(f₁+quartic)| / 2(∇²(f₁+quartic))^{3/2}
///     ≤ 1/(√3·√mn·c) + 8ℓ/(√3·c^{3/2}),
///
/// so any ℓ pushing that sum below 1 certifies the non-barrier piece at the
/// unit constant. The −log part is only ℓ^{-1/2}-self-concordant on its
/// own, which floors the shared weight at 1.
fn mse_reference_weight(m: usize, n: usize, z: &DMatrix<f64>) -> f64 {
    let mn = (m * n) as f64;
    let rho = (0.5f64).max(z.norm()) / mn;
    let sqrt3 = 3.0_f64.sqrt();
    let ok = |l: f64| {
        let c = 4.0 * l - rho;
        c > 0.0 && 1.0 / (sqrt3 * mn.sqrt() * c) + 8.0 * l / (sqrt3 * c.powf(1.5)) <= 1.0
    };
    let mut hi = 0.25;
    while !ok(hi) {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (1.05 * hi).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NmfLoss {
    Frobenius,
    Kl,
}

#[derive(Debug, Clone)]
pub struct NmfInstance {
    pub z: DMatrix<f64>,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub loss: NmfLoss,
    /// Weight of the −Σ log barrier part of the reference: ℓ for MSE; for
    /// KL, the multiplier τ on the Z-proportional part of the row/column
    /// weights (an additive safety margin is derived at oracle build time).
    pub barrier_weight: f64,
    /// Weight of the (‖X‖_F²+‖Y‖_F²+1)² part (ℓ for MSE, c_q for KL).
    pub quartic_weight: f64,
    pub optimal_value_hint: Option<f64>,
    pub seed: u64,
}

impl NmfInstance {
    pub fn dim(&self) -> usize {
        self.m * self.r + self.r * self.n
    }
}

fn unpack(m: usize, n: usize, r: usize, v: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let x = DMatrix::from_column_slice(m, r, &v.as_slice()[..m * r]);
    let y = DMatrix::from_column_slice(r, n, &v.as_slice()[m * r..]);
    (x, y)
}

fn pack(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DVector<f64> {
    let mut v = Vec::with_capacity(x.len() + y.len());
    v.extend_from_slice(x.as_slice());
    v.extend_from_slice(y.as_slice());
    DVector::from_vec(v)
}

fn positive(v: &DVector<f64>) -> bool {
    v.iter().all(|&t| t > 0.0 && t.is_finite())
}

/// f₁ = (1/2mn)‖Z − XY‖_F².
#[derive(Debug, Clone)]
pub struct NmfMseOracle {
    pub z: DMatrix<f64>,
    pub r: usize,
}

impl NmfMseOracle {
    fn shape(&self) -> (usize, usize, usize) {
        (self.z.nrows(), self.z.ncols(), self.r)
    }
}

impl Oracle for NmfMseOracle {
    fn dim(&self) -> usize {
        let (m, n, r) = self.shape();
        m * r + r * n
    }
    fn value(&self, v: &DVector<f64>) -> f64 {
        if !self.in_domain(v) {
            return f64::INFINITY;
        }
        let (m, n, r) = self.shape();
        let (x, y) = unpack(m, n, r, v);
        let e = &x * &y - &self.z;
        e.norm_squared() / (2.0 * (m * n) as f64)
    }
    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        let (m, n, r) = self.shape();
        let (x, y) = unpack(m, n, r, v);
        let scale = 1.0 / (m * n) as f64;
        let e = &x * &y - &self.z;
        pack(&(&e * y.transpose() * scale), &(x.transpose() * &e * scale))
    }
    fn hvp(&self, v: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        let (m, n, r) = self.shape();
        let (x, y) = unpack(m, n, r, v);
        let (u, w) = unpack(m, n, r, h);
        let scale = 1.0 / (m * n) as f64;
        let e = &x * &y - &self.z;
        let dp = &u * &y + &x * &w;
        pack(
            &((&dp * y.transpose() + &e * w.transpose()) * scale),
            &((x.transpose() * &dp + u.transpose() * &e) * scale),
        )
    }
    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let (m, n, r) = self.shape();
        let (x, y) = unpack(m, n, r, v);
        let scale = 1.0 / (m * n) as f64;
        let e = &x * &y - &self.z;
        let yyt = &y * y.transpose();
        let xtx = x.transpose() * &x;
        let d = self.dim();
        let mut hess = DMatrix::zeros(d, d);
        // XX block: (i,k),(i,k') → δ_ii'(YYᵀ)_{kk'}; column-major index
        // of X_ik is i + k·m.
        for k in 0..r {
            for kp in 0..r {
                let c = yyt[(k, kp)] * scale;
                for i in 0..m {
                    hess[(i + k * m, i + kp * m)] = c;
                }
            }
        }
        // YY block: (k,j),(k',j) → δ_jj'(XᵀX)_{kk'}; index of Y_kj is
        // m·r + k + j·r.
        let off = m * r;
        for j in 0..n {
            for k in 0..r {
                for kp in 0..r {
                    hess[(off + k + j * r, off + kp + j * r)] = xtx[(k, kp)] * scale;
                }
            }
        }
        // Cross block: ∂²f/∂X_ik∂Y_k'j = (X_ik' Y_kj + δ_kk' E_ij)/mn.
        for i in 0..m {
            for k in 0..r {
                let row = i + k * m;
                for kp in 0..r {
                    for j in 0..n {
                        let col = off + kp + j * r;
                        let mut val = x[(i, kp)] * y[(k, j)];
                        if k == kp {
                            val += e[(i, j)];
                        }
                        hess[(row, col)] = val * scale;
                        hess[(col, row)] = val * scale;
                    }
                }
            }
        }
        hess
    }
    fn in_domain(&self, v: &DVector<f64>) -> bool {
        positive(v)
    }
}

/// f₂ = (1/mn) Σ D(Zᵢⱼ ‖ Pᵢⱼ), P = XY; Z entries equal to 0 contribute Pᵢⱼ
/// (the x log x → 0 convention).
#[derive(Debug, Clone)]
pub struct NmfKlOracle {
    pub z: DMatrix<f64>,
    pub r: usize,
}

impl NmfKlOracle {
    fn shape(&self) -> (usize, usize, usize) {
        (self.z.nrows(), self.z.ncols(), self.r)
    }
}

impl Oracle for NmfKlOracle {
    fn dim(&self) -> usize {
        let (m, n, r) = self.shape();
        m * r + r * n
    }
    fn value(&self, v: &DVector<f64>) -> f64 {
        if !self.in_domain(v) {
            return f64::INFINITY;
        }
        let (m, n, r) = self.shape();
        let (x, y) = unpack(m, n, r, v);
        let p = &x * &y;
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..m {
                let z = self.z[(i, j)];
                let pij = p[(i, j)];
                acc += if z > 0.0 { z * (z / pij).ln() - z + pij } else { pij };
            }
        }
        acc / (m * n) as f64
    }
    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        let (m, n, r) = self.shape();
        let (x, y) = unpack(m, n, r, v);
        let p = &x * &y;
        let s = DMatrix::from_fn(m, n, |i, j| {
            (1.0 - self.z[(i, j)] / p[(i, j)]) / (m * n) as f64
        });
        pack(&(&s * y.transpose()), &(x.transpose() * &s))
    }
    fn hvp(&self, v: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        let (m, n, r) = self.shape();
        let (x, y) = unpack(m, n, r, v);
        let (u, w) = unpack(m, n, r, h);
        let p = &x * &y;
        let dp = &u * &y + &x * &w;
        let s = DMatrix::from_fn(m, n, |i, j| {
            (1.0 - self.z[(i, j)] / p[(i, j)]) / (m * n) as f64
        });
        let ds = DMatrix::from_fn(m, n, |i, j| {
            self.z[(i, j)] / (p[(i, j)] * p[(i, j)]) * dp[(i, j)] / (m * n) as f64
        });
        pack(
            &(&ds * y.transpose() + &s * w.transpose()),
            &(x.transpose() * &ds + u.transpose() * &s),
        )
    }
    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let (m, n, r) = self.shape();
        let (x, y) = unpack(m, n, r, v);
        let p = &x * &y;
        let scale = 1.0 / (m * n) as f64;
        // Curvature of the divergence in P: Z/P²; slope: 1 − Z/P.
        let curv = DMatrix::from_fn(m, n, |i, j| self.z[(i, j)] / (p[(i, j)] * p[(i, j)]));
        let slope = DMatrix::from_fn(m, n, |i, j| 1.0 - self.z[(i, j)] / p[(i, j)]);
        let d = self.dim();
        let off = m * r;
        let mut hess = DMatrix::zeros(d, d);
        // XX block: δ_ii' Σ_j curv_ij Y_kj Y_k'j.
        for i in 0..m {
            for k in 0..r {
                for kp in 0..r {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += curv[(i, j)] * y[(k, j)] * y[(kp, j)];
                    }
                    hess[(i + k * m, i + kp * m)] = acc * scale;
                }
            }
        }
        // YY block: δ_jj' Σ_i curv_ij X_ik X_ik'.
        for j in 0..n {
            for k in 0..r {
                for kp in 0..r {
                    let mut acc = 0.0;
                    for i in 0..m {
                        acc += curv[(i, j)] * x[(i, k)] * x[(i, kp)];
                    }
                    hess[(off + k + j * r, off + kp + j * r)] = acc * scale;
                }
            }
        }
        // Cross: (curv_ij X_ik' Y_kj + δ_kk' slope_ij)/mn.
        for i in 0..m {
            for k in 0..r {
                let row = i + k * m;
                for kp in 0..r {
                    for j in 0..n {
                        let col = off + kp + j * r;
                        let mut val = curv[(i, j)] * x[(i, kp)] * y[(k, j)];
                        if k == kp {
                            val += slope[(i, j)];
                        }
                        hess[(row, col)] = val * scale;
                        hess[(col, row)] = val * scale;
                    }
                }
            }
        }
        hess
    }
    fn in_domain(&self, v: &DVector<f64>) -> bool {
        positive(v)
    }
}

/// MSE reference: quartic·(‖v‖²+1)² + barrier·(−Σ log vᵢ).
#[derive(Debug, Clone)]
pub struct NmfMseReference {
    pub dim: usize,
    pub quartic: f64,
    pub barrier: f64,
}

impl Oracle for NmfMseReference {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, v: &DVector<f64>) -> f64 {
        if !positive(v) {
            return f64::INFINITY;
        }
        let r1 = v.norm_squared() + 1.0;
        self.quartic * r1 * r1 - self.barrier * v.iter().map(|t| t.ln()).sum::<f64>()
    }
    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        let r1 = v.norm_squared() + 1.0;
        DVector::from_fn(self.dim, |i, _| {
            self.quartic * 4.0 * r1 * v[i] - self.barrier / v[i]
        })
    }
    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let r1 = v.norm_squared() + 1.0;
        let mut h = DMatrix::identity(self.dim, self.dim) * (4.0 * self.quartic * r1);
        h.ger(8.0 * self.quartic, v, v, 1.0);
        for i in 0..self.dim {
            h[(i, i)] += self.barrier / (v[i] * v[i]);
        }
        h
    }
    fn hvp(&self, v: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        let r1 = v.norm_squared() + 1.0;
        let vh = v.dot(h);
        DVector::from_fn(self.dim, |i, _| {
            4.0 * self.quartic * r1 * h[i]
                + 8.0 * self.quartic * vh * v[i]
                + self.barrier / (v[i] * v[i]) * h[i]
        })
    }
    fn in_domain(&self, v: &DVector<f64>) -> bool {
        positive(v)
    }
}

/// KL reference: −Σᵢₖ rowᵢ·log Xᵢₖ − Σₖⱼ colⱼ·log Yₖⱼ + c_q·(‖v‖²+1)²,
/// with row/column weights from `kl_barrier_weight` (τ·mass + margin).
#[derive(Debug, Clone)]
pub struct NmfKlReference {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub row_w: DVector<f64>,
    pub col_w: DVector<f64>,
    pub quartic: f64,
}

impl NmfKlReference {
    /// Barrier weight attached to coordinate index `idx` of v.
    fn coord_weight(&self, idx: usize) -> f64 {
        let off = self.m * self.r;
        if idx < off {
            self.row_w[idx % self.m]
        } else {
            self.col_w[(idx - off) / self.r]
        }
    }
}

impl Oracle for NmfKlReference {
    fn dim(&self) -> usize {
        self.m * self.r + self.r * self.n
    }
    fn value(&self, v: &DVector<f64>) -> f64 {
        if !positive(v) {
            return f64::INFINITY;
        }
        let r1 = v.norm_squared() + 1.0;
        let mut acc = self.quartic * r1 * r1;
        for i in 0..v.len() {
            acc -= self.coord_weight(i) * v[i].ln();
        }
        acc
    }
    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        let r1 = v.norm_squared() + 1.0;
        DVector::from_fn(self.dim(), |i, _| {
            4.0 * self.quartic * r1 * v[i] - self.coord_weight(i) / v[i]
        })
    }
    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let r1 = v.norm_squared() + 1.0;
        let mut h = DMatrix::identity(d, d) * (4.0 * self.quartic * r1);
        h.ger(8.0 * self.quartic, v, v, 1.0);
        for i in 0..d {
            h[(i, i)] += self.coord_weight(i) / (v[i] * v[i]);
        }
        h
    }
    fn hvp(&self, v: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        let r1 = v.norm_squared() + 1.0;
        let vh = v.dot(h);
        DVector::from_fn(self.dim(), |i, _| {
            4.0 * self.quartic * r1 * h[i]
                + 8.0 * self.quartic * vh * v[i]
                + self.coord_weight(i) / (v[i] * v[i]) * h[i]
        })
    }
    fn in_domain(&self, v: &DVector<f64>) -> bool {
        positive(v)
    }
}

/// Bilinear remainder of f₂ after splitting off the −log terms:
/// (1/mn)Σᵢⱼ(XY)ᵢⱼ. Used only to fit the quartic weight c_q.
#[derive(Debug, Clone)]
struct KlRemainder {
    m: usize,
    n: usize,
    r: usize,
}

impl Oracle for KlRemainder {
    fn dim(&self) -> usize {
        self.m * self.r + self.r * self.n
    }
    fn value(&self, v: &DVector<f64>) -> f64 {
        let (x, y) = unpack(self.m, self.n, self.r, v);
        (&x * &y).sum() / (self.m * self.n) as f64
    }
    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        let (x, y) = unpack(self.m, self.n, self.r, v);
        let ones = DMatrix::from_element(self.m, self.n, 1.0 / (self.m * self.n) as f64);
        pack(&(&ones * y.transpose()), &(x.transpose() * &ones))
    }
    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        crate::oracle::hessian_from_hvp(self.dim(), |e| self.hvp(v, e))
    }
    fn hvp(&self, _v: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        let (u, w) = unpack(self.m, self.n, self.r, h);
        let ones = DMatrix::from_element(self.m, self.n, 1.0 / (self.m * self.n) as f64);
        pack(&(&ones * w.transpose()), &(u.transpose() * &ones))
    }
}

const SC_SAMPLE_LO: f64 = 1e-2;
const SC_SAMPLE_HI: f64 = 1e1;

/// Synthetic MSE data: X̂, Ŷ ~ U[0,1] entrywise, M = X̂Ŷ, then the singular
/// tail σ_{r+1..min(m,n)} of Z is resampled i.i.d. from U[0, 0.1σ_r] while
/// keeping M's singular vectors. The best-rank-r distance gives the exact
/// optimal value (1/2mn)·Σ_{i>r} σᵢ².
pub fn make_nmf_mse(m: usize, n: usize, r: usize, seed: u64) -> Result<NmfInstance> {
    assert!(r >= 1 && r <= m.min(n), "need 1 ≤ r ≤ min(m,n)");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_hat = DMatrix::from_fn(m, r, |_, _| rng.random::<f64>());
    let y_hat = DMatrix::from_fn(r, n, |_, _| rng.random::<f64>());
    let m_mat = &x_hat * &y_hat;
    let svd = m_mat.clone().svd(true, true);
    let mut s = svd.singular_values.clone();
    let sigma_r = s[r - 1];
    let k = m.min(n);
    let mut tail_sq = 0.0;
    for i in r..k {
        s[i] = 0.1 * sigma_r * rng.random::<f64>();
        tail_sq += s[i] * s[i];
    }
    let z = svd.u.as_ref().unwrap() * DMatrix::from_diagonal(&s) * svd.v_t.as_ref().unwrap();
    let hint = tail_sq / (2.0 * (m * n) as f64);
    let ell = mse_reference_weight(m, n, &z);

    Ok(NmfInstance {
        z,
        m,
        n,
        r,
        loss: NmfLoss::Frobenius,
        barrier_weight: ell,
        quartic_weight: ell,
        optimal_value_hint: Some(hint),
        seed,
    })
}

/// KL data: Z = X̂Ŷ + noise·Ẑ, everything U[0,1] entrywise. Zero noise
/// leaves the exact factorization, so the optimum 0 is recorded.
pub fn make_nmf_kl(m: usize, n: usize, r: usize, noise: f64, seed: u64) -> Result<NmfInstance> {
    assert!(r >= 1 && r <= m.min(n), "need 1 ≤ r ≤ min(m,n)");
    assert!(noise >= 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_hat = DMatrix::from_fn(m, r, |_, _| rng.random::<f64>());
    let y_hat = DMatrix::from_fn(r, n, |_, _| rng.random::<f64>());
    let z_noise = DMatrix::from_fn(m, n, |_, _| rng.random::<f64>());
    let z = &x_hat * &y_hat + z_noise * noise;

    let c_q = polynomial_reference_fit(Arc::new(KlRemainder { m, n, r }), 2, 40, seed ^ 0x6b31)?
        .weight;

    Ok(NmfInstance {
        z,
        m,
        n,
        r,
        loss: NmfLoss::Kl,
        barrier_weight: KL_TAU,
        quartic_weight: c_q,
        optimal_value_hint: if noise == 0.0 { Some(0.0) } else { None },
        seed,
    })
}

pub fn nmf_oracles(instance: &NmfInstance) -> ReferencePair {
    let (m, n, r) = (instance.m, instance.n, instance.r);
    let dim = instance.dim();
    let (objective, reference, kappa_ref): (Arc<dyn Oracle>, Arc<dyn Oracle>, f64) =
        match instance.loss {
            NmfLoss::Frobenius => {
                let ell = instance.barrier_weight;
                let kappa_ref = (1.0 / ell.sqrt()).max(1.0 / (3.0 * instance.quartic_weight.sqrt()));
                (
                    Arc::new(NmfMseOracle { z: instance.z.clone(), r }),
                    Arc::new(NmfMseReference {
                        dim,
                        quartic: instance.quartic_weight,
                        barrier: ell,
                    }),
                    kappa_ref,
                )
            }
            NmfLoss::Kl => {
                let tau = instance.barrier_weight;
                let mn = (m * n) as f64;
                let row_w = DVector::from_fn(m, |i, _| {
                    kl_barrier_weight(tau, instance.z.row(i).iter().sum::<f64>() / mn)
                });
                let col_w = DVector::from_fn(n, |j, _| {
                    kl_barrier_weight(tau, instance.z.column(j).iter().sum::<f64>() / mn)
                });
                let min_pos = row_w
                    .iter()
                    .chain(col_w.iter())
                    .copied()
                    .filter(|&w| w > 0.0)
                    .fold(f64::INFINITY, f64::min);
                let mut kappa_ref = 1.0 / (3.0 * instance.quartic_weight.sqrt());
                if min_pos.is_finite() {
                    kappa_ref = kappa_ref.max(1.0 / min_pos.sqrt());
                }
                (
                    Arc::new(NmfKlOracle { z: instance.z.clone(), r }),
                    Arc::new(NmfKlReference {
                        m,
                        n,
                        r,
                        row_w,
                        col_w,
                        quartic: instance.quartic_weight,
                    }),
                    kappa_ref,
                )
            }
        };
    let mut pair = ReferencePair::new(objective, reference, 1.0);
    pair.kappa_ref = Some(kappa_ref);
    pair.lower_bound_hint = Some(instance.optimal_value_hint.unwrap_or(0.0));
    pair.sampler = Some(Arc::new(LogUniformSampler { dim, lo: SC_SAMPLE_LO, hi: SC_SAMPLE_HI }));
    pair
}
