//! Finite discretizations of represented operators and their injectivity margins.

mod sparse;
mod svd;

use std::f64::consts::PI;

use faer::c64;
use serde::Serialize;

pub use sparse::SparseOp;
pub use svd::{smallest_singular_values, SmallestSv, DENSE_LIMIT};

use crate::error::{Error, Result};
use crate::linalg::{c, herm_eigvals, CMat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Harmonic,
    EngelGeneric,
    EngelDegenerate,
    N4Generic,
    HtildeFlat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    HermiteBasis,
    FiniteDifference,
}

#[derive(Clone, Debug, Serialize)]
pub struct Discretization {
    pub scheme: Scheme,
    /// Scalar sizes per resolution (basis size, or points per axis).
    pub coarse: Vec<usize>,
    pub fine: Vec<usize>,
    /// Half-widths of the box per axis (finite differences).
    pub half_widths: Vec<f64>,
    /// Length scale of the Hermite functions.
    pub hermite_scale: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ModelOperator {
    pub kind: ModelKind,
    pub params: Vec<f64>,
    pub disc: Discretization,
    /// Bundle rank N.
    pub rank: usize,
    pub coarse: SparseOp,
    pub fine: SparseOp,
    /// Natural magnitude of the family, used to make thresholds relative.
    pub scale: f64,
}

impl ModelOperator {
    pub fn dim(&self) -> usize {
        self.fine.n
    }
}

/// Options for one-dimensional kinds.
#[derive(Clone, Debug, Serialize)]
pub struct Disc1d {
    pub scheme: Scheme,
    pub size: usize,
    /// Size of the refined resolution; defaults to `2 * size`.
    pub fine_size: Option<usize>,
    /// Hermite length scale or box half-width; chosen automatically if absent.
    pub length: Option<f64>,
}

impl Default for Disc1d {
    fn default() -> Self {
        Disc1d { scheme: Scheme::HermiteBasis, size: 400, fine_size: None, length: None }
    }
}

/// Options for grid kinds.
#[derive(Clone, Debug, Serialize)]
pub struct Grid {
    pub points: usize,
    pub fine_points: Option<usize>,
    pub half_width: Option<f64>,
    /// Extra axis (the field variable of the Landau family).
    pub points_b: Option<usize>,
    pub fine_points_b: Option<usize>,
    pub half_width_b: Option<f64>,
}

impl Grid {
    pub fn square(points: usize) -> Self {
        Grid { points, fine_points: None, half_width: None, points_b: None, fine_points_b: None, half_width_b: None }
    }
}

// ---------------------------------------------------------------- Hermite

fn sparse_mul(a: &SparseOp, b: &SparseOp) -> SparseOp {
    let mut rows_b: Vec<Vec<(usize, c64)>> = vec![Vec::new(); b.n];
    for (i, j, v) in b.iter() {
        rows_b[i].push((j, v));
    }
    let mut out = SparseOp::new(a.n);
    for (i, k, v) in a.iter() {
        for &(j, w) in &rows_b[k] {
            out.add(i, j, v * w);
        }
    }
    out
}

fn truncate(a: &SparseOp, k: usize) -> SparseOp {
    let mut out = SparseOp::new(k);
    for (i, j, v) in a.iter() {
        if i < k && j < k {
            out.add(i, j, v);
        }
    }
    out
}

/// Multiplication by `x` in the basis `φ_k(x) = s^{-1/2} h_k(x/s)`.
fn hermite_x(k: usize, s: f64) -> SparseOp {
    let mut m = SparseOp::new(k);
    for i in 0..k.saturating_sub(1) {
        let v = s * ((i + 1) as f64 / 2.0).sqrt();
        m.add(i, i + 1, c(v, 0.0));
        m.add(i + 1, i, c(v, 0.0));
    }
    m
}

/// `d/dx` in the same basis.
fn hermite_d(k: usize, s: f64) -> SparseOp {
    let mut m = SparseOp::new(k);
    for i in 0..k.saturating_sub(1) {
        let v = ((i + 1) as f64 / 2.0).sqrt() / s;
        // d φ_{i+1} contains +v φ_i; d φ_i contains −v φ_{i+1}
        m.add(i, i + 1, c(v, 0.0));
        m.add(i + 1, i, c(-v, 0.0));
    }
    m
}

/// Exact K×K Galerkin matrices of `x`, `x²`, `x⁴`, `d²/dx²`, obtained by
/// multiplying in a padded basis and truncating.
struct HermiteMats {
    x: SparseOp,
    x2: SparseOp,
    x4: SparseOp,
    d2: SparseOp,
}

fn hermite_mats(k: usize, s: f64) -> HermiteMats {
    let pad = k + 4;
    let x = hermite_x(pad, s);
    let d = hermite_d(pad, s);
    let x2 = sparse_mul(&x, &x);
    let x4 = sparse_mul(&x2, &x2);
    let d2 = sparse_mul(&d, &d);
    HermiteMats { x: truncate(&x, k), x2: truncate(&x2, k), x4: truncate(&x4, k), d2: truncate(&d2, k) }
}

fn identity(n: usize) -> SparseOp {
    let mut m = SparseOp::new(n);
    for i in 0..n {
        m.add(i, i, c(1.0, 0.0));
    }
    m
}

/// `−d²/dx² + x²/s⁴` in the Hermite basis of scale `s`; spectrum `(2k+1)/s²`.
pub fn build_harmonic(size: usize, scale: f64) -> Result<ModelOperator> {
    if size == 0 || scale <= 0.0 {
        return Err(Error::InvalidParameter("harmonic needs size > 0 and scale > 0".into()));
    }
    let mk = |k: usize| {
        let h = hermite_mats(k, scale);
        h.d2.scaled(c(-1.0, 0.0)).plus(&h.x2.scaled(c(scale.powi(-4), 0.0)))
    };
    Ok(ModelOperator {
        kind: ModelKind::Harmonic,
        params: vec![scale],
        disc: Discretization {
            scheme: Scheme::HermiteBasis,
            coarse: vec![size],
            fine: vec![2 * size],
            half_widths: vec![],
            hermite_scale: Some(scale),
        },
        rank: 1,
        coarse: mk(size),
        fine: mk(2 * size),
        scale: scale.powi(-2),
    })
}

// ---------------------------------------------------------------- 1-D finite differences

fn fd_second_derivative(points: usize, h: f64) -> SparseOp {
    let mut m = SparseOp::new(points);
    let w = 1.0 / (h * h);
    for i in 0..points {
        m.add(i, i, c(-2.0 * w, 0.0));
        if i + 1 < points {
            m.add(i, i + 1, c(w, 0.0));
            m.add(i + 1, i, c(w, 0.0));
        }
    }
    m
}

fn fd_nodes(points: usize, half: f64) -> (Vec<f64>, f64) {
    let h = 2.0 * half / (points + 1) as f64;
    ((1..=points).map(|i| -half + i as f64 * h).collect(), h)
}

fn diag(values: &[f64]) -> SparseOp {
    let mut m = SparseOp::new(values.len());
    for (i, &v) in values.iter().enumerate() {
        m.add(i, i, c(v, 0.0));
    }
    m
}

// ---------------------------------------------------------------- Engel

fn check_gamma(gamma: &CMat) -> Result<usize> {
    let n = gamma.nrows();
    if n == 0 || gamma.ncols() != n {
        return Err(Error::DimensionMismatch("gamma must be a nonempty square matrix".into()));
    }
    Ok(n)
}

/// Energy window and phase-space extent for the quartic well
/// `4π²(p x² + c)²`: returns `(x_max, k_max, energy_scale)`.
fn engel_extent(p: f64, q: f64) -> (f64, f64, f64) {
    let cc = q / (2.0 * p);
    let e0 = (2.0 * PI * p.abs()).powf(2.0 / 3.0) + if cc * p > 0.0 { 4.0 * PI * PI * cc * cc } else { 0.0 };
    let barrier = if cc * p < 0.0 { 4.0 * PI * PI * cc * cc } else { 0.0 };
    let e_cut = 40.0 * e0 + barrier;
    // p x² + c = ±√E / 2π; the outer turning point uses the sign of p
    let root = e_cut.sqrt() / (2.0 * PI);
    let x2 = ((root * p.signum() - cc) / p).max(0.0);
    (x2.sqrt().max(1e-3), e_cut.sqrt(), e0)
}

/// `∂² − 4π²(p x² + q/(2p))² + 2πp x ⊗ (iγ)` acting on ℂᴺ-valued functions.
pub fn build_engel_generic(p: f64, q: f64, gamma: &CMat, disc: &Disc1d) -> Result<ModelOperator> {
    if p == 0.0 || !p.is_finite() || !q.is_finite() {
        return Err(Error::InvalidParameter("p must be nonzero; use build_engel_degenerate for p = 0".into()));
    }
    let rank = check_gamma(gamma)?;
    let cc = q / (2.0 * p);
    let ig = crate::linalg::scale(gamma, c(0.0, 1.0));
    let (x_max, k_max, e0) = engel_extent(p, q);
    let fine_size = disc.fine_size.unwrap_or(2 * disc.size);
    let fp = 4.0 * PI * PI;
    match disc.scheme {
        Scheme::HermiteBasis => {
            let s = disc.length.unwrap_or_else(|| (x_max / k_max).sqrt());
            let mk = |k: usize| {
                let h = hermite_mats(k, s);
                // (p x² + c)² = p² x⁴ + 2pc x² + c²
                let pot = h
                    .x4
                    .scaled(c(p * p, 0.0))
                    .plus(&h.x2.scaled(c(2.0 * p * cc, 0.0)))
                    .plus(&identity(k).scaled(c(cc * cc, 0.0)));
                let scalar = h.d2.plus(&pot.scaled(c(-fp, 0.0)));
                scalar
                    .kron_dense(&crate::linalg::cidentity(rank))
                    .plus(&h.x.scaled(c(2.0 * PI * p, 0.0)).kron_dense(&ig))
            };
            Ok(ModelOperator {
                kind: ModelKind::EngelGeneric,
                params: vec![p, q],
                disc: Discretization {
                    scheme: Scheme::HermiteBasis,
                    coarse: vec![disc.size],
                    fine: vec![fine_size],
                    half_widths: vec![],
                    hermite_scale: Some(s),
                },
                rank,
                coarse: mk(disc.size),
                fine: mk(fine_size),
                scale: e0,
            })
        }
        Scheme::FiniteDifference => {
            let half = disc.length.unwrap_or(1.5 * x_max);
            let mk = |k: usize| {
                let (xs, h) = fd_nodes(k, half);
                let pot: Vec<f64> = xs.iter().map(|x| -fp * (p * x * x + cc).powi(2)).collect();
                let scalar = fd_second_derivative(k, h).plus(&diag(&pot));
                let xm: Vec<f64> = xs.iter().map(|x| 2.0 * PI * p * x).collect();
                scalar.kron_dense(&crate::linalg::cidentity(rank)).plus(&diag(&xm).kron_dense(&ig))
            };
            Ok(ModelOperator {
                kind: ModelKind::EngelGeneric,
                params: vec![p, q],
                disc: Discretization {
                    scheme: Scheme::FiniteDifference,
                    coarse: vec![disc.size],
                    fine: vec![fine_size],
                    half_widths: vec![half],
                    hermite_scale: None,
                },
                rank,
                coarse: mk(disc.size),
                fine: mk(fine_size),
                scale: e0,
            })
        }
    }
}

/// `−2π√(−q) (H ⊗ 1 + sign · 1 ⊗ iγ)` in the eigenbasis of the oscillator
/// `H` (spectrum `2k+1`), truncated to `size` levels.
pub fn build_engel_degenerate(q: f64, sign: i32, gamma: &CMat, size: usize) -> Result<ModelOperator> {
    if !(q < 0.0) {
        return Err(Error::InvalidParameter(format!("degenerate Engel family needs q < 0, got {q}")));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidParameter("sign must be +1 or -1".into()));
    }
    let rank = check_gamma(gamma)?;
    let w = 2.0 * PI * (-q).sqrt();
    let ig = crate::linalg::scale(gamma, c(0.0, 1.0));
    let mk = |k: usize| {
        let mut m = SparseOp::new(k * rank);
        for lvl in 0..k {
            for a in 0..rank {
                for b in 0..rank {
                    let diag = if a == b { (2 * lvl + 1) as f64 } else { 0.0 };
                    let v = (c(diag, 0.0) + ig[(a, b)] * sign as f64) * (-w);
                    m.add(lvl * rank + a, lvl * rank + b, v);
                }
            }
        }
        m
    };
    Ok(ModelOperator {
        kind: ModelKind::EngelDegenerate,
        params: vec![q, sign as f64],
        disc: Discretization {
            scheme: Scheme::HermiteBasis,
            coarse: vec![size],
            fine: vec![2 * size],
            half_widths: vec![],
            hermite_scale: Some((2.0 * PI * (-q).sqrt()).powf(-0.5)),
        },
        rank,
        coarse: mk(size),
        fine: mk(2 * size),
        scale: w,
    })
}

/// Eigenvalues `−2π√(−q)(2k+1 + sign·μ)`, `μ ∈ Spec(iγ)`, for `k < levels`.
pub fn engel_degenerate_spectrum(q: f64, sign: i32, gamma: &CMat, levels: usize) -> Vec<c64> {
    let w = 2.0 * PI * (-q).sqrt();
    let mu = crate::linalg::eigvals(&crate::linalg::scale(gamma, c(0.0, 1.0)));
    let mut out = Vec::new();
    for k in 0..levels {
        for m in &mu {
            out.push((c((2 * k + 1) as f64, 0.0) + m * sign as f64) * (-w));
        }
    }
    out
}

// ---------------------------------------------------------------- n(4)

fn laplacian_2d(points: usize, h: f64) -> SparseOp {
    let n = points * points;
    let w = 1.0 / (h * h);
    let mut m = SparseOp::new(n);
    let idx = |i: usize, j: usize| i * points + j;
    for i in 0..points {
        for j in 0..points {
            let r = idx(i, j);
            m.add(r, r, c(-4.0 * w, 0.0));
            if i + 1 < points {
                m.add(r, idx(i + 1, j), c(w, 0.0));
                m.add(idx(i + 1, j), r, c(w, 0.0));
            }
            if j + 1 < points {
                m.add(r, idx(i, j + 1), c(w, 0.0));
                m.add(idx(i, j + 1), r, c(w, 0.0));
            }
        }
    }
    m
}

/// Default half-width for the n(4) family: the zero set of `η − αxy` plus a
/// few decay lengths of the valley states, times the margin factor 1.5.
pub fn n4_half_width(alpha: f64, eta: f64) -> f64 {
    let ell = (2.0 * PI * alpha.abs()).powf(-1.0 / 3.0);
    let hyper = (eta.abs() / alpha.abs()).sqrt();
    1.5 * (hyper + 4.0 * ell)
}

/// `∂_x² + ∂_y² − 4π²(η − αxy)² − 2πiα(γ₂x − γ₁y)`, 5-point stencil on a
/// Dirichlet box.
pub fn build_n4_generic(alpha: f64, eta: f64, gamma: &[CMat; 2], grid: &Grid) -> Result<ModelOperator> {
    if alpha == 0.0 || !alpha.is_finite() || !eta.is_finite() {
        return Err(Error::InvalidParameter("alpha must be nonzero".into()));
    }
    let rank = check_gamma(&gamma[0])?;
    if check_gamma(&gamma[1])? != rank {
        return Err(Error::DimensionMismatch("gamma pair has mixed sizes".into()));
    }
    let half = grid.half_width.unwrap_or_else(|| n4_half_width(alpha, eta));
    let fine_points = grid.fine_points.unwrap_or(2 * grid.points);
    let mk = |pts: usize| n4_matrix(alpha, eta, gamma, pts, half);
    let ell = (2.0 * PI * alpha.abs()).powf(2.0 / 3.0);
    Ok(ModelOperator {
        kind: ModelKind::N4Generic,
        params: vec![alpha, eta],
        disc: Discretization {
            scheme: Scheme::FiniteDifference,
            coarse: vec![grid.points, grid.points],
            fine: vec![fine_points, fine_points],
            half_widths: vec![half, half],
            hermite_scale: None,
        },
        rank,
        coarse: mk(grid.points),
        fine: mk(fine_points),
        scale: ell + 4.0 * PI * PI * eta * eta,
    })
}

/// The n(4) matrix on a `points × points` grid of half-width `half`.
pub fn n4_matrix(alpha: f64, eta: f64, gamma: &[CMat; 2], points: usize, half: f64) -> SparseOp {
    let rank = gamma[0].nrows();
    let (xs, h) = fd_nodes(points, half);
    let lap = laplacian_2d(points, h).kron_dense(&crate::linalg::cidentity(rank));
    let mut m = lap;
    let fp = 4.0 * PI * PI;
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in xs.iter().enumerate() {
            let node = i * points + j;
            let v = -fp * (eta - alpha * x * y).powi(2);
            // −2πiα(γ₂ x − γ₁ y)
            let pref = c(0.0, -2.0 * PI * alpha);
            for a in 0..rank {
                m.add(node * rank + a, node * rank + a, c(v, 0.0));
                for b in 0..rank {
                    let g = gamma[1][(a, b)] * x - gamma[0][(a, b)] * y;
                    m.add(node * rank + a, node * rank + b, pref * g);
                }
            }
        }
    }
    m
}

// ---------------------------------------------------------------- Mohsen modification, m = 1

/// `|ℏ|(−L_B + ∂_B²) + iℏ(γ₀B − ½(γ₁x + γ₂y))` on a 3-D Dirichlet box, where
/// `L_B = (i∂_x + By/2)² + (i∂_y − Bx/2)²` is discretized with Peierls phases.
pub fn build_htilde_flat(m: usize, hbar: f64, gamma: &[CMat], grid: &Grid) -> Result<ModelOperator> {
    if m != 1 {
        return Err(Error::ResourceGuard(format!("Landau-family grids are 3-D only for m = 1, got m = {m}")));
    }
    if hbar == 0.0 || !hbar.is_finite() {
        return Err(Error::InvalidParameter("hbar must be nonzero".into()));
    }
    if gamma.len() != 3 {
        return Err(Error::DimensionMismatch(format!("expected 3 matrices, got {}", gamma.len())));
    }
    let rank = check_gamma(&gamma[0])?;
    if gamma.iter().any(|g| g.nrows() != rank || g.ncols() != rank) {
        return Err(Error::DimensionMismatch("gamma matrices have mixed sizes".into()));
    }
    let half = grid.half_width.unwrap_or(3.0);
    let half_b = grid.half_width_b.unwrap_or(3.0);
    let pb = grid.points_b.unwrap_or(grid.points);
    let fine = grid.fine_points.unwrap_or(grid.points * 4 / 3);
    let fine_b = grid.fine_points_b.unwrap_or(pb * 4 / 3);
    let mk = |pts: usize, ptsb: usize| htilde_matrix(hbar, gamma, pts, ptsb, half, half_b);
    Ok(ModelOperator {
        kind: ModelKind::HtildeFlat,
        params: vec![m as f64, hbar],
        disc: Discretization {
            scheme: Scheme::FiniteDifference,
            coarse: vec![grid.points, grid.points, pb],
            fine: vec![fine, fine, fine_b],
            half_widths: vec![half, half, half_b],
            hermite_scale: None,
        },
        rank,
        coarse: mk(grid.points, pb),
        fine: mk(fine, fine_b),
        scale: hbar.abs(),
    })
}

fn htilde_matrix(hbar: f64, gamma: &[CMat], pts: usize, ptsb: usize, half: f64, half_b: f64) -> SparseOp {
    let rank = gamma[0].nrows();
    let (xs, h) = fd_nodes(pts, half);
    let (bs, hb) = fd_nodes(ptsb, half_b);
    let idx = |i: usize, j: usize, k: usize| (k * pts + i) * pts + j;
    let mut s = SparseOp::new(pts * pts * ptsb);
    let w = 1.0 / (h * h);
    let wb = 1.0 / (hb * hb);
    let ah = hbar.abs();
    for (k, &bv) in bs.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in xs.iter().enumerate() {
                let r = idx(i, j, k);
                // −L_B: (P − A)² with A = (By/2, −Bx/2), P = −i∂
                s.add(r, r, c(-ah * 4.0 * w, 0.0));
                let ax = bv * y / 2.0;
                let ay = -bv * x / 2.0;
                if i + 1 < pts {
                    // f_{x+h} enters (P − A)² with weight −e^{−iA h}/h²
                    let link = c((ax * h).cos(), -(ax * h).sin());
                    s.add(r, idx(i + 1, j, k), link * (ah * w));
                    s.add(idx(i + 1, j, k), r, link.conj() * (ah * w));
                }
                if j + 1 < pts {
                    let link = c((ay * h).cos(), -(ay * h).sin());
                    s.add(r, idx(i, j + 1, k), link * (ah * w));
                    s.add(idx(i, j + 1, k), r, link.conj() * (ah * w));
                }
                // ∂_B²
                s.add(r, r, c(-2.0 * ah * wb, 0.0));
                if k + 1 < ptsb {
                    s.add(r, idx(i, j, k + 1), c(ah * wb, 0.0));
                    s.add(idx(i, j, k + 1), r, c(ah * wb, 0.0));
                }
            }
        }
    }
    let mut out = s.kron_dense(&crate::linalg::cidentity(rank));
    for (k, &bv) in bs.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in xs.iter().enumerate() {
                let node = idx(i, j, k);
                for a in 0..rank {
                    for b in 0..rank {
                        let g = gamma[0][(a, b)] * bv - (gamma[1][(a, b)] * x + gamma[2][(a, b)] * y) * 0.5;
                        out.add(node * rank + a, node * rank + b, g * c(0.0, hbar));
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------- injectivity

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Injectivity {
    Injective,
    KernelDetected,
    Unresolved,
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectivityEstimate {
    pub kind: ModelKind,
    pub params: Vec<f64>,
    pub sigma_min: f64,
    pub sigma_min_coarse: Option<f64>,
    /// Smallest singular values at the fine resolution, ascending.
    pub smallest: Vec<f64>,
    pub smallest_coarse: Vec<f64>,
    /// `|σ_fine − σ_coarse| / σ_fine` per index.
    pub deltas: Vec<f64>,
    pub max_delta: f64,
    pub threshold: f64,
    pub verdict: Injectivity,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<[f64; 2]>>,
}

pub const SMALLEST_COUNT: usize = 5;

/// Smallest singular values at both resolutions and a two-resolution verdict.
/// `threshold` is relative to the family's natural scale.
pub fn min_singular(op: &ModelOperator, threshold: f64, refine: bool) -> InjectivityEstimate {
    min_singular_seeded(op, threshold, refine, 0x5eed)
}

pub fn min_singular_seeded(op: &ModelOperator, threshold: f64, refine: bool, seed: u64) -> InjectivityEstimate {
    let thr = threshold * op.scale;
    let fine = smallest_singular_values(&op.fine, SMALLEST_COUNT, seed);
    let coarse = if refine { Some(smallest_singular_values(&op.coarse, SMALLEST_COUNT, seed)) } else { None };
    let sf = fine.values.first().copied().unwrap_or(0.0);
    let sc = coarse.as_ref().and_then(|c| c.values.first().copied());
    let deltas: Vec<f64> = match &coarse {
        Some(cv) => fine
            .values
            .iter()
            .zip(&cv.values)
            .map(|(f, c)| if *f > 0.0 { (f - c).abs() / f } else if *c == 0.0 { 0.0 } else { f64::INFINITY })
            .collect(),
        None => Vec::new(),
    };
    let max_delta = deltas.iter().copied().fold(0.0, f64::max);
    let converged = fine.converged && coarse.as_ref().is_none_or(|c| c.converged);
    let verdict = if !converged {
        Injectivity::Unresolved
    } else {
        match sc {
            Some(sc) => {
                if sf > thr && sc > thr && (sf - sc).abs() < 0.1 * sf {
                    Injectivity::Injective
                } else if sf < thr && sc < thr && sf <= sc * (1.0 + 1e-6) + 1e-3 * thr {
                    Injectivity::KernelDetected
                } else {
                    Injectivity::Unresolved
                }
            }
            None => {
                if sf > thr {
                    Injectivity::Injective
                } else {
                    Injectivity::KernelDetected
                }
            }
        }
    };
    let witness = (verdict == Injectivity::KernelDetected).then(|| fine.vector.iter().map(|z| [z.re, z.im]).collect());
    InjectivityEstimate {
        kind: op.kind,
        params: op.params.clone(),
        sigma_min: sf,
        sigma_min_coarse: sc,
        smallest: fine.values,
        smallest_coarse: coarse.map(|c| c.values).unwrap_or_default(),
        deltas,
        max_delta,
        threshold: thr,
        verdict,
        converged,
        witness,
    }
}

/// Runs `f` on every point in parallel; results keep the order of `points`.
pub fn sweep<P, F>(points: &[P], f: F) -> Vec<Result<InjectivityEstimate>>
where
    P: Sync,
    F: Fn(&P) -> Result<InjectivityEstimate> + Sync + Send,
{
    use rayon::prelude::*;
    points.par_iter().map(f).collect()
}

/// Eigenvalues of a hermitian model matrix, ascending.
pub fn hermitian_spectrum(op: &SparseOp) -> Vec<f64> {
    herm_eigvals(&op.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_levels() {
        let op = build_harmonic(64, 1.0).unwrap();
        let ev = hermitian_spectrum(&op.coarse);
        for (k, e) in ev.iter().take(10).enumerate() {
            assert!((e - (2 * k + 1) as f64).abs() < 1e-10, "{k}: {e}");
        }
    }

    #[test]
    fn degenerate_kernel_at_one() {
        let g = CMat::from_fn(1, 1, |_, _| c(0.0, 1.0));
        let op = build_engel_degenerate(-1.0, 1, &g, 50).unwrap();
        let est = min_singular(&op, 1e-6, true);
        assert_eq!(est.verdict, Injectivity::KernelDetected);
        assert!(est.sigma_min < 1e-12);
    }
}
