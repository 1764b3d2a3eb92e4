//! Symbols `γ = (γ_1, …, γ_m)`, the embedding ι of g₋₂ into `so_n`, the
//! relation space S, quotient norms and the pointwise spectral tests.

use std::sync::Arc;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::algebra::{GradedHomomorphism, StratifiedLieAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{self, c, czero, herm_eigh, kron, CMat, RMat};
use crate::sphere::SphereSamples;

#[derive(Clone, Debug)]
pub struct SymbolGamma {
    alg: Arc<StratifiedLieAlgebra>,
    rank: usize,
    gammas: Vec<CMat>,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug)]
struct Cx {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SymbolJson {
    #[serde(rename = "N")]
    rank: usize,
    gammas: Vec<Vec<Vec<Cx>>>,
}

impl SymbolGamma {
    pub fn new(alg: Arc<StratifiedLieAlgebra>, gammas: Vec<CMat>) -> Result<Self> {
        if gammas.len() != alg.m() {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices given, dim g₋₂ = {}",
                gammas.len(),
                alg.m()
            )));
        }
        let rank = gammas.first().map_or(1, |g| g.nrows());
        if rank == 0 {
            return Err(Error::DimensionMismatch("bundle rank N must be positive".into()));
        }
        for (l, g) in gammas.iter().enumerate() {
            if g.nrows() != rank || g.ncols() != rank {
                return Err(Error::DimensionMismatch(format!(
                    "gamma[{l}] is {}x{}, expected {rank}x{rank}",
                    g.nrows(),
                    g.ncols()
                )));
            }
            if g.col_iter().any(|col| col.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
                return Err(Error::InvalidParameter(format!("gamma[{l}] has non-finite entries")));
            }
        }
        Ok(SymbolGamma { alg, rank, gammas })
    }

    pub fn zero(alg: Arc<StratifiedLieAlgebra>, rank: usize) -> Self {
        let m = alg.m();
        SymbolGamma { alg, rank, gammas: vec![czero(rank, rank); m] }
    }

    /// Rank-one symbol with scalar entries `γ_l = zs[l]`.
    pub fn from_scalars(alg: Arc<StratifiedLieAlgebra>, zs: &[c64]) -> Result<Self> {
        let g = zs.iter().map(|&z| CMat::from_fn(1, 1, |_, _| z)).collect();
        Self::new(alg, g)
    }

    pub fn algebra(&self) -> &Arc<StratifiedLieAlgebra> {
        &self.alg
    }

    /// Bundle rank N.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn gammas(&self) -> &[CMat] {
        &self.gammas
    }

    /// Hermitian parts `a_l = (γ_l + γ_l*)/2`.
    pub fn re(&self) -> Vec<CMat> {
        self.gammas.iter().map(|g| linalg::re_im_parts(g).0).collect()
    }

    /// Hermitian parts `b_l = (γ_l − γ_l*)/(2i)`.
    pub fn im(&self) -> Vec<CMat> {
        self.gammas.iter().map(|g| linalg::re_im_parts(g).1).collect()
    }

    pub fn scaled(&self, t: f64) -> Self {
        let gammas = self.gammas.iter().map(|g| linalg::scale(g, c(t, 0.0))).collect();
        SymbolGamma { alg: self.alg.clone(), rank: self.rank, gammas }
    }

    /// `−γ*`, taken entrywise in `l`.
    pub fn neg_adjoint(&self) -> Self {
        let gammas = self.gammas.iter().map(|g| linalg::scale(&linalg::adjoint(g), c(-1.0, 0.0))).collect();
        SymbolGamma { alg: self.alg.clone(), rank: self.rank, gammas }
    }

    pub fn adjoint(&self) -> Self {
        let gammas = self.gammas.iter().map(linalg::adjoint).collect();
        SymbolGamma { alg: self.alg.clone(), rank: self.rank, gammas }
    }

    pub fn with_algebra(&self, alg: Arc<StratifiedLieAlgebra>) -> Result<Self> {
        Self::new(alg, self.gammas.clone())
    }

    pub fn to_json(&self) -> String {
        let j = SymbolJson {
            rank: self.rank,
            gammas: self
                .gammas
                .iter()
                .map(|g| {
                    (0..self.rank)
                        .map(|i| (0..self.rank).map(|k| Cx { re: g[(i, k)].re, im: g[(i, k)].im }).collect())
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string(&j).expect("symbol serializes")
    }

    pub fn from_json(alg: Arc<StratifiedLieAlgebra>, text: &str) -> Result<Self> {
        let j: SymbolJson = serde_json::from_str(text)?;
        let mut gammas = Vec::with_capacity(j.gammas.len());
        for (l, rows) in j.gammas.iter().enumerate() {
            if rows.len() != j.rank || rows.iter().any(|r| r.len() != j.rank) {
                return Err(Error::DimensionMismatch(format!("gammas[{l}] is not {0}x{0}", j.rank)));
            }
            gammas.push(CMat::from_fn(j.rank, j.rank, |i, k| c(rows[i][k].re, rows[i][k].im)));
        }
        let s = Self::new(alg, gammas)?;
        if s.rank != j.rank {
            return Err(Error::DimensionMismatch(format!("N = {} but matrices are {}x{}", j.rank, s.rank, s.rank)));
        }
        Ok(s)
    }
}

fn gram(alg: &StratifiedLieAlgebra) -> Result<&RMat> {
    alg.gram_g2()
        .ok_or_else(|| Error::Precondition("[g₋₁, g₋₁] does not span g₋₂".into()))
}

/// `ι(Y)_{jk} = ⟨Y, [X_j, X_k]⟩` in the metric on g₋₂ induced from `∧²g₋₁`.
pub fn iota(alg: &StratifiedLieAlgebra, y: &[f64]) -> Result<RMat> {
    let m = alg.m();
    if y.len() != m {
        return Err(Error::DimensionMismatch(format!("y has length {}, dim g₋₂ = {m}", y.len())));
    }
    let g = gram(alg)?;
    let gy: Vec<f64> = (0..m).map(|a| (0..m).map(|b| g[(a, b)] * y[b]).sum()).collect();
    let n = alg.n();
    Ok(RMat::from_fn(n, n, |j, k| alg.bracket_g2(j, k).iter().zip(&gy).map(|(x, w)| x * w).sum()))
}

/// Orthonormal basis (in the `∧²` metric) of `{s ∈ so_n : Σ s_{kl}[X_k, X_l] = 0}`.
#[derive(Clone, Debug)]
pub struct RelationSpace {
    pub basis: Vec<RMat>,
}

impl RelationSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

pub fn relation_space(alg: &StratifiedLieAlgebra) -> RelationSpace {
    let n = alg.n();
    let p = alg.wedge_projection();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect();
    let basis = if alg.m() == 0 {
        (0..pairs.len())
            .map(|q| (0..pairs.len()).map(|r| if q == r { 1.0 } else { 0.0 }).collect())
            .collect()
    } else {
        linalg::real_nullspace(&p, 1e-12)
    };
    let basis = basis
        .into_iter()
        .map(|v: Vec<f64>| {
            let mut s = RMat::zeros(n, n);
            for (q, &(j, k)) in pairs.iter().enumerate() {
                s[(j, k)] = v[q];
                s[(k, j)] = -v[q];
            }
            s
        })
        .collect();
    RelationSpace { basis }
}

/// Contracts an element of `so_n(M_N)` (as an nN×nN block matrix) against
/// the brackets: returns the coefficients of `Σ_{k,l} s_{kl}[X_k, X_l]`.
pub fn contract(alg: &StratifiedLieAlgebra, s: &CMat, rank: usize) -> Vec<CMat> {
    let n = alg.n();
    let mut out = vec![czero(rank, rank); alg.m()];
    for k in 0..n {
        for l in 0..n {
            let coeffs = alg.bracket_g2(k, l);
            for (p, &cf) in coeffs.iter().enumerate() {
                if cf == 0.0 {
                    continue;
                }
                for a in 0..rank {
                    for b in 0..rank {
                        out[p][(a, b)] += s[(k * rank + a, l * rank + b)] * cf;
                    }
                }
            }
        }
    }
    out
}

/// `ι ⊗ id` applied to a tuple of N×N matrices.
pub fn iota_tensor(alg: &StratifiedLieAlgebra, parts: &[CMat]) -> Result<CMat> {
    let m = alg.m();
    if parts.len() != m {
        return Err(Error::DimensionMismatch(format!("{} parts for dim g₋₂ = {m}", parts.len())));
    }
    let rank = parts.first().map_or(1, |p| p.nrows());
    let n = alg.n();
    let mut out = czero(n * rank, n * rank);
    for (l, part) in parts.iter().enumerate() {
        let y: Vec<f64> = (0..m).map(|q| if q == l { 1.0 } else { 0.0 }).collect();
        let il = linalg::to_complex(&iota(alg, &y)?);
        out = &out + &kron(&il, part);
    }
    Ok(out)
}

/// `φ_*(γ)` defined by `Σ φ_*(γ)_l Y'_l = Σ γ_l φ(Y_l)`.
pub fn pushforward(phi: &GradedHomomorphism, gamma: &SymbolGamma) -> Result<SymbolGamma> {
    if gamma.algebra().as_ref() != &phi.source {
        return Err(Error::DimensionMismatch("gamma is not defined on the source algebra".into()));
    }
    let block = phi.g2_block();
    let n = gamma.rank();
    let gammas = (0..block.nrows())
        .map(|lp| {
            gamma.gammas().iter().enumerate().fold(czero(n, n), |acc, (l, g)| {
                if block[(lp, l)] == 0.0 {
                    acc
                } else {
                    linalg::axpy(&acc, c(block[(lp, l)], 0.0), g)
                }
            })
        })
        .collect();
    SymbolGamma::new(Arc::new(phi.target.clone()), gammas)
}

/// Minimal-Frobenius-norm `δ(γ) ∈ so_n(M_N)` with `Σ δ_{kl}[X_k, X_l] = Σ γ_l Y_l`.
pub fn delta(gamma: &SymbolGamma) -> Result<CMat> {
    let big = iota_tensor(gamma.algebra(), gamma.gammas())?;
    Ok(linalg::scale(&big, c(0.5, 0.0)))
}

/// `γ(ξ) = i Σ ξ_l γ_l`.
pub fn gamma_poly(gamma: &SymbolGamma, xi: &[f64]) -> CMat {
    let n = gamma.rank();
    let mut out = czero(n, n);
    for (g, &x) in gamma.gammas().iter().zip(xi) {
        if x != 0.0 {
            out = linalg::axpy(&out, c(0.0, x), g);
        }
    }
    out
}

/// `Σ ξ_l h_l` for hermitian parts.
pub fn eval_part(parts: &[CMat], xi: &[f64]) -> CMat {
    let n = parts.first().map_or(0, |p| p.nrows());
    let mut out = czero(n, n);
    for (g, &x) in parts.iter().zip(xi) {
        if x != 0.0 {
            out = linalg::axpy(&out, c(x, 0.0), g);
        }
    }
    out
}

/// Orthonormal basis of hermitian N×N matrices in the Frobenius product.
pub fn hermitian_basis(rank: usize) -> Vec<CMat> {
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(rank * rank);
    for i in 0..rank {
        out.push(CMat::from_fn(rank, rank, |a, b| if a == i && b == i { c(1.0, 0.0) } else { c(0.0, 0.0) }));
    }
    for i in 0..rank {
        for j in i + 1..rank {
            out.push(CMat::from_fn(rank, rank, |a, b| {
                if (a, b) == (i, j) || (a, b) == (j, i) {
                    c(r2, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            }));
            out.push(CMat::from_fn(rank, rank, |a, b| {
                if (a, b) == (i, j) {
                    c(0.0, r2)
                } else if (a, b) == (j, i) {
                    c(0.0, -r2)
                } else {
                    c(0.0, 0.0)
                }
            }));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientNorm {
    /// `min_{t, s} ‖ι⊗id(b + t a) + s‖` over `s ∈ S ⊗ Herm_N`.
    pub value: f64,
    /// Minimizing `t`.
    pub t: f64,
    /// `min_t ‖ι⊗id(b + t a)‖`, no relation-space correction.
    pub subspace_value: f64,
    pub subspace_t: f64,
    /// `‖ι⊗id(b)‖`.
    pub representative_norm: f64,
    /// Upper bound on `value − true minimum` from the barrier solve.
    pub gap: f64,
}

fn is_zero(parts: &[CMat]) -> bool {
    parts.iter().all(|p| p.col_iter().all(|col| col.iter().all(|z| *z == c(0.0, 0.0))))
}

/// Sign that makes the first entry of largest magnitude positive, so that
/// `x` and `−x` produce bit-identical normalized problems.
fn canonical_sign(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            for v in [m[(i, j)].re, m[(i, j)].im] {
                if v.abs() > best * (1.0 + 1e-9) {
                    best = v.abs();
                    sign = v.signum();
                }
            }
        }
    }
    sign
}

/// `‖b‖_{W/ℝa}`: operator-norm distance from `ι⊗id(b)` to `ℝ ι⊗id(a) + S⊗Herm_N`.
pub fn quotient_norm(alg: &StratifiedLieAlgebra, b: &[CMat], a: &[CMat]) -> Result<QuotientNorm> {
    quotient_norm_at(alg, b, a, None)
}

/// As [`quotient_norm`], but the solve may stop as soon as the reported
/// interval `value ± gap` lies on one side of `level`.
pub fn quotient_norm_at(alg: &StratifiedLieAlgebra, b: &[CMat], a: &[CMat], level: Option<f64>) -> Result<QuotientNorm> {
    let bb = iota_tensor(alg, b)?;
    let aa = iota_tensor(alg, a)?;
    if bb.nrows() != aa.nrows() {
        return Err(Error::DimensionMismatch("a and b have different bundle ranks".into()));
    }
    let rank = b.first().map_or(1, |p| p.nrows());
    let rep = linalg::op_norm(&bb);
    if is_zero(b) {
        return Ok(QuotientNorm { value: 0.0, t: 0.0, subspace_value: 0.0, subspace_t: 0.0, representative_norm: 0.0, gap: 0.0 });
    }
    let sb = linalg::frobenius(&bb);
    let sgn_b = canonical_sign(&bb);
    let bhat = linalg::scale(&bb, c(sgn_b / sb, 0.0));
    let a_zero = is_zero(a) || linalg::frobenius(&aa) == 0.0;
    let (sa, sgn_a, ahat) = if a_zero {
        (1.0, 1.0, None)
    } else {
        let sa = linalg::frobenius(&aa);
        let sg = canonical_sign(&aa);
        (sa, sg, Some(linalg::scale(&aa, c(sg / sa, 0.0))))
    };
    let to_t = |th: f64| sgn_b * sb * th / (sgn_a * sa);

    if let Some(ah) = &ahat {
        let diff_p = linalg::max_abs_diff(&bhat, ah);
        let diff_m = linalg::max_abs_diff(&bhat, &linalg::scale(ah, c(-1.0, 0.0)));
        if diff_p <= 1e-14 || diff_m <= 1e-14 {
            let th = if diff_p <= diff_m { -1.0 } else { 1.0 };
            let t = to_t(th);
            return Ok(QuotientNorm { value: 0.0, t, subspace_value: 0.0, subspace_t: t, representative_norm: rep, gap: 0.0 });
        }
    }

    let herm = |m: &CMat| linalg::scale(m, c(0.0, 1.0));
    let h0 = herm(&bhat);
    let mut dirs: Vec<CMat> = Vec::new();
    let mut x0: Vec<f64> = Vec::new();
    if let Some(ah) = &ahat {
        let ht = herm(ah);
        // Frobenius projection start: t0 = −⟨B̂, Â⟩
        let mut ip = 0.0;
        for j in 0..ah.ncols() {
            for i in 0..ah.nrows() {
                ip += (bhat[(i, j)].conj() * ah[(i, j)]).re;
            }
        }
        dirs.push(ht);
        x0.push(-ip);
    }
    let lvl = level.map(|l| l / sb);
    let sub = barrier_min_norm_until(&h0, &dirs, &x0, lvl);
    let space = relation_space(alg);
    let hb = hermitian_basis(rank);
    let mut full_dirs = dirs.clone();
    for s in &space.basis {
        let sc = linalg::to_complex(s);
        for h in &hb {
            full_dirs.push(herm(&kron(&sc, h)));
        }
    }
    let mut x0f = sub.x.clone();
    x0f.resize(full_dirs.len(), 0.0);
    let full = if full_dirs.len() == dirs.len() { sub.clone() } else { barrier_min_norm_until(&h0, &full_dirs, &x0f, lvl) };
    let th = if ahat.is_some() { full.x[0] } else { 0.0 };
    let th_sub = if ahat.is_some() { sub.x[0] } else { 0.0 };
    let value = full.value.min(sub.value) * sb;
    Ok(QuotientNorm {
        value,
        t: if ahat.is_some() { to_t(th) } else { 0.0 },
        subspace_value: sub.value * sb,
        subspace_t: if ahat.is_some() { to_t(th_sub) } else { 0.0 },
        representative_norm: rep,
        gap: full.gap * sb,
    })
}

#[derive(Clone, Debug)]
pub struct BarrierResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gap: f64,
}

fn max_abs_eig(h: &CMat) -> f64 {
    linalg::herm_eigvals(h).iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn affine(h0: &CMat, dirs: &[CMat], x: &[f64]) -> CMat {
    let mut h = h0.clone();
    for (d, &xi) in dirs.iter().zip(x) {
        if xi != 0.0 {
            for j in 0..h.ncols() {
                for i in 0..h.nrows() {
                    h[(i, j)] += d[(i, j)] * xi;
                }
            }
        }
    }
    h
}

/// Minimizes `max |eig(H0 + Σ x_k H_k)|` over `x` for hermitian data with a
/// log-barrier interior-point method on `−τ ≤ H(x) ≤ τ`.
pub fn barrier_min_norm(h0: &CMat, dirs: &[CMat], x0: &[f64]) -> BarrierResult {
    barrier_min_norm_until(h0, dirs, x0, None)
}

/// As [`barrier_min_norm`], stopping early once `[value − gap, value + gap]`
/// excludes `level`.
pub fn barrier_min_norm_until(h0: &CMat, dirs: &[CMat], x0: &[f64], level: Option<f64>) -> BarrierResult {
    let p = dirs.len();
    let d = h0.nrows();
    let mut x = x0.to_vec();
    x.resize(p, 0.0);
    let start_val = max_abs_eig(&affine(h0, dirs, &x));
    let h0_val = max_abs_eig(h0);
    if p == 0 {
        return BarrierResult { x, value: h0_val, gap: 0.0 };
    }
    let scale = start_val.max(1e-300);
    let mut tau = start_val * 1.5 + 1e-3 * scale;
    let mut mu = scale;
    let gap_target = 1e-14 * scale;
    let mut best_x = x.clone();
    let mut best_val = start_val;
    if h0_val < best_val {
        best_val = h0_val;
        best_x = vec![0.0; p];
    }

    // log-barrier part only; the linear term τ/μ enters line searches as a difference
    let phi = |x: &[f64], tau: f64| -> Option<f64> {
        let lam = linalg::herm_eigvals(&affine(h0, dirs, x));
        let mut s = 0.0;
        for l in lam {
            let (u, v) = (tau - l, tau + l);
            if u <= 0.0 || v <= 0.0 {
                return None;
            }
            s -= u.ln() + v.ln();
        }
        Some(s)
    };

    let mut gap = f64::INFINITY;
    for _outer in 0..60 {
        for _newton in 0..80 {
            let h = affine(h0, dirs, &x);
            let (lam, v) = herm_eigh(&h);
            let vh = linalg::adjoint(&v);
            let pp: Vec<f64> = lam.iter().map(|l| 1.0 / (tau - l)).collect();
            let qq: Vec<f64> = lam.iter().map(|l| 1.0 / (tau + l)).collect();
            let dt: Vec<CMat> = dirs.iter().map(|dk| &vh * dk * &v).collect();
            let nvar = p + 1;
            let mut g = vec![0.0; nvar];
            let mut hess = RMat::zeros(nvar, nvar);
            // Hess_kl = Re Σ_ab w_ab D_k(a,b) conj(D_l(a,b)), as one product
            let weighted = CMat::from_fn(p, d * d, |k, q| {
                let (a, b) = (q / d, q % d);
                dt[k][(a, b)] * (pp[a] * pp[b] + qq[a] * qq[b])
            });
            let flat = CMat::from_fn(p, d * d, |k, q| dt[k][(q / d, q % d)].conj());
            let gram = &weighted * flat.transpose();
            for k in 0..p {
                let mut gk = 0.0;
                let mut hk_tau = 0.0;
                for a in 0..d {
                    let daa = dt[k][(a, a)].re;
                    gk += daa * (pp[a] - qq[a]);
                    hk_tau += daa * (-pp[a] * pp[a] + qq[a] * qq[a]);
                }
                g[k] = gk;
                hess[(k, p)] = hk_tau;
                hess[(p, k)] = hk_tau;
                for l in 0..p {
                    hess[(k, l)] = gram[(k, l)].re;
                }
            }
            g[p] = 1.0 / mu - pp.iter().zip(&qq).map(|(a, b)| a + b).sum::<f64>();
            hess[(p, p)] = pp.iter().zip(&qq).map(|(a, b)| a * a + b * b).sum();
            // symmetric diagonal scaling keeps the solve accurate as μ → 0
            let dsc: Vec<f64> = (0..nvar).map(|i| hess[(i, i)].max(f64::MIN_POSITIVE).sqrt().recip()).collect();
            let scaled = RMat::from_fn(nvar, nvar, |i, j| {
                hess[(i, j)] * dsc[i] * dsc[j] + if i == j { 1e-14 } else { 0.0 }
            });
            let rhs = RMat::from_fn(nvar, 1, |i, _| -g[i] * dsc[i]);
            let step = {
                use faer::linalg::solvers::Solve;
                scaled.partial_piv_lu().solve(&rhs)
            };
            let dx: Vec<f64> = (0..nvar).map(|i| step[(i, 0)] * dsc[i]).collect();
            if dx.iter().any(|v| !v.is_finite()) {
                break;
            }
            let dec: f64 = -g.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>();
            if dec / 2.0 < 1e-12 {
                break;
            }
            let f0 = match phi(&x, tau) {
                Some(f) => f,
                None => break,
            };
            // first-order distance to the boundary of −τ ≤ H ≤ τ
            let mut s: f64 = 1.0;
            for a in 0..d {
                let dl: f64 = (0..p).map(|k| dx[k] * dt[k][(a, a)].re).sum();
                let (u, v) = (tau - lam[a], tau + lam[a]);
                let (du, dv) = (dx[p] - dl, dx[p] + dl);
                if du < 0.0 {
                    s = s.min(0.95 * u / -du);
                }
                if dv < 0.0 {
                    s = s.min(0.95 * v / -dv);
                }
            }
            let mut accepted = false;
            // near the centre the decrease drowns in rounding; a few halvings suffice
            let tries = if dec < 1e-6 { 4 } else { 60 };
            for _ in 0..tries {
                let xn: Vec<f64> = (0..p).map(|i| x[i] + s * dx[i]).collect();
                let tn = tau + s * dx[p];
                if let Some(fnew) = phi(&xn, tn) {
                    if fnew + s * dx[p] / mu <= f0 - 0.25 * s * dec {
                        x = xn;
                        tau = tn;
                        accepted = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            // a step below rounding level means the centering has hit the noise floor
            if !accepted || s < 1e-12 {
                break;
            }
        }
        let val = max_abs_eig(&affine(h0, dirs, &x));
        if val < best_val {
            best_val = val;
            best_x = x.clone();
        }
        gap = 2.0 * d as f64 * mu;
        if gap <= gap_target || level.is_some_and(|l| best_val + gap < l || best_val - gap > l) {
            break;
        }
        mu *= 0.1;
    }
    BarrierResult { x: best_x, value: best_val, gap }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralWitness {
    pub xi: Vec<f64>,
    pub eigenvalue: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralTest {
    pub p: f64,
    pub passed: bool,
    /// `min_ξ dist(Spec γ(ξ), H(p))` over the samples.
    pub margin: f64,
    pub argmin_xi: Vec<f64>,
    pub witness: Option<SpectralWitness>,
    pub samples: usize,
    pub resolution: f64,
}

/// Distance from `z` to `H(p) = (−∞, −p] ∪ [p, ∞)`.
pub fn dist_to_h(z: c64, p: f64) -> f64 {
    let gap = (p - z.re.abs()).max(0.0);
    (gap * gap + z.im * z.im).sqrt()
}

pub const BOUNDARY_TOL: f64 = 1e-10;

/// Spectrum of `γ(ξ)` against `H(p)` over the given unit samples.
pub fn spectral_h_test(gamma: &SymbolGamma, p: f64, samples: &SphereSamples) -> Result<SpectralTest> {
    if p <= 0.0 || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p = {p} must be positive")));
    }
    let mut margin = f64::INFINITY;
    let mut argmin = Vec::new();
    let mut witness = None;
    for xi in &samples.points {
        let g = gamma_poly(gamma, xi);
        for z in linalg::eigvals(&g) {
            let dz = dist_to_h(z, p);
            if dz < margin {
                margin = dz;
                argmin = xi.clone();
                if dz <= BOUNDARY_TOL * p.max(1.0) {
                    witness = Some(SpectralWitness { xi: xi.clone(), eigenvalue: [z.re, z.im] });
                }
            }
        }
    }
    if samples.points.is_empty() {
        margin = f64::INFINITY;
    }
    Ok(SpectralTest {
        p,
        passed: witness.is_none(),
        margin,
        argmin_xi: argmin,
        witness,
        samples: samples.points.len(),
        resolution: samples.resolution,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphaWitness {
    pub xi: Vec<f64>,
    pub v: Vec<[f64; 2]>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphaTest {
    pub passed: bool,
    /// `1 − max |⟨v, ξ(b)v⟩|`.
    pub margin: f64,
    pub witness: Option<AlphaWitness>,
    pub kernel_cut: f64,
    /// True when the verdict changes with the kernel cut scaled by 10 or 1/10.
    pub fragile: bool,
}

/// `max |⟨v, ξ(b)v⟩|` over unit `v ∈ Ker ξ(a)`, with the maximizing vector.
pub fn alpha_value(a_xi: &CMat, b_xi: &CMat, cut: f64) -> (f64, Option<Vec<c64>>) {
    let (lam, vecs) = herm_eigh(a_xi);
    let (lb, _) = (linalg::herm_eigvals(b_xi), ());
    let scale = lam.iter().chain(&lb).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let ker: Vec<usize> = (0..lam.len()).filter(|&i| lam[i].abs() <= cut * scale).collect();
    if ker.is_empty() {
        return (0.0, None);
    }
    let n = a_xi.nrows();
    let k = ker.len();
    let basis = CMat::from_fn(n, k, |i, j| vecs[(i, ker[j])]);
    let comp = &linalg::adjoint(&basis) * b_xi * &basis;
    let comp = CMat::from_fn(k, k, |i, j| (comp[(i, j)] + comp[(j, i)].conj()) * 0.5);
    let (cl, cv) = herm_eigh(&comp);
    let (idx, val) = cl.iter().enumerate().fold((0, -1.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
    let v: Vec<c64> = (0..n).map(|i| (0..k).map(|j| basis[(i, j)] * cv[(j, idx)]).sum()).collect();
    (val, Some(v))
}

fn alpha_scan(gamma: &SymbolGamma, samples: &SphereSamples, cut: f64) -> (f64, Option<AlphaWitness>) {
    let (a, b) = (gamma.re(), gamma.im());
    let mut best = 0.0f64;
    let mut wit = None;
    for xi in &samples.points {
        let (val, v) = alpha_value(&eval_part(&a, xi), &eval_part(&b, xi), cut);
        if val > best || wit.is_none() && v.is_some() && val >= best {
            best = val;
            wit = v.map(|v| AlphaWitness { xi: xi.clone(), v: v.iter().map(|z| [z.re, z.im]).collect(), value: val });
        }
    }
    (best, wit)
}

pub const DEFAULT_KERNEL_CUT: f64 = 1e-7;

/// Property α over the given unit samples.
pub fn property_alpha_test(gamma: &SymbolGamma, samples: &SphereSamples, cut: f64) -> AlphaTest {
    let fails = |v: f64| v >= 1.0 - BOUNDARY_TOL;
    let (best, wit) = alpha_scan(gamma, samples, cut);
    let passed = !fails(best);
    let fragile = [cut * 10.0, cut / 10.0].iter().any(|&c2| fails(alpha_scan(gamma, samples, c2).0) == passed);
    AlphaTest {
        passed,
        margin: 1.0 - best,
        witness: if passed { None } else { wit },
        kernel_cut: cut,
        fragile,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::catalog;

    #[test]
    fn iota_heisenberg() {
        let h = catalog("heisenberg", &[1]).unwrap();
        let i = iota(&h, &[1.0]).unwrap();
        assert_eq!(i[(0, 1)], 1.0);
        assert_eq!(i[(1, 0)], -1.0);
    }

    #[test]
    fn relation_space_n4() {
        let a = catalog("n4", &[]).unwrap();
        let s = relation_space(&a);
        assert_eq!(s.dim(), 1);
        assert!((s.basis[0][(0, 2)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn barrier_scalar() {
        // min_t max|eig(diag(1, -1) + t diag(1, 1))| = 1 at t = 0
        let h0 = CMat::from_fn(2, 2, |i, j| if i == j { c(if i == 0 { 1.0 } else { -1.0 }, 0.0) } else { c(0.0, 0.0) });
        let d = linalg::cidentity(2);
        let r = barrier_min_norm(&h0, &[d], &[0.7]);
        assert!((r.value - 1.0).abs() < 1e-10, "{r:?}");
    }
}
