//! Kirillov forms `ω_ξ(X, Y) = ξ([X, Y])` on g₋₁ and the oscillator data
//! derived from them.

use serde::Serialize;

use crate::algebra::StratifiedLieAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{singular_values_real, sym_eigh, RMat};

pub const DEFAULT_RANK_CUT: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct KirillovData {
    pub xi: Vec<f64>,
    #[serde(serialize_with = "ser_mat")]
    pub omega: RMat,
    pub rank: usize,
    #[serde(serialize_with = "ser_mat")]
    pub abs_omega: RMat,
    pub singular_values: Vec<f64>,
    pub pfaffian: Option<f64>,
}

fn ser_mat<S: serde::Serializer>(m: &RMat, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
    rows.serialize(s)
}

/// The n×n matrix `ω_ξ` for `ξ` given in the dual of the listed g₋₂ basis.
pub fn omega(alg: &StratifiedLieAlgebra, xi: &[f64]) -> RMat {
    let l1 = alg.layer(1);
    let l2 = alg.layer(2);
    let n = l1.len();
    RMat::from_fn(n, n, |j, k| l2.iter().zip(xi).map(|(&y, &x)| x * alg.c(l1[j], l1[k], y)).sum())
}

/// `√(−ω²)`, with negative round-off in the spectrum clamped to zero.
pub fn abs_antisymmetric(omega: &RMat) -> RMat {
    let n = omega.nrows();
    let neg_sq = RMat::from_fn(n, n, |i, j| -(0..n).map(|k| omega[(i, k)] * omega[(k, j)]).sum::<f64>());
    let sym = RMat::from_fn(n, n, |i, j| 0.5 * (neg_sq[(i, j)] + neg_sq[(j, i)]));
    let (vals, vecs) = sym_eigh(&sym);
    let roots: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    RMat::from_fn(n, n, |i, j| (0..n).map(|k| vecs[(i, k)] * roots[k] * vecs[(j, k)]).sum())
}

fn rank_from(sv: &[f64], cut: f64) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > cut * smax).count()
}

pub fn kirillov_form(alg: &StratifiedLieAlgebra, xi: &[f64]) -> Result<KirillovData> {
    kirillov_form_with(alg, xi, DEFAULT_RANK_CUT)
}

pub fn kirillov_form_with(alg: &StratifiedLieAlgebra, xi: &[f64], rank_cut: f64) -> Result<KirillovData> {
    if xi.len() != alg.m() {
        return Err(Error::DimensionMismatch(format!("xi has length {}, dim g₋₂ = {}", xi.len(), alg.m())));
    }
    let om = omega(alg, xi);
    let sv = singular_values_real(&om);
    let rank = rank_from(&sv, rank_cut);
    let pf = if om.nrows() % 2 == 0 { pfaffian(&om).ok() } else { None };
    Ok(KirillovData { xi: xi.to_vec(), abs_omega: abs_antisymmetric(&om), omega: om, rank, singular_values: sv, pfaffian: pf })
}

/// Pfaffian by skew-symmetric Gaussian elimination with pivoting.
pub fn pfaffian(omega: &RMat) -> Result<f64> {
    let n = omega.nrows();
    if omega.ncols() != n {
        return Err(Error::DimensionMismatch("pfaffian needs a square matrix".into()));
    }
    if n % 2 == 1 {
        return Err(Error::Precondition(format!("pfaffian of odd dimension {n}")));
    }
    let scale = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).fold(0.0f64, |a, (i, j)| a.max(omega[(i, j)].abs()));
    for i in 0..n {
        for j in 0..=i {
            if (omega[(i, j)] + omega[(j, i)]).abs() > 1e-10 * scale.max(1.0) {
                return Err(Error::Precondition(format!("matrix not antisymmetric at ({i}, {j})")));
            }
        }
    }
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| omega[(i, j)]).collect()).collect();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let kp = (k + 1..n)
            .max_by(|&x, &y| a[k][x].abs().partial_cmp(&a[k][y].abs()).unwrap())
            .unwrap();
        if kp != k + 1 {
            a.swap(k + 1, kp);
            for row in a.iter_mut() {
                row.swap(k + 1, kp);
            }
            pf = -pf;
        }
        if a[k][k + 1] == 0.0 {
            return Ok(0.0);
        }
        pf *= a[k][k + 1];
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| a[k][j] / a[k][k + 1]).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| a[i][k + 1]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[i][j] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    Ok(pf)
}

fn require_step2_center(alg: &StratifiedLieAlgebra) -> Result<()> {
    if alg.step() != 2 {
        return Err(Error::Precondition(format!("step-2 mode needs step 2, got {}", alg.step())));
    }
    let center = alg.center();
    let l2 = alg.layer(2);
    let inside = center.iter().all(|v| v.iter().enumerate().all(|(i, x)| l2.contains(&i) || x.abs() < 1e-10));
    if center.len() != alg.m() || !inside {
        return Err(Error::Precondition(
            "center differs from g₋₂; truncate or use the general center".into(),
        ));
    }
    Ok(())
}

/// `rank ω_ξ = dim g₋₁` for a step-2 algebra whose center is g₋₂.
pub fn flat_orbit_test(alg: &StratifiedLieAlgebra, xi: &[f64]) -> Result<bool> {
    require_step2_center(alg)?;
    if xi.iter().all(|&x| x == 0.0) {
        return Ok(false);
    }
    Ok(kirillov_form(alg, xi)?.rank == alg.n())
}

/// Flat-orbit test for `ξ` on the center `z` (coordinates in the orthonormal
/// basis returned by `alg.center()`): the form `ξ([X, Y])` must be
/// nondegenerate on `g/z`.
pub fn flat_orbit_test_center(alg: &StratifiedLieAlgebra, xi_center: &[f64]) -> Result<bool> {
    let center = alg.center();
    if xi_center.len() != center.len() {
        return Err(Error::DimensionMismatch("xi must have length dim z".into()));
    }
    if xi_center.iter().all(|&x| x == 0.0) {
        return Ok(false);
    }
    let d = alg.dim();
    let functional: Vec<f64> = (0..d).map(|k| center.iter().zip(xi_center).map(|(v, x)| v[k] * x).sum()).collect();
    let form = RMat::from_fn(d, d, |i, j| (0..d).map(|k| alg.c(i, j, k) * functional[k]).sum());
    let sv = singular_values_real(&form);
    Ok(rank_from(&sv, DEFAULT_RANK_CUT) == d - center.len())
}

/// `λ(ξ) = Tr|ω_ξ| / 2`.
pub fn harmonic_bottom(alg: &StratifiedLieAlgebra, xi: &[f64]) -> Result<f64> {
    if xi.iter().all(|&x| x == 0.0) {
        return Err(Error::Precondition("harmonic_bottom at ξ = 0".into()));
    }
    if xi.len() != alg.m() {
        return Err(Error::DimensionMismatch(format!("xi has length {}, dim g₋₂ = {}", xi.len(), alg.m())));
    }
    Ok(singular_values_real(&omega(alg, xi)).iter().sum::<f64>() / 2.0)
}

/// Positive eigenvalues `μ_j` of `|ω_ξ|`, one per ± pair, ascending.
pub fn oscillator_frequencies(alg: &StratifiedLieAlgebra, xi: &[f64]) -> Vec<f64> {
    let mut sv = singular_values_real(&omega(alg, xi));
    let smax = sv.first().copied().unwrap_or(0.0);
    sv.retain(|&s| s > DEFAULT_RANK_CUT * smax && s > 0.0);
    sv.reverse();
    sv.chunks(2).map(|p| p.iter().sum::<f64>() / p.len() as f64).collect()
}

pub const MAX_SPECTRUM_LEN: usize = 5_000_000;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Spectrum of `s_k(ξ) + Tr|ω_ξ|/2` for `k ≤ kmax`, with multiplicity.
///
/// In the joint eigenbasis of `|ω_ξ|` these are `Tr|ω_ξ|/2 + 2 Σ n_j μ_j`,
/// the levels of the oscillator whose ground energy is `λ(ξ)`.
pub fn harmonic_spectrum(alg: &StratifiedLieAlgebra, xi: &[f64], kmax: i64) -> Result<Vec<f64>> {
    if kmax < 0 {
        return Err(Error::InvalidParameter(format!("kmax = {kmax} < 0")));
    }
    let bottom = harmonic_bottom(alg, xi)?;
    let mu = oscillator_frequencies(alg, xi);
    Ok(levels(bottom, &mu, kmax as usize)?.into_iter().map(|(v, _)| v).collect())
}

/// Levels `bottom + 2 Σ n_j μ_j` for `Σ n_j ≤ kmax`, paired with `Σ n_j`.
pub fn levels(bottom: f64, mu: &[f64], kmax: usize) -> Result<Vec<(f64, usize)>> {
    let count = binomial(mu.len() + kmax, mu.len());
    if count > MAX_SPECTRUM_LEN as f64 {
        return Err(Error::ResourceGuard(format!("{count} oscillator levels requested")));
    }
    let mut out = Vec::with_capacity(count as usize);
    fn rec(mu: &[f64], idx: usize, left: usize, used: usize, acc: f64, out: &mut Vec<(f64, usize)>) {
        if idx == mu.len() {
            out.push((acc, used));
            return;
        }
        for nj in 0..=left {
            rec(mu, idx + 1, left - nj, used + nj, acc + 2.0 * nj as f64 * mu[idx], out);
        }
    }
    rec(mu, 0, kmax, 0, bottom, &mut out);
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(out)
}
