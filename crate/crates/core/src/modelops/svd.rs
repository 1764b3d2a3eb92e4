//! Smallest singular values of sparse operators.

use faer::c64;
use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::SparseOp;
use crate::linalg::{c, herm_eigh, CMat, RMat};

/// Components up to this size are handled with a dense decomposition.
pub const DENSE_LIMIT: usize = 1600;

#[derive(Clone, Debug)]
pub struct SmallestSv {
    /// Ascending.
    pub values: Vec<f64>,
    /// Right singular vector of the smallest value.
    pub vector: Vec<c64>,
    pub converged: bool,
    pub iterations: usize,
}

fn dense_smallest(op: &SparseOp, k: usize) -> (Vec<(f64, Vec<c64>)>, bool) {
    let n = op.n;
    if n == 0 {
        return (Vec::new(), true);
    }
    if op.is_real() && op.is_hermitian(0.0) {
        let a = RMat::from_fn(n, n, |i, j| op.get(i, j).re);
        let (vals, vecs) = crate::linalg::sym_eigh(&a);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&x, &y| vals[x].abs().partial_cmp(&vals[y].abs()).unwrap());
        let out = idx
            .iter()
            .take(k)
            .enumerate()
            .map(|(r, &i)| {
                let v = if r == 0 { (0..n).map(|q| c(vecs[(q, i)], 0.0)).collect() } else { Vec::new() };
                (vals[i].abs(), v)
            })
            .collect();
        return (out, true);
    }
    let dense = op.to_dense();
    if op.is_hermitian(1e-14) {
        let (vals, vecs) = herm_eigh(&dense);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&x, &y| vals[x].abs().partial_cmp(&vals[y].abs()).unwrap());
        let out = idx
            .iter()
            .take(k)
            .enumerate()
            .map(|(r, &i)| {
                let v = if r == 0 { (0..n).map(|q| vecs[(q, i)]).collect() } else { Vec::new() };
                (vals[i].abs(), v)
            })
            .collect();
        return (out, true);
    }
    match dense.svd() {
        Ok(svd) => {
            let s = svd.S();
            let v = svd.V();
            let out = (0..k.min(n))
                .map(|r| {
                    let i = n - 1 - r;
                    let vec = if r == 0 { (0..n).map(|q| v[(q, i)]).collect() } else { Vec::new() };
                    (s[i].re, vec)
                })
                .collect();
            (out, true)
        }
        Err(_) => (Vec::new(), false),
    }
}

fn orthonormalize(y: &CMat) -> CMat {
    y.qr().compute_thin_Q()
}

fn apply(op: &SparseOp, x: &CMat) -> CMat {
    let mut out = CMat::zeros(op.n, x.ncols());
    for (i, j, v) in op.iter() {
        for col in 0..x.ncols() {
            out[(i, col)] += v * x[(j, col)];
        }
    }
    out
}

/// Subspace inverse iteration on `(A*A)⁻¹` with a sparse LU of `A`.
fn iterative_smallest(op: &SparseOp, k: usize, seed: u64) -> (Vec<(f64, Vec<c64>)>, bool, usize) {
    let n = op.n;
    let a = op.to_faer();
    let lu = match a.sp_lu() {
        Ok(lu) => lu,
        Err(_) => return (vec![(0.0, vec![c(0.0, 0.0); n])], false, 0),
    };
    let b = (k + 4).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: CMat = Mat::from_fn(n, b, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    x = orthonormalize(&x);
    let mut prev = vec![f64::INFINITY; k.min(b)];
    let mut result = Vec::new();
    for it in 1..=400 {
        let mut y = x.clone();
        lu.solve_adjoint_in_place(&mut y);
        lu.solve_in_place(&mut y);
        if y.col_iter().any(|col| col.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return (vec![(0.0, vec![c(0.0, 0.0); n])], false, it);
        }
        let q = orthonormalize(&y);
        let w = apply(op, &q);
        let svd = match w.thin_svd() {
            Ok(s) => s,
            Err(_) => return (Vec::new(), false, it),
        };
        let s = svd.S();
        let v = svd.V();
        let nb = s.dim();
        // ascending order of Ritz values
        let order: Vec<usize> = (0..nb).rev().collect();
        let vsorted = Mat::from_fn(nb, nb, |i, j| v[(i, order[j])]);
        x = &q * &vsorted;
        let vals: Vec<f64> = order.iter().map(|&i| s[i].re).collect();
        let kk = prev.len();
        let scale = vals.iter().take(kk).fold(0.0f64, |m, v| m.max(*v)).max(f64::MIN_POSITIVE);
        let change = (0..kk).fold(0.0f64, |m, i| m.max((vals[i] - prev[i]).abs() / vals[i].max(1e-3 * scale)));
        prev = vals[..kk].to_vec();
        result = (0..kk)
            .map(|i| {
                let vec = if i == 0 { (0..n).map(|r| x[(r, 0)]).collect() } else { Vec::new() };
                (vals[i], vec)
            })
            .collect();
        if change < 1e-11 {
            return (result, true, it);
        }
    }
    (result, false, 400)
}

pub fn smallest_singular_values(op: &SparseOp, k: usize, seed: u64) -> SmallestSv {
    let k = k.max(1);
    let mut all: Vec<(f64, Vec<c64>, Vec<usize>)> = Vec::new();
    let mut converged = true;
    let mut iterations = 0;
    for comp in op.components() {
        let sub = op.submatrix(&comp);
        let (vals, ok) = if sub.n <= DENSE_LIMIT {
            dense_smallest(&sub, k)
        } else {
            let (v, ok, it) = iterative_smallest(&sub, k, seed);
            iterations = iterations.max(it);
            (v, ok)
        };
        converged &= ok;
        for (s, v) in vals {
            all.push((s, v, comp.clone()));
        }
    }
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    all.truncate(k);
    let mut vector = vec![c(0.0, 0.0); op.n];
    if let Some((_, v, comp)) = all.first() {
        if v.len() == comp.len() {
            for (local, &global) in comp.iter().enumerate() {
                vector[global] = v[local];
            }
        }
    }
    SmallestSv { values: all.iter().map(|a| a.0).collect(), vector, converged, iterations }
}
