//! Thin helpers over faer for the small dense problems that show up everywhere.

use faer::{c64, Mat, Side};

pub type CMat = Mat<c64>;
pub type RMat = Mat<f64>;

pub fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

pub fn czero(r: usize, cols: usize) -> CMat {
    Mat::zeros(r, cols)
}

pub fn cidentity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

pub fn to_complex(a: &RMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c(a[(i, j)], 0.0))
}

pub fn adjoint(a: &CMat) -> CMat {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn scale(a: &CMat, s: c64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

/// `a + s * b`
pub fn axpy(a: &CMat, s: c64, b: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + s * b[(i, j)])
}

pub fn frobenius(a: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// Hermitian part `(a + a*)/2` and "imaginary" part `(a - a*)/(2i)`.
pub fn re_im_parts(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    let re = Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let im = Mat::from_fn(n, n, |i, j| (a[(i, j)] - a[(j, i)].conj()) * c(0.0, -0.5));
    (re, im)
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..=i {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Eigenvalues of a hermitian matrix, ascending.
pub fn herm_eigvals(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    a.self_adjoint_eigenvalues(Side::Lower)
        .expect("hermitian eigensolver failed")
}

/// Eigen-decomposition of a hermitian matrix, eigenvalues ascending.
pub fn herm_eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), czero(0, 0));
    }
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .expect("hermitian eigensolver failed");
    let vals = (0..n).map(|i| e.S()[i].re).collect();
    (vals, e.U().to_owned())
}

pub fn sym_eigh(a: &RMat) -> (Vec<f64>, RMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), Mat::zeros(0, 0));
    }
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric eigensolver failed");
    let vals = (0..n).map(|i| e.S()[i]).collect();
    (vals, e.U().to_owned())
}

/// Eigenvalues of a general complex matrix.
pub fn eigvals(a: &CMat) -> Vec<c64> {
    match a.nrows() {
        0 => Vec::new(),
        1 => vec![a[(0, 0)]],
        2 => {
            let (p, q, r, s) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
            let half_tr = (p + s) * 0.5;
            let disc = ((p - s) * 0.5 * ((p - s) * 0.5) + q * r).sqrt();
            vec![half_tr + disc, half_tr - disc]
        }
        _ => a.eigenvalues().expect("eigensolver failed"),
    }
}

/// Singular values, descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    a.singular_values().expect("svd failed")
}

pub fn singular_values_real(a: &RMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    a.singular_values().expect("svd failed")
}

pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn sigma_min(a: &CMat) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Orthonormal basis of the null space of a real matrix (columns), via SVD.
pub fn real_nullspace(a: &RMat, tol: f64) -> Vec<Vec<f64>> {
    let ncols = a.ncols();
    if ncols == 0 {
        return Vec::new();
    }
    if a.nrows() == 0 {
        return (0..ncols)
            .map(|i| (0..ncols).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
    }
    // Pad rows so the full V factor is available.
    let rows = a.nrows().max(ncols);
    let padded = Mat::from_fn(rows, ncols, |i, j| if i < a.nrows() { a[(i, j)] } else { 0.0 });
    let svd = padded.svd().expect("svd failed");
    let s = svd.S();
    let smax = if ncols > 0 { s[0].abs() } else { 0.0 };
    let v = svd.V();
    (0..ncols)
        .filter(|&k| s[k].abs() <= tol * smax.max(1.0))
        .map(|k| (0..ncols).map(|i| v[(i, k)]).collect())
        .collect()
}

/// Rank by row reduction with partial pivoting, absolute pivot tolerance.
pub fn rank_rowreduce(rows: &[Vec<f64>], tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let ncols = m[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        let mut best = rank;
        let mut best_val = 0.0;
        for (r, row) in m.iter().enumerate().skip(rank) {
            if row[col].abs() > best_val {
                best_val = row[col].abs();
                best = r;
            }
        }
        if best_val <= tol {
            continue;
        }
        m.swap(rank, best);
        let pivot = m[rank].clone();
        for row in m.iter_mut().skip(rank + 1) {
            let f = row[col] / pivot[col];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x -= f * p;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Real matrix inverse via LU; panics on exact singularity.
pub fn real_inverse(a: &RMat) -> RMat {
    use faer::linalg::solvers::DenseSolveCore;
    a.partial_piv_lu().inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig2_matches_general() {
        let a = Mat::from_fn(2, 2, |i, j| c(1.0 + i as f64, j as f64 - 0.3 * i as f64));
        let mut e2 = eigvals(&a);
        let mut eg: Vec<c64> = a.eigenvalues().unwrap();
        let key = |z: &c64| (z.re * 1e6).round() as i64 * 1_000_000 + (z.im * 1e6).round() as i64;
        e2.sort_by_key(key);
        eg.sort_by_key(key);
        for (x, y) in e2.iter().zip(&eg) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn nullspace_of_rank_one() {
        let a = Mat::from_fn(1, 3, |_, j| [1.0, 1.0, 0.0][j]);
        let ns = real_nullspace(&a, 1e-12);
        assert_eq!(ns.len(), 2);
    }

    #[test]
    fn rowreduce_rank() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![0.0, 1.0]];
        assert_eq!(rank_rowreduce(&rows, 1e-10), 2);
    }
}
