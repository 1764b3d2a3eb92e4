use std::collections::BTreeMap;

use faer::c64;
use faer::sparse::{SparseColMat, Triplet};

use crate::linalg::{c, CMat};

/// Square complex matrix in coordinate form with duplicates summed.
#[derive(Clone, Debug)]
pub struct SparseOp {
    pub n: usize,
    entries: BTreeMap<(usize, usize), c64>,
}

impl SparseOp {
    pub fn new(n: usize) -> Self {
        SparseOp { n, entries: BTreeMap::new() }
    }

    pub fn add(&mut self, i: usize, j: usize, v: c64) {
        if v == c(0.0, 0.0) {
            return;
        }
        *self.entries.entry((i, j)).or_insert(c(0.0, 0.0)) += v;
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.entries.get(&(i, j)).copied().unwrap_or(c(0.0, 0.0))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, c64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn scaled(&self, s: c64) -> SparseOp {
        SparseOp { n: self.n, entries: self.entries.iter().map(|(&k, &v)| (k, v * s)).collect() }
    }

    /// `self ⊗ b` for a dense N×N block.
    pub fn kron_dense(&self, b: &CMat) -> SparseOp {
        let r = b.nrows();
        let mut out = SparseOp::new(self.n * r);
        for (i, j, v) in self.iter() {
            for a in 0..r {
                for bb in 0..r {
                    out.add(i * r + a, j * r + bb, v * b[(a, bb)]);
                }
            }
        }
        out
    }

    pub fn plus(&self, other: &SparseOp) -> SparseOp {
        let mut out = self.clone();
        for (i, j, v) in other.iter() {
            out.add(i, j, v);
        }
        out
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn to_faer(&self) -> SparseColMat<usize, c64> {
        let trip: Vec<Triplet<usize, usize, c64>> = self.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &trip).expect("valid triplets")
    }

    pub fn matvec(&self, x: &[c64]) -> Vec<c64> {
        let mut y = vec![c(0.0, 0.0); self.n];
        for (i, j, v) in self.iter() {
            y[i] += v * x[j];
        }
        y
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(1.0);
        self.iter().all(|(i, j, v)| (v - self.get(j, i).conj()).norm() <= tol * scale)
    }

    pub fn is_real(&self) -> bool {
        self.iter().all(|(_, _, v)| v.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0f64, |m, (_, _, v)| m.max(v.norm()))
    }

    /// Frobenius-type scale `max row sum`, an upper bound for the 2-norm of
    /// hermitian matrices and a cheap magnitude estimate otherwise.
    pub fn inf_norm(&self) -> f64 {
        let mut rows = vec![0.0; self.n];
        for (i, _, v) in self.iter() {
            rows[i] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Connected components of the sparsity graph, each sorted.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        for (i, j, _) in self.iter() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        groups.into_values().collect()
    }

    pub fn submatrix(&self, idx: &[usize]) -> SparseOp {
        let mut pos = vec![usize::MAX; self.n];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let mut out = SparseOp::new(idx.len());
        for (i, j, v) in self.iter() {
            if pos[i] != usize::MAX && pos[j] != usize::MAX {
                out.add(pos[i], pos[j], v);
            }
        }
        out
    }
}
