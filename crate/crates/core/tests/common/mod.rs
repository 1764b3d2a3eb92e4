#![allow(dead_code)]

use std::sync::Arc;
use std::time::{Duration, Instant};

use faer::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rockland::linalg::CMat;
use rockland::{catalog, StratifiedLieAlgebra, SymbolGamma};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn alg(name: &str, params: &[i64]) -> Arc<StratifiedLieAlgebra> {
    Arc::new(catalog(name, params).unwrap())
}

pub fn cmat(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMat {
    CMat::from_fn(n, n, |_, _| c64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
}

pub fn random_gamma(rng: &mut ChaCha8Rng, a: &Arc<StratifiedLieAlgebra>, rank: usize, scale: f64) -> SymbolGamma {
    let gs = (0..a.m()).map(|_| cmat(rng, rank, scale)).collect();
    SymbolGamma::new(a.clone(), gs).unwrap()
}

pub fn scalars(a: &Arc<StratifiedLieAlgebra>, zs: &[(f64, f64)]) -> SymbolGamma {
    let zs: Vec<c64> = zs.iter().map(|&(r, i)| c64::new(r, i)).collect();
    SymbolGamma::from_scalars(a.clone(), &zs).unwrap()
}

/// Prints the criterion line, then asserts.
pub fn report(k: u32, name: &str, ok: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let within = elapsed <= budget;
    let tag = if ok && within { "PASS" } else { "FAIL" };
    println!("{tag} criterion {k}: {name} ({:.2}s, budget {}s) {detail}", elapsed.as_secs_f64(), budget.as_secs());
    assert!(ok, "criterion {k} failed: {detail}");
    assert!(within, "criterion {k} exceeded its time budget");
}

pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed())
}

/// `γ_l = i H_l` with random hermitian `H_l`; `γ(ξ)` is then hermitian, so
/// spectral violations occur on sets of positive measure.
pub fn random_imaginary_gamma(rng: &mut ChaCha8Rng, a: &Arc<StratifiedLieAlgebra>, rank: usize, scale: f64) -> SymbolGamma {
    let gs = (0..a.m())
        .map(|_| {
            let m = cmat(rng, rank, scale);
            let h = CMat::from_fn(rank, rank, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
            CMat::from_fn(rank, rank, |i, j| h[(i, j)] * c64::new(0.0, 1.0))
        })
        .collect();
    SymbolGamma::new(a.clone(), gs).unwrap()
}
