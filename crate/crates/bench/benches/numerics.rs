use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use rockland::linalg::{c, CMat};
use rockland::modelops::{self, Disc1d, Grid, Scheme};
use rockland::sphere::unit_sphere;
use rockland::symbolmap::spectral_h_test;
use rockland::{catalog, decide, quotient_norm, RunConfig, SymbolGamma};

fn gamma(name: &str, params: &[i64], rank: usize) -> SymbolGamma {
    let a = Arc::new(catalog(name, params).unwrap());
    let gs = (0..a.m())
        .map(|l| CMat::from_fn(rank, rank, |i, j| c(0.1 * (i + l) as f64 - 0.2 * j as f64, 0.3 + 0.05 * (i * j + l) as f64)))
        .collect();
    SymbolGamma::new(a, gs).unwrap()
}

fn bench_quotient_norm(cr: &mut Criterion) {
    let mut g = cr.benchmark_group("quotient_norm");
    for (name, params, rank) in [("n4", vec![], 2usize), ("heisenberg_plus_line", vec![2i64], 2)] {
        let gm = gamma(name, &params, rank);
        g.bench_function(format!("{name}_N{rank}"), |b| {
            b.iter(|| quotient_norm(gm.algebra(), &gm.im(), &gm.re()).unwrap())
        });
    }
    g.finish();
}

fn bench_spectral(cr: &mut Criterion) {
    let gm = gamma("n4", &[], 2);
    let samples = unit_sphere(gm.algebra(), 4096);
    cr.bench_function("spectral_h_test_n4_4096", |b| b.iter(|| spectral_h_test(black_box(&gm), 1.0, &samples).unwrap()));
}

fn bench_decide(cr: &mut Criterion) {
    let mut cfg = RunConfig::default();
    cfg.h_elliptic = false;
    let mut g = cr.benchmark_group("decide");
    g.sample_size(10);
    for (name, params) in [("engel", vec![]), ("n4", vec![]), ("heisenberg_plus_line", vec![1i64])] {
        let gm = gamma(name, &params, 1);
        g.bench_function(name, |b| b.iter(|| decide(black_box(&gm), &cfg).unwrap()));
    }
    g.finish();
}

fn bench_model_operators(cr: &mut Criterion) {
    let mut g = cr.benchmark_group("min_singular");
    g.sample_size(10);
    let one = CMat::from_fn(1, 1, |_, _| c(0.0, 0.5));
    let disc = Disc1d { scheme: Scheme::HermiteBasis, size: 200, fine_size: None, length: None };
    g.bench_function("engel_hermite_200", |b| {
        b.iter(|| {
            let op = modelops::build_engel_generic(1.0, 0.5, &one, &disc).unwrap();
            modelops::min_singular(&op, 1e-6, true)
        })
    });
    let pair = [CMat::from_fn(1, 1, |_, _| c(0.0, 0.5)), CMat::from_fn(1, 1, |_, _| c(0.0, 0.0))];
    g.bench_function("n4_grid_32", |b| {
        b.iter(|| {
            let op = modelops::build_n4_generic(1.0, 0.5, &pair, &Grid::square(32)).unwrap();
            modelops::min_singular(&op, 1e-6, true)
        })
    });
    g.finish();
}

criterion_group!(benches, bench_quotient_norm, bench_spectral, bench_decide, bench_model_operators);
criterion_main!(benches);
