mod common;

use std::sync::Arc;

use faer::c64;
use proptest::prelude::*;
use rockland::kirillov::pfaffian;
use rockland::linalg::{self, c, CMat, RMat};
use rockland::symbolmap::{contract, delta, gamma_poly, quotient_norm};
use rockland::{decide, RunConfig, StratifiedLieAlgebra, SymbolGamma, Verdict};

use common::alg;

// Oracles

/// Pfaffian by expansion along the first row.
fn pf_expand(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..n {
        let keep: Vec<usize> = (1..n).filter(|&k| k != j).collect();
        let sub: Vec<Vec<f64>> = keep.iter().map(|&r| keep.iter().map(|&q| a[r][q]).collect()).collect();
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        s += sign * a[0][j] * pf_expand(&sub);
    }
    s
}

/// Determinant by Laplace expansion.
fn det_expand(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    (0..n)
        .map(|j| {
            let sub: Vec<Vec<f64>> = (1..n).map(|r| (0..n).filter(|&q| q != j).map(|q| a[r][q]).collect()).collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * a[0][j] * det_expand(&sub)
        })
        .sum()
}

fn skew(n: usize, vals: &[f64]) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    let mut it = vals.iter();
    for i in 0..n {
        for j in i + 1..n {
            let v = *it.next().unwrap();
            a[i][j] = v;
            a[j][i] = -v;
        }
    }
    a
}

fn to_rmat(a: &[Vec<f64>]) -> RMat {
    RMat::from_fn(a.len(), a.len(), |i, j| a[i][j])
}

fn gamma_from(a: &Arc<StratifiedLieAlgebra>, rank: usize, vals: &[f64]) -> SymbolGamma {
    let mut it = vals.chunks(2);
    let gs = (0..a.m())
        .map(|_| {
            CMat::from_fn(rank, rank, |_, _| {
                let p = it.next().unwrap();
                c64::new(p[0], p[1])
            })
        })
        .collect();
    SymbolGamma::new(a.clone(), gs).unwrap()
}

fn verdict() -> impl Strategy<Value = Verdict> {
    prop_oneof![
        Just(Verdict::CertifiedHypoelliptic),
        Just(Verdict::CertifiedNotHypoelliptic),
        Just(Verdict::Indeterminate),
    ]
}

#[test]
fn pfaffian_matches_expansion_on_fixed_cases() {
    // Frozen values from the expansion oracle.
    let a = skew(4, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    assert_eq!(pf_expand(&a), 8.0);
    assert!((pfaffian(&to_rmat(&a)).unwrap() - 8.0).abs() < 1e-12);
    let b = skew(6, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    assert_eq!(pf_expand(&b), 1.0);
    assert!((pfaffian(&to_rmat(&b)).unwrap() - 1.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pfaffian_agrees_with_oracle(half in 1usize..4, vals in prop::collection::vec(-3.0f64..3.0, 15)) {
        let n = 2 * half;
        let a = skew(n, &vals);
        let pf = pfaffian(&to_rmat(&a)).unwrap();
        let want = pf_expand(&a);
        prop_assert!((pf - want).abs() <= 1e-9 * (1.0 + want.abs()), "{pf} vs {want}");
        let det = det_expand(&a);
        prop_assert!((pf * pf - det).abs() <= 1e-8 * (1.0 + det.abs()));
    }

    #[test]
    fn verdict_meet_is_a_semilattice(a in verdict(), b in verdict(), d in verdict()) {
        prop_assert_eq!(a.meet(b), b.meet(a));
        prop_assert_eq!(a.meet(b).meet(d), a.meet(b.meet(d)));
        prop_assert_eq!(a.meet(a), a);
        prop_assert_eq!(a.meet(Verdict::CertifiedHypoelliptic), a);
    }

    #[test]
    fn delta_contracts_back(which in 0usize..3, rank in 1usize..3, vals in prop::collection::vec(-2.0f64..2.0, 24)) {
        let a = [alg("heisenberg", &[2]), alg("free_step2", &[3]), alg("n4", &[])][which].clone();
        let g = gamma_from(&a, rank, &vals);
        let d = delta(&g).unwrap();
        // δ is antisymmetric in the block index
        let n = a.n();
        for k in 0..n {
            for l in 0..n {
                for p in 0..rank {
                    for q in 0..rank {
                        let s = d[(k * rank + p, l * rank + q)] + d[(l * rank + p, k * rank + q)];
                        prop_assert!(s.norm() < 1e-12);
                    }
                }
            }
        }
        let back = contract(&a, &d, rank);
        for (x, y) in back.iter().zip(g.gammas()) {
            prop_assert!(linalg::max_abs_diff(x, y) < 1e-10);
        }
    }

    #[test]
    fn gamma_poly_is_linear(vals in prop::collection::vec(-2.0f64..2.0, 16), xi in prop::collection::vec(-1.0f64..1.0, 2),
                            eta in prop::collection::vec(-1.0f64..1.0, 2), s in -3.0f64..3.0) {
        let a = alg("free_step2", &[2]);
        let n4 = alg("n4", &[]);
        for al in [a, n4] {
            let g = gamma_from(&al, 2, &vals);
            let m = al.m();
            let x: Vec<f64> = xi.iter().cycle().take(m).copied().collect();
            let y: Vec<f64> = eta.iter().cycle().take(m).copied().collect();
            let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| s * p + q).collect();
            let lhs = gamma_poly(&g, &xy);
            let rhs = linalg::axpy(&gamma_poly(&g, &y), c(s, 0.0), &gamma_poly(&g, &x));
            prop_assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn symbol_json_round_trip(rank in 1usize..3, vals in prop::collection::vec(-5.0f64..5.0, 24)) {
        let a = alg("n4", &[]);
        let g = gamma_from(&a, rank, &vals);
        let back = SymbolGamma::from_json(a.clone(), &g.to_json()).unwrap();
        prop_assert_eq!(back.rank(), rank);
        for (x, y) in back.gammas().iter().zip(g.gammas()) {
            prop_assert_eq!(linalg::max_abs_diff(x, y), 0.0);
        }
    }

    #[test]
    fn config_json_round_trip(samples in prop::option::of(2usize..10_000), kmax in 1usize..200, seed in any::<u64>(),
                              h in any::<bool>(), skip in prop::collection::vec("[a-z_]{1,12}", 0..3)) {
        let cfg = RunConfig { samples, kmax, seed, h_elliptic: h, skip, ..RunConfig::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    // each case runs two barrier solves
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn quotient_norm_homogeneous(vals in prop::collection::vec(-1.0f64..1.0, 16), lam in 0.2f64..4.0, neg in any::<bool>()) {
        let a = alg("heisenberg_plus_line", &[1]);
        let b = gamma_from(&a, 1, &vals[..2]);
        let dir = gamma_from(&a, 1, &vals[8..10]);
        let s = if neg { -lam } else { lam };
        let q1 = quotient_norm(&a, b.gammas(), dir.gammas()).unwrap();
        let scaled: Vec<CMat> = b.gammas().iter().map(|m| linalg::scale(m, c(s, 0.0))).collect();
        let q2 = quotient_norm(&a, &scaled, dir.gammas()).unwrap();
        let tol = q2.gap + lam * q1.gap + 1e-7 * (1.0 + q2.value);
        prop_assert!((q2.value - lam * q1.value).abs() <= tol, "{} vs {}", q2.value, lam * q1.value);
        prop_assert!(q1.value <= q1.representative_norm + 1e-9);
        prop_assert!(q1.value <= q1.subspace_value + 1e-9);
    }

    #[test]
    fn quotient_of_direction_by_itself_vanishes(vals in prop::collection::vec(-1.0f64..1.0, 8)) {
        let a = alg("n4", &[]);
        let dir = gamma_from(&a, 1, &vals[..4]);
        let q = quotient_norm(&a, dir.gammas(), dir.gammas()).unwrap();
        prop_assert!(q.value <= 1e-6 + q.gap, "{}", q.value);
    }
}

#[test]
fn report_json_carries_verdict_and_rank() {
    let a = alg("engel", &[]);
    let g = common::scalars(&a, &[(0.0, 0.5)]);
    let r = decide(&g, &RunConfig::default()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["verdict"], "CertifiedHypoelliptic");
    assert_eq!(v["N"], 1);
    let cfg: RunConfig = serde_json::from_value(v["config"].clone()).unwrap();
    assert_eq!(cfg, RunConfig::default());
}
