//! Deterministic sphere samples for "for every unit ξ" scans.

use std::f64::consts::PI;

use serde::Serialize;

use crate::algebra::StratifiedLieAlgebra;
use crate::kirillov::harmonic_bottom;

#[derive(Clone, Debug, Serialize)]
pub struct SphereSamples {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    /// Rough covering radius of the sample set (angle, radians).
    pub resolution: f64,
}

fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Antipodally symmetric low-discrepancy points on `S^{dim-1}`.
pub fn euclidean_sphere(dim: usize, count: usize) -> SphereSamples {
    let count = count.max(2);
    match dim {
        0 => SphereSamples { dim, points: Vec::new(), resolution: 0.0 },
        1 => SphereSamples { dim, points: vec![vec![1.0], vec![-1.0]], resolution: 0.0 },
        2 => {
            let k = count + count % 2;
            let points = (0..k)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / k as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect();
            SphereSamples { dim, points, resolution: PI / k as f64 }
        }
        3 => {
            let half = count.div_ceil(2);
            let golden = PI * (3.0 - 5f64.sqrt());
            let mut points = Vec::with_capacity(2 * half);
            for i in 0..half {
                // upper hemisphere only; the antipodes complete the set
                let z = 1.0 - (i as f64 + 0.5) / half as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let t = golden * i as f64;
                points.push(vec![r * t.cos(), r * t.sin(), z]);
            }
            let anti: Vec<Vec<f64>> = points.iter().map(|p| p.iter().map(|x| -x).collect()).collect();
            points.extend(anti);
            SphereSamples { dim, points, resolution: (4.0 * PI / (2 * half) as f64).sqrt() }
        }
        _ => {
            let half = count.div_ceil(2);
            let mut points = Vec::with_capacity(2 * half);
            for i in 1..=half {
                let mut v: Vec<f64> = (0..dim)
                    .map(|d| {
                        // Box-Muller on a pair of Halton coordinates
                        let u1 = halton(i, PRIMES[(2 * d) % PRIMES.len()]).max(1e-12);
                        let u2 = halton(i, PRIMES[(2 * d + 1) % PRIMES.len()]);
                        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
                    })
                    .collect();
                normalize(&mut v);
                points.push(v);
            }
            let anti: Vec<Vec<f64>> = points.iter().map(|p| p.iter().map(|x| -x).collect()).collect();
            points.extend(anti);
            let area = 2.0 * PI.powf(dim as f64 / 2.0) / gamma_half(dim);
            let res = (area / (2 * half) as f64).powf(1.0 / (dim as f64 - 1.0));
            SphereSamples { dim, points, resolution: res }
        }
    }
}

/// Γ(d/2) for integer d ≥ 1.
fn gamma_half(d: usize) -> f64 {
    if d % 2 == 0 {
        (1..d / 2).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < d as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Rescales a direction to the unit level set `Tr|ω_ξ|/2 = 1`.
pub fn to_unit(alg: &StratifiedLieAlgebra, u: &[f64]) -> Option<Vec<f64>> {
    let lam = harmonic_bottom(alg, u).ok()?;
    if lam <= 0.0 || !lam.is_finite() {
        return None;
    }
    Some(u.iter().map(|x| x / lam).collect())
}

/// Samples of the unit sphere of the norm `ξ ↦ Tr|ω_ξ|/2` on g₋₂*.
/// Directions where the form vanishes identically are dropped.
pub fn unit_sphere(alg: &StratifiedLieAlgebra, count: usize) -> SphereSamples {
    let base = euclidean_sphere(alg.m(), count);
    let points = base.points.iter().filter_map(|u| to_unit(alg, u)).collect();
    SphereSamples { dim: base.dim, points, resolution: base.resolution }
}

/// Pattern search on the Euclidean sphere minimizing `f`, started at `start`
/// with initial step `step` (radians). Returns the best direction and value.
pub fn refine_min<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], step: f64, budget: usize) -> (Vec<f64>, f64) {
    let dim = start.len();
    let mut best = start.to_vec();
    normalize(&mut best);
    let mut fbest = f(&best);
    if dim <= 1 {
        return (best, fbest);
    }
    let mut h = step.max(1e-8);
    let mut evals = 1;
    while h > 1e-12 && evals < budget {
        let tangents = tangent_basis(&best);
        let mut improved = false;
        for t in &tangents {
            for s in [1.0, -1.0] {
                let mut cand: Vec<f64> = best.iter().zip(t).map(|(b, ti)| b * h.cos() + s * ti * h.sin()).collect();
                normalize(&mut cand);
                let fc = f(&cand);
                evals += 1;
                if fc < fbest {
                    fbest = fc;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (best, fbest)
}

/// Orthonormal basis of the tangent space at a unit vector.
fn tangent_basis(p: &[f64]) -> Vec<Vec<f64>> {
    let dim = p.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for e in 0..dim {
        let mut v: Vec<f64> = (0..dim).map(|i| if i == e { 1.0 } else { 0.0 }).collect();
        let d: f64 = v.iter().zip(p).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(p).for_each(|(a, b)| *a -= d * b);
        for w in &out {
            let d: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(w).for_each(|(a, b)| *a -= d * b);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            out.push(v);
        }
        if out.len() == dim - 1 {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_unit_and_symmetric() {
        for dim in 1..=5 {
            let s = euclidean_sphere(dim, 64);
            for p in &s.points {
                let n: f64 = p.iter().map(|x| x * x).sum();
                assert!((n - 1.0).abs() < 1e-12);
                let anti: Vec<f64> = p.iter().map(|x| -x).collect();
                assert!(s.points.iter().any(|q| q.iter().zip(&anti).all(|(a, b)| (a - b).abs() < 1e-12)));
            }
        }
    }

    #[test]
    fn refine_finds_minimum_on_circle() {
        let (p, v) = refine_min(|x| -x[0] * 0.3 - x[1], &[1.0, 0.0], 0.1, 10_000);
        let expect = -(0.09f64 + 1.0).sqrt();
        assert!((v - expect).abs() < 1e-12, "{v} {p:?}");
    }
}
