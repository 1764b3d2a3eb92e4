//! Verdicts for `γ ∈ E(g, N)` assembled from sufficient, necessary and exact
//! tests, plus the star-shape probe and the scalar criteria for
//! `ΣX_j² + iΣb_l Y_l`.

use std::sync::Arc;

use faer::c64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{CatalogKind, StratifiedLieAlgebra};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::kirillov::{self, harmonic_bottom, levels, oscillator_frequencies};
use crate::linalg::{self, c, cidentity, eigvals, op_norm, sigma_min, CMat};
use crate::modelops::{self, Grid, Injectivity, InjectivityEstimate};
use crate::sphere::{self, euclidean_sphere, refine_min, SphereSamples};
use crate::symbolmap::{
    alpha_value, dist_to_h, eval_part, gamma_poly, iota, property_alpha_test, quotient_norm, spectral_h_test,
    quotient_norm_at, QuotientNorm, SymbolGamma, BOUNDARY_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    CertifiedHypoelliptic,
    CertifiedNotHypoelliptic,
    Indeterminate,
}

impl Verdict {
    /// Verdict for "both hold": certified only when both are.
    pub fn meet(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (CertifiedNotHypoelliptic, _) | (_, CertifiedNotHypoelliptic) => CertifiedNotHypoelliptic,
            (CertifiedHypoelliptic, CertifiedHypoelliptic) => CertifiedHypoelliptic,
            _ => Indeterminate,
        }
    }

    pub fn is_certified(self) -> bool {
        self != Verdict::Indeterminate
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// A pass proves hypoellipticity.
    Sufficient,
    /// Both a pass and a failure are conclusive.
    Exact,
    /// A failure with a witness disproves hypoellipticity.
    Necessary,
    /// Discretized operators; never certified.
    Numerical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// `γ(ξ)` has an eigenvalue in `H(p)`.
    Spectrum { xi: Vec<f64>, eigenvalue: [f64; 2], p: f64 },
    /// `|⟨v, ξ(b)v⟩| ≥ 1` for a unit `v ∈ Ker ξ(a)`.
    Alpha { xi: Vec<f64>, v: Vec<[f64; 2]>, value: f64 },
    /// Scalar quotient norm `≥ 1` where it characterizes hypoellipticity.
    Norm { value: f64 },
    /// `level + γ(ξ)` is singular.
    Level { xi: Vec<f64>, level: f64, k: usize, sigma: f64 },
    /// `γ(ξ)` has a real eigenvalue `≤ −bottom`; a character shift closes the gap.
    Shift { xi: Vec<f64>, eigenvalue: [f64; 2], bottom: f64 },
    /// `Σ b_l η_l − λ(η) = f` at `η`, with `r_η` and an optional matched level.
    Scalar { eta: Vec<f64>, f: f64, rank: usize, level: Option<f64> },
}

#[derive(Clone, Debug, Serialize)]
pub struct Evidence {
    pub stage: u8,
    pub test: String,
    pub role: Role,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub detail: Value,
}

impl Evidence {
    fn new(stage: u8, test: &str, role: Role, outcome: Outcome) -> Self {
        Evidence { stage, test: test.into(), role, outcome, margin: None, witness: None, detail: Value::Null }
    }

    fn margin(mut self, m: f64) -> Self {
        self.margin = Some(m);
        self
    }

    fn witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }

    fn detail(mut self, d: Value) -> Self {
        self.detail = d;
        self
    }

    fn proves_hypo(&self) -> bool {
        self.outcome == Outcome::Pass && matches!(self.role, Role::Sufficient | Role::Exact)
    }

    fn proves_not(&self) -> bool {
        self.outcome == Outcome::Fail && self.witness.is_some() && matches!(self.role, Role::Exact | Role::Necessary)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericalVerdict {
    LikelyHypoelliptic,
    LikelyNotHypoelliptic,
    Unresolved,
}

/// Model-operator evidence; informative only, never a certificate.
#[derive(Clone, Debug, Serialize)]
pub struct NumericalReport {
    pub verdict: NumericalVerdict,
    pub points: Vec<InjectivityEstimate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecisionReport {
    pub algebra: String,
    #[serde(rename = "N")]
    pub rank: usize,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_elliptic: Option<Verdict>,
    /// A sufficient pass and a witness both occurred; verdict forced to Indeterminate.
    pub conflict: bool,
    pub evidence: Vec<Evidence>,
    /// Evidence for `−γ*`, when the H-ellipticity verdict was requested.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub adjoint_evidence: Vec<Evidence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numerical: Option<NumericalReport>,
    /// Bracket for the deciding margin when it is too close to call.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub config: RunConfig,
}

impl DecisionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Evidence records of a given test.
    pub fn find(&self, test: &str) -> Option<&Evidence> {
        self.evidence.iter().find(|e| e.test == test)
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.evidence.iter().filter(|e| e.proves_not()).filter_map(|e| e.witness.as_ref())
    }

    pub fn sufficient_passes(&self) -> impl Iterator<Item = &Evidence> {
        self.evidence.iter().filter(|e| e.proves_hypo())
    }
}

struct Pipeline {
    evidence: Vec<Evidence>,
    interval: Option<[f64; 2]>,
    notes: Vec<String>,
}

fn merge(evidence: &[Evidence]) -> (Verdict, bool) {
    let hypo = evidence.iter().any(Evidence::proves_hypo);
    let not = evidence.iter().any(Evidence::proves_not);
    match (hypo, not) {
        (true, true) => (Verdict::Indeterminate, true),
        (true, false) => (Verdict::CertifiedHypoelliptic, false),
        (false, true) => (Verdict::CertifiedNotHypoelliptic, false),
        (false, false) => (Verdict::Indeterminate, false),
    }
}

// ---------------------------------------------------------------- sampling helpers

/// Euclidean unit directions of g₋₂* and their λ-unit rescalings.
struct Sampled {
    euclid: SphereSamples,
    unit: SphereSamples,
    /// Bound on the Lipschitz constant (per radian) of `u ↦ ‖γ(u/λ(u))‖`.
    lip: f64,
}

fn sampled(alg: &StratifiedLieAlgebra, gamma_norm: f64, count: usize) -> Sampled {
    let euclid = euclidean_sphere(alg.m(), count);
    let unit = sphere::unit_sphere(alg, count);
    let rmax = unit.points.iter().map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let m = alg.m();
    let lam_lip: f64 = (0..m)
        .map(|l| {
            let e: Vec<f64> = (0..m).map(|i| if i == l { 1.0 } else { 0.0 }).collect();
            harmonic_bottom(alg, &e).unwrap_or(0.0)
        })
        .sum();
    Sampled { euclid, unit, lip: gamma_norm * rmax * (1.0 + lam_lip * rmax) }
}

fn gamma_norm(gamma: &SymbolGamma) -> f64 {
    gamma.gammas().iter().map(op_norm).sum()
}

fn xi_norm_unit(alg: &StratifiedLieAlgebra, u: &[f64]) -> Option<Vec<f64>> {
    sphere::to_unit(alg, u)
}

/// `min dist(Spec γ(ξ), H(p))` with `ξ` the λ-unit rescaling of `u`.
fn spectral_distance(gamma: &SymbolGamma, u: &[f64], p: f64) -> f64 {
    match xi_norm_unit(gamma.algebra(), u) {
        Some(xi) => eigvals(&gamma_poly(gamma, &xi)).into_iter().map(|z| dist_to_h(z, p)).fold(f64::INFINITY, f64::min),
        None => f64::INFINITY,
    }
}

fn closest_eigenvalue(gamma: &SymbolGamma, xi: &[f64], p: f64) -> c64 {
    eigvals(&gamma_poly(gamma, xi))
        .into_iter()
        .min_by(|a, b| dist_to_h(*a, p).partial_cmp(&dist_to_h(*b, p)).unwrap())
        .unwrap_or(c(0.0, 0.0))
}

/// Spectral test `Spec γ(ξ) ∩ H(1)` on the λ-unit sphere with local
/// refinement when the sampled margin is within `10 L h` of zero.
fn refined_spectral(
    gamma: &SymbolGamma,
    s: &Sampled,
    cfg: &RunConfig,
    stage: u8,
    test: &str,
    role: Role,
) -> Result<(Evidence, Option<[f64; 2]>)> {
    let st = spectral_h_test(gamma, 1.0, &s.unit)?;
    let slack = 10.0 * s.lip * s.unit.resolution;
    let mut detail = json!({
        "samples": st.samples,
        "resolution": st.resolution,
        "lipschitz": s.lip,
        "argmin_xi": st.argmin_xi,
    });
    if let Some(w) = st.witness {
        let ev = Evidence::new(stage, test, role, Outcome::Fail)
            .margin(st.margin)
            .witness(Witness::Spectrum { xi: w.xi, eigenvalue: w.eigenvalue, p: 1.0 })
            .detail(detail);
        return Ok((ev, None));
    }
    let mut margin = st.margin;
    let mut interval = None;
    if margin < slack && s.unit.dim > 1 && !st.argmin_xi.is_empty() {
        let start: Vec<f64> = st.argmin_xi.clone();
        let (u, v) = refine_min(|u| spectral_distance(gamma, u, 1.0), &start, s.unit.resolution, cfg.refine_budget);
        detail["refined"] = json!({ "direction": u, "margin": v });
        if v <= BOUNDARY_TOL {
            let xi = xi_norm_unit(gamma.algebra(), &u).unwrap_or(u);
            let z = closest_eigenvalue(gamma, &xi, 1.0);
            let ev = Evidence::new(stage, test, role, Outcome::Fail)
                .margin(v)
                .witness(Witness::Spectrum { xi, eigenvalue: [z.re, z.im], p: 1.0 })
                .detail(detail);
            return Ok((ev, None));
        }
        margin = margin.min(v);
        interval = Some([(margin - s.lip * s.unit.resolution).max(0.0), margin]);
    }
    let certified = s.unit.dim <= 1 || margin > slack;
    let outcome = if role == Role::Necessary || certified { Outcome::Pass } else { Outcome::Inconclusive };
    Ok((Evidence::new(stage, test, role, outcome).margin(margin).detail(detail), if certified { None } else { interval.or(Some([0.0, margin])) }))
}

// ---------------------------------------------------------------- structure probes

fn truncation_has_flat_orbits(alg: &StratifiedLieAlgebra, count: usize) -> bool {
    let n = alg.n();
    if n % 2 == 1 || alg.m() == 0 {
        return false;
    }
    euclidean_sphere(alg.m(), count.min(512))
        .points
        .iter()
        .any(|u| kirillov::kirillov_form(alg, u).map(|k| k.rank == n).unwrap_or(false))
}

/// `(dim of central g₋₁ part, every sampled form has rank n − that dim)`.
fn polycontact_profile(alg: &StratifiedLieAlgebra, count: usize) -> (usize, bool) {
    let k = alg.central_part_g1().len();
    let n = alg.n();
    let all = euclidean_sphere(alg.m(), count.min(512))
        .points
        .iter()
        .all(|u| kirillov::kirillov_form(alg, u).map(|d| d.rank == n - k).unwrap_or(false));
    (k, all)
}

fn is_zero(parts: &[CMat]) -> bool {
    parts.iter().all(|p| p.col_iter().all(|col| col.iter().all(|z| z.re == 0.0 && z.im == 0.0)))
}

// ---------------------------------------------------------------- stages

fn stage_sufficient(gamma: &SymbolGamma) -> Result<(Evidence, Option<QuotientNorm>)> {
    let alg = gamma.algebra();
    if alg.m() == 0 {
        let ev = Evidence::new(1, "quotient_norm", Role::Sufficient, Outcome::Pass)
            .margin(1.0)
            .detail(json!({"note": "g₋₂ = 0: the operator is elliptic"}));
        return Ok((ev, None));
    }
    let qn = quotient_norm_at(alg, &gamma.im(), &gamma.re(), Some(1.0 - BOUNDARY_TOL))?;
    let pass = qn.value + qn.gap < 1.0 - BOUNDARY_TOL;
    let ev = Evidence::new(1, "quotient_norm", Role::Sufficient, if pass { Outcome::Pass } else { Outcome::Inconclusive })
        .margin(1.0 - qn.value)
        .detail(serde_json::to_value(&qn)?);
    Ok((ev, Some(qn)))
}

fn stage_scalar_exact(gamma: &SymbolGamma, qn: &QuotientNorm) -> Evidence {
    let alg = gamma.algebra();
    let heisenberg_mod = alg.m() == 1
        && is_zero(&gamma.re())
        && kirillov::kirillov_form(alg, &[1.0]).map(|k| k.rank == alg.n()).unwrap_or(false);
    if heisenberg_mod {
        return Evidence::new(2, "scalar_norm_criterion", Role::Exact, Outcome::Skipped)
            .detail(json!({"reason": "g₋₁ ⊕ g₋₂ modulo ℝ Re γ is a Heisenberg algebra"}));
    }
    let ev = Evidence::new(2, "scalar_norm_criterion", Role::Exact, Outcome::Inconclusive)
        .margin(1.0 - qn.value)
        .detail(json!({"value": qn.value, "gap": qn.gap}));
    if qn.value + qn.gap < 1.0 - BOUNDARY_TOL {
        Evidence { outcome: Outcome::Pass, ..ev }
    } else if qn.value - qn.gap >= 1.0 - BOUNDARY_TOL {
        Evidence { outcome: Outcome::Fail, ..ev }.witness(Witness::Norm { value: qn.value })
    } else {
        ev
    }
}

/// `ι(Y₁)` operator norm, the scale at which `H(1)` is measured when dim g₋₂ = 1.
fn line_scale(alg: &StratifiedLieAlgebra) -> Result<f64> {
    Ok(linalg::singular_values_real(&iota(alg, &[1.0])?).first().copied().unwrap_or(0.0))
}

fn stage_one_dim_center(gamma: &SymbolGamma) -> Result<Evidence> {
    let nu = line_scale(gamma.algebra())?;
    let xi = vec![nu];
    let eig = eigvals(&gamma_poly(gamma, &xi));
    let (z, d) = eig
        .iter()
        .map(|&z| (z, dist_to_h(z, 1.0)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap_or((c(0.0, 0.0), f64::INFINITY));
    let detail = json!({"xi": xi, "spectrum": eig.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()});
    let ev = Evidence::new(3, "one_dimensional_g2", Role::Exact, Outcome::Pass).margin(d).detail(detail);
    Ok(if d <= BOUNDARY_TOL {
        Evidence { outcome: Outcome::Fail, ..ev }.witness(Witness::Spectrum { xi, eigenvalue: [z.re, z.im], p: 1.0 })
    } else {
        ev
    })
}

fn stage_no_flat_orbits(gamma: &SymbolGamma, s: &Sampled, cfg: &RunConfig) -> Result<(Vec<Evidence>, Option<[f64; 2]>)> {
    let mut out = Vec::new();
    let mut interval = None;
    if !cfg.skips("spectral_h") {
        let (ev, iv) = refined_spectral(gamma, s, cfg, 4, "spectral_h", Role::Necessary)?;
        interval = iv;
        out.push(ev);
    }
    if !cfg.skips("property_alpha") {
        let at = property_alpha_test(gamma, &s.unit, cfg.kernel_cut);
        let mut ev = Evidence::new(4, "property_alpha", Role::Necessary, if at.passed { Outcome::Pass } else { Outcome::Fail })
            .margin(at.margin)
            .detail(json!({"kernel_cut": at.kernel_cut, "fragile": at.fragile}));
        if let Some(w) = at.witness {
            ev = ev.witness(Witness::Alpha { xi: w.xi, v: w.v, value: w.value });
        }
        out.push(ev);
    }
    Ok((out, interval))
}

/// Levels `D + γ(ξ)` of the flat-orbit representations on sampled Euclidean-unit `ξ`.
fn flat_levels(gamma: &SymbolGamma, kmax: usize, samples: &SphereSamples, role: Role, stage: u8) -> Result<Evidence> {
    let alg = gamma.algebra();
    let n = alg.n();
    let central = alg.central_part_g1().len();
    let gnorm = gamma_norm(gamma);
    let mut worst_ratio = 0.0f64;
    let mut min_margin = f64::INFINITY;
    let mut tail_ok = true;
    let mut used = 0usize;
    let mut witness = None;
    let mut best_xi = Vec::new();
    'outer: for xi in &samples.points {
        let kd = kirillov::kirillov_form(alg, xi)?;
        if kd.rank != n - central {
            continue;
        }
        used += 1;
        let mu = oscillator_frequencies(alg, xi);
        let bottom: f64 = mu.iter().sum();
        let g = gamma_poly(gamma, xi);
        let gn = op_norm(&g);
        let scale = bottom.max(gn).max(f64::MIN_POSITIVE);
        if central > 0 {
            // characters of the central part shift every level by t ≥ 0
            for z in eigvals(&g) {
                let d = if z.re <= -bottom { z.im.abs() } else { (z.re + bottom).hypot(z.im) };
                if d < min_margin {
                    min_margin = d;
                    best_xi = xi.clone();
                }
                if d <= BOUNDARY_TOL * scale {
                    witness = Some(Witness::Shift { xi: xi.clone(), eigenvalue: [z.re, z.im], bottom });
                    break 'outer;
                }
            }
            let smin = sigma_min(&linalg::axpy(&g, c(bottom, 0.0), &cidentity(gamma.rank())));
            worst_ratio = worst_ratio.max(bottom / smin.max(f64::MIN_POSITIVE));
            continue;
        }
        let lv = levels(bottom, &mu, kmax)?;
        let mut last = f64::NAN;
        for (d, k) in lv {
            if d == last {
                continue;
            }
            last = d;
            let smin = sigma_min(&linalg::axpy(&g, c(d, 0.0), &cidentity(gamma.rank())));
            if smin < min_margin {
                min_margin = smin;
                best_xi = xi.clone();
            }
            worst_ratio = worst_ratio.max(d / smin.max(f64::MIN_POSITIVE));
            if smin <= BOUNDARY_TOL * scale {
                witness = Some(Witness::Level { xi: xi.clone(), level: d, k, sigma: smin });
                break 'outer;
            }
        }
        let mu_min = mu.iter().copied().fold(f64::INFINITY, f64::min);
        let next = bottom + 2.0 * (kmax + 1) as f64 * mu_min;
        if next <= gn {
            tail_ok = false;
        }
    }
    let detail = json!({
        "kmax": kmax,
        "samples_used": used,
        "resolution": samples.resolution,
        "tail_certified": tail_ok,
        "sup_ratio": worst_ratio,
        "argmin_xi": best_xi,
        "central_g1_dim": central,
        "gamma_norm": gnorm,
    });
    let ev = Evidence::new(stage, "flat_orbit_levels", role, Outcome::Pass).margin(min_margin).detail(detail);
    if let Some(w) = witness {
        return Ok(Evidence { outcome: Outcome::Fail, ..ev }.witness(w));
    }
    if used == 0 {
        return Ok(Evidence { outcome: Outcome::Inconclusive, ..ev });
    }
    // sampled spheres need a margin that dominates the sampling resolution
    let lam_lip: f64 = (0..alg.m())
        .map(|l| {
            let e: Vec<f64> = (0..alg.m()).map(|i| if i == l { 1.0 } else { 0.0 }).collect();
            harmonic_bottom(alg, &e).unwrap_or(0.0)
        })
        .sum();
    let lip = gnorm + lam_lip;
    let certified = tail_ok && (samples.dim <= 1 || min_margin > 10.0 * lip * samples.resolution);
    Ok(if certified || role == Role::Necessary && tail_ok { ev } else { Evidence { outcome: Outcome::Inconclusive, ..ev } })
}

// ---------------------------------------------------------------- numerical stage

fn numerical_stage(gamma: &SymbolGamma, cfg: &RunConfig) -> Option<NumericalReport> {
    let alg = gamma.algebra();
    let thr = cfg.injectivity_threshold;
    let points: Vec<InjectivityEstimate> = match alg.kind()? {
        CatalogKind::N4 => {
            let g = [gamma.gammas()[0].clone(), gamma.gammas()[1].clone()];
            let params: Vec<(f64, f64)> =
                [1.0, -1.0].iter().flat_map(|&a| (0..9).map(move |i| (a, -4.0 + i as f64))).collect();
            modelops::sweep(&params, |&(a, eta)| {
                let op = modelops::build_n4_generic(a, eta, &g, &Grid::square(cfg.grid_points))?;
                Ok(modelops::min_singular_seeded(&op, thr, true, cfg.seed))
            })
            .into_iter()
            .filter_map(|r| r.ok())
            .collect()
        }
        CatalogKind::Htilde(1) => {
            let pts = (cfg.grid_points / 4).clamp(8, 20);
            let grid = Grid { points: pts, fine_points: None, half_width: None, points_b: None, fine_points_b: None, half_width_b: None };
            modelops::sweep(&[1.0, -1.0], |&h| {
                let op = modelops::build_htilde_flat(1, h, gamma.gammas(), &grid)?;
                Ok(modelops::min_singular_seeded(&op, thr, true, cfg.seed))
            })
            .into_iter()
            .filter_map(|r| r.ok())
            .collect()
        }
        _ => return None,
    };
    let verdict = if points.iter().any(|p| p.verdict == Injectivity::KernelDetected) {
        NumericalVerdict::LikelyNotHypoelliptic
    } else if !points.is_empty() && points.iter().all(|p| p.verdict == Injectivity::Injective) {
        NumericalVerdict::LikelyHypoelliptic
    } else {
        NumericalVerdict::Unresolved
    };
    Some(NumericalReport { verdict, points })
}

// ---------------------------------------------------------------- pipeline

fn pipeline(gamma: &SymbolGamma, cfg: &RunConfig) -> Result<Pipeline> {
    let alg = gamma.algebra().clone();
    let mut evidence = Vec::new();
    let mut interval = None;
    let mut notes = Vec::new();
    let count = cfg.sample_count(alg.m());

    let (ev, qn) = stage_sufficient(gamma)?;
    evidence.push(ev);
    if alg.m() == 0 {
        return Ok(Pipeline { evidence, interval, notes });
    }
    let qn = qn.expect("m > 0");

    if gamma.rank() == 1 && alg.m() != 2 && !cfg.skips("scalar_norm_criterion") {
        evidence.push(stage_scalar_exact(gamma, &qn));
    }
    if alg.step() > 2 && alg.m() == 1 && !cfg.skips("one_dimensional_g2") {
        evidence.push(stage_one_dim_center(gamma)?);
    }
    let s = sampled(&alg, gamma_norm(gamma), count);
    let trunc_flat = truncation_has_flat_orbits(&alg, count);
    if !trunc_flat {
        let (evs, iv) = stage_no_flat_orbits(gamma, &s, cfg)?;
        evidence.extend(evs);
        interval = interval.or(iv);
    }
    if alg.step() == 2 {
        let (central, poly) = polycontact_profile(&alg, count);
        if central > 0 && poly && !cfg.skips("polycontact_line") {
            let (ev, iv) = refined_spectral(gamma, &s, cfg, 5, "polycontact_line", Role::Exact)?;
            evidence.push(Evidence {
                detail: {
                    let mut d = ev.detail.clone();
                    d["central_g1_dim"] = json!(central);
                    d
                },
                ..ev
            });
            interval = interval.or(iv);
        } else if central == 0 && trunc_flat && !cfg.skips("flat_orbit_levels") {
            let role = if poly { Role::Exact } else { Role::Necessary };
            if !poly {
                notes.push("flat orbits are not the whole sphere; level scan used as a necessary test only".into());
            }
            evidence.push(flat_levels(gamma, cfg.kmax, &s.euclid, role, 5)?);
        }
    }

    // re-verify witnesses standalone before they count
    for ev in evidence.iter_mut() {
        if ev.outcome == Outcome::Fail {
            if let Some(w) = &ev.witness {
                if !reverify(gamma, w, cfg) {
                    notes.push(format!("witness of {} did not re-verify; downgraded", ev.test));
                    ev.outcome = Outcome::Inconclusive;
                }
            }
        }
    }
    Ok(Pipeline { evidence, interval, notes })
}

/// Recomputes a witness from scratch and checks that it still violates.
pub fn reverify(gamma: &SymbolGamma, w: &Witness, cfg: &RunConfig) -> bool {
    let alg = gamma.algebra();
    match w {
        Witness::Spectrum { xi, eigenvalue, p } => {
            let target = c(eigenvalue[0], eigenvalue[1]);
            eigvals(&gamma_poly(gamma, xi)).into_iter().any(|z| {
                (z - target).norm() <= 1e-8 * target.norm().max(1.0) && dist_to_h(z, *p) <= 10.0 * BOUNDARY_TOL * p.max(1.0)
            })
        }
        Witness::Alpha { xi, value, .. } => {
            let (v, _) = alpha_value(&eval_part(&gamma.re(), xi), &eval_part(&gamma.im(), xi), cfg.kernel_cut);
            v >= 1.0 - 10.0 * BOUNDARY_TOL && (v - value).abs() <= 1e-8 * value.max(1.0)
        }
        Witness::Norm { .. } => quotient_norm(alg, &gamma.im(), &gamma.re())
            .map(|q| q.value - q.gap >= 1.0 - 10.0 * BOUNDARY_TOL)
            .unwrap_or(false),
        Witness::Level { xi, level, .. } => {
            let s = sigma_min(&linalg::axpy(&gamma_poly(gamma, xi), c(*level, 0.0), &cidentity(gamma.rank())));
            s <= 10.0 * BOUNDARY_TOL * level.max(1.0)
        }
        Witness::Shift { xi, eigenvalue, bottom } => eigvals(&gamma_poly(gamma, xi)).into_iter().any(|z| {
            (z - c(eigenvalue[0], eigenvalue[1])).norm() <= 1e-8 * bottom.max(1.0)
                && z.im.abs() <= 10.0 * BOUNDARY_TOL * bottom.max(1.0)
                && z.re <= -bottom + 10.0 * BOUNDARY_TOL * bottom.max(1.0)
        }),
        Witness::Scalar { eta, f, .. } => {
            let b: Vec<f64> = gamma.gammas().iter().map(|g| g[(0, 0)].im).collect();
            match harmonic_bottom(alg, eta) {
                Ok(lam) => {
                    let fv: f64 = b.iter().zip(eta).map(|(x, y)| x * y).sum::<f64>() - lam;
                    (fv - f).abs() <= 1e-8 * lam.max(1.0)
                }
                Err(_) => false,
            }
        }
    }
}

fn single(gamma: &SymbolGamma, cfg: &RunConfig) -> Result<(Verdict, bool, Pipeline)> {
    let p = pipeline(gamma, cfg)?;
    let (v, conflict) = merge(&p.evidence);
    Ok((v, conflict, p))
}

/// Runs the full pipeline on `γ` and, if configured, on `−γ*` for the
/// H-ellipticity verdict.
pub fn decide(gamma: &SymbolGamma, cfg: &RunConfig) -> Result<DecisionReport> {
    cfg.validate()?;
    let alg = gamma.algebra();
    let (verdict, conflict, p) = single(gamma, cfg)?;
    let mut notes = p.notes;
    if conflict {
        notes.push("sufficient pass and necessary witness both present".into());
    }
    let (h_elliptic, adjoint_evidence) = if cfg.h_elliptic {
        let (va, ca, pa) = single(&gamma.neg_adjoint(), cfg)?;
        if ca {
            notes.push("conflict while deciding −γ*".into());
        }
        (Some(verdict.meet(va)), pa.evidence)
    } else {
        (None, Vec::new())
    };
    let numerical = if cfg.numerical_refinement && verdict == Verdict::Indeterminate { numerical_stage(gamma, cfg) } else { None };
    Ok(DecisionReport {
        algebra: alg.label(),
        rank: gamma.rank(),
        verdict,
        h_elliptic,
        conflict,
        evidence: p.evidence,
        adjoint_evidence,
        numerical,
        interval: if verdict.is_certified() { None } else { p.interval },
        notes,
        config: cfg.clone(),
    })
}

/// Invertibility of `s_k(ξ) + Tr|ω_ξ|/2 + γ(ξ)` for `k ≤ kmax` over sampled unit
/// `ξ`, with a tail bound for larger `k`. A central part of g₋₁ adds the
/// characters `t ≥ 0` to every level.
pub fn decide_polycontact_flat(gamma: &SymbolGamma, kmax: usize, cfg: &RunConfig) -> Result<DecisionReport> {
    cfg.validate()?;
    let alg = gamma.algebra();
    if alg.step() != 2 {
        return Err(Error::Precondition(format!("{} is not step 2", alg.label())));
    }
    let count = cfg.sample_count(alg.m());
    let (central, poly) = polycontact_profile(alg, count);
    let samples = euclidean_sphere(alg.m(), count);
    let n = alg.n();
    let any_flat = samples
        .points
        .iter()
        .any(|u| kirillov::kirillov_form(alg, u).map(|k| k.rank == n - central).unwrap_or(false));
    if !any_flat || (n - central) % 2 == 1 {
        return Err(Error::Precondition(format!("{} has no flat orbits", alg.label())));
    }
    let role = if poly { Role::Exact } else { Role::Necessary };
    let ev = flat_levels(gamma, kmax, &samples, role, 1)?;
    let mut notes = Vec::new();
    if !poly {
        notes.push("sampled region excludes degenerate ξ; a pass is not a certificate".into());
    }
    if alg.m() > 1 {
        notes.push(format!("ξ sampled on {} points of the unit sphere", samples.points.len()));
    }
    let evidence = vec![ev];
    let (verdict, conflict) = merge(&evidence);
    Ok(DecisionReport {
        algebra: alg.label(),
        rank: gamma.rank(),
        verdict,
        h_elliptic: None,
        conflict,
        evidence,
        adjoint_evidence: Vec::new(),
        numerical: None,
        interval: None,
        notes,
        config: cfg.clone(),
    })
}

// ---------------------------------------------------------------- star shape

#[derive(Clone, Debug, Serialize)]
pub struct StarShapeReport {
    pub base: Verdict,
    pub trajectory: Vec<(f64, Verdict)>,
    /// Values of `t` where a certified hypoelliptic verdict was lost.
    pub degraded: Vec<f64>,
    /// Why the algebra is known to be star-shaped, if it is.
    pub known_star_shaped: Option<String>,
    /// Degradation on an algebra known to be star-shaped.
    pub suspect: bool,
}

fn known_star_shaped(alg: &StratifiedLieAlgebra, rank: usize) -> Option<String> {
    if rank == 1 && alg.m() != 2 {
        Some("N = 1 and dim g₋₂ ≠ 2".into())
    } else if alg.m() == 1 && alg.step() > 2 {
        Some("dim g₋₂ = 1 and step > 2".into())
    } else if alg.kind() == Some(CatalogKind::N4) {
        Some("n(4), any N".into())
    } else {
        None
    }
}

/// Decides `tγ` along `ts` and flags where a hypoelliptic verdict degrades.
pub fn star_shape_probe(gamma: &SymbolGamma, ts: &[f64], cfg: &RunConfig) -> Result<StarShapeReport> {
    let mut cfg = cfg.clone();
    cfg.h_elliptic = false;
    cfg.numerical_refinement = false;
    if let Some(t) = ts.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::InvalidParameter(format!("t = {t} outside (0, 1]")));
    }
    let base = decide(gamma, &cfg)?.verdict;
    let mut trajectory = Vec::with_capacity(ts.len());
    let mut degraded = Vec::new();
    for &t in ts {
        let v = decide(&gamma.scaled(t), &cfg)?.verdict;
        if base == Verdict::CertifiedHypoelliptic && v != Verdict::CertifiedHypoelliptic {
            degraded.push(t);
        }
        trajectory.push((t, v));
    }
    let known = known_star_shaped(gamma.algebra(), gamma.rank());
    let suspect = known.is_some() && degraded.iter().any(|_| true) && trajectory.iter().any(|(_, v)| *v == Verdict::CertifiedNotHypoelliptic);
    Ok(StarShapeReport { base, trajectory, degraded, known_star_shaped: known, suspect })
}

// ---------------------------------------------------------------- scalar criteria

/// Hypoellipticity of `ΣX_j² + iΣb_l Y_l` from the sign of
/// `f(η) = Σ b_l η_l − λ(η)` on the unit sphere and the rank of `ω_η`.
pub fn rs_scalar_decide(alg: Arc<StratifiedLieAlgebra>, b: &[f64], cfg: &RunConfig) -> Result<DecisionReport> {
    cfg.validate()?;
    let m = alg.m();
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!("b has length {}, dim g₋₂ = {m}", b.len())));
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("b must be finite and real".into()));
    }
    if m == 0 {
        return Err(Error::Precondition("dim g₋₂ = 0".into()));
    }
    let n = alg.n();
    let f = |u: &[f64]| -> f64 {
        match sphere::to_unit(&alg, u) {
            Some(eta) => b.iter().zip(&eta).map(|(x, y)| x * y).sum::<f64>() - 1.0,
            None => f64::NEG_INFINITY,
        }
    };
    let count = cfg.sample_count(m);
    let euclid = euclidean_sphere(m, count);
    let (mut best_u, mut best) = (euclid.points[0].clone(), f64::NEG_INFINITY);
    for u in &euclid.points {
        let v = f(u);
        if v > best {
            best = v;
            best_u = u.clone();
        }
    }
    let bnorm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let unit = sphere::unit_sphere(&alg, count);
    let rmax = unit.points.iter().map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let lip = bnorm * rmax * 2.0;
    let res = if m == 1 { 0.0 } else { euclid.resolution };
    if m > 1 {
        let (u, v) = refine_min(|u| -f(u), &best_u, res, cfg.refine_budget);
        if -v > best {
            best = -v;
            best_u = u;
        }
    }
    let eta = sphere::to_unit(&alg, &best_u).unwrap_or(best_u.clone());
    let rank = kirillov::kirillov_form_with(&alg, &eta, cfg.rank_cut)?.rank;
    let detail = json!({"max_f": best, "argmax": eta, "rank": rank, "n": n, "lipschitz": lip, "resolution": res});
    let tol = BOUNDARY_TOL;
    let mut notes = Vec::new();
    let mut interval = None;
    let scalar = |f: f64, eta: Vec<f64>, level: Option<f64>| Witness::Scalar { eta, f, rank, level };
    let ev = if best < -(10.0 * lip * res).max(tol) {
        Evidence::new(1, "scalar_criterion", Role::Exact, Outcome::Pass).margin(-best).detail(detail)
    } else if best.abs() <= tol {
        Evidence::new(1, "scalar_criterion", Role::Exact, Outcome::Fail)
            .margin(-best)
            .witness(scalar(best, eta.clone(), None))
            .detail(detail)
    } else if best < 0.0 {
        interval = Some([best, (best + lip * res).min(0.0)]);
        Evidence::new(1, "scalar_criterion", Role::Exact, Outcome::Inconclusive).margin(-best).detail(detail)
    } else if rank < n {
        Evidence::new(1, "scalar_criterion", Role::Exact, Outcome::Fail)
            .margin(-best)
            .witness(scalar(best, eta.clone(), None))
            .detail(detail)
    } else if m >= 2 {
        // f(η) > 0 > f(−η): bisect along the great circle for a zero of f
        let (mut lo, mut hi) = (0.0f64, std::f64::consts::PI);
        let tangent = great_circle_partner(&best_u);
        let point = |s: f64| -> Vec<f64> { best_u.iter().zip(&tangent).map(|(a, t)| a * s.cos() + t * s.sin()).collect() };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(&point(mid)) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u0 = point(lo);
        let eta0 = sphere::to_unit(&alg, &u0).unwrap_or(u0.clone());
        notes.push("zero of f located by bisection on a great circle".into());
        Evidence::new(1, "scalar_criterion", Role::Exact, Outcome::Fail)
            .margin(-best)
            .witness(scalar(f(&u0), eta0, None))
            .detail(detail)
    } else if alg.step() > 2 {
        notes.push("discrete level criterion applies to step-2 algebras; use decide".into());
        Evidence::new(1, "scalar_criterion", Role::Exact, Outcome::Inconclusive).margin(-best).detail(detail)
    } else {
        // m = 1, r = n: b·η must avoid the oscillator levels
        let bev = best + 1.0;
        let mu = oscillator_frequencies(&alg, &eta);
        let bottom: f64 = mu.iter().sum();
        let mu_min = mu.iter().copied().fold(f64::INFINITY, f64::min);
        let kmax = ((bev - bottom) / (2.0 * mu_min)).ceil().max(0.0) as usize + 1;
        let lv = levels(bottom, &mu, kmax)?;
        let hit = lv.iter().map(|(v, _)| *v).find(|v| (v - bev).abs() <= tol * v.max(1.0));
        match hit {
            Some(level) => Evidence::new(1, "scalar_criterion", Role::Exact, Outcome::Fail)
                .margin(-best)
                .witness(scalar(best, eta.clone(), Some(level)))
                .detail(detail),
            None => {
                let gap = lv.iter().map(|(v, _)| (v - bev).abs()).fold(f64::INFINITY, f64::min);
                Evidence::new(1, "scalar_criterion", Role::Exact, Outcome::Pass).margin(gap).detail(detail)
            }
        }
    };
    let gamma = SymbolGamma::from_scalars(alg.clone(), &b.iter().map(|&x| c(0.0, x)).collect::<Vec<_>>())?;
    let mut evidence = vec![ev];
    for e in evidence.iter_mut() {
        if let (Outcome::Fail, Some(w)) = (e.outcome, &e.witness) {
            if !reverify(&gamma, w, cfg) {
                notes.push("witness did not re-verify; downgraded".into());
                e.outcome = Outcome::Inconclusive;
            }
        }
    }
    let (verdict, conflict) = merge(&evidence);
    Ok(DecisionReport {
        algebra: alg.label(),
        rank: 1,
        verdict,
        h_elliptic: None,
        conflict,
        evidence,
        adjoint_evidence: Vec::new(),
        numerical: None,
        interval,
        notes,
        config: cfg.clone(),
    })
}

/// A unit vector orthogonal to `u`, so that `u cos s + t sin s` runs from `u` to `−u`.
fn great_circle_partner(u: &[f64]) -> Vec<f64> {
    let k = u.iter().enumerate().min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap()).map(|(i, _)| i).unwrap_or(0);
    let mut t: Vec<f64> = (0..u.len()).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
    let d: f64 = t.iter().zip(u).map(|(a, b)| a * b).sum();
    t.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
    let nrm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
    t.iter_mut().for_each(|x| *x /= nrm);
    t
}
