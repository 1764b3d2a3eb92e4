//! Stratified nilpotent Lie algebras given by structure constants.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{rank_rowreduce, real_inverse, RMat};

/// A structure constant. Integer and `{"num","den"}` inputs stay exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coeff {
    Exact(Rational64),
    Float(f64),
}

impl Coeff {
    pub fn int(v: i64) -> Self {
        Coeff::Exact(Rational64::from_integer(v))
    }

    pub fn value(&self) -> f64 {
        match self {
            Coeff::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Coeff::Float(f) => *f,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coeff::Exact(r) => r.is_zero(),
            Coeff::Float(f) => *f == 0.0,
        }
    }

    fn neg(&self) -> Self {
        match self {
            Coeff::Exact(r) => Coeff::Exact(-*r),
            Coeff::Float(f) => Coeff::Float(-f),
        }
    }

    fn add(&self, other: &Coeff) -> Coeff {
        match (self, other) {
            (Coeff::Exact(a), Coeff::Exact(b)) => match a.checked_add(b) {
                Some(s) => Coeff::Exact(s),
                None => Coeff::Float(self.value() + other.value()),
            },
            _ => Coeff::Float(self.value() + other.value()),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoeffRepr {
    Ratio { num: i64, den: i64 },
    Int(i64),
    Float(f64),
}

impl Serialize for Coeff {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        match self {
            Coeff::Exact(r) => {
                let mut st = s.serialize_struct("Rational", 2)?;
                st.serialize_field("num", r.numer())?;
                st.serialize_field("den", r.denom())?;
                st.end()
            }
            Coeff::Float(f) => s.serialize_f64(*f),
        }
    }
}

impl<'de> Deserialize<'de> for Coeff {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match CoeffRepr::deserialize(d)? {
            CoeffRepr::Ratio { num, den } => {
                if den == 0 {
                    return Err(serde::de::Error::custom("zero denominator"));
                }
                Ok(Coeff::Exact(Rational64::new(num, den)))
            }
            CoeffRepr::Int(v) => Ok(Coeff::int(v)),
            CoeffRepr::Float(f) if f.is_finite() => Ok(Coeff::Float(f)),
            CoeffRepr::Float(_) => Err(serde::de::Error::custom("non-finite coefficient")),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Term {
    pub k: usize,
    pub c: Coeff,
}

/// One row of the bracket table: `[e_i, e_j] = Σ c e_k`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
struct AlgebraJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    basis: Vec<String>,
    weights: Vec<u32>,
    brackets: Vec<BracketEntry>,
}

/// Named algebras the library can construct.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CatalogKind {
    Heisenberg(usize),
    Engel,
    N4,
    HeisenbergPlusLine(usize),
    FreeStep2(usize),
    /// Mohsen modification of `heisenberg(m)`.
    Htilde(usize),
}

impl fmt::Display for CatalogKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogKind::Heisenberg(m) => write!(f, "heisenberg({m})"),
            CatalogKind::Engel => write!(f, "engel"),
            CatalogKind::N4 => write!(f, "n4"),
            CatalogKind::HeisenbergPlusLine(m) => write!(f, "heisenberg_plus_line({m})"),
            CatalogKind::FreeStep2(n) => write!(f, "free_step2({n})"),
            CatalogKind::Htilde(m) => write!(f, "htilde({m})"),
        }
    }
}

impl FromStr for CatalogKind {
    type Err = Error;

    /// Accepts `engel`, `heisenberg(2)`, `heisenberg:2` and `heisenberg 2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, param) = match s.find(['(', ':', ' ']) {
            Some(pos) => {
                let rest = s[pos + 1..].trim().trim_end_matches(')').trim();
                let v: i64 = rest
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad parameter in `{s}`")))?;
                (&s[..pos], Some(v))
            }
            None => (s, None),
        };
        let need = |p: Option<i64>, min: i64| -> Result<usize> {
            match p {
                Some(v) if v >= min => Ok(v as usize),
                Some(v) => Err(Error::InvalidParameter(format!("{name}: parameter {v} < {min}"))),
                None => Err(Error::InvalidParameter(format!("{name} needs a parameter"))),
            }
        };
        let no_param = |p: Option<i64>, k: CatalogKind| -> Result<CatalogKind> {
            match p {
                None => Ok(k),
                Some(_) => Err(Error::InvalidParameter(format!("{name} takes no parameter"))),
            }
        };
        match name {
            "heisenberg" => Ok(CatalogKind::Heisenberg(need(param, 1)?)),
            "engel" => no_param(param, CatalogKind::Engel),
            "n4" => no_param(param, CatalogKind::N4),
            "heisenberg_plus_line" => Ok(CatalogKind::HeisenbergPlusLine(need(param, 1)?)),
            "free_step2" => Ok(CatalogKind::FreeStep2(need(param, 2)?)),
            "htilde" => Ok(CatalogKind::Htilde(need(param, 1)?)),
            _ => Err(Error::UnknownAlgebra(name.to_string())),
        }
    }
}

/// Graded nilpotent Lie algebra `g = g₋₁ ⊕ … ⊕ g₋ᵣ` with a fixed basis.
#[derive(Clone, Debug)]
pub struct StratifiedLieAlgebra {
    kind: Option<CatalogKind>,
    basis: Vec<String>,
    weights: Vec<u32>,
    entries: Vec<BracketEntry>,
    dim: usize,
    table: Vec<Option<Coeff>>,
    consts: Vec<f64>,
    layers: Vec<Vec<usize>>,
    /// Gram matrix of the listed g₋₂ basis in the metric induced from `∧²g₋₁`.
    gram2: Option<RMat>,
}

impl PartialEq for StratifiedLieAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights && self.consts == other.consts
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

impl StratifiedLieAlgebra {
    /// Builds the table. Entries given for `(i,j)` only are extended by
    /// antisymmetry; entries given for both orders are kept verbatim so that
    /// `validate` can report inconsistencies.
    pub fn new(basis: Vec<String>, weights: Vec<u32>, entries: Vec<BracketEntry>) -> Result<Self> {
        let dim = basis.len();
        if weights.len() != dim {
            return Err(Error::MalformedAlgebra(format!(
                "{} basis names but {} weights",
                dim,
                weights.len()
            )));
        }
        if let Some(p) = weights.iter().position(|&w| w == 0) {
            return Err(Error::MalformedAlgebra(format!("weight of basis vector {p} is 0")));
        }
        let mut table: Vec<Option<Coeff>> = vec![None; dim * dim * dim];
        let mut given = vec![false; dim * dim];
        for (e_idx, e) in entries.iter().enumerate() {
            if e.i >= dim || e.j >= dim {
                return Err(Error::MalformedAlgebra(format!(
                    "brackets[{e_idx}]: index ({}, {}) out of range for dimension {dim}",
                    e.i, e.j
                )));
            }
            given[e.i * dim + e.j] = true;
            for (t_idx, t) in e.terms.iter().enumerate() {
                if t.k >= dim {
                    return Err(Error::MalformedAlgebra(format!(
                        "brackets[{e_idx}].terms[{t_idx}]: k = {} out of range for dimension {dim}",
                        t.k
                    )));
                }
                let slot = &mut table[(e.i * dim + e.j) * dim + t.k];
                *slot = Some(match slot {
                    Some(prev) => prev.add(&t.c),
                    None => t.c,
                });
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                if given[i * dim + j] && !given[j * dim + i] && i != j {
                    for k in 0..dim {
                        if let Some(cv) = table[(i * dim + j) * dim + k] {
                            table[(j * dim + i) * dim + k] = Some(cv.neg());
                        }
                    }
                }
            }
        }
        let consts = table.iter().map(|c| c.map_or(0.0, |c| c.value())).collect();
        let step = weights.iter().copied().max().unwrap_or(0) as usize;
        let mut layers = vec![Vec::new(); step];
        for (idx, &w) in weights.iter().enumerate() {
            layers[w as usize - 1].push(idx);
        }
        let mut alg = StratifiedLieAlgebra {
            kind: None,
            basis,
            weights,
            entries,
            dim,
            table,
            consts,
            layers,
            gram2: None,
        };
        alg.gram2 = alg.compute_gram2();
        Ok(alg)
    }

    /// Convenience constructor from integer triples `(i, j, k, c)`.
    pub fn from_int_brackets(
        names: &[&str],
        weights: &[u32],
        brackets: &[(usize, usize, usize, i64)],
    ) -> Result<Self> {
        let mut entries: Vec<BracketEntry> = Vec::new();
        for &(i, j, k, cv) in brackets {
            match entries.iter_mut().find(|e| e.i == i && e.j == j) {
                Some(e) => e.terms.push(Term { k, c: Coeff::int(cv) }),
                None => entries.push(BracketEntry { i, j, terms: vec![Term { k, c: Coeff::int(cv) }] }),
            }
        }
        Self::new(names.iter().map(|s| s.to_string()).collect(), weights.to_vec(), entries)
    }

    fn with_kind(mut self, kind: CatalogKind) -> Self {
        self.kind = Some(kind);
        self
    }

    pub fn kind(&self) -> Option<CatalogKind> {
        self.kind
    }

    pub fn label(&self) -> String {
        self.kind.map_or_else(|| "custom".to_string(), |k| k.to_string())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn entries(&self) -> &[BracketEntry] {
        &self.entries
    }

    pub fn step(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, w: usize) -> &[usize] {
        if w == 0 || w > self.layers.len() {
            &[]
        } else {
            &self.layers[w - 1]
        }
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.len()).collect()
    }

    /// `n = dim g₋₁`
    pub fn n(&self) -> usize {
        self.layer(1).len()
    }

    /// `m = dim g₋₂`
    pub fn m(&self) -> usize {
        self.layer(2).len()
    }

    pub fn coeff(&self, i: usize, j: usize, k: usize) -> Option<Coeff> {
        self.table[(i * self.dim + j) * self.dim + k]
    }

    /// Float view of `c_{ij}^k`.
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.consts[(i * self.dim + j) * self.dim + k]
    }

    /// `[x, y]` for coordinate vectors.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                if y[j] == 0.0 {
                    continue;
                }
                let f = x[i] * y[j];
                let base = (i * d + j) * d;
                for (k, o) in out.iter_mut().enumerate() {
                    *o += f * self.consts[base + k];
                }
            }
        }
        out
    }

    /// Coordinates of `[X_j, X_k]` in the listed g₋₂ basis.
    pub fn bracket_g2(&self, j: usize, k: usize) -> Vec<f64> {
        let l1 = self.layer(1);
        let (a, b) = (l1[j], l1[k]);
        self.layer(2).iter().map(|&y| self.c(a, b, y)).collect()
    }

    /// The `m × C(n,2)` matrix of the projection `∧²g₋₁ → g₋₂`.
    pub fn wedge_projection(&self) -> RMat {
        let n = self.n();
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect();
        let cols: Vec<Vec<f64>> = pairs.iter().map(|&(j, k)| self.bracket_g2(j, k)).collect();
        RMat::from_fn(self.m(), pairs.len(), |l, p| cols[p][l])
    }

    fn compute_gram2(&self) -> Option<RMat> {
        let m = self.m();
        if m == 0 {
            return None;
        }
        let p = self.wedge_projection();
        let ppt = &p * p.transpose();
        let r = rank_rowreduce(
            &(0..m).map(|i| (0..m).map(|j| ppt[(i, j)]).collect()).collect::<Vec<_>>(),
            1e-10,
        );
        if r < m {
            return None;
        }
        Some(real_inverse(&ppt))
    }

    /// Gram matrix `G = (P Pᵀ)⁻¹` of the listed g₋₂ basis in the induced
    /// metric, or `None` when `[g₋₁, g₋₁] ≠ g₋₂`.
    pub fn gram_g2(&self) -> Option<&RMat> {
        self.gram2.as_ref()
    }

    pub fn validate(&self) -> ValidationReport {
        let checks = vec![
            self.check_antisymmetry(),
            self.check_grading(),
            self.check_jacobi(),
            self.check_generation(),
        ];
        ValidationReport { checks }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let rep = self.validate();
        if rep.ok() {
            Ok(())
        } else {
            let names: Vec<String> = rep
                .failures()
                .iter()
                .map(|c| format!("{} {:?}", c.name, c.first_violation))
                .collect();
            Err(Error::MalformedAlgebra(format!("validation failed: {}", names.join(", "))))
        }
    }

    fn check_antisymmetry(&self) -> Check {
        let d = self.dim;
        for i in 0..d {
            for j in i..d {
                for k in 0..d {
                    let a = self.coeff(i, j, k);
                    let b = self.coeff(j, i, k);
                    let bad = match (a, b) {
                        (None, None) => false,
                        (Some(x), None) | (None, Some(x)) => !x.is_zero(),
                        (Some(Coeff::Exact(x)), Some(Coeff::Exact(y))) => !(x + y).is_zero(),
                        (Some(x), Some(y)) => (x.value() + y.value()).abs() > 1e-12,
                    };
                    if bad {
                        return Check {
                            name: "antisymmetry",
                            passed: false,
                            first_violation: Some([i, j, k]),
                            detail: Some(format!(
                                "c[{i}][{j}][{k}] = {}, c[{j}][{i}][{k}] = {}",
                                self.c(i, j, k),
                                self.c(j, i, k)
                            )),
                        };
                    }
                }
            }
        }
        Check { name: "antisymmetry", passed: true, first_violation: None, detail: None }
    }

    fn check_grading(&self) -> Check {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    if self.c(i, j, k) != 0.0 && self.weights[k] != self.weights[i] + self.weights[j] {
                        return Check {
                            name: "grading",
                            passed: false,
                            first_violation: Some([i, j, k]),
                            detail: Some(format!(
                                "weights {} + {} != {}",
                                self.weights[i], self.weights[j], self.weights[k]
                            )),
                        };
                    }
                }
            }
        }
        Check { name: "grading", passed: true, first_violation: None, detail: None }
    }

    fn jacobi_exact(&self, i: usize, j: usize, l: usize, k: usize) -> Option<Rational64> {
        let d = self.dim;
        let get = |a: usize, b: usize, c: usize| -> Option<Rational64> {
            match self.coeff(a, b, c) {
                None => Some(Rational64::zero()),
                Some(Coeff::Exact(r)) => Some(r),
                Some(Coeff::Float(_)) => None,
            }
        };
        let mut acc = Rational64::zero();
        for p in 0..d {
            for (x, y, z) in [(j, l, i), (l, i, j), (i, j, l)] {
                // [e_z, [e_x, e_y]] component k
                let t = get(x, y, p)?.checked_mul(&get(z, p, k)?)?;
                acc = acc.checked_add(&t)?;
            }
        }
        Some(acc)
    }

    fn jacobi_float(&self, i: usize, j: usize, l: usize, k: usize) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for p in 0..d {
            acc += self.c(j, l, p) * self.c(i, p, k)
                + self.c(l, i, p) * self.c(j, p, k)
                + self.c(i, j, p) * self.c(l, p, k);
        }
        acc
    }

    fn check_jacobi(&self) -> Check {
        let d = self.dim;
        let cmax = self.consts.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
        for i in 0..d {
            for j in i + 1..d {
                for l in j + 1..d {
                    for k in 0..d {
                        let bad = match self.jacobi_exact(i, j, l, k) {
                            Some(r) => !r.is_zero(),
                            None => self.jacobi_float(i, j, l, k).abs() > 1e-12 * cmax * cmax,
                        };
                        if bad {
                            return Check {
                                name: "jacobi",
                                passed: false,
                                first_violation: Some([i, j, l]),
                                detail: Some(format!(
                                    "component {} of the Jacobiator is {}",
                                    self.basis[k],
                                    self.jacobi_float(i, j, l, k)
                                )),
                            };
                        }
                    }
                }
            }
        }
        Check { name: "jacobi", passed: true, first_violation: None, detail: None }
    }

    /// Ranks of the spans of iterated brackets of g₋₁ basis vectors, layer by layer.
    pub fn generated_layer_ranks(&self) -> Vec<usize> {
        let d = self.dim;
        let unit = |i: usize| -> Vec<f64> { (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect() };
        let gens: Vec<Vec<f64>> = self.layer(1).iter().map(|&i| unit(i)).collect();
        let mut current = gens.clone();
        let mut ranks = Vec::new();
        for _ in 0..self.step() {
            let r = rank_rowreduce(&current, 1e-10);
            ranks.push(r);
            let mut next: Vec<Vec<f64>> = Vec::new();
            let basis = independent_rows(&current, 1e-10);
            for x in &gens {
                for v in &basis {
                    next.push(self.bracket(x, v));
                }
            }
            current = next;
        }
        ranks
    }

    fn check_generation(&self) -> Check {
        let ranks = self.generated_layer_ranks();
        let dims = self.layer_dims();
        for (w, (r, dw)) in ranks.iter().zip(&dims).enumerate() {
            if r != dw {
                return Check {
                    name: "generation",
                    passed: false,
                    first_violation: None,
                    detail: Some(format!(
                        "iterated brackets span a {r}-dimensional subspace of the {dw}-dimensional layer of weight {}",
                        w + 1
                    )),
                };
            }
        }
        Check { name: "generation", passed: true, first_violation: None, detail: None }
    }

    /// Orthonormal basis of the center, in full coordinates.
    pub fn center(&self) -> Vec<Vec<f64>> {
        let d = self.dim;
        // ad(x) e_j = Σ_i x_i c_{ij}^k; stack the maps for all j.
        let a = RMat::from_fn(d * d, d, |row, i| {
            let (j, k) = (row / d, row % d);
            self.c(i, j, k)
        });
        crate::linalg::real_nullspace(&a, 1e-10)
    }

    /// Orthonormal basis (in g₋₁ coordinates) of `{x ∈ g₋₁ : [x, g₋₁] = 0}`.
    pub fn central_part_g1(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let m = self.m();
        // rows: (k, l) -> Σ_j x_j c_{jk}^{l}
        let l1 = self.layer(1).to_vec();
        let l2 = self.layer(2).to_vec();
        let a = RMat::from_fn(n * m.max(1), n, |row, j| {
            if m == 0 {
                return 0.0;
            }
            let (k, l) = (row / m, row % m);
            self.c(l1[j], l1[k], l2[l])
        });
        crate::linalg::real_nullspace(&a, 1e-10)
    }

    pub fn to_json(&self) -> String {
        let j = AlgebraJson {
            name: self.kind.map(|k| k.to_string()),
            basis: self.basis.clone(),
            weights: self.weights.clone(),
            brackets: self.entries.clone(),
        };
        serde_json::to_string_pretty(&j).expect("algebra serializes")
    }

    /// Parses the algebra JSON schema. A `name` field must describe the
    /// same structure as the catalog algebra it names.
    pub fn from_json(text: &str) -> Result<Self> {
        let j: AlgebraJson = serde_json::from_str(text)?;
        let alg = Self::new(j.basis, j.weights, j.brackets)?;
        match j.name {
            None => Ok(alg),
            Some(name) => {
                let kind: CatalogKind = name.parse()?;
                let reference = catalog_kind(kind)?;
                if reference != alg {
                    return Err(Error::MalformedAlgebra(format!(
                        "name `{name}` does not match the catalog structure"
                    )));
                }
                Ok(alg.with_kind(kind))
            }
        }
    }
}

fn independent_rows(rows: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut rank = 0;
    for r in rows {
        let mut trial = kept.clone();
        trial.push(r.clone());
        let nr = rank_rowreduce(&trial, tol);
        if nr > rank {
            kept = trial;
            rank = nr;
        }
    }
    kept
}

pub fn catalog(name: &str, params: &[i64]) -> Result<StratifiedLieAlgebra> {
    let param = |min: i64| -> Result<usize> {
        match params {
            [v] if *v >= min => Ok(*v as usize),
            [v] => Err(Error::InvalidParameter(format!("{name}: parameter {v} must be >= {min}"))),
            _ => Err(Error::InvalidParameter(format!("{name} expects one parameter"))),
        }
    };
    let none = || -> Result<()> {
        if params.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{name} takes no parameters")))
        }
    };
    let kind = match name {
        "heisenberg" => CatalogKind::Heisenberg(param(1)?),
        "engel" => {
            none()?;
            CatalogKind::Engel
        }
        "n4" => {
            none()?;
            CatalogKind::N4
        }
        "heisenberg_plus_line" => CatalogKind::HeisenbergPlusLine(param(1)?),
        "free_step2" => CatalogKind::FreeStep2(param(2)?),
        "htilde" => CatalogKind::Htilde(param(1)?),
        _ => return Err(Error::UnknownAlgebra(name.to_string())),
    };
    catalog_kind(kind)
}

pub fn catalog_kind(kind: CatalogKind) -> Result<StratifiedLieAlgebra> {
    let alg = match kind {
        CatalogKind::Heisenberg(m) => heisenberg(m)?,
        CatalogKind::Engel => StratifiedLieAlgebra::from_int_brackets(
            &["X1", "X2", "X3", "X4"],
            &[1, 1, 2, 3],
            &[(0, 1, 2, 1), (0, 2, 3, 1)],
        )?,
        CatalogKind::N4 => StratifiedLieAlgebra::from_int_brackets(
            &["X1", "X2", "X3", "Y1", "Y2", "Z"],
            &[1, 1, 1, 2, 2, 3],
            &[(0, 1, 3, 1), (1, 2, 4, 1), (0, 4, 5, 1), (3, 2, 5, 1)],
        )?,
        CatalogKind::HeisenbergPlusLine(m) => {
            if m == 0 {
                return Err(Error::InvalidParameter("m must be positive".into()));
            }
            let mut names: Vec<String> = (1..=m).map(|j| format!("X{j}")).collect();
            names.extend((1..=m).map(|j| format!("Y{j}")));
            names.push("W".into());
            names.push("Z".into());
            let mut weights = vec![1u32; 2 * m + 1];
            weights.push(2);
            let br: Vec<(usize, usize, usize, i64)> = (0..m).map(|j| (j, m + j, 2 * m + 1, 1)).collect();
            let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            StratifiedLieAlgebra::from_int_brackets(&refs, &weights, &br)?
        }
        CatalogKind::FreeStep2(n) => {
            if n < 2 {
                return Err(Error::InvalidParameter("free_step2 needs n >= 2".into()));
            }
            let mut names: Vec<String> = (1..=n).map(|j| format!("X{j}")).collect();
            let mut weights = vec![1u32; n];
            let mut br = Vec::new();
            for j in 0..n {
                for k in j + 1..n {
                    br.push((j, k, names.len(), 1));
                    names.push(format!("Y{}{}", j + 1, k + 1));
                    weights.push(2);
                }
            }
            let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            StratifiedLieAlgebra::from_int_brackets(&refs, &weights, &br)?
        }
        CatalogKind::Htilde(m) => return mohsen_modify(&heisenberg(m)?),
    };
    Ok(alg.with_kind(kind))
}

fn heisenberg(m: usize) -> Result<StratifiedLieAlgebra> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    let mut names: Vec<String> = (1..=m).map(|j| format!("X{j}")).collect();
    names.extend((1..=m).map(|j| format!("Y{j}")));
    names.push("Z".into());
    let mut weights = vec![1u32; 2 * m];
    weights.push(2);
    let br: Vec<(usize, usize, usize, i64)> = (0..m).map(|j| (j, m + j, 2 * m, 1)).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    Ok(StratifiedLieAlgebra::from_int_brackets(&refs, &weights, &br)?
        .with_kind(CatalogKind::Heisenberg(m)))
}

/// Mohsen modification `h̃_{2m+1}` of `heisenberg(m)`.
///
/// Basis order: `X̃_1..X̃_m, Ỹ_1..Ỹ_m, e_Z` (weight 1), `Z̃, e_X1, e_Y1, …,
/// e_Xm, e_Ym` (weight 2), `Z0` (weight 3). The relation `[Z̃, e_Z]` carries
/// the coefficient −2, the unique value for which the Jacobi identity holds
/// on `(X̃_j, Ỹ_j, e_Z)` given the remaining relations.
pub fn mohsen_modify(h: &StratifiedLieAlgebra) -> Result<StratifiedLieAlgebra> {
    let m = match h.kind() {
        Some(CatalogKind::Heisenberg(m)) => m,
        _ => {
            if h.step() == 2 && h.m() == 1 && h.n() % 2 == 0 && h.n() > 0 {
                let m = h.n() / 2;
                if heisenberg(m)? == *h {
                    m
                } else {
                    return Err(Error::NotHeisenberg("brackets differ from [X_j,Y_k] = δ_jk Z".into()));
                }
            } else {
                return Err(Error::NotHeisenberg(format!(
                    "layer dimensions {:?}",
                    h.layer_dims()
                )));
            }
        }
    };
    let xt = |j: usize| j;
    let yt = |j: usize| m + j;
    let ez = 2 * m;
    let zt = 2 * m + 1;
    let ex = |j: usize| 2 * m + 2 + 2 * j;
    let ey = |j: usize| 2 * m + 3 + 2 * j;
    let z0 = 4 * m + 2;
    let mut names: Vec<String> = (1..=m).map(|j| format!("Xt{j}")).collect();
    names.extend((1..=m).map(|j| format!("Yt{j}")));
    names.push("eZ".into());
    names.push("Zt".into());
    for j in 1..=m {
        names.push(format!("eX{j}"));
        names.push(format!("eY{j}"));
    }
    names.push("Z0".into());
    let mut weights = vec![1u32; 2 * m + 1];
    weights.extend(vec![2u32; 2 * m + 1]);
    weights.push(3);
    let mut br = Vec::new();
    for j in 0..m {
        br.push((xt(j), yt(j), zt, 1));
        br.push((xt(j), ez, ey(j), 1));
        br.push((yt(j), ez, ex(j), -1));
        br.push((xt(j), ex(j), z0, 1));
        br.push((yt(j), ey(j), z0, 1));
    }
    br.push((zt, ez, z0, -2));
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    Ok(StratifiedLieAlgebra::from_int_brackets(&refs, &weights, &br)?.with_kind(CatalogKind::Htilde(m)))
}

/// `g₋₁ ⊕ g₋₂` with g₋₂ declared central.
pub fn truncate_step2(alg: &StratifiedLieAlgebra) -> StratifiedLieAlgebra {
    if alg.step() <= 2 {
        return alg.clone();
    }
    let l1 = alg.layer(1).to_vec();
    let l2 = alg.layer(2).to_vec();
    let keep: Vec<usize> = (0..alg.dim()).filter(|&i| alg.weights()[i] <= 2).collect();
    let pos = |old: usize| keep.iter().position(|&x| x == old).unwrap();
    let names: Vec<String> = keep.iter().map(|&i| alg.basis_names()[i].clone()).collect();
    let weights: Vec<u32> = keep.iter().map(|&i| alg.weights()[i]).collect();
    let mut entries = Vec::new();
    for (a, &i) in l1.iter().enumerate() {
        for &j in &l1[a + 1..] {
            let terms: Vec<Term> = l2
                .iter()
                .filter_map(|&k| alg.coeff(i, j, k).filter(|c| !c.is_zero()).map(|c| Term { k: pos(k), c }))
                .collect();
            if !terms.is_empty() {
                entries.push(BracketEntry { i: pos(i), j: pos(j), terms });
            }
        }
    }
    StratifiedLieAlgebra::new(names, weights, entries).expect("truncation is well formed")
}

/// A surjective graded homomorphism `g → g'`.
#[derive(Clone, Debug)]
pub struct GradedHomomorphism {
    pub source: StratifiedLieAlgebra,
    pub target: StratifiedLieAlgebra,
    /// `dim(target) × dim(source)`
    pub matrix: RMat,
}

impl GradedHomomorphism {
    pub fn new(source: StratifiedLieAlgebra, target: StratifiedLieAlgebra, matrix: RMat) -> Result<Self> {
        if matrix.nrows() != target.dim() || matrix.ncols() != source.dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                target.dim(),
                source.dim()
            )));
        }
        let phi = GradedHomomorphism { source, target, matrix };
        let rep = phi.validate();
        if !rep.ok() {
            let names: Vec<String> = rep.failures().iter().map(|c| c.name.to_string()).collect();
            return Err(Error::Precondition(format!("homomorphism fails: {}", names.join(", "))));
        }
        Ok(phi)
    }

    pub fn identity(alg: &StratifiedLieAlgebra) -> Self {
        let d = alg.dim();
        let matrix = RMat::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 });
        GradedHomomorphism { source: alg.clone(), target: alg.clone(), matrix }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.matrix.nrows())
            .map(|i| (0..x.len()).map(|j| self.matrix[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let (s, t) = (&self.source, &self.target);
        let ds = s.dim();
        let unit = |i: usize| -> Vec<f64> { (0..ds).map(|k| if k == i { 1.0 } else { 0.0 }).collect() };
        let mut checks = Vec::new();

        let mut brackets = Check { name: "brackets", passed: true, first_violation: None, detail: None };
        'outer: for i in 0..ds {
            for j in i + 1..ds {
                let lhs = self.apply(&s.bracket(&unit(i), &unit(j)));
                let rhs = t.bracket(&self.apply(&unit(i)), &self.apply(&unit(j)));
                for k in 0..t.dim() {
                    if (lhs[k] - rhs[k]).abs() > 1e-10 {
                        brackets.passed = false;
                        brackets.first_violation = Some([i, j, k]);
                        break 'outer;
                    }
                }
            }
        }
        checks.push(brackets);

        let mut graded = Check { name: "graded", passed: true, first_violation: None, detail: None };
        'g: for j in 0..ds {
            for i in 0..t.dim() {
                if self.matrix[(i, j)].abs() > 1e-12 && t.weights()[i] != s.weights()[j] {
                    graded.passed = false;
                    graded.first_violation = Some([i, j, 0]);
                    break 'g;
                }
            }
        }
        checks.push(graded);

        let rows: Vec<Vec<f64>> =
            (0..t.dim()).map(|i| (0..ds).map(|j| self.matrix[(i, j)]).collect()).collect();
        let rank = rank_rowreduce(&rows, 1e-10);
        checks.push(Check {
            name: "surjective",
            passed: rank == t.dim(),
            first_violation: None,
            detail: Some(format!("rank {rank} of {}", t.dim())),
        });

        let (l1s, l1t) = (s.layer(1), t.layer(1));
        let block = RMat::from_fn(l1t.len(), l1s.len(), |i, j| self.matrix[(l1t[i], l1s[j])]);
        let sv = crate::linalg::singular_values_real(&block);
        let smax = sv.first().copied().unwrap_or(0.0);
        let iso = sv.iter().filter(|&&x| x > 1e-10 * smax.max(1.0)).all(|&x| (x - 1.0).abs() <= 1e-10);
        checks.push(Check {
            name: "isometry_g1",
            passed: iso,
            first_violation: None,
            detail: Some(format!("singular values {sv:?}")),
        });
        ValidationReport { checks }
    }

    /// The block `g₋₂ → g'₋₂`, `m' × m`.
    pub fn g2_block(&self) -> RMat {
        let (l2s, l2t) = (self.source.layer(2), self.target.layer(2));
        RMat::from_fn(l2t.len(), l2s.len(), |i, j| self.matrix[(l2t[i], l2s[j])])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_parses_names() {
        assert_eq!("heisenberg(2)".parse::<CatalogKind>().unwrap(), CatalogKind::Heisenberg(2));
        assert_eq!("free_step2:3".parse::<CatalogKind>().unwrap(), CatalogKind::FreeStep2(3));
        assert!("heisenberg(0)".parse::<CatalogKind>().is_err());
        assert!("nope".parse::<CatalogKind>().is_err());
    }

    #[test]
    fn heisenberg_layout() {
        let h = catalog("heisenberg", &[1]).unwrap();
        assert_eq!(h.dim(), 3);
        assert_eq!(h.weights(), &[1, 1, 2]);
        assert_eq!(h.c(0, 1, 2), 1.0);
        assert_eq!(h.c(1, 0, 2), -1.0);
    }

    #[test]
    fn mohsen_jacobi_needs_minus_two() {
        let t = mohsen_modify(&catalog("heisenberg", &[1]).unwrap()).unwrap();
        assert!(t.validate().ok());
    }
}
