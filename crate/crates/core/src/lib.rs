//! Hypoellipticity tests for sub-Laplacians `ΣX_j² + Σγ_l Y_l` on stratified
//! nilpotent Lie algebras.

pub mod algebra;
pub mod config;
pub mod decide;
pub mod error;
pub mod linalg;

pub use algebra::{catalog, catalog_kind, mohsen_modify, truncate_step2, CatalogKind, GradedHomomorphism, StratifiedLieAlgebra};
pub use config::RunConfig;
pub use decide::{decide, decide_polycontact_flat, rs_scalar_decide, star_shape_probe, DecisionReport, Verdict};
pub use error::{Error, Result};
pub use modelops::{min_singular, InjectivityEstimate, ModelOperator};
pub use symbolmap::{pushforward, quotient_norm, SymbolGamma};
pub mod kirillov;
pub mod modelops;
pub mod sphere;
pub mod symbolmap;
