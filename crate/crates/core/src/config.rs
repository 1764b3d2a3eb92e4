//! Run configuration shared by the decision engine and the command line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Sphere sample count; `None` picks 2048 for dim g₋₂ = 2 and 8192 above.
    pub samples: Option<usize>,
    pub rank_cut: f64,
    pub kernel_cut: f64,
    /// Injectivity threshold relative to the family scale.
    pub injectivity_threshold: f64,
    pub hermite_size: usize,
    pub grid_points: usize,
    pub kmax: usize,
    pub star_ts: Vec<f64>,
    /// Objective evaluations allowed for local refinement near a boundary.
    pub refine_budget: usize,
    /// Run model-operator sweeps when the certified pipeline is inconclusive.
    pub numerical_refinement: bool,
    /// Also decide `−γ*` and report the H-ellipticity verdict.
    pub h_elliptic: bool,
    /// Test names to leave out of the pipeline.
    pub skip: Vec<String>,
    pub seed: u64,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            samples: None,
            rank_cut: crate::kirillov::DEFAULT_RANK_CUT,
            kernel_cut: crate::symbolmap::DEFAULT_KERNEL_CUT,
            injectivity_threshold: 1e-6,
            hermite_size: 400,
            grid_points: 48,
            kmax: 50,
            star_ts: (1..=20).map(|i| i as f64 / 20.0).collect(),
            refine_budget: 400,
            numerical_refinement: false,
            h_elliptic: true,
            skip: Vec::new(),
            seed: 0x5eed,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn sample_count(&self, m: usize) -> usize {
        self.samples.unwrap_or(match m {
            0 | 1 => 2,
            2 => 2048,
            _ => 8192,
        })
    }

    pub fn skips(&self, test: &str) -> bool {
        self.skip.iter().any(|s| s == test)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rank_cut", self.rank_cut),
            ("kernel_cut", self.kernel_cut),
            ("injectivity_threshold", self.injectivity_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.samples == Some(0) {
            return Err(Error::Config("samples must be positive".into()));
        }
        if self.hermite_size == 0 || self.grid_points < 3 {
            return Err(Error::Config("discretization sizes too small".into()));
        }
        if let Some(t) = self.star_ts.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::Config(format!("star-shape parameter {t} outside (0, 1]")));
        }
        Ok(())
    }
}
