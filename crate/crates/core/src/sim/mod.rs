//! Synthetic one-factor data, a trade-netting simulator, and the ρ\*·N versus
//! N sweep with its no-intercept regression.
//!
//! All randomness comes from ChaCha8 generators seeded with a 64-bit master
//! seed. Independent units of work (Monte-Carlo paths, sweep grid points) each
//! take their own stream of that seed, so results do not depend on scheduling.

mod crossing;
mod generate;
mod regression;
mod sweep;

pub use crossing::{gen_trades, run_crossing, simulate_crossing, SimResult};
pub use generate::{gen_one_factor_panel, one_factor_correlation, random_loadings};
pub use regression::{no_intercept_regression, FStatistic, Regression};
pub use sweep::{
    parse_grid, sweep_rho_star, write_sweep_csv, OneFactorGenerator, PanelGenerator,
    PipelineOptions, SweepPoint, SweepResult,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditioning::ConditioningError;
use crate::ingest::IngestError;
use crate::spectral::SpectralError;

/// Cross-sectional correlation structure of a one-factor generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FactorTarget {
    /// Every pair has population correlation ρ (loadings √ρ).
    Uniform { rho: f64 },
    /// Explicit loadings βᵢ in [−1, 1]; Ψᵢⱼ = βᵢβⱼ. The first N are used.
    Loadings { loadings: Vec<f64> },
    /// βᵢ drawn uniformly from [low, high] ⊂ [−1, 1] before the panel.
    RandomLoadings { low: f64, high: f64 },
}

impl FactorTarget {
    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            FactorTarget::Uniform { rho } if !(0.0..=1.0).contains(rho) => {
                Err(SimError::InvalidConfig(format!("rho must lie in [0, 1], got {rho}")))
            }
            FactorTarget::Loadings { loadings } => match loadings.iter().find(|b| !(b.abs() <= 1.0)) {
                Some(b) => Err(SimError::InvalidConfig(format!("loading {b} outside [-1, 1]"))),
                None => Ok(()),
            },
            FactorTarget::RandomLoadings { low, high }
                if !(-1.0 <= *low && low <= high && *high <= 1.0) =>
            {
                Err(SimError::InvalidConfig(format!(
                    "loading range [{low}, {high}] must lie in [-1, 1]"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Loadings for N series, drawing from `rng` only for `RandomLoadings`.
    pub fn loadings(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, SimError> {
        self.validate()?;
        match self {
            FactorTarget::Uniform { rho } => Ok(vec![rho.sqrt(); n]),
            FactorTarget::Loadings { loadings } => {
                if loadings.len() < n {
                    return Err(SimError::InvalidConfig(format!(
                        "{} loadings supplied for {n} series",
                        loadings.len()
                    )));
                }
                Ok(loadings[..n].to_vec())
            }
            FactorTarget::RandomLoadings { low, high } => Ok(random_loadings(n, *low, *high, rng)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// N ≥ 2
    pub n_alphas: usize,
    /// Panel length (M + 1 periods).
    pub n_periods: usize,
    /// K ≥ 1 instruments traded by every alpha.
    pub n_instruments: usize,
    pub target: FactorTarget,
    pub master_seed: u64,
    pub n_paths: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_alphas < 2 {
            return Err(SimError::InvalidConfig(format!(
                "need at least 2 alphas, got {}",
                self.n_alphas
            )));
        }
        if self.n_instruments < 1 {
            return Err(SimError::InvalidConfig("need at least 1 instrument".into()));
        }
        if self.n_paths < 1 {
            return Err(SimError::InvalidConfig("need at least 1 path".into()));
        }
        if self.n_periods < 2 {
            return Err(SimError::InvalidConfig(format!(
                "need at least 2 periods, got {}",
                self.n_periods
            )));
        }
        self.target.validate()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("regression needs matching, nonempty x and y (got {x} and {y})")]
    RegressionShape { x: usize, y: usize },

    #[error("regressor is identically zero")]
    UndefinedRegressor,

    #[error("CSV write failed: {0}")]
    Io(String),

    #[error(transparent)]
    Ingest(#[from] IngestError),

    #[error(transparent)]
    Conditioning(#[from] ConditioningError),

    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Order-fixed pairwise summation.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}
