//! Spectral turnover model.
//!
//! Correlation eigenpairs are put in a sign basis where the first principal
//! component is nonnegative, then combined with weighted individual turnovers
//! Tᵢ = τᵢ|wᵢ| to estimate the turnover of the combined portfolio.

mod accounting;
mod basis;
mod calibration;
mod model;
mod report;

pub use accounting::{naive_turnover, pnl_with_costs, TurnoverInputs};
pub use basis::{
    align_degenerate_subspaces, apply_signs, fix_sign_basis, fix_sign_basis_with_tolerance,
    signed_basis, SignedBasis,
};
pub use calibration::{calibrate_exact_b, ExactCalibration, CONDITION_LIMIT};
pub use model::{
    p1_share, projected_turnovers, rho_prime, rho_prime_objective, rho_star, rho_star_factored,
    spectral_terms, spectral_turnover_full, spectral_turnover_large_n, turnover_t2, FactoredGap,
    FactoredRelation, RhoPrime,
};
pub use report::{analyze, InputDigest, TurnoverReport};

pub use crate::conditioning::DEFAULT_DEGENERACY_TOLERANCE;

use serde::Serialize;
use thiserror::Error;

use crate::conditioning::ConditioningError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("weighted turnover {index} is {value}; must be finite and nonnegative")]
    InvalidTurnover { index: usize, value: f64 },

    #[error("individual turnover {index} is {value}; must be positive")]
    InvalidIndividualTurnover { index: usize, value: f64 },

    #[error("weights must satisfy sum |w| = 1, got {0}")]
    WeightNormalization(f64),

    #[error("linear cost rate must be finite and nonnegative, got {0}")]
    InvalidCostRate(f64),

    #[error("rho* must be finite and nonnegative, got {0}")]
    InvalidRhoStar(f64),

    #[error("mean off-diagonal correlation is undefined for a single alpha")]
    SingleAlpha,

    #[error("|V| matrix is singular or ill-conditioned (condition estimate {condition:e})")]
    NotCalibratable { condition: f64 },

    #[error(transparent)]
    Conditioning(#[from] ConditioningError),
}

/// Conditions that leave a result usable but suspect.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Warning {
    /// ψ⁽¹⁾ − ψ⁽²⁾ below threshold: the first principal component is not
    /// unique, so ρ\* and the large-N turnover depend on solver details.
    DegenerateTopEigenvalue { top_gap: f64, threshold: f64 },
    /// Exact zeros in Ṽ⁽¹⁾; those alphas drop out of the large-N model.
    ZeroFirstComponents { count: usize },
    /// Correlation spectrum has eigenvalues ≤ 0.
    NonPositiveEigenvalues { min: f64 },
}

/// A value together with the warnings raised while computing it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flagged<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Flagged<T> {
    pub fn new(value: T, warnings: Vec<Warning>) -> Self {
        Self { value, warnings }
    }

    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}
