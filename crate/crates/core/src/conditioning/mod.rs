//! Matrix conditioning: eigendecomposition, redundant-alpha pruning,
//! eigenvalue-floor repair of non-positive-definite matrices, and portfolio
//! volatility.

mod eigen;
mod prune;
mod repair;
mod volatility;

pub use eigen::{eigendecompose, SpectralDecomposition, SymmetricInput};
pub use prune::prune_redundant;
pub use repair::{is_positive_definite, rj_repair_entries, RjRepair};
pub use volatility::portfolio_volatility;

use thiserror::Error;

/// Default eigenvalue floor λ\*.
///
/// A second repair re-floors the eigenvalues the diagonal rescaling pushed
/// below λ\*, moving entries by about (1 − min zᵢ)·λ\*, so the floor also
/// bounds how far repair is from idempotent.
pub const DEFAULT_EIGEN_FLOOR: f64 = 1e-10;

/// Default Ψ\*: pairs with |Ψᵢⱼ| above it are redundant.
pub const DEFAULT_REDUNDANCY_BOUND: f64 = 0.9;

/// Default relative degeneracy tolerance: the top eigenvalue is degenerate
/// when ψ⁽¹⁾ − ψ⁽²⁾ < tolerance · N.
pub const DEFAULT_DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Parameters for pruning and repair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepairConfig {
    /// λ\* > 0
    pub eigen_floor: f64,
    /// Ψ\* in (0, 1)
    pub redundancy_bound: f64,
    /// Relative top-gap tolerance (multiplied by N).
    pub degeneracy_tolerance: f64,
}

impl Default for RepairConfig {
    fn default() -> Self {
        Self {
            eigen_floor: DEFAULT_EIGEN_FLOOR,
            redundancy_bound: DEFAULT_REDUNDANCY_BOUND,
            degeneracy_tolerance: DEFAULT_DEGENERACY_TOLERANCE,
        }
    }
}

impl RepairConfig {
    pub fn validate(&self) -> Result<(), ConditioningError> {
        if !(self.eigen_floor.is_finite() && self.eigen_floor > 0.0) {
            return Err(ConditioningError::InvalidFloor(self.eigen_floor));
        }
        if !(self.redundancy_bound > 0.0 && self.redundancy_bound < 1.0) {
            return Err(ConditioningError::InvalidBound(self.redundancy_bound));
        }
        if !(self.degeneracy_tolerance >= 0.0) {
            return Err(ConditioningError::InvalidTolerance(self.degeneracy_tolerance));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditioningError {
    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    Asymmetric { max_asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvalues are not in descending order")]
    Unsorted,

    #[error("QL iteration did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },

    #[error("eigenvalue floor must be positive and finite, got {0}")]
    InvalidFloor(f64),

    #[error("redundancy bound must lie in (0, 1), got {0}")]
    InvalidBound(f64),

    #[error("degeneracy tolerance must be nonnegative, got {0}")]
    InvalidTolerance(f64),

    #[error("diagonal entry {index} is {value}; repair needs a positive diagonal")]
    InvalidDiagonal { index: usize, value: f64 },

    #[error("repaired matrix failed the positive-definiteness check")]
    RepairVerification,

    #[error(
        "volatility is ill-defined: covariance has eigenvalue {min_eigenvalue:e} < 0 \
         (repair the matrix first)"
    )]
    IllDefinedVolatility { min_eigenvalue: f64 },

    #[error("investment must be finite and nonnegative, got {0}")]
    InvalidInvestment(f64),
}
