//! Turnover reduction from internal crossing of many alpha streams.
//!
//! The crate estimates the alpha correlation matrix from return panels,
//! conditions it (redundant-alpha pruning, eigenvalue-floor repair), and
//! evaluates a spectral turnover model built from its eigenvalues and
//! eigenvectors. In the large-N limit the model reduces to the top eigenvalue
//! and first principal component, summarised by the turnover reduction
//! coefficient ρ\*. A Monte-Carlo trade-netting simulator and a ρ\*·N versus N
//! sweep harness provide empirical checks.
//!
//! Module map:
//! - [`ingest`]: panels, N/A-aware sample moments, OLS residualization.
//! - [`conditioning`]: symmetric eigensolver, pruning, repair, volatility.
//! - [`spectral`]: sign basis, turnover models, ρ\*, ρ′, exact-B calibration.
//! - [`sim`]: synthetic generators, crossing simulator, sweeps, regression.

pub mod conditioning;
pub mod ingest;
pub mod sim;
pub mod spectral;
