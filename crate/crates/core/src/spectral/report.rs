use serde::Serialize;

use super::model::{
    p1_share, rho_prime, rho_star, rho_star_factored, spectral_turnover_full,
    spectral_turnover_large_n, turnover_t2,
};
use super::{calibrate_exact_b, signed_basis, SpectralError, Warning};
use crate::ingest::{CorrelationMatrix, EstimationMode};

/// Provenance of the matrix a report was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    /// N after pruning.
    pub n: usize,
    /// Number of time observations, when the matrix came from a panel.
    pub m: Option<usize>,
    pub estimation_mode: Option<EstimationMode>,
    pub repair_applied: bool,
    /// λ\*
    pub eigen_floor: Option<f64>,
    /// Ψ\*
    pub redundancy_bound: Option<f64>,
    pub degeneracy_tolerance: f64,
}

impl InputDigest {
    /// Digest for a matrix supplied directly, with no estimation or conditioning.
    pub fn bare(n: usize, degeneracy_tolerance: f64) -> Self {
        Self {
            n,
            m: None,
            estimation_mode: None,
            repair_applied: false,
            eigen_floor: None,
            redundancy_bound: None,
            degeneracy_tolerance,
        }
    }
}

/// Every turnover estimate and reduction coefficient for one correlation
/// matrix and one set of weighted turnovers. ρ\* and ρ′ are both reported;
/// `rho_max` is max(ρ\*, ρ′) and nothing else picks between them. ψ\*, ρ′ and
/// ρ̄ are computed in the sign basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct TurnoverReport {
    pub T_full: f64,
    pub T_large_n: f64,
    pub T_t2: f64,
    pub T_naive: f64,
    /// Exact-B model, absent when |Ṽ| is not invertible.
    pub T_exact_b: Option<f64>,
    pub rho_star: f64,
    pub rho_prime: f64,
    pub psi_star: f64,
    pub rho_bar: f64,
    pub rho_one: f64,
    pub rho_star_factored: f64,
    pub rho_max: f64,
    pub p1_share: Option<f64>,
    pub top_eigenvalue: f64,
    pub top_gap: f64,
    /// The finite-N coefficients of the full model are fixed only by the
    /// uniform-correlation case; treat `T_full` as a modelling choice.
    pub full_model_note: &'static str,
    pub warnings: Vec<Warning>,
    pub input: InputDigest,
}

const FULL_MODEL_NOTE: &str = "finite-N coefficients fixed by trace normalization only";

/// Builds a report from a correlation matrix and weighted turnovers Tᵢ.
pub fn analyze(
    corr: &CorrelationMatrix,
    weighted: &[f64],
    input: InputDigest,
) -> Result<TurnoverReport, SpectralError> {
    let basis = signed_basis(corr, input.degeneracy_tolerance)?;

    let t_full = spectral_turnover_full(&basis, weighted)?;
    let large = spectral_turnover_large_n(&basis, weighted)?;
    let rs = rho_star(&basis);
    let rp = rho_prime(&corr.reflect(basis.signs()))?;
    let factored = rho_star_factored(&basis, corr)?;
    let t2 = turnover_t2(rs.value, weighted)?;
    let t_exact_b = match calibrate_exact_b(&basis) {
        Ok(cal) => Some(cal.turnover(&basis, weighted)?),
        Err(SpectralError::NotCalibratable { .. }) => None,
        Err(e) => return Err(e),
    };

    let mut warnings = rs.warnings.clone();
    let min = basis.decomposition().min_eigenvalue();
    if min <= 0.0 {
        warnings.push(Warning::NonPositiveEigenvalues { min });
    }

    Ok(TurnoverReport {
        T_full: t_full,
        T_large_n: large.value,
        T_t2: t2,
        T_naive: weighted.iter().sum(),
        T_exact_b: t_exact_b,
        rho_star: rs.value,
        rho_prime: rp.rho_prime,
        psi_star: rp.psi_star,
        rho_bar: rp.rho_bar,
        rho_one: factored.rho_one,
        rho_star_factored: factored.factored_value,
        rho_max: rs.value.max(rp.rho_prime),
        p1_share: p1_share(&basis, weighted)?,
        top_eigenvalue: basis.eigenvalues()[0],
        top_gap: basis.decomposition().top_gap(),
        full_model_note: FULL_MODEL_NOTE,
        warnings,
        input,
    })
}
