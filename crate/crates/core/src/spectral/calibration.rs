use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::model::projected_turnovers;
use super::{SignedBasis, SpectralError};

/// Largest accepted 2-norm condition estimate of A = |Ṽ|.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Coefficients B⁽ᵖ⁾ of the model T = Σₚ B⁽ᵖ⁾|T̃⁽ᵖ⁾| fixed so that a portfolio
/// holding a single alpha ℓ reports exactly τℓ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactCalibration {
    pub coefficients: Vec<f64>,
    #[serde(skip)]
    pub abs_eigvec_matrix: DMatrix<f64>,
    /// σ_max/σ_min of A.
    pub condition_estimate: f64,
    /// Some B⁽ᵖ⁾ < 0, which can make the model negative for some inputs.
    pub has_negative: bool,
}

impl ExactCalibration {
    /// Σₚ B⁽ᵖ⁾|Σᵢ Ṽᵢ⁽ᵖ⁾Tᵢ|
    pub fn turnover(&self, basis: &SignedBasis, weighted: &[f64]) -> Result<f64, SpectralError> {
        if basis.dim() != self.coefficients.len() {
            return Err(SpectralError::DimensionMismatch {
                expected: self.coefficients.len(),
                found: basis.dim(),
            });
        }
        let projected = projected_turnovers(basis, weighted)?;
        Ok(self
            .coefficients
            .iter()
            .zip(&projected)
            .map(|(b, t)| b * t.abs())
            .sum())
    }

    /// max |A·B − 1|
    pub fn residual(&self) -> f64 {
        let b = DVector::from_column_slice(&self.coefficients);
        (&self.abs_eigvec_matrix * b).iter().fold(0.0_f64, |m, v| m.max((v - 1.0).abs()))
    }
}

/// Solves Σₚ B⁽ᵖ⁾|Ṽᵢ⁽ᵖ⁾| = 1 for every i.
pub fn calibrate_exact_b(basis: &SignedBasis) -> Result<ExactCalibration, SpectralError> {
    let a = basis.eigenvectors().map(f64::abs);
    let sv = a.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(SpectralError::NotCalibratable { condition });
    }
    let ones = DVector::from_element(a.nrows(), 1.0);
    let b = a
        .clone()
        .lu()
        .solve(&ones)
        .ok_or(SpectralError::NotCalibratable { condition })?;
    let coefficients: Vec<f64> = b.iter().copied().collect();
    Ok(ExactCalibration {
        has_negative: coefficients.iter().any(|&c| c < 0.0),
        coefficients,
        abs_eigvec_matrix: a,
        condition_estimate: condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioning::eigendecompose;
    use crate::ingest::CorrelationMatrix;
    use crate::spectral::fix_sign_basis;

    fn basis_of(m: DMatrix<f64>) -> SignedBasis {
        fix_sign_basis(eigendecompose(&m).unwrap())
    }

    #[test]
    fn identity_gives_unit_coefficients() {
        let b = basis_of(DMatrix::identity(4, 4));
        let cal = calibrate_exact_b(&b).unwrap();
        assert_eq!(cal.coefficients, vec![1.0; 4]);
        assert!(!cal.has_negative);
        let t = [0.1, 0.2, 0.3, 0.4];
        assert!((cal.turnover(&b, &t).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn any_two_by_two_is_singular() {
        for rho in [0.6, -0.3, 0.01] {
            let corr = CorrelationMatrix::uniform(2, rho).unwrap();
            let b = fix_sign_basis(eigendecompose(&corr).unwrap());
            assert!(matches!(
                calibrate_exact_b(&b),
                Err(SpectralError::NotCalibratable { .. })
            ));
        }
    }

    #[test]
    fn three_by_three_solves_and_recovers_single_alphas() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.2, 0.5, 1.0, 0.3, 0.2, 0.3, 1.0]);
        let b = basis_of(m);
        let cal = calibrate_exact_b(&b).unwrap();
        // independent check: A·B by explicit loops
        let v = b.eigenvectors();
        for i in 0..3 {
            let row: f64 = (0..3).map(|p| v[(i, p)].abs() * cal.coefficients[p]).sum();
            assert!((row - 1.0).abs() < 1e-8, "row {i}: {row}");
        }
        assert!(cal.residual() < 1e-8);
        for l in 0..3 {
            let tau = 0.25 + 0.1 * l as f64;
            let mut t = [0.0; 3];
            t[l] = tau;
            assert!((cal.turnover(&b, &t).unwrap() - tau).abs() < 1e-8);
        }
    }
}
