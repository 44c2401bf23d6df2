//! Eigenvalue-floor repair that keeps the diagonal.
//!
//! With C = U·diag(λ)·Uᵀ, floor the spectrum at λ\* > 0,
//! λ̃ₐ = max(λₐ, λ\*), then rescale rows and columns by
//! zᵢ = Cᵢᵢ / Σⱼ Uᵢⱼ² λ̃ⱼ so that
//!
//! C̃ = √Z · U · diag(λ̃) · Uᵀ · √Z
//!
//! is positive definite with C̃ᵢᵢ = Cᵢᵢ. No alphas are removed. Applied to a
//! correlation matrix the unit diagonal survives.

use nalgebra::DMatrix;

use super::{eigendecompose, ConditioningError};
use crate::ingest::{CorrelationMatrix, CovarianceMatrix, PsdStatus};

/// Repairs the raw entries of a symmetric matrix with a positive diagonal.
pub fn rj_repair_entries(c: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>, ConditioningError> {
    if !(floor.is_finite() && floor > 0.0) {
        return Err(ConditioningError::InvalidFloor(floor));
    }
    let n = c.nrows();
    for i in 0..n.min(c.ncols()) {
        let value = c[(i, i)];
        if !(value > 0.0) {
            return Err(ConditioningError::InvalidDiagonal { index: i, value });
        }
    }
    let dec = eigendecompose(c)?;
    let u = dec.eigenvectors();
    let floored: Vec<f64> = dec.eigenvalues().iter().map(|&l| l.max(floor)).collect();

    let sqrt_z: Vec<f64> = (0..n)
        .map(|i| {
            let denom: f64 = (0..n).map(|j| u[(i, j)] * u[(i, j)] * floored[j]).sum();
            assert!(denom > 0.0, "floored spectrum gives a zero row norm");
            (c[(i, i)] / denom).sqrt()
        })
        .collect();

    // Ũ = √Z · U · √Λ̃
    let mut scaled = u.clone();
    for j in 0..n {
        let s = floored[j].sqrt();
        for i in 0..n {
            scaled[(i, j)] *= sqrt_z[i] * s;
        }
    }
    let product = &scaled * scaled.transpose();

    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = c[(i, i)];
        for j in (i + 1)..n {
            let v = 0.5 * (product[(i, j)] + product[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Cholesky test for positive definiteness.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.is_square() && m.clone().cholesky().is_some()
}

/// Repair that returns the same kind of matrix it was given.
pub trait RjRepair: Sized {
    fn rj_repair(&self, floor: f64) -> Result<Self, ConditioningError>;
}

impl RjRepair for CovarianceMatrix {
    fn rj_repair(&self, floor: f64) -> Result<Self, ConditioningError> {
        let entries = rj_repair_entries(self.entries(), floor)?;
        Ok(self.with_entries(entries))
    }
}

impl RjRepair for CorrelationMatrix {
    /// The result has an exact unit diagonal and `psd_status` verified by a
    /// Cholesky factorisation.
    fn rj_repair(&self, floor: f64) -> Result<Self, ConditioningError> {
        let mut entries = rj_repair_entries(self.entries(), floor)?;
        for v in entries.iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
        if !is_positive_definite(&entries) {
            return Err(ConditioningError::RepairVerification);
        }
        Ok(CorrelationMatrix {
            ids: self.ids.clone(),
            entries,
            mode: self.mode,
            psd_status: PsdStatus::VerifiedPd,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nonpsd() -> CorrelationMatrix {
        CorrelationMatrix::from_matrix(DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0],
        ))
        .unwrap()
    }

    #[test]
    fn nonpsd_example_has_closed_form_spectrum() {
        // Ψ = 1 + 0.9·S, S zero-diagonal with S₁₂ = S₂₃ = 1, S₁₃ = −1.
        // det(S − t) = −t³ + 3t + 2·S₁₂S₂₃S₁₃ gives t³ − 3t + 2 = (t − 1)²(t + 2),
        // so Ψ has 1 + 0.9·{1, 1, −2} = {1.9, 1.9, −0.8}.
        let dec = eigendecompose(&nonpsd()).unwrap();
        let want = [1.9, 1.9, -0.8];
        for (g, w) in dec.eigenvalues().iter().zip(want) {
            assert!((g - w).abs() < 1e-14, "{g} vs {w}");
        }
    }

    #[test]
    fn repair_makes_nonpsd_correlation_pd() {
        let fixed = nonpsd().rj_repair(1e-4).unwrap();
        assert_eq!(fixed.psd_status(), PsdStatus::VerifiedPd);
        for i in 0..3 {
            assert!((fixed.entries()[(i, i)] - 1.0).abs() <= 1e-12);
        }
        let dec = eigendecompose(&fixed).unwrap();
        assert!(dec.min_eigenvalue() > 0.0);
    }

    #[test]
    fn pd_input_above_floor_is_unchanged() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.2, 0.5, 1.0, 0.3, 0.2, 0.3, 1.0]);
        let corr = CorrelationMatrix::from_matrix(m.clone()).unwrap();
        let fixed = corr.rj_repair(1e-6).unwrap();
        assert!((fixed.entries() - &m).amax() <= 1e-10);
    }

    #[test]
    fn covariance_diagonal_is_preserved() {
        let c = DMatrix::from_row_slice(3, 3, &[4.0, 5.0, 0.0, 5.0, 9.0, 6.0, 0.0, 6.0, 1.0]);
        let cov = CovarianceMatrix::from_entries(crate::ingest::default_ids(3), c.clone()).unwrap();
        let fixed = cov.rj_repair(1e-3).unwrap();
        for i in 0..3 {
            assert!((fixed.entries()[(i, i)] - c[(i, i)]).abs() <= 1e-12 * c[(i, i)]);
            assert!((fixed.vols()[i] - c[(i, i)].sqrt()).abs() <= 1e-12);
        }
        assert!(is_positive_definite(fixed.entries()));
    }

    #[test]
    fn rejects_bad_floor_and_diagonal() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            rj_repair_entries(&c, 1e-3),
            Err(ConditioningError::InvalidDiagonal { index: 1, .. })
        ));
        let c = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(
            rj_repair_entries(&c, 0.0),
            Err(ConditioningError::InvalidFloor(_))
        ));
    }
}
