use super::{eigendecompose, ConditioningError, SymmetricInput};

/// R = I·√(wᵀCw), evaluated in the eigenbasis as I·√(Σₐ λₐ w̃ₐ²) with w̃ = Uᵀw.
///
/// A covariance with a negative eigenvalue (beyond rounding) is refused: the
/// quadratic form is not a variance there.
pub fn portfolio_volatility<M: SymmetricInput + ?Sized>(
    cov: &M,
    weights: &[f64],
    investment: f64,
) -> Result<f64, ConditioningError> {
    let n = cov.entries().nrows();
    if weights.len() != n {
        return Err(ConditioningError::DimensionMismatch {
            expected: n,
            found: weights.len(),
        });
    }
    if !(investment.is_finite() && investment >= 0.0) {
        return Err(ConditioningError::InvalidInvestment(investment));
    }
    let dec = eigendecompose(cov)?;
    let scale = dec
        .eigenvalues()
        .iter()
        .fold(0.0_f64, |m, l| m.max(l.abs()))
        .max(f64::MIN_POSITIVE);
    let min = dec.min_eigenvalue();
    if min < -1e-12 * n as f64 * scale {
        return Err(ConditioningError::IllDefinedVolatility {
            min_eigenvalue: min,
        });
    }
    let u = dec.eigenvectors();
    let quad: f64 = dec
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(a, &l)| {
            let wt: f64 = (0..n).map(|i| u[(i, a)] * weights[i]).sum();
            l * wt * wt
        })
        .sum();
    Ok(investment * quad.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn unit_case() {
        let c = DMatrix::<f64>::identity(4, 4);
        let r = portfolio_volatility(&c, &[1.0, 0.0, 0.0, 0.0], 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_arithmetic() {
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let r = portfolio_volatility(&c, &[0.5, 0.5], 100.0).unwrap();
        assert!((r - 100.0 * 3.25_f64.sqrt()).abs() < 1e-12);
        assert!((r - 180.277_563_773_199_46).abs() < 1e-9);
    }

    #[test]
    fn matches_direct_quadratic_form() {
        let c: DMatrix<f64> = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 0.5]);
        let w: DVector<f64> = DVector::from_vec(vec![0.2, -0.5, 0.3]);
        let direct = (w.transpose() * &c * &w)[(0, 0)].sqrt() * 7.0;
        let r = portfolio_volatility(&c, w.as_slice(), 7.0).unwrap();
        assert!((r - direct).abs() < 1e-12);
    }

    #[test]
    fn non_psd_is_refused() {
        let psi = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
        let dec = eigendecompose(&psi).unwrap();
        let negative: Vec<f64> = dec.eigenvectors().column(2).iter().copied().collect();
        assert!((dec.eigenvalues()[2] + 0.8).abs() < 1e-12);
        assert!(matches!(
            portfolio_volatility(&psi, &negative, 1.0),
            Err(ConditioningError::IllDefinedVolatility { .. })
        ));
    }
}
