//! Spectral turnover models and the ρ-type coefficients derived from them.
//!
//! Notation: ψ⁽ᵖ⁾ are the correlation eigenvalues (descending), Ṽ⁽ᵖ⁾ the
//! sign-fixed unit eigenvectors, Tᵢ = τᵢ|wᵢ| the weighted individual
//! turnovers and T̃⁽ᵖ⁾ = Σᵢ Ṽᵢ⁽ᵖ⁾Tᵢ their projections.

use serde::Serialize;

use super::{Flagged, SignedBasis, SpectralError, Warning};
use crate::ingest::CorrelationMatrix;

pub(crate) fn check_weighted(basis: &SignedBasis, weighted: &[f64]) -> Result<(), SpectralError> {
    if weighted.len() != basis.dim() {
        return Err(SpectralError::DimensionMismatch {
            expected: basis.dim(),
            found: weighted.len(),
        });
    }
    if let Some(i) = weighted.iter().position(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(SpectralError::InvalidTurnover {
            index: i,
            value: weighted[i],
        });
    }
    Ok(())
}

/// T̃⁽ᵖ⁾ for every p.
pub fn projected_turnovers(basis: &SignedBasis, weighted: &[f64]) -> Result<Vec<f64>, SpectralError> {
    check_weighted(basis, weighted)?;
    let v = basis.eigenvectors();
    Ok((0..basis.dim())
        .map(|p| v.column(p).iter().zip(weighted).map(|(a, t)| a * t).sum())
        .collect())
}

/// The per-p terms ψ⁽ᵖ⁾·|T̃⁽ᵖ⁾| of the full model (before the 1/√N factor).
pub fn spectral_terms(basis: &SignedBasis, weighted: &[f64]) -> Result<Vec<f64>, SpectralError> {
    let projected = projected_turnovers(basis, weighted)?;
    Ok(basis
        .eigenvalues()
        .iter()
        .zip(&projected)
        .map(|(psi, t)| psi * t.abs())
        .collect())
}

/// T = (1/√N)·Σₚ ψ⁽ᵖ⁾·|Σᵢ Ṽᵢ⁽ᵖ⁾Tᵢ|.
///
/// The normalisation 1/√Tr(Ψ) equals 1/√N for a correlation matrix. This is
/// the finite-N model; it does not return Tℓ for a single-alpha input.
pub fn spectral_turnover_full(basis: &SignedBasis, weighted: &[f64]) -> Result<f64, SpectralError> {
    let terms = spectral_terms(basis, weighted)?;
    Ok(terms.iter().sum::<f64>() / (basis.dim() as f64).sqrt())
}

/// Fraction of the full-model turnover carried by the first principal
/// component. Zero turnover gives `None`.
pub fn p1_share(basis: &SignedBasis, weighted: &[f64]) -> Result<Option<f64>, SpectralError> {
    let terms = spectral_terms(basis, weighted)?;
    let total: f64 = terms.iter().sum();
    Ok((total > 0.0).then(|| terms[0] / total))
}

fn degeneracy_warnings(basis: &SignedBasis) -> Vec<Warning> {
    let mut warnings = Vec::new();
    if basis.top_degenerate() {
        warnings.push(Warning::DegenerateTopEigenvalue {
            top_gap: basis.decomposition().top_gap(),
            threshold: basis.degeneracy_threshold(),
        });
    }
    let zeros = basis.first_component().iter().filter(|&&v| v == 0.0).count();
    if zeros > 0 {
        warnings.push(Warning::ZeroFirstComponents { count: zeros });
    }
    warnings
}

/// Large-N approximation T ≈ (ψ⁽¹⁾/√N)·Σᵢ Ṽᵢ⁽¹⁾Tᵢ.
pub fn spectral_turnover_large_n(
    basis: &SignedBasis,
    weighted: &[f64],
) -> Result<Flagged<f64>, SpectralError> {
    check_weighted(basis, weighted)?;
    let v1 = basis.eigenvectors().column(0);
    let projected: f64 = v1.iter().zip(weighted).map(|(a, t)| a * t).sum();
    let value = basis.eigenvalues()[0] / (basis.dim() as f64).sqrt() * projected;
    Ok(Flagged::new(value, degeneracy_warnings(basis)))
}

/// Turnover reduction coefficient ρ\* = ψ⁽¹⁾/(N√N)·Σᵢ Ṽᵢ⁽¹⁾.
///
/// Nonnegative by construction of the sign basis. With equal weights and equal
/// individual turnovers τ the large-N model gives T ≈ ρ\*·τ.
pub fn rho_star(basis: &SignedBasis) -> Flagged<f64> {
    let n = basis.dim() as f64;
    let sum: f64 = basis.eigenvectors().column(0).sum();
    let value = basis.eigenvalues()[0] / (n * n.sqrt()) * sum;
    Flagged::new(value, degeneracy_warnings(basis))
}

/// T ≈ ρ\*·Σᵢ Tᵢ: the large-N model with Tᵢ replaced by their average, which
/// keeps alphas with small Ṽᵢ⁽¹⁾ from dropping out.
pub fn turnover_t2(rho_star: f64, weighted: &[f64]) -> Result<f64, SpectralError> {
    if !(rho_star.is_finite() && rho_star >= 0.0) {
        return Err(SpectralError::InvalidRhoStar(rho_star));
    }
    if let Some(i) = weighted.iter().position(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(SpectralError::InvalidTurnover {
            index: i,
            value: weighted[i],
        });
    }
    Ok(rho_star * weighted.iter().sum::<f64>())
}

/// Mean-correlation proxies for ρ\*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoPrime {
    /// ψ\* = (1/N)·Σᵢⱼ Ψᵢⱼ, the least-squares eigenvalue for the uniform vector.
    pub psi_star: f64,
    /// ρ′ = ψ\*/N
    pub rho_prime: f64,
    /// ρ̄ = (ψ\* − 1)/(N − 1), the mean off-diagonal correlation.
    pub rho_bar: f64,
}

/// ψ\*, ρ′ and ρ̄ for a correlation matrix.
pub fn rho_prime(corr: &CorrelationMatrix) -> Result<RhoPrime, SpectralError> {
    let n = corr.dim();
    if n < 2 {
        return Err(SpectralError::SingleAlpha);
    }
    let nf = n as f64;
    let psi_star = row_sums(corr).iter().sum::<f64>() / nf;
    Ok(RhoPrime {
        psi_star,
        rho_prime: psi_star / nf,
        rho_bar: (psi_star - 1.0) / (nf - 1.0),
    })
}

fn row_sums(corr: &CorrelationMatrix) -> Vec<f64> {
    corr.entries().row_iter().map(|r| r.sum()).collect()
}

/// Σᵢ(Σⱼ Ψᵢⱼ − ψ)², minimised over ψ by ψ\*.
pub fn rho_prime_objective(corr: &CorrelationMatrix, psi: f64) -> f64 {
    row_sums(corr).iter().map(|s| (s - psi) * (s - psi)).sum()
}

/// |ρ\* − √(ρ⁽¹⁾ρ′)| relative to ρ\*, or absolute when ρ\* = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum FactoredGap {
    Relative(f64),
    Absolute(f64),
}

impl FactoredGap {
    pub fn value(self) -> f64 {
        match self {
            FactoredGap::Relative(v) | FactoredGap::Absolute(v) => v,
        }
    }
}

/// ρ\* ≈ √(ρ⁽¹⁾ρ′) with ρ⁽¹⁾ = ψ⁽¹⁾/N, together with the exact identity
/// ρ′ = (1/N²)·Σₚ (Σᵢ Ṽᵢ⁽ᵖ⁾)² ψ⁽ᵖ⁾ that it truncates to p = 1.
///
/// ρ′ here is taken in the sign basis, i.e. from ηᵢηⱼΨᵢⱼ, since that is the
/// matrix the sign-fixed eigenvectors diagonalise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactoredRelation {
    pub rho_star: f64,
    pub rho_one: f64,
    pub rho_prime: f64,
    pub factored_value: f64,
    pub gap: FactoredGap,
    /// Right-hand side of the exact identity.
    pub spectral_rho_prime: f64,
    /// |ρ′ − spectral_rho_prime|
    pub identity_residual: f64,
}

pub fn rho_star_factored(
    basis: &SignedBasis,
    corr: &CorrelationMatrix,
) -> Result<FactoredRelation, SpectralError> {
    let n = basis.dim();
    if corr.dim() != n {
        return Err(SpectralError::DimensionMismatch {
            expected: n,
            found: corr.dim(),
        });
    }
    let nf = n as f64;
    let rp = rho_prime(&corr.reflect(basis.signs()))?;
    let rs = rho_star(basis).value;
    let rho_one = basis.eigenvalues()[0] / nf;
    let factored_value = (rho_one * rp.rho_prime).max(0.0).sqrt();
    let diff = (rs - factored_value).abs();
    let gap = if rs > 0.0 {
        FactoredGap::Relative(diff / rs)
    } else {
        FactoredGap::Absolute(diff)
    };

    let v = basis.eigenvectors();
    let spectral_rho_prime = basis
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(p, psi)| {
            let s = v.column(p).sum();
            s * s * psi
        })
        .sum::<f64>()
        / (nf * nf);

    Ok(FactoredRelation {
        rho_star: rs,
        rho_one,
        rho_prime: rp.rho_prime,
        factored_value,
        gap,
        spectral_rho_prime,
        identity_residual: (rp.rho_prime - spectral_rho_prime).abs(),
    })
}
