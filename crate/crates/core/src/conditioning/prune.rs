use crate::ingest::CorrelationMatrix;

use super::ConditioningError;

/// Drops near-duplicate alphas: scanning in ascending index order, index i is
/// kept unless some already-kept k has |Ψₖᵢ| > `bound`.
///
/// Returns the kept indices and Ψ restricted to them. Index 0 is always kept.
pub fn prune_redundant(
    corr: &CorrelationMatrix,
    bound: f64,
) -> Result<(Vec<usize>, CorrelationMatrix), ConditioningError> {
    if !(bound > 0.0 && bound < 1.0) {
        return Err(ConditioningError::InvalidBound(bound));
    }
    let psi = corr.entries();
    let mut kept: Vec<usize> = Vec::with_capacity(corr.dim());
    for i in 0..corr.dim() {
        if kept.iter().all(|&k| psi[(k, i)].abs() <= bound) {
            kept.push(i);
        }
    }
    let pruned = corr.select(&kept);
    Ok((kept, pruned))
}
