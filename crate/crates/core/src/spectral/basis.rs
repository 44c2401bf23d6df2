use nalgebra::DMatrix;

use super::DEFAULT_DEGENERACY_TOLERANCE;
use crate::conditioning::{eigendecompose, ConditioningError, SpectralDecomposition, SymmetricInput};

/// A decomposition re-expressed in the reflected alpha basis αᵢ → ηᵢαᵢ in
/// which every component of the first eigenvector is nonnegative.
///
/// Reflections map Ṽᵢ⁽ᵖ⁾ → ηᵢṼᵢ⁽ᵖ⁾ for every p and leave the eigenvalues
/// alone. Weighted turnovers Tᵢ = τᵢ|wᵢ| are reflection invariant, so the
/// turnover models take them as-is.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedBasis {
    signs: Vec<f64>,
    decomposition: SpectralDecomposition,
    top_degenerate: bool,
    degeneracy_threshold: f64,
}

impl SignedBasis {
    /// ηᵢ ∈ {+1, −1}
    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.decomposition.eigenvalues()
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        self.decomposition.eigenvectors()
    }

    pub fn dim(&self) -> usize {
        self.decomposition.dim()
    }

    /// Whether ψ⁽¹⁾ − ψ⁽²⁾ fell below the degeneracy threshold, leaving the
    /// first principal component (and so ρ\*) ill-defined.
    pub fn top_degenerate(&self) -> bool {
        self.top_degenerate
    }

    /// Absolute top-gap threshold used for `top_degenerate`.
    pub fn degeneracy_threshold(&self) -> f64 {
        self.degeneracy_threshold
    }

    /// Ṽ⁽¹⁾, all components ≥ 0.
    pub fn first_component(&self) -> Vec<f64> {
        self.eigenvectors().column(0).iter().copied().collect()
    }

    /// Undoes the reflection, returning the decomposition this basis came from.
    pub fn unsigned(&self) -> SpectralDecomposition {
        apply_signs(&self.decomposition, &self.signs)
    }
}

/// Multiplies row i of every eigenvector by ηᵢ. Applying the same signs twice
/// is the identity.
pub fn apply_signs(decomp: &SpectralDecomposition, signs: &[f64]) -> SpectralDecomposition {
    let mut vectors = decomp.eigenvectors().clone();
    for (i, &eta) in signs.iter().enumerate() {
        if eta < 0.0 {
            let mut row = vectors.row_mut(i);
            row.neg_mut();
        }
    }
    SpectralDecomposition::from_parts(decomp.eigenvalues().to_vec(), vectors)
        .expect("reflection keeps shape and ordering")
}

/// Sign-fixes with the default degeneracy tolerance (top gap < 1e-10·N).
pub fn fix_sign_basis(decomp: SpectralDecomposition) -> SignedBasis {
    fix_sign_basis_with_tolerance(decomp, DEFAULT_DEGENERACY_TOLERANCE)
}

/// ηᵢ = −1 exactly where the first eigenvector component is negative; zero
/// components keep ηᵢ = +1. `relative_tolerance`·N is the top-gap threshold.
pub fn fix_sign_basis_with_tolerance(
    decomp: SpectralDecomposition,
    relative_tolerance: f64,
) -> SignedBasis {
    let signs: Vec<f64> = decomp
        .eigenvectors()
        .column(0)
        .iter()
        .map(|&v| if v < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let threshold = relative_tolerance * decomp.dim() as f64;
    let top_degenerate = decomp.top_gap() < threshold;
    let decomposition = apply_signs(&decomp, &signs);
    SignedBasis {
        signs,
        decomposition,
        top_degenerate,
        degeneracy_threshold: threshold,
    }
}

/// Canonical eigenvectors inside each degenerate eigenspace.
///
/// Eigenvalues closer than `relative_tolerance`·N to the first eigenvalue of
/// their run form a cluster. Within a cluster the basis is rotated so that the
/// first column is the normalised projection of (1, …, 1) onto the cluster
/// and the remaining columns are orthogonal to (1, …, 1). Clusters with a
/// negligible projection are left as the solver returned them.
pub fn align_degenerate_subspaces(
    decomp: &SpectralDecomposition,
    relative_tolerance: f64,
) -> SpectralDecomposition {
    let n = decomp.dim();
    let threshold = relative_tolerance * n as f64;
    let values = decomp.eigenvalues();
    let mut vectors = decomp.eigenvectors().clone();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[start] - values[end] <= threshold {
            end += 1;
        }
        if end - start > 1 {
            rotate_cluster(&mut vectors, start, end);
        }
        start = end;
    }
    SpectralDecomposition::from_parts(values.to_vec(), vectors)
        .expect("rotation within a cluster keeps shape and ordering")
}

fn rotate_cluster(vectors: &mut DMatrix<f64>, start: usize, end: usize) {
    let n = vectors.nrows();
    let m = end - start;
    let q = vectors.columns(start, m).clone_owned();
    // c = Qᵀ·1
    let c: Vec<f64> = (0..m).map(|j| q.column(j).sum()).collect();
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= 1e-8 * (n as f64).sqrt() {
        return;
    }
    // Householder H with H·e₁ = c/|c|, so Q·H has Q·c/|c| first and the rest
    // orthogonal to 1.
    let mut v: Vec<f64> = c.iter().map(|x| -x / norm).collect();
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let mut h = DMatrix::<f64>::identity(m, m);
    if vv > 0.0 {
        for i in 0..m {
            for j in 0..m {
                h[(i, j)] -= 2.0 * v[i] * v[j] / vv;
            }
        }
    }
    let mut rotated = q * h;
    for mut col in rotated.column_iter_mut().skip(1) {
        let pivot = col.iamax();
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
    vectors.columns_mut(start, m).copy_from(&rotated);
}

/// Eigendecomposition, degenerate-subspace alignment and sign fixing in one
/// step, all at the same relative tolerance.
pub fn signed_basis<M: SymmetricInput + ?Sized>(
    matrix: &M,
    relative_tolerance: f64,
) -> Result<SignedBasis, ConditioningError> {
    let decomp = eigendecompose(matrix)?;
    Ok(fix_sign_basis_with_tolerance(
        align_degenerate_subspaces(&decomp, relative_tolerance),
        relative_tolerance,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(c: f64, s: f64) -> SpectralDecomposition {
        // columns (c, s) and (−s, c)
        let v = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        SpectralDecomposition::from_parts(vec![1.6, 0.4], v).unwrap()
    }

    #[test]
    fn global_flip() {
        let b = fix_sign_basis(rotation(-0.6, -0.8));
        assert_eq!(b.signs(), &[-1.0, -1.0]);
        assert_eq!(b.first_component(), vec![0.6, 0.8]);
        // second column (0.8, −0.6) is negated too
        assert_eq!(b.eigenvectors()[(0, 1)], -0.8);
        assert_eq!(b.eigenvectors()[(1, 1)], 0.6);
    }

    #[test]
    fn componentwise_flip() {
        let b = fix_sign_basis(rotation(0.6, -0.8));
        assert_eq!(b.signs(), &[1.0, -1.0]);
        assert_eq!(b.first_component(), vec![0.6, 0.8]);
        // column 2 was (0.8, 0.6); only row 2 changes
        assert_eq!(b.eigenvectors()[(0, 1)], 0.8);
        assert_eq!(b.eigenvectors()[(1, 1)], -0.6);
        assert_eq!(b.eigenvalues(), &[1.6, 0.4]);
    }

    #[test]
    fn nonnegative_input_is_untouched() {
        let d = rotation(0.6, 0.8);
        let b = fix_sign_basis(d.clone());
        assert_eq!(b.signs(), &[1.0, 1.0]);
        assert_eq!(b.decomposition(), &d);
    }

    #[test]
    fn zero_component_keeps_positive_sign() {
        let d = SpectralDecomposition::from_parts(
            vec![2.0, 1.0],
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(fix_sign_basis(d).signs(), &[1.0, 1.0]);
    }

    #[test]
    fn signs_are_an_involution() {
        let d = rotation(0.6, -0.8);
        let b = fix_sign_basis(d.clone());
        assert_eq!(b.unsigned(), d);
        assert_eq!(apply_signs(&apply_signs(&d, b.signs()), b.signs()), d);
    }

    #[test]
    fn degeneracy_flag() {
        let d = SpectralDecomposition::from_parts(vec![1.0, 1.0], DMatrix::identity(2, 2)).unwrap();
        assert!(fix_sign_basis(d).top_degenerate());
        assert!(!fix_sign_basis(rotation(0.6, 0.8)).top_degenerate());
    }

    #[test]
    fn identity_is_aligned_with_the_uniform_vector() {
        let b = signed_basis(&DMatrix::<f64>::identity(4, 4), DEFAULT_DEGENERACY_TOLERANCE).unwrap();
        for v in b.first_component() {
            assert!((v - 0.5).abs() < 1e-15);
        }
        for p in 1..4 {
            assert!(b.eigenvectors().column(p).sum().abs() < 1e-15);
        }
        assert!(b.decomposition().orthonormality_residual() < 1e-15);
        assert!(b.top_degenerate());
    }

    #[test]
    fn alignment_leaves_simple_spectra_alone() {
        let d = rotation(0.6, 0.8);
        assert_eq!(align_degenerate_subspaces(&d, DEFAULT_DEGENERACY_TOLERANCE), d);
    }
}
