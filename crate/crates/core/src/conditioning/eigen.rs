//! Dense symmetric eigensolver: Householder tridiagonalisation followed by
//! implicit QL iterations with Wilkinson-style shifts (the EISPACK
//! tred2/tql2 pair).

use nalgebra::DMatrix;

use super::ConditioningError;
use crate::ingest::{CorrelationMatrix, CovarianceMatrix};

/// Matrices the solver and repair routines accept.
pub trait SymmetricInput {
    fn entries(&self) -> &DMatrix<f64>;
}

impl SymmetricInput for DMatrix<f64> {
    fn entries(&self) -> &DMatrix<f64> {
        self
    }
}

impl SymmetricInput for CorrelationMatrix {
    fn entries(&self) -> &DMatrix<f64> {
        CorrelationMatrix::entries(self)
    }
}

impl SymmetricInput for CovarianceMatrix {
    fn entries(&self) -> &DMatrix<f64> {
        CovarianceMatrix::entries(self)
    }
}

// Relative asymmetry accepted before averaging.
const SYMMETRY_TOLERANCE: f64 = 1e-10;
const MAX_QL_SWEEPS: usize = 64;

/// Eigenvalues in descending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    source_dim: usize,
    top_gap: f64,
    orthonormality_residual: f64,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from parts, computing the diagnostics.
    /// Eigenvalues must already be in descending order.
    pub fn from_parts(
        eigenvalues: Vec<f64>,
        eigenvectors: DMatrix<f64>,
    ) -> Result<Self, ConditioningError> {
        let n = eigenvalues.len();
        if eigenvectors.shape() != (n, n) || n == 0 {
            return Err(ConditioningError::DimensionMismatch {
                expected: n,
                found: eigenvectors.nrows(),
            });
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(ConditioningError::Unsorted);
        }
        let gram = eigenvectors.transpose() * &eigenvectors;
        let mut residual = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                residual = residual.max((gram[(i, j)] - target).abs());
            }
        }
        let top_gap = if n > 1 {
            eigenvalues[0] - eigenvalues[1]
        } else {
            f64::INFINITY
        };
        Ok(Self {
            eigenvalues,
            eigenvectors,
            source_dim: n,
            top_gap,
            orthonormality_residual: residual,
        })
    }

    /// ψ⁽¹⁾ ≥ ψ⁽²⁾ ≥ …
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column p is the unit eigenvector for `eigenvalues()[p]`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.source_dim
    }

    /// ψ⁽¹⁾ − ψ⁽²⁾; infinite for a 1×1 input.
    pub fn top_gap(&self) -> f64 {
        self.top_gap
    }

    /// max |UᵀU − 1| over all entries.
    pub fn orthonormality_residual(&self) -> f64 {
        self.orthonormality_residual
    }

    pub fn top_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.source_dim - 1]
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// U·diag(λ)·Uᵀ
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (p, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.eigenvalues[p];
        }
        &scaled * self.eigenvectors.transpose()
    }

    /// Indices of eigenvalues at or below `tolerance`. The matching
    /// combinations Σᵢ Vᵢ⁽ᵃ⁾αᵢ contribute (almost) nothing to portfolio
    /// volatility.
    pub fn degenerate_directions(&self, tolerance: f64) -> Vec<usize> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l <= tolerance)
            .map(|(p, _)| p)
            .collect()
    }
}

/// Eigendecomposition of a symmetric matrix.
///
/// The input is symmetrised by averaging; asymmetry larger than 1e-10 relative
/// to the largest entry is rejected. Eigenvalues are sorted descending with a
/// stable sort, and each eigenvector is signed so that its largest-magnitude
/// component (first one on ties) is positive, which makes the output a pure
/// function of the input.
pub fn eigendecompose<M: SymmetricInput + ?Sized>(
    matrix: &M,
) -> Result<SpectralDecomposition, ConditioningError> {
    let a = matrix.entries();
    let n = a.nrows();
    if !a.is_square() || n == 0 {
        return Err(ConditioningError::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(ConditioningError::NonFinite);
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let mut asym = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOLERANCE * scale {
        return Err(ConditioningError::Asymmetric {
            max_asymmetry: asym,
        });
    }

    // Row-major working copy of the symmetrised matrix.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut v, &mut d, &mut e);

    // tql2 rotates pairs of columns; a column-major copy keeps those contiguous.
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            z[j * n + i] = v[i * n + j];
        }
    }
    drop(v);
    ql_implicit(n, &mut d, &mut e, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| d[q].total_cmp(&d[p]));

    let eigenvalues: Vec<f64> = order.iter().map(|&p| d[p]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = &z[src * n..(src + 1) * n];
        let mut pivot = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (i, x) in col.iter().enumerate() {
            vectors[(i, dst)] = sign * x;
        }
    }
    SpectralDecomposition::from_parts(eigenvalues, vectors)
}

/// Householder reduction of the row-major symmetric matrix `v` to tridiagonal
/// form. On return `d` holds the diagonal, `e[1..]` the sub-diagonal and `v`
/// the accumulated orthogonal transformation.
fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal (d, e), rotating the column-major
/// eigenvector matrix `z` along. Eigenvalues are left unsorted in `d`.
fn ql_implicit(n: usize, d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<(), ConditioningError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_QL_SWEEPS {
                    return Err(ConditioningError::NoConvergence { index: l });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (left, right) = z.split_at_mut((i + 1) * n);
                    let zi = &mut left[i * n..];
                    let zi1 = &mut right[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
