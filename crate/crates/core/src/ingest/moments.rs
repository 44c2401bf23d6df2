//! Sample covariance and correlation with explicit missing-data policies.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{IngestError, TimeSeriesPanel};

/// How N/As are handled when estimating second moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMode {
    /// Use only timestamps where every series is observed.
    #[default]
    CompleteCases,
    /// Each pair uses the timestamps where both series are observed.
    PairwiseComplete,
}

/// Whether a correlation matrix is known to be positive definite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsdStatus {
    VerifiedPd,
    VerifiedNotPsd,
    Unverified,
}

/// Sample covariance C with Cᵢⱼ = σᵢσⱼΨᵢⱼ.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub(crate) ids: Vec<String>,
    pub(crate) entries: DMatrix<f64>,
    pub(crate) vols: Vec<f64>,
    pub(crate) pairwise_counts: DMatrix<usize>,
    pub(crate) mode: EstimationMode,
}

impl CovarianceMatrix {
    /// Wraps an existing covariance. Vols are read off the diagonal.
    pub fn from_entries(ids: Vec<String>, entries: DMatrix<f64>) -> Result<Self, IngestError> {
        check_square(&ids, &entries)?;
        let n = ids.len();
        let mut vols = Vec::with_capacity(n);
        for i in 0..n {
            let d = entries[(i, i)];
            if !(d.is_finite() && d > 0.0) {
                return Err(IngestError::DegenerateSeries {
                    id: ids[i].clone(),
                });
            }
            vols.push(d.sqrt());
        }
        Ok(Self {
            ids,
            entries,
            vols,
            pairwise_counts: DMatrix::zeros(n, n),
            mode: EstimationMode::CompleteCases,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
    /// σᵢ
    pub fn vols(&self) -> &[f64] {
        &self.vols
    }
    pub fn pairwise_counts(&self) -> &DMatrix<usize> {
        &self.pairwise_counts
    }
    pub fn estimation_mode(&self) -> EstimationMode {
        self.mode
    }
    pub fn dim(&self) -> usize {
        self.ids.len()
    }

    /// Replaces the entries, keeping ids and estimation metadata. Vols are re-read
    /// from the new diagonal.
    pub(crate) fn with_entries(&self, entries: DMatrix<f64>) -> Self {
        let vols = (0..self.dim()).map(|i| entries[(i, i)].sqrt()).collect();
        Self {
            ids: self.ids.clone(),
            entries,
            vols,
            pairwise_counts: self.pairwise_counts.clone(),
            mode: self.mode,
        }
    }
}

/// Sample correlation Ψ: unit diagonal, symmetric, entries in [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub(crate) ids: Vec<String>,
    pub(crate) entries: DMatrix<f64>,
    pub(crate) mode: EstimationMode,
    pub(crate) psd_status: PsdStatus,
}

impl CorrelationMatrix {
    /// Validates and wraps a correlation matrix.
    ///
    /// The diagonal must be 1 to within 1e-12 and is then set to exactly 1;
    /// off-diagonals must lie in [−1, 1] and be symmetric to within 1e-12.
    pub fn from_entries(ids: Vec<String>, mut entries: DMatrix<f64>) -> Result<Self, IngestError> {
        check_square(&ids, &entries)?;
        let n = ids.len();
        for i in 0..n {
            if (entries[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(IngestError::InvalidCorrelation(format!(
                    "diagonal entry {} of {:?} is {}",
                    i, ids[i], entries[(i, i)]
                )));
            }
            entries[(i, i)] = 1.0;
            for j in 0..i {
                let (a, b) = (entries[(i, j)], entries[(j, i)]);
                if !(a.is_finite() && b.is_finite()) || a.abs() > 1.0 || b.abs() > 1.0 {
                    return Err(IngestError::InvalidCorrelation(format!(
                        "entry ({i}, {j}) outside [-1, 1]"
                    )));
                }
                if (a - b).abs() > 1e-12 {
                    return Err(IngestError::InvalidCorrelation(format!(
                        "entry ({i}, {j}) is not symmetric"
                    )));
                }
            }
        }
        Ok(Self {
            ids,
            entries,
            mode: EstimationMode::CompleteCases,
            psd_status: PsdStatus::Unverified,
        })
    }

    /// Convenience constructor with ids `a1..aN`.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self, IngestError> {
        let ids = default_ids(entries.nrows());
        Self::from_entries(ids, entries)
    }

    /// Ψᵢⱼ = ρ for i ≠ j.
    pub fn uniform(n: usize, rho: f64) -> Result<Self, IngestError> {
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho }))
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
    pub fn estimation_mode(&self) -> EstimationMode {
        self.mode
    }
    pub fn psd_status(&self) -> PsdStatus {
        self.psd_status
    }
    pub fn dim(&self) -> usize {
        self.ids.len()
    }

    pub fn with_psd_status(mut self, status: PsdStatus) -> Self {
        self.psd_status = status;
        self
    }

    /// Restricts to the listed indices, in order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            entries: self.entries.select_rows(indices).select_columns(indices),
            mode: self.mode,
            psd_status: match self.psd_status {
                // principal submatrices of a PD matrix are PD
                PsdStatus::VerifiedPd => PsdStatus::VerifiedPd,
                _ => PsdStatus::Unverified,
            },
        }
    }

    /// ηᵢηⱼΨᵢⱼ
    pub fn reflect(&self, signs: &[f64]) -> Self {
        let entries = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            signs[i] * signs[j] * self.entries[(i, j)]
        });
        Self {
            ids: self.ids.clone(),
            entries,
            mode: self.mode,
            psd_status: self.psd_status,
        }
    }
}

fn check_square(ids: &[String], entries: &DMatrix<f64>) -> Result<(), IngestError> {
    if !entries.is_square() || entries.nrows() != ids.len() {
        return Err(IngestError::Shape(format!(
            "matrix is {}x{} with {} ids",
            entries.nrows(),
            entries.ncols(),
            ids.len()
        )));
    }
    if ids.is_empty() {
        return Err(IngestError::Shape("empty matrix".into()));
    }
    Ok(())
}

pub(crate) fn default_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("a{i}")).collect()
}

/// Centered copy of `x` over `rows` and its sum of squares.
fn center(x: &[f64], rows: &[usize]) -> (Vec<f64>, f64) {
    let mean = rows.iter().map(|&s| x[s]).sum::<f64>() / rows.len() as f64;
    let c: Vec<f64> = rows.iter().map(|&s| x[s] - mean).collect();
    let ss = dot(&c, &c);
    (c, ss)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pearson(cx: &[f64], ssx: f64, cy: &[f64], ssy: f64) -> f64 {
    (dot(cx, cy) / (ssx * ssy).sqrt()).clamp(-1.0, 1.0)
}

/// Sample covariance and correlation of the panel's series.
///
/// The divisor is (count − 1). In complete-cases mode every entry uses the
/// rows where all series are observed. In pairwise-complete mode Ψᵢⱼ is the
/// Pearson correlation over the rows where both i and j are observed, σᵢ uses
/// every observed value of series i, and Cᵢⱼ = σᵢσⱼΨᵢⱼ. The pairwise result is
/// not guaranteed to be positive semi-definite.
pub fn sample_moments(
    panel: &TimeSeriesPanel,
    mode: EstimationMode,
) -> Result<(CovarianceMatrix, CorrelationMatrix), IngestError> {
    let n = panel.n_series();
    if n < 2 {
        return Err(IngestError::Shape(format!(
            "moments need at least 2 series, got {n}"
        )));
    }
    let series: Vec<Vec<f64>> = (0..n)
        .map(|i| panel.values().row(i).iter().copied().collect())
        .collect();

    let (vols, corr, counts) = match mode {
        EstimationMode::CompleteCases => {
            let rows = panel.complete_rows();
            if rows.len() < 2 {
                return Err(IngestError::InsufficientRows {
                    needed: 2,
                    found: rows.len(),
                });
            }
            let centered: Vec<(Vec<f64>, f64)> =
                series.iter().map(|x| center(x, &rows)).collect();
            let vols = vols_from(panel, &centered, |_| rows.len())?;
            let corr = fill_symmetric(n, |i, j| {
                let (cx, ssx) = &centered[i];
                let (cy, ssy) = &centered[j];
                Ok(pearson(cx, *ssx, cy, *ssy))
            })?;
            (vols, corr, DMatrix::from_element(n, n, rows.len()))
        }
        EstimationMode::PairwiseComplete => {
            let observed: Vec<Vec<usize>> = (0..n)
                .map(|i| {
                    (0..panel.n_times())
                        .filter(|&s| panel.is_observed(i, s))
                        .collect()
                })
                .collect();
            let centered: Vec<(Vec<f64>, f64)> = series
                .iter()
                .zip(&observed)
                .map(|(x, rows)| center(x, rows))
                .collect();
            let vols = vols_from(panel, &centered, |i| observed[i].len())?;
            let joint_rows = |i: usize, j: usize| -> Vec<usize> {
                (0..panel.n_times())
                    .filter(|&s| panel.is_observed(i, s) && panel.is_observed(j, s))
                    .collect()
            };
            let corr = fill_symmetric(n, |i, j| {
                let rows = joint_rows(i, j);
                if rows.len() < 2 {
                    return Err(IngestError::PairCoverage {
                        first: panel.ids()[i].clone(),
                        second: panel.ids()[j].clone(),
                        found: rows.len(),
                    });
                }
                let (cx, ssx) = center(&series[i], &rows);
                let (cy, ssy) = center(&series[j], &rows);
                if ssx == 0.0 || ssy == 0.0 {
                    let id = if ssx == 0.0 { i } else { j };
                    return Err(IngestError::DegenerateSeries {
                        id: panel.ids()[id].clone(),
                    });
                }
                Ok(pearson(&cx, ssx, &cy, ssy))
            })?;
            let counts = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    observed[i].len()
                } else {
                    joint_rows(i, j).len()
                }
            });
            (vols, corr, counts)
        }
    };

    let cov = DMatrix::from_fn(n, n, |i, j| vols[i] * vols[j] * corr[(i, j)]);
    let ids = panel.ids().to_vec();
    Ok((
        CovarianceMatrix {
            ids: ids.clone(),
            entries: cov,
            vols,
            pairwise_counts: counts,
            mode,
        },
        CorrelationMatrix {
            ids,
            entries: corr,
            mode,
            psd_status: PsdStatus::Unverified,
        },
    ))
}

fn vols_from(
    panel: &TimeSeriesPanel,
    centered: &[(Vec<f64>, f64)],
    count: impl Fn(usize) -> usize,
) -> Result<Vec<f64>, IngestError> {
    centered
        .iter()
        .enumerate()
        .map(|(i, (_, ss))| {
            if *ss == 0.0 {
                Err(IngestError::DegenerateSeries {
                    id: panel.ids()[i].clone(),
                })
            } else {
                Ok((ss / (count(i) - 1) as f64).sqrt())
            }
        })
        .collect()
}

/// Evaluates the strict upper triangle in parallel and mirrors it; the
/// diagonal is exactly 1.
fn fill_symmetric<F>(n: usize, entry: F) -> Result<DMatrix<f64>, IngestError>
where
    F: Fn(usize, usize) -> Result<f64, IngestError> + Sync,
{
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| entry(i, j)).collect())
        .collect::<Result<_, _>>()?;
    let mut m = DMatrix::identity(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let j = i + 1 + k;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Reads a square matrix CSV: a header of ids, then N rows of N numbers.
pub fn load_matrix_csv<R: Read>(source: R) -> Result<(Vec<String>, DMatrix<f64>), IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let ids: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::Csv {
            row: 0,
            column: None,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_owned)
        .collect();
    let n = ids.len();
    let mut data = Vec::with_capacity(n * n);
    let mut nrows = 0;
    for (r, record) in reader.records().enumerate() {
        let row = r + 2;
        let record = record.map_err(|e| IngestError::Csv {
            row,
            column: None,
            message: e.to_string(),
        })?;
        if record.len() != n {
            return Err(IngestError::Csv {
                row,
                column: None,
                message: format!("expected {n} fields, found {}", record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| IngestError::Csv {
                row,
                column: Some(c + 1),
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            data.push(v);
        }
        nrows += 1;
    }
    if nrows != n {
        return Err(IngestError::Shape(format!(
            "matrix has {n} columns but {nrows} rows"
        )));
    }
    Ok((ids, DMatrix::from_row_slice(n, n, &data)))
}

/// Writes a square matrix as CSV with a header of ids.
pub fn write_matrix_csv<W: Write>(
    ids: &[String],
    entries: &DMatrix<f64>,
    sink: W,
) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| IngestError::Io(e.to_string());
    writer.write_record(ids).map_err(io)?;
    for i in 0..entries.nrows() {
        let row: Vec<String> = entries.row(i).iter().map(|v| format!("{v}")).collect();
        writer.write_record(&row).map_err(io)?;
    }
    writer.flush().map_err(|e| IngestError::Io(e.to_string()))?;
    Ok(())
}
