//! Alpha-stream panels: N series observed over M+1 timestamps with an N/A mask.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::IngestError;

/// Row ordering of the timestamps stored in a panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeOrder {
    /// Column 0 of `values` is t₀, the most recent observation.
    #[default]
    MostRecentFirst,
    /// Column 0 is the oldest observation.
    OldestFirst,
}

/// Options for [`load_panel`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Order of the data rows in the source file. Panels are always stored
    /// most-recent-first, so `OldestFirst` sources are reversed on load.
    pub source_order: TimeOrder,
    /// Minimum number of observed values per series.
    pub min_observations: usize,
    /// Minimum number of series. Alpha panels need 2; factor panels may hold 1.
    pub min_series: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            source_order: TimeOrder::MostRecentFirst,
            min_observations: 2,
            min_series: 2,
        }
    }
}

/// N return series over M+1 timestamps.
///
/// `values` is N×(M+1): row i is series i, column s is timestamp t_s. Missing
/// cells hold `NaN` in `values` and `false` in `observed`. Every series has at
/// least two observations. Alpha panels have N ≥ 2 (checked on load and by the
/// moment estimators); factor panels may hold a single series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    ids: Vec<String>,
    values: DMatrix<f64>,
    observed: DMatrix<bool>,
    time_order: TimeOrder,
}

impl TimeSeriesPanel {
    /// Builds a panel from a dense matrix with `NaN` marking N/As.
    pub fn from_values(ids: Vec<String>, values: DMatrix<f64>) -> Result<Self, IngestError> {
        let observed = values.map(|v| !v.is_nan());
        Self::new(ids, values, observed)
    }

    /// Builds a panel from per-series rows. Every row must have the same length.
    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, IngestError> {
        let n = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != t) {
            return Err(IngestError::Shape(
                "series rows have differing lengths".into(),
            ));
        }
        let values = DMatrix::from_fn(n, t, |i, s| rows[i][s]);
        Self::from_values(ids, values)
    }

    /// Builds a panel with an explicit mask. Masked-out cells are stored as `NaN`.
    pub fn new(
        ids: Vec<String>,
        mut values: DMatrix<f64>,
        observed: DMatrix<bool>,
    ) -> Result<Self, IngestError> {
        if values.shape() != observed.shape() {
            return Err(IngestError::Shape(format!(
                "values {:?} and mask {:?} differ in shape",
                values.shape(),
                observed.shape()
            )));
        }
        if ids.len() != values.nrows() {
            return Err(IngestError::Shape(format!(
                "{} ids for {} series",
                ids.len(),
                values.nrows()
            )));
        }
        if ids.is_empty() {
            return Err(IngestError::Shape("a panel needs at least one series".into()));
        }
        for (v, &o) in values.iter_mut().zip(observed.iter()) {
            if !o {
                *v = f64::NAN;
            } else if !v.is_finite() {
                return Err(IngestError::Shape("observed cell is not finite".into()));
            }
        }
        let panel = Self {
            ids,
            values,
            observed,
            time_order: TimeOrder::MostRecentFirst,
        };
        panel.check_min_observations(2)?;
        Ok(panel)
    }

    fn check_min_observations(&self, min: usize) -> Result<(), IngestError> {
        let rejected: Vec<String> = (0..self.n_series())
            .filter(|&i| self.observed_count(i) < min)
            .map(|i| self.ids[i].clone())
            .collect();
        if rejected.is_empty() {
            Ok(())
        } else {
            Err(IngestError::RejectedSeries { ids: rejected, min })
        }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// N
    pub fn n_series(&self) -> usize {
        self.values.nrows()
    }

    /// M+1
    pub fn n_times(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn observed(&self) -> &DMatrix<bool> {
        &self.observed
    }

    pub fn time_order(&self) -> TimeOrder {
        self.time_order
    }

    pub fn is_observed(&self, series: usize, time: usize) -> bool {
        self.observed[(series, time)]
    }

    pub fn observed_count(&self, series: usize) -> usize {
        self.observed.row(series).iter().filter(|&&o| o).count()
    }

    /// True when no cell is N/A.
    pub fn is_complete(&self) -> bool {
        self.observed.iter().all(|&o| o)
    }

    /// Time indices at which every series is observed.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.n_times())
            .filter(|&s| self.observed.column(s).iter().all(|&o| o))
            .collect()
    }

    /// Returns a panel holding only the listed series, in the listed order.
    pub fn select(&self, indices: &[usize]) -> Result<Self, IngestError> {
        let ids = indices.iter().map(|&i| self.ids[i].clone()).collect();
        let values = self.values.select_rows(indices);
        let observed = self.observed.select_rows(indices);
        Self::new(ids, values, observed)
    }

    /// Sample variance (n−1 divisor) of Σᵢ cᵢ αᵢ over the complete rows.
    pub fn combination_variance(&self, coefficients: &[f64]) -> Result<f64, IngestError> {
        if coefficients.len() != self.n_series() {
            return Err(IngestError::Shape(format!(
                "{} coefficients for {} series",
                coefficients.len(),
                self.n_series()
            )));
        }
        let rows = self.complete_rows();
        if rows.len() < 2 {
            return Err(IngestError::InsufficientRows {
                needed: 2,
                found: rows.len(),
            });
        }
        let combo: Vec<f64> = rows
            .iter()
            .map(|&s| {
                coefficients
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * self.values[(i, s)])
                    .sum()
            })
            .collect();
        let mean = combo.iter().sum::<f64>() / combo.len() as f64;
        let ss: f64 = combo.iter().map(|v| (v - mean) * (v - mean)).sum();
        Ok(ss / (combo.len() - 1) as f64)
    }
}

/// Reads a panel from CSV: a header of series ids, then one row per timestamp.
/// Empty cells are N/As.
pub fn load_panel<R: Read>(source: R, options: &LoadOptions) -> Result<TimeSeriesPanel, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
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
    if ids.iter().any(String::is_empty) {
        return Err(IngestError::Csv {
            row: 0,
            column: None,
            message: "empty series id in header".into(),
        });
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        // Row numbers are 1-based file lines after the header.
        let row = r + 2;
        let record = record.map_err(|e| IngestError::Csv {
            row,
            column: None,
            message: e.to_string(),
        })?;
        if record.len() != ids.len() {
            return Err(IngestError::Csv {
                row,
                column: None,
                message: format!("expected {} fields, found {}", ids.len(), record.len()),
            });
        }
        let mut parsed = Vec::with_capacity(ids.len());
        for (c, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                parsed.push(f64::NAN);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| IngestError::Csv {
                row,
                column: Some(c + 1),
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(IngestError::Csv {
                    row,
                    column: Some(c + 1),
                    message: format!("non-finite value {cell:?}"),
                });
            }
            parsed.push(v);
        }
        rows.push(parsed);
    }
    if options.source_order == TimeOrder::OldestFirst {
        rows.reverse();
    }

    let n = ids.len();
    let values = DMatrix::from_fn(n, rows.len(), |i, s| rows[s][i]);
    let observed = values.map(|v| !v.is_nan());
    let panel = TimeSeriesPanel {
        ids,
        values,
        observed,
        time_order: TimeOrder::MostRecentFirst,
    };
    if panel.n_series() < options.min_series.max(1) {
        return Err(IngestError::Shape(format!(
            "a panel needs at least {} series, got {}",
            options.min_series.max(1),
            panel.n_series()
        )));
    }
    panel.check_min_observations(options.min_observations.max(2))?;
    Ok(panel)
}

/// Writes a panel in the same CSV layout [`load_panel`] reads (most recent first).
pub fn write_panel<W: Write>(panel: &TimeSeriesPanel, sink: W) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| IngestError::Io(e.to_string());
    writer.write_record(panel.ids()).map_err(io)?;
    for s in 0..panel.n_times() {
        let record: Vec<String> = (0..panel.n_series())
            .map(|i| {
                if panel.is_observed(i, s) {
                    format!("{}", panel.values()[(i, s)])
                } else {
                    String::new()
                }
            })
            .collect();
        writer.write_record(&record).map_err(io)?;
    }
    writer.flush().map_err(|e| IngestError::Io(e.to_string()))?;
    Ok(())
}
