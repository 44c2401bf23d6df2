//! Loading alpha and factor panels, sample moments, and factor residualization.

mod moments;
mod panel;
mod residualize;

pub use moments::{
    load_matrix_csv, sample_moments, write_matrix_csv, CorrelationMatrix, CovarianceMatrix,
    EstimationMode, PsdStatus,
};
#[cfg(test)]
pub(crate) use moments::default_ids;
pub use panel::{load_panel, write_panel, LoadOptions, TimeOrder, TimeSeriesPanel};
pub use residualize::{ols_residualize, InterceptPolicy};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    /// Malformed CSV. `row` is the 1-based file line, `column` the 1-based field.
    #[error("CSV parse error at row {row}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Csv {
        row: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("series with fewer than {min} observations: {}", ids.join(", "))]
    RejectedSeries { ids: Vec<String>, min: usize },

    #[error("series {id:?} has zero variance; correlation is undefined (prune it first)")]
    DegenerateSeries { id: String },

    #[error("need at least {needed} fully observed rows, found {found}")]
    InsufficientRows { needed: usize, found: usize },

    #[error("series {first:?} and {second:?} share only {found} observations (need 2)")]
    PairCoverage {
        first: String,
        second: String,
        found: usize,
    },

    #[error("regression for {id:?} has {found} usable rows, needs {needed}")]
    RegressionCoverage {
        id: String,
        needed: usize,
        found: usize,
    },

    #[error("factors are collinear on the rows used for {id:?}")]
    CollinearFactors { id: String },

    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("I/O error: {0}")]
    Io(String),
}
