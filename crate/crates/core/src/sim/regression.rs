use serde::{Serialize, Serializer};

use super::SimError;

/// F statistic of a fit; an exact fit has no finite F.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FStatistic {
    Value(f64),
    /// RSS = 0 up to rounding. Serialized as "inf".
    Infinite,
    /// Fewer than two points or an all-zero response.
    NotAvailable,
}

impl FStatistic {
    /// `f64::INFINITY` for the sentinel, `None` when not available.
    pub fn as_f64(self) -> Option<f64> {
        match self {
            FStatistic::Value(v) => Some(v),
            FStatistic::Infinite => Some(f64::INFINITY),
            FStatistic::NotAvailable => None,
        }
    }
}

impl std::fmt::Display for FStatistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FStatistic::Value(v) => write!(f, "{v}"),
            FStatistic::Infinite => f.write_str("inf"),
            FStatistic::NotAvailable => f.write_str("NA"),
        }
    }
}

impl Serialize for FStatistic {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            FStatistic::Value(v) => s.serialize_f64(*v),
            FStatistic::Infinite => s.serialize_str("inf"),
            FStatistic::NotAvailable => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regression {
    pub slope: f64,
    pub f_statistic: FStatistic,
    pub residuals: Vec<f64>,
    pub rss: f64,
}

/// Least squares of y on x through the origin.
///
/// slope = Σxy/Σx², F = Σŷ² / (RSS/(n − 1)). A single point gives its own
/// slope with F not available.
pub fn no_intercept_regression(x: &[f64], y: &[f64]) -> Result<Regression, SimError> {
    let n = x.len();
    if n == 0 || y.len() != n {
        return Err(SimError::RegressionShape { x: n, y: y.len() });
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if !(sxx > 0.0) {
        return Err(SimError::UndefinedRegressor);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let slope = sxy / sxx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - slope * a).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let explained = slope * slope * sxx;

    let f_statistic = if n < 2 || syy == 0.0 {
        FStatistic::NotAvailable
    } else if rss <= 16.0 * n as f64 * f64::EPSILON * f64::EPSILON * syy {
        FStatistic::Infinite
    } else {
        FStatistic::Value(explained / (rss / (n - 1) as f64))
    };
    Ok(Regression {
        slope,
        f_statistic,
        residuals,
        rss,
    })
}
