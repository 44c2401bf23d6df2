use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{stream_rng, SimConfig, SimError};
use crate::ingest::{CorrelationMatrix, TimeSeriesPanel};

/// βᵢ ~ U[low, high].
pub fn random_loadings(n: usize, low: f64, high: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n)
        .map(|_| if low == high { low } else { rng.random_range(low..=high) })
        .collect()
}

/// Population correlation of a one-factor model: Ψᵢⱼ = βᵢβⱼ off the diagonal.
pub fn one_factor_correlation(loadings: &[f64]) -> Result<CorrelationMatrix, SimError> {
    if let Some(b) = loadings.iter().find(|b| !(b.abs() <= 1.0)) {
        return Err(SimError::InvalidConfig(format!("loading {b} outside [-1, 1]")));
    }
    let n = loadings.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            loadings[i] * loadings[j]
        }
    });
    Ok(CorrelationMatrix::from_matrix(m)?)
}

/// xᵢₜ = βᵢ·fₜ + √(1 − βᵢ²)·εᵢₜ with standard normal innovations, drawn
/// period by period (factor first, then each series) from `rng`.
pub(crate) fn one_factor_values(loadings: &[f64], n_periods: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = loadings.len();
    let idio: Vec<f64> = loadings.iter().map(|b| (1.0 - b * b).max(0.0).sqrt()).collect();
    let mut values = DMatrix::zeros(n, n_periods);
    for t in 0..n_periods {
        let f: f64 = rng.sample(StandardNormal);
        for i in 0..n {
            let e: f64 = rng.sample(StandardNormal);
            values[(i, t)] = loadings[i] * f + idio[i] * e;
        }
    }
    values
}

pub(crate) fn panel_from_values(values: DMatrix<f64>) -> Result<TimeSeriesPanel, SimError> {
    let ids = (1..=values.nrows()).map(|i| format!("a{i}")).collect();
    Ok(TimeSeriesPanel::from_values(ids, values)?)
}

/// Complete N × (M+1) one-factor panel, deterministic in `master_seed`.
pub fn gen_one_factor_panel(config: &SimConfig) -> Result<TimeSeriesPanel, SimError> {
    config.validate()?;
    let mut rng = stream_rng(config.master_seed, 0);
    let loadings = config.target.loadings(config.n_alphas, &mut rng)?;
    panel_from_values(one_factor_values(&loadings, config.n_periods, &mut rng))
}
