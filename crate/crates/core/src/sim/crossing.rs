use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{pairwise_sum, stream_rng, SimConfig, SimError};

/// Traded dollars before and after netting across alphas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    /// Σᵢₖ |dᵢₖ|, summed over paths.
    pub gross_traded: f64,
    /// Σₖ |Σᵢ dᵢₖ|, summed over paths.
    pub netted_traded: f64,
    /// netted / gross over all paths.
    pub crossing_ratio: f64,
    pub per_path_ratios: Vec<f64>,
    /// Mean of the per-path ratios.
    pub mean: f64,
    /// Standard error of `mean`; absent for a single path.
    pub std_error: Option<f64>,
    /// Some path had nothing to trade; its ratio was set to 1.
    pub zero_gross: bool,
}

fn net(trades: &DMatrix<f64>) -> (f64, f64) {
    let gross = pairwise_sum(&trades.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let per_instrument: Vec<f64> = trades
        .column_iter()
        .map(|c| pairwise_sum(c.as_slice()).abs())
        .collect();
    (gross, pairwise_sum(&per_instrument))
}

fn ratio(gross: f64, netted: f64) -> (f64, bool) {
    if gross == 0.0 {
        (1.0, true)
    } else {
        (netted / gross, false)
    }
}

/// Nets one N × K matrix of desired trades (alpha i, instrument k).
pub fn simulate_crossing(trades: &DMatrix<f64>) -> Result<SimResult, SimError> {
    if trades.iter().any(|d| !d.is_finite()) {
        return Err(SimError::InvalidConfig("trades must be finite".into()));
    }
    let (gross, netted) = net(trades);
    let (r, zero) = ratio(gross, netted);
    Ok(SimResult {
        gross_traded: gross,
        netted_traded: netted,
        crossing_ratio: r,
        per_path_ratios: vec![r],
        mean: r,
        std_error: None,
        zero_gross: zero,
    })
}

/// One period of trades for N alphas over K instruments.
///
/// Alpha i's position in instrument k is wᵢ·(βᵢfₖ + √(1 − βᵢ²)εᵢₖ) with equal
/// weights wᵢ = 1/N. Positions are drawn at two consecutive times and the
/// trade is their difference, so trades of alphas i ≠ j on an instrument have
/// correlation βᵢβⱼ.
pub fn gen_trades(loadings: &[f64], n_instruments: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = loadings.len();
    let w = 1.0 / n as f64;
    let idio: Vec<f64> = loadings.iter().map(|b| (1.0 - b * b).max(0.0).sqrt()).collect();
    let positions = |rng: &mut ChaCha8Rng| {
        let mut p = DMatrix::zeros(n, n_instruments);
        for k in 0..n_instruments {
            let f: f64 = rng.sample(StandardNormal);
            for i in 0..n {
                let e: f64 = rng.sample(StandardNormal);
                p[(i, k)] = w * (loadings[i] * f + idio[i] * e);
            }
        }
        p
    };
    let before = positions(rng);
    let after = positions(rng);
    after - before
}

/// Monte-Carlo crossing over `n_paths` independent paths, each on its own
/// stream of `master_seed`. Bit-identical for identical configs.
pub fn run_crossing(config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let loadings = config
        .target
        .loadings(config.n_alphas, &mut stream_rng(config.master_seed, 0))?;
    let per_path: Vec<(f64, f64)> = (0..config.n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = stream_rng(config.master_seed, path as u64 + 1);
            net(&gen_trades(&loadings, config.n_instruments, &mut rng))
        })
        .collect();

    let gross = pairwise_sum(&per_path.iter().map(|p| p.0).collect::<Vec<_>>());
    let netted = pairwise_sum(&per_path.iter().map(|p| p.1).collect::<Vec<_>>());
    let mut zero_gross = false;
    let ratios: Vec<f64> = per_path
        .iter()
        .map(|&(g, n)| {
            let (r, z) = ratio(g, n);
            zero_gross |= z;
            r
        })
        .collect();
    let paths = ratios.len() as f64;
    let mean = pairwise_sum(&ratios) / paths;
    let std_error = (ratios.len() > 1).then(|| {
        let sq: Vec<f64> = ratios.iter().map(|r| (r - mean) * (r - mean)).collect();
        (pairwise_sum(&sq) / (paths - 1.0)).sqrt() / paths.sqrt()
    });
    Ok(SimResult {
        gross_traded: gross,
        netted_traded: netted,
        crossing_ratio: ratio(gross, netted).0,
        per_path_ratios: ratios,
        mean,
        std_error,
        zero_gross,
    })
}
