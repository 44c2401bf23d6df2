use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::generate::{one_factor_values, panel_from_values};
use super::{no_intercept_regression, stream_rng, FStatistic, FactorTarget, SimError};
use crate::conditioning::{prune_redundant, RjRepair, DEFAULT_DEGENERACY_TOLERANCE};
use crate::ingest::{sample_moments, EstimationMode, TimeSeriesPanel};
use crate::spectral::{rho_star, signed_basis, Warning};

/// Produces an N-series panel from a caller-supplied generator stream.
pub trait PanelGenerator: Sync {
    fn generate(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<TimeSeriesPanel, SimError>;
}

/// One-factor panels of fixed length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneFactorGenerator {
    pub target: FactorTarget,
    pub n_periods: usize,
}

impl PanelGenerator for OneFactorGenerator {
    fn generate(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<TimeSeriesPanel, SimError> {
        if self.n_periods < 2 {
            return Err(SimError::InvalidConfig("need at least 2 periods".into()));
        }
        let loadings = self.target.loadings(n, rng)?;
        panel_from_values(one_factor_values(&loadings, self.n_periods, rng))
    }
}

/// What happens between the panel and the eigendecomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineOptions {
    pub mode: EstimationMode,
    /// Ψ\* for redundant-alpha pruning; `None` keeps every series.
    pub prune_bound: Option<f64>,
    /// λ\* for repair; `None` skips repair.
    pub repair_floor: Option<f64>,
    pub degeneracy_tolerance: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            mode: EstimationMode::CompleteCases,
            prune_bound: None,
            repair_floor: None,
            degeneracy_tolerance: DEFAULT_DEGENERACY_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    /// Requested N.
    pub n: usize,
    /// Series left after pruning; the regression uses this N.
    pub n_effective: Option<usize>,
    pub rho_star: Option<f64>,
    pub rho_star_times_n: Option<f64>,
    pub warnings: Vec<Warning>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub grid: Vec<usize>,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
    /// Slope of ρ\*·N on N through the origin: the large-N limit of ρ\*.
    pub slope_no_intercept: Option<f64>,
    pub f_statistic: FStatistic,
    pub residuals: Vec<f64>,
}

/// Comma-separated N values, each ≥ 2, strictly increasing.
pub fn parse_grid(list: &str) -> Result<Vec<usize>, SimError> {
    let grid = list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| SimError::InvalidGrid(format!("{s:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_grid(&grid)?;
    Ok(grid)
}

fn check_grid(grid: &[usize]) -> Result<(), SimError> {
    if grid.is_empty() {
        return Err(SimError::InvalidGrid("empty grid".into()));
    }
    if let Some(n) = grid.iter().find(|&&n| n < 2) {
        return Err(SimError::InvalidGrid(format!("N = {n} is below 2")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::InvalidGrid("values must be strictly increasing".into()));
    }
    Ok(())
}

fn sweep_point<G: PanelGenerator + ?Sized>(
    n: usize,
    generator: &G,
    options: &PipelineOptions,
    seed: u64,
) -> Result<(usize, f64, Vec<Warning>), SimError> {
    let panel = generator.generate(n, &mut stream_rng(seed, n as u64))?;
    let (_, mut corr) = sample_moments(&panel, options.mode)?;
    if let Some(bound) = options.prune_bound {
        corr = prune_redundant(&corr, bound)?.1;
    }
    if let Some(floor) = options.repair_floor {
        corr = corr.rj_repair(floor)?;
    }
    let basis = signed_basis(&corr, options.degeneracy_tolerance)?;
    let rs = rho_star(&basis);
    Ok((corr.dim(), rs.value, rs.warnings))
}

/// ρ\*·N for every N in `grid`, plus the no-intercept fit of ρ\*·N on N.
///
/// Grid point N draws its panel from stream N of `seed`. A failing point is
/// kept with its error message and left out of the regression.
pub fn sweep_rho_star<G: PanelGenerator + ?Sized>(
    grid: &[usize],
    generator: &G,
    options: &PipelineOptions,
    seed: u64,
) -> Result<SweepResult, SimError> {
    check_grid(grid)?;
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&n| match sweep_point(n, generator, options, seed) {
            Ok((n_eff, rs, warnings)) => SweepPoint {
                n,
                n_effective: Some(n_eff),
                rho_star: Some(rs),
                rho_star_times_n: Some(rs * n_eff as f64),
                warnings,
                error: None,
            },
            Err(e) => SweepPoint {
                n,
                n_effective: None,
                rho_star: None,
                rho_star_times_n: None,
                warnings: Vec::new(),
                error: Some(e.to_string()),
            },
        })
        .collect();

    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter_map(|p| Some((p.n_effective? as f64, p.rho_star_times_n?)))
        .unzip();
    let (slope, f_statistic, residuals) = if x.is_empty() {
        (None, FStatistic::NotAvailable, Vec::new())
    } else {
        let fit = no_intercept_regression(&x, &y)?;
        (Some(fit.slope), fit.f_statistic, fit.residuals)
    };
    Ok(SweepResult {
        grid: grid.to_vec(),
        seed,
        points,
        slope_no_intercept: slope,
        f_statistic,
        residuals,
    })
}

/// Columns N, rho_star, rho_star_times_n, slope, F; missing values are "NA".
pub fn write_sweep_csv<W: Write>(result: &SweepResult, sink: W) -> Result<(), SimError> {
    let io = |e: csv::Error| SimError::Io(e.to_string());
    let na = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| v.to_string());
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["N", "rho_star", "rho_star_times_n", "slope", "F"])
        .map_err(io)?;
    let slope = na(result.slope_no_intercept);
    let f = result.f_statistic.to_string();
    for p in &result.points {
        let n = p.n_effective.unwrap_or(p.n).to_string();
        w.write_record([
            n.as_str(),
            &na(p.rho_star),
            &na(p.rho_star_times_n),
            &slope,
            &f,
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| SimError::Io(e.to_string()))
}
