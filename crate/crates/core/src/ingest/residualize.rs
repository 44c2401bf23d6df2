//! Per-series OLS residuals against a panel of factor returns.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{IngestError, TimeSeriesPanel};

/// Treatment of the regression intercept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterceptPolicy {
    /// Regress on the factors only.
    None,
    /// Fit an intercept and remove it with the factor fit (pure residual).
    #[default]
    Fit,
    /// Fit an intercept but add it back to the residual. A per-series
    /// constant does not change correlations.
    FitAndRetain,
}

impl InterceptPolicy {
    fn fits_intercept(self) -> bool {
        !matches!(self, InterceptPolicy::None)
    }
}

// Relative size of an R diagonal below which the design is treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// Regresses every series on the factors and returns the residual panel.
///
/// Each regression uses the timestamps where the series and all factors are
/// observed; every other cell of the result is N/A.
pub fn ols_residualize(
    panel: &TimeSeriesPanel,
    factors: &TimeSeriesPanel,
    intercept: InterceptPolicy,
) -> Result<TimeSeriesPanel, IngestError> {
    if factors.n_times() != panel.n_times() {
        return Err(IngestError::Shape(format!(
            "factor panel has {} timestamps, series panel has {}",
            factors.n_times(),
            panel.n_times()
        )));
    }
    let k = factors.n_series();
    let factor_rows: Vec<bool> = (0..panel.n_times())
        .map(|s| (0..k).all(|f| factors.is_observed(f, s)))
        .collect();

    let fitted: Vec<Vec<Option<f64>>> = (0..panel.n_series())
        .into_par_iter()
        .map(|i| {
            let rows: Vec<usize> = (0..panel.n_times())
                .filter(|&s| factor_rows[s] && panel.is_observed(i, s))
                .collect();
            let resid = residualize_one(panel, factors, i, &rows, intercept)?;
            let mut out = vec![None; panel.n_times()];
            for (&s, r) in rows.iter().zip(resid.iter()) {
                out[s] = Some(*r);
            }
            Ok(out)
        })
        .collect::<Result<_, IngestError>>()?;

    let values = DMatrix::from_fn(panel.n_series(), panel.n_times(), |i, s| {
        fitted[i][s].unwrap_or(f64::NAN)
    });
    let observed = values.map(|v| !v.is_nan());
    TimeSeriesPanel::new(panel.ids().to_vec(), values, observed)
}

fn residualize_one(
    panel: &TimeSeriesPanel,
    factors: &TimeSeriesPanel,
    series: usize,
    rows: &[usize],
    intercept: InterceptPolicy,
) -> Result<DVector<f64>, IngestError> {
    let k = factors.n_series();
    let id = &panel.ids()[series];
    if rows.len() < k + 2 {
        return Err(IngestError::RegressionCoverage {
            id: id.clone(),
            needed: k + 2,
            found: rows.len(),
        });
    }
    let offset = usize::from(intercept.fits_intercept());
    let p = k + offset;
    let design = DMatrix::from_fn(rows.len(), p, |r, c| {
        if c < offset {
            1.0
        } else {
            factors.values()[(c - offset, rows[r])]
        }
    });
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&s| panel.values()[(series, s)]));

    let col_norm = (0..p)
        .map(|c| design.column(c).norm())
        .fold(0.0_f64, f64::max);
    let qr = design.clone().qr();
    let r = qr.r();
    for c in 0..p {
        if r[(c, c)].abs() <= RANK_TOLERANCE * col_norm {
            return Err(IngestError::CollinearFactors { id: id.clone() });
        }
    }
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| IngestError::CollinearFactors { id: id.clone() })?;

    let mut resid = &y - &design * &beta;
    if intercept == InterceptPolicy::FitAndRetain {
        resid.add_scalar_mut(beta[0]);
    }
    Ok(resid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(id: &str, x: &[f64]) -> TimeSeriesPanel {
        let pad: Vec<f64> = (0..x.len()).map(|s| ((s * 7 % 5) as f64).sin()).collect();
        TimeSeriesPanel::from_rows(vec![id.into(), "pad".into()], &[x.to_vec(), pad]).unwrap()
    }

    fn factor_panel(fs: &[Vec<f64>]) -> TimeSeriesPanel {
        let ids = (0..fs.len()).map(|i| format!("f{i}")).collect();
        TimeSeriesPanel::from_rows(ids, fs).unwrap()
    }

    const F: [f64; 6] = [0.3, -1.2, 0.8, 2.0, -0.4, 0.1];
    const G: [f64; 6] = [1.0, 0.5, -0.7, 0.2, 0.9, -1.5];

    #[test]
    fn self_regression_has_zero_residuals() {
        let y = [0.2, -0.1, 0.4, 0.05, -0.3, 0.15];
        let p = single("y", &y);
        let f = factor_panel(&[y.to_vec()]);
        let r = ols_residualize(&p, &f, InterceptPolicy::Fit).unwrap();
        for s in 0..6 {
            assert!(r.values()[(0, s)].abs() < 1e-12);
        }
    }

    #[test]
    fn exact_linear_fit() {
        let y: Vec<f64> = F.iter().map(|f| 2.0 * f + 1.0).collect();
        let p = single("y", &y);
        let f = factor_panel(&[F.to_vec()]);
        let r = ols_residualize(&p, &f, InterceptPolicy::Fit).unwrap();
        for s in 0..6 {
            assert!(r.values()[(0, s)].abs() < 1e-12);
        }
        // retaining the intercept leaves exactly the constant behind
        let r = ols_residualize(&p, &f, InterceptPolicy::FitAndRetain).unwrap();
        for s in 0..6 {
            assert!((r.values()[(0, s)] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_factor_leaves_demeaned_series() {
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        // demeaned y = (−2.5, −1.5, −0.5, 0.5, 1.5, 2.5); f ⟂ 1 and f ⟂ y − ȳ
        let f = [1.0, -2.0, 1.0, 1.0, -2.0, 1.0];
        let p = single("y", &y);
        let r = ols_residualize(&p, &factor_panel(&[f.to_vec()]), InterceptPolicy::Fit).unwrap();
        for s in 0..6 {
            assert!((r.values()[(0, s)] - (y[s] - 3.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_factors_are_rejected() {
        let twice: Vec<f64> = F.iter().map(|v| 2.0 * v).collect();
        let p = single("y", &G);
        let f = factor_panel(&[F.to_vec(), twice]);
        assert!(matches!(
            ols_residualize(&p, &f, InterceptPolicy::None),
            Err(IngestError::CollinearFactors { .. })
        ));
    }

    #[test]
    fn too_few_rows_is_a_coverage_error() {
        let nan = f64::NAN;
        let y = [1.0, nan, nan, 2.0, nan, 0.5];
        let p = single("y", &y);
        let f = factor_panel(&[F.to_vec(), G.to_vec()]);
        match ols_residualize(&p, &f, InterceptPolicy::Fit) {
            Err(IngestError::RegressionCoverage { id, needed, found }) => {
                assert_eq!((id.as_str(), needed, found), ("y", 4, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mask_propagates() {
        let nan = f64::NAN;
        let y = [1.0, 2.5, nan, 2.0, 0.1, 0.5];
        let mut fv = F.to_vec();
        fv[4] = nan;
        let p = single("y", &y);
        let f = factor_panel(&[fv, G.to_vec()]);
        let r = ols_residualize(&p, &f, InterceptPolicy::None).unwrap();
        assert!(!r.is_observed(0, 2));
        assert!(!r.is_observed(0, 4));
        assert!(!r.is_observed(1, 4));
        assert!(r.is_observed(0, 0));
    }
}
