#![allow(dead_code)]

use nalgebra::DMatrix;
use turnover_spectra::ingest::{sample_moments, CorrelationMatrix, EstimationMode};
use turnover_spectra::sim::{gen_one_factor_panel, FactorTarget, SimConfig};

/// Cyclic Jacobi eigenvalues, descending. Slow and simple: an independent
/// check on the production solver.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    d.sort_by(|x, y| y.total_cmp(x));
    d
}

/// Sample correlation of a one-factor panel, loadings uniform on [low, high].
pub fn sample_correlation(n: usize, periods: usize, low: f64, high: f64, seed: u64) -> CorrelationMatrix {
    let panel = gen_one_factor_panel(&SimConfig {
        n_alphas: n,
        n_periods: periods,
        n_instruments: 1,
        target: FactorTarget::RandomLoadings { low, high },
        master_seed: seed,
        n_paths: 1,
    })
    .unwrap();
    sample_moments(&panel, EstimationMode::CompleteCases).unwrap().1
}
