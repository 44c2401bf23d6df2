use nalgebra::DMatrix;
use proptest::prelude::*;
use turnover_spectra::sim::{run_crossing, simulate_crossing, FactorTarget, SimConfig};

fn config(n: usize, rho: f64, instruments: usize, paths: usize, seed: u64) -> SimConfig {
    SimConfig {
        n_alphas: n,
        n_periods: 2,
        n_instruments: instruments,
        target: FactorTarget::Uniform { rho },
        master_seed: seed,
        n_paths: paths,
    }
}

#[test]
fn identical_under_different_thread_pools() {
    let cfg = config(40, 0.3, 25, 64, 7);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run_crossing(&cfg).unwrap());
    let b = four.install(|| run_crossing(&cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn more_correlation_means_less_crossing() {
    let low = run_crossing(&config(50, 0.2, 20, 200, 99)).unwrap();
    let high = run_crossing(&config(50, 0.8, 20, 200, 99)).unwrap();
    assert!(high.mean > low.mean, "{} vs {}", high.mean, low.mean);
}

#[test]
fn crossing_ratio_matches_the_gaussian_closed_form() {
    // Σᵢdᵢₖ and dᵢₖ are Gaussian; E|Σᵢdᵢₖ| / Σᵢ E|dᵢₖ| = √((1 + (N − 1)ρ)/N).
    for (n, rho) in [(10, 0.1), (100, 0.3), (400, 0.6)] {
        let r = run_crossing(&config(n, rho, 100, 200, 5)).unwrap();
        let want = ((1.0 + (n as f64 - 1.0) * rho) / n as f64).sqrt();
        let se = r.std_error.unwrap();
        assert!((r.mean - want).abs() <= 5.0 * se + 1e-3, "N={n} rho={rho}: {} vs {want} (se {se})", r.mean);
    }
}

#[test]
fn crossing_decreases_to_a_positive_limit() {
    let rho: f64 = 0.1;
    let means: Vec<f64> = [10, 100, 1000]
        .iter()
        .map(|&n| run_crossing(&config(n, rho, 100, 400, 2026)).unwrap().mean)
        .collect();
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
    assert!(means[2] > 0.1 * rho.sqrt());
}

proptest! {
    #[test]
    fn netting_never_exceeds_gross(rows in 1usize..6, cols in 1usize..6, cells in prop::collection::vec(-10.0f64..10.0, 36)) {
        let trades = DMatrix::from_fn(rows, cols, |i, k| cells[i * 6 + k]);
        let r = simulate_crossing(&trades).unwrap();
        prop_assert!(r.netted_traded <= r.gross_traded * (1.0 + 1e-15));
        prop_assert!((0.0..=1.0 + 1e-15).contains(&r.crossing_ratio));
    }

    #[test]
    fn same_signed_instruments_do_not_cross(rows in 1usize..6, cols in 1usize..6, cells in prop::collection::vec(0.0f64..10.0, 36)) {
        let trades = DMatrix::from_fn(rows, cols, |i, k| if k % 2 == 0 { cells[i * 6 + k] } else { -cells[i * 6 + k] });
        let r = simulate_crossing(&trades).unwrap();
        prop_assert!((r.netted_traded - r.gross_traded).abs() <= 1e-12 * r.gross_traded.max(1.0));
    }
}
