use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_turnover-spectra");

// Pairwise correlations 0.72, −0.84, 0.66: each pair is plausible, the matrix is indefinite.
const PAIRWISE_INDEFINITE: &str = "\
x,y,z
2,-0.5,
2.5,2.5,
3.5,4,
3.5,5,
6.5,5,
,0.5,2.5
,1.5,0.5
,2.5,4.5
,4,4
,6,4.5
-0.5,,1.5
-1.5,,2
-4,,2.5
-4.5,,5
-4,,4.5
";

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("TURNOVER_SPECTRA_SEED")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// One-factor style panel written without any randomness.
fn write_panel(dir: &Path) -> (PathBuf, PathBuf) {
    let rows = 120;
    let factor: Vec<f64> = (0..rows).map(|t| ((t * 37 % 101) as f64 / 50.0) - 1.0).collect();
    let mut panel = String::from("a,b,c,d\n");
    let mut factors = String::from("mkt\n");
    for (t, f) in factor.iter().enumerate() {
        let noise = |k: usize| (((t * (13 + 2 * k) + 7 * k) % 29) as f64 / 14.0) - 1.0;
        let row: Vec<String> = (0..4).map(|k| format!("{:.6}", 0.6 * f + noise(k))).collect();
        panel.push_str(&row.join(","));
        panel.push('\n');
        factors.push_str(&format!("{f:.6}\n"));
    }
    let p = dir.join("panel.csv");
    let f = dir.join("factors.csv");
    fs::write(&p, panel).unwrap();
    fs::write(&f, factors).unwrap();
    (p, f)
}

#[test]
fn analyze_writes_every_report_field() {
    let dir = TempDir::new().unwrap();
    let (panel, _) = write_panel(dir.path());
    let report = dir.path().join("report.json");
    let out = run(&["analyze", "--input", path_str(&panel), "--output", path_str(&report)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let json = read_json(&report);
    assert_eq!(json["command"], "analyze");
    assert_eq!(json["config"]["prune"], 0.9);
    assert_eq!(json["config"]["floor"], 1e-10);
    assert!(json["residualization"].is_null());
    let r = &json["report"];
    for key in [
        "T_full", "T_large_n", "T_t2", "T_naive", "T_exact_b", "rho_star", "rho_prime",
        "psi_star", "rho_bar", "rho_one", "rho_star_factored", "rho_max", "p1_share",
        "top_eigenvalue", "top_gap", "full_model_note", "warnings", "input",
    ] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    // default inputs are τ = 1 with equal weights, so T_naive = 1 and T_t2 = ρ*
    assert!((r["T_naive"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((r["T_t2"].as_f64().unwrap() - r["rho_star"].as_f64().unwrap()).abs() < 1e-12);
    assert_eq!(r["input"]["m"], 120);
}

#[test]
fn factors_are_recorded() {
    let dir = TempDir::new().unwrap();
    let (panel, factors) = write_panel(dir.path());
    let report = dir.path().join("report.json");
    let out = run(&[
        "analyze", "--input", path_str(&panel), "--factors", path_str(&factors),
        "--output", path_str(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&report);
    assert_eq!(json["residualization"]["n_factors"], 1);
    assert_eq!(json["residualization"]["intercept"], "fit");
    assert!(json["residualization"]["factors"].as_str().unwrap().ends_with("factors.csv"));
    assert_eq!(json["config"]["factors"], json["residualization"]["factors"]);
}

#[test]
fn indefinite_pairwise_matrix_is_refused_without_repair() {
    let dir = TempDir::new().unwrap();
    let panel = dir.path().join("pairwise.csv");
    fs::write(&panel, PAIRWISE_INDEFINITE).unwrap();
    let report = dir.path().join("report.json");
    let base = ["analyze", "--input", path_str(&panel), "--mode", "pairwise", "--output", path_str(&report)];

    let refused = run(&[&base[..], &["--no-repair"]].concat());
    assert_eq!(code(&refused), 2);
    assert!(String::from_utf8_lossy(&refused.stderr).contains("--repair"));
    assert!(!report.exists());

    let repaired = run(&base);
    assert_eq!(code(&repaired), 0, "{}", String::from_utf8_lossy(&repaired.stderr));
    let json = read_json(&report);
    assert_eq!(json["psd"]["repair_applied"], true);
    assert_eq!(json["report"]["input"]["repair_applied"], true);
    assert_eq!(json["report"]["input"]["estimation_mode"], "pairwise-complete");

    // the later flag wins
    let both = run(&[&base[..], &["--no-repair", "--repair"]].concat());
    assert_eq!(code(&both), 0);
}

#[test]
fn repair_command_writes_a_positive_definite_matrix() {
    let dir = TempDir::new().unwrap();
    let panel = dir.path().join("pairwise.csv");
    fs::write(&panel, PAIRWISE_INDEFINITE).unwrap();
    let fixed = dir.path().join("fixed.csv");
    let out = run(&["repair", "--input", path_str(&panel), "--mode", "pairwise", "--output", path_str(&fixed)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let meta = read_json(&dir.path().join("fixed.csv.meta.json"));
    assert!(meta["min_eigenvalue_before"].as_f64().unwrap() < -0.4);
    assert!(meta["min_eigenvalue_after"].as_f64().unwrap() > 0.0);

    // the repaired matrix is accepted as a correlation input without further repair
    let report = dir.path().join("report.json");
    let again = run(&[
        "analyze", "--input", path_str(&fixed), "--input-kind", "correlation", "--no-repair",
        "--output", path_str(&report),
    ]);
    assert_eq!(code(&again), 0, "{}", String::from_utf8_lossy(&again.stderr));
    assert_eq!(read_json(&report)["report"]["input"]["n"], 3);
}

#[test]
fn turnover_file_sets_weighted_turnovers() {
    let dir = TempDir::new().unwrap();
    let (panel, _) = write_panel(dir.path());
    let turnovers = dir.path().join("turnovers.csv");
    fs::write(&turnovers, "id,tau,weight\na,0.2,1\nb,0.4,1\nc,0.2,-1\nd,0.4,1\n").unwrap();
    let report = dir.path().join("report.json");
    let out = run(&[
        "analyze", "--input", path_str(&panel), "--turnovers", path_str(&turnovers),
        "--output", path_str(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&report);
    assert_eq!(json["turnovers"]["weights_renormalized"], true);
    // Σ τᵢ|wᵢ| with w = ±1/4
    assert!((json["report"]["T_naive"].as_f64().unwrap() - 0.3).abs() < 1e-12);

    fs::write(&turnovers, "id,tau\na,0.2\n").unwrap();
    let missing = run(&[
        "analyze", "--input", path_str(&panel), "--turnovers", path_str(&turnovers),
        "--output", path_str(&report),
    ]);
    assert_eq!(code(&missing), 1);
}

#[test]
fn sweep_is_byte_identical_under_a_fixed_seed() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let r = run(&[
            "sweep", "--grid", "50,100,200,400", "--rho", "0.25", "--periods", "1000",
            "--seed", "17", "--output", path_str(out),
        ]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    }
    let csv = fs::read(&a).unwrap();
    assert_eq!(csv, fs::read(&b).unwrap());

    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "N,rho_star,rho_star_times_n,slope,F");
    assert_eq!(text.lines().count(), 5);

    let summary = read_json(&dir.path().join("a.csv.summary.json"));
    assert_eq!(summary["seed"], 17);
    assert_eq!(summary["seed_source"], "flag");
    assert_eq!(summary["config"]["grid"], "50,100,200,400");
    let slope = summary["slope_no_intercept"].as_f64().unwrap();
    assert!((slope - 0.25).abs() < 0.05, "{slope}");
    assert!(summary["f_statistic"].as_f64().unwrap() > 100.0);
}

#[test]
fn seed_environment_variable_overrides_the_flag() {
    let dir = TempDir::new().unwrap();
    let flag = dir.path().join("flag.csv");
    let env = dir.path().join("env.csv");
    let args = |out: &Path| -> Vec<String> {
        ["sweep", "--grid", "20,40", "--periods", "200", "--seed", "1", "--output", path_str(out)]
            .map(String::from)
            .to_vec()
    };
    assert_eq!(code(&run(&args(&flag).iter().map(String::as_str).collect::<Vec<_>>())), 0);
    let out = Command::new(BIN).args(args(&env)).env("TURNOVER_SPECTRA_SEED", "2").output().unwrap();
    assert_eq!(code(&out), 0);
    assert_ne!(fs::read(&flag).unwrap(), fs::read(&env).unwrap());
    let summary = read_json(&dir.path().join("env.csv.summary.json"));
    assert_eq!(summary["seed"], 2);
    assert_eq!(summary["seed_source"], "env");

    let bad = Command::new(BIN).args(args(&env)).env("TURNOVER_SPECTRA_SEED", "x").output().unwrap();
    assert_eq!(code(&bad), 1);
}

#[test]
fn single_point_grid_is_rejected() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("s.csv");
    let out = run(&["sweep", "--grid", "100", "--output", path_str(&out_path)]);
    assert_eq!(code(&out), 1);
    assert!(!out_path.exists());
    assert_eq!(code(&run(&["sweep", "--grid", "100,50", "--output", path_str(&out_path)])), 1);
}

#[test]
fn exact_fit_reports_infinite_f() {
    // perfectly correlated series prune to one alpha with ρ* = 1 at every N
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("s.csv");
    let out = run(&[
        "sweep", "--grid", "10,20,30", "--rho", "1", "--periods", "50", "--output", path_str(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).unwrap();
    for line in text.lines().skip(1) {
        assert_eq!(line.rsplit(',').next().unwrap(), "inf", "{line}");
    }
    let summary = read_json(&dir.path().join("s.csv.summary.json"));
    assert_eq!(summary["f_statistic"], "inf");
}

#[test]
fn simulate_reports_the_crossing_ratio() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("sim.json");
    let out = run(&[
        "simulate", "--n", "30", "--rho", "0.4", "--instruments", "50", "--paths", "100",
        "--seed", "5", "--output", path_str(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&out_path);
    let mean = json["result"]["mean"].as_f64().unwrap();
    let se = json["result"]["std_error"].as_f64().unwrap();
    let reference = json["gaussian_reference"].as_f64().unwrap();
    assert!((reference - (12.6f64 / 30.0).sqrt()).abs() < 1e-12);
    assert!((mean - reference).abs() < 5.0 * se + 1e-3, "{mean} vs {reference}");
    assert_eq!(json["result"]["per_path_ratios"].as_array().unwrap().len(), 100);
}

#[test]
fn input_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.csv");
    let report = dir.path().join("r.json");
    assert_eq!(code(&run(&["analyze", "--input", path_str(&missing), "--output", path_str(&report)])), 1);

    let garbled = dir.path().join("garbled.csv");
    fs::write(&garbled, "a,b\n1,2\nx,3\n4,5\n").unwrap();
    assert_eq!(code(&run(&["analyze", "--input", path_str(&garbled), "--output", path_str(&report)])), 1);

    assert_eq!(code(&run(&["analyze", "--no-such-flag"])), 1);
    assert_eq!(code(&run(&["simulate", "--n", "1", "--output", path_str(&report)])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn constant_series_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let panel = dir.path().join("flat.csv");
    fs::write(&panel, "a,b,c\n1,0.5,2\n2,0.5,1\n3,0.5,5\n4,0.5,3\n").unwrap();
    let report = dir.path().join("r.json");
    let out = run(&["analyze", "--input", path_str(&panel), "--output", path_str(&report)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("zero variance"));
}
