use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use turnover_spectra::conditioning::{eigendecompose, is_positive_definite, prune_redundant, RjRepair};
use turnover_spectra::ingest::{
    load_matrix_csv, load_panel, ols_residualize, sample_moments, write_matrix_csv,
    CorrelationMatrix, EstimationMode, InterceptPolicy, LoadOptions, TimeOrder,
};
use turnover_spectra::sim::{
    parse_grid, run_crossing, sweep_rho_star, write_sweep_csv, FStatistic, FactorTarget,
    OneFactorGenerator, PipelineOptions, SimConfig, SimError, SimResult, SweepPoint,
};
use turnover_spectra::spectral::{self, InputDigest, TurnoverInputs, TurnoverReport};

use crate::args::{
    AnalyzeArgs, Command, Conditioning, InputKind, PanelInput, RepairArgs, SimulateArgs, SweepArgs,
};
use crate::error::CliError;

pub const SEED_ENV: &str = "TURNOVER_SPECTRA_SEED";
pub const DEFAULT_SEED: u64 = 0;

// Eigenvalues above −PSD_SLACK·N count as zero when repair is disabled.
const PSD_SLACK: f64 = 1e-12;

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Analyze(args) => analyze(args),
        Command::Repair(args) => repair(args),
        Command::Sweep(args) => sweep(args),
        Command::Simulate(args) => simulate(args),
    }
}

/// Reproducibility header shared by every JSON artifact.
#[derive(Serialize)]
struct Artifact<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    seed: Option<u64>,
    seed_source: Option<&'static str>,
    #[serde(flatten)]
    result: R,
}

impl<'a, C: Serialize, R: Serialize> Artifact<'a, C, R> {
    fn new(command: &'static str, config: &'a C, seed: Option<(u64, &'static str)>, result: R) -> Self {
        Self {
            tool: env!("CARGO_BIN_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            seed: seed.map(|s| s.0),
            seed_source: seed.map(|s| s.1),
            result,
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<(u64, &'static str)> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map(|s| (s, "env"))
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={raw:?} is not a u64")).into()),
        Err(std::env::VarError::NotPresent) => Ok(flag.map_or((DEFAULT_SEED, "default"), |s| (s, "flag"))),
        Err(e) => Err(CliError::Usage(format!("{SEED_ENV}: {e}")).into()),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush().with_context(|| format!("cannot write {}", path.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

#[derive(Serialize)]
struct Residualization {
    factors: PathBuf,
    n_factors: usize,
    intercept: InterceptPolicy,
}

struct Loaded {
    corr: CorrelationMatrix,
    n_times: Option<usize>,
    mode: Option<EstimationMode>,
    residualization: Option<Residualization>,
}

fn load_options(source: &PanelInput, min_series: usize) -> LoadOptions {
    LoadOptions {
        source_order: if source.oldest_first {
            TimeOrder::OldestFirst
        } else {
            TimeOrder::MostRecentFirst
        },
        min_series,
        ..LoadOptions::default()
    }
}

fn load_correlation(source: &PanelInput, factors: Option<&Path>) -> Result<Loaded> {
    match source.input_kind {
        InputKind::Correlation => {
            if factors.is_some() {
                return Err(CliError::Usage("--factors needs --input-kind panel".into()).into());
            }
            let (ids, entries) = load_matrix_csv(open(&source.input)?)
                .with_context(|| format!("reading {}", source.input.display()))?;
            Ok(Loaded {
                corr: CorrelationMatrix::from_entries(ids, entries)?,
                n_times: None,
                mode: None,
                residualization: None,
            })
        }
        InputKind::Panel => {
            let mut panel = load_panel(open(&source.input)?, &load_options(source, 2))
                .with_context(|| format!("reading {}", source.input.display()))?;
            let mut residualization = None;
            if let Some(path) = factors {
                let f = load_panel(open(path)?, &load_options(source, 1))
                    .with_context(|| format!("reading {}", path.display()))?;
                let intercept = InterceptPolicy::Fit;
                panel = ols_residualize(&panel, &f, intercept)?;
                residualization = Some(Residualization {
                    factors: path.to_path_buf(),
                    n_factors: f.n_series(),
                    intercept,
                });
            }
            let mode = EstimationMode::from(source.mode);
            let (_, corr) = sample_moments(&panel, mode)?;
            Ok(Loaded {
                corr,
                n_times: Some(panel.n_times()),
                mode: Some(mode),
                residualization,
            })
        }
    }
}

#[derive(Serialize)]
struct PsdCheck {
    positive_definite: bool,
    repair_applied: bool,
}

/// Leaves a positive-definite matrix alone; otherwise repairs or refuses.
fn condition(corr: CorrelationMatrix, c: &Conditioning) -> Result<(CorrelationMatrix, PsdCheck)> {
    if is_positive_definite(corr.entries()) {
        let check = PsdCheck { positive_definite: true, repair_applied: false };
        return Ok((corr, check));
    }
    if c.repair_enabled() {
        let check = PsdCheck { positive_definite: false, repair_applied: true };
        return Ok((corr.rj_repair(c.floor)?, check));
    }
    let min = eigendecompose(&corr)?.min_eigenvalue();
    if min < -PSD_SLACK * corr.dim() as f64 {
        return Err(CliError::Refusal(format!(
            "correlation matrix is not positive semi-definite (min eigenvalue {min:e}); \
             rerun with --repair or drop --no-repair"
        ))
        .into());
    }
    let check = PsdCheck { positive_definite: false, repair_applied: false };
    Ok((corr, check))
}

#[derive(Serialize)]
struct TurnoverSource {
    source: &'static str,
    /// Weights were rescaled to Σ|w| = 1 over the alphas left after pruning.
    weights_renormalized: bool,
}

/// Tᵢ = τᵢ|wᵢ| for the given ids, from a CSV with columns id, tau and optional weight.
fn weighted_turnovers(path: Option<&Path>, ids: &[String]) -> Result<(Vec<f64>, TurnoverSource)> {
    let n = ids.len();
    let Some(path) = path else {
        let src = TurnoverSource { source: "uniform", weights_renormalized: false };
        return Ok((vec![1.0 / n as f64; n], src));
    };
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let id_col = column("id").ok_or_else(|| bad("missing id column".into()))?;
    let tau_col = column("tau").ok_or_else(|| bad("missing tau column".into()))?;
    let weight_col = column("weight");

    let mut table: HashMap<String, (f64, f64)> = HashMap::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let num = |c: usize| -> Result<f64, CliError> {
            let cell = record.get(c).unwrap_or("");
            cell.parse()
                .map_err(|_| bad(format!("row {}: cannot parse {cell:?}", r + 2)))
        };
        let w = match weight_col {
            Some(c) => num(c)?,
            None => 1.0,
        };
        table.insert(record.get(id_col).unwrap_or("").to_string(), (num(tau_col)?, w));
    }
    let mut taus = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for id in ids {
        let (t, w) = table.get(id).ok_or_else(|| bad(format!("no entry for {id:?}")))?;
        taus.push(*t);
        weights.push(*w);
    }
    let total: f64 = weights.iter().map(|w| w.abs()).sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(bad("weights of the analysed alphas sum to zero".into()).into());
    }
    let renormalized = (total - 1.0).abs() > 1e-10;
    weights.iter_mut().for_each(|w| *w /= total);
    let inputs = TurnoverInputs::new(taus, weights, 1.0, 0.0, vec![0.0; n])
        .map_err(|e| bad(e.to_string()))?;
    let src = TurnoverSource { source: "file", weights_renormalized: renormalized };
    Ok((inputs.weighted_turnovers(), src))
}

#[derive(Serialize)]
struct Alphas {
    kept: Vec<String>,
    dropped: Vec<String>,
}

fn split_ids(all: &[String], kept: &[usize]) -> Alphas {
    Alphas {
        kept: kept.iter().map(|&i| all[i].clone()).collect(),
        dropped: (0..all.len())
            .filter(|i| !kept.contains(i))
            .map(|i| all[i].clone())
            .collect(),
    }
}

#[derive(Serialize)]
struct AnalyzeOutput {
    alphas: Alphas,
    residualization: Option<Residualization>,
    psd: PsdCheck,
    turnovers: TurnoverSource,
    report: TurnoverReport,
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let c = &args.conditioning;
    let loaded = load_correlation(&args.source, args.factors.as_deref())?;
    let (kept, pruned) = prune_redundant(&loaded.corr, c.prune)?;
    let alphas = split_ids(loaded.corr.ids(), &kept);
    let (corr, psd) = condition(pruned, c)?;
    let (weighted, turnovers) = weighted_turnovers(args.turnovers.as_deref(), corr.ids())?;
    let digest = InputDigest {
        n: corr.dim(),
        m: loaded.n_times,
        estimation_mode: loaded.mode,
        repair_applied: psd.repair_applied,
        eigen_floor: psd.repair_applied.then_some(c.floor),
        redundancy_bound: Some(c.prune),
        degeneracy_tolerance: c.degeneracy_tol,
    };
    let report = spectral::analyze(&corr, &weighted, digest)?;
    let out = AnalyzeOutput {
        alphas,
        residualization: loaded.residualization,
        psd,
        turnovers,
        report,
    };
    write_json(&args.output, &Artifact::new("analyze", args, None, out))
}

#[derive(Serialize)]
struct RepairOutput {
    matrix: PathBuf,
    alphas: Alphas,
    min_eigenvalue_before: f64,
    min_eigenvalue_after: f64,
    max_entry_change: f64,
}

fn repair(args: &RepairArgs) -> Result<()> {
    let loaded = load_correlation(&args.source, None)?;
    let (kept, corr) = match args.prune {
        Some(bound) => prune_redundant(&loaded.corr, bound)?,
        None => ((0..loaded.corr.dim()).collect(), loaded.corr.clone()),
    };
    let fixed = corr.rj_repair(args.floor)?;
    write_matrix_csv(fixed.ids(), fixed.entries(), create(&args.output)?)?;
    let out = RepairOutput {
        matrix: args.output.clone(),
        alphas: split_ids(loaded.corr.ids(), &kept),
        min_eigenvalue_before: eigendecompose(&corr)?.min_eigenvalue(),
        min_eigenvalue_after: eigendecompose(&fixed)?.min_eigenvalue(),
        max_entry_change: (fixed.entries() - corr.entries()).amax(),
    };
    write_json(&with_suffix(&args.output, ".meta.json"), &Artifact::new("repair", args, None, out))
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    csv: &'a Path,
    slope_no_intercept: Option<f64>,
    f_statistic: FStatistic,
    residuals: &'a [f64],
    points: &'a [SweepPoint],
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    let grid = parse_grid(&args.grid)?;
    if grid.len() < 2 {
        return Err(SimError::InvalidGrid("the regression needs at least two grid points".into()).into());
    }
    let target = FactorTarget::Uniform { rho: args.rho };
    target.validate()?;
    let generator = OneFactorGenerator { target, n_periods: args.periods };
    let c = &args.conditioning;
    let options = PipelineOptions {
        mode: args.mode.into(),
        prune_bound: Some(c.prune),
        repair_floor: c.repair_enabled().then_some(c.floor),
        degeneracy_tolerance: c.degeneracy_tol,
    };
    let result = sweep_rho_star(&grid, &generator, &options, seed.0)?;
    let mut csv_out = create(&args.output)?;
    write_sweep_csv(&result, &mut csv_out)?;
    csv_out.flush()?;
    let out = SweepOutput {
        csv: &args.output,
        slope_no_intercept: result.slope_no_intercept,
        f_statistic: result.f_statistic,
        residuals: &result.residuals,
        points: &result.points,
    };
    write_json(&with_suffix(&args.output, ".summary.json"), &Artifact::new("sweep", args, Some(seed), out))?;
    if result.slope_no_intercept.is_none() {
        return Err(CliError::Refusal("every grid point failed; see the summary for errors".into()).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateOutput {
    /// √((1 + (N − 1)ρ)/N), the expected ratio for Gaussian trades.
    gaussian_reference: f64,
    result: SimResult,
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    let config = SimConfig {
        n_alphas: args.n,
        n_periods: 2,
        n_instruments: args.instruments,
        target: FactorTarget::Uniform { rho: args.rho },
        master_seed: seed.0,
        n_paths: args.paths,
    };
    let result = run_crossing(&config)?;
    let n = args.n as f64;
    let out = SimulateOutput {
        gaussian_reference: ((1.0 + (n - 1.0) * args.rho) / n).sqrt(),
        result,
    };
    write_json(&args.output, &Artifact::new("simulate", args, Some(seed), out))
}
