//! Command-line surface for quantile-oriented sensitivity analysis on the
//! built-in benchmark models.
//!
//! Every command is deterministic in `--seed`: rerunning with the same flags
//! reproduces the output byte for byte. Reports go to stdout or `--out` as
//! JSON or CSV; wall-clock timing goes to stderr. `QOSA_THREADS` caps the
//! internal thread pool (0 or unset picks the core count).
//!
//! Exit codes: 0 success, 2 invalid flags or configuration, 3 degenerate or
//! non-converging numerics, 1 I/O failure.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qosa::stochastics::ModelKind;
use qosa::Error;

use commands::{
    build_model, coverage_summary, estimate_cells, rmse_rows, CoverageConfig, EstimateConfig,
    RmseConfig, TableConfig, VasicekConfig, RMSE_ALPHAS, TABLE_ALPHAS, VASICEK_ALPHAS,
};
use report::{
    coverage_to_csv, estimate_rows_to_csv, log_duration, rmse_rows_to_csv, to_json, Digits,
    ReportDiagnostics, RunReport,
};

#[derive(Parser)]
#[command(
    name = "qosa",
    version,
    about = "Quantile-oriented sensitivity indices for benchmark stochastic models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the index of one or all inputs at a single quantile level.
    Estimate(EstimateArgs),
    /// Index table for the additive benchmark: estimate, confidence
    /// interval, analytic truth and absolute error per (level, input).
    Table(TableArgs),
    /// Relative RMSE of the estimator against the analytic truth over
    /// replicated runs of the additive benchmark.
    Rmse(RmseArgs),
    /// Index table for the Vasicek bond-price model over a level grid.
    Vasicek(VasicekArgs),
    /// Empirical coverage of the confidence interval on the additive
    /// benchmark.
    Coverage(CoverageArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Additive,
    Vasicek,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Additive => ModelKind::Additive,
            ModelArg::Vasicek => ModelKind::Vasicek,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Round CSV floats to this many decimal places (full round-trip
    /// precision when omitted).
    #[arg(long)]
    digits: Option<usize>,
}

#[derive(Debug, Clone, Args)]
struct EstimateArgs {
    /// Benchmark model.
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Quantile level in (0, 1).
    #[arg(long)]
    alpha: f64,
    /// Monte Carlo sample size per half-sample.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Random seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// One-based input index, or "all".
    #[arg(long, default_value = "all")]
    input: String,
    /// Kernel bandwidth; defaults to n^(-1/5).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Two-sided confidence level.
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    /// Initial short rate (vasicek only).
    #[arg(long, default_value_t = 0.1)]
    r0: f64,
    /// Bond maturity in years (vasicek only).
    #[arg(long, default_value_t = 1.0)]
    maturity: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
struct TableArgs {
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Kernel bandwidth; defaults to n^(-1/5).
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
struct RmseArgs {
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Independent replications (at least 2).
    #[arg(long, default_value_t = 100)]
    replications: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
struct VasicekArgs {
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated quantile levels.
    #[arg(long, value_delimiter = ',', default_values_t = VASICEK_ALPHAS)]
    alphas: Vec<f64>,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    /// Initial short rate.
    #[arg(long, default_value_t = 0.1)]
    r0: f64,
    /// Bond maturity in years.
    #[arg(long, default_value_t = 1.0)]
    maturity: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
struct CoverageArgs {
    #[arg(long, default_value_t = 5_000)]
    n: usize,
    /// Independent replications (at least 20).
    #[arg(long, default_value_t = 200)]
    replications: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// One-based input index of the additive benchmark.
    #[arg(long, default_value_t = 1)]
    input: usize,
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::DegenerateOutput(_) | Error::QuadratureFailure(_) => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn init_threads() {
    if let Ok(v) = std::env::var("QOSA_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(0) => {}
            Ok(t) => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
            Err(_) => eprintln!("warning: ignoring non-numeric QOSA_THREADS={v}"),
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(degenerate_cells) => {
            if degenerate_cells > 0 {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn emit<C: Serialize, R: Serialize>(
    report: &RunReport<C, R>,
    csv: String,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let payload = match output.format {
        FormatArg::Json => to_json(report),
        FormatArg::Csv => csv,
    };
    match &output.out {
        Some(path) => std::fs::write(path, payload)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{payload}"),
    }
    log_duration(report.command, report.duration_seconds);
    Ok(())
}

/// Runs one command; returns the number of degenerate cells (0 on clean
/// success) so `main` can pick the exit code.
fn run(command: Command) -> Result<usize, CliError> {
    match command {
        Command::Estimate(args) => {
            let start = Instant::now();
            let kind: ModelKind = args.model.into();
            let model = build_model(kind, args.r0, args.maturity)?;
            let inputs: Vec<usize> = match args.input.trim() {
                "all" => (1..=model.input_count()).collect(),
                s => {
                    let idx: usize = s.parse().map_err(|_| {
                        CliError::Usage(format!(
                            "--input must be a one-based index or \"all\", got {s:?}"
                        ))
                    })?;
                    vec![idx]
                }
            };
            let (rows, diagnostics) = estimate_cells(
                &model,
                args.n,
                args.seed,
                &inputs,
                &[args.alpha],
                args.bandwidth,
                args.ci_level,
                kind == ModelKind::Additive,
            )?;
            let report = RunReport {
                command: "estimate",
                config: EstimateConfig {
                    model: kind.to_string(),
                    alpha: args.alpha,
                    n: args.n,
                    seed: args.seed,
                    input: args.input.clone(),
                    bandwidth: args.bandwidth,
                    ci_level: args.ci_level,
                    r0: (kind == ModelKind::Vasicek).then_some(args.r0),
                    maturity: (kind == ModelKind::Vasicek).then_some(args.maturity),
                },
                results: rows,
                diagnostics,
                duration_seconds: start.elapsed().as_secs_f64(),
            };
            let csv = estimate_rows_to_csv(&report.results, Digits(args.output.digits));
            emit(&report, csv, &args.output)?;
            Ok(diagnostics.degenerate_cells)
        }
        Command::Table(args) => {
            let start = Instant::now();
            let model = build_model(ModelKind::Additive, 0.0, 1.0)?;
            let (rows, diagnostics) = estimate_cells(
                &model,
                args.n,
                args.seed,
                &[1, 2],
                &TABLE_ALPHAS,
                args.bandwidth,
                args.ci_level,
                true,
            )?;
            let report = RunReport {
                command: "table",
                config: TableConfig {
                    model: ModelKind::Additive.to_string(),
                    alphas: TABLE_ALPHAS.to_vec(),
                    n: args.n,
                    seed: args.seed,
                    bandwidth: args.bandwidth,
                    ci_level: args.ci_level,
                },
                results: rows,
                diagnostics,
                duration_seconds: start.elapsed().as_secs_f64(),
            };
            let csv = estimate_rows_to_csv(&report.results, Digits(args.output.digits));
            emit(&report, csv, &args.output)?;
            Ok(diagnostics.degenerate_cells)
        }
        Command::Vasicek(args) => {
            let start = Instant::now();
            let model = build_model(ModelKind::Vasicek, args.r0, args.maturity)?;
            let (rows, diagnostics) = estimate_cells(
                &model,
                args.n,
                args.seed,
                &[1, 2, 3],
                &args.alphas,
                args.bandwidth,
                args.ci_level,
                false,
            )?;
            let report = RunReport {
                command: "vasicek",
                config: VasicekConfig {
                    alphas: args.alphas.clone(),
                    n: args.n,
                    seed: args.seed,
                    bandwidth: args.bandwidth,
                    ci_level: args.ci_level,
                    r0: args.r0,
                    maturity: args.maturity,
                },
                results: rows,
                diagnostics,
                duration_seconds: start.elapsed().as_secs_f64(),
            };
            let csv = estimate_rows_to_csv(&report.results, Digits(args.output.digits));
            emit(&report, csv, &args.output)?;
            Ok(diagnostics.degenerate_cells)
        }
        Command::Rmse(args) => {
            let start = Instant::now();
            let rows = rmse_rows(args.n, args.replications, args.seed)?;
            let report = RunReport {
                command: "rmse",
                config: RmseConfig {
                    model: ModelKind::Additive.to_string(),
                    alphas: RMSE_ALPHAS.to_vec(),
                    n: args.n,
                    replications: args.replications,
                    seed: args.seed,
                },
                results: rows,
                diagnostics: ReportDiagnostics::default(),
                duration_seconds: start.elapsed().as_secs_f64(),
            };
            let csv = rmse_rows_to_csv(&report.results, Digits(args.output.digits));
            emit(&report, csv, &args.output)?;
            Ok(0)
        }
        Command::Coverage(args) => {
            let start = Instant::now();
            let summary = coverage_summary(
                args.n,
                args.replications,
                args.alpha,
                args.input,
                args.ci_level,
                args.seed,
            )?;
            let report = RunReport {
                command: "coverage",
                config: CoverageConfig {
                    model: ModelKind::Additive.to_string(),
                    alpha: args.alpha,
                    input: args.input,
                    n: args.n,
                    replications: args.replications,
                    ci_level: args.ci_level,
                    seed: args.seed,
                },
                results: summary,
                diagnostics: ReportDiagnostics::default(),
                duration_seconds: start.elapsed().as_secs_f64(),
            };
            let csv = coverage_to_csv(&report.results, Digits(args.output.digits));
            emit(&report, csv, &args.output)?;
            Ok(0)
        }
    }
}
