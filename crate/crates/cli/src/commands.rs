//! Command engines: build the model, run the estimator or a study, and
//! assemble the report rows.

use serde::Serialize;

use qosa::estimator::{
    analytic_truth, coverage_study, rmse_grid, InputEstimator, QosaConfig,
};
use qosa::stochastics::{
    additive_model, draw_paired_sample, seed_stream, ModelKind, ModelSpec, vasicek_model_with,
};
use qosa::Error;

use crate::report::{
    CoverageRow, CoverageSummary, EstimateRow, ReportDiagnostics, RmseRow,
};

/// Quantile grid of the benchmark index table.
pub const TABLE_ALPHAS: [f64; 5] = [0.05, 0.1, 0.5, 0.7, 0.99];
/// Quantile grid of the RMSE table.
pub const RMSE_ALPHAS: [f64; 4] = [0.05, 0.1, 0.5, 0.7];
/// Default quantile grid of the Vasicek table.
pub const VASICEK_ALPHAS: [f64; 6] = [0.05, 0.1, 0.5, 0.7, 0.9, 0.99];

pub fn input_name(model: ModelKind, input: usize) -> String {
    match (model, input) {
        (ModelKind::Vasicek, 1) => "a".into(),
        (ModelKind::Vasicek, 2) => "b".into(),
        (ModelKind::Vasicek, 3) => "sigma".into(),
        (_, i) => format!("x{i}"),
    }
}

/// Estimate the cells `(inputs x alphas)` on one paired sample, reusing one
/// kernel pass per input. Degenerate cells become error rows.
#[allow(clippy::too_many_arguments)]
pub fn estimate_cells(
    model: &ModelSpec,
    n: usize,
    seed: u64,
    inputs: &[usize],
    alphas: &[f64],
    bandwidth: Option<f64>,
    ci_level: f64,
    with_truth: bool,
) -> Result<(Vec<EstimateRow>, ReportDiagnostics), Error> {
    let sample = draw_paired_sample(model, &mut seed_stream(seed), n);
    let mut rows = Vec::with_capacity(inputs.len() * alphas.len());
    let mut diagnostics = ReportDiagnostics::default();
    for &input in inputs {
        let prepared = InputEstimator::prepare(&sample, input, bandwidth)?;
        for &alpha in alphas {
            let truth = if with_truth {
                analytic_truth(model, input, alpha).ok()
            } else {
                None
            };
            let mut row = EstimateRow {
                input,
                input_name: input_name(model.kind(), input),
                alpha,
                estimate: None,
                truth,
                abs_error: None,
                error: None,
            };
            match prepared.estimate(alpha, ci_level) {
                Ok(est) => {
                    diagnostics.kernel_fallbacks += est.diagnostics.kernel_fallbacks;
                    row.abs_error = truth.map(|t| (est.s_hat - t).abs());
                    row.estimate = Some(est);
                }
                Err(Error::DegenerateOutput(msg)) => {
                    diagnostics.degenerate_cells += 1;
                    row.error = Some(msg);
                }
                Err(other) => return Err(other),
            }
            rows.push(row);
        }
    }
    Ok((rows, diagnostics))
}

pub fn build_model(
    kind: ModelKind,
    r0: f64,
    maturity: f64,
) -> Result<ModelSpec, Error> {
    match kind {
        ModelKind::Additive => Ok(additive_model()),
        ModelKind::Vasicek => vasicek_model_with(r0, maturity),
        ModelKind::Custom => Err(Error::InvalidParameter(
            "only the built-in benchmark models are available here".into(),
        )),
    }
}

pub fn rmse_rows(
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<Vec<RmseRow>, Error> {
    let model = additive_model();
    let cells = rmse_grid(&model, &[1, 2], &RMSE_ALPHAS, n, replications, seed, None)?;
    Ok(cells
        .into_iter()
        .map(|c| RmseRow {
            input: c.input_index,
            input_name: input_name(ModelKind::Additive, c.input_index),
            alpha: c.alpha,
            truth: c.truth,
            rmse: c.rmse,
        })
        .collect())
}

pub fn coverage_summary(
    n: usize,
    replications: usize,
    alpha: f64,
    input: usize,
    ci_level: f64,
    seed: u64,
) -> Result<CoverageSummary, Error> {
    let model = additive_model();
    let cfg = QosaConfig {
        alpha,
        input_index: input,
        bandwidth: None,
        ci_level,
    };
    let outcome = coverage_study(&model, &cfg, n, replications, seed)?;
    let rows = outcome
        .estimates
        .iter()
        .enumerate()
        .map(|(m, e)| CoverageRow {
            replication: m,
            s_hat: e.s_hat,
            ci_lo: e.ci_lo,
            ci_hi: e.ci_hi,
            covered: e.ci_lo <= outcome.truth && outcome.truth <= e.ci_hi,
        })
        .collect();
    Ok(CoverageSummary {
        truth: outcome.truth,
        coverage: outcome.coverage,
        mean_ci_width: outcome.mean_ci_width,
        replications: rows,
    })
}

/// Config echoes serialized into the reports.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateConfig {
    pub model: String,
    pub alpha: f64,
    pub n: usize,
    pub seed: u64,
    pub input: String,
    pub bandwidth: Option<f64>,
    pub ci_level: f64,
    pub r0: Option<f64>,
    pub maturity: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableConfig {
    pub model: String,
    pub alphas: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub bandwidth: Option<f64>,
    pub ci_level: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VasicekConfig {
    pub alphas: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub bandwidth: Option<f64>,
    pub ci_level: f64,
    pub r0: f64,
    pub maturity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RmseConfig {
    pub model: String,
    pub alphas: Vec<f64>,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageConfig {
    pub model: String,
    pub alpha: f64,
    pub input: usize,
    pub n: usize,
    pub replications: usize,
    pub ci_level: f64,
    pub seed: u64,
}

