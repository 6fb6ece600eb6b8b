//! The QOSA estimator: from a paired sample to a point estimate with
//! delta-method confidence interval, plus the RMSE and coverage replication
//! studies.
//!
//! The pipeline fits thresholds on the star sample and averages indicators
//! over the first sample:
//!
//! 1. `theta_star`: empirical `alpha`-quantile of `Y*`.
//! 2. A kernel conditional-quantile fit on `(X*_i, Y*)`.
//! 3. For each first-sample row `j`,
//!    `Z_j = Y_j (1{Y_j > theta_star}/(1-alpha) - 1)` and
//!    `R_j = Y_j (1{Y_j > theta_i(X_i^j)}/(1-alpha) - 1)`.
//! 4. `s_hat = 1 - mean(R)/mean(Z)`, and
//!    `sigma^2 = (var_R - 2 cov (1-s) + (1-s)^2 var_Z) / mean_Z^2` with the
//!    empirical covariance entries plugged in.
//!
//! Conditionally on the star sample the pairs `(R_j, Z_j)` are i.i.d., which
//! is what makes the plug-in variance and the normal interval valid.
//!
//! The conditional-quantile indicator for row `j` only asks whether the
//! kernel CDF strictly left of `Y_j` has reached `alpha`, so the kernel pass
//! is shared across `alpha` levels: `estimate_qosa_multi` reuses one pass for
//! a whole table column, which is also how the replication studies keep their
//! runtime within budget.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{analytic_s_x1, analytic_s_x2};
use crate::empirical::{
    default_bandwidth, quantile_of_sorted, KernelFit, TailWeights,
};
use crate::numeric::{covariance_parts, mean, standard_normal_quantile};
use crate::stochastics::{draw_paired_sample, ModelKind, ModelSpec, PairedSample, RandomStream};
use crate::{Error, Result};

/// Below this sample size the estimator refuses to run.
pub const MIN_SAMPLE_SIZE: usize = 20;

/// Below this magnitude of `mean(Z)` the index denominator is treated as
/// degenerate (constant output: `CTE_alpha(Y) = E[Y]`).
const DEGENERATE_MEAN_Z: f64 = 1e-12;

/// Configuration of one index estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosaConfig {
    /// Quantile level in `(0, 1)`.
    pub alpha: f64,
    /// One-based input index.
    pub input_index: usize,
    /// Kernel bandwidth; `None` uses `n^{-1/5}`.
    pub bandwidth: Option<f64>,
    /// Two-sided confidence level, default `0.95`.
    pub ci_level: f64,
}

impl QosaConfig {
    pub fn new(alpha: f64, input_index: usize) -> Self {
        Self {
            alpha,
            input_index,
            bandwidth: None,
            ci_level: 0.95,
        }
    }

    fn validate(&self, input_count: usize) -> Result<()> {
        validate_alpha(self.alpha)?;
        if self.input_index == 0 || self.input_index > input_count {
            return Err(Error::InvalidParameter(format!(
                "input index must lie in 1..={input_count}, got {}",
                self.input_index
            )));
        }
        if let Some(h) = self.bandwidth {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "bandwidth must be finite and > 0, got {h}"
                )));
            }
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "confidence level must lie in (0, 1), got {}",
                self.ci_level
            )));
        }
        Ok(())
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Counters describing how the estimate was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Queries whose kernel weights all truncated to zero (nearest-neighbor
    /// fallback).
    pub kernel_fallbacks: usize,
    /// First-sample rows above their conditional threshold.
    pub conditional_exceedances: usize,
    /// First-sample rows above the unconditional threshold.
    pub unconditional_exceedances: usize,
}

/// Point estimate of one index with its variance components and interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosaEstimate {
    pub alpha: f64,
    pub input_index: usize,
    /// Bandwidth actually used for the kernel fit.
    pub bandwidth: f64,
    pub ci_level: f64,
    pub n: usize,
    /// The index estimate `S_n`.
    pub s_hat: f64,
    pub mean_r: f64,
    /// Estimated `CTE_alpha(Y) - E[Y]`.
    pub mean_z: f64,
    pub var_r: f64,
    pub var_z: f64,
    pub cov_rz: f64,
    /// Plug-in asymptotic variance of `sqrt(n) (S_n - S)`.
    pub sigma2: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub diagnostics: Diagnostics,
}

/// `Z = y (1{y > theta_star}/(1-alpha) - 1)`.
pub fn transform_z(y: f64, theta_star: f64, alpha: f64) -> f64 {
    tail_transform(y, y > theta_star, alpha)
}

/// `R = y (1{y > theta_cond}/(1-alpha) - 1)` for the conditional threshold.
pub fn transform_r(y: f64, theta_cond: f64, alpha: f64) -> f64 {
    tail_transform(y, y > theta_cond, alpha)
}

fn tail_transform(y: f64, exceeds: bool, alpha: f64) -> f64 {
    let scale = if exceeds { 1.0 / (1.0 - alpha) } else { 0.0 };
    y * (scale - 1.0)
}

/// The population-level map shared by the estimator and the oracles:
/// `S = 1 - (cte_cond_mean - mean_y) / (cte - mean_y)`.
pub fn index_from_cte_parts(cte_cond_mean: f64, cte: f64, mean_y: f64) -> Result<f64> {
    let denom = cte - mean_y;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateOutput(format!(
            "CTE equals the mean (denominator {denom}); the index is undefined"
        )));
    }
    Ok(1.0 - (cte_cond_mean - mean_y) / denom)
}

/// One input of one paired sample, prepared for estimation: the kernel pass
/// over the conditional thresholds is done, and everything that still depends
/// on `alpha` is cheap. Preparing once and estimating at several levels gives
/// bit-identical results to separate [`estimate_qosa`] calls.
#[derive(Debug, Clone)]
pub struct InputEstimator {
    input_index: usize,
    bandwidth: f64,
    n: usize,
    y: Vec<f64>,
    y_star_sorted: Vec<f64>,
    weights: Vec<TailWeights>,
    fallbacks: usize,
}

impl InputEstimator {
    /// Run the kernel pass for `input_index` (one-based): fit on the star
    /// sample, evaluate the tail weights at the first sample's covariates.
    pub fn prepare(
        sample: &PairedSample,
        input_index: usize,
        bandwidth: Option<f64>,
    ) -> Result<Self> {
        if sample.n() < MIN_SAMPLE_SIZE {
            return Err(Error::InvalidParameter(format!(
                "sample size {} is below the minimum {MIN_SAMPLE_SIZE}",
                sample.n()
            )));
        }
        if input_index == 0 || input_index > sample.input_count() {
            return Err(Error::InvalidParameter(format!(
                "input index must lie in 1..={}, got {input_index}",
                sample.input_count()
            )));
        }
        let h = match bandwidth {
            Some(h) if !(h.is_finite() && h > 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "bandwidth must be finite and > 0, got {h}"
                )));
            }
            Some(h) => h,
            None => default_bandwidth(sample.n()),
        };

        let col = input_index - 1;
        let fit = KernelFit::new(sample.x_star_column(col), sample.y_star(), h)?;
        let queries = sample.x_column(col);
        let responses = sample.y();
        let weights: Vec<TailWeights> = queries
            .par_iter()
            .zip(responses.par_iter())
            .map(|(&x, &y)| fit.tail_weights(x, y))
            .collect();
        let fallbacks = weights
            .iter()
            .filter(|w| matches!(w, TailWeights::Fallback { .. }))
            .count();

        let mut y_star_sorted = sample.y_star().to_vec();
        y_star_sorted.sort_by(f64::total_cmp);

        Ok(Self {
            input_index,
            bandwidth: h,
            n: sample.n(),
            y: sample.y().to_vec(),
            y_star_sorted,
            weights,
            fallbacks,
        })
    }

    pub fn input_index(&self) -> usize {
        self.input_index
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Estimate the index at one quantile level.
    pub fn estimate(&self, alpha: f64, ci_level: f64) -> Result<QosaEstimate> {
        validate_alpha(alpha)?;
        if !(ci_level > 0.0 && ci_level < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "confidence level must lie in (0, 1), got {ci_level}"
            )));
        }
        let n = self.n;
        let theta_star = quantile_of_sorted(&self.y_star_sorted, alpha);

        let mut r = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        let mut conditional_exceedances = 0usize;
        let mut unconditional_exceedances = 0usize;
        for j in 0..n {
            let y_j = self.y[j];
            let exceeds_cond = self.weights[j].exceeds_conditional_quantile(y_j, alpha);
            conditional_exceedances += usize::from(exceeds_cond);
            r.push(tail_transform(y_j, exceeds_cond, alpha));
            let exceeds_uncond = y_j > theta_star;
            unconditional_exceedances += usize::from(exceeds_uncond);
            z.push(tail_transform(y_j, exceeds_uncond, alpha));
        }

        if unconditional_exceedances == 0 || conditional_exceedances == 0 {
            return Err(Error::DegenerateOutput(format!(
                "empty exceedance set at alpha={alpha} (conditional: {conditional_exceedances}, \
                 unconditional: {unconditional_exceedances}); increase n or lower alpha"
            )));
        }

        let mean_r = mean(&r);
        let mean_z = mean(&z);
        if mean_z.abs() < DEGENERATE_MEAN_Z {
            return Err(Error::DegenerateOutput(format!(
                "CTE_alpha(Y) - E[Y] is {mean_z:e}; the output is (nearly) constant"
            )));
        }

        let s_hat = 1.0 - mean_r / mean_z;
        let (var_r, var_z, cov_rz) = covariance_parts(&r, &z, mean_r, mean_z);
        let one_minus_s = 1.0 - s_hat;
        let quadratic = var_r - 2.0 * cov_rz * one_minus_s + one_minus_s * one_minus_s * var_z;
        // The quadratic form is PSD; clamp the rounding residue.
        let sigma2 = (quadratic / (mean_z * mean_z)).max(0.0);

        let z_crit = standard_normal_quantile(0.5 * (1.0 + ci_level));
        let half_width = z_crit * (sigma2 / n as f64).sqrt();

        Ok(QosaEstimate {
            alpha,
            input_index: self.input_index,
            bandwidth: self.bandwidth,
            ci_level,
            n,
            s_hat,
            mean_r,
            mean_z,
            var_r,
            var_z,
            cov_rz,
            sigma2,
            ci_lo: s_hat - half_width,
            ci_hi: s_hat + half_width,
            diagnostics: Diagnostics {
                kernel_fallbacks: self.fallbacks,
                conditional_exceedances,
                unconditional_exceedances,
            },
        })
    }
}

/// Estimate the index of one input at one quantile level.
pub fn estimate_qosa(sample: &PairedSample, cfg: &QosaConfig) -> Result<QosaEstimate> {
    cfg.validate(sample.input_count())?;
    InputEstimator::prepare(sample, cfg.input_index, cfg.bandwidth)?
        .estimate(cfg.alpha, cfg.ci_level)
}

/// Estimate one input at several quantile levels, reusing a single kernel
/// pass. Fails wholesale if any level fails; use [`InputEstimator`] directly
/// for per-level error handling.
pub fn estimate_qosa_multi(
    sample: &PairedSample,
    input_index: usize,
    alphas: &[f64],
    bandwidth: Option<f64>,
    ci_level: f64,
) -> Result<Vec<QosaEstimate>> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("no quantile levels given".into()));
    }
    let prepared = InputEstimator::prepare(sample, input_index, bandwidth)?;
    alphas
        .iter()
        .map(|&alpha| prepared.estimate(alpha, ci_level))
        .collect()
}

/// Analytic index value for benchmark models that have one.
pub fn analytic_truth(model: &ModelSpec, input_index: usize, alpha: f64) -> Result<f64> {
    match model.kind() {
        ModelKind::Additive => match input_index {
            1 => analytic_s_x1(alpha),
            2 => analytic_s_x2(alpha),
            other => Err(Error::InvalidParameter(format!(
                "additive model has inputs 1 and 2, got {other}"
            ))),
        },
        other => Err(Error::NoAnalyticTruth(other.to_string())),
    }
}

/// One cell of an RMSE table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseCell {
    pub alpha: f64,
    pub input_index: usize,
    pub truth: f64,
    pub rmse: f64,
}

fn relative_rmse(estimates: &[f64], truth: f64) -> f64 {
    let m = estimates.len() as f64;
    let sum = crate::numeric::compensated_sum(estimates.iter().map(|&s| {
        let rel = (s - truth) / truth;
        rel * rel
    }));
    (sum / m).sqrt()
}

/// Relative root-mean-square error over a grid of `(input, alpha)` cells,
/// sharing samples and kernel passes across the grid. Replication `m` uses
/// the deterministic child stream `(seed, m)`.
pub fn rmse_grid(
    model: &ModelSpec,
    inputs: &[usize],
    alphas: &[f64],
    n: usize,
    replications: usize,
    seed: u64,
    bandwidth: Option<f64>,
) -> Result<Vec<RmseCell>> {
    if replications < 2 {
        return Err(Error::InvalidParameter(format!(
            "an RMSE study needs at least 2 replications, got {replications}"
        )));
    }
    let mut truths = Vec::new();
    for &input in inputs {
        for &alpha in alphas {
            let truth = analytic_truth(model, input, alpha)?;
            if truth == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "analytic index is zero at alpha={alpha}; relative error undefined"
                )));
            }
            truths.push((input, alpha, truth));
        }
    }

    let base = RandomStream::new(seed);
    // Per replication: one sample, one kernel pass per input, one cheap
    // estimate per alpha. Estimates land in (replication, cell) order.
    let per_rep: Vec<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|m| -> Result<Vec<f64>> {
            let mut stream = base.child(m as u64);
            let sample = draw_paired_sample(model, &mut stream, n);
            let mut cells = Vec::with_capacity(inputs.len() * alphas.len());
            for &input in inputs {
                let estimates =
                    estimate_qosa_multi(&sample, input, alphas, bandwidth, 0.95)?;
                cells.extend(estimates.iter().map(|e| e.s_hat));
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(truths.len());
    for (cell, &(input, alpha, truth)) in truths.iter().enumerate() {
        let estimates: Vec<f64> = per_rep.iter().map(|rep| rep[cell]).collect();
        out.push(RmseCell {
            alpha,
            input_index: input,
            truth,
            rmse: relative_rmse(&estimates, truth),
        });
    }
    Ok(out)
}

/// Relative RMSE of the estimator against the analytic truth over
/// `replications` independent replications.
pub fn rmse_study(
    model: &ModelSpec,
    cfg: &QosaConfig,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<f64> {
    let cells = rmse_grid(
        model,
        &[cfg.input_index],
        &[cfg.alpha],
        n,
        replications,
        seed,
        cfg.bandwidth,
    )?;
    Ok(cells[0].rmse)
}

/// Result of a confidence-interval coverage study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageOutcome {
    pub truth: f64,
    /// Fraction of replications whose interval contains the truth.
    pub coverage: f64,
    pub mean_ci_width: f64,
    pub estimates: Vec<QosaEstimate>,
}

/// Empirical coverage of the delta-method interval over `replications`
/// independent replications on child streams.
pub fn coverage_study(
    model: &ModelSpec,
    cfg: &QosaConfig,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<CoverageOutcome> {
    if replications < 20 {
        return Err(Error::InvalidParameter(format!(
            "a coverage study needs at least 20 replications, got {replications}"
        )));
    }
    let truth = analytic_truth(model, cfg.input_index, cfg.alpha)?;
    let base = RandomStream::new(seed);
    let estimates: Vec<QosaEstimate> = (0..replications)
        .into_par_iter()
        .map(|m| -> Result<QosaEstimate> {
            let mut stream = base.child(m as u64);
            let sample = draw_paired_sample(model, &mut stream, n);
            estimate_qosa(&sample, cfg)
        })
        .collect::<Result<_>>()?;

    let covered = estimates
        .iter()
        .filter(|e| e.ci_lo <= truth && truth <= e.ci_hi)
        .count();
    let widths: Vec<f64> = estimates.iter().map(|e| e.ci_hi - e.ci_lo).collect();
    Ok(CoverageOutcome {
        truth,
        coverage: covered as f64 / replications as f64,
        mean_ci_width: mean(&widths),
        estimates,
    })
}
