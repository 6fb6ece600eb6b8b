//! Empirical distribution machinery: CDF, generalized-inverse quantile,
//! conditional tail expectation, and the Gaussian-kernel conditional CDF and
//! quantile.
//!
//! Quantiles follow the generalized inverse `inf { y : F(y) >= alpha }`
//! throughout, so ties and flat stretches always resolve to the left
//! endpoint. The kernel estimator inverts its step function over the fitted
//! response values with the same convention, and accumulates weights in a
//! fixed order so that the defining inequalities hold exactly in floating
//! point, not just up to rounding.

use std::f64::consts::PI;

use crate::numeric::compensated_sum;
use crate::{Error, Result};

/// Weights smaller than `exp(-8.5^2 / 2) < 1e-15` relative to the peak are
/// truncated to exactly zero. Keeping covariates sorted then turns each query
/// into a window scan instead of a full pass.
pub const KERNEL_TRUNCATION_RADIUS: f64 = 8.5;

/// Fraction of `sample` at or below `y`.
pub fn empirical_cdf(sample: &[f64], y: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let count = sample.iter().filter(|&&v| v <= y).count();
    Ok(count as f64 / sample.len() as f64)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "quantile level must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Generalized-inverse quantile of an already sorted slice: the smallest
/// entry whose empirical CDF reaches `alpha`, deciding with the same division
/// the CDF performs so the two operations can never disagree.
pub(crate) fn quantile_of_sorted(sorted: &[f64], alpha: f64) -> f64 {
    let n = sorted.len();
    let (mut lo, mut hi) = (1usize, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if mid as f64 / n as f64 >= alpha {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    sorted[lo - 1]
}

/// Generalized-inverse empirical quantile: the smallest sample value `q` with
/// `empirical_cdf(sample, q) >= alpha`.
pub fn empirical_quantile(sample: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_of_sorted(&sorted, alpha))
}

/// A scaled upper-tail sum together with how many points actually exceeded
/// the threshold. A zero count signals a degenerate tail (the value is then
/// zero rather than an error, so callers can attach context).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailExpectation {
    pub value: f64,
    pub exceedance_count: usize,
}

impl TailExpectation {
    pub fn is_degenerate(&self) -> bool {
        self.exceedance_count == 0
    }
}

/// `(1 / (n (1 - alpha))) * sum_j Y_j 1{Y_j > threshold}` for an externally
/// supplied threshold.
pub fn empirical_cte_with_threshold(
    sample: &[f64],
    threshold: f64,
    alpha: f64,
) -> Result<TailExpectation> {
    check_alpha(alpha)?;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let exceedance_count = sample.iter().filter(|&&y| y > threshold).count();
    let sum = compensated_sum(sample.iter().copied().filter(|&y| y > threshold));
    let value = sum / (sample.len() as f64 * (1.0 - alpha));
    Ok(TailExpectation {
        value,
        exceedance_count,
    })
}

/// Empirical conditional tail expectation at level `alpha`: the scaled tail
/// sum above the sample's own `alpha`-quantile.
pub fn empirical_cte(sample: &[f64], alpha: f64) -> Result<TailExpectation> {
    let threshold = empirical_quantile(sample, alpha)?;
    empirical_cte_with_threshold(sample, threshold, alpha)
}

/// Standard normal density `exp(-u^2/2) / sqrt(2 pi)`.
pub fn gaussian_kernel(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

/// The default bandwidth rule `h_n = n^{-1/5}`.
pub fn default_bandwidth(n: usize) -> f64 {
    (n as f64).powf(-0.2)
}

/// Outcome of weighting the fitted points against one query covariate, split
/// at a response threshold. `below` sums weights of fitted responses strictly
/// below the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum TailWeights {
    Weighted { below: f64, total: f64 },
    /// Every weight truncated to zero; the conditional law degenerates to the
    /// nearest fitted point.
    Fallback { nearest_response: f64 },
}

impl TailWeights {
    /// Whether a response at `y` exceeds the conditional `alpha`-quantile,
    /// i.e. whether the kernel CDF strictly left of `y` already reaches
    /// `alpha`.
    pub(crate) fn exceeds_conditional_quantile(&self, y: f64, alpha: f64) -> bool {
        match *self {
            TailWeights::Weighted { below, total } => below / total >= alpha,
            TailWeights::Fallback { nearest_response } => y > nearest_response,
        }
    }
}

/// Fitted kernel conditional-distribution estimator: covariate/response pairs
/// plus a bandwidth. Immutable after construction; queries are pure.
#[derive(Debug, Clone)]
pub struct KernelFit {
    /// Pairs sorted by response (ascending): the inversion candidates.
    resp_sorted: Vec<f64>,
    cov_by_resp: Vec<f64>,
    /// The same pairs sorted by covariate (ascending): the window index.
    cov_sorted: Vec<f64>,
    resp_by_cov: Vec<f64>,
    bandwidth: f64,
}

impl KernelFit {
    pub fn new(covariates: &[f64], responses: &[f64], bandwidth: f64) -> Result<Self> {
        if covariates.is_empty() {
            return Err(Error::EmptySample);
        }
        if covariates.len() != responses.len() {
            return Err(Error::InvalidParameter(format!(
                "covariates ({}) and responses ({}) must have equal length",
                covariates.len(),
                responses.len()
            )));
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be finite and > 0, got {bandwidth}"
            )));
        }
        let mut by_resp: Vec<(f64, f64)> = responses
            .iter()
            .copied()
            .zip(covariates.iter().copied())
            .collect();
        by_resp.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut by_cov: Vec<(f64, f64)> = covariates
            .iter()
            .copied()
            .zip(responses.iter().copied())
            .collect();
        by_cov.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            resp_sorted: by_resp.iter().map(|p| p.0).collect(),
            cov_by_resp: by_resp.iter().map(|p| p.1).collect(),
            cov_sorted: by_cov.iter().map(|p| p.0).collect(),
            resp_by_cov: by_cov.iter().map(|p| p.1).collect(),
            bandwidth,
        })
    }

    pub fn len(&self) -> usize {
        self.resp_sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resp_sorted.is_empty()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Fitted responses in ascending order.
    pub fn responses(&self) -> &[f64] {
        &self.resp_sorted
    }

    /// Total kernel mass at `x` and the index of the nearest fitted point,
    /// accumulating over points in response order.
    fn total_weight_and_nearest(&self, x: f64) -> (f64, usize) {
        let inv_h = 1.0 / self.bandwidth;
        let mut total = 0.0;
        let mut nearest = 0usize;
        let mut nearest_dist = f64::INFINITY;
        for (j, &c) in self.cov_by_resp.iter().enumerate() {
            let dist = (x - c).abs();
            if dist < nearest_dist {
                nearest_dist = dist;
                nearest = j;
            }
            let u = (x - c) * inv_h;
            if u.abs() <= KERNEL_TRUNCATION_RADIUS {
                total += (-0.5 * u * u).exp();
            }
        }
        (total, nearest)
    }

    /// Window tail weights for the estimator's batch path: weights of fitted
    /// points within the truncation window of `x`, split strictly below `y`,
    /// accumulated in covariate order.
    pub(crate) fn tail_weights(&self, x: f64, y: f64) -> TailWeights {
        let h = self.bandwidth;
        let inv_h = 1.0 / h;
        let radius = KERNEL_TRUNCATION_RADIUS * h;
        let lo = self.cov_sorted.partition_point(|&c| c < x - radius);
        let hi = self.cov_sorted.partition_point(|&c| c <= x + radius);
        if lo == hi {
            return TailWeights::Fallback {
                nearest_response: self.nearest_response_outside_window(x, lo),
            };
        }
        let mut total = 0.0;
        let mut below = 0.0;
        for j in lo..hi {
            let u = (x - self.cov_sorted[j]) * inv_h;
            let w = (-0.5 * u * u).exp();
            total += w;
            below += w * f64::from(u8::from(self.resp_by_cov[j] < y));
        }
        if total > 0.0 {
            TailWeights::Weighted { below, total }
        } else {
            // Window nonempty but every weight underflowed; treat like an
            // empty window.
            let mut nearest = lo;
            let mut nearest_dist = f64::INFINITY;
            for j in lo..hi {
                let dist = (x - self.cov_sorted[j]).abs();
                if dist < nearest_dist {
                    nearest_dist = dist;
                    nearest = j;
                }
            }
            TailWeights::Fallback {
                nearest_response: self.resp_by_cov[nearest],
            }
        }
    }

    fn nearest_response_outside_window(&self, x: f64, insertion: usize) -> f64 {
        let left = insertion.checked_sub(1);
        let right = if insertion < self.cov_sorted.len() {
            Some(insertion)
        } else {
            None
        };
        let j = match (left, right) {
            (Some(l), Some(r)) => {
                if (x - self.cov_sorted[l]).abs() <= (x - self.cov_sorted[r]).abs() {
                    l
                } else {
                    r
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!("fit is never empty"),
        };
        self.resp_by_cov[j]
    }
}

/// Kernel estimate of `P(Y <= y | X = x)`:
/// `sum_j K((x - x_j)/h) 1{y_j <= y} / sum_j K((x - x_j)/h)`.
///
/// If every weight truncates to zero the nearest fitted point's indicator is
/// returned (nearest-neighbor conditional law).
pub fn kernel_conditional_cdf(fit: &KernelFit, x: f64, y: f64) -> f64 {
    let (total, nearest) = fit.total_weight_and_nearest(x);
    if total <= 0.0 {
        return f64::from(u8::from(fit.resp_sorted[nearest] <= y));
    }
    let inv_h = 1.0 / fit.bandwidth;
    let mut cum = 0.0;
    for (j, &resp) in fit.resp_sorted.iter().enumerate() {
        if resp > y {
            break;
        }
        let u = (x - fit.cov_by_resp[j]) * inv_h;
        if u.abs() <= KERNEL_TRUNCATION_RADIUS {
            cum += (-0.5 * u * u).exp();
        }
    }
    cum / total
}

/// Generalized inverse of the kernel conditional CDF at level `alpha`: the
/// smallest fitted response `y` with `kernel_conditional_cdf(fit, x, y) >=
/// alpha`. Falls back to the nearest fitted response when every weight
/// truncates to zero.
pub fn kernel_conditional_quantile(fit: &KernelFit, x: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let (total, nearest) = fit.total_weight_and_nearest(x);
    if total <= 0.0 {
        return Ok(fit.resp_sorted[nearest]);
    }
    let inv_h = 1.0 / fit.bandwidth;
    let mut cum = 0.0;
    for (j, &resp) in fit.resp_sorted.iter().enumerate() {
        let u = (x - fit.cov_by_resp[j]) * inv_h;
        if u.abs() <= KERNEL_TRUNCATION_RADIUS {
            cum += (-0.5 * u * u).exp();
        }
        if cum / total >= alpha {
            return Ok(resp);
        }
    }
    // cum replays exactly the additions that produced total, so the ratio
    // reaches 1.0 on the last point and the loop always returns.
    unreachable!("kernel CDF reaches 1 at the largest fitted response")
}
