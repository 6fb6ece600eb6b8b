//! Contrast functions and their empirical minimizers.
//!
//! A contrast `psi(y, theta)` is a nonnegative loss whose expected minimizer
//! over `theta` identifies a distributional feature: the squared loss picks
//! the mean, the absolute loss the median, and the pinball loss
//! `(y - theta)(alpha - 1{y <= theta})` the alpha-quantile. The quantile case
//! is what the sensitivity index is built on; the other two are kept for the
//! definitional side.

use crate::empirical::empirical_quantile;
use crate::numeric::compensated_sum;
use crate::{Error, Result};

/// Which feature the contrast targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContrastKind {
    Mean,
    Median,
    Quantile { alpha: f64 },
}

impl ContrastKind {
    /// Quantile contrast at level `alpha`, validated to lie in `(0, 1)`.
    pub fn quantile(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantile level must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(Self::Quantile { alpha })
    }
}

/// Pointwise contrast value; nonnegative for every `(y, theta)`.
pub fn contrast_eval(kind: ContrastKind, y: f64, theta: f64) -> f64 {
    match kind {
        ContrastKind::Mean => (y - theta) * (y - theta),
        ContrastKind::Median => (y - theta).abs(),
        ContrastKind::Quantile { alpha } => {
            let indicator = if y <= theta { 1.0 } else { 0.0 };
            (y - theta) * (alpha - indicator)
        }
    }
}

/// Empirical risk `(1/n) sum_j psi(Y_j, theta)`.
pub fn empirical_contrast_risk(sample: &[f64], kind: ContrastKind, theta: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let sum = compensated_sum(sample.iter().map(|&y| contrast_eval(kind, y, theta)));
    Ok(sum / sample.len() as f64)
}

/// The closed-form minimizer of the empirical risk: the sample mean for the
/// squared loss, the generalized-inverse empirical quantile otherwise. For
/// the pinball losses the empirical risk can be flat over an interval; the
/// generalized inverse returns the left endpoint.
pub fn empirical_contrast_minimizer(sample: &[f64], kind: ContrastKind) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    match kind {
        ContrastKind::Mean => Ok(compensated_sum(sample.iter().copied()) / sample.len() as f64),
        ContrastKind::Median => empirical_quantile(sample, 0.5),
        ContrastKind::Quantile { alpha } => empirical_quantile(sample, alpha),
    }
}
