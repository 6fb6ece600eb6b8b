//! Quantile-oriented sensitivity analysis (QOSA).
//!
//! For a model `Y = f(X_1, ..., X_k)` with independent inputs, the
//! alpha-quantile contrast index of input `X_i` measures how much knowing
//! `X_i` sharpens the alpha-quantile of `Y`. It can be rewritten through the
//! conditional tail expectation,
//!
//! ```text
//! S_i(alpha) = 1 - (E[Y | Y > q_alpha(Y | X_i)] - E[Y]) / (CTE_alpha(Y) - E[Y]),
//! ```
//!
//! which is what the estimator in [`estimator`] computes from two independent
//! Monte Carlo samples: one to fit the unconditional and conditional quantile
//! thresholds (the latter with a Gaussian-kernel conditional CDF), one to
//! average the tail indicators. Asymptotic normality of the estimator yields
//! delta-method confidence intervals.
//!
//! Module map:
//! - [`stochastics`]: seeded random streams, input distributions, the two
//!   benchmark models (additive exponential, Vasicek bond price).
//! - [`contrast`]: contrast functions (mean, median, quantile) and their
//!   empirical minimizers.
//! - [`empirical`]: empirical CDF/quantile/CTE and the kernel conditional
//!   quantile estimator.
//! - [`estimator`]: the QOSA point estimate, variance components, confidence
//!   intervals, and RMSE/coverage replication studies.
//! - [`analytic`]: closed-form oracles for the additive model, closed-form and
//!   quadrature CTE, and a numerical check of the CTE identity.

pub mod analytic;
pub mod contrast;
pub mod empirical;
mod error;
pub mod estimator;
mod numeric;
pub mod stochastics;

pub use error::{Error, Result};
