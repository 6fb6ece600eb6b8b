//! Ground-truth oracles for the additive benchmark `Y = X1 + X2` with
//! `X1 ~ Exp(1)`, `X2 ~ -Exp(1)`: closed-form indices, closed-form and
//! quadrature CTE, and a numerical verification that the contrast definition
//! of the index agrees with its conditional-tail-expectation rewriting.
//!
//! `Y` is a standard Laplace variable and both conditional laws are shifted
//! exponentials, so every ingredient of both sides of the identity has an
//! explicit form that can be integrated independently of the estimator.

use crate::estimator::index_from_cte_parts;
use crate::{Error, Result};

/// Relative tolerance of the adaptive quadrature.
const QUAD_REL_TOL: f64 = 1e-10;
/// Endpoint sliver dropped from improper integrals and patched with a
/// one-point rectangle; integrable log singularities cost below 1e-10.
const ENDPOINT_TRIM: f64 = 1e-12;
const MAX_DEPTH: u32 = 60;
/// Global cap on subdivision steps per integral. Smooth integrands with
/// integrable endpoint singularities need a few thousand; an integrand that
/// exhausts this is not converging.
const MAX_SUBDIVISIONS: u64 = 1_000_000;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Closed-form index of `X1` for the additive benchmark; branches at
/// `alpha = 1/2` (the upper branch includes it).
pub fn analytic_s_x1(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let value = if alpha >= 0.5 {
        let denom = (1.0 - alpha) * (1.0 - (2.0 * (1.0 - alpha)).ln());
        (denom + alpha * alpha.ln()) / denom
    } else {
        let denom = alpha * (1.0 - (2.0 * alpha).ln());
        (denom + alpha * alpha.ln()) / denom
    };
    Ok(value)
}

/// Closed-form index of `X2` for the additive benchmark.
pub fn analytic_s_x2(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let value = if alpha >= 0.5 {
        let denom = (1.0 - alpha) * (1.0 - (2.0 * (1.0 - alpha)).ln());
        (denom + (1.0 - alpha) * (1.0 - alpha).ln()) / denom
    } else {
        let denom = alpha * (1.0 - (2.0 * alpha).ln());
        (denom + (1.0 - alpha) * (1.0 - alpha).ln()) / denom
    };
    Ok(value)
}

/// Closed-form conditional tail expectation of the unit-rate exponential:
/// `CTE_alpha(Exp(1)) = 1 - ln(1 - alpha)`.
pub fn exponential_cte(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(1.0 - (1.0 - alpha).ln())
}

/// Quantile function of the standard Laplace law, the distribution of the
/// additive benchmark output.
pub fn standard_laplace_quantile(u: f64) -> f64 {
    if u < 0.5 {
        (2.0 * u).ln()
    } else {
        -(2.0 * (1.0 - u)).ln()
    }
}

/// Adaptive Simpson quadrature with Richardson extrapolation. `tol` is an
/// absolute tolerance on the whole interval; it is halved with each split.
/// `budget` bounds the total number of subdivisions across the whole call
/// tree so a hostile integrand cannot explore it exhaustively.
#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    budget: &mut u64,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure(format!(
            "subdivision limit reached on [{a}, {b}] with residual {delta:e}"
        )));
    }
    if *budget == 0 {
        return Err(Error::QuadratureFailure(
            "subdivision budget exhausted".into(),
        ));
    }
    *budget -= 1;
    let l = adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, budget)?;
    let r = adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, budget)?;
    Ok(l + r)
}

/// Integrate `f` over `[a, b]` to relative tolerance `QUAD_REL_TOL`.
fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidParameter(format!(
            "integration bounds must be finite with a < b, got [{a}, {b}]"
        )));
    }
    // Coarse composite pass to set the absolute tolerance scale; guards
    // against an accidentally tiny first Simpson estimate.
    let mut scale = 0.0;
    let pieces = 16;
    for i in 0..pieces {
        let x = a + (b - a) * (i as f64 + 0.5) / pieces as f64;
        scale += f(x).abs();
    }
    scale = scale * (b - a) / pieces as f64;
    let tol = QUAD_REL_TOL * scale.max(f64::MIN_POSITIVE.sqrt());

    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut budget = MAX_SUBDIVISIONS;
    adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, MAX_DEPTH, &mut budget)
}

/// Integrate `f` over the open unit interval, trimming `ENDPOINT_TRIM` at
/// each end and patching each sliver with a one-point rectangle so integrable
/// endpoint singularities stay within tolerance.
fn integrate_unit<F: Fn(f64) -> f64>(f: &F) -> Result<f64> {
    integrate_trimmed(f, 0.0, 1.0)
}

fn integrate_trimmed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<f64> {
    let lo = a + ENDPOINT_TRIM;
    let hi = b - ENDPOINT_TRIM;
    let core = integrate(f, lo, hi)?;
    Ok(core + ENDPOINT_TRIM * f(lo) + ENDPOINT_TRIM * f(hi))
}

/// `CTE_alpha` of the law with the given quantile function, by quadrature of
/// `(1/(1-alpha)) * integral_alpha^1 quantile_fn(u) du`.
pub fn quadrature_cte<F: Fn(f64) -> f64>(quantile_fn: F, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let upper = 1.0 - ENDPOINT_TRIM;
    let core = integrate(&quantile_fn, alpha, upper)?;
    let tail = ENDPOINT_TRIM * quantile_fn(upper);
    Ok((core + tail) / (1.0 - alpha))
}

/// Both sides of the identity between the contrast definition of the index
/// and its CTE rewriting, for the additive benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CteIdentityCheck {
    /// Index from the contrast definition: quadrature of the pinball risk,
    /// unconditional and conditional.
    pub contrast_side: f64,
    /// Index from the CTE form: quadrature of the tail means.
    pub cte_side: f64,
}

/// Pinball loss `(y - theta)(alpha - 1{y <= theta})`.
fn pinball(alpha: f64, y: f64, theta: f64) -> f64 {
    let indicator = if y <= theta { 1.0 } else { 0.0 };
    (y - theta) * (alpha - indicator)
}

/// Evaluate both routes to `S_{X_i}(alpha)` for the additive benchmark,
/// `input_index` being 1 or 2 (one-based).
///
/// The conditional laws are shifted exponentials: `Y | X1 = x ~ x - Exp(1)`
/// with alpha-quantile `x + ln(alpha)`, and `Y | X2 = x ~ x + Exp(1)` with
/// alpha-quantile `x - ln(1 - alpha)`. The conditional pinball risk at its
/// minimizer and the conditional upper-tail product are explicit in `x`, and
/// the outer expectations over `X_i` are done by quadrature through the
/// inverse-CDF substitution.
pub fn verify_cte_identity(alpha: f64, input_index: usize) -> Result<CteIdentityCheck> {
    check_alpha(alpha)?;
    if input_index != 1 && input_index != 2 {
        return Err(Error::InvalidParameter(format!(
            "input index must be 1 or 2, got {input_index}"
        )));
    }

    // Contrast side: min_theta E[pinball] via quadrature over the Laplace law
    // at the closed-form minimizer, minus the expected conditional minimum.
    let theta_star = standard_laplace_quantile(alpha);
    let min_risk = integrate_unit(&|u| pinball(alpha, standard_laplace_quantile(u), theta_star))?;

    // E[ pinball(Y; theta_i(X_i)) | X_i = x ] at the conditional minimizer.
    // For a shifted exponential both partial expectations are explicit:
    //   i = 1: alpha(-ln a - 1 + a) + (1 - a) a        (independent of x)
    //   i = 2: alpha(1 - a) + (1 - a)(-ln(1 - a) - a)
    let cond_min_risk = match input_index {
        1 => {
            let m = |_x: f64| alpha * (-alpha.ln() - 1.0 + alpha) + (1.0 - alpha) * alpha;
            integrate_unit(&|v| m(-(1.0 - v).ln()))?
        }
        _ => {
            let m = |_x: f64| {
                alpha * (1.0 - alpha) + (1.0 - alpha) * (-(1.0 - alpha).ln() - alpha)
            };
            integrate_unit(&|v| m(v.ln()))?
        }
    };
    let contrast_side = (min_risk - cond_min_risk) / min_risk;

    // CTE side: 1 - (E[Y | Y > q_alpha(Y | X_i)] - E[Y]) / (CTE_alpha(Y) - E[Y]),
    // with E[Y 1{Y > q_alpha(Y | X_i = x)}] explicit in x and P(exceed) = 1 - alpha.
    let mean_y = integrate_unit(&standard_laplace_quantile)?;
    let cte = quadrature_cte(standard_laplace_quantile, alpha)?;
    let tail_product = match input_index {
        1 => {
            let g = |x: f64| x * (1.0 - alpha) - 1.0 + alpha - alpha * alpha.ln();
            integrate_unit(&|v| g(-(1.0 - v).ln()))?
        }
        _ => {
            let g = |x: f64| {
                x * (1.0 - alpha) + (1.0 - alpha) * (1.0 - (1.0 - alpha).ln())
            };
            integrate_unit(&|v| g(v.ln()))?
        }
    };
    let cond_tail_mean = tail_product / (1.0 - alpha);
    let cte_side = index_from_cte_parts(cond_tail_mean, cte, mean_y)?;

    Ok(CteIdentityCheck {
        contrast_side,
        cte_side,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // Truth column of the additive benchmark, frozen from the closed forms
    // evaluated at high precision.
    const TABLE: [(f64, f64, f64); 5] = [
        (0.05, 0.0929129184562113, 0.704906136883233),
        (0.10, 0.1175934548884593, 0.6366096175724265),
        (0.50, 0.3068528194400547, 0.3068528194400547),
        (0.70, 0.4491478548116372, 0.2031027370817101),
        (0.99, 0.7974392122355467, 0.0624697439529415),
    ];

    #[test]
    fn closed_forms_match_frozen_values() {
        for &(alpha, s1, s2) in &TABLE {
            assert_relative_eq!(analytic_s_x1(alpha).unwrap(), s1, max_relative = 1e-12);
            assert_relative_eq!(analytic_s_x2(alpha).unwrap(), s2, max_relative = 1e-12);
        }
    }

    #[test]
    fn indices_coincide_at_one_half() {
        assert_eq!(
            analytic_s_x1(0.5).unwrap(),
            analytic_s_x2(0.5).unwrap()
        );
    }

    #[test]
    fn alpha_bounds_are_rejected() {
        for f in [analytic_s_x1, analytic_s_x2, exponential_cte] {
            assert!(f(0.0).is_err());
            assert!(f(1.0).is_err());
            assert!(f(-0.1).is_err());
        }
    }

    #[test]
    fn branches_join_continuously_at_one_half() {
        let eps = 1e-6;
        for f in [analytic_s_x1, analytic_s_x2] {
            let below = f(0.5 - eps).unwrap();
            let at = f(0.5).unwrap();
            assert_abs_diff_eq!(below, at, epsilon = 1e-4);
        }
    }

    #[test]
    fn indices_map_into_unit_interval() {
        for k in 1..200 {
            let alpha = k as f64 / 200.0;
            for f in [analytic_s_x1, analytic_s_x2] {
                let s = f(alpha).unwrap();
                assert!((0.0..=1.0).contains(&s), "alpha={alpha}, s={s}");
            }
        }
    }

    #[test]
    fn exponential_cte_values() {
        assert_relative_eq!(
            exponential_cte(0.5).unwrap(),
            1.6931471805599453,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            exponential_cte(0.9).unwrap(),
            3.302585092994046,
            max_relative = 1e-15
        );
        assert_abs_diff_eq!(exponential_cte(1e-12).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn exponential_cte_exceeds_the_mean_and_increases() {
        let mut prev = 1.0;
        for k in 1..100 {
            let alpha = k as f64 / 100.0;
            let c = exponential_cte(alpha).unwrap();
            assert!(c > 1.0);
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn quadrature_cte_examples() {
        // Constant quantile function: CTE is that constant at every level.
        for alpha in [0.1, 0.5, 0.9] {
            assert_relative_eq!(
                quadrature_cte(|_| 4.2, alpha).unwrap(),
                4.2,
                max_relative = 1e-12
            );
        }
        // Uniform(0,1): mean of the upper half.
        assert_relative_eq!(quadrature_cte(|u| u, 0.5).unwrap(), 0.75, max_relative = 1e-10);
    }

    #[test]
    fn quadrature_cte_matches_exponential_closed_form() {
        for alpha in [0.05, 0.25, 0.5, 0.9, 0.99] {
            let byquad = quadrature_cte(|u| -(1.0 - u).ln(), alpha).unwrap();
            let exact = exponential_cte(alpha).unwrap();
            assert!(
                (byquad - exact).abs() <= 1e-9,
                "alpha={alpha}: quadrature {byquad} vs closed form {exact}"
            );
        }
    }

    #[test]
    fn non_convergent_quadrature_is_reported() {
        // Adversarial integrand that flips sign on every evaluation: the
        // Simpson residual never shrinks, so the subdivision cap is hit.
        let calls = std::cell::Cell::new(0u64);
        let wild = |_u: f64| {
            calls.set(calls.get() + 1);
            if calls.get().is_multiple_of(2) {
                1e3
            } else {
                -1e3
            }
        };
        assert!(matches!(
            quadrature_cte(wild, 0.5),
            Err(Error::QuadratureFailure(_))
        ));
    }

    #[test]
    fn identity_holds_on_the_acceptance_grid() {
        for alpha in [0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
            for input in [1, 2] {
                let check = verify_cte_identity(alpha, input).unwrap();
                assert!(
                    (check.contrast_side - check.cte_side).abs() < 1e-6,
                    "alpha={alpha}, input={input}: {} vs {}",
                    check.contrast_side,
                    check.cte_side
                );
            }
        }
    }

    #[test]
    fn identity_sides_match_the_closed_form_truth() {
        let check = verify_cte_identity(0.5, 1).unwrap();
        assert_abs_diff_eq!(check.cte_side, 0.3068528194400547, epsilon = 1e-8);
        let other = verify_cte_identity(0.5, 2).unwrap();
        assert_abs_diff_eq!(check.cte_side, other.cte_side, epsilon = 1e-8);

        for &(alpha, s1, s2) in &TABLE {
            let c1 = verify_cte_identity(alpha, 1).unwrap();
            let c2 = verify_cte_identity(alpha, 2).unwrap();
            assert_abs_diff_eq!(c1.cte_side, s1, epsilon = 1e-7);
            assert_abs_diff_eq!(c2.cte_side, s2, epsilon = 1e-7);
        }
    }

    #[test]
    fn identity_rejects_bad_inputs() {
        assert!(verify_cte_identity(0.5, 0).is_err());
        assert!(verify_cte_identity(0.5, 3).is_err());
        assert!(verify_cte_identity(0.0, 1).is_err());
    }
}
