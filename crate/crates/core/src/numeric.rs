//! Shared numerical helpers: compensated summation and the standard normal
//! quantile used for confidence intervals.

/// Neumaier-compensated sum. Statistical reductions go through this so the
/// identities checked in tests hold to a few ulps regardless of sample size.
pub(crate) fn compensated_sum<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Entries of the empirical covariance matrix of `(a, b)`: `(var_a, var_b,
/// cov_ab)`, with the plug-in `1/n` normalization.
pub(crate) fn covariance_parts(a: &[f64], b: &[f64], mean_a: f64, mean_b: f64) -> (f64, f64, f64) {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let var_a = compensated_sum(a.iter().map(|x| (x - mean_a) * (x - mean_a))) / n;
    let var_b = compensated_sum(b.iter().map(|x| (x - mean_b) * (x - mean_b))) / n;
    let cov = compensated_sum(a.iter().zip(b).map(|(x, y)| (x - mean_a) * (y - mean_b))) / n;
    (var_a, var_b, cov)
}

/// Inverse of the standard normal CDF (Acklam's rational approximation,
/// relative error below 1.2e-9 over (0, 1)).
pub(crate) fn standard_normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability must lie in (0, 1)");

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        // 1 + 1e-16 repeated: naive summation loses the small terms.
        let xs = [1.0e16, 1.0, -1.0e16, 1.0, 1.0];
        assert_eq!(compensated_sum(xs.iter().copied()), 3.0);
    }

    #[test]
    fn normal_quantile_matches_reference_values() {
        assert_relative_eq!(
            standard_normal_quantile(0.975),
            1.959963984540054,
            max_relative = 1e-8
        );
        assert_relative_eq!(
            standard_normal_quantile(0.95),
            1.6448536269514722,
            max_relative = 1e-8
        );
        assert_relative_eq!(
            standard_normal_quantile(0.995),
            2.5758293035489004,
            max_relative = 1e-8
        );
        assert_relative_eq!(
            standard_normal_quantile(0.9995),
            3.2905267314919255,
            max_relative = 1e-8
        );
        assert_eq!(standard_normal_quantile(0.5), 0.0);
    }

    #[test]
    fn normal_quantile_is_antisymmetric() {
        for &p in &[0.01, 0.1, 0.3, 0.45] {
            assert_relative_eq!(
                standard_normal_quantile(p),
                -standard_normal_quantile(1.0 - p),
                max_relative = 1e-9
            );
        }
    }
}
