//! Seeded random streams, input distributions, and the benchmark models that
//! produce the paired samples consumed by the estimator.
//!
//! Everything here is deterministic in the seed: two streams built from the
//! same seed emit identical sequences, and child streams are derived from
//! `(seed, index)` alone, so replication studies can run replications
//! concurrently and still be reproduced one by one.

use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::{Error, Result};

/// SplitMix64 finalizer, used to derive child seeds from `(seed, index)`.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic random source. All sampling in the crate flows through this.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream derived from the construction seed and `index`. The
    /// derivation does not depend on how much of the parent has been
    /// consumed, so `child(m)` is reproducible in isolation.
    pub fn child(&self, index: u64) -> RandomStream {
        RandomStream::new(splitmix64(self.seed ^ splitmix64(index.wrapping_add(1))))
    }

    /// Uniform draw on `[0, 1)` with 53 random bits.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }
}

/// Construct the stream for a given seed.
pub fn seed_stream(seed: u64) -> RandomStream {
    RandomStream::new(seed)
}

/// Marginal law of one model input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputDistribution {
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    NegatedExponential { rate: f64 },
}

impl InputDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "uniform bounds must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self::Uniform { lo, hi })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exponential rate must be > 0, got {rate}"
            )));
        }
        Ok(Self::Exponential { rate })
    }

    pub fn negated_exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exponential rate must be > 0, got {rate}"
            )));
        }
        Ok(Self::NegatedExponential { rate })
    }

    /// One inverse-CDF draw.
    pub fn draw(&self, stream: &mut RandomStream) -> f64 {
        let u = stream.next_uniform();
        match *self {
            Self::Uniform { lo, hi } => lo + (hi - lo) * u,
            Self::Exponential { rate } => -(1.0 - u).ln() / rate,
            Self::NegatedExponential { rate } => (1.0 - u).ln() / rate,
        }
    }
}

/// `n` i.i.d. draws from `dist`.
pub fn sample(dist: InputDistribution, stream: &mut RandomStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| dist.draw(stream)).collect()
}

/// Identity tag of a model, used by the replication studies to look up the
/// analytic reference value when one exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `Y = X1 + X2`, `X1 ~ Exp(1)`, `X2 ~ -Exp(1)`.
    Additive,
    /// Vasicek zero-coupon bond price with uniform parameters.
    Vasicek,
    /// Anything else; no analytic truth.
    Custom,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Additive => write!(f, "additive"),
            ModelKind::Vasicek => write!(f, "vasicek"),
            ModelKind::Custom => write!(f, "custom"),
        }
    }
}

type ModelMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A deterministic map together with the independent laws of its inputs.
#[derive(Clone)]
pub struct ModelSpec {
    kind: ModelKind,
    inputs: Vec<InputDistribution>,
    map: ModelMap,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("kind", &self.kind)
            .field("inputs", &self.inputs)
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    pub fn new<F>(kind: ModelKind, inputs: Vec<InputDistribution>, map: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if inputs.is_empty() {
            return Err(Error::InvalidParameter(
                "a model needs at least one input".into(),
            ));
        }
        Ok(Self {
            kind,
            inputs,
            map: Arc::new(map),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Number of inputs `k`.
    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[InputDistribution] {
        &self.inputs
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.map)(x)
    }
}

/// Two independent `n`-samples of `(X, Y = f(X))`, stored column-major so an
/// input column is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    n: usize,
    k: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    x_star: Vec<f64>,
    y_star: Vec<f64>,
}

impl PairedSample {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn input_count(&self) -> usize {
        self.k
    }

    /// Column `i` (0-based) of the first sample.
    pub fn x_column(&self, i: usize) -> &[f64] {
        &self.x[i * self.n..(i + 1) * self.n]
    }

    /// Column `i` (0-based) of the second (star) sample.
    pub fn x_star_column(&self, i: usize) -> &[f64] {
        &self.x_star[i * self.n..(i + 1) * self.n]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn y_star(&self) -> &[f64] {
        &self.y_star
    }
}

/// Draw the two-step paired sample: step one fills `(X, Y)`, step two fills
/// `(X*, Y*)` from subsequent draws of the same stream, so the two samples
/// never share randomness.
pub fn draw_paired_sample(model: &ModelSpec, stream: &mut RandomStream, n: usize) -> PairedSample {
    let k = model.input_count();
    let draw_block = |stream: &mut RandomStream| {
        let mut x = vec![0.0; n * k];
        let mut y = Vec::with_capacity(n);
        let mut row = vec![0.0; k];
        for j in 0..n {
            for (i, dist) in model.inputs.iter().enumerate() {
                let v = dist.draw(stream);
                x[i * n + j] = v;
                row[i] = v;
            }
            y.push(model.eval(&row));
        }
        (x, y)
    };
    let (x, y) = draw_block(stream);
    let (x_star, y_star) = draw_block(stream);
    PairedSample {
        n,
        k,
        x,
        y,
        x_star,
        y_star,
    }
}

/// Benchmark model `Y = X1 + X2` with `X1 ~ Exp(1)` and `X2 ~ -Exp(1)`.
pub fn additive_model() -> ModelSpec {
    ModelSpec::new(
        ModelKind::Additive,
        vec![
            InputDistribution::Exponential { rate: 1.0 },
            InputDistribution::NegatedExponential { rate: 1.0 },
        ],
        |x| x[0] + x[1],
    )
    .expect("static model is valid")
}

/// Parameters of the Vasicek short-rate model evaluated at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VasicekParams {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub r0: f64,
    pub maturity: f64,
}

impl VasicekParams {
    pub fn new(a: f64, b: f64, sigma: f64, r0: f64, maturity: f64) -> Result<Self> {
        let all_finite =
            a.is_finite() && b.is_finite() && sigma.is_finite() && r0.is_finite() && maturity.is_finite();
        if !all_finite || a < 0.0 || sigma < 0.0 || maturity <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "vasicek parameters need a >= 0, sigma >= 0, maturity > 0 and finite values, \
                 got a={a}, b={b}, sigma={sigma}, r0={r0}, maturity={maturity}"
            )));
        }
        Ok(Self {
            a,
            b,
            sigma,
            r0,
            maturity,
        })
    }
}

/// Below this mean-reversion speed the closed form is evaluated through its
/// small-`a` series; the direct formula would cancel catastrophically.
const SMALL_A: f64 = 1e-8;

/// `B - T` as a series in `a`, accurate whenever `a * T < 0.5`.
fn b_minus_t_series(a: f64, t: f64) -> f64 {
    // B - T = sum_{m>=1} (-1)^m a^m T^(m+1) / (m+1)!
    let mut term = -a * t * t / 2.0;
    let mut acc = term;
    for m in 2..30u32 {
        term *= -a * t / (m as f64 + 1.0);
        acc += term;
        if term.abs() <= acc.abs() * 1e-18 {
            break;
        }
    }
    acc
}

/// Price at time 0 of a zero-coupon bond with maturity `T`:
/// `P = A(0,T) exp(-r0 B(0,T))` with `B = (1 - e^{-aT})/a` and
/// `A = exp((b - sigma^2/(2a^2))(B - T) - sigma^2/(4a) B^2)`.
pub fn vasicek_bond_price(p: &VasicekParams) -> Result<f64> {
    let t = p.maturity;
    let s2 = p.sigma * p.sigma;

    let ln_price = if p.a < SMALL_A {
        // Limit path: B -> T and the sigma^2/a^2 terms collapse to the series
        // (B - T)/(2a^2) + B^2/(4a) = -T^3/6 + a T^4/8 - 7 a^2 T^5/120 + ...
        let bmt = b_minus_t_series(p.a, t);
        let b = t + bmt;
        let g = -t.powi(3) / 6.0 + p.a * t.powi(4) / 8.0 - 7.0 / 120.0 * p.a * p.a * t.powi(5);
        p.b * bmt - s2 * g - p.r0 * b
    } else {
        let bmt = if p.a * t < 0.5 {
            b_minus_t_series(p.a, t)
        } else {
            -(-p.a * t).exp_m1() / p.a - t
        };
        let b = t + bmt;
        let g = bmt / (2.0 * p.a * p.a) + b * b / (4.0 * p.a);
        p.b * bmt - s2 * g - p.r0 * b
    };

    let price = ln_price.exp();
    if price.is_finite() {
        Ok(price)
    } else {
        Err(Error::InvalidParameter(format!(
            "bond price is not finite for {p:?}"
        )))
    }
}

/// Vasicek benchmark: `(a, b, sigma)` uniform on `[0, 1]`, fixed `r0` and
/// maturity, output the bond price at time 0.
pub fn vasicek_model_with(r0: f64, maturity: f64) -> Result<ModelSpec> {
    if !(r0.is_finite() && maturity.is_finite() && maturity > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "vasicek model needs finite r0 and maturity > 0, got r0={r0}, maturity={maturity}"
        )));
    }
    ModelSpec::new(
        ModelKind::Vasicek,
        vec![
            InputDistribution::Uniform { lo: 0.0, hi: 1.0 },
            InputDistribution::Uniform { lo: 0.0, hi: 1.0 },
            InputDistribution::Uniform { lo: 0.0, hi: 1.0 },
        ],
        move |x| {
            let p = VasicekParams {
                a: x[0],
                b: x[1],
                sigma: x[2],
                r0,
                maturity,
            };
            vasicek_bond_price(&p).expect("uniform draws give a finite price")
        },
    )
}

/// Vasicek benchmark with the default `r0 = 0.1`, `T = 1`.
pub fn vasicek_model() -> ModelSpec {
    vasicek_model_with(0.1, 1.0).expect("defaults are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn same_seed_gives_identical_uniforms() {
        let mut a = seed_stream(42);
        let mut b = seed_stream(42);
        for _ in 0..100 {
            assert_eq!(a.next_uniform(), b.next_uniform());
        }
    }

    #[test]
    fn distinct_seeds_differ() {
        let mut a = seed_stream(1);
        let mut b = seed_stream(2);
        assert_ne!(a.next_uniform(), b.next_uniform());
    }

    #[test]
    fn child_streams_differ_from_each_other_and_parent() {
        let parent = seed_stream(42);
        let mut c0 = parent.child(0);
        let mut c1 = parent.child(1);
        let seq0: Vec<f64> = (0..16).map(|_| c0.next_uniform()).collect();
        let seq1: Vec<f64> = (0..16).map(|_| c1.next_uniform()).collect();
        assert_ne!(seq0, seq1);

        let mut p = seed_stream(42);
        let parent_seq: Vec<f64> = (0..16).map(|_| p.next_uniform()).collect();
        assert_ne!(seq0, parent_seq);
    }

    #[test]
    fn child_derivation_ignores_parent_state() {
        let mut parent = seed_stream(7);
        let before = parent.child(3);
        for _ in 0..50 {
            parent.next_uniform();
        }
        let after = parent.child(3);
        let mut a = before;
        let mut b = after;
        for _ in 0..20 {
            assert_eq!(a.next_uniform(), b.next_uniform());
        }
    }

    #[test]
    fn uniform_draws_are_in_unit_interval_with_expected_mean() {
        let dist = InputDistribution::uniform(0.0, 1.0).unwrap();
        let mut stream = seed_stream(11);
        let xs = sample(dist, &mut stream, 100_000);
        assert!(xs.iter().all(|&x| (0.0..1.0).contains(&x)));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert_abs_diff_eq!(mean, 0.5, epsilon = 0.01);
    }

    #[test]
    fn exponential_sampler_mean_and_sign() {
        let mut stream = seed_stream(12);
        let xs = sample(
            InputDistribution::exponential(1.0).unwrap(),
            &mut stream,
            100_000,
        );
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert_abs_diff_eq!(mean, 1.0, epsilon = 0.02);
        assert!(xs.iter().all(|&x| x >= 0.0));

        let ys = sample(
            InputDistribution::negated_exponential(1.0).unwrap(),
            &mut stream,
            100_000,
        );
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        assert_abs_diff_eq!(mean, -1.0, epsilon = 0.02);
        assert!(ys.iter().all(|&y| y <= 0.0));
    }

    #[test]
    fn exponential_sampler_passes_ks_check() {
        let mut stream = seed_stream(13);
        let mut xs = sample(
            InputDistribution::exponential(1.0).unwrap(),
            &mut stream,
            100_000,
        );
        xs.sort_by(|a, b| a.total_cmp(b));
        let n = xs.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = 1.0 - (-x).exp();
            let hi = (i as f64 + 1.0) / n - f;
            let lo = f - i as f64 / n;
            ks = ks.max(hi.max(lo));
        }
        assert!(ks < 0.01, "KS distance {ks} too large");
    }

    #[test]
    fn invalid_distribution_parameters_are_rejected() {
        assert!(InputDistribution::uniform(1.0, 1.0).is_err());
        assert!(InputDistribution::uniform(2.0, 1.0).is_err());
        assert!(InputDistribution::exponential(0.0).is_err());
        assert!(InputDistribution::exponential(-1.0).is_err());
        assert!(InputDistribution::negated_exponential(f64::NAN).is_err());
    }

    #[test]
    fn paired_sample_respects_model_map() {
        let model = additive_model();
        let mut stream = seed_stream(5);
        let s = draw_paired_sample(&model, &mut stream, 4);
        for j in 0..4 {
            assert_eq!(s.y()[j], s.x_column(0)[j] + s.x_column(1)[j]);
            assert_eq!(s.y_star()[j], s.x_star_column(0)[j] + s.x_star_column(1)[j]);
        }
    }

    #[test]
    fn paired_sample_is_deterministic() {
        let model = additive_model();
        let a = draw_paired_sample(&model, &mut seed_stream(9), 64);
        let b = draw_paired_sample(&model, &mut seed_stream(9), 64);
        assert_eq!(a, b);
    }

    #[test]
    fn additive_output_mean_is_near_zero() {
        let model = additive_model();
        let s = draw_paired_sample(&model, &mut seed_stream(21), 100_000);
        let mean = s.y().iter().sum::<f64>() / s.n() as f64;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 0.02);
    }

    #[test]
    fn paired_halves_look_independent() {
        let model = additive_model();
        let s = draw_paired_sample(&model, &mut seed_stream(23), 100_000);
        let n = s.n() as f64;
        let my = s.y().iter().sum::<f64>() / n;
        let ms = s.y_star().iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut vy = 0.0;
        let mut vs = 0.0;
        for j in 0..s.n() {
            let dy = s.y()[j] - my;
            let ds = s.y_star()[j] - ms;
            cov += dy * ds;
            vy += dy * dy;
            vs += ds * ds;
        }
        let corr = cov / (vy.sqrt() * vs.sqrt());
        assert!(corr.abs() < 0.02, "correlation {corr} too large");
    }

    #[test]
    fn additive_map_examples() {
        let model = additive_model();
        assert_eq!(model.eval(&[1.0, -0.5]), 0.5);
        assert_eq!(model.eval(&[0.0, 0.0]), 0.0);
        assert_eq!(model.input_count(), 2);
    }

    #[test]
    fn vasicek_price_matches_hand_evaluation() {
        // a=1, b=0.5, sigma=0.1, r0=0.1, T=1: B = 1 - 1/e, P from the closed
        // form evaluated independently at high precision.
        let p = VasicekParams::new(1.0, 0.5, 0.1, 0.1, 1.0).unwrap();
        let price = vasicek_bond_price(&p).unwrap();
        assert_relative_eq!(price, 0.7816788345793793, max_relative = 1e-12);
    }

    #[test]
    fn vasicek_price_tends_to_one_at_zero_maturity() {
        let p = VasicekParams::new(1.0, 0.5, 0.1, 0.1, 1e-12).unwrap();
        let price = vasicek_bond_price(&p).unwrap();
        assert_abs_diff_eq!(price, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn vasicek_price_with_zero_volatility() {
        // sigma = 0, a = 1, b = r0 = 0.1, T = 1: P = exp(b(B - T) - r0 B).
        let p = VasicekParams::new(1.0, 0.1, 0.0, 0.1, 1.0).unwrap();
        let b = 1.0 - (-1.0f64).exp();
        let expected = (0.1 * (b - 1.0) - 0.1 * b).exp();
        assert_relative_eq!(vasicek_bond_price(&p).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn vasicek_small_a_limit_is_finite_and_continuous() {
        // At a = 0 the price is the Merton limit exp(sigma^2 T^3/6 - r0 T).
        let merton = (0.1f64 * 0.1 / 6.0 - 0.1).exp();
        let p0 = VasicekParams::new(0.0, 0.5, 0.1, 0.1, 1.0).unwrap();
        assert_relative_eq!(vasicek_bond_price(&p0).unwrap(), merton, max_relative = 1e-12);

        // Continuity across the series/direct switch at a = 1e-8.
        let below = vasicek_bond_price(&VasicekParams::new(9e-9, 0.5, 0.1, 0.1, 1.0).unwrap()).unwrap();
        let above = vasicek_bond_price(&VasicekParams::new(2e-8, 0.5, 0.1, 0.1, 1.0).unwrap()).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-7);
        assert_relative_eq!(below, merton, max_relative = 1e-7);
    }

    #[test]
    fn vasicek_price_decreases_in_r0_and_b() {
        let base = VasicekParams::new(0.8, 0.4, 0.2, 0.1, 1.0).unwrap();
        let price = |p: &VasicekParams| vasicek_bond_price(p).unwrap();
        for delta in [1e-4, 1e-2] {
            let mut up_r0 = base;
            up_r0.r0 += delta;
            assert!(price(&up_r0) < price(&base));
            let mut up_b = base;
            up_b.b += delta;
            assert!(price(&up_b) < price(&base));
        }
    }

    #[test]
    fn vasicek_model_draws_give_finite_prices() {
        let model = vasicek_model();
        assert_eq!(model.input_count(), 3);
        assert_eq!(model.kind(), ModelKind::Vasicek);
        let v = model.eval(&[0.5, 0.5, 0.5]);
        assert!(v.is_finite() && v > 0.0);

        let s = draw_paired_sample(&model, &mut seed_stream(3), 2_000);
        assert!(s.y().iter().all(|y| y.is_finite() && *y > 0.0));
    }

    #[test]
    fn vasicek_params_validation() {
        assert!(VasicekParams::new(-1.0, 0.5, 0.1, 0.1, 1.0).is_err());
        assert!(VasicekParams::new(1.0, 0.5, -0.1, 0.1, 1.0).is_err());
        assert!(VasicekParams::new(1.0, 0.5, 0.1, 0.1, 0.0).is_err());
        assert!(VasicekParams::new(f64::NAN, 0.5, 0.1, 0.1, 1.0).is_err());
    }
}
