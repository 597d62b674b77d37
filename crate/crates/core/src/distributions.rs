//! Log-space mass/density functions and random draws for the distributions
//! the reconstruction models are built from.
//!
//! Conventions:
//!
//! * `Gamma(shape, rate)`: density `b^a x^(a-1) e^(-b x) / Γ(a)`. Posterior
//!   updates of the form `Gamma(a + r, b + 1)` rely on the rate convention.
//! * `NegBin(p*, r)`: number of failures before the `r`-th success with success
//!   probability `p*`, so `E[n] = r (1 - p*) / p*`. `r` is any positive real.
//!
//! Out-of-support arguments give `-inf`, never an error.

use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution, Gamma as GammaDist};
use thiserror::Error;

use crate::real::{ln_beta, ln_choose, xlogy, Real};
use crate::RandomStream;

/// Hard ceiling on the number of support points any enumeration may visit.
pub const SUPPORT_CEILING: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("invalid {name} parameter: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("every log-weight is -inf; the model state is inconsistent")]
    AllWeightsImpossible,
    #[error("support enumeration exceeded the ceiling of {ceiling} points")]
    CapCeilingExceeded { ceiling: u64 },
}

fn check_positive<T: Real>(name: &'static str, x: T) -> Result<T, DistributionError> {
    if x.is_finite() && x > T::zero() {
        Ok(x)
    } else {
        Err(DistributionError::InvalidParameter { name, reason: format!("{x} is not a positive finite number") })
    }
}

fn check_open_unit<T: Real>(name: &'static str, x: T) -> Result<T, DistributionError> {
    if x > T::zero() && x < T::one() {
        Ok(x)
    } else {
        Err(DistributionError::InvalidParameter { name, reason: format!("{x} is not in (0, 1)") })
    }
}

/// Shape parameters of a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams<T = f64> {
    alpha: T,
    beta: T,
}

impl<T: Real> BetaParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self, DistributionError> {
        Ok(Self { alpha: check_positive("beta alpha", alpha)?, beta: check_positive("beta beta", beta)? })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn mean(&self) -> T {
        self.alpha / (self.alpha + self.beta)
    }
}

/// Gamma distribution in the (shape, rate) parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams<T = f64> {
    shape: T,
    rate: T,
}

impl<T: Real> GammaParams<T> {
    pub fn new(shape: T, rate: T) -> Result<Self, DistributionError> {
        Ok(Self { shape: check_positive("gamma shape", shape)?, rate: check_positive("gamma rate", rate)? })
    }

    pub fn shape(&self) -> T {
        self.shape
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn mean(&self) -> T {
        self.shape / self.rate
    }
}

/// Failures-before-`r`-successes negative binomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegBinParams<T = f64> {
    pstar: T,
    r: T,
}

impl<T: Real> NegBinParams<T> {
    pub fn new(pstar: T, r: T) -> Result<Self, DistributionError> {
        Ok(Self { pstar: check_open_unit("negbin p*", pstar)?, r: check_positive("negbin r", r)? })
    }

    pub fn pstar(&self) -> T {
        self.pstar
    }

    pub fn r(&self) -> T {
        self.r
    }

    /// Mean before any truncation.
    pub fn mean(&self) -> T {
        self.r * (T::one() - self.pstar) / self.pstar
    }

    pub fn variance(&self) -> T {
        self.r * (T::one() - self.pstar) / (self.pstar * self.pstar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonParam<T = f64> {
    lambda: T,
}

impl<T: Real> PoissonParam<T> {
    pub fn new(lambda: T) -> Result<Self, DistributionError> {
        Ok(Self { lambda: check_positive("poisson lambda", lambda)? })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }
}

/// Count distributions whose tails can be bounded by [`tail_cap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountDistribution<T = f64> {
    NegBin(NegBinParams<T>),
    Poisson(PoissonParam<T>),
}

impl<T: Real> CountDistribution<T> {
    pub fn log_pmf(&self, k: u64) -> T {
        match self {
            Self::NegBin(nb) => log_negbin_pmf(k, nb),
            Self::Poisson(p) => log_poisson_pmf(k, p.lambda),
        }
    }

    /// `ln pmf(k + 1) - ln pmf(k)`.
    fn log_step(&self, k: u64) -> T {
        let k = T::count(k);
        match self {
            Self::NegBin(nb) => ((k + nb.r) / (k + T::one())).ln() + (-nb.pstar).ln_1p(),
            Self::Poisson(p) => p.lambda.ln() - (k + T::one()).ln(),
        }
    }

    /// An upper bound on every pmf ratio `pmf(j + 1) / pmf(j)` for `j >= k`.
    fn ratio_bound(&self, k: u64) -> T {
        let k = T::count(k);
        match self {
            // (j + r) / (j + 1) moves monotonically towards 1.
            Self::NegBin(nb) => (T::one() - nb.pstar) * ((k + nb.r) / (k + T::one())).max(T::one()),
            Self::Poisson(p) => p.lambda / (k + T::one()),
        }
    }
}

/// `ln Bin(y; n, p)`.
pub fn log_binomial_pmf<T: Real>(y: u64, n: u64, p: T) -> T {
    if y > n {
        return T::neg_infinity();
    }
    let failures = T::count(n - y);
    let successes = T::count(y);
    ln_choose::<T>(n, y) + xlogy(successes, p) + xlogy(failures, T::one() - p)
}

/// `ln NegBin(n; p*, r)`.
pub fn log_negbin_pmf<T: Real>(n: u64, params: &NegBinParams<T>) -> T {
    let nf = T::count(n);
    let r = params.r;
    (nf + r).lgamma() - r.lgamma() - (nf + T::one()).lgamma()
        + r * params.pstar.ln()
        + xlogy(nf, T::one() - params.pstar)
}

/// `ln Poisson(k; λ)`.
pub fn log_poisson_pmf<T: Real>(k: u64, lambda: T) -> T {
    let kf = T::count(k);
    xlogy(kf, lambda) - lambda - (kf + T::one()).lgamma()
}

/// Log density of `Beta(α, β)` at `x`; `-inf` outside `[0, 1]`.
pub fn log_beta_density<T: Real>(x: T, params: &BetaParams<T>) -> T {
    if !(x >= T::zero() && x <= T::one()) {
        return T::neg_infinity();
    }
    xlogy(params.alpha - T::one(), x) + xlogy(params.beta - T::one(), T::one() - x)
        - ln_beta(params.alpha, params.beta)
}

/// Log density of `Gamma(shape, rate)` at `x`; `-inf` for negative `x`.
pub fn log_gamma_density<T: Real>(x: T, params: &GammaParams<T>) -> T {
    if !(x >= T::zero()) {
        return T::neg_infinity();
    }
    let a = params.shape;
    let b = params.rate;
    a * b.ln() - a.lgamma() + xlogy(a - T::one(), x) - b * x
}

/// Largest double strictly below 1.
const ONE_MINUS_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

/// Draw from `Beta(α, β)`, kept inside the open unit interval.
///
/// Extreme shapes (say `Beta(72, 0.1)`) round to exactly 0 or 1 in double
/// precision; the draw is clamped one ulp inside so downstream logs stay finite.
pub fn sample_beta(params: &BetaParams<f64>, rng: &mut RandomStream) -> f64 {
    let dist = BetaDist::new(params.alpha, params.beta).expect("validated beta parameters");
    dist.sample(rng).clamp(f64::MIN_POSITIVE, ONE_MINUS_ULP)
}

/// Draw from `Gamma(shape, rate)`.
pub fn sample_gamma(params: &GammaParams<f64>, rng: &mut RandomStream) -> f64 {
    let dist = GammaDist::new(params.shape, 1.0 / params.rate).expect("validated gamma parameters");
    dist.sample(rng).max(f64::MIN_POSITIVE)
}

/// Draw an index with probability proportional to `exp(logw[i])`.
pub fn sample_discrete_logweights<T: Real>(logw: &[T], rng: &mut RandomStream) -> Result<usize, DistributionError> {
    let max = logw.iter().copied().fold(T::neg_infinity(), T::max);
    if !(max > T::neg_infinity()) {
        return Err(DistributionError::AllWeightsImpossible);
    }
    let total: T = logw.iter().map(|&w| (w - max).exp()).sum();
    let target = T::lit(rng.random::<f64>()) * total;
    let mut acc = T::zero();
    let mut last_positive = 0;
    for (i, &w) in logw.iter().enumerate() {
        let mass = (w - max).exp();
        if mass > T::zero() {
            acc += mass;
            last_positive = i;
            if target < acc {
                return Ok(i);
            }
        }
    }
    // Rounding in the running sum can leave `target` a hair above `acc`.
    Ok(last_positive)
}

/// Smallest `M >= lower` such that the distribution's mass above `M` is below `eps`.
///
/// The pmf is walked forward by its ratio recurrence until a geometric bound
/// shows the remaining tail is negligible; tail masses are then accumulated
/// backwards so small terms are summed first.
pub fn tail_cap<T: Real>(dist: &CountDistribution<T>, lower: u64, eps: T) -> Result<u64, DistributionError> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(DistributionError::InvalidParameter { name: "tail_cap eps", reason: format!("{eps} is not in (0, 1)") });
    }
    let far_eps = eps * T::lit(1e-6);
    let mut log_pmf = vec![dist.log_pmf(0)];
    let mut k = 0_u64;
    let far_tail_bound = loop {
        let q = dist.ratio_bound(k);
        let lp = log_pmf[k as usize];
        if k >= lower && q < T::one() {
            let bound = lp.exp() * q / (T::one() - q);
            if bound < far_eps {
                break bound;
            }
        }
        if k + 1 >= SUPPORT_CEILING {
            return Err(DistributionError::CapCeilingExceeded { ceiling: SUPPORT_CEILING });
        }
        log_pmf.push(lp + dist.log_step(k));
        k += 1;
    };
    // tail[m] = mass strictly above m
    let mut tail = far_tail_bound;
    let mut cap = k;
    for m in (lower..k).rev() {
        tail += log_pmf[(m + 1) as usize].exp();
        if tail < eps {
            cap = m;
        } else {
            break;
        }
    }
    Ok(cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain_stream;

    fn nb(p: f64, r: f64) -> NegBinParams {
        NegBinParams::new(p, r).unwrap()
    }

    #[test]
    fn binomial_boundaries() {
        assert_eq!(log_binomial_pmf(0, 0, 0.3), 0.0);
        assert_eq!(log_binomial_pmf(71, 71, 1.0), 0.0);
        assert_eq!(log_binomial_pmf(72, 71, 0.5), f64::NEG_INFINITY);
        assert_eq!(log_binomial_pmf(1, 5, 0.0), f64::NEG_INFINITY);
        assert_eq!(log_binomial_pmf(0, 5, 0.0), 0.0);
        assert_eq!(log_binomial_pmf(4, 5, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn binomial_matches_product_form() {
        // C(n, y) p^y (1-p)^(n-y) as a product of factors, no log-gamma.
        fn product_form(y: u64, n: u64, p: f64) -> f64 {
            let mut v = 1.0;
            for i in 0..y {
                v *= (n - i) as f64 / (y - i) as f64 * p;
            }
            for _ in 0..(n - y) {
                v *= 1.0 - p;
            }
            v
        }
        for &(y, n, p) in &[(71, 74, 0.9595), (3, 10, 0.2), (0, 12, 0.7), (20, 40, 0.5)] {
            let got = log_binomial_pmf(y, n, p);
            let want = product_form(y, n, p).ln();
            assert!((got - want).abs() < 1e-10, "({y}, {n}, {p}): {got} vs {want}");
        }
    }

    #[test]
    fn negbin_geometric_case() {
        assert!((log_negbin_pmf(0, &nb(0.5, 1.0)) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn negbin_integer_r_matches_combinatorial_form() {
        for r in 1..=30_u64 {
            for n in 0..=30_u64 {
                let p = 0.37_f64;
                let want = ln_choose::<f64>(n + r - 1, n) + r as f64 * p.ln() + n as f64 * (1.0 - p).ln();
                let got = log_negbin_pmf(n, &nb(p, r as f64));
                assert!((got.exp() - want.exp()).abs() < 1e-10, "n={n} r={r}");
            }
        }
    }

    #[test]
    fn negbin_mass_and_mean() {
        let params = nb(0.3, 2.0);
        let cap = tail_cap(&CountDistribution::NegBin(params), 0, 1e-12).unwrap();
        let total: f64 = (0..=cap).map(|n| log_negbin_pmf(n, &params).exp()).sum();
        assert!(total >= 1.0 - 1e-9 && total <= 1.0 + 1e-9, "{total}");

        let params = nb(0.2, 5.0);
        let cap = tail_cap(&CountDistribution::NegBin(params), 0, 1e-14).unwrap();
        let mean: f64 = (0..=cap).map(|n| n as f64 * log_negbin_pmf(n, &params).exp()).sum();
        assert!((mean - 20.0).abs() < 1e-6, "{mean}");
        assert!((params.mean() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_closed_forms() {
        assert!((log_poisson_pmf(0, 1.0_f64) + 1.0).abs() < 1e-15);
        assert!((log_poisson_pmf(2, 2.0) - (2.0 * (-2.0f64).exp()).ln()).abs() < 1e-14);
        let dist = CountDistribution::Poisson(PoissonParam::new(16.25_f64).unwrap());
        let cap = tail_cap(&dist, 0, 1e-15).unwrap();
        let total: f64 = (0..=cap).map(|k| dist.log_pmf(k).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn tail_cap_hand_computed() {
        let poisson = CountDistribution::Poisson(PoissonParam::new(1.0).unwrap());
        // P(X <= 0) = e^-1 < 0.5 <= P(X <= 1) = 2 e^-1
        assert_eq!(tail_cap(&poisson, 0, 0.5).unwrap(), 1);
        assert_eq!(tail_cap(&poisson, 50, 0.5).unwrap(), 50);
    }

    #[test]
    fn tail_cap_is_smallest() {
        for dist in [
            CountDistribution::NegBin(nb(0.999, 1.0)),
            CountDistribution::NegBin(nb(0.016, 1.4)),
            CountDistribution::NegBin(nb(0.6, 0.3)),
            CountDistribution::Poisson(PoissonParam::new(40.0).unwrap()),
        ] {
            for eps in [1e-3, 1e-8, 1e-12] {
                let cap = tail_cap(&dist, 0, eps).unwrap();
                // Summation oracle: the upper tail computed by direct pmf evaluation.
                let tail_above = |m: u64| -> f64 { (m + 1..m + 200_000).map(|k| dist.log_pmf(k).exp()).sum() };
                assert!(tail_above(cap) < eps, "{dist:?} eps={eps} cap={cap}");
                if cap > 0 {
                    assert!(tail_above(cap - 1) >= eps * (1.0 - 1e-9), "{dist:?} eps={eps} cap={cap}");
                }
            }
        }
        // p* close to 1 keeps almost all mass at zero: P(X > m) = 0.001^(m+1).
        let cap = tail_cap(&CountDistribution::NegBin(nb(0.999, 1.0)), 0, 1e-10).unwrap();
        assert_eq!(cap, 3);
    }

    #[test]
    fn tail_cap_ceiling() {
        let dist = CountDistribution::NegBin(nb(1e-9, 5.0));
        assert_eq!(tail_cap(&dist, 0, 1e-12), Err(DistributionError::CapCeilingExceeded { ceiling: SUPPORT_CEILING }));
    }

    #[test]
    fn densities_normalize() {
        let beta = BetaParams::new(2.0, 5.0).unwrap();
        let h = 1e-5;
        let integral: f64 = (0..100_000).map(|i| log_beta_density((i as f64 + 0.5) * h, &beta).exp() * h).sum();
        assert!((integral - 1.0).abs() < 1e-6);
        let gamma = GammaParams::new(2.0, 0.5).unwrap();
        let h = 1e-3;
        let integral: f64 = (0..200_000).map(|i| log_gamma_density((i as f64 + 0.5) * h, &gamma).exp() * h).sum();
        assert!((integral - 1.0).abs() < 1e-6);
    }

    #[test]
    fn parameter_validation() {
        assert!(BetaParams::new(0.0, 1.0).is_err());
        assert!(GammaParams::new(1.0, -1.0).is_err());
        assert!(NegBinParams::new(1.0, 1.0).is_err());
        assert!(NegBinParams::new(0.5, 0.0).is_err());
        assert!(PoissonParam::new(f64::NAN).is_err());
    }

    #[test]
    fn beta_and_gamma_moments() {
        let mut rng = chain_stream(11, 0);
        let uniform = BetaParams::new(1.0, 1.0).unwrap();
        let mean = (0..100_000).map(|_| sample_beta(&uniform, &mut rng)).sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");

        let gamma = GammaParams::new(3.0, 2.0).unwrap();
        let draws: Vec<f64> = (0..100_000).map(|_| sample_gamma(&gamma, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / 1e5;
        let se = (3.0_f64 / 4.0 / 1e5).sqrt();
        assert!((mean - 1.5).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn draws_are_reproducible() {
        let beta = BetaParams::new(0.1, 0.5).unwrap();
        let gamma = GammaParams::new(0.1, 0.01).unwrap();
        let run = || {
            let mut rng = chain_stream(99, 3);
            (0..500).map(|_| (sample_beta(&beta, &mut rng), sample_gamma(&gamma, &mut rng))).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn beta_draws_stay_inside_unit_interval() {
        let mut rng = chain_stream(5, 0);
        for params in [BetaParams::new(72.0, 0.1).unwrap(), BetaParams::new(0.02, 80.0).unwrap()] {
            for _ in 0..10_000 {
                let x = sample_beta(&params, &mut rng);
                assert!(x > 0.0 && x < 1.0);
            }
        }
    }

    #[test]
    fn discrete_draws() {
        let mut rng = chain_stream(1, 0);
        for _ in 0..1000 {
            assert_eq!(sample_discrete_logweights(&[0.0, f64::NEG_INFINITY], &mut rng).unwrap(), 0);
        }
        let w = [0.25_f64.ln(), 0.75_f64.ln()];
        let hits = (0..100_000).filter(|_| sample_discrete_logweights(&w, &mut rng).unwrap() == 1).count();
        assert!((hits as f64 / 1e5 - 0.75).abs() < 0.01);
        assert_eq!(
            sample_discrete_logweights::<f64>(&[f64::NEG_INFINITY; 4], &mut rng),
            Err(DistributionError::AllWeightsImpossible)
        );
    }

    #[test]
    fn discrete_draws_are_shift_invariant() {
        let base = [0.1_f64.ln(), 0.2_f64.ln(), 0.3_f64.ln(), 0.4_f64.ln()];
        let shifted: Vec<f64> = base.iter().map(|w| w + 1000.0).collect();
        let mut rng = chain_stream(2, 0);
        let draws = 200_000;
        let mut a = [0_u64; 4];
        let mut b = [0_u64; 4];
        for _ in 0..draws {
            a[sample_discrete_logweights(&base, &mut rng).unwrap()] += 1;
            b[sample_discrete_logweights(&shifted, &mut rng).unwrap()] += 1;
        }
        // Two-sample chi-square homogeneity test, 3 dof; 99.9% critical value 16.27.
        let chi2: f64 = (0..4)
            .map(|i| {
                let pooled = (a[i] + b[i]) as f64 / 2.0;
                ((a[i] as f64 - pooled).powi(2) + (b[i] as f64 - pooled).powi(2)) / pooled
            })
            .sum();
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }

    #[test]
    fn f32_kernels_follow_f64() {
        let p64 = nb(0.178, 17.0);
        let p32 = NegBinParams::<f32>::new(0.178, 17.0).unwrap();
        for n in [0_u64, 10, 71, 150] {
            let a = log_negbin_pmf(n, &p64);
            let b = log_negbin_pmf(n, &p32) as f64;
            assert!((a - b).abs() < 1e-3 * a.abs().max(1.0));
            let a = log_binomial_pmf(71, n.max(71), 0.93_f64);
            let b = log_binomial_pmf(71, n.max(71), 0.93_f32) as f64;
            assert!((a - b).abs() < 1e-3 * a.abs().max(1.0));
        }
    }
}
