//! Exact posteriors of the latent count, with the binomial rates integrated
//! out analytically and all remaining parameters either fixed or summed out.
//!
//! Weights are evaluated term by term from log-gamma functions, independent
//! of the recurrences the samplers use.

use thiserror::Error;

use crate::distributions::{
    log_negbin_pmf, log_poisson_pmf, tail_cap, BetaParams, CountDistribution, DistributionError, GammaParams,
    NegBinParams,
};
use crate::real::{ln_beta, ln_choose, log_sum_exp, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("infeasible inputs: {0}")]
    InfeasibleInputs(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// A normalized pmf on the contiguous support `start..start + probs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPmf<T = f64> {
    start: u64,
    probs: Vec<T>,
    log_norm: T,
}

impl<T: Real> ExactPmf<T> {
    /// Normalize log-weights given on `start, start + 1, ...`.
    pub fn from_log_weights(start: u64, logw: Vec<T>) -> Result<Self, OracleError> {
        let log_norm = log_sum_exp(&logw);
        if !log_norm.is_finite() {
            return Err(OracleError::InfeasibleInputs("every support point has zero weight".into()));
        }
        let probs = logw.into_iter().map(|w| (w - log_norm).exp()).collect();
        Ok(Self { start, probs, log_norm })
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    /// Last support point.
    pub fn end(&self) -> u64 {
        self.start + self.probs.len() as u64 - 1
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, k: u64) -> T {
        if k < self.start {
            return T::zero();
        }
        self.probs.get((k - self.start) as usize).copied().unwrap_or_else(T::zero)
    }

    /// Log of the sum of the unnormalized weights, i.e. the log marginal
    /// likelihood of the data when every factor was a proper density.
    pub fn log_norm(&self) -> T {
        self.log_norm
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, T)> + '_ {
        self.probs.iter().enumerate().map(move |(i, &p)| (self.start + i as u64, p))
    }

    pub fn mean(&self) -> T {
        self.iter().map(|(k, p)| T::count(k) * p).sum()
    }

    /// Smallest support point whose cdf reaches `q`.
    pub fn quantile(&self, q: T) -> u64 {
        let mut acc = T::zero();
        for (k, p) in self.iter() {
            acc += p;
            if acc >= q {
                return k;
            }
        }
        self.end()
    }

    /// Total-variation distance to the empirical distribution of `draws`.
    pub fn total_variation(&self, draws: &[u64]) -> T {
        let n = T::count(draws.len() as u64);
        let mut counts = vec![0_u64; self.probs.len()];
        let mut outside = 0_u64;
        for &d in draws {
            match d.checked_sub(self.start).map(|i| i as usize) {
                Some(i) if i < counts.len() => counts[i] += 1,
                _ => outside += 1,
            }
        }
        let inside: T = self.probs.iter().zip(&counts).map(|(&p, &c)| (p - T::count(c) / n).abs()).sum();
        (inside + T::count(outside) / n) / T::lit(2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmfStatistics<T = f64> {
    pub mean: T,
    pub sd: T,
    pub q025: u64,
    pub median: u64,
    pub q975: u64,
}

pub fn pmf_statistics<T: Real>(pmf: &ExactPmf<T>) -> PmfStatistics<T> {
    let mean = pmf.mean();
    let var: T = pmf.iter().map(|(k, p)| (T::count(k) - mean).powi(2) * p).sum();
    PmfStatistics {
        mean,
        sd: var.sqrt(),
        q025: pmf.quantile(T::lit(0.025)),
        median: pmf.quantile(T::lit(0.5)),
        q975: pmf.quantile(T::lit(0.975)),
    }
}

/// `ln [C(n, y) B(α + y, β + n - y) / B(α, β)]`: the beta-binomial mass of `y`.
fn log_beta_binomial<T: Real>(y: u64, n: u64, prior: &BetaParams<T>) -> T {
    let (a, b) = (prior.alpha(), prior.beta());
    ln_choose::<T>(n, y) + ln_beta(a + T::count(y), b + T::count(n - y)) - ln_beta(a, b)
}

/// Largest `n` needed so that a prior with tail `dist` leaves at most a
/// `1e-13` share of the posterior mass unvisited, given a likelihood bounded
/// by one.
fn open_support_end<T: Real, F>(dist: &CountDistribution<T>, lower: u64, mut log_weight: F) -> Result<u64, OracleError>
where
    F: FnMut(u64) -> T,
{
    let mut eps = T::lit(1e-12);
    loop {
        let end = tail_cap(dist, lower, eps)?.max(lower + 10);
        let logw: Vec<T> = (lower..=end).map(&mut log_weight).collect();
        let mass = log_sum_exp(&logw).exp();
        let needed = (T::lit(1e-13) * mass).max(T::min_positive_value());
        if eps <= needed {
            return Ok(end);
        }
        eps = needed;
    }
}

/// Posterior pmf of `n` in the single-row model with `(p*, r)` fixed.
pub fn exact_n_single_row<T: Real>(
    y: u64,
    p_prior: &BetaParams<T>,
    nb: &NegBinParams<T>,
    upper: Option<u64>,
) -> Result<ExactPmf<T>, OracleError> {
    let log_weight = |n: u64| log_negbin_pmf(n, nb) + log_beta_binomial(y, n, p_prior);
    let end = match upper {
        Some(ub) if ub < y => {
            return Err(OracleError::InfeasibleInputs(format!("upper bound {ub} is below y = {y}")));
        }
        Some(ub) => ub,
        None => open_support_end(&CountDistribution::NegBin(*nb), y, log_weight)?,
    };
    ExactPmf::from_log_weights(y, (y..=end).map(log_weight).collect())
}

/// Prior on `n1` for [`exact_n1_joint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum N1PriorOracle<T = f64> {
    Uniform,
    PoissonFixed(T),
    /// `Poisson(λ)` with `λ ~ Gamma(shape, rate)` integrated out.
    PoissonGammaMixture(GammaParams<T>),
    NegBinFixed(NegBinParams<T>),
}

/// Posterior pmf of `n1` in the joint fixed-N model with fixed hyperparameters.
pub fn exact_n1_joint<T: Real>(
    tp: u64,
    fp: u64,
    total: u64,
    p1_prior: &BetaParams<T>,
    p2_prior: &BetaParams<T>,
    prior: &N1PriorOracle<T>,
) -> Result<ExactPmf<T>, OracleError> {
    if tp + fp > total || total < 2 {
        return Err(OracleError::InfeasibleInputs(format!("TP = {tp}, FP = {fp}, N = {total}")));
    }
    let lo = match prior {
        N1PriorOracle::NegBinFixed(_) => tp,
        _ => tp.max(1),
    };
    let hi = (total - 1).min(total - fp);
    if lo > hi {
        return Err(OracleError::InfeasibleInputs(format!("no feasible n1 for TP = {tp}, FP = {fp}, N = {total}")));
    }
    // Negative-binomial form of the Poisson-Gamma marginal.
    let mixture = match prior {
        N1PriorOracle::PoissonGammaMixture(g) => {
            Some(NegBinParams::new(g.rate() / (g.rate() + T::one()), g.shape())?)
        }
        _ => None,
    };
    let log_prior = |n1: u64| match prior {
        N1PriorOracle::Uniform => T::zero(),
        N1PriorOracle::PoissonFixed(lambda) => log_poisson_pmf(n1, *lambda),
        N1PriorOracle::PoissonGammaMixture(_) => log_negbin_pmf(n1, mixture.as_ref().unwrap()),
        N1PriorOracle::NegBinFixed(nb) => log_negbin_pmf(n1, nb),
    };
    let logw = (lo..=hi)
        .map(|n1| log_prior(n1) + log_beta_binomial(tp, n1, p1_prior) + log_beta_binomial(fp, total - n1, p2_prior))
        .collect();
    ExactPmf::from_log_weights(lo, logw)
}
