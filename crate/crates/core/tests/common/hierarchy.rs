//! Exact posteriors of the latent count under the full hierarchies, used as
//! references for the samplers. Rates are integrated analytically; the
//! remaining hyperparameter is summed (integer r) or integrated on a grid.

use tablerecon::distributions::{log_negbin_pmf, tail_cap, BetaParams, CountDistribution, GammaParams, NegBinParams};
use tablerecon::oracle::ExactPmf;
use tablerecon::real::{ln_beta, ln_choose, log_sum_exp};

fn log_beta_binomial(y: u64, n: u64, prior: &BetaParams) -> f64 {
    let (a, b) = (prior.alpha(), prior.beta());
    ln_choose::<f64>(n, y) + ln_beta(a + y as f64, b + (n - y) as f64) - ln_beta(a, b)
}

/// `ln ∫ NegBin(n; p*, r) Beta(p*; α*, β*) dp*`.
fn log_beta_negbin(n: u64, r: f64, prior: &BetaParams) -> f64 {
    let nf = n as f64;
    libm::lgamma(nf + r) - libm::lgamma(r) - libm::lgamma(nf + 1.0) + ln_beta(prior.alpha() + r, prior.beta() + nf)
        - ln_beta(prior.alpha(), prior.beta())
}

/// Support points visited without an upper bound; the tail decays polynomially.
pub const OPEN_END: u64 = 100_000;

/// `n` under `y ~ Bin(n, p)`, `n ~ NegBin(p*, r)`, `r ~ Poisson(λ)`,
/// `λ ~ Gamma`, `p, p* ~ Beta`, truncated by indicator to `y..=upper`.
pub fn single_row(
    y: u64,
    p_prior: &BetaParams,
    pstar_prior: &BetaParams,
    lambda_prior: &GammaParams,
    upper: Option<u64>,
) -> ExactPmf {
    let end = upper.unwrap_or(OPEN_END);
    // Integrating λ out of Poisson(r; λ) Gamma(λ) gives a negative binomial in r.
    let r_marginal = NegBinParams::new(lambda_prior.rate() / (lambda_prior.rate() + 1.0), lambda_prior.shape()).unwrap();
    let r_end = tail_cap(&CountDistribution::NegBin(r_marginal), 1, 1e-16).unwrap();
    let log_prior_r: Vec<f64> = (0..=r_end).map(|r| log_negbin_pmf(r, &r_marginal)).collect();
    let mut terms = Vec::with_capacity(log_prior_r.len());
    let logw = (y..=end)
        .map(|n| {
            terms.clear();
            if n == 0 {
                terms.push(log_prior_r[0]);
            }
            terms.extend((1..=r_end).map(|r| log_prior_r[r as usize] + log_beta_negbin(n, r as f64, pstar_prior)));
            log_sum_exp(&terms) + log_beta_binomial(y, n, p_prior)
        })
        .collect();
    ExactPmf::from_log_weights(y, logw).unwrap()
}

/// `n1` in the joint model with `n1 ~ NegBin(p3, r)` on `TP..=N-1`,
/// `p3 ~ Beta`, continuous `r ~ Gamma`; trapezoid rule on `ln r`.
pub fn joint_negbin(
    tp: u64,
    fp: u64,
    total: u64,
    p1_prior: &BetaParams,
    p2_prior: &BetaParams,
    p3_prior: &BetaParams,
    r_prior: &GammaParams,
) -> ExactPmf {
    let hi = (total - 1).min(total - fp);
    let (u_lo, u_hi, points) = (-60.0_f64, (r_prior.mean() * 1e3 + 1e3).ln(), 12_001_usize);
    let h = (u_hi - u_lo) / (points - 1) as f64;
    let (a, b) = (r_prior.shape(), r_prior.rate());
    let grid: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let u = u_lo + h * i as f64;
            let r = u.exp();
            let edge = if i == 0 || i + 1 == points { 0.5_f64.ln() } else { 0.0 };
            // Gamma density of r times the Jacobian dr = r du.
            (r, a * b.ln() - libm::lgamma(a) + a * u - b * r + edge + h.ln())
        })
        .collect();
    let mut terms = Vec::with_capacity(points);
    let logw = (tp..=hi)
        .map(|n1| {
            terms.clear();
            terms.extend(grid.iter().map(|&(r, w)| w + log_beta_negbin(n1, r, p3_prior)));
            log_sum_exp(&terms) + log_beta_binomial(tp, n1, p1_prior) + log_beta_binomial(fp, total - n1, p2_prior)
        })
        .collect();
    ExactPmf::from_log_weights(tp, logw).unwrap()
}
