//! Log normalizing constants of truncated count priors.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, gamma_ur};

use super::ln_negbin_weight;
use crate::distributions::log_poisson_pmf;

/// Below this the incomplete-function route loses relative accuracy and
/// the mass is summed term by term instead.
const TINY: f64 = 1e-250;
const MAX_TERMS: u64 = 10_000_000;

/// `ln P(lo <= X <= hi)` from the four tail probabilities, picking the
/// difference that avoids cancellation.
fn ln_between(below_lo: f64, from_lo: f64, above_hi: f64, to_hi: f64) -> f64 {
    let p = if below_lo > 0.5 {
        from_lo - above_hi
    } else if above_hi > 0.5 {
        to_hi - below_lo
    } else {
        1.0 - below_lo - above_hi
    };
    if p > TINY {
        p.ln()
    } else {
        f64::NAN
    }
}

/// `ln sum_{k=lo}^{hi} f(k)` from `ln f(lo)` and the ratios `f(k+1) / f(k)`.
/// `tail_ratio(k)` bounds every ratio from `k` on once it is below one;
/// an open range stops when the bounded remainder is negligible.
fn ln_summed<R, T>(ln_first: f64, lo: u64, hi: Option<u64>, ratio: R, tail_ratio: T) -> f64
where
    R: Fn(u64) -> f64,
    T: Fn(u64) -> f64,
{
    if ln_first == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut ln_t = ln_first;
    let mut max = ln_first;
    let mut scaled = 1.0_f64;
    let mut k = lo;
    loop {
        if hi.is_some_and(|h| k >= h) || k - lo >= MAX_TERMS {
            break;
        }
        let rho = tail_ratio(k);
        if hi.is_none() && rho < 1.0 && (ln_t - max).exp() * rho / (1.0 - rho) < 1e-17 * scaled {
            break;
        }
        ln_t += ratio(k).ln();
        k += 1;
        if ln_t > max {
            scaled = scaled * (max - ln_t).exp() + 1.0;
            max = ln_t;
        } else {
            scaled += (ln_t - max).exp();
        }
    }
    max + scaled.ln()
}

/// `ln P(lo <= X <= hi)` for `X ~ NegBin(p*, r)`; `hi = None` means no upper bound.
pub(crate) fn ln_negbin_mass_between(pstar: f64, r: f64, lo: u64, hi: Option<u64>) -> f64 {
    if r == 0.0 {
        return if lo == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let q = 1.0 - pstar;
    // P(X <= k) = I_{p*}(r, k + 1)
    let (below_lo, from_lo) = if lo == 0 { (0.0, 1.0) } else { (beta_reg(r, lo as f64, pstar), beta_reg(lo as f64, r, q)) };
    let (above_hi, to_hi) = match hi {
        None => (0.0, 1.0),
        Some(h) => (beta_reg((h + 1) as f64, r, q), beta_reg(r, (h + 1) as f64, pstar)),
    };
    if hi.is_some_and(|h| h < lo) {
        return f64::NEG_INFINITY;
    }
    let ln_p = ln_between(below_lo, from_lo, above_hi, to_hi);
    if !ln_p.is_nan() {
        return ln_p;
    }
    let ratio = |k: u64| (k as f64 + r) / (k as f64 + 1.0) * q;
    ln_summed(ln_negbin_weight(lo, pstar, r), lo, hi, ratio, |k| ratio(k).max(q))
}

/// `ln P(lo <= X <= hi)` for `X ~ Poisson(λ)`.
pub(crate) fn ln_poisson_mass_between(lambda: f64, lo: u64, hi: Option<u64>) -> f64 {
    if hi.is_some_and(|h| h < lo) {
        return f64::NEG_INFINITY;
    }
    // P(X <= k) = Q(k + 1, λ)
    let (below_lo, from_lo) = if lo == 0 { (0.0, 1.0) } else { (gamma_ur(lo as f64, lambda), gamma_lr(lo as f64, lambda)) };
    let (above_hi, to_hi) = match hi {
        None => (0.0, 1.0),
        Some(h) => (gamma_lr((h + 1) as f64, lambda), gamma_ur((h + 1) as f64, lambda)),
    };
    let ln_p = ln_between(below_lo, from_lo, above_hi, to_hi);
    if !ln_p.is_nan() {
        return ln_p;
    }
    let ratio = |k: u64| lambda / (k as f64 + 1.0);
    ln_summed(log_poisson_pmf(lo, lambda), lo, hi, ratio, ratio)
}
