//! Posterior summaries and convergence diagnostics for [`DrawMatrix`] outputs.

use std::fmt;

use rustfft::{num_complex::Complex, FftNum, FftPlanner};
use thiserror::Error;

use crate::real::Real;
use crate::samplers::{ColumnKind, DrawMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagnosticsError {
    #[error("no retained draws to summarize")]
    EmptyDraws,
}

/// A diagnostic that may not be computable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diagnostic<T> {
    Value(T),
    /// Zero variance, so the statistic is undefined.
    Degenerate,
    /// Too few chains or draws.
    InsufficientDraws,
}

impl<T: Copy> Diagnostic<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            Diagnostic::Value(v) => Some(*v),
            _ => None,
        }
    }
}

impl<T: fmt::Display> fmt::Display for Diagnostic<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Value(v) => write!(f, "{v}"),
            Diagnostic::Degenerate => f.write_str("degenerate"),
            Diagnostic::InsufficientDraws => f.write_str("unavailable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary<T = f64> {
    pub name: String,
    pub is_count: bool,
    /// Draws with a defined value (derived ratios can be undefined).
    pub defined: usize,
    pub mean: T,
    pub sd: T,
    pub q025: T,
    pub q50: T,
    pub q975: T,
    pub ess: Diagnostic<T>,
    pub split_rhat: Diagnostic<T>,
    pub mcse: Diagnostic<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary<T = f64> {
    pub params: Vec<ParamSummary<T>>,
    pub total_draws: usize,
}

impl<T> PosteriorSummary<T> {
    pub fn get(&self, name: &str) -> Option<&ParamSummary<T>> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Lower nearest-rank quantile of sorted values; `q = 0` gives the minimum.
pub fn quantile_sorted<T: Real>(sorted: &[T], q: f64) -> T {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let n = sorted.len();
    // The slack keeps q * n from rounding just above an integer.
    let rank = (q * n as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

fn sorted_sum<T: Real>(sorted: &[T]) -> T {
    sorted.iter().copied().sum()
}

/// Effective sample size of one chain via Geyer's initial monotone sequence.
/// `None` when the chain has zero variance.
fn chain_ess<T: Real + FftNum>(x: &[T], planner: &mut FftPlanner<T>) -> Option<T> {
    let n = x.len();
    let nf = T::count(n as u64);
    let mean = x.iter().copied().sum::<T>() / nf;
    let size = 2 * n.next_power_of_two();
    let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v - mean, T::zero())).collect();
    buf.resize(size, Complex::new(T::zero(), T::zero()));
    planner.plan_fft_forward(size).process(&mut buf);
    for c in &mut buf {
        *c = Complex::new(c.norm_sqr(), T::zero());
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let acov0 = buf[0].re;
    if !(acov0 > T::zero()) {
        return None;
    }
    let rho = |k: usize| if k < n { buf[k].re / acov0 } else { T::zero() };
    let mut tau = -T::one();
    let mut prev = T::infinity();
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = rho(2 * m) + rho(2 * m + 1);
        if pair < T::zero() {
            break;
        }
        let pair = pair.min(prev);
        tau += T::lit(2.0) * pair;
        prev = pair;
        m += 1;
    }
    Some(nf / tau.max(T::lit(1.0) / nf))
}

/// ESS summed over chains, clamped to the number of draws.
pub fn effective_sample_size<T: Real + FftNum>(chains: &[Vec<T>]) -> Diagnostic<T> {
    let total: usize = chains.iter().map(Vec::len).sum();
    if chains.iter().any(|c| c.len() < 4) {
        return Diagnostic::InsufficientDraws;
    }
    let mut planner = FftPlanner::new();
    let mut ess = T::zero();
    let mut any_variance = false;
    for c in chains {
        match chain_ess(c, &mut planner) {
            Some(e) => {
                ess += e;
                any_variance = true;
            }
            // A stuck chain still holds one draw's worth of information.
            None => ess += T::one(),
        }
    }
    if !any_variance {
        return Diagnostic::Degenerate;
    }
    Diagnostic::Value(ess.min(T::count(total as u64)))
}

/// Split-R̂: each chain is halved and within/between variances compared.
pub fn split_rhat<T: Real>(chains: &[Vec<T>]) -> Diagnostic<T> {
    if chains.len() < 2 || chains.iter().any(|c| c.len() < 100) {
        return Diagnostic::InsufficientDraws;
    }
    let half = chains.iter().map(Vec::len).min().unwrap() / 2;
    let mut means = Vec::new();
    let mut vars = Vec::new();
    for c in chains {
        let n = c.len();
        for part in [&c[..half], &c[n - half..]] {
            let mut sorted = part.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let lf = T::count(half as u64);
            let mean = sorted_sum(&sorted) / lf;
            let var = sorted.iter().map(|&v| (v - mean).powi(2)).sum::<T>() / (lf - T::one());
            means.push(mean);
            vars.push(var);
        }
    }
    let m = T::count(means.len() as u64);
    let l = T::count(half as u64);
    let grand = means.iter().copied().sum::<T>() / m;
    let b = l / (m - T::one()) * means.iter().map(|&x| (x - grand).powi(2)).sum::<T>();
    let w = vars.iter().copied().sum::<T>() / m;
    if !(w > T::zero()) {
        return Diagnostic::Degenerate;
    }
    let var_plus = (l - T::one()) / l * w + b / l;
    Diagnostic::Value((var_plus / w).sqrt())
}

/// Summary of one parameter from its per-chain draws.
pub fn summarize_chains<T: Real + FftNum>(name: &str, is_count: bool, chains: &[Vec<T>]) -> Option<ParamSummary<T>> {
    let mut pooled: Vec<T> = chains.iter().flatten().copied().collect();
    if pooled.is_empty() {
        return None;
    }
    pooled.sort_by(|a, b| a.partial_cmp(b).expect("draws are not NaN"));
    let n = T::count(pooled.len() as u64);
    let mean = sorted_sum(&pooled) / n;
    let mut dev: Vec<T> = pooled.iter().map(|&v| (v - mean).powi(2)).collect();
    dev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sd = if pooled.len() > 1 { (sorted_sum(&dev) / (n - T::one())).sqrt() } else { T::zero() };
    let ess = effective_sample_size(chains);
    let mcse = match ess {
        Diagnostic::Value(e) => Diagnostic::Value(sd / e.sqrt()),
        other => other,
    };
    let split_rhat = if sd == T::zero() { Diagnostic::Degenerate } else { split_rhat(chains) };
    Some(ParamSummary {
        name: name.to_string(),
        is_count,
        defined: pooled.len(),
        mean,
        sd,
        q025: quantile_sorted(&pooled, 0.025),
        q50: quantile_sorted(&pooled, 0.5),
        q975: quantile_sorted(&pooled, 0.975),
        ess,
        split_rhat,
        mcse,
    })
}

/// Summaries of every column. Undefined draws of derived ratios are skipped.
pub fn summarize(draws: &DrawMatrix) -> Result<PosteriorSummary<f64>, DiagnosticsError> {
    if draws.total_draws() == 0 {
        return Err(DiagnosticsError::EmptyDraws);
    }
    let mut params = Vec::with_capacity(draws.names().len());
    for name in draws.names() {
        let cols = draws.column(name).expect("name listed");
        let chains: Vec<Vec<f64>> = cols.iter().map(|c| c.to_f64().into_iter().flatten().collect()).collect();
        let is_count = draws.kind(name) == Some(ColumnKind::Count);
        if let Some(s) = summarize_chains(name, is_count, &chains) {
            params.push(s);
        }
    }
    Ok(PosteriorSummary { params, total_draws: draws.total_draws() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Mean,
    Sd,
    Q025,
    Median,
    Q975,
}

impl Statistic {
    pub fn of<T: Copy>(&self, s: &ParamSummary<T>) -> T {
        match self {
            Statistic::Mean => s.mean,
            Statistic::Sd => s.sd,
            Statistic::Q025 => s.q025,
            Statistic::Median => s.q50,
            Statistic::Q975 => s.q975,
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::Mean => "mean",
            Statistic::Sd => "sd",
            Statistic::Q025 => "2.5%",
            Statistic::Median => "median",
            Statistic::Q975 => "97.5%",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceValue {
    pub param: String,
    pub stat: Statistic,
    pub expected: f64,
    pub tolerance: f64,
}

impl ReferenceValue {
    pub fn new(param: &str, stat: Statistic, expected: f64, tolerance: f64) -> Self {
        Self { param: param.to_string(), stat, expected, tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckOutcome {
    Pass,
    Fail,
    Absent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCheck {
    pub reference: ReferenceValue,
    pub observed: Option<f64>,
    pub deviation: Option<f64>,
    pub outcome: CheckOutcome,
}

impl fmt::Display for ReferenceCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.reference;
        match (self.outcome, self.observed, self.deviation) {
            (CheckOutcome::Absent, _, _) => write!(f, "{} {}: absent", r.param, r.stat),
            (outcome, Some(obs), Some(dev)) => write!(
                f,
                "{} {}: observed {obs:.4}, expected {} ± {}, deviation {dev:.4} [{}]",
                r.param,
                r.stat,
                r.expected,
                r.tolerance,
                if outcome == CheckOutcome::Pass { "pass" } else { "fail" }
            ),
            _ => unreachable!("present checks carry an observation"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub checks: Vec<ReferenceCheck>,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome == CheckOutcome::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReferenceCheck> {
        self.checks.iter().filter(|c| c.outcome != CheckOutcome::Pass)
    }
}

pub fn compare_to_reference(summary: &PosteriorSummary<f64>, reference: &[ReferenceValue]) -> ComparisonReport {
    let checks = reference
        .iter()
        .map(|r| match summary.get(&r.param) {
            None => ReferenceCheck { reference: r.clone(), observed: None, deviation: None, outcome: CheckOutcome::Absent },
            Some(s) => {
                let observed = r.stat.of(s);
                let deviation = (observed - r.expected).abs();
                let outcome = if deviation <= r.tolerance * (1.0 + 1e-12) { CheckOutcome::Pass } else { CheckOutcome::Fail };
                ReferenceCheck { reference: r.clone(), observed: Some(observed), deviation: Some(deviation), outcome }
            }
        })
        .collect();
    ComparisonReport { checks }
}
