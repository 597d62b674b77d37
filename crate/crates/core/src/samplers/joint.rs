//! Joint fixed-N model: `TP ~ Bin(n1, p1)`, `FP ~ Bin(N - n1, p2)` with one of
//! several priors on the diseased total `n1`.

use super::enumerate::{draw, griddy_unit};
use super::normalizer::{ln_negbin_mass_between, ln_poisson_mass_between};
use super::slice::{slice_sample, SliceTuning};
use super::{
    ln_negbin_weight, run_chains, Chain, Column, ColumnKind, CountUpdate, DrawMatrix, McmcSettings, SamplerError,
    Truncation, GRID_POINTS,
};
use crate::distributions::{
    log_beta_density, log_binomial_pmf, log_gamma_density, log_poisson_pmf, sample_beta, sample_gamma, BetaParams,
    GammaParams, NegBinParams,
};
use crate::real::{ln_beta, ln_choose};
use crate::RandomStream;

/// Prior on `n1`, truncated to the model's range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum N1Prior {
    /// Equal mass on `1..=N-1`.
    Uniform,
    /// `Poisson(λ)` on `1..=N-1` with `λ ~ Gamma`.
    TruncPoisson { lambda_prior: GammaParams },
    /// `NegBin(p3, r)` on `TP..=N-1` with `p3 ~ Beta` and continuous `r ~ Gamma`.
    TruncNegBin { p3_prior: BetaParams, r_prior: GammaParams },
    /// `Poisson(λ)` on `1..=N-1` with `λ` fixed.
    PoissonFixed { lambda: f64 },
    /// `NegBin(p3, r)` on `TP..=N-1` with both parameters fixed.
    NegBinFixed(NegBinParams),
}

impl N1Prior {
    /// Smallest `n1` the prior allows.
    pub fn lower_bound(&self, tp: u64) -> u64 {
        match self {
            N1Prior::TruncNegBin { .. } | N1Prior::NegBinFixed(_) => tp,
            _ => tp.max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointInit {
    /// Defaults to the middle of the feasible range.
    pub n1: Option<u64>,
    pub r: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub lambda: f64,
}

impl Default for JointInit {
    fn default() -> Self {
        Self { n1: None, r: 1.0, p1: 0.5, p2: 0.5, p3: 0.5, lambda: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSpec {
    pub tp: u64,
    pub fp: u64,
    pub total: u64,
    pub p1_prior: BetaParams,
    pub p2_prior: BetaParams,
    pub n1_prior: N1Prior,
    pub init: JointInit,
    pub truncation: Truncation,
    pub count_update: CountUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    pub n1: u64,
    pub p1: f64,
    pub p2: f64,
    /// Used by the negative-binomial priors only.
    pub p3: f64,
    pub r: f64,
    /// Used by the Poisson priors only.
    pub lambda: f64,
}

impl JointSpec {
    pub fn new(tp: u64, fp: u64, total: u64, p1_prior: BetaParams, p2_prior: BetaParams, n1_prior: N1Prior) -> Self {
        Self {
            tp,
            fp,
            total,
            p1_prior,
            p2_prior,
            n1_prior,
            init: JointInit::default(),
            truncation: Truncation::default(),
            count_update: CountUpdate::default(),
        }
    }

    /// Feasible range of `n1`: the prior's lower bound up to `min(N - 1, N - FP)`.
    pub fn support(&self) -> Result<(u64, u64), SamplerError> {
        if self.total < 2 {
            return Err(SamplerError::InvalidSpec(format!("N = {} must be at least 2", self.total)));
        }
        if self.tp + self.fp > self.total {
            return Err(SamplerError::InvalidSpec(format!(
                "TP + FP = {} exceeds N = {}",
                self.tp + self.fp,
                self.total
            )));
        }
        let lo = self.n1_prior.lower_bound(self.tp);
        let hi = (self.total - 1).min(self.total - self.fp);
        if lo > hi {
            return Err(SamplerError::InvalidSpec(format!(
                "no feasible n1: TP = {}, FP = {}, N = {}",
                self.tp, self.fp, self.total
            )));
        }
        Ok((lo, hi))
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        self.support()?;
        if let N1Prior::PoissonFixed { lambda } = self.n1_prior {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(SamplerError::InvalidSpec(format!("fixed lambda = {lambda} is not positive")));
            }
        }
        let i = &self.init;
        for (name, v) in [("p1", i.p1), ("p2", i.p2), ("p3", i.p3)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(SamplerError::InvalidInit(format!("{name} = {v} is not in (0, 1)")));
            }
        }
        if !(i.r > 0.0 && i.r.is_finite() && i.lambda > 0.0 && i.lambda.is_finite()) {
            return Err(SamplerError::InvalidInit(format!("r = {} and lambda = {} must be positive", i.r, i.lambda)));
        }
        let state = self.initial_state()?;
        let lp = target_log_density_joint(&state, self);
        if !lp.is_finite() {
            return Err(SamplerError::InvalidInit(format!("n1 = {} gives log density {lp}", state.n1)));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<JointState, SamplerError> {
        let (lo, hi) = self.support()?;
        let i = &self.init;
        let (p3, r) = match self.n1_prior {
            N1Prior::NegBinFixed(nb) => (nb.pstar(), nb.r()),
            _ => (i.p3, i.r),
        };
        let lambda = match self.n1_prior {
            N1Prior::PoissonFixed { lambda } => lambda,
            _ => i.lambda,
        };
        Ok(JointState { n1: i.n1.unwrap_or(lo + (hi - lo) / 2), p1: i.p1, p2: i.p2, p3, r, lambda })
    }

    /// Parameter names of the draws `fit_joint` returns.
    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self.n1_prior {
            N1Prior::TruncPoisson { .. } => &["n1", "p1", "p2", "lambda"],
            N1Prior::TruncNegBin { .. } => &["n1", "p1", "p2", "p3", "r"],
            _ => &["n1", "p1", "p2"],
        }
    }
}

/// Unnormalized log joint density of the fixed-N model at `state`.
pub fn target_log_density_joint(state: &JointState, spec: &JointSpec) -> f64 {
    let JointSpec { tp, fp, total, .. } = *spec;
    let n1 = state.n1;
    let lo = spec.n1_prior.lower_bound(tp);
    if n1 < lo || n1 + 1 > total {
        return f64::NEG_INFINITY;
    }
    let normalized = spec.truncation == Truncation::Normalized;
    let mut lp = log_binomial_pmf(tp, n1, state.p1)
        + log_binomial_pmf(fp, total - n1, state.p2)
        + log_beta_density(state.p1, &spec.p1_prior)
        + log_beta_density(state.p2, &spec.p2_prior);
    match spec.n1_prior {
        N1Prior::Uniform => {}
        N1Prior::TruncPoisson { lambda_prior } => {
            if !(state.lambda > 0.0) {
                return f64::NEG_INFINITY;
            }
            lp += log_poisson_pmf(n1, state.lambda) + log_gamma_density(state.lambda, &lambda_prior);
            if normalized {
                lp -= ln_poisson_mass_between(state.lambda, lo, Some(total - 1));
            }
        }
        N1Prior::TruncNegBin { p3_prior, r_prior } => {
            if !(state.r > 0.0) {
                return f64::NEG_INFINITY;
            }
            lp += ln_negbin_weight(n1, state.p3, state.r)
                + log_beta_density(state.p3, &p3_prior)
                + log_gamma_density(state.r, &r_prior);
            if normalized {
                lp -= ln_negbin_mass_between(state.p3, state.r, lo, Some(total - 1));
            }
        }
        N1Prior::PoissonFixed { lambda } => lp += log_poisson_pmf(n1, lambda),
        N1Prior::NegBinFixed(nb) => lp += ln_negbin_weight(n1, nb.pstar(), nb.r()),
    }
    lp
}

/// Per-spec quantities reused by every `n1` update.
#[derive(Debug, Clone)]
pub struct JointKernel {
    lo: u64,
    hi: u64,
    /// Both binomial terms with `p1`, `p2` integrated out, per feasible `n1`.
    lik_collapsed: Vec<f64>,
    /// `ln C(n1, TP) + ln C(N - n1, FP)` per feasible `n1`.
    lik_choose: Vec<f64>,
    ln_fact: Vec<f64>,
}

impl JointKernel {
    pub fn new(spec: &JointSpec) -> Result<Self, SamplerError> {
        let (lo, hi) = spec.support()?;
        let JointSpec { tp, fp, total, .. } = *spec;
        let (a1, b1) = (spec.p1_prior.alpha(), spec.p1_prior.beta());
        let (a2, b2) = (spec.p2_prior.alpha(), spec.p2_prior.beta());
        let len = (hi - lo + 1) as usize;
        let mut kernel = Self {
            lo,
            hi,
            lik_collapsed: Vec::with_capacity(len),
            lik_choose: Vec::with_capacity(len),
            ln_fact: Vec::with_capacity(len),
        };
        for n1 in lo..=hi {
            let n2 = total - n1;
            let choose = ln_choose::<f64>(n1, tp) + ln_choose::<f64>(n2, fp);
            kernel.lik_choose.push(choose);
            kernel.lik_collapsed.push(
                choose + ln_beta(a1 + tp as f64, b1 + (n1 - tp) as f64) + ln_beta(a2 + fp as f64, b2 + (n2 - fp) as f64),
            );
            kernel.ln_fact.push(libm::lgamma(n1 as f64 + 1.0));
        }
        Ok(kernel)
    }

    /// Log-weights of the `n1` conditional over the feasible range, with the
    /// rates integrated out or held at the state's values. Returns the first
    /// support point.
    pub fn n1_log_weights(&self, spec: &JointSpec, state: &JointState, update: CountUpdate, buf: &mut Vec<f64>) -> u64 {
        let collapsed = update == CountUpdate::Collapsed;
        let slope = if collapsed { 0.0 } else { (-state.p1).ln_1p() - (-state.p2).ln_1p() };
        let base = if collapsed { &self.lik_collapsed } else { &self.lik_choose };
        let support = self.lo..=self.hi;
        buf.clear();
        match spec.n1_prior {
            N1Prior::Uniform => {
                buf.extend(support.zip(base).map(|(k, &b)| b + k as f64 * slope));
            }
            N1Prior::TruncPoisson { .. } | N1Prior::PoissonFixed { .. } => {
                let ln_lambda = state.lambda.ln();
                let terms = support.zip(base.iter().zip(&self.ln_fact));
                buf.extend(terms.map(|(k, (&b, &lf))| b + k as f64 * (slope + ln_lambda) - lf));
            }
            N1Prior::TruncNegBin { .. } | N1Prior::NegBinFixed(_) => {
                let ln_q3 = (-state.p3).ln_1p();
                let mut ln_gamma_kr = libm::lgamma(self.lo as f64 + state.r);
                for (i, k) in support.enumerate() {
                    if i > 0 {
                        ln_gamma_kr += (k as f64 - 1.0 + state.r).ln();
                    }
                    buf.push(base[i] + k as f64 * (slope + ln_q3) + ln_gamma_kr - self.ln_fact[i]);
                }
            }
        }
        self.lo
    }
}

/// `p1 | n1 ~ Beta(a1 + TP, b1 + n1 - TP)`.
pub fn p1_conditional(spec: &JointSpec, state: &JointState) -> Result<BetaParams, SamplerError> {
    let (a, b) = (spec.p1_prior.alpha(), spec.p1_prior.beta());
    Ok(BetaParams::new(a + spec.tp as f64, b + (state.n1 - spec.tp) as f64)?)
}

/// `p2 | n1 ~ Beta(a2 + FP, b2 + N - n1 - FP)`.
pub fn p2_conditional(spec: &JointSpec, state: &JointState) -> Result<BetaParams, SamplerError> {
    let (a, b) = (spec.p2_prior.alpha(), spec.p2_prior.beta());
    Ok(BetaParams::new(a + spec.fp as f64, b + (spec.total - state.n1 - spec.fp) as f64)?)
}

/// `λ | n1 ~ Gamma(a_λ + n1, b_λ + 1)` under indicator truncation.
pub fn lambda_conditional(prior: &GammaParams, state: &JointState) -> Result<GammaParams, SamplerError> {
    Ok(GammaParams::new(prior.shape() + state.n1 as f64, prior.rate() + 1.0)?)
}

/// `p3 | n1, r ~ Beta(a3 + r, b3 + n1)` under indicator truncation.
pub fn p3_conditional(prior: &BetaParams, state: &JointState) -> Result<BetaParams, SamplerError> {
    Ok(BetaParams::new(prior.alpha() + state.r, prior.beta() + state.n1 as f64)?)
}

/// Unnormalized log conditional density of `u = ln r`, Jacobian included,
/// as targeted by the slice sampler.
pub fn log_r_conditional(spec: &JointSpec, state: &JointState, u: f64) -> f64 {
    let N1Prior::TruncNegBin { r_prior, .. } = spec.n1_prior else {
        return f64::NEG_INFINITY;
    };
    let r = u.exp();
    if !(r > 0.0 && r.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let n1 = state.n1 as f64;
    let mut f = r_prior.shape() * u - r_prior.rate() * r + libm::lgamma(n1 + r) - libm::lgamma(r) + r * state.p3.ln();
    if spec.truncation == Truncation::Normalized {
        f -= ln_negbin_mass_between(state.p3, r, spec.n1_prior.lower_bound(spec.tp), Some(spec.total - 1));
    }
    f
}

struct JointChain<'a> {
    spec: &'a JointSpec,
    state: JointState,
    kernel: JointKernel,
    buf: Vec<f64>,
    tuning: SliceTuning,
}

impl<'a> JointChain<'a> {
    fn new(spec: &'a JointSpec) -> Result<Self, SamplerError> {
        let kernel = JointKernel::new(spec)?;
        let len = (kernel.hi - kernel.lo + 1) as usize;
        Ok(Self {
            spec,
            state: spec.initial_state()?,
            kernel,
            buf: Vec::with_capacity(GRID_POINTS.max(len)),
            tuning: SliceTuning::default(),
        })
    }

    fn update_n1(&mut self, update: CountUpdate, rng: &mut RandomStream) -> Result<(), SamplerError> {
        let start = self.kernel.n1_log_weights(self.spec, &self.state, update, &mut self.buf);
        self.state.n1 = draw(&self.buf, start, rng)?;
        Ok(())
    }

    fn update_rates(&mut self, rng: &mut RandomStream) -> Result<(), SamplerError> {
        self.state.p1 = sample_beta(&p1_conditional(self.spec, &self.state)?, rng);
        self.state.p2 = sample_beta(&p2_conditional(self.spec, &self.state)?, rng);
        Ok(())
    }

    fn update_hyper(&mut self, rng: &mut RandomStream) -> Result<(), SamplerError> {
        let spec = self.spec;
        let normalized = spec.truncation == Truncation::Normalized;
        let n1 = self.state.n1 as f64;
        let lo = spec.n1_prior.lower_bound(spec.tp);
        let top = Some(spec.total - 1);
        match spec.n1_prior {
            N1Prior::TruncPoisson { lambda_prior } => {
                self.state.lambda = if normalized {
                    let shape = lambda_prior.shape() + n1;
                    let rate = lambda_prior.rate() + 1.0;
                    let target = |u: f64| {
                        let lambda = u.exp();
                        if !(lambda > 0.0 && lambda.is_finite()) {
                            return f64::NEG_INFINITY;
                        }
                        shape * u - rate * lambda - ln_poisson_mass_between(lambda, lo, top)
                    };
                    slice_sample(self.state.lambda.ln(), target, &self.tuning, rng)?.exp()
                } else {
                    sample_gamma(&lambda_conditional(&lambda_prior, &self.state)?, rng)
                };
            }
            N1Prior::TruncNegBin { p3_prior, .. } => {
                let r = self.state.r;
                self.state.p3 = if normalized {
                    let a = p3_prior.alpha() + r;
                    let b = p3_prior.beta() + n1;
                    griddy_unit(
                        &mut self.buf,
                        GRID_POINTS,
                        |g| (a - 1.0) * g.ln() + (b - 1.0) * (-g).ln_1p() - ln_negbin_mass_between(g, r, lo, top),
                        rng,
                    )?
                } else {
                    sample_beta(&p3_conditional(&p3_prior, &self.state)?, rng)
                };
                let state = self.state;
                self.state.r = slice_sample(r.ln(), |u| log_r_conditional(spec, &state, u), &self.tuning, rng)?.exp();
            }
            N1Prior::Uniform | N1Prior::PoissonFixed { .. } | N1Prior::NegBinFixed(_) => {}
        }
        Ok(())
    }
}

impl Chain for JointChain<'_> {
    fn sweep(&mut self, rng: &mut RandomStream) -> Result<(), SamplerError> {
        match self.spec.count_update {
            CountUpdate::Collapsed => {
                self.update_n1(CountUpdate::Collapsed, rng)?;
                self.update_rates(rng)?;
            }
            CountUpdate::Conditional => {
                self.update_rates(rng)?;
                self.update_n1(CountUpdate::Conditional, rng)?;
            }
        }
        self.update_hyper(rng)
    }

    fn record(&self, columns: &mut [Column]) {
        let s = &self.state;
        for (col, name) in columns.iter_mut().zip(self.spec.parameter_names()) {
            match (col, *name) {
                (Column::Count(v), "n1") => v.push(s.n1),
                (Column::Real(v), "p1") => v.push(s.p1),
                (Column::Real(v), "p2") => v.push(s.p2),
                (Column::Real(v), "p3") => v.push(s.p3),
                (Column::Real(v), "r") => v.push(s.r),
                (Column::Real(v), "lambda") => v.push(s.lambda),
                _ => unreachable!("column layout fixed by parameter_names"),
            }
        }
    }
}

/// Posterior draws of `n1`, `p1`, `p2` and the prior's hyperparameters.
pub fn fit_joint(spec: &JointSpec, settings: &McmcSettings) -> Result<DrawMatrix, SamplerError> {
    spec.validate()?;
    let names = spec.parameter_names();
    let kinds: Vec<ColumnKind> =
        names.iter().map(|&n| if n == "n1" { ColumnKind::Count } else { ColumnKind::Real }).collect();
    run_chains(settings, names, &kinds, || JointChain::new(spec))
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Append the reconstructed cells and accuracy measures of each draw.
pub fn derive_joint(mut draws: DrawMatrix, spec: &JointSpec) -> Result<DrawMatrix, SamplerError> {
    let JointSpec { tp, fp, total, .. } = *spec;
    let n1_cols: Vec<Vec<u64>> = draws
        .column("n1")
        .ok_or_else(|| SamplerError::InvalidSpec("draws have no `n1` column".into()))?
        .iter()
        .map(|c| c.as_counts().map(<[u64]>::to_vec))
        .collect::<Option<_>>()
        .ok_or_else(|| SamplerError::InvalidSpec("`n1` is not a count column".into()))?;
    let real_col = |name: &str| -> Result<Vec<Vec<f64>>, SamplerError> {
        Ok(draws
            .column(name)
            .ok_or_else(|| SamplerError::InvalidSpec(format!("draws have no `{name}` column")))?
            .iter()
            .map(|c| (0..c.len()).map(|i| c.get(i).unwrap_or(f64::NAN)).collect())
            .collect())
    };
    let p1 = real_col("p1")?;
    let p2 = real_col("p2")?;

    let per_chain_counts = |f: &dyn Fn(u64) -> u64| -> Vec<Column> {
        n1_cols.iter().map(|c| Column::Count(c.iter().map(|&n1| f(n1)).collect())).collect()
    };
    let per_chain_measure = |f: &dyn Fn(u64) -> Option<f64>| -> Vec<Column> {
        n1_cols.iter().map(|c| Column::Measure(c.iter().map(|&n1| f(n1)).collect())).collect()
    };
    let per_chain_real = |f: &dyn Fn(u64) -> f64| -> Vec<Column> {
        n1_cols.iter().map(|c| Column::Real(c.iter().map(|&n1| f(n1)).collect())).collect()
    };

    let n2 = per_chain_counts(&|n1| total - n1);
    let fn_ = per_chain_counts(&|n1| n1 - tp);
    let tn = per_chain_counts(&|n1| total - n1 - fp);
    draws.push_column("n2", n2)?;
    draws.push_column("fn", fn_)?;
    draws.push_column("tn", tn)?;
    draws.push_column("se", p1.into_iter().map(Column::Real).collect())?;
    draws.push_column("sp", p2.into_iter().map(|v| Column::Real(v.into_iter().map(|p| 1.0 - p).collect())).collect())?;
    draws.push_column("se_count", per_chain_measure(&|n1| ratio(tp, n1)))?;
    draws.push_column("sp_count", per_chain_measure(&|n1| ratio(total - n1 - fp, total - n1)))?;
    draws.push_column("npv", per_chain_measure(&|n1| ratio(total - n1 - fp, (n1 - tp) + (total - n1 - fp))))?;
    draws.push_column("accuracy", per_chain_real(&|n1| (tp + total - n1 - fp) as f64 / total as f64))?;
    draws.push_column("prevalence", per_chain_real(&|n1| n1 as f64 / total as f64))?;
    Ok(draws)
}
