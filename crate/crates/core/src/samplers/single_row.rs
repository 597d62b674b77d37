//! Single-row model: `y ~ Bin(n, p)` with a negative-binomial prior on the
//! unknown trial count `n`, truncated to `n >= y` (and `n <= N` when a total
//! is known).

use super::enumerate::{draw, griddy_unit, walk};
use super::normalizer::ln_negbin_mass_between;
use super::{
    ln_negbin_weight, run_chains, Chain, Column, ColumnKind, CountUpdate, DrawMatrix, McmcSettings, SamplerError,
    Truncation, GRID_POINTS,
};
use crate::distributions::{
    log_beta_density, log_binomial_pmf, log_gamma_density, log_poisson_pmf, sample_beta, sample_gamma, tail_cap,
    BetaParams, CountDistribution, GammaParams, NegBinParams, PoissonParam,
};
use crate::real::ln_beta;
use crate::RandomStream;

/// Prior on the negative-binomial parameters of `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NegBinHyper {
    /// `p* ~ Beta`, `r | λ ~ Poisson(λ)`, `λ ~ Gamma`.
    Hierarchical { pstar_prior: BetaParams, lambda_prior: GammaParams },
    /// `(p*, r)` held fixed.
    Fixed(NegBinParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleRowInit {
    pub n: u64,
    pub r: u64,
    pub lambda: f64,
    pub p: f64,
    pub pstar: f64,
}

impl Default for SingleRowInit {
    fn default() -> Self {
        Self { n: 100, r: 70, lambda: 70.0, p: 0.5, pstar: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleRowSpec {
    /// The observed cell of the row (TP for the diseased stratum, FP otherwise).
    pub y: u64,
    pub p_prior: BetaParams,
    pub hyper: NegBinHyper,
    /// Known stratum total; `n <= upper_bound` when present.
    pub upper_bound: Option<u64>,
    pub init: SingleRowInit,
    pub truncation: Truncation,
    pub count_update: CountUpdate,
}

impl SingleRowSpec {
    /// Hierarchical model with default initial values and update scheme.
    pub fn new(y: u64, p_prior: BetaParams, pstar_prior: BetaParams, lambda_prior: GammaParams) -> Self {
        Self {
            y,
            p_prior,
            hyper: NegBinHyper::Hierarchical { pstar_prior, lambda_prior },
            upper_bound: None,
            init: SingleRowInit::default(),
            truncation: Truncation::default(),
            count_update: CountUpdate::default(),
        }
    }

    /// Model with `(p*, r)` fixed.
    pub fn fixed(y: u64, p_prior: BetaParams, nb: NegBinParams) -> Self {
        Self { hyper: NegBinHyper::Fixed(nb), ..Self::new(y, p_prior, p_prior, GammaParams::new(1.0, 1.0).unwrap()) }
    }

    pub fn with_upper_bound(mut self, total: u64) -> Self {
        self.upper_bound = Some(total);
        self
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if let Some(ub) = self.upper_bound {
            if ub < self.y {
                return Err(SamplerError::InvalidSpec(format!("upper bound {ub} is below the observed count {}", self.y)));
            }
        }
        let init = &self.init;
        if !(init.p > 0.0 && init.p < 1.0) {
            return Err(SamplerError::InvalidInit(format!("p = {} is not in (0, 1)", init.p)));
        }
        if let NegBinHyper::Hierarchical { .. } = self.hyper {
            if !(init.pstar > 0.0 && init.pstar < 1.0) {
                return Err(SamplerError::InvalidInit(format!("p* = {} is not in (0, 1)", init.pstar)));
            }
            if !(init.lambda > 0.0 && init.lambda.is_finite()) {
                return Err(SamplerError::InvalidInit(format!("lambda = {} is not positive", init.lambda)));
            }
        }
        let state = self.initial_state();
        let lp = target_log_density_single_row(&state, self);
        if !lp.is_finite() {
            return Err(SamplerError::InvalidInit(format!(
                "n = {}, r = {} gives log density {lp} (observed y = {}, upper bound {:?})",
                state.n, state.r, self.y, self.upper_bound
            )));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> SingleRowState {
        let i = &self.init;
        match self.hyper {
            NegBinHyper::Hierarchical { .. } => {
                SingleRowState { n: i.n, p: i.p, pstar: i.pstar, r: i.r as f64, lambda: i.lambda }
            }
            NegBinHyper::Fixed(nb) => SingleRowState { n: i.n, p: i.p, pstar: nb.pstar(), r: nb.r(), lambda: f64::NAN },
        }
    }

    /// Parameter names of the draws `fit_single_row` returns.
    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self.hyper {
            NegBinHyper::Hierarchical { .. } => &["n", "p", "pstar", "r", "lambda"],
            NegBinHyper::Fixed(_) => &["n", "p"],
        }
    }

    fn ln_z(&self, pstar: f64, r: f64) -> f64 {
        ln_negbin_mass_between(pstar, r, self.y, self.upper_bound)
    }
}

/// A point in the single-row parameter space. `r` is integral under the
/// hierarchical prior; `lambda` is unused when the hyperparameters are fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleRowState {
    pub n: u64,
    pub p: f64,
    pub pstar: f64,
    pub r: f64,
    pub lambda: f64,
}

/// Unnormalized log joint density of the single-row model at `state`.
pub fn target_log_density_single_row(state: &SingleRowState, spec: &SingleRowSpec) -> f64 {
    let n = state.n;
    if n < spec.y || spec.upper_bound.is_some_and(|ub| n > ub) {
        return f64::NEG_INFINITY;
    }
    let mut lp = log_binomial_pmf(spec.y, n, state.p) + log_beta_density(state.p, &spec.p_prior);
    match spec.hyper {
        NegBinHyper::Fixed(nb) => {
            lp += ln_negbin_weight(n, nb.pstar(), nb.r());
            if spec.truncation == Truncation::Normalized {
                lp -= spec.ln_z(nb.pstar(), nb.r());
            }
        }
        NegBinHyper::Hierarchical { pstar_prior, lambda_prior } => {
            let r = state.r;
            if !(r >= 0.0 && r.fract() == 0.0) {
                return f64::NEG_INFINITY;
            }
            let nb = ln_negbin_weight(n, state.pstar, r);
            if nb == f64::NEG_INFINITY {
                return nb;
            }
            lp += nb
                + log_poisson_pmf(r as u64, state.lambda)
                + log_gamma_density(state.lambda, &lambda_prior)
                + log_beta_density(state.pstar, &pstar_prior);
            if spec.truncation == Truncation::Normalized {
                lp -= spec.ln_z(state.pstar, r);
            }
        }
    }
    lp
}

struct SingleRowChain<'a> {
    spec: &'a SingleRowSpec,
    state: SingleRowState,
    buf: Vec<f64>,
}

impl SingleRowChain<'_> {
    fn update_p(&mut self, rng: &mut RandomStream) -> Result<(), SamplerError> {
        self.state.p = sample_beta(&p_conditional(self.spec, &self.state)?, rng);
        Ok(())
    }

    fn update_pstar(&mut self, prior: &BetaParams, rng: &mut RandomStream) -> Result<(), SamplerError> {
        self.state.pstar = match self.spec.truncation {
            Truncation::Indicator => sample_beta(&pstar_conditional(prior, &self.state)?, rng),
            Truncation::Normalized => {
                let (spec, r) = (self.spec, self.state.r);
                let a = prior.alpha() + r;
                let b = prior.beta() + self.state.n as f64;
                griddy_unit(
                    &mut self.buf,
                    GRID_POINTS,
                    |g| (a - 1.0) * g.ln() + (b - 1.0) * (-g).ln_1p() - spec.ln_z(g, r),
                    rng,
                )?
            }
        };
        Ok(())
    }

    fn update_lambda(&mut self, prior: &GammaParams, rng: &mut RandomStream) -> Result<(), SamplerError> {
        self.state.lambda = sample_gamma(&lambda_conditional(prior, &self.state)?, rng);
        Ok(())
    }

    fn update_r(&mut self, rng: &mut RandomStream) -> Result<(), SamplerError> {
        let start = r_log_weights(self.spec, &self.state, &mut self.buf)?;
        self.state.r = draw(&self.buf, start, rng)? as f64;
        Ok(())
    }

    fn update_n(&mut self, update: CountUpdate, rng: &mut RandomStream) -> Result<(), SamplerError> {
        let start = n_log_weights(self.spec, &self.state, update, &mut self.buf)?;
        self.state.n = draw(&self.buf, start, rng)?;
        Ok(())
    }
}

/// `p | n ~ Beta(α + y, β + n - y)`.
pub fn p_conditional(spec: &SingleRowSpec, state: &SingleRowState) -> Result<BetaParams, SamplerError> {
    let y = spec.y;
    Ok(BetaParams::new(spec.p_prior.alpha() + y as f64, spec.p_prior.beta() + (state.n - y) as f64)?)
}

/// `p* | n, r ~ Beta(α* + r, β* + n)` under indicator truncation.
pub fn pstar_conditional(prior: &BetaParams, state: &SingleRowState) -> Result<BetaParams, SamplerError> {
    Ok(BetaParams::new(prior.alpha() + state.r, prior.beta() + state.n as f64)?)
}

/// `λ | r ~ Gamma(a + r, b + 1)`.
pub fn lambda_conditional(prior: &GammaParams, state: &SingleRowState) -> Result<GammaParams, SamplerError> {
    Ok(GammaParams::new(prior.shape() + state.r, prior.rate() + 1.0)?)
}

/// Log-weights of the full conditional of `r`, written to `buf`; returns the
/// first support point.
pub fn r_log_weights(spec: &SingleRowSpec, state: &SingleRowState, buf: &mut Vec<f64>) -> Result<u64, SamplerError> {
    let SingleRowState { n, pstar, lambda, .. } = *state;
    let normalized = spec.truncation == Truncation::Normalized;
    // r = 0 puts all mass at n = 0.
    let start: u64 = if n == 0 { 0 } else { 1 };
    let r0 = start as f64;
    let mut ln_z_prev = if normalized { spec.ln_z(pstar, r0) } else { 0.0 };
    let first = r0 * lambda.ln() - libm::lgamma(r0 + 1.0) + ln_negbin_weight(n, pstar, r0) - ln_z_prev;
    let ln_lp = lambda.ln() + pstar.ln();
    let nf = n as f64;
    let step = |k: u64| {
        let kf = k as f64;
        let nb_ratio = if k == 0 { 0.0 } else { ((nf + kf) / kf).ln() };
        let mut s = ln_lp + nb_ratio - (kf + 1.0).ln();
        if normalized {
            let next = spec.ln_z(pstar, kf + 1.0);
            s += ln_z_prev - next;
            ln_z_prev = next;
        }
        s
    };
    // Exact for the indicator weights. Without an upper bound the
    // normalizer only grows with r, so the bound also holds there.
    let bound = |k: u64| {
        let j = k.max(1) as f64;
        lambda * pstar * (nf + j) / (j * (k as f64 + 1.0))
    };
    let min_end = tail_cap(&CountDistribution::Poisson(PoissonParam::new(lambda)?), 0, 1e-12)?;
    walk(buf, start, first, min_end, None, step, bound)?;
    Ok(start)
}

/// Log-weights of the conditional of `n` given `(p*, r)`, with `p` either
/// integrated out or held at its current value; returns the first support point.
pub fn n_log_weights(
    spec: &SingleRowSpec,
    state: &SingleRowState,
    update: CountUpdate,
    buf: &mut Vec<f64>,
) -> Result<u64, SamplerError> {
    let collapsed = update == CountUpdate::Collapsed;
    let y = spec.y;
    let yf = y as f64;
    let SingleRowState { p, pstar, r, .. } = *state;
    let (a, b) = (spec.p_prior.alpha(), spec.p_prior.beta());
    let ln_qstar = (-pstar).ln_1p();
    let ln_qp = (-p).ln_1p();
    let nb_first = ln_negbin_weight(y, pstar, r);
    let first = if collapsed {
        nb_first + ln_beta(a + yf, b)
    } else {
        nb_first + if y == 0 { 0.0 } else { yf * p.ln() }
    };
    let step = |k: u64| {
        let kf = k as f64;
        let common = ((kf + r) / (kf + 1.0 - yf)).ln() + ln_qstar;
        if collapsed {
            common + ((b + kf - yf) / (a + b + kf)).ln()
        } else {
            common + ln_qp
        }
    };
    let bound = |k: u64| {
        let kf = k as f64;
        let q = (1.0 - pstar) * ((kf + r) / (kf + 1.0 - yf)).max(1.0);
        if collapsed {
            q
        } else {
            q * (1.0 - p)
        }
    };
    let min_end = match spec.upper_bound {
        Some(_) => y,
        None if r > 0.0 => {
            (y + 10).max(tail_cap(&CountDistribution::NegBin(NegBinParams::new(pstar, r)?), y, 1e-12)?)
        }
        None => y + 10,
    };
    walk(buf, y, first, min_end, spec.upper_bound, step, bound)?;
    Ok(y)
}

impl Chain for SingleRowChain<'_> {
    fn sweep(&mut self, rng: &mut RandomStream) -> Result<(), SamplerError> {
        let collapsed = self.spec.count_update == CountUpdate::Collapsed;
        match self.spec.hyper {
            NegBinHyper::Hierarchical { pstar_prior, lambda_prior } => {
                if collapsed {
                    self.update_n(CountUpdate::Collapsed, rng)?;
                }
                self.update_p(rng)?;
                self.update_pstar(&pstar_prior, rng)?;
                self.update_lambda(&lambda_prior, rng)?;
                self.update_r(rng)?;
                if !collapsed {
                    self.update_n(CountUpdate::Conditional, rng)?;
                }
            }
            NegBinHyper::Fixed(_) => {
                if collapsed {
                    self.update_n(CountUpdate::Collapsed, rng)?;
                    self.update_p(rng)?;
                } else {
                    self.update_p(rng)?;
                    self.update_n(CountUpdate::Conditional, rng)?;
                }
            }
        }
        Ok(())
    }

    fn record(&self, columns: &mut [Column]) {
        let s = &self.state;
        for (col, name) in columns.iter_mut().zip(self.spec.parameter_names()) {
            match (col, *name) {
                (Column::Count(v), "n") => v.push(s.n),
                (Column::Real(v), "p") => v.push(s.p),
                (Column::Real(v), "pstar") => v.push(s.pstar),
                (Column::Count(v), "r") => v.push(s.r as u64),
                (Column::Real(v), "lambda") => v.push(s.lambda),
                _ => unreachable!("column layout fixed by parameter_names"),
            }
        }
    }
}

/// Posterior draws of `(n, p, p*, r, λ)`, or `(n, p)` with fixed hyperparameters.
pub fn fit_single_row(spec: &SingleRowSpec, settings: &McmcSettings) -> Result<DrawMatrix, SamplerError> {
    spec.validate()?;
    let names = spec.parameter_names();
    let kinds: Vec<ColumnKind> = names
        .iter()
        .map(|&n| if n == "n" || n == "r" { ColumnKind::Count } else { ColumnKind::Real })
        .collect();
    run_chains(settings, names, &kinds, || {
        Ok(SingleRowChain { spec, state: spec.initial_state(), buf: Vec::with_capacity(1024) })
    })
}

/// Append the missing cell `n - y`.
pub fn derive_single_row(mut draws: DrawMatrix, spec: &SingleRowSpec) -> Result<DrawMatrix, SamplerError> {
    let cols = draws.column("n").ok_or_else(|| SamplerError::InvalidSpec("draws have no `n` column".into()))?;
    let mut missing = Vec::with_capacity(cols.len());
    for col in cols {
        let counts = col.as_counts().ok_or_else(|| SamplerError::InvalidSpec("`n` is not a count column".into()))?;
        missing.push(Column::Count(counts.iter().map(|&n| n - spec.y).collect()));
    }
    draws.push_column("missing", missing)?;
    Ok(draws)
}
