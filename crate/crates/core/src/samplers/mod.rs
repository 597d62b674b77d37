//! Gibbs samplers for the single-row and joint fixed-N reconstruction models.
//!
//! Both samplers target an explicitly written joint density
//! ([`target_log_density_single_row`], [`target_log_density_joint`]). Under
//! the default [`Truncation::Indicator`] semantics that density is the product
//! of the untruncated component densities times the support indicator, so the
//! hyperparameter updates stay conjugate. [`Truncation::Normalized`] instead
//! renormalizes the truncated count prior for every hyperparameter value.
//!
//! Count coordinates are always drawn exactly by enumerating their full
//! conditional. With [`CountUpdate::Collapsed`] (the default) the binomial
//! rates are integrated out of that conditional and redrawn immediately
//! afterwards; [`CountUpdate::Conditional`] draws the count given the current
//! rates.

mod draws;
mod enumerate;
pub mod joint;
mod normalizer;
pub mod single_row;
mod slice;

use std::time::Instant;

use thiserror::Error;

use crate::distributions::DistributionError;
use crate::{chain_stream, RandomStream};

pub use draws::{ChainDraws, Column, ColumnKind, DrawMatrix, DrawMeta, DrawShapeError};
pub use joint::{derive_joint, fit_joint, target_log_density_joint, JointInit, JointKernel, JointSpec, JointState, N1Prior};
pub use single_row::{
    derive_single_row, fit_single_row, target_log_density_single_row, NegBinHyper, SingleRowInit, SingleRowSpec,
    SingleRowState,
};
pub use slice::{slice_sample, SliceTuning};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("invalid MCMC settings: {0}")]
    InvalidSettings(String),
    #[error("initial state has zero posterior density: {0}")]
    InvalidInit(String),
    #[error("slice sampler failed: {0}")]
    SliceFailure(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Draws(#[from] DrawShapeError),
}

/// How truncation of a count prior enters the joint density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// Untruncated factors times the support indicator, normalized globally.
    #[default]
    Indicator,
    /// Truncated count prior renormalized for each hyperparameter value.
    Normalized,
}

/// How the latent count is updated within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountUpdate {
    /// Binomial rates integrated out of the count conditional.
    #[default]
    Collapsed,
    /// Count drawn given the current rates.
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McmcSettings {
    pub chains: usize,
    /// Sweeps per chain, burn-in included.
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self { chains: 4, iterations: 50_000, burn_in: 10_000, thin: 1, seed: 20_240_601 }
    }
}

impl McmcSettings {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.chains == 0 {
            return Err(SamplerError::InvalidSettings("chains must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(SamplerError::InvalidSettings("thin must be at least 1".into()));
        }
        if self.iterations <= self.burn_in {
            return Err(SamplerError::InvalidSettings(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            )));
        }
        Ok(())
    }

    /// Draws kept per chain.
    pub fn retained(&self) -> u64 {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Either model, for operations that accept both.
#[derive(Debug, Clone, Copy)]
pub enum FitSpec<'a> {
    SingleRow(&'a SingleRowSpec),
    Joint(&'a JointSpec),
}

/// Append the derived table quantities for a fit's draws.
pub fn derive_quantities(draws: DrawMatrix, spec: FitSpec<'_>) -> Result<DrawMatrix, SamplerError> {
    match spec {
        FitSpec::SingleRow(s) => derive_single_row(draws, s),
        FitSpec::Joint(s) => derive_joint(draws, s),
    }
}

/// `ln NegBin(n; p*, r)` for real `r >= 0`; `r = 0` is the point mass at zero.
pub(crate) fn ln_negbin_weight(n: u64, pstar: f64, r: f64) -> f64 {
    if r == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    let tail = if n == 0 { 0.0 } else { nf * (-pstar).ln_1p() };
    libm::lgamma(nf + r) - libm::lgamma(r) - libm::lgamma(nf + 1.0) + r * pstar.ln() + tail
}

/// Grid size for griddy-Gibbs updates of success probabilities.
pub(crate) const GRID_POINTS: usize = 512;

/// One chain's sampler state.
pub(crate) trait Chain: Send {
    fn sweep(&mut self, rng: &mut RandomStream) -> Result<(), SamplerError>;
    fn record(&self, columns: &mut [Column]);
}

/// Run every chain on its own stream and collect the retained draws in chain order.
pub(crate) fn run_chains<C, F>(
    settings: &McmcSettings,
    names: &[&str],
    kinds: &[ColumnKind],
    make_chain: F,
) -> Result<DrawMatrix, SamplerError>
where
    C: Chain,
    F: Fn() -> Result<C, SamplerError> + Sync,
{
    settings.validate()?;
    let started = Instant::now();
    let run_one = |index: usize| -> Result<ChainDraws, SamplerError> {
        let mut rng = chain_stream(settings.seed, index as u64);
        let mut chain = make_chain()?;
        let keep = settings.retained() as usize;
        let mut columns: Vec<Column> = kinds.iter().map(|&k| Column::empty(k)).collect();
        for col in &mut columns {
            match col {
                Column::Count(v) => v.reserve(keep),
                Column::Real(v) => v.reserve(keep),
                Column::Measure(v) => v.reserve(keep),
            }
        }
        let mut iterations = Vec::with_capacity(keep);
        for it in 1..=settings.iterations {
            chain.sweep(&mut rng)?;
            if it > settings.burn_in && (it - settings.burn_in) % settings.thin == 0 {
                chain.record(&mut columns);
                iterations.push(it);
            }
        }
        Ok(ChainDraws { iterations, columns })
    };
    let results: Vec<Result<ChainDraws, SamplerError>> = if settings.chains == 1 {
        vec![run_one(0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..settings.chains).map(|i| scope.spawn(move || run_one(i))).collect();
            handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
        })
    };
    let chains = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut draws = DrawMatrix::new(names.iter().map(|s| s.to_string()).collect(), chains)?;
    draws.meta = DrawMeta { settings: Some(*settings), elapsed: Some(started.elapsed()) };
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_validation() {
        assert!(McmcSettings::default().validate().is_ok());
        let bad = McmcSettings { iterations: 10, burn_in: 10, ..Default::default() };
        assert!(matches!(bad.validate(), Err(SamplerError::InvalidSettings(_))));
        assert!(McmcSettings { thin: 0, ..Default::default() }.validate().is_err());
        assert!(McmcSettings { chains: 0, ..Default::default() }.validate().is_err());
        let s = McmcSettings { iterations: 110, burn_in: 10, thin: 3, ..Default::default() };
        assert_eq!(s.retained(), 33);
    }
}
