//! Bayesian reconstruction of incomplete 2×2 diagnostic tables.
//!
//! When a study reports only part of its diagnostic table (one test-outcome
//! row, or TP and FP together with the sample size), the missing denominators
//! can still be inferred by treating them as unknown binomial trial counts.
//! This crate provides:
//!
//! * [`distributions`]: log-space pmfs/densities and random draws,
//! * [`tables`]: table types and the deterministic accuracy measures,
//! * [`samplers`]: Gibbs samplers for the single-row and joint fixed-N models,
//! * [`oracle`]: exact posteriors for fixed-hyperparameter reductions,
//! * [`diagnostics`]: posterior summaries, ESS and split-R̂.
//!
//! The numerical kernels are generic over [`Real`] (`f32`/`f64`) and table
//! measures over [`tables::RatioScalar`], which includes exact rationals. The
//! aliases below fix the common choices.

pub mod diagnostics;
pub mod distributions;
pub mod oracle;
pub mod real;
pub mod samplers;
pub mod tables;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub use real::Real;

/// Random stream owned by one chain or replicate.
pub type RandomStream = ChaCha20Rng;

/// Deterministic stream for `(seed, index)`; distinct indices give independent streams.
pub fn chain_stream(seed: u64, index: u64) -> RandomStream {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub type BetaParams = distributions::BetaParams<f64>;
pub type GammaParams = distributions::GammaParams<f64>;
pub type NegBinParams = distributions::NegBinParams<f64>;
pub type PoissonParam = distributions::PoissonParam<f64>;
pub type ExactPmf = oracle::ExactPmf<f64>;
pub type PmfStatistics = oracle::PmfStatistics<f64>;
pub type PosteriorSummary = diagnostics::PosteriorSummary<f64>;
pub type ParamSummary = diagnostics::ParamSummary<f64>;
pub type Measures = tables::Measures<f64>;
pub type ExactMeasures = tables::Measures<num_rational::Ratio<u64>>;

pub use samplers::{
    derive_quantities, fit_joint, fit_single_row, target_log_density_joint, target_log_density_single_row,
    DrawMatrix, FitSpec, JointSpec, McmcSettings, SamplerError, SingleRowSpec,
};
pub use tables::{complete_table, measures_from_counts, validate_partial, CellCounts, PartialTable};
