#![allow(dead_code)]

pub mod hierarchy;

use tablerecon::distributions::{BetaParams, GammaParams, NegBinParams};
use tablerecon::McmcSettings;

pub fn beta(a: f64, b: f64) -> BetaParams {
    BetaParams::new(a, b).unwrap()
}

pub fn gamma(shape: f64, rate: f64) -> GammaParams {
    GammaParams::new(shape, rate).unwrap()
}

pub fn negbin(pstar: f64, r: f64) -> NegBinParams {
    NegBinParams::new(pstar, r).unwrap()
}

/// `chains` chains, each keeping `per_chain` draws after a 10% burn-in.
pub fn settings(chains: usize, per_chain: u64, seed: u64) -> McmcSettings {
    let burn_in = per_chain / 10;
    McmcSettings { chains, iterations: per_chain + burn_in, burn_in, thin: 1, seed }
}
