//! Shared fixtures for the benchmarks.

use otoc_core::{ChainParams, Spectrum, TimeGrid};

/// Spectrum of the chain with `J = hx = 1` at the given size and longitudinal field.
pub fn chain_spectrum(sites: usize, hz: f64) -> Spectrum {
    Spectrum::of_chain(&ChainParams::new(sites, 1.0, hz)).expect("valid chain")
}

/// `n` points spread over a long window, as used by the chi sweeps.
pub fn long_grid(n: usize) -> TimeGrid {
    TimeGrid::new(1.5, 2001.5, n).expect("valid grid")
}
