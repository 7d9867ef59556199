//! Parameter sweeps driven by a run configuration.

mod config;
mod run;

pub use config::{
    preset, ChainSweep, ChiOptions, Command, HzGrid, OtocJob, RunConfig, Sampling, Sector, SiteRef, SpectralOptions,
    PRESETS,
};
pub use run::{
    cmd_chi, cmd_spectral, cmd_trace, job_traces, spectral_point, write_manifest, Part, RunOptions, RunReport, SpectralRow,
    CODE_VERSION,
};
