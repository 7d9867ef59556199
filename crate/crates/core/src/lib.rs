//! Out-of-time-ordered correlators and spectral chaos indicators for short
//! Ising chains in a transverse and a longitudinal field, computed by exact
//! diagonalization.

// Negated comparisons such as `!(x > 0.0)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod chaos;
pub mod error;
pub mod operator;
pub mod otoc;
pub mod spectrum;
pub mod sweep;

pub use chaos::{ChiSweepResult, FluctuationStats, ParticipationStats, SpectralChaosStats, WindowSpec};
pub use error::{Error, Result};
pub use operator::{DenseOperator, OperatorSpec, PauliDirection};
pub use otoc::{OtocTrace, TimeGrid};
pub use spectrum::{ChainParams, Spectrum};
