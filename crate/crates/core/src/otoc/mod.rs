//! Infinite-temperature OTOC time traces.

mod engine;
mod export;
pub(crate) mod kernel;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{OperatorSpec, PauliDirection};
use crate::spectrum::ChainParams;

pub use engine::{
    heisenberg_operator, otoc_direct, otoc_direct_specs, otoc_four_point, otoc_global, otoc_local, otoc_mixed,
    PauliSite, DECOMPOSITION_TOL, IMAG_TOL,
};

/// Uniform time grid including both endpoints, in units of `1/J`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct TimeGrid {
    start: f64,
    end: f64,
    n_points: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    t_start: f64,
    t_end: f64,
    n_points: usize,
}

impl TryFrom<RawGrid> for TimeGrid {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        TimeGrid::new(r.t_start, r.t_end, r.n_points)
    }
}

impl From<TimeGrid> for RawGrid {
    fn from(g: TimeGrid) -> Self {
        RawGrid { t_start: g.start, t_end: g.end, n_points: g.n_points }
    }
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, n_points: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || start < 0.0 || end <= start {
            return Err(Error::InvalidParameter(format!("time grid needs 0 <= t_start < t_end, got [{start}, {end}]")));
        }
        if n_points < 2 {
            return Err(Error::InvalidParameter(format!("time grid needs at least 2 points, got {n_points}")));
        }
        Ok(TimeGrid { start, end, n_points })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.n_points - 1) as f64
    }

    /// The `k`-th point. The last point is exactly `t_end`.
    pub fn point(&self, k: usize) -> f64 {
        if k + 1 == self.n_points {
            self.end
        } else {
            self.start + (self.end - self.start) * (k as f64 / (self.n_points - 1) as f64)
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|k| self.point(k))
    }
}

/// Which expression produced a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Direct,
    Local,
    FourPoint,
    MixedTotal,
    MixedLocal,
    MixedNonlocal,
    GlobalTotal,
    GlobalLocal,
    GlobalNonlocal,
}

impl Formula {
    pub fn tag(self) -> &'static str {
        match self {
            Formula::Direct => "direct",
            Formula::Local => "local",
            Formula::FourPoint => "four_point",
            Formula::MixedTotal => "mixed_total",
            Formula::MixedLocal => "mixed_local",
            Formula::MixedNonlocal => "mixed_nonlocal",
            Formula::GlobalTotal => "global_total",
            Formula::GlobalLocal => "global_local",
            Formula::GlobalNonlocal => "global_nonlocal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub chain: Option<ChainParams>,
    /// Operator descriptors in formula order; empty for ad-hoc dense operators.
    pub operators: Vec<OperatorSpec>,
    pub formula: Formula,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtocTrace {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    /// Largest `|Im|` discarded while forming the real values.
    pub imag_residual: f64,
    pub meta: TraceMeta,
}

impl OtocTrace {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.points()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &OtocTrace) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// The four-point correlator, complex as written.
#[derive(Clone, Debug, PartialEq)]
pub struct FourPointTrace {
    pub grid: TimeGrid,
    pub values: Vec<c64>,
    pub operators: [PauliSite; 4],
    pub chain: Option<ChainParams>,
}

impl FourPointTrace {
    pub fn indices(&self) -> [usize; 4] {
        self.operators.map(|p| p.site)
    }

    pub fn directions(&self) -> [PauliDirection; 4] {
        self.operators.map(|p| p.direction)
    }
}

/// A total OTOC with its local and non-local parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub total: OtocTrace,
    pub local_part: OtocTrace,
    pub nonlocal_part: OtocTrace,
}

impl Decomposition {
    /// `max_t |total - (local + nonlocal)|`.
    pub fn identity_deviation(&self) -> f64 {
        self.total
            .values
            .iter()
            .zip(self.local_part.values.iter().zip(&self.nonlocal_part.values))
            .map(|(t, (l, n))| (t - (l + n)).abs())
            .fold(0.0, f64::max)
    }
}
