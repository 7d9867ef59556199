//! Run configuration: a TOML file describing the chain sweep, time grid,
//! analysis windows and OTOC jobs.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chaos::WindowSpec;
use crate::error::{Error, Result};
use crate::operator::{PauliDirection, DEFAULT_MAX_SITES};
use crate::otoc::TimeGrid;
use crate::spectrum::ChainParams;

/// Sweep values are rounded to this many decimals so that `start + k * step`
/// lands on the intended decimal value.
const GRID_DECIMALS: i32 = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub chain: ChainSweep,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<TimeGrid>,
    #[serde(default, rename = "window", skip_serializing_if = "Vec::is_empty")]
    pub windows: Vec<WindowSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub operators: Vec<OtocJob>,
    #[serde(default)]
    pub chi: ChiOptions,
    #[serde(default)]
    pub spectral: SpectralOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSweep {
    pub sites: Vec<usize>,
    #[serde(default = "unit")]
    pub coupling: f64,
    pub hx: f64,
    pub hz: HzGrid,
}

fn unit() -> f64 {
    1.0
}

/// Either an explicit list of values or an inclusive `start, stop, step` range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HzGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl HzGrid {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        HzGrid { values: None, start: Some(start), stop: Some(stop), step: Some(step) }
    }

    pub fn values(values: Vec<f64>) -> Self {
        HzGrid { values: Some(values), start: None, stop: None, step: None }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        let path = "chain.hz";
        let points = match (&self.values, self.start, self.stop, self.step) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(start), Some(stop), Some(step)) => {
                if !(step > 0.0) || !step.is_finite() {
                    return Err(Error::config(format!("{path}.step"), format!("must be positive, got {step}")));
                }
                if !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                    return Err(Error::config(format!("{path}.stop"), format!("must be >= start ({start}), got {stop}")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                let scale = 10f64.powi(GRID_DECIMALS);
                (0..n).map(|k| ((start + k as f64 * step) * scale).round() / scale).collect()
            }
            _ => {
                return Err(Error::config(path, "give either `values` or all of `start`, `stop`, `step`"));
            }
        };
        if points.is_empty() {
            return Err(Error::config(path, "sweep grid is empty"));
        }
        if let Some(k) = points.iter().position(|x| !x.is_finite()) {
            return Err(Error::config(format!("{path}.values[{k}]"), "must be finite"));
        }
        if let Some(k) = points.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::config(format!("{path}.values[{}]", k + 1), "sweep grid must be strictly increasing"));
        }
        Ok(points)
    }
}

/// A site index; negative values count from the end of the chain (`-1` is the last site).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteRef(pub i64);

impl SiteRef {
    pub fn resolve(self, sites: usize) -> Option<usize> {
        let idx = if self.0 < 0 { sites as i64 + self.0 } else { self.0 };
        (0..sites as i64).contains(&idx).then_some(idx as usize)
    }
}

/// One OTOC computation, repeated for every chain of the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OtocJob {
    /// Two single-site Pauli operators.
    Local { i: SiteRef, mu: PauliDirection, j: SiteRef, nu: PauliDirection },
    /// A single-site operator against a total magnetization, with its decomposition.
    Mixed { i: SiteRef, mu: PauliDirection, nu: PauliDirection },
    /// Two total magnetizations, with their decomposition.
    Global { mu: PauliDirection, nu: PauliDirection },
}

impl OtocJob {
    /// File-name label for a chain of `sites` sites, e.g. `local_z0_x3`.
    pub fn label(&self, sites: usize) -> String {
        let site = |s: SiteRef| s.resolve(sites).map_or_else(|| format!("{}", s.0), |v| v.to_string());
        match *self {
            OtocJob::Local { i, mu, j, nu } => format!("local_{mu}{}_{nu}{}", site(i), site(j)),
            OtocJob::Mixed { i, mu, nu } => format!("mixed_{mu}{}_{nu}", site(i)),
            OtocJob::Global { mu, nu } => format!("global_{mu}_{nu}"),
        }
    }

    pub fn is_decomposition(&self) -> bool {
        !matches!(self, OtocJob::Local { .. })
    }

    fn validate(&self, path: &str, sites: usize) -> Result<()> {
        let check = |name: &str, s: SiteRef| {
            s.resolve(sites).map(|_| ()).ok_or_else(|| {
                Error::config(format!("{path}.{name}"), format!("site {} is out of range for L = {sites}", s.0))
            })
        };
        match *self {
            OtocJob::Local { i, j, .. } => {
                check("i", i)?;
                check("j", j)
            }
            OtocJob::Mixed { i, .. } => check("i", i),
            OtocJob::Global { .. } => Ok(()),
        }
    }
}

/// How traces are sampled for the chi measure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Evaluate each trace directly on the window's sample points.
    #[default]
    Window,
    /// Evaluate on `[grid]` and interpolate linearly onto the window.
    Grid,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiOptions {
    #[serde(default)]
    pub sampling: Sampling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Even,
    Odd,
    Full,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Even => "even",
            Sector::Odd => "odd",
            Sector::Full => "full",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralOptions {
    /// Spectrum used for level statistics.
    #[serde(default = "even")]
    pub sector: Sector,
    /// Eigenvectors used for participation ratios; `full` is the computational basis.
    #[serde(default = "full")]
    pub pr_basis: Sector,
}

fn even() -> Sector {
    Sector::Even
}

fn full() -> Sector {
    Sector::Full
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { sector: Sector::Even, pr_basis: Sector::Full }
    }
}

/// What a command needs from the configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Trace,
    Chi,
    Spectral,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config("<document>", e.to_string()))?;
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "<document>".into() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config { path: field, msg } => Error::config(field, format!("{msg} (in {})", path.display())),
            other => other,
        })
    }

    /// Canonical TOML form; parsing it gives back an equal configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configurations always serialize")
    }

    pub fn hz_points(&self) -> Result<Vec<f64>> {
        self.chain.hz.points()
    }

    /// Chain parameters for `sites` at field `hz`.
    pub fn chain_at(&self, sites: usize, hz: f64) -> ChainParams {
        ChainParams { sites, coupling: self.chain.coupling, hx: self.chain.hx, hz }
    }

    pub fn validate(&self, cmd: Command) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(Error::config("name", "must be a non-empty file-name-safe string"));
        }
        if self.chain.sites.is_empty() {
            return Err(Error::config("chain.sites", "at least one chain length is required"));
        }
        for (k, &l) in self.chain.sites.iter().enumerate() {
            if l == 0 || l > DEFAULT_MAX_SITES {
                return Err(Error::config(format!("chain.sites[{k}]"), format!("must be in 1..={DEFAULT_MAX_SITES}, got {l}")));
            }
        }
        if !(self.chain.coupling > 0.0) || !self.chain.coupling.is_finite() {
            return Err(Error::config("chain.coupling", "must be positive"));
        }
        if !self.chain.hx.is_finite() {
            return Err(Error::config("chain.hx", "must be finite"));
        }
        let hz = self.hz_points()?;
        for (k, w) in self.windows.iter().enumerate() {
            w.validate().map_err(|e| Error::config(format!("window[{k}]"), e.to_string()))?;
        }
        if self.parallelism == Some(0) {
            return Err(Error::config("parallelism", "must be at least 1"));
        }
        if cmd == Command::Spectral {
            return Ok(());
        }
        if self.operators.is_empty() {
            return Err(Error::config("operators", "at least one OTOC job is required"));
        }
        for (k, job) in self.operators.iter().enumerate() {
            for &l in &self.chain.sites {
                job.validate(&format!("operators[{k}]"), l)?;
            }
        }
        match cmd {
            Command::Trace => {
                if self.grid.is_none() {
                    return Err(Error::config("grid", "a time grid is required for traces"));
                }
            }
            Command::Chi => {
                if self.windows.is_empty() {
                    return Err(Error::config("window", "at least one window is required"));
                }
                if hz.len() < 3 {
                    return Err(Error::config("chain.hz", format!("a chi sweep needs at least 3 points, got {}", hz.len())));
                }
                if self.chi.sampling == Sampling::Grid && self.grid.is_none() {
                    return Err(Error::config("grid", "grid sampling needs a time grid"));
                }
            }
            Command::Spectral => unreachable!(),
        }
        Ok(())
    }
}

/// Bundled presets, one per figure of the reference study.
pub const PRESETS: [(&str, &str); 5] = [
    ("fig1", include_str!("../../presets/fig1.toml")),
    ("fig2", include_str!("../../presets/fig2.toml")),
    ("fig3", include_str!("../../presets/fig3.toml")),
    ("fig4", include_str!("../../presets/fig4.toml")),
    ("fig5", include_str!("../../presets/fig5.toml")),
];

pub fn preset(name: &str) -> Result<RunConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::config("preset", format!("unknown preset `{name}` (known: fig1..fig5)")))?;
    RunConfig::from_toml(text)
}
