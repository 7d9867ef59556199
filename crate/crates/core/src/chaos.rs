//! Chaos indicators: OTOC fluctuation statistics and the chi sweep measure,
//! level-spacing ratios, and eigenstate participation ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::otoc::{OtocTrace, TimeGrid};
use crate::spectrum::Spectrum;

/// Mean of `min(r, 1/r)` for Wigner-Dyson (GOE) level statistics.
pub const MEAN_R_WIGNER_DYSON: f64 = 0.536;
/// Mean of `min(r, 1/r)` for Poisson level statistics.
pub const MEAN_R_POISSON: f64 = 0.386;
/// Below this a window mean or standard deviation counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Spacings below this fraction of the spectral span are dropped.
pub const SPACING_TOL: f64 = 1e-10;
/// Column-norm tolerance for participation ratios.
pub const NORMALIZATION_TOL: f64 = 1e-8;

fn default_samples() -> usize {
    256
}

fn default_true() -> bool {
    true
}

/// Time window for the fluctuation statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    /// Window start, in units of `1/J`.
    pub t_i: f64,
    /// Width at `h_z = 0`.
    pub delta_t: f64,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Scale the width by the spectral-span ratio.
    #[serde(default = "default_true")]
    pub rescale: bool,
    /// Also scale the start by the span ratio.
    #[serde(default)]
    pub rescale_start: bool,
}

impl WindowSpec {
    pub fn new(t_i: f64, delta_t: f64, n_samples: usize) -> Result<Self> {
        let w = WindowSpec { t_i, delta_t, n_samples, rescale: true, rescale_start: false };
        w.validate()?;
        Ok(w)
    }

    pub fn fixed(self) -> Self {
        WindowSpec { rescale: false, rescale_start: false, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_t > 0.0) || !self.delta_t.is_finite() {
            return Err(Error::InvalidParameter(format!("window width must be positive, got {}", self.delta_t)));
        }
        if !(self.t_i >= 0.0) || !self.t_i.is_finite() {
            return Err(Error::InvalidParameter(format!("window start must be >= 0, got {}", self.t_i)));
        }
        if self.n_samples < 16 {
            return Err(Error::InvalidParameter(format!("window needs at least 16 samples, got {}", self.n_samples)));
        }
        Ok(())
    }

    /// `[start, end]` of the window for a chain whose spectral span is
    /// `gap` against the reference span `gap_0`.
    pub fn interval(&self, gap: f64, gap_0: f64) -> Result<(f64, f64)> {
        self.validate()?;
        if !self.rescale {
            return Ok((self.t_i, self.t_i + self.delta_t));
        }
        let width = scaled_window(gap, gap_0, self.delta_t)?;
        let start = if self.rescale_start { self.t_i * width / self.delta_t } else { self.t_i };
        Ok((start, start + width))
    }

    /// The uniform sample points of the window, as a grid.
    pub fn sample_grid(&self, gap: f64, gap_0: f64) -> Result<TimeGrid> {
        let (a, b) = self.interval(gap, gap_0)?;
        TimeGrid::new(a, b, self.n_samples)
    }
}

/// `(gap / gap_0) * delta_t`.
pub fn scaled_window(gap: f64, gap_0: f64, delta_t: f64) -> Result<f64> {
    if !(gap_0 > 0.0) || !gap_0.is_finite() {
        return Err(Error::InvalidParameter(format!("reference spectral span must be positive, got {gap_0}")));
    }
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::InvalidParameter(format!("spectral span must be positive, got {gap}")));
    }
    if !(delta_t > 0.0) {
        return Err(Error::InvalidParameter(format!("window width must be positive, got {delta_t}")));
    }
    Ok(gap / gap_0 * delta_t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctuationStats {
    pub window_start: f64,
    pub window_end: f64,
    /// Window average of the trace.
    pub mean_c: f64,
    /// Standard deviation of `c(t) = C(t) / <C>`; `None` when `<C>` vanishes.
    pub sigma: Option<f64>,
    /// `1 / sigma`; `None` when degenerate.
    pub inv_sigma: Option<f64>,
    pub degenerate: bool,
}

/// Samples `trace` uniformly on `[a, b]`, interpolating linearly between grid points.
pub fn resample(trace: &OtocTrace, a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    let g = &trace.grid;
    let slack = 1e-9 * g.step();
    if a < g.start() - slack || b > g.end() + slack || !(b > a) {
        return Err(Error::WindowOutOfRange { start: a, end: b, lo: g.start(), hi: g.end() });
    }
    let samples = TimeGrid::new(a, b, n)?;
    if samples == *g {
        return Ok(trace.values.clone());
    }
    let last = g.len() - 1;
    Ok(samples
        .points()
        .map(|t| {
            let x = ((t - g.start()) / g.step()).clamp(0.0, last as f64);
            let k = (x.floor() as usize).min(last - 1);
            let frac = x - k as f64;
            let (v0, v1) = (trace.values[k], trace.values[k + 1]);
            if frac == 0.0 {
                v0
            } else {
                v0 + (v1 - v0) * frac
            }
        })
        .collect())
}

/// Fluctuation statistics of raw window samples.
pub fn fluctuation_stats(samples: &[f64], window: (f64, f64)) -> FluctuationStats {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (window_start, window_end) = window;
    if !(mean.abs() >= DEGENERACY_TOL) {
        return FluctuationStats { window_start, window_end, mean_c: mean, sigma: None, inv_sigma: None, degenerate: true };
    }
    // sqrt(<c^2> - 1) with c = C/<C>, in centered form so that a constant
    // trace gives exactly zero instead of rounding noise.
    let var = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sigma = var.sqrt() / mean.abs();
    let degenerate = sigma < DEGENERACY_TOL;
    FluctuationStats {
        window_start,
        window_end,
        mean_c: mean,
        sigma: Some(sigma),
        inv_sigma: if degenerate { None } else { Some(1.0 / sigma) },
        degenerate,
    }
}

/// Fluctuation statistics of `trace` over the window `w`, scaled by `gap / gap_0`.
pub fn sigma_of_trace(trace: &OtocTrace, w: &WindowSpec, gap: f64, gap_0: f64) -> Result<FluctuationStats> {
    let (a, b) = w.interval(gap, gap_0)?;
    let samples = resample(trace, a, b, w.n_samples)?;
    Ok(fluctuation_stats(&samples, (a, b)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSweepResult {
    pub parameter_grid: Vec<f64>,
    pub inv_sigma_values: Vec<f64>,
    pub chi_values: Vec<f64>,
    pub inv_sigma_min: f64,
    pub inv_sigma_max: f64,
    pub degenerate: Vec<bool>,
    pub stats: Vec<FluctuationStats>,
}

impl ChiSweepResult {
    /// Mean chi over grid points with `lo <= h <= hi`.
    pub fn mean_chi_between(&self, lo: f64, hi: f64) -> Option<f64> {
        let tol = 1e-9;
        let sel: Vec<f64> = self
            .parameter_grid
            .iter()
            .zip(&self.chi_values)
            .filter(|(h, _)| **h >= lo - tol && **h <= hi + tol)
            .map(|(_, c)| *c)
            .collect();
        (!sel.is_empty()).then(|| sel.iter().sum::<f64>() / sel.len() as f64)
    }

    /// Chi at the grid point nearest to `h`.
    pub fn chi_at(&self, h: f64) -> Option<f64> {
        self.parameter_grid
            .iter()
            .zip(&self.chi_values)
            .min_by(|a, b| (a.0 - h).abs().total_cmp(&(b.0 - h).abs()))
            .map(|(_, c)| *c)
    }

    pub fn window_widths(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.window_end - s.window_start).collect()
    }
}

/// Normalizes per-point statistics into chi. Degenerate points take the
/// largest non-degenerate `1/sigma`.
pub fn chi_from_stats(grid: &[f64], stats: Vec<FluctuationStats>) -> Result<ChiSweepResult> {
    if grid.len() != stats.len() {
        return Err(Error::DimensionMismatch { left: grid.len(), right: stats.len() });
    }
    if grid.len() < 3 {
        return Err(Error::InvalidParameter(format!("a chi sweep needs at least 3 points, got {}", grid.len())));
    }
    let live: Vec<f64> = stats.iter().filter_map(|s| s.inv_sigma).collect();
    if live.is_empty() {
        return Err(Error::AllDegenerate);
    }
    let min = live.iter().copied().fold(f64::INFINITY, f64::min);
    let max = live.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(Error::InvalidParameter("1/sigma is constant over the sweep; chi is undefined".into()));
    }
    let inv_sigma_values: Vec<f64> = stats.iter().map(|s| s.inv_sigma.unwrap_or(max)).collect();
    let chi_values = inv_sigma_values.iter().map(|v| (v - min) / (max - min)).collect();
    Ok(ChiSweepResult {
        parameter_grid: grid.to_vec(),
        inv_sigma_values,
        chi_values,
        inv_sigma_min: min,
        inv_sigma_max: max,
        degenerate: stats.iter().map(|s| s.degenerate).collect(),
        stats,
    })
}

/// One point of a chi sweep.
#[derive(Clone, Copy, Debug)]
pub struct SweepPoint<'a> {
    pub h_z: f64,
    pub trace: &'a OtocTrace,
    /// Spectral span at this `h_z`.
    pub gap: f64,
}

/// The chi measure over a sweep; `gap_0` is the spectral span at `h_z = 0`.
pub fn chi_sweep(points: &[SweepPoint<'_>], w: &WindowSpec, gap_0: f64) -> Result<ChiSweepResult> {
    let stats = points.iter().map(|p| sigma_of_trace(p.trace, w, p.gap, gap_0)).collect::<Result<Vec<_>>>()?;
    let grid: Vec<f64> = points.iter().map(|p| p.h_z).collect();
    chi_from_stats(&grid, stats)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralChaosStats {
    pub r_values: Vec<f64>,
    pub r_tilde_values: Vec<f64>,
    pub mean_r_tilde: f64,
    pub eta: f64,
    pub n_dropped: usize,
}

/// Consecutive level-spacing ratios of an ascending spectrum and the
/// normalized indicator `eta`, which is 0 for Poisson and 1 for Wigner-Dyson
/// statistics. Not clamped. Meant for a single symmetry sector.
pub fn r_statistics(eigenvalues: &[f64]) -> Result<SpectralChaosStats> {
    if eigenvalues.len() < 4 {
        return Err(Error::SpectrumTooSmall(format!("need at least 4 levels, got {}", eigenvalues.len())));
    }
    if eigenvalues.iter().any(|e| !e.is_finite()) || eigenvalues.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("eigenvalues must be finite and ascending".into()));
    }
    let span = eigenvalues[eigenvalues.len() - 1] - eigenvalues[0];
    let floor = SPACING_TOL * span;
    let mut spacings = Vec::with_capacity(eigenvalues.len());
    let mut n_dropped = 0;
    for w in eigenvalues.windows(2) {
        let s = w[1] - w[0];
        if s > floor {
            spacings.push(s);
        } else {
            n_dropped += 1;
        }
    }
    if spacings.len() < 3 {
        return Err(Error::SpectrumTooSmall(format!("only {} usable level spacings", spacings.len())));
    }
    let r_values: Vec<f64> = spacings.windows(2).map(|p| p[1] / p[0]).collect();
    let r_tilde_values: Vec<f64> = r_values.iter().map(|&r| r.min(1.0 / r)).collect();
    let mean_r_tilde = r_tilde_values.iter().sum::<f64>() / r_tilde_values.len() as f64;
    let eta = (mean_r_tilde - MEAN_R_POISSON) / (MEAN_R_WIGNER_DYSON - MEAN_R_POISSON);
    Ok(SpectralChaosStats { r_values, r_tilde_values, mean_r_tilde, eta, n_dropped })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticipationStats {
    pub per_state_pr: Vec<f64>,
    /// `sum_i xi_i / (D * D/3)`: 1 for Gaussian-random eigenvectors.
    pub mean_pr_normalized: f64,
}

/// Participation ratios `1 / sum_j |a_ij|^4` of every eigenstate in the
/// computational basis.
pub fn participation_ratio(s: &Spectrum) -> Result<ParticipationStats> {
    let d = s.dim();
    let mut per_state_pr = Vec::with_capacity(d);
    for k in 0..d {
        let (mut norm, mut quartic) = (0.0, 0.0);
        match s.real_eigenvectors() {
            Some(v) => {
                for &a in v.col(k).iter() {
                    let p = a * a;
                    norm += p;
                    quartic += p * p;
                }
            }
            None => {
                for j in 0..d {
                    let p = s.amplitude(j, k).norm_sqr();
                    norm += p;
                    quartic += p * p;
                }
            }
        }
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized((norm - 1.0).abs()));
        }
        per_state_pr.push(1.0 / quartic);
    }
    let delocalized = d as f64 / 3.0;
    let mean_pr_normalized = per_state_pr.iter().sum::<f64>() / (d as f64 * delocalized);
    Ok(ParticipationStats { per_state_pr, mean_pr_normalized })
}
