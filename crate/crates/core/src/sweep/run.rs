//! The `trace`, `chi` and `spectral` pipelines and the run directory they write.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{ChiOptions, Command, OtocJob, RunConfig, Sampling, Sector, SpectralOptions};
use crate::cache::SpectrumCache;
use crate::chaos::{
    chi_from_stats, fluctuation_stats, participation_ratio, r_statistics, resample, sigma_of_trace, ChiSweepResult,
    FluctuationStats, WindowSpec,
};
use crate::error::{Error, Result};
use crate::operator::OperatorSpec;
use crate::otoc::{otoc_global, otoc_local, otoc_mixed, Formula, OtocTrace, TimeGrid};
use crate::spectrum::{parity_sector_spectra, spectral_span, ChainParams, Spectrum};

pub const CODE_VERSION: &str = concat!("otoc-core ", env!("CARGO_PKG_VERSION"));

/// Even-sector size quoted for the 12-site chain. Reflection parity gives
/// 2080; spectral outputs for that length carry both numbers.
pub const QUOTED_EVEN_DIM_L12: usize = 2079;

fn even_dim_note(sites: usize, even_dim: usize) -> Option<String> {
    (sites == 12 && even_dim != QUOTED_EVEN_DIM_L12).then(|| {
        format!("reflection parity gives even_dim={even_dim}; the quoted size for L=12 is {QUOTED_EVEN_DIM_L12}")
    })
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; defaults to the configuration's hint, then to all cores.
    pub workers: Option<usize>,
    pub cache: Option<SpectrumCache>,
}

/// Files written by one command, relative to the run directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub written: Vec<String>,
}

/// One OTOC series produced by a job.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Whole,
    Total,
    Local,
    Nonlocal,
}

impl Part {
    fn suffix(self) -> &'static str {
        match self {
            Part::Whole => "",
            Part::Total => "_total",
            Part::Local => "_local",
            Part::Nonlocal => "_nonlocal",
        }
    }
}

fn parts_of(job: &OtocJob) -> &'static [Part] {
    if job.is_decomposition() {
        &[Part::Total, Part::Local, Part::Nonlocal]
    } else {
        &[Part::Whole]
    }
}

fn formula_of(job: &OtocJob, part: Part) -> Formula {
    match (job, part) {
        (OtocJob::Local { .. }, _) => Formula::Local,
        (OtocJob::Mixed { .. }, Part::Local) => Formula::MixedLocal,
        (OtocJob::Mixed { .. }, Part::Nonlocal) => Formula::MixedNonlocal,
        (OtocJob::Mixed { .. }, _) => Formula::MixedTotal,
        (OtocJob::Global { .. }, Part::Local) => Formula::GlobalLocal,
        (OtocJob::Global { .. }, Part::Nonlocal) => Formula::GlobalNonlocal,
        (OtocJob::Global { .. }, _) => Formula::GlobalTotal,
    }
}

fn operators_of(job: &OtocJob, sites: usize) -> Vec<OperatorSpec> {
    let site = |s: super::config::SiteRef| s.resolve(sites).expect("validated site");
    match *job {
        OtocJob::Local { i, mu, j, nu } => vec![OperatorSpec::local(site(i), mu), OperatorSpec::local(site(j), nu)],
        OtocJob::Mixed { i, mu, nu } => vec![OperatorSpec::local(site(i), mu), OperatorSpec::total(nu)],
        OtocJob::Global { mu, nu } => vec![OperatorSpec::total(mu), OperatorSpec::total(nu)],
    }
}

/// All series of `job` on `grid`, in the order of [`parts_of`].
pub fn job_traces(s: &Spectrum, job: &OtocJob, sites: usize, grid: &TimeGrid) -> Result<Vec<OtocTrace>> {
    let site = |r: super::config::SiteRef| r.resolve(sites).ok_or(Error::SiteOutOfRange { site: r.0.unsigned_abs() as usize, sites });
    Ok(match *job {
        OtocJob::Local { i, mu, j, nu } => vec![otoc_local(s, site(i)?, mu, site(j)?, nu, grid)?],
        OtocJob::Mixed { i, mu, nu } => {
            let d = otoc_mixed(s, site(i)?, mu, nu, grid)?;
            vec![d.total, d.local_part, d.nonlocal_part]
        }
        OtocJob::Global { mu, nu } => {
            let d = otoc_global(s, mu, nu, grid)?;
            vec![d.total, d.local_part, d.nonlocal_part]
        }
    })
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    opts: &'a RunOptions,
    written: Vec<String>,
}

impl Runner<'_> {
    fn spectrum(&self, p: &ChainParams) -> Result<Spectrum> {
        match &self.opts.cache {
            Some(cache) => cache.get_or_compute(p),
            None => Spectrum::of_chain(p),
        }
    }

    fn write(&mut self, rel: String, contents: &str) -> Result<()> {
        let path = self.opts.out_dir.join(&rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(rel);
        Ok(())
    }

    fn chain_header(&self, sites: usize) -> String {
        format!("sites={sites} coupling={:?} hx={:?}", self.cfg.chain.coupling, self.cfg.chain.hx)
    }
}

fn in_pool<T: Send>(cfg: &RunConfig, opts: &RunOptions, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let workers = opts.workers.or(cfg.parallelism).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

fn prepare_run_dir(cfg: &RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let snapshot = cfg.to_toml();
    let path = out.join("config.snapshot");
    match fs::read_to_string(&path) {
        Ok(existing) if existing != snapshot => {
            return Err(Error::config(
                "output_dir",
                format!("{} already holds a run of a different configuration", out.display()),
            ));
        }
        Ok(_) => {}
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(Error::io(path, e)),
    }
    fs::write(&path, snapshot).map_err(|e| Error::io(path, e))
}

fn start(cfg: &RunConfig, opts: &RunOptions, cmd: Command) -> Result<()> {
    cfg.validate(cmd)?;
    prepare_run_dir(cfg, &opts.out_dir)
}

fn finish(cfg: &RunConfig, runner: Runner<'_>) -> Result<RunReport> {
    write_manifest(cfg, &runner.opts.out_dir)?;
    Ok(RunReport { out_dir: runner.opts.out_dir.clone(), written: runner.written })
}

fn hz_tag(hz: f64) -> String {
    format!("{hz:.6}")
}

fn window_line(w: &WindowSpec) -> String {
    format!(
        "t_i={:?} delta_t={:?} n_samples={} rescale={} rescale_start={}",
        w.t_i, w.delta_t, w.n_samples, w.rescale, w.rescale_start
    )
}

/// One trace CSV per chain, field value, job and part. With a window
/// configured, a column `c` holds the trace divided by its mean over the
/// first window.
pub fn cmd_trace(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    start(cfg, opts, Command::Trace)?;
    let grid = cfg.grid.expect("validated grid");
    let hz = cfg.hz_points()?;
    let mut runner = Runner { cfg, opts, written: Vec::new() };
    for &sites in &cfg.chain.sites {
        let reference = match cfg.windows.first() {
            Some(w) if w.rescale => Some(spectral_span(&runner.spectrum(&cfg.chain_at(sites, 0.0))?)?),
            _ => None,
        };
        let files = in_pool(cfg, opts, || {
            hz.par_iter()
                .map(|&h| {
                    let s = runner.spectrum(&cfg.chain_at(sites, h))?;
                    let span = spectral_span(&s)?;
                    let mut out = Vec::new();
                    for job in &cfg.operators {
                        for (trace, part) in job_traces(&s, job, sites, &grid)?.into_iter().zip(parts_of(job)) {
                            let csv = match cfg.windows.first() {
                                Some(w) => {
                                    let (a, b) = w.interval(span, reference.unwrap_or(span))?;
                                    let stats = fluctuation_stats(&resample(&trace, a, b, w.n_samples)?, (a, b));
                                    let c: Vec<f64> = trace.values.iter().map(|v| v / stats.mean_c).collect();
                                    let mut csv = trace.to_csv_with_column("c", &c)?;
                                    let at = csv.find("\nt,").map_or(0, |k| k + 1);
                                    csv.insert_str(at, &format!("# window: {} start={a:?} end={b:?}\n", window_line(w)));
                                    csv
                                }
                                None => trace.to_csv(),
                            };
                            let name = format!("traces/{}{}_L{sites}_hz{}.csv", job.label(sites), part.suffix(), hz_tag(h));
                            out.push((name, csv));
                        }
                    }
                    Ok(out)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for (name, csv) in files.into_iter().flatten() {
            runner.write(name, &csv)?;
        }
    }
    finish(cfg, runner)
}

/// Machine-readable mirror of a chi CSV.
#[derive(Serialize)]
struct ChiRecord<'a> {
    metric: &'static str,
    code_version: &'static str,
    run: &'a str,
    job: OtocJob,
    formula: Formula,
    sites: usize,
    coupling: f64,
    hx: f64,
    operators: Vec<OperatorSpec>,
    window_index: usize,
    window: WindowSpec,
    sampling: Sampling,
    reference_span: f64,
    result: &'a ChiSweepResult,
}

/// Statistics for one field value: `[job][part][window]`.
type PointStats = Vec<Vec<Vec<FluctuationStats>>>;

fn point_stats(cfg: &RunConfig, opts: ChiOptions, s: &Spectrum, sites: usize, reference: f64) -> Result<PointStats> {
    let span = spectral_span(s)?;
    let mut out = Vec::with_capacity(cfg.operators.len());
    for job in &cfg.operators {
        let n_parts = parts_of(job).len();
        let mut per_part = vec![Vec::with_capacity(cfg.windows.len()); n_parts];
        match opts.sampling {
            Sampling::Grid => {
                let traces = job_traces(s, job, sites, cfg.grid.as_ref().expect("validated grid"))?;
                for w in &cfg.windows {
                    for (p, trace) in traces.iter().enumerate() {
                        per_part[p].push(sigma_of_trace(trace, w, span, reference)?);
                    }
                }
            }
            Sampling::Window => {
                for w in &cfg.windows {
                    let samples = w.sample_grid(span, reference)?;
                    for (p, trace) in job_traces(s, job, sites, &samples)?.iter().enumerate() {
                        per_part[p].push(sigma_of_trace(trace, w, span, reference)?);
                    }
                }
            }
        }
        out.push(per_part);
    }
    Ok(out)
}

/// The chi measure per chain length, job, part and window.
pub fn cmd_chi(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    start(cfg, opts, Command::Chi)?;
    let hz = cfg.hz_points()?;
    let mut runner = Runner { cfg, opts, written: Vec::new() };
    for &sites in &cfg.chain.sites {
        let reference = spectral_span(&runner.spectrum(&cfg.chain_at(sites, 0.0))?)?;
        let points: Vec<PointStats> = in_pool(cfg, opts, || {
            hz.par_iter()
                .map(|&h| point_stats(cfg, cfg.chi, &runner.spectrum(&cfg.chain_at(sites, h))?, sites, reference))
                .collect()
        })?;
        for (j, job) in cfg.operators.iter().enumerate() {
            for (p, &part) in parts_of(job).iter().enumerate() {
                for (k, window) in cfg.windows.iter().enumerate() {
                    let stats = points.iter().map(|pt| pt[j][p][k]).collect();
                    let result = chi_from_stats(&hz, stats)?;
                    let stem = format!("chi/{}{}_L{sites}_w{k}", job.label(sites), part.suffix());
                    let formula = formula_of(job, part);
                    let operators = operators_of(job, sites);
                    let csv = chi_csv(&runner, sites, formula, &operators, window, reference, &result);
                    let record = ChiRecord {
                        metric: "chi",
                        code_version: CODE_VERSION,
                        run: &cfg.name,
                        job: *job,
                        formula,
                        sites,
                        coupling: cfg.chain.coupling,
                        hx: cfg.chain.hx,
                        operators,
                        window_index: k,
                        window: *window,
                        sampling: cfg.chi.sampling,
                        reference_span: reference,
                        result: &result,
                    };
                    let json = serde_json::to_string_pretty(&record)? + "\n";
                    runner.write(format!("{stem}.csv"), &csv)?;
                    runner.write(format!("{stem}.json"), &json)?;
                }
            }
        }
    }
    finish(cfg, runner)
}

fn chi_csv(
    runner: &Runner<'_>,
    sites: usize,
    formula: Formula,
    operators: &[OperatorSpec],
    w: &WindowSpec,
    reference: f64,
    r: &ChiSweepResult,
) -> String {
    let mut s = String::new();
    let ops: Vec<String> = operators.iter().map(|o| o.label()).collect();
    let _ = writeln!(s, "# metric: chi");
    let _ = writeln!(s, "# formula: {}", formula.tag());
    let _ = writeln!(s, "# chain: {}", runner.chain_header(sites));
    let _ = writeln!(s, "# operators: {}", ops.join(" "));
    let _ = writeln!(s, "# window: {}", window_line(w));
    let _ = writeln!(s, "# reference_span: {reference:?}");
    let _ = writeln!(s, "# inv_sigma_min: {:?}", r.inv_sigma_min);
    let _ = writeln!(s, "# inv_sigma_max: {:?}", r.inv_sigma_max);
    let _ = writeln!(s, "h_z,inv_sigma,chi,degenerate,delta_tau");
    for (k, h) in r.parameter_grid.iter().enumerate() {
        let st = &r.stats[k];
        let _ = writeln!(
            s,
            "{h:?},{:?},{:?},{},{:?}",
            r.inv_sigma_values[k],
            r.chi_values[k],
            r.degenerate[k],
            st.window_end - st.window_start
        );
    }
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralRow {
    pub h_z: f64,
    pub eta: f64,
    pub mean_r_tilde: f64,
    pub n_levels: usize,
    pub n_dropped: usize,
    pub mean_pr_normalized: f64,
    pub even_dim: usize,
    pub odd_dim: usize,
    pub commutator_error: f64,
}

/// Level statistics and participation ratio of one chain.
pub fn spectral_point(p: &ChainParams, opts: SpectralOptions) -> Result<SpectralRow> {
    let ss = parity_sector_spectra(p)?;
    let levels: Vec<f64> = match opts.sector {
        Sector::Even => ss.even.eigenvalues().to_vec(),
        Sector::Odd => ss.odd.eigenvalues().to_vec(),
        Sector::Full => {
            let mut all: Vec<f64> = ss.even.eigenvalues().iter().chain(ss.odd.eigenvalues()).copied().collect();
            all.sort_by(f64::total_cmp);
            all
        }
    };
    let r = r_statistics(&levels)?;
    let pr = match opts.pr_basis {
        Sector::Full => participation_ratio(&ss.full_spectrum())?,
        Sector::Even => participation_ratio(&ss.even)?,
        Sector::Odd => participation_ratio(&ss.odd)?,
    };
    Ok(SpectralRow {
        h_z: p.hz,
        eta: r.eta,
        mean_r_tilde: r.mean_r_tilde,
        n_levels: levels.len(),
        n_dropped: r.n_dropped,
        mean_pr_normalized: pr.mean_pr_normalized,
        even_dim: ss.basis.even.len(),
        odd_dim: ss.basis.odd.len(),
        commutator_error: ss.commutator_error,
    })
}

#[derive(Serialize)]
struct SpectralRecord<'a> {
    metric: &'static str,
    code_version: &'static str,
    run: &'a str,
    sites: usize,
    coupling: f64,
    hx: f64,
    sector: Sector,
    pr_basis: Sector,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    rows: &'a [SpectralRow],
}

/// The r-ratio indicator and mean participation ratio over the field sweep.
pub fn cmd_spectral(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    start(cfg, opts, Command::Spectral)?;
    let hz = cfg.hz_points()?;
    let mut runner = Runner { cfg, opts, written: Vec::new() };
    let so = cfg.spectral;
    for &sites in &cfg.chain.sites {
        let rows: Vec<SpectralRow> =
            in_pool(cfg, opts, || hz.par_iter().map(|&h| spectral_point(&cfg.chain_at(sites, h), so)).collect())?;
        let mut s = String::new();
        let _ = writeln!(s, "# metric: spectral");
        let _ = writeln!(s, "# chain: {}", runner.chain_header(sites));
        let _ = writeln!(s, "# eta_sector: {}", so.sector);
        let _ = writeln!(s, "# pr_basis: {}", so.pr_basis);
        let note = rows.first().and_then(|r| even_dim_note(sites, r.even_dim));
        if let Some(r) = rows.first() {
            let _ = writeln!(s, "# sectors: even_dim={} odd_dim={}", r.even_dim, r.odd_dim);
        }
        if let Some(n) = &note {
            let _ = writeln!(s, "# note: {n}");
        }
        let _ = writeln!(s, "h_z,eta,mean_r_tilde,n_levels,n_dropped,mean_pr_normalized");
        for r in &rows {
            let _ = writeln!(
                s,
                "{:?},{:?},{:?},{},{},{:?}",
                r.h_z, r.eta, r.mean_r_tilde, r.n_levels, r.n_dropped, r.mean_pr_normalized
            );
        }
        let record = SpectralRecord {
            metric: "spectral",
            code_version: CODE_VERSION,
            run: &cfg.name,
            sites,
            coupling: cfg.chain.coupling,
            hx: cfg.chain.hx,
            sector: so.sector,
            pr_basis: so.pr_basis,
            note,
            rows: &rows,
        };
        runner.write(format!("spectral/spectral_L{sites}.csv"), &s)?;
        runner.write(format!("spectral/spectral_L{sites}.json"), &(serde_json::to_string_pretty(&record)? + "\n"))?;
    }
    finish(cfg, runner)
}

#[derive(Serialize)]
struct Manifest {
    name: String,
    code_version: &'static str,
    config_sha256: String,
    artifacts: Vec<Artifact>,
}

#[derive(Serialize)]
struct Artifact {
    path: String,
    kind: String,
    bytes: u64,
    sha256: String,
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if let Ok(rel) = path.strip_prefix(root) {
            let rel = rel.to_string_lossy().replace('\\', "/");
            if rel != "manifest.json" {
                out.push(rel);
            }
        }
    }
    Ok(())
}

/// Rewrites `manifest.json` to list every file in the run directory.
pub fn write_manifest(cfg: &RunConfig, out: &Path) -> Result<()> {
    let mut files = Vec::new();
    collect_files(out, out, &mut files)?;
    files.sort();
    let mut artifacts = Vec::with_capacity(files.len());
    for rel in files {
        let path = out.join(&rel);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let kind = match rel.split_once('/') {
            Some((dir, _)) => dir.trim_end_matches('s').to_string(),
            None => "snapshot".to_string(),
        };
        artifacts.push(Artifact { kind, bytes: bytes.len() as u64, sha256: hex::encode(Sha256::digest(&bytes)), path: rel });
    }
    let manifest = Manifest {
        name: cfg.name.clone(),
        code_version: CODE_VERSION,
        config_sha256: hex::encode(Sha256::digest(cfg.to_toml().as_bytes())),
        artifacts,
    };
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(path, e))
}
