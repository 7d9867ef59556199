use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use otoc_core::cache::SpectrumCache;
use otoc_core::sweep::{self, RunConfig, RunOptions, RunReport};
use otoc_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_COMPUTE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "otoc", version, about = "OTOC and spectral chaos sweeps for short Ising chains")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write OTOC traces for every configured chain and job.
    Trace(RunArgs),
    /// Compute the chi fluctuation measure over the field sweep.
    Chi(RunArgs),
    /// Compute r-ratio statistics and participation ratios over the field sweep.
    Spectral(RunArgs),
    /// Inspect or clear the spectrum cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
        /// Cache directory; defaults to $OTOC_CACHE_DIR, then .otoc-cache.
        #[arg(long, global = true)]
        cache_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// List cached spectra as JSON.
    Inspect,
    /// Delete every cached spectrum.
    Clear,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Bundled configuration: fig1 .. fig5.
    #[arg(long)]
    preset: Option<String>,
    /// Run directory; defaults to the configured output_dir, then runs/<name>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Diagonalize every chain instead of reading and writing the cache.
    #[arg(long)]
    no_cache: bool,
    /// Cache directory; defaults to $OTOC_CACHE_DIR, then .otoc-cache.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

fn cache_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("OTOC_CACHE_DIR").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(".otoc-cache"))
}

fn load(args: &RunArgs) -> Result<RunConfig, Error> {
    match (&args.config, &args.preset) {
        (Some(path), _) => RunConfig::from_file(path),
        (None, Some(name)) => sweep::preset(name),
        (None, None) => unreachable!("clap requires one of --config and --preset"),
    }
}

fn run(args: RunArgs, f: fn(&RunConfig, &RunOptions) -> Result<RunReport, Error>) -> Result<(), Error> {
    let cfg = load(&args)?;
    if args.workers == Some(0) {
        return Err(Error::Config { path: "--workers".into(), msg: "must be at least 1".into() });
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| Path::new("runs").join(&cfg.name));
    let cache = (!args.no_cache).then(|| SpectrumCache::new(cache_dir(args.cache_dir.clone())));
    let report = f(&cfg, &RunOptions { out_dir, workers: args.workers, cache })?;
    let mut out = std::io::stdout().lock();
    for file in report.written.iter().map(String::as_str).chain(["manifest.json"]) {
        // A closed pipe on stdout is not a failure of the run.
        let _ = writeln!(out, "{}", report.out_dir.join(file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Trace(a) => run(a, sweep::cmd_trace),
        Cmd::Chi(a) => run(a, sweep::cmd_chi),
        Cmd::Spectral(a) => run(a, sweep::cmd_spectral),
        Cmd::Cache { action, cache_dir: dir } => {
            let cache = SpectrumCache::new(cache_dir(dir));
            match action {
                CacheAction::Inspect => cache.entries().and_then(|e| {
                    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&e)?);
                    Ok(())
                }),
                CacheAction::Clear => cache.clear().map(|n| println!("removed {n} file(s) from {}", cache.dir().display())),
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } => EXIT_CONFIG,
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_COMPUTE,
            })
        }
    }
}
