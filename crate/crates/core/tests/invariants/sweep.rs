use std::fs;
use std::path::Path;

use otoc_core::cache::SpectrumCache;
use otoc_core::sweep::*;
use otoc_core::{TimeGrid, WindowSpec};
use proptest::prelude::*;

use super::operator::direction;
use super::run;

fn job() -> impl Strategy<Value = OtocJob> {
    prop_oneof![
        (-3i64..3, direction(), -3i64..3, direction())
            .prop_map(|(i, mu, j, nu)| OtocJob::Local { i: SiteRef(i), mu, j: SiteRef(j), nu }),
        (-3i64..3, direction(), direction()).prop_map(|(i, mu, nu)| OtocJob::Mixed { i: SiteRef(i), mu, nu }),
        (direction(), direction()).prop_map(|(mu, nu)| OtocJob::Global { mu, nu }),
    ]
}

fn window() -> impl Strategy<Value = WindowSpec> {
    (0.0f64..5.0, 1.0f64..3000.0, 16usize..9000, any::<bool>(), any::<bool>())
        .prop_map(|(t_i, delta_t, n_samples, rescale, rescale_start)| WindowSpec { t_i, delta_t, n_samples, rescale, rescale_start })
}

fn hz_grid() -> impl Strategy<Value = HzGrid> {
    prop_oneof![
        prop::collection::vec(-3.0f64..3.0, 1..8).prop_map(HzGrid::values),
        (0.0f64..1.0, 0.0f64..2.0, 0.01f64..0.5).prop_map(|(a, w, s)| HzGrid::range(a, a + w, s)),
    ]
}

fn config() -> impl Strategy<Value = RunConfig> {
    let preset_name = prop::sample::select(vec!["fig1", "fig2", "fig3", "fig4", "fig5"]);
    (
        preset_name,
        prop::collection::vec(2usize..9, 1..4),
        (0.1f64..3.0, -2.0f64..2.0, hz_grid()),
        prop::option::of((0.0f64..10.0, 1.0f64..100.0, 2usize..5000)),
        prop::collection::vec(window(), 0..4),
        prop::collection::vec(job(), 0..4),
        (any::<bool>(), prop::option::of(1usize..16)),
    )
        .prop_map(|(name, sites, (coupling, hx, hz), grid, windows, operators, (grid_sampling, parallelism))| {
            let mut cfg = preset(name).unwrap();
            cfg.chain = ChainSweep { sites, coupling, hx, hz };
            cfg.grid = grid.map(|(a, w, n)| TimeGrid::new(a, a + w, n).unwrap());
            cfg.windows = windows;
            cfg.operators = operators;
            cfg.chi.sampling = if grid_sampling { Sampling::Grid } else { Sampling::Window };
            cfg.parallelism = parallelism;
            cfg
        })
}

pub fn configs_survive_a_toml_round_trip(cases: u32) -> Result<(), String> {
    run(cases, config(), |cfg| {
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml(), text);
        Ok(())
    })
}

pub fn presets_are_canonical_after_one_round_trip(_: u32) -> Result<(), String> {
    for (name, _) in PRESETS {
        let cfg = preset(name).unwrap();
        if RunConfig::from_toml(&cfg.to_toml()).unwrap() != cfg {
            return Err(format!("preset {name} changes on a round trip"));
        }
    }
    Ok(())
}

const SMALL: &str = r#"
name = "props"

[chain]
sites = [3, 4]
hx = 1.0
hz = { start = 0.0, stop = 1.0, step = 0.25 }

[grid]
t_start = 0.0
t_end = 60.0
n_points = 1201

[[window]]
t_i = 1.5
delta_t = 20.0
n_samples = 128

[[window]]
t_i = 1.0
delta_t = 30.0
n_samples = 64
rescale_start = true

[[operators]]
kind = "local"
i = 0
mu = "z"
j = -1
nu = "x"

[[operators]]
kind = "global"
mu = "z"
nu = "x"
"#;

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn run_all(cfg: &RunConfig, out: &Path, workers: usize, cache: Option<SpectrumCache>) -> Vec<(String, Vec<u8>)> {
    let opts = RunOptions { out_dir: out.to_path_buf(), workers: Some(workers), cache };
    cmd_trace(cfg, &opts).unwrap();
    cmd_chi(cfg, &opts).unwrap();
    tree(out)
}

pub fn outputs_do_not_depend_on_workers_or_cache_state(_: u32) -> Result<(), String> {
    let dir = tempfile::tempdir().unwrap();
    let base = RunConfig::from_toml(SMALL).unwrap();
    let mut gridded = base.clone();
    gridded.chi.sampling = Sampling::Grid;
    for cfg in [base, gridded] {
        let cache = SpectrumCache::new(dir.path().join(format!("cache_{:?}", cfg.chi.sampling)));
        let reference = run_all(&cfg, &dir.path().join("a"), 1, None);
        assert!(reference.len() > 20);
        let cold = run_all(&cfg, &dir.path().join("b"), 2, Some(cache.clone()));
        assert!(!cache.entries().unwrap().is_empty());
        let warm = run_all(&cfg, &dir.path().join("c"), 3, Some(cache));
        if reference != cold || reference != warm {
            return Err(format!("{:?} sampling: outputs differ between runs", cfg.chi.sampling));
        }
        for sub in ["a", "b", "c"] {
            fs::remove_dir_all(dir.path().join(sub)).unwrap();
        }
    }
    Ok(())
}

pub fn spectral_rows_are_deterministic(_: u32) -> Result<(), String> {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::from_toml(SMALL).unwrap();
    cfg.chain.sites = vec![6];
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    cmd_spectral(&cfg, &RunOptions { out_dir: a.clone(), workers: Some(1), cache: None }).unwrap();
    cmd_spectral(&cfg, &RunOptions { out_dir: b.clone(), workers: Some(3), cache: None }).unwrap();
    if tree(&a) != tree(&b) {
        return Err("spectral outputs differ between worker counts".into());
    }
    Ok(())
}
