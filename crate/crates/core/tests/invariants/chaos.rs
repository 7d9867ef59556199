use faer::Mat;
use otoc_core::chaos::*;
use otoc_core::operator::PauliDirection::{X, Z};
use otoc_core::otoc::{otoc_local, OtocTrace, TimeGrid};
use otoc_core::spectrum::{spectral_span, ChainParams, Spectrum};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::run;
use crate::common::*;

fn modes() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.01f64..0.4, 0.2f64..3.0, 0.0f64..6.3), 1..4)
}

pub fn sigma_is_scale_free_and_nonnegative(cases: u32) -> Result<(), String> {
    run(cases, (prop::collection::vec(0.01f64..2.0, 16..200), 1e-3f64..1e3), |(samples, scale)| {
        let a = fluctuation_stats(&samples, (0.0, 1.0));
        let scaled: Vec<f64> = samples.iter().map(|x| x * scale).collect();
        let b = fluctuation_stats(&scaled, (0.0, 1.0));
        let (sa, sb) = (a.sigma.unwrap(), b.sigma.unwrap());
        prop_assert!(sa >= 0.0);
        prop_assert!((sa - sb).abs() <= 1e-12 * sa.max(1.0));
        let c_mean = samples.iter().map(|x| x / a.mean_c).sum::<f64>() / samples.len() as f64;
        prop_assert!((c_mean - 1.0).abs() < 1e-12);
        Ok(())
    })
}

pub fn chi_spans_the_unit_interval_and_ignores_common_scale(cases: u32) -> Result<(), String> {
    run(cases, (prop::collection::vec(modes(), 3..12), 1e-3f64..1e3), |(sweeps, scale)| {
        let grid = TimeGrid::new(0.0, 60.0, 1201).unwrap();
        let w = WindowSpec::new(1.5, 50.0, 512).unwrap().fixed();
        let hz: Vec<f64> = (0..sweeps.len()).map(|k| k as f64 * 0.1).collect();
        let traces: Vec<OtocTrace> = sweeps.iter().map(|m| wave(grid, 1.0, m)).collect();
        let scaled: Vec<OtocTrace> =
            traces.iter().map(|t| synthetic(grid, t.values.iter().map(|v| v * scale).collect())).collect();
        let sweep = |ts: &[OtocTrace]| {
            let pts: Vec<SweepPoint> = ts.iter().zip(&hz).map(|(t, &h)| SweepPoint { h_z: h, trace: t, gap: 1.0 }).collect();
            chi_sweep(&pts, &w, 1.0)
        };
        let Ok(a) = sweep(&traces) else { return Ok(()) };
        prop_assert!(a.chi_values.contains(&0.0));
        prop_assert!(a.chi_values.contains(&1.0));
        prop_assert!(a.chi_values.iter().all(|c| (0.0..=1.0).contains(c)));
        let b = sweep(&scaled).unwrap();
        for (x, y) in a.chi_values.iter().zip(&b.chi_values) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        Ok(())
    })
}

pub fn r_statistics_ignore_affine_maps(cases: u32) -> Result<(), String> {
    let strategy = (prop::collection::vec(0.01f64..3.0, 8..120), 1e-3f64..1e3, -1e3f64..1e3);
    run(cases, strategy, |(spacings, a, b)| {
        let levels: Vec<f64> = spacings
            .iter()
            .scan(0.0, |e, s| {
                *e += s;
                Some(*e)
            })
            .collect();
        let mapped: Vec<f64> = levels.iter().map(|e| a * e + b).collect();
        let (x, y) = (r_statistics(&levels).unwrap(), r_statistics(&mapped).unwrap());
        prop_assert_eq!(x.n_dropped, y.n_dropped);
        prop_assert!((x.mean_r_tilde - y.mean_r_tilde).abs() < 1e-9);
        prop_assert!((x.eta - y.eta).abs() < 1e-8);
        Ok(())
    })
}

pub fn permuting_the_basis_fixes_the_mean_participation(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 4usize..40), |(seed, d)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_orthogonal(d, &mut rng);
        let mut perm: Vec<usize> = (0..d).collect();
        for k in (1..d).rev() {
            perm.swap(k, rng.random_range(0..=k));
        }
        let permuted = Mat::from_fn(d, d, |i, j| v[(perm[i], j)]);
        let a = participation_ratio(&Spectrum::from_real_parts(ladder(d), v).unwrap()).unwrap();
        let b = participation_ratio(&Spectrum::from_real_parts(ladder(d), permuted).unwrap()).unwrap();
        prop_assert!((a.mean_pr_normalized - b.mean_pr_normalized).abs() < 1e-12);
        for (x, y) in a.per_state_pr.iter().zip(&b.per_state_pr) {
            prop_assert!((x - y).abs() < 1e-9 * x);
        }
        Ok(())
    })
}

pub fn doubling_samples_barely_moves_sigma(cases: u32) -> Result<(), String> {
    run(cases, (0.0f64..2.5, 100.0f64..400.0), |(hz, delta_t)| {
        let p = ChainParams::new(3, 1.0, hz);
        let s = Spectrum::of_chain(&p).unwrap();
        let gap_0 = spectral_span(&Spectrum::of_chain(&p.with_hz(0.0)).unwrap()).unwrap();
        let gap = spectral_span(&s).unwrap();
        let sigma = |n: usize| {
            let w = WindowSpec::new(1.5, delta_t, n).unwrap();
            let g = w.sample_grid(gap, gap_0).unwrap();
            sigma_of_trace(&otoc_local(&s, 0, Z, 2, X, &g).unwrap(), &w, gap, gap_0).unwrap().sigma.unwrap()
        };
        let (a, b) = (sigma(4096), sigma(8192));
        prop_assert!((a - b).abs() < 5e-3 * a, "sigma {} vs {}", a, b);
        Ok(())
    })
}
