use faer::c64;
use otoc_core::operator::{commutator, DenseOperator};
use otoc_core::spectrum::{
    build_hamiltonian, diagonalize, parity_sector_spectra, parity_sectors, reflection_operator, spectral_span,
    ChainParams, Spectrum,
};
use proptest::prelude::*;

use super::run;

fn chain(max_sites: usize) -> impl Strategy<Value = ChainParams> {
    (2usize..=max_sites, 0.2f64..2.0, 0.0f64..2.0, 0.0f64..2.0)
        .prop_map(|(l, j, hx, hz)| ChainParams { sites: l, coupling: j, hx, hz })
}

pub fn hamiltonian_commutes_with_reflection(cases: u32) -> Result<(), String> {
    run(cases, chain(7), |p| {
        let h = build_hamiltonian(&p).unwrap();
        let r = reflection_operator(p.sites).unwrap();
        prop_assert!(commutator(&h, &r).unwrap().max_abs() < 1e-10);
        Ok(())
    })
}

pub fn zero_longitudinal_field_gives_a_symmetric_spectrum(cases: u32) -> Result<(), String> {
    run(cases, chain(7), |p| {
        let s = Spectrum::of_chain(&p.with_hz(0.0)).unwrap();
        let e = s.eigenvalues();
        let n = e.len();
        for k in 0..n {
            prop_assert!((e[k] + e[n - 1 - k]).abs() < 1e-8, "E_{} = {}, E_{} = {}", k, e[k], n - 1 - k, e[n - 1 - k]);
        }
        Ok(())
    })
}

pub fn span_ignores_energy_offsets(cases: u32) -> Result<(), String> {
    run(cases, (chain(5), -50.0f64..50.0), |(p, shift)| {
        let h = build_hamiltonian(&p).unwrap();
        let shifted = h.add(&DenseOperator::identity(h.dim()).scaled(c64::new(shift, 0.0))).unwrap();
        let a = spectral_span(&diagonalize(&h).unwrap()).unwrap();
        let b = spectral_span(&diagonalize(&shifted).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + shift.abs()));
        Ok(())
    })
}

pub fn eigenpairs_solve_the_hamiltonian(cases: u32) -> Result<(), String> {
    run(cases, chain(7), |p| {
        let h = build_hamiltonian(&p).unwrap();
        let s = Spectrum::of_chain(&p).unwrap();
        let span = spectral_span(&s).unwrap();
        prop_assert!(s.eigen_residual(&h).unwrap() < 1e-9 * span);
        prop_assert!(s.unitarity_error() < 1e-10);
        prop_assert!(s.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        Ok(())
    })
}

pub fn sectors_partition_the_spectrum(cases: u32) -> Result<(), String> {
    run(cases, chain(7), |p| {
        let sec = parity_sectors(&p).unwrap();
        prop_assert_eq!(sec.even_dim + sec.odd_dim, p.dim());
        let mut merged: Vec<f64> = sec.even_eigenvalues.iter().chain(&sec.odd_eigenvalues).copied().collect();
        merged.sort_by(f64::total_cmp);
        let full = Spectrum::of_chain(&p).unwrap();
        for (a, b) in merged.iter().zip(full.eigenvalues()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        Ok(())
    })
}

pub fn merged_sector_eigenbasis_diagonalizes_the_chain(cases: u32) -> Result<(), String> {
    run(cases, chain(6), |p| {
        let h = build_hamiltonian(&p).unwrap();
        let s = parity_sector_spectra(&p).unwrap().full_spectrum();
        prop_assert!(s.eigen_residual(&h).unwrap() < 1e-9 * spectral_span(&s).unwrap());
        prop_assert!(s.unitarity_error() < 1e-10);
        Ok(())
    })
}
