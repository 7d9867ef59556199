use otoc_core::operator::{commutator, embed, op_product, trace, DenseOperator, OperatorSpec};
use otoc_core::otoc::*;
use otoc_core::spectrum::{ChainParams, Spectrum};
use proptest::prelude::*;

use super::operator::direction;
use super::run;
use crate::common::*;

fn chain(min_sites: usize, max_sites: usize) -> impl Strategy<Value = ChainParams> {
    (min_sites..=max_sites, 0.0f64..2.0, 0.0f64..2.0).prop_map(|(l, hx, hz)| ChainParams::new(l, hx, hz))
}

/// A chain with two site indices on it.
fn chain_and_sites() -> impl Strategy<Value = (ChainParams, usize, usize)> {
    chain(2, 4).prop_flat_map(|p| (Just(p), 0..p.sites, 0..p.sites))
}

fn grid_to(t: f64, n: usize) -> TimeGrid {
    TimeGrid::new(0.0, t, n).unwrap()
}

/// `||[W(t), V]||^2 / (2D)` from an explicitly evolved operator.
fn commutator_norm(s: &Spectrum, w: &DenseOperator, v: &DenseOperator, t: f64) -> f64 {
    let wt = heisenberg_operator(s, w, t).unwrap();
    let comm = commutator(&wt, v).unwrap();
    trace(&op_product(&comm.adjoint(), &comm).unwrap()).re / (2.0 * s.dim() as f64)
}

pub fn local_formula_equals_commutator_norm(cases: u32) -> Result<(), String> {
    run(cases, (chain_and_sites(), direction(), direction(), 0.0f64..10.0), |((p, i, j), mu, nu, t)| {
        let s = Spectrum::of_chain(&p).unwrap();
        let g = grid_to(t.max(1e-3), 2);
        let local = otoc_local(&s, i, mu, j, nu, &g).unwrap();
        let direct = otoc_direct_specs(&s, OperatorSpec::local(i, mu), OperatorSpec::local(j, nu), &g).unwrap();
        prop_assert!(local.max_abs_diff(&direct) < 1e-10);
        Ok(())
    })
}

pub fn hermitian_traces_are_real_nonnegative_and_bounded(cases: u32) -> Result<(), String> {
    run(cases, (chain_and_sites(), direction(), direction()), |((p, i, j), mu, nu)| {
        let s = Spectrum::of_chain(&p).unwrap();
        let g = grid_to(20.0, 41);
        let local = otoc_local(&s, i, mu, j, nu, &g).unwrap();
        prop_assert!(local.imag_residual < IMAG_TOL);
        prop_assert!(local.min() >= -1e-10 && local.max() <= 2.0 + 1e-10);
        let w = embed(OperatorSpec::total(mu), p.sites).unwrap();
        let v = embed(OperatorSpec::local(j, nu), p.sites).unwrap();
        prop_assert!(otoc_direct(&s, &w, &v, &g).unwrap().min() >= -1e-10);
        Ok(())
    })
}

pub fn traces_are_even_in_time(cases: u32) -> Result<(), String> {
    run(cases, (chain_and_sites(), direction(), direction(), 0.1f64..10.0), |((p, i, j), mu, nu, t)| {
        let s = Spectrum::of_chain(&p).unwrap();
        let w = embed(OperatorSpec::local(i, mu), p.sites).unwrap();
        let v = embed(OperatorSpec::local(j, nu), p.sites).unwrap();
        let (fwd, back) = (commutator_norm(&s, &w, &v, t), commutator_norm(&s, &w, &v, -t));
        prop_assert!((fwd - back).abs() < 1e-10, "C({}) = {}, C(-{}) = {}", t, fwd, t, back);
        let on_grid = otoc_local(&s, i, mu, j, nu, &grid_to(t, 2)).unwrap().values[1];
        prop_assert!((on_grid - fwd).abs() < 1e-10);
        Ok(())
    })
}

pub fn four_point_values_are_finite_and_bounded(cases: u32) -> Result<(), String> {
    let strategy = (chain(2, 3), prop::array::uniform4(0usize..2), prop::array::uniform4(direction()), 0.0f64..10.0);
    run(cases, strategy, |(p, sites, dirs, t)| {
        let s = Spectrum::of_chain(&p).unwrap();
        let ops: [PauliSite; 4] = std::array::from_fn(|k| PauliSite::new(sites[k], dirs[k]));
        let tr = otoc_four_point(&s, ops, &grid_to(t.max(1e-3), 3)).unwrap();
        for v in &tr.values {
            // Each normalized four-Pauli trace has modulus at most one.
            prop_assert!(v.norm() <= 2.0 + 1e-10);
        }
        Ok(())
    })
}

pub fn decompositions_add_up(cases: u32) -> Result<(), String> {
    run(cases, (chain(2, 4), 0usize..2, direction(), direction()), |(p, i, mu, nu)| {
        let s = Spectrum::of_chain(&p).unwrap();
        let g = grid_to(10.0, 64);
        let mixed = otoc_mixed(&s, i, mu, nu, &g).unwrap();
        let direct = otoc_direct_specs(&s, OperatorSpec::local(i, mu), OperatorSpec::total(nu), &g).unwrap();
        prop_assert!(mixed.identity_deviation() < 1e-8);
        prop_assert!(mixed.total.max_abs_diff(&direct) < 1e-8);
        prop_assert!(mixed.nonlocal_part.imag_residual < 1e-8);

        let global = otoc_global(&s, mu, nu, &g).unwrap();
        let direct = otoc_direct_specs(&s, OperatorSpec::total(mu), OperatorSpec::total(nu), &g).unwrap();
        prop_assert!(global.identity_deviation() < 1e-8);
        prop_assert!(global.total.max_abs_diff(&direct) < 1e-8);
        prop_assert!(global.nonlocal_part.imag_residual < 1e-8);
        prop_assert!(global.total.min() >= -1e-10);

        let h = hamiltonian(p.sites, p.coupling, p.hx, p.hz);
        let v = total_op(nu, p.sites);
        for k in [1, 31, 63] {
            let t = g.point(k);
            prop_assert!((mixed.total.values[k] - direct_otoc(&h, &site_op(mu, i, p.sites), &v, t)).abs() < 1e-8);
            prop_assert!((global.total.values[k] - direct_otoc(&h, &total_op(mu, p.sites), &v, t)).abs() < 1e-8);
        }
        Ok(())
    })
}

pub fn evolution_matches_matrix_exponential(cases: u32) -> Result<(), String> {
    run(cases, (chain(1, 3), 0usize..3, direction(), 0.0f64..10.0), |(p, site, d, t)| {
        let site = site % p.sites;
        let s = Spectrum::of_chain(&p).unwrap();
        let a = site_op(d, site, p.sites);
        let got = heisenberg_operator(&s, &DenseOperator::from_mat(a.clone()).unwrap(), t).unwrap();
        let h = hamiltonian(p.sites, p.coupling, p.hx, p.hz);
        prop_assert!(max_abs_diff(got.as_mat(), &evolve(&h, &a, t)) < 1e-9);
        Ok(())
    })
}
