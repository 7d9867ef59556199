use otoc_core::operator::{commutator, embed, op_product, DenseOperator, OperatorSpec, PauliDirection};
use proptest::prelude::*;

use super::run;
use crate::common::*;

pub fn direction() -> impl Strategy<Value = PauliDirection> {
    prop::sample::select(PauliDirection::ALL.to_vec())
}

fn spec_on(sites: usize) -> impl Strategy<Value = OperatorSpec> {
    prop_oneof![
        (0..sites, direction()).prop_map(|(i, d)| OperatorSpec::local(i, d)),
        direction().prop_map(OperatorSpec::total),
    ]
}

fn chain_and_spec() -> impl Strategy<Value = (usize, OperatorSpec)> {
    (1usize..=6).prop_flat_map(|l| (Just(l), spec_on(l)))
}

pub fn embeddings_are_hermitian_and_locals_square_to_one(cases: u32) -> Result<(), String> {
    run(cases, chain_and_spec(), |(l, spec)| {
        let a = embed(spec, l).unwrap();
        prop_assert!(a.hermiticity_error() < 1e-12);
        if let OperatorSpec::Local { .. } = spec {
            let sq = op_product(&a, &a).unwrap();
            prop_assert!(sq.max_abs_diff(&DenseOperator::identity(1 << l)).unwrap() < 1e-12);
        }
        Ok(())
    })
}

pub fn operators_on_different_sites_commute(cases: u32) -> Result<(), String> {
    let sites = (2usize..=6).prop_flat_map(|l| (Just(l), 0..l, 0..l)).prop_filter("distinct", |t| t.1 != t.2);
    run(cases, (sites, direction(), direction()), |((l, i, j), mu, nu)| {
        let a = embed(OperatorSpec::local(i, mu), l).unwrap();
        let b = embed(OperatorSpec::local(j, nu), l).unwrap();
        prop_assert!(commutator(&a, &b).unwrap().max_abs() < 1e-12);
        Ok(())
    })
}

pub fn total_is_the_site_sum(cases: u32) -> Result<(), String> {
    run(cases, (1usize..=6, direction()), |(l, d)| {
        let total = embed(OperatorSpec::total(d), l).unwrap();
        let mut sum = DenseOperator::zeros(1 << l);
        for i in 0..l {
            sum = sum.add(&embed(OperatorSpec::local(i, d), l).unwrap()).unwrap();
        }
        prop_assert_eq!(total, sum);
        Ok(())
    })
}

pub fn local_z_reads_its_bit(cases: u32) -> Result<(), String> {
    run(cases, (1usize..=6).prop_flat_map(|l| (Just(l), 0..l)), |(l, i)| {
        let z = embed(OperatorSpec::local(i, PauliDirection::Z), l).unwrap();
        prop_assert!(z.is_diagonal());
        for b in 0..1usize << l {
            let bit = (b >> (l - 1 - i)) & 1;
            let expected = if bit == 0 { 1.0 } else { -1.0 };
            prop_assert_eq!(z.get(b, b), c(expected, 0.0));
        }
        Ok(())
    })
}

pub fn embedding_matches_kronecker_oracle(cases: u32) -> Result<(), String> {
    run(cases, chain_and_spec(), |(l, spec)| {
        let got = embed(spec, l).unwrap();
        let want = match spec {
            OperatorSpec::Local { site, direction } => site_op(direction, site, l),
            OperatorSpec::Total { direction } => total_op(direction, l),
        };
        prop_assert!(max_abs_diff(got.as_mat(), &want) == 0.0);
        Ok(())
    })
}

pub fn specs_round_trip_through_json(cases: u32) -> Result<(), String> {
    run(cases, chain_and_spec(), |(l, spec)| {
        let json = serde_json::to_string(&spec).unwrap();
        prop_assert_eq!(serde_json::from_str::<OperatorSpec>(&json).unwrap(), spec);
        prop_assert!(spec.validate(l).is_ok());
        Ok(())
    })
}
