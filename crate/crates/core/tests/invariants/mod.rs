//! Property checks for every module invariant. The property tests and the
//! acceptance gate both run this table, with a fixed proptest seed.
#![allow(dead_code)]

pub mod chaos;
pub mod operator;
pub mod otoc;
pub mod spectrum;
pub mod sweep;

use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub struct Invariant {
    pub module: &'static str,
    pub name: &'static str,
    pub cases: u32,
    pub check: fn(u32) -> Result<(), String>,
}

/// Runs `test` on `cases` deterministic draws from `strategy`, shrinking on failure.
pub fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

macro_rules! table {
    ($($module:ident :: $name:ident ($cases:expr)),* $(,)?) => {
        pub const ALL: &[Invariant] = &[
            $(Invariant { module: stringify!($module), name: stringify!($name), cases: $cases, check: $module::$name }),*
        ];
    };
}

table! {
    operator::embeddings_are_hermitian_and_locals_square_to_one(64),
    operator::operators_on_different_sites_commute(64),
    operator::total_is_the_site_sum(64),
    operator::local_z_reads_its_bit(64),
    operator::embedding_matches_kronecker_oracle(64),
    operator::specs_round_trip_through_json(64),
    spectrum::hamiltonian_commutes_with_reflection(32),
    spectrum::zero_longitudinal_field_gives_a_symmetric_spectrum(32),
    spectrum::span_ignores_energy_offsets(32),
    spectrum::eigenpairs_solve_the_hamiltonian(32),
    spectrum::sectors_partition_the_spectrum(32),
    spectrum::merged_sector_eigenbasis_diagonalizes_the_chain(32),
    otoc::local_formula_equals_commutator_norm(50),
    otoc::hermitian_traces_are_real_nonnegative_and_bounded(50),
    otoc::traces_are_even_in_time(50),
    otoc::four_point_values_are_finite_and_bounded(50),
    otoc::decompositions_add_up(12),
    otoc::evolution_matches_matrix_exponential(30),
    chaos::sigma_is_scale_free_and_nonnegative(64),
    chaos::chi_spans_the_unit_interval_and_ignores_common_scale(64),
    chaos::r_statistics_ignore_affine_maps(64),
    chaos::permuting_the_basis_fixes_the_mean_participation(64),
    chaos::doubling_samples_barely_moves_sigma(8),
    sweep::configs_survive_a_toml_round_trip(128),
    sweep::presets_are_canonical_after_one_round_trip(1),
    sweep::outputs_do_not_depend_on_workers_or_cache_state(1),
    sweep::spectral_rows_are_deterministic(1),
}

/// Every failing invariant of `module`, as `name: message`.
pub fn failures(module: &str) -> Vec<String> {
    ALL.iter()
        .filter(|inv| inv.module == module)
        .filter_map(|inv| (inv.check)(inv.cases).err().map(|e| format!("{}: {e}", inv.name)))
        .collect()
}
