//! Shared fixtures for the pipeline benchmarks.

use eea_core::{
    build_gain_matrix, build_link_table, drop_scenario, LinkTable, NetworkConfig, Scenario,
};

/// Desk-scale drop: 7 macrocells, 4 picos and 30 users per cell.
pub fn desk_scenario(seed: u64) -> Scenario {
    let cfg = NetworkConfig { rng_seed: seed, ..Default::default() };
    drop_scenario(&cfg).expect("default config is valid")
}

/// One-cell instance small enough for the exhaustive oracle.
pub fn small_scenario(seed: u64) -> Scenario {
    let cfg = NetworkConfig {
        num_mbs: 1,
        pbs_per_macrocell: 2,
        users_per_macrocell: 5,
        sinr_threshold: 0.0,
        rng_seed: seed,
        ..Default::default()
    };
    drop_scenario(&cfg).expect("config is valid")
}

pub fn link_table(scenario: &Scenario) -> LinkTable {
    let gains = build_gain_matrix(scenario);
    build_link_table(scenario, &gains).expect("consistent dimensions")
}
