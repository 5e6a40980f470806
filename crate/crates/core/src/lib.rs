//! System-level simulator and solver for downlink user association in
//! two-tier massive-MIMO heterogeneous networks.
//!
//! The pipeline runs scenario -> channel -> link -> association:
//!
//! - [`scenario`]: reproducible drops (hexagonal macro grid, uniform pico/user
//!   placement, power and circuit models);
//! - [`channel`]: pathloss + log-normal shadowing gains and the noise floor;
//! - [`link`]: SINR and achievable-rate matrices plus per-BS power draws;
//! - [`solver`]: the two-layer sum-energy-efficiency association solver;
//! - [`baselines`]: objective evaluation, max-SINR / max-rate policies and an
//!   exhaustive oracle for small instances;
//! - [`experiments`]: seeded Monte-Carlo sweeps with CSV output.

pub mod baselines;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod link;
mod rng;
pub mod scenario;
pub mod solver;
pub mod units;

pub use baselines::{
    brute_force_optimum, evaluate_objective, max_rate_association, max_sinr_association,
    ObjectiveReport, PerUserMetrics,
};
pub use channel::{build_gain_matrix, GainMatrix};
pub use config::{CircuitCoeffs, NetworkConfig};
pub use error::{Error, Result};
pub use link::{build_link_table, LinkTable};
pub use scenario::{build_macro_grid, drop_scenario, BaseStation, Point, Scenario, Tier, User};
pub use solver::{
    solve, solve_with_state, Association, AssociationResult, OuterTrace, SolverParams, SolverState,
};
pub use experiments::{
    oracle_check, run_sweep, run_sweep_detailed, summarize, write_results_csv, write_summary_csv,
    write_trace_csv, OracleCheckReport, Policy, SummaryRow, SweepAxis, SweepSpec, Trial,
    TrialRecord,
};
