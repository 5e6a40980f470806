//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers. Shared fixtures are computed once per process.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use eea_core::solver::{
    init_state, lambda_at_fixed_point, omega_at_fixed_point, outer_update, residual_matrices,
    Association, SolverState,
};
use eea_core::{
    brute_force_optimum, build_gain_matrix, build_link_table, drop_scenario, evaluate_objective,
    max_sinr_association, run_sweep, solve, LinkTable, NetworkConfig, Policy, SolverParams,
    SweepAxis, SweepSpec, TrialRecord,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DESK_DROPS: usize = 400;

struct DeskDrop {
    converged: bool,
    residual_max: f64,
    /// (lhs, rhs) of the sufficient-decrease inequality for every outer step.
    armijo: Vec<(f64, f64)>,
    eea_sum_ee: f64,
    max_sinr_sum_ee: f64,
}

fn desk_fixture() -> &'static (Vec<DeskDrop>, Duration) {
    static DESK: OnceLock<(Vec<DeskDrop>, Duration)> = OnceLock::new();
    DESK.get_or_init(|| {
        let params = SolverParams::default();
        let start = Instant::now();
        let drops = (0..DESK_DROPS as u64)
            .map(|seed| {
                let cfg = NetworkConfig { rng_seed: seed, ..Default::default() };
                let scenario = drop_scenario(&cfg).expect("default config is valid");
                let gains = build_gain_matrix(&scenario);
                let link = build_link_table(&scenario, &gains).expect("consistent dims");
                let result = solve(&link, &params).expect("solve succeeds");
                let baseline = evaluate_objective(&max_sinr_association(&link), &link)
                    .expect("baseline evaluates");
                DeskDrop {
                    converged: result.converged,
                    residual_max: result.residual_max,
                    armijo: result
                        .trace
                        .iter()
                        .filter_map(|t| Some((t.armijo_lhs?, t.armijo_rhs?)))
                        .collect(),
                    eea_sum_ee: result.sum_ee,
                    max_sinr_sum_ee: baseline.sum_ee,
                }
            })
            .collect();
        (drops, start.elapsed())
    })
}

fn sweep_fixture() -> &'static (Vec<TrialRecord>, Vec<TrialRecord>) {
    static SWEEPS: OnceLock<(Vec<TrialRecord>, Vec<TrialRecord>)> = OnceLock::new();
    SWEEPS.get_or_init(|| {
        let spec = |antennas: usize| SweepSpec {
            axis: SweepAxis::PbsPowerDbm,
            values: vec![22.0, 26.0, 30.0, 34.0, 38.0],
            drops_per_point: 50,
            policies: vec![Policy::Eea],
            base_config: NetworkConfig { mbs_antennas: antennas, ..Default::default() },
            solver: SolverParams::default(),
            seed: 42,
        };
        (run_sweep(&spec(100)).expect("sweep runs"), run_sweep(&spec(200)).expect("sweep runs"))
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn metric_at(records: &[TrialRecord], value: f64, pick: fn(&TrialRecord) -> f64) -> Vec<f64> {
    let mut rows: Vec<(usize, f64)> = records
        .iter()
        .filter(|r| r.axis_value == value)
        .map(|r| (r.drop, pick(r)))
        .collect();
    rows.sort_by_key(|r| r.0);
    rows.into_iter().map(|r| r.1).collect()
}

#[test]
fn criterion_1_fixed_point_certificate() {
    let (drops, elapsed) = desk_fixture();
    let converged = drops.iter().filter(|d| d.converged).count();
    for (i, d) in drops.iter().enumerate() {
        if d.converged {
            assert!(
                d.residual_max <= 1e-6,
                "drop {i} flagged converged with residual {}",
                d.residual_max
            );
        }
    }
    let fraction = converged as f64 / drops.len() as f64;
    assert!(
        fraction >= 0.80,
        "only {converged}/{} desk drops converged within the outer budget",
        drops.len()
    );
    assert!(elapsed < &Duration::from_secs(60), "took {elapsed:?}, budget 60 s");
    println!(
        "acceptance criterion 1: PASS - {converged}/{} drops converged (residual <= 1e-6 on all of them) in {elapsed:?}",
        drops.len()
    );
}

#[test]
fn criterion_2_sufficient_decrease_every_iteration() {
    let (drops, _) = desk_fixture();
    let mut checked = 0usize;
    for (i, d) in drops.iter().enumerate() {
        for &(lhs, rhs) in &d.armijo {
            assert!(
                lhs <= rhs,
                "drop {i}: post-step squared residual {lhs} exceeds threshold {rhs}"
            );
            checked += 1;
        }
    }
    println!("acceptance criterion 2: PASS - decrease inequality held on all {checked} outer steps of {} runs", drops.len());
}

#[test]
fn criterion_3_oracle_equivalence() {
    let params = SolverParams::default();
    let start = Instant::now();
    let mut within = 0usize;
    let mut max_excess = f64::NEG_INFINITY;
    let total = 100usize;
    for i in 0..total as u64 {
        let cfg = NetworkConfig {
            num_mbs: 1,
            pbs_per_macrocell: 1 + (i % 3) as usize,  // N in 2..=4, mixed tiers
            users_per_macrocell: 3 + (i % 4) as usize, // K in 3..=6
            sinr_threshold: 0.0,
            rng_seed: 31_000 + i,
            ..Default::default()
        };
        let scenario = drop_scenario(&cfg).unwrap();
        let gains = build_gain_matrix(&scenario);
        let link = build_link_table(&scenario, &gains).unwrap();
        let result = solve(&link, &params).unwrap();
        let (_, oracle) = brute_force_optimum(&link, false).unwrap();
        if result.sum_ee >= 0.95 * oracle.sum_ee {
            within += 1;
        }
        max_excess = max_excess.max(result.sum_ee - oracle.sum_ee);
        assert!(
            result.sum_ee <= oracle.sum_ee + 1e-9,
            "instance {i}: solver {} beat the exhaustive optimum {}",
            result.sum_ee,
            oracle.sum_ee
        );
    }
    let elapsed = start.elapsed();
    assert!(within >= 90, "only {within}/{total} instances within 5% of the oracle");
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}, budget 30 s");
    println!(
        "acceptance criterion 3: PASS - {within}/{total} within 5% of the oracle, max excess {max_excess:.1e} (<= 1e-9) in {elapsed:?}"
    );
}

#[test]
fn criterion_4_full_newton_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA4);
    let params = SolverParams::default();
    let trials = 1000usize;
    for _ in 0..trials {
        let n = rng.random_range(1..6usize);
        let k = rng.random_range(1..8usize);
        let sinr = Array2::from_shape_fn((n, k), |_| rng.random_range(0.0..100.0));
        let rate = Array2::from_shape_fn((n, k), |_| rng.random_range(0.0..2e9));
        let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..500.0)).collect();
        let link =
            LinkTable::from_parts(sinr, rate, alpha, 9.1, vec![0.0; k]).expect("valid table");
        let choice: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();
        let assoc = Association::from_choices(n, choice).unwrap();
        let mut state: SolverState = init_state(&link, &params);
        state.assoc = assoc;
        // random multipliers, spanning both well- and badly-scaled starts
        let fixed_omega = omega_at_fixed_point(&state.assoc, &link);
        let fixed_lambda = lambda_at_fixed_point(&state.assoc, &link);
        for n_i in 0..n {
            for k_i in 0..k {
                let badly_scaled = rng.random_range(0.0..1.0) < 0.3;
                state.lambda[[n_i, k_i]] = if badly_scaled {
                    rng.random_range(0.0..10.0)
                } else {
                    rng.random_range(0.0..4.0) * fixed_lambda[[n_i, k_i]].max(1e-6)
                };
                state.omega[[n_i, k_i]] = if badly_scaled {
                    rng.random_range(0.0..1e7)
                } else {
                    rng.random_range(0.0..4.0) * fixed_omega[[n_i, k_i]].max(1e-6)
                };
            }
        }
        let (phi_before, psi_before) = residual_matrices(&state, &link);
        let scale = phi_before
            .iter()
            .chain(psi_before.iter())
            .fold(1.0f64, |acc, v| acc.max(v.abs()));
        outer_update(&mut state, 0, &link, &params); // xi^0 = 1: full step
        let (phi_after, psi_after) = residual_matrices(&state, &link);
        let worst =
            phi_after.iter().chain(psi_after.iter()).fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(
            worst <= 1e-12 * scale,
            "full Newton step left residual {worst:.3e} against scale {scale:.3e}"
        );
    }
    println!("acceptance criterion 4: PASS - one full step zeroed both residual blocks on {trials} random states (1e-12 relative)");
}

#[test]
fn criterion_5_pbs_power_rate_trend() {
    let (r100, r200) = sweep_fixture();
    let values = [22.0, 26.0, 30.0, 34.0, 38.0];

    // (a) endpoint comparison at 95% confidence, paired over drops
    for (label, records) in [("M=100", r100), ("M=200", r200)] {
        let low = metric_at(records, 22.0, |r| r.avg_rate);
        let high = metric_at(records, 38.0, |r| r.avg_rate);
        let d: Vec<f64> = low.iter().zip(&high).map(|(a, b)| a - b).collect();
        let md = mean(&d);
        let var = d.iter().map(|x| (x - md) * (x - md)).sum::<f64>() / (d.len() - 1) as f64;
        let half = 1.96 * var.sqrt() / (d.len() as f64).sqrt();
        assert!(
            md - half > 0.0,
            "{label}: avg_rate at 38 dBm not significantly below 22 dBm (diff {md:.3e} +- {half:.3e})"
        );
    }

    // (b) more antennas raise the average rate at every power point
    for &v in &values {
        let m100 = mean(&metric_at(r100, v, |r| r.avg_rate));
        let m200 = mean(&metric_at(r200, v, |r| r.avg_rate));
        assert!(m200 > m100, "at {v} dBm avg_rate M=200 ({m200:.3e}) <= M=100 ({m100:.3e})");
    }
    println!("acceptance criterion 5: PASS - avg rate falls with PBS power (95% CI) and rises with antenna count at all 5 points");
}

#[test]
fn criterion_6_antenna_energy_efficiency_trend() {
    let (r100, r200) = sweep_fixture();
    for &v in &[22.0, 26.0, 30.0, 34.0, 38.0] {
        let m100 = mean(&metric_at(r100, v, |r| r.avg_ee));
        let m200 = mean(&metric_at(r200, v, |r| r.avg_ee));
        assert!(m200 < m100, "at {v} dBm avg_ee M=200 ({m200:.3e}) >= M=100 ({m100:.3e})");
    }
    println!("acceptance criterion 6: PASS - avg energy efficiency drops with antenna count at all 5 points");
}

#[test]
fn criterion_7_baseline_dominance() {
    let (drops, _) = desk_fixture();
    let wins = drops.iter().filter(|d| d.eea_sum_ee >= d.max_sinr_sum_ee).count();
    let fraction = wins as f64 / drops.len() as f64;
    assert!(
        fraction >= 0.90,
        "solver matched or beat max-SINR on only {wins}/{} drops",
        drops.len()
    );
    println!(
        "acceptance criterion 7: PASS - solver >= max-SINR on {wins}/{} desk drops",
        drops.len()
    );
}

#[test]
fn criterion_8_model_unit_anchors() {
    use eea_core::channel::{noise_power_w, pathloss_db};
    use eea_core::link::kappa;
    use eea_core::scenario::circuit_power;
    use eea_core::Tier;

    let cfg = NetworkConfig::default();
    assert_eq!(kappa(100, 10).unwrap(), 9.1);

    let macro_circuit = circuit_power(Tier::Macro, 100, 10, &cfg);
    assert!(
        (macro_circuit - 152.00072).abs() <= 1e-3,
        "macro circuit power {macro_circuit} not within 1e-3 of 152.00072 W"
    );

    assert_eq!(pathloss_db(Tier::Macro, 1.0), 128.1);
    assert_eq!(pathloss_db(Tier::Pico, 1.0), 140.7);

    let noise = noise_power_w(-174.0, 10e6);
    assert!(
        ((noise - 3.98e-14) / 3.98e-14).abs() <= 0.01,
        "noise power {noise} not within 1% of 3.98e-14 W"
    );

    assert_eq!(circuit_power(Tier::Pico, 1, 10, &cfg), 13.6);

    println!("acceptance criterion 8: PASS - kappa 9.1, macro circuit {macro_circuit:.5} W, pathloss anchors 128.1/140.7 dB, noise {noise:.3e} W, pico circuit 13.6 W");
}
