//! Monte-Carlo sweep harness: runs association policies over seeded drops
//! along a swept parameter axis and aggregates the paper-style metrics
//! (sum EE, average effective rate, average per-user EE) into CSV records.
//!
//! Reproducibility contract: a (spec, seed) pair fully determines every
//! output byte. Drop seeds depend only on (seed, drop index), never on the
//! axis value, so node positions and shadowing stay fixed while the swept
//! parameter changes.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::baselines::{
    brute_force_optimum, evaluate_objective, max_rate_association, max_sinr_association,
    per_user_metrics,
};
use crate::channel::build_gain_matrix;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::link::{build_link_table, LinkTable};
use crate::rng;
use crate::scenario::drop_scenario;
use crate::solver::{solve, OuterTrace, SolverParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Sweeps the pico transmit power in dBm.
    PbsPowerDbm,
    /// Sweeps the macro antenna count M.
    MbsAntennas,
    /// Label-only axis: the config is left untouched, values just tag the
    /// output rows (useful for plain repeated-drop runs).
    Custom,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepAxis::PbsPowerDbm => "pbs_power_dbm",
            SweepAxis::MbsAntennas => "mbs_antennas",
            SweepAxis::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pbs_power_dbm" => Ok(SweepAxis::PbsPowerDbm),
            "mbs_antennas" => Ok(SweepAxis::MbsAntennas),
            "custom" => Ok(SweepAxis::Custom),
            other => Err(Error::InvalidSweep(format!(
                "unknown axis `{other}` (expected pbs_power_dbm, mbs_antennas or custom)"
            ))),
        }
    }
}

/// Association policies the harness can run. The declaration order is the
/// canonical output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Policy {
    Eea,
    MaxSinr,
    MaxRate,
    Oracle,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Policy::Eea => "eea",
            Policy::MaxSinr => "max_sinr",
            Policy::MaxRate => "max_rate",
            Policy::Oracle => "oracle",
        };
        f.write_str(s)
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eea" => Ok(Policy::Eea),
            "max_sinr" => Ok(Policy::MaxSinr),
            "max_rate" => Ok(Policy::MaxRate),
            "oracle" => Ok(Policy::Oracle),
            other => Err(Error::InvalidSweep(format!(
                "unknown policy `{other}` (expected eea, max_sinr, max_rate or oracle)"
            ))),
        }
    }
}

/// One sweep request.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// Axis values, non-empty and strictly increasing.
    pub values: Vec<f64>,
    pub drops_per_point: usize,
    pub policies: Vec<Policy>,
    pub base_config: NetworkConfig,
    pub solver: SolverParams,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base_config.validate()?;
        self.solver.validate()?;
        if self.values.is_empty() {
            return Err(Error::InvalidSweep("values must be non-empty".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidSweep("values must be strictly increasing".into()));
        }
        if self.drops_per_point == 0 {
            return Err(Error::InvalidSweep("drops_per_point must be >= 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidSweep("policies must be non-empty".into()));
        }
        for &v in &self.values {
            if !v.is_finite() {
                return Err(Error::InvalidSweep(format!("axis value {v} is not finite")));
            }
            if self.axis == SweepAxis::MbsAntennas {
                let m = v as usize;
                if v.fract() != 0.0 || v < 1.0 || m < self.base_config.streams {
                    return Err(Error::InvalidSweep(format!(
                        "mbs_antennas value {v} must be an integer >= streams ({})",
                        self.base_config.streams
                    )));
                }
            }
        }
        if self.policies.contains(&Policy::Oracle) {
            let n = self.base_config.num_mbs * (1 + self.base_config.pbs_per_macrocell);
            let k = self.base_config.num_mbs * self.base_config.users_per_macrocell;
            let mut count: u128 = 1;
            for _ in 0..k {
                count = count.saturating_mul(n as u128);
            }
            if count > crate::baselines::BRUTE_FORCE_LIMIT {
                return Err(Error::InvalidSweep(format!(
                    "oracle policy on a {n} BS x {k} user config exceeds the exhaustive-search cap"
                )));
            }
        }
        Ok(())
    }

    fn canonical_policies(&self) -> Vec<Policy> {
        let mut p = self.policies.clone();
        p.sort();
        p.dedup();
        p
    }
}

/// Metrics of one (axis value, drop, policy) run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub policy: Policy,
    pub drop: usize,
    /// True objective, bits/J.
    pub sum_ee: f64,
    /// Mean over users of the effective (time-shared) rate, bits/s.
    pub avg_rate: f64,
    /// Mean over users of per-user EE, bits/J.
    pub avg_ee: f64,
    pub converged: bool,
    pub outer_iters: usize,
}

/// A record plus the solver trace that produced it (empty for baselines or
/// when traces were not requested).
#[derive(Debug, Clone)]
pub struct Trial {
    pub record: TrialRecord,
    pub trace: Vec<OuterTrace>,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<TrialRecord>> {
    Ok(run_sweep_detailed(spec, false)?.into_iter().map(|t| t.record).collect())
}

/// Runs the sweep in deterministic order (axis value, then drop, then
/// policy), optionally keeping per-iteration solver traces.
pub fn run_sweep_detailed(spec: &SweepSpec, collect_traces: bool) -> Result<Vec<Trial>> {
    spec.validate()?;
    let policies = spec.canonical_policies();
    let mut trials = Vec::with_capacity(spec.values.len() * spec.drops_per_point * policies.len());
    for &value in &spec.values {
        for drop in 0..spec.drops_per_point {
            let mut cfg = spec.base_config.clone();
            apply_axis(&mut cfg, spec.axis, value)?;
            cfg.rng_seed = rng::derive_seed(spec.seed, rng::STREAM_TRIAL, drop as u64);
            let scenario = drop_scenario(&cfg)?;
            let gains = build_gain_matrix(&scenario);
            let link = build_link_table(&scenario, &gains)?;
            for &policy in &policies {
                trials.push(run_policy(&link, spec, policy, value, drop, collect_traces)?);
            }
        }
    }
    Ok(trials)
}

fn apply_axis(cfg: &mut NetworkConfig, axis: SweepAxis, value: f64) -> Result<()> {
    match axis {
        SweepAxis::PbsPowerDbm => cfg.pbs_tx_power_dbm = value,
        SweepAxis::MbsAntennas => cfg.mbs_antennas = value as usize,
        SweepAxis::Custom => {}
    }
    Ok(())
}

fn run_policy(
    link: &LinkTable,
    spec: &SweepSpec,
    policy: Policy,
    axis_value: f64,
    drop: usize,
    collect_traces: bool,
) -> Result<Trial> {
    let k = link.num_users() as f64;
    let mut trace = Vec::new();
    let (sum_ee, avg_rate, converged, outer_iters) = match policy {
        Policy::Eea => {
            let result = solve(link, &spec.solver)?;
            let avg_rate = result.per_user.iter().map(|m| m.effective_rate).sum::<f64>() / k;
            if collect_traces {
                trace = result.trace;
            }
            (result.sum_ee, avg_rate, result.converged, result.outer_iters)
        }
        Policy::MaxSinr | Policy::MaxRate => {
            let assoc = if policy == Policy::MaxSinr {
                max_sinr_association(link)
            } else {
                max_rate_association(link)
            };
            let report = evaluate_objective(&assoc, link)?;
            let avg_rate =
                per_user_metrics(&assoc, link).iter().map(|m| m.effective_rate).sum::<f64>() / k;
            (report.sum_ee, avg_rate, true, 0)
        }
        Policy::Oracle => match brute_force_optimum(link, true) {
            Ok((assoc, report)) => {
                let avg_rate =
                    per_user_metrics(&assoc, link).iter().map(|m| m.effective_rate).sum::<f64>() / k;
                (report.sum_ee, avg_rate, true, 0)
            }
            Err(Error::AllInfeasible) => (0.0, 0.0, false, 0),
            Err(e) => return Err(e),
        },
    };
    Ok(Trial {
        record: TrialRecord {
            axis: spec.axis,
            axis_value,
            policy,
            drop,
            sum_ee,
            avg_rate,
            avg_ee: sum_ee / k,
            converged,
            outer_iters,
        },
        trace,
    })
}

/// Per-(axis value, policy, metric) mean with a 95% normal-approximation
/// confidence half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub axis_value: f64,
    pub policy: Policy,
    pub metric: &'static str,
    pub mean: f64,
    pub ci95_halfwidth: f64,
    pub drops: usize,
}

/// Groups records by (axis value, policy) in encounter order and reduces the
/// three metrics. A single drop has no sample deviation; its half-width is 0
/// by convention.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    const METRICS: [(&str, fn(&TrialRecord) -> f64); 3] = [
        ("sum_ee_bits_per_joule", |r| r.sum_ee),
        ("avg_rate_bits_per_s", |r| r.avg_rate),
        ("avg_ee_bits_per_joule", |r| r.avg_ee),
    ];
    let mut groups: Vec<(f64, Policy, Vec<&TrialRecord>)> = Vec::new();
    for record in records {
        match groups
            .iter_mut()
            .find(|(v, p, _)| v.to_bits() == record.axis_value.to_bits() && *p == record.policy)
        {
            Some((_, _, members)) => members.push(record),
            None => groups.push((record.axis_value, record.policy, vec![record])),
        }
    }
    let mut rows = Vec::with_capacity(groups.len() * METRICS.len());
    for (axis_value, policy, members) in groups {
        let n = members.len();
        for (metric, extract) in METRICS {
            let values: Vec<f64> = members.iter().map(|r| extract(r)).collect();
            let mean = values.iter().sum::<f64>() / n as f64;
            let ci95_halfwidth = if n >= 2 {
                let var =
                    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
                1.96 * var.sqrt() / (n as f64).sqrt()
            } else {
                0.0
            };
            rows.push(SummaryRow { axis_value, policy, metric, mean, ci95_halfwidth, drops: n });
        }
    }
    rows
}

pub fn write_results_csv<W: Write>(w: &mut W, records: &[TrialRecord]) -> Result<()> {
    writeln!(
        w,
        "axis,axis_value,policy,drop,sum_ee_bits_per_joule,avg_rate_bits_per_s,avg_ee_bits_per_joule,converged,outer_iters"
    )?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.axis, r.axis_value, r.policy, r.drop, r.sum_ee, r.avg_rate, r.avg_ee, r.converged,
            r.outer_iters
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: &mut W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(w, "axis_value,policy,metric,mean,ci95_halfwidth,drops")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.axis_value, r.policy, r.metric, r.mean, r.ci95_halfwidth, r.drops
        )?;
    }
    Ok(())
}

/// Per-outer-iteration solver trace; `m` is empty on the terminal row.
pub fn write_trace_csv<W: Write>(w: &mut W, trace: &[OuterTrace]) -> Result<()> {
    writeln!(w, "t1,t2,G,F,residual_norm,m")?;
    for t in trace {
        let m = t.m.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            t.outer_iter, t.inner_iters, t.inner_objective, t.outer_objective, t.residual_norm, m
        )?;
    }
    Ok(())
}

/// Desk-scale single-cell config for oracle comparisons: one macro BS,
/// `num_pbs` picos, `num_users` users, thresholds zeroed.
pub fn small_instance_config(num_pbs: usize, num_users: usize, seed: u64) -> NetworkConfig {
    NetworkConfig {
        num_mbs: 1,
        pbs_per_macrocell: num_pbs,
        users_per_macrocell: num_users,
        sinr_threshold: 0.0,
        rng_seed: seed,
        ..Default::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCheckReport {
    pub instances: usize,
    /// Instances where the solver's objective reached 95% of the optimum.
    pub within_5_percent: usize,
    /// Largest (solver - oracle) gap observed; positive would mean the
    /// solver "beat" exhaustive search, i.e. a bug beyond fp noise.
    pub max_excess_over_oracle: f64,
}

impl OracleCheckReport {
    pub fn fraction(&self) -> f64 {
        self.within_5_percent as f64 / self.instances as f64
    }
}

/// Solves `instances` random small drops and compares against the exhaustive
/// oracle on the true objective.
pub fn oracle_check(
    num_pbs: usize,
    num_users: usize,
    instances: usize,
    seed: u64,
    params: &SolverParams,
) -> Result<OracleCheckReport> {
    let mut within = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for i in 0..instances {
        let cfg = small_instance_config(num_pbs, num_users, rng::derive_seed(seed, rng::STREAM_TRIAL, i as u64));
        let scenario = drop_scenario(&cfg)?;
        let gains = build_gain_matrix(&scenario);
        let link = build_link_table(&scenario, &gains)?;
        let result = solve(&link, params)?;
        let (_, oracle) = brute_force_optimum(&link, false)?;
        if result.sum_ee >= 0.95 * oracle.sum_ee {
            within += 1;
        }
        max_excess = max_excess.max(result.sum_ee - oracle.sum_ee);
    }
    Ok(OracleCheckReport { instances, within_5_percent: within, max_excess_over_oracle: max_excess })
}
