//! Command-line harness: seeded Monte-Carlo sweeps over a two-tier network,
//! CSV output (results, summaries, solver traces) and a small-instance
//! oracle-check mode.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;

use eea_core::{
    oracle_check, run_sweep_detailed, summarize, write_results_csv, write_summary_csv,
    write_trace_csv, NetworkConfig, Policy, SolverParams, SweepAxis, SweepSpec,
};

#[derive(Parser, Debug)]
#[command(
    name = "eea",
    version,
    about = "Monte-Carlo harness for downlink user association in two-tier massive-MIMO networks",
    after_help = "CONFIG FILE\n  Plain `key = value` lines; `#` starts a comment. Unknown keys are rejected.\n  Accepted keys match the NetworkConfig fields, e.g. inter_site_distance_km,\n  num_mbs, pbs_per_macrocell, users_per_macrocell, mbs_tx_power_dbm,\n  pbs_tx_power_dbm, mbs_antennas, streams, bandwidth_hz, noise_psd_dbm_hz,\n  shadowing_std_db, sinr_threshold, rng_seed, ...\n\nOUTPUT\n  <out>/results.csv   one row per (axis value, drop, policy)\n  <out>/summary.csv   per-point means with 95% confidence half-widths\n  <out>/trace_v<value>_d<drop>.csv  solver traces (with --trace)"
)]
pub struct Cli {
    /// Configuration file overriding the built-in defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Sweep axis: pbs_power_dbm, mbs_antennas or custom (label-only).
    #[arg(long, default_value = "pbs_power_dbm")]
    pub sweep: String,

    /// Comma-separated axis values, strictly increasing.
    #[arg(long, default_value = "22,26,30,34,38")]
    pub values: String,

    /// Monte-Carlo drops per axis value (oracle-check mode: instance count,
    /// default 100).
    #[arg(long)]
    pub drops: Option<usize>,

    /// Comma-separated policies: eea, max_sinr, max_rate, oracle.
    #[arg(long, default_value = "eea,max_sinr,max_rate")]
    pub policies: String,

    /// Master RNG seed; fully determines every output byte.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Emit a per-iteration solver trace CSV for every eea trial.
    #[arg(long)]
    pub trace: bool,

    /// Small-instance mode: solve 100 random 3-BS/5-user drops and report the
    /// fraction within 5% of the exhaustive optimum.
    #[arg(long)]
    pub oracle_check: bool,
}

pub fn run(cli: &Cli) -> Result<()> {
    if cli.oracle_check {
        return run_oracle_check(cli);
    }
    run_sweep_mode(cli)
}

fn run_oracle_check(cli: &Cli) -> Result<()> {
    let instances = cli.drops.unwrap_or(100);
    if instances == 0 {
        bail!("--drops must be >= 1");
    }
    let report = oracle_check(2, 5, instances, cli.seed, &SolverParams::default())
        .context("oracle check failed")?;
    println!(
        "oracle check: {}/{} instances within 5% of the exhaustive optimum (fraction {:.3})",
        report.within_5_percent,
        report.instances,
        report.fraction()
    );
    println!("max solver excess over the optimum: {:.3e} (must stay <= 0 up to fp noise)", report.max_excess_over_oracle);
    Ok(())
}

fn run_sweep_mode(cli: &Cli) -> Result<()> {
    let base_config = match &cli.config {
        Some(path) => NetworkConfig::from_file(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => NetworkConfig::default(),
    };

    let axis: SweepAxis = cli.sweep.parse()?;
    let values = parse_values(&cli.values)?;
    let policies = parse_policies(&cli.policies)?;

    let spec = SweepSpec {
        axis,
        values,
        drops_per_point: cli.drops.unwrap_or(10),
        policies,
        base_config,
        solver: SolverParams::default(),
        seed: cli.seed,
    };

    let trials = run_sweep_detailed(&spec, cli.trace)?;
    fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;

    let records: Vec<_> = trials.iter().map(|t| t.record.clone()).collect();
    let results_path = cli.out.join("results.csv");
    let mut results = Vec::new();
    write_results_csv(&mut results, &records)?;
    fs::write(&results_path, results)?;

    let summary_path = cli.out.join("summary.csv");
    let mut summary = Vec::new();
    write_summary_csv(&mut summary, &summarize(&records))?;
    fs::write(&summary_path, summary)?;

    let mut trace_files = 0usize;
    if cli.trace {
        for trial in &trials {
            if trial.trace.is_empty() {
                continue;
            }
            let name = format!("trace_v{}_d{}.csv", trial.record.axis_value, trial.record.drop);
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &trial.trace)?;
            fs::write(cli.out.join(name), buf)?;
            trace_files += 1;
        }
    }

    println!(
        "wrote {} trial rows to {} (and {})",
        records.len(),
        results_path.display(),
        summary_path.display()
    );
    if cli.trace {
        println!("wrote {trace_files} solver trace files");
    }
    Ok(())
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>().with_context(|| format!("invalid axis value `{s}`"))
        })
        .collect()
}

fn parse_policies(text: &str) -> Result<Vec<Policy>> {
    text.split(',').map(|s| Ok(s.trim().parse::<Policy>()?)).collect()
}
