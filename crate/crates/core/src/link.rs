//! SINR and achievable-rate matrices for every (BS, user) pair, plus the
//! per-BS power denominators used by every energy-efficiency ratio.
//!
//! Macro links get the massive-MIMO beamforming gain `(M - S + 1) / S` on the
//! desired signal and a factor-S rate multiplier (S equal-power streams);
//! interference is the plain received power of every other BS, both tiers.

use std::io::Write;

use ndarray::Array2;

use crate::channel::{noise_power_w, GainMatrix};
use crate::error::{Error, Result};
use crate::scenario::{Scenario, Tier};

/// Massive-MIMO SINR gain factor `(M - S + 1) / S`.
pub fn kappa(antennas: usize, streams: usize) -> Result<f64> {
    if streams < 1 || antennas < streams {
        return Err(Error::InvalidConfig(format!(
            "kappa requires antennas >= streams >= 1, got M={antennas} S={streams}"
        )));
    }
    Ok((antennas - streams + 1) as f64 / streams as f64)
}

/// SINR of user `k` served by BS `n`: the (possibly kappa-boosted) desired
/// power over the sum of all other BSs' received power plus noise.
pub fn sinr(scenario: &Scenario, gains: &GainMatrix, n: usize, k: usize) -> f64 {
    let cfg = &scenario.config;
    let noise = noise_power_w(cfg.noise_psd_dbm_hz, cfg.bandwidth_hz);
    let bs = &scenario.base_stations[n];
    let boost = match bs.tier {
        Tier::Macro => kappa(bs.antennas, cfg.streams).expect("validated M >= S >= 1"),
        Tier::Pico => 1.0,
    };
    let desired = boost * bs.tx_power_w * gains.get(n, k);
    let mut interference = 0.0;
    for (j, other) in scenario.base_stations.iter().enumerate() {
        if j != n {
            interference += other.tx_power_w * gains.get(j, k);
        }
    }
    desired / (interference + noise)
}

/// Achievable rate in bits/s: spectral efficiency `log2(1 + SINR)` times the
/// bandwidth, with the macro tier carrying S parallel streams.
pub fn rate(tier: Tier, streams: usize, bandwidth_hz: f64, sinr: f64) -> f64 {
    let streams_factor = match tier {
        Tier::Macro => streams as f64,
        Tier::Pico => 1.0,
    };
    bandwidth_hz * streams_factor * (1.0 + sinr).log2()
}

/// Precomputed per-link quantities for one drop: everything the solver,
/// baselines and oracle read.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTable {
    /// Linear SINR per (BS, user).
    pub sinr: Array2<f64>,
    /// Achievable rate in bits/s per (BS, user).
    pub rate: Array2<f64>,
    /// Per-BS total power draw `rho_n * p_n + p_n^c` in watts.
    pub alpha: Vec<f64>,
    /// Macro-tier SINR gain factor of this drop.
    pub kappa: f64,
    /// Per-user linear SINR thresholds.
    pub tau: Vec<f64>,
}

impl LinkTable {
    pub fn num_bs(&self) -> usize {
        self.sinr.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.sinr.ncols()
    }

    /// Assembles a table from raw matrices, for synthetic instances.
    pub fn from_parts(
        sinr: Array2<f64>,
        rate: Array2<f64>,
        alpha: Vec<f64>,
        kappa: f64,
        tau: Vec<f64>,
    ) -> Result<Self> {
        if rate.dim() != sinr.dim() || alpha.len() != sinr.nrows() || tau.len() != sinr.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "sinr {:?}, rate {:?}, alpha {}, tau {}",
                sinr.dim(),
                rate.dim(),
                alpha.len(),
                tau.len()
            )));
        }
        if alpha.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidConfig("alpha entries must be strictly positive".into()));
        }
        if sinr.iter().chain(rate.iter()).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig("sinr/rate entries must be finite and >= 0".into()));
        }
        Ok(Self { sinr, rate, alpha, kappa, tau })
    }

    pub fn write_sinr_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        write_matrix(w, &self.sinr)
    }

    pub fn write_rate_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        write_matrix(w, &self.rate)
    }
}

fn write_matrix<W: Write>(w: &mut W, m: &Array2<f64>) -> Result<()> {
    for n in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|k| format!("{}", m[[n, k]])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Populates the full link table for a drop. Pure function of its inputs.
pub fn build_link_table(scenario: &Scenario, gains: &GainMatrix) -> Result<LinkTable> {
    let n = scenario.num_bs();
    let k = scenario.num_users();
    if gains.num_bs() != n || gains.num_users() != k {
        return Err(Error::DimensionMismatch(format!(
            "gain matrix is {}x{}, scenario has {n} BSs and {k} users",
            gains.num_bs(),
            gains.num_users()
        )));
    }
    let cfg = &scenario.config;
    let kappa_value = kappa(cfg.mbs_antennas, cfg.streams)?;

    let mut sinr_m = Array2::<f64>::zeros((n, k));
    let mut rate_m = Array2::<f64>::zeros((n, k));
    for row in 0..n {
        let tier = scenario.base_stations[row].tier;
        for col in 0..k {
            let s = sinr(scenario, gains, row, col);
            sinr_m[[row, col]] = s;
            rate_m[[row, col]] = rate(tier, cfg.streams, cfg.bandwidth_hz, s);
        }
    }
    let alpha = scenario.base_stations.iter().map(|b| b.total_power_w()).collect();
    let tau = scenario.users.iter().map(|u| u.sinr_threshold).collect();
    LinkTable::from_parts(sinr_m, rate_m, alpha, kappa_value, tau)
}
