//! Per-link channel gains: log-distance pathloss per tier plus independent
//! log-normal shadowing, and the receiver noise floor.

use std::io::Write;

use ndarray::Array2;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::rng;
use crate::scenario::{Scenario, Tier};
use crate::units::{db_to_linear, dbm_to_watts};

/// Close-in clamp for the log-distance models, which diverge as d -> 0.
pub const MIN_DISTANCE_KM: f64 = 0.01;

/// Pathloss in dB at `distance_km` (clamped to [`MIN_DISTANCE_KM`]).
pub fn pathloss_db(tier: Tier, distance_km: f64) -> f64 {
    let d = distance_km.max(MIN_DISTANCE_KM);
    match tier {
        Tier::Macro => 128.1 + 37.6 * d.log10(),
        Tier::Pico => 140.7 + 36.7 * d.log10(),
    }
}

/// Linear power gain for a given pathloss and shadowing realization:
/// `10^(-(pathloss - shadow)/10)`.
pub fn gain_from_pathloss(pathloss_db: f64, shadow_db: f64) -> f64 {
    db_to_linear(-(pathloss_db - shadow_db))
}

/// Linear power gain of one link.
pub fn channel_gain(tier: Tier, distance_km: f64, shadow_db: f64) -> f64 {
    gain_from_pathloss(pathloss_db(tier, distance_km), shadow_db)
}

/// Receiver noise power in watts over `bandwidth_hz`.
pub fn noise_power_w(noise_psd_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(noise_psd_dbm_hz) * bandwidth_hz
}

/// N x K matrix of linear channel gains, frozen per drop.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    g: Array2<f64>,
}

impl GainMatrix {
    /// Wraps a raw gain matrix, for synthetic instances.
    pub fn from_matrix(g: Array2<f64>) -> Result<Self> {
        if g.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(crate::error::Error::InvalidConfig(
                "gain entries must be finite and strictly positive".into(),
            ));
        }
        Ok(Self { g })
    }

    pub fn get(&self, bs: usize, user: usize) -> f64 {
        self.g[[bs, user]]
    }

    pub fn num_bs(&self) -> usize {
        self.g.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.g.ncols()
    }

    /// Debug export: one row per BS, one column per user.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        for n in 0..self.g.nrows() {
            let row: Vec<String> = (0..self.g.ncols()).map(|k| format!("{}", self.g[[n, k]])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Builds the gain matrix for a drop, drawing one shadowing value per link
/// from the scenario's shadowing sub-stream. Draws run user-major so adding
/// users never perturbs the shadowing of existing links.
pub fn build_gain_matrix(scenario: &Scenario) -> GainMatrix {
    let n = scenario.num_bs();
    let k = scenario.num_users();
    let mut rng = rng::stream(scenario.config.rng_seed, rng::STREAM_SHADOWING, 0);
    let normal = Normal::new(0.0, scenario.config.shadowing_std_db)
        .expect("shadowing std validated non-negative");
    let mut g = Array2::<f64>::zeros((n, k));
    for (col, user) in scenario.users.iter().enumerate() {
        for (row, bs) in scenario.base_stations.iter().enumerate() {
            let shadow_db = if scenario.config.shadowing_std_db > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            let d = bs.position.distance_km(&user.position);
            g[[row, col]] = channel_gain(bs.tier, d, shadow_db);
        }
    }
    GainMatrix { g }
}
