//! Network configuration: every tunable of the two-tier model in one struct,
//! loadable from a plain `key = value` file.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of the macro-BS circuit power model: the stream-dependent
/// part `sum_i c_i0 * S^i` plus `M * sum_i c_i1 * S^i` per antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitCoeffs {
    pub c00: f64,
    pub c10: f64,
    pub c20: f64,
    pub c30: f64,
    pub c01: f64,
    pub c11: f64,
    pub c21: f64,
}

impl Default for CircuitCoeffs {
    fn default() -> Self {
        Self {
            c00: 4.0,
            c10: 4.8,
            c20: 0.0,
            c30: 2.08e-8,
            c01: 1.0,
            c11: 9.5e-8,
            c21: 6.25e-8,
        }
    }
}

/// Parameters of one two-tier drop. Distances in km, powers in dBm at the
/// config boundary (converted to watts when a scenario is built), bandwidth
/// in Hz, noise density in dBm/Hz, SINR threshold linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub inter_site_distance_km: f64,
    pub num_mbs: usize,
    pub pbs_per_macrocell: usize,
    pub users_per_macrocell: usize,
    pub mbs_tx_power_dbm: f64,
    pub pbs_tx_power_dbm: f64,
    /// Antenna count M of each macro BS.
    pub mbs_antennas: usize,
    /// Maximal simultaneous downlink streams S per macro BS.
    pub streams: usize,
    pub mbs_amp_coeff: f64,
    pub pbs_amp_coeff: f64,
    pub pbs_circuit_power_w: f64,
    pub circuit_coeffs: CircuitCoeffs,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub shadowing_std_db: f64,
    /// Linear SINR threshold applied to every user of a drop.
    pub sinr_threshold: f64,
    pub rng_seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            inter_site_distance_km: 1.0,
            num_mbs: 7,
            pbs_per_macrocell: 4,
            users_per_macrocell: 30,
            mbs_tx_power_dbm: 46.0,
            pbs_tx_power_dbm: 30.0,
            mbs_antennas: 100,
            streams: 10,
            mbs_amp_coeff: 4.0,
            pbs_amp_coeff: 2.0,
            pbs_circuit_power_w: 13.6,
            circuit_coeffs: CircuitCoeffs::default(),
            bandwidth_hz: 10e6,
            noise_psd_dbm_hz: -174.0,
            shadowing_std_db: 8.0,
            sinr_threshold: 0.01,
            rng_seed: 1,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be strictly positive, got {v}")))
            }
        }
        positive("inter_site_distance_km", self.inter_site_distance_km)?;
        positive("mbs_amp_coeff", self.mbs_amp_coeff)?;
        positive("pbs_amp_coeff", self.pbs_amp_coeff)?;
        positive("pbs_circuit_power_w", self.pbs_circuit_power_w)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        if self.num_mbs == 0 || self.pbs_per_macrocell == 0 || self.users_per_macrocell == 0 {
            return Err(Error::InvalidConfig(
                "num_mbs, pbs_per_macrocell and users_per_macrocell must be >= 1".into(),
            ));
        }
        if self.streams < 1 || self.mbs_antennas < self.streams {
            return Err(Error::InvalidConfig(format!(
                "require mbs_antennas >= streams >= 1, got M={} S={}",
                self.mbs_antennas, self.streams
            )));
        }
        if !self.mbs_tx_power_dbm.is_finite() || !self.pbs_tx_power_dbm.is_finite() {
            return Err(Error::InvalidConfig("tx powers must be finite dBm values".into()));
        }
        if !self.noise_psd_dbm_hz.is_finite() {
            return Err(Error::InvalidConfig("noise_psd_dbm_hz must be finite".into()));
        }
        if !(self.shadowing_std_db >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "shadowing_std_db must be >= 0, got {}",
                self.shadowing_std_db
            )));
        }
        if !(self.sinr_threshold >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sinr_threshold must be >= 0, got {}",
                self.sinr_threshold
            )));
        }
        let c = &self.circuit_coeffs;
        for (name, v) in [
            ("c00", c.c00),
            ("c10", c.c10),
            ("c20", c.c20),
            ("c30", c.c30),
            ("c01", c.c01),
            ("c11", c.c11),
            ("c21", c.c21),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("circuit coefficient {name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Parses a `key = value` config. Blank lines and `#` comments are
    /// ignored; keys not listed in [`NetworkConfig::file_keys`] are rejected.
    /// Missing keys keep their defaults.
    pub fn from_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
                line: lineno,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.set_key(key, value).map_err(|msg| Error::ConfigParse { line: lineno, msg })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    /// Renders the config in the same `key = value` format `from_str` accepts.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "inter_site_distance_km = {}", self.inter_site_distance_km);
        let _ = writeln!(s, "num_mbs = {}", self.num_mbs);
        let _ = writeln!(s, "pbs_per_macrocell = {}", self.pbs_per_macrocell);
        let _ = writeln!(s, "users_per_macrocell = {}", self.users_per_macrocell);
        let _ = writeln!(s, "mbs_tx_power_dbm = {}", self.mbs_tx_power_dbm);
        let _ = writeln!(s, "pbs_tx_power_dbm = {}", self.pbs_tx_power_dbm);
        let _ = writeln!(s, "mbs_antennas = {}", self.mbs_antennas);
        let _ = writeln!(s, "streams = {}", self.streams);
        let _ = writeln!(s, "mbs_amp_coeff = {}", self.mbs_amp_coeff);
        let _ = writeln!(s, "pbs_amp_coeff = {}", self.pbs_amp_coeff);
        let _ = writeln!(s, "pbs_circuit_power_w = {}", self.pbs_circuit_power_w);
        let c = &self.circuit_coeffs;
        let _ = writeln!(s, "c00 = {}", c.c00);
        let _ = writeln!(s, "c10 = {}", c.c10);
        let _ = writeln!(s, "c20 = {}", c.c20);
        let _ = writeln!(s, "c30 = {}", c.c30);
        let _ = writeln!(s, "c01 = {}", c.c01);
        let _ = writeln!(s, "c11 = {}", c.c11);
        let _ = writeln!(s, "c21 = {}", c.c21);
        let _ = writeln!(s, "bandwidth_hz = {}", self.bandwidth_hz);
        let _ = writeln!(s, "noise_psd_dbm_hz = {}", self.noise_psd_dbm_hz);
        let _ = writeln!(s, "shadowing_std_db = {}", self.shadowing_std_db);
        let _ = writeln!(s, "sinr_threshold = {}", self.sinr_threshold);
        let _ = writeln!(s, "rng_seed = {}", self.rng_seed);
        s
    }

    /// The accepted config-file keys, for help text and docs.
    pub fn file_keys() -> &'static [&'static str] {
        &[
            "inter_site_distance_km",
            "num_mbs",
            "pbs_per_macrocell",
            "users_per_macrocell",
            "mbs_tx_power_dbm",
            "pbs_tx_power_dbm",
            "mbs_antennas",
            "streams",
            "mbs_amp_coeff",
            "pbs_amp_coeff",
            "pbs_circuit_power_w",
            "c00",
            "c10",
            "c20",
            "c30",
            "c01",
            "c11",
            "c21",
            "bandwidth_hz",
            "noise_psd_dbm_hz",
            "shadowing_std_db",
            "sinr_threshold",
            "rng_seed",
        ]
    }

    fn set_key(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn f64_of(key: &str, value: &str) -> std::result::Result<f64, String> {
            value.parse::<f64>().map_err(|_| format!("key `{key}`: `{value}` is not a number"))
        }
        fn usize_of(key: &str, value: &str) -> std::result::Result<usize, String> {
            value.parse::<usize>().map_err(|_| format!("key `{key}`: `{value}` is not a non-negative integer"))
        }
        match key {
            "inter_site_distance_km" => self.inter_site_distance_km = f64_of(key, value)?,
            "num_mbs" => self.num_mbs = usize_of(key, value)?,
            "pbs_per_macrocell" => self.pbs_per_macrocell = usize_of(key, value)?,
            "users_per_macrocell" => self.users_per_macrocell = usize_of(key, value)?,
            "mbs_tx_power_dbm" => self.mbs_tx_power_dbm = f64_of(key, value)?,
            "pbs_tx_power_dbm" => self.pbs_tx_power_dbm = f64_of(key, value)?,
            "mbs_antennas" => self.mbs_antennas = usize_of(key, value)?,
            "streams" => self.streams = usize_of(key, value)?,
            "mbs_amp_coeff" => self.mbs_amp_coeff = f64_of(key, value)?,
            "pbs_amp_coeff" => self.pbs_amp_coeff = f64_of(key, value)?,
            "pbs_circuit_power_w" => self.pbs_circuit_power_w = f64_of(key, value)?,
            "c00" => self.circuit_coeffs.c00 = f64_of(key, value)?,
            "c10" => self.circuit_coeffs.c10 = f64_of(key, value)?,
            "c20" => self.circuit_coeffs.c20 = f64_of(key, value)?,
            "c30" => self.circuit_coeffs.c30 = f64_of(key, value)?,
            "c01" => self.circuit_coeffs.c01 = f64_of(key, value)?,
            "c11" => self.circuit_coeffs.c11 = f64_of(key, value)?,
            "c21" => self.circuit_coeffs.c21 = f64_of(key, value)?,
            "bandwidth_hz" => self.bandwidth_hz = f64_of(key, value)?,
            "noise_psd_dbm_hz" => self.noise_psd_dbm_hz = f64_of(key, value)?,
            "shadowing_std_db" => self.shadowing_std_db = f64_of(key, value)?,
            "sinr_threshold" => self.sinr_threshold = f64_of(key, value)?,
            "rng_seed" => {
                self.rng_seed = value
                    .parse::<u64>()
                    .map_err(|_| format!("key `rng_seed`: `{value}` is not a u64"))?
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}
