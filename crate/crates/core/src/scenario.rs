//! Two-tier network drops: a fixed hexagonal macro grid plus pico BSs and
//! users dropped uniformly inside each macrocell.
//!
//! Ordering conventions (downstream indexing relies on them):
//! - macro BSs come first (ids `0..num_mbs`), then pico BSs grouped by parent
//!   macrocell in grid order;
//! - users are grouped by parent macrocell in grid order.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::rng;
use crate::units::dbm_to_watts;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tier {
    Macro,
    Pico,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x_km: f64,
    pub y_km: f64,
}

impl Point {
    pub fn distance_km(&self, other: &Point) -> f64 {
        (self.x_km - other.x_km).hypot(self.y_km - other.y_km)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    pub tier: Tier,
    pub position: Point,
    /// Transmit power in watts (linear).
    pub tx_power_w: f64,
    pub amp_coeff: f64,
    pub circuit_power_w: f64,
    /// Antenna count; always 1 for pico BSs.
    pub antennas: usize,
}

impl BaseStation {
    /// Total power drained while serving: amplifier draw plus circuit power.
    /// This is the denominator of every energy-efficiency ratio.
    pub fn total_power_w(&self) -> f64 {
        self.amp_coeff * self.tx_power_w + self.circuit_power_w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub id: usize,
    pub position: Point,
    /// Linear SINR threshold this user's serving link must meet.
    pub sinr_threshold: f64,
}

/// One physical drop: the BS roster and user positions, frozen for all
/// downstream math.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: NetworkConfig,
    pub base_stations: Vec<BaseStation>,
    pub users: Vec<User>,
}

impl Scenario {
    pub fn num_bs(&self) -> usize {
        self.base_stations.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_macro(&self) -> usize {
        self.base_stations.iter().filter(|b| b.tier == Tier::Macro).count()
    }

    /// Structured-text dump for reproducibility; `from_json` restores the
    /// exact drop (f64 values round-trip).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("scenario JSON: {e}")))
    }
}

/// Macrocell centers on a hexagonal lattice with the configured inter-site
/// distance: the origin first, then rings in spiral order. Deterministic.
pub fn build_macro_grid(config: &NetworkConfig) -> Vec<Point> {
    let isd = config.inter_site_distance_km;
    let mut points = vec![axial_to_point(0, 0, isd)];
    // Axial unit steps between neighboring sites, in counter-clockwise order.
    const DIRS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
    let mut ring: i64 = 1;
    while points.len() < config.num_mbs {
        let (mut q, mut r) = (0, -ring);
        for dir in DIRS {
            for _ in 0..ring {
                if points.len() == config.num_mbs {
                    return points;
                }
                points.push(axial_to_point(q, r, isd));
                q += dir.0;
                r += dir.1;
            }
        }
        ring += 1;
    }
    points
}

fn axial_to_point(q: i64, r: i64, isd: f64) -> Point {
    Point {
        x_km: isd * (q as f64 + r as f64 / 2.0),
        y_km: isd * (SQRT_3 / 2.0) * r as f64,
    }
}

/// Whether `p` lies inside the hexagonal macrocell centered at `center`
/// (apothem = half the inter-site distance, edges facing the six neighbors).
pub fn point_in_hexagon(center: Point, isd_km: f64, p: Point) -> bool {
    let dx = p.x_km - center.x_km;
    let dy = p.y_km - center.y_km;
    let apothem = isd_km / 2.0;
    // Projections onto the three edge-normal axes (0, 60 and 120 degrees).
    let p0 = dx;
    let p1 = 0.5 * dx + (SQRT_3 / 2.0) * dy;
    let p2 = -0.5 * dx + (SQRT_3 / 2.0) * dy;
    p0.abs() <= apothem && p1.abs() <= apothem && p2.abs() <= apothem
}

fn sample_in_hexagon<R: Rng>(rng: &mut R, center: Point, isd_km: f64) -> Point {
    let circumradius = isd_km / SQRT_3;
    loop {
        let p = Point {
            x_km: center.x_km + rng.random_range(-circumradius..circumradius),
            y_km: center.y_km + rng.random_range(-circumradius..circumradius),
        };
        if point_in_hexagon(center, isd_km, p) {
            return p;
        }
    }
}

/// Circuit power consumption of a BS in watts: the two-term polynomial model
/// for the macro tier (stream-dependent baseline plus a per-antenna term),
/// the configured constant for picos.
pub fn circuit_power(tier: Tier, antennas: usize, streams: usize, config: &NetworkConfig) -> f64 {
    match tier {
        Tier::Macro => {
            let s = streams as f64;
            let m = antennas as f64;
            let c = &config.circuit_coeffs;
            let base = c.c00 + c.c10 * s + c.c20 * s * s + c.c30 * s * s * s;
            let per_antenna = c.c01 + c.c11 * s + c.c21 * s * s;
            base + m * per_antenna
        }
        Tier::Pico => config.pbs_circuit_power_w,
    }
}

/// Generates one reproducible drop: macro grid, then pico BSs and users drawn
/// uniformly inside each macrocell from the positions sub-stream of
/// `config.rng_seed`. Equal configs (including seed) give identical drops.
pub fn drop_scenario(config: &NetworkConfig) -> Result<Scenario> {
    config.validate()?;

    let centers = build_macro_grid(config);
    let isd = config.inter_site_distance_km;
    let mbs_power_w = dbm_to_watts(config.mbs_tx_power_dbm);
    let pbs_power_w = dbm_to_watts(config.pbs_tx_power_dbm);
    let macro_circuit_w = circuit_power(Tier::Macro, config.mbs_antennas, config.streams, config);

    let mut base_stations: Vec<BaseStation> = centers
        .iter()
        .enumerate()
        .map(|(id, &position)| BaseStation {
            id,
            tier: Tier::Macro,
            position,
            tx_power_w: mbs_power_w,
            amp_coeff: config.mbs_amp_coeff,
            circuit_power_w: macro_circuit_w,
            antennas: config.mbs_antennas,
        })
        .collect();

    let mut pos_rng = rng::stream(config.rng_seed, rng::STREAM_POSITIONS, 0);

    // All pico draws precede all user draws so growing the user population
    // leaves BS placement untouched.
    for &center in &centers {
        for _ in 0..config.pbs_per_macrocell {
            let id = base_stations.len();
            base_stations.push(BaseStation {
                id,
                tier: Tier::Pico,
                position: sample_in_hexagon(&mut pos_rng, center, isd),
                tx_power_w: pbs_power_w,
                amp_coeff: config.pbs_amp_coeff,
                circuit_power_w: config.pbs_circuit_power_w,
                antennas: 1,
            });
        }
    }

    let mut users = Vec::with_capacity(centers.len() * config.users_per_macrocell);
    for &center in &centers {
        for _ in 0..config.users_per_macrocell {
            let id = users.len();
            users.push(User {
                id,
                position: sample_in_hexagon(&mut pos_rng, center, isd),
                sinr_threshold: config.sinr_threshold,
            });
        }
    }

    Ok(Scenario { config: config.clone(), base_stations, users })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_site_grid_is_origin() {
        let cfg = NetworkConfig { num_mbs: 1, ..Default::default() };
        assert_eq!(build_macro_grid(&cfg), vec![Point { x_km: 0.0, y_km: 0.0 }]);
    }

    #[test]
    fn seven_site_grid_ring_distances() {
        let cfg = NetworkConfig { num_mbs: 7, inter_site_distance_km: 1.0, ..Default::default() };
        let grid = build_macro_grid(&cfg);
        assert_eq!(grid.len(), 7);
        let center = grid[0];
        for p in &grid[1..] {
            assert_relative_eq!(p.distance_km(&center), 1.0, max_relative = 1e-12);
        }
        // consecutive ring sites are lattice neighbors as well
        for i in 1..7 {
            let j = if i == 6 { 1 } else { i + 1 };
            assert_relative_eq!(grid[i].distance_km(&grid[j]), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn grid_scales_linearly_with_isd() {
        let cfg1 = NetworkConfig { num_mbs: 7, inter_site_distance_km: 1.0, ..Default::default() };
        let cfg2 = NetworkConfig { num_mbs: 7, inter_site_distance_km: 2.0, ..Default::default() };
        let (g1, g2) = (build_macro_grid(&cfg1), build_macro_grid(&cfg2));
        for (a, b) in g1.iter().zip(&g2) {
            assert_relative_eq!(2.0 * a.x_km, b.x_km, max_relative = 1e-12, epsilon = 1e-15);
            assert_relative_eq!(2.0 * a.y_km, b.y_km, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn larger_grids_stay_on_lattice() {
        let cfg = NetworkConfig { num_mbs: 19, ..Default::default() };
        let grid = build_macro_grid(&cfg);
        assert_eq!(grid.len(), 19);
        // ring 2 sites sit at distance isd*sqrt(3) or 2*isd from the center
        for p in &grid[7..] {
            let d = p.distance_km(&grid[0]);
            let on_lattice = (d - SQRT_3).abs() < 1e-12 || (d - 2.0).abs() < 1e-12;
            assert!(on_lattice, "unexpected ring-2 distance {d}");
        }
    }

    #[test]
    fn drop_is_deterministic() {
        let cfg = NetworkConfig { rng_seed: 42, ..Default::default() };
        let a = drop_scenario(&cfg).unwrap();
        let b = drop_scenario(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn drop_respects_counts_and_ordering() {
        let cfg = NetworkConfig::default();
        let s = drop_scenario(&cfg).unwrap();
        assert_eq!(s.num_bs(), cfg.num_mbs * (1 + cfg.pbs_per_macrocell));
        assert_eq!(s.num_users(), cfg.num_mbs * cfg.users_per_macrocell);
        assert_eq!(s.num_macro(), cfg.num_mbs);
        for (i, bs) in s.base_stations.iter().enumerate() {
            assert_eq!(bs.id, i);
            let expected = if i < cfg.num_mbs { Tier::Macro } else { Tier::Pico };
            assert_eq!(bs.tier, expected);
            if bs.tier == Tier::Pico {
                assert_eq!(bs.antennas, 1);
            }
            assert!(bs.total_power_w() > 0.0);
        }
    }

    #[test]
    fn power_conversion_anchors() {
        let cfg = NetworkConfig { mbs_tx_power_dbm: 30.0, ..Default::default() };
        let s = drop_scenario(&cfg).unwrap();
        assert_eq!(s.base_stations[0].tx_power_w, 1.0);

        let cfg = NetworkConfig { mbs_tx_power_dbm: 46.0, ..Default::default() };
        let s = drop_scenario(&cfg).unwrap();
        assert_relative_eq!(s.base_stations[0].tx_power_w, 39.810717055349734, max_relative = 1e-12);
    }

    #[test]
    fn nodes_lie_inside_parent_macrocell() {
        let cfg = NetworkConfig::default();
        let s = drop_scenario(&cfg).unwrap();
        let centers = build_macro_grid(&cfg);
        for bs in s.base_stations.iter().filter(|b| b.tier == Tier::Pico) {
            let cell = (bs.id - cfg.num_mbs) / cfg.pbs_per_macrocell;
            assert!(point_in_hexagon(centers[cell], cfg.inter_site_distance_km, bs.position));
        }
        for u in &s.users {
            let cell = u.id / cfg.users_per_macrocell;
            assert!(point_in_hexagon(centers[cell], cfg.inter_site_distance_km, u.position));
        }
    }

    #[test]
    fn circuit_power_anchors() {
        let cfg = NetworkConfig::default();
        assert_eq!(circuit_power(Tier::Pico, 1, 1, &cfg), 13.6);
        let macro_power = circuit_power(Tier::Macro, 100, 10, &cfg);
        assert!((macro_power - 152.00072).abs() < 1e-3, "got {macro_power}");
        // antenna-independent part only
        assert_relative_eq!(circuit_power(Tier::Macro, 0, 10, &cfg), 52.0000208, max_relative = 1e-12);
    }

    #[test]
    fn circuit_power_increases_with_antennas() {
        let cfg = NetworkConfig::default();
        let mut prev = circuit_power(Tier::Macro, 1, 1, &cfg);
        for m in 2..200 {
            let next = circuit_power(Tier::Macro, m, 1, &cfg);
            assert!(next > prev);
            prev = next;
        }
    }

    #[test]
    fn json_round_trip() {
        let s = drop_scenario(&NetworkConfig::default()).unwrap();
        let restored = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(s, restored);
    }

    #[test]
    fn changing_user_count_keeps_bs_positions() {
        let a = drop_scenario(&NetworkConfig { users_per_macrocell: 10, ..Default::default() }).unwrap();
        let b = drop_scenario(&NetworkConfig { users_per_macrocell: 20, ..Default::default() }).unwrap();
        assert_eq!(a.base_stations, b.base_stations);
    }
}
