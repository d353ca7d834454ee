//! Channel gain realizations for the sidelink simulation.
//!
//! Links to the base station use the 3GPP urban macro pathloss
//! 128.1 + 37.6·log10(d_km) with 8 dB log-normal shadowing; vehicle-to-vehicle
//! links use the WINNER+ B1 LOS urban pathloss with 3 dB shadowing. Fast
//! fading is unit-mean exponential in power (Rayleigh amplitude), drawn
//! independently per (transmitter, receiver, sub-channel).
//!
//! Slow components (pathloss + shadowing) are refreshed once per control
//! interval via [`SlowChannelState::sample`]; fast fading is refreshed every
//! communication interval via [`SlowChannelState::realize`].

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};

use super::{CommParams, Topology};
use crate::{Error, Result};

const SPEED_OF_LIGHT: f64 = 3.0e8;
/// Minimum separation used when two nodes coincide.
const MIN_DISTANCE_M: f64 = 1.0;

/// Urban macro pathloss for links terminating at the base station, dB.
/// `d_m` is the 3-D transmitter-receiver distance in metres.
pub fn v2i_pathloss_db(d_m: f64) -> f64 {
    let d = d_m.max(MIN_DISTANCE_M);
    128.1 + 37.6 * (d / 1000.0).log10()
}

/// WINNER+ B1 LOS urban pathloss between vehicles, dB.
///
/// Below 3 m the model is clamped to its 3 m value; beyond the breakpoint
/// distance the steeper 40 dB/decade branch applies.
pub fn v2v_pathloss_db(d_m: f64, carrier_ghz: f64, h_tx_m: f64, h_rx_m: f64) -> f64 {
    let d = d_m.max(MIN_DISTANCE_M);
    let d_bp = 4.0 * (h_tx_m - 1.0) * (h_rx_m - 1.0) * carrier_ghz * 1.0e9 / SPEED_OF_LIGHT;
    let near = |d: f64| 22.7 * d.log10() + 41.0 + 20.0 * (carrier_ghz / 5.0).log10();
    if d <= 3.0 {
        near(3.0)
    } else if d < d_bp {
        near(d)
    } else {
        40.0 * d.log10() + 9.45 - 17.3 * h_tx_m.log10() - 17.3 * h_rx_m.log10()
            + 2.7 * (carrier_ghz / 5.0).log10()
    }
}

/// WINNER+ B1 urban pathloss between vehicles on a street grid, dB.
///
/// Same-street pairs (either coordinate offset under 7 m) are line of sight;
/// cross-street pairs take the NLOS form, evaluated in both propagation
/// orders with the smaller loss kept.
pub fn v2v_grid_pathloss_db(
    a: [f64; 2],
    b: [f64; 2],
    carrier_ghz: f64,
    h_tx_m: f64,
    h_rx_m: f64,
) -> f64 {
    let d1 = (a[0] - b[0]).abs();
    let d2 = (a[1] - b[1]).abs();
    let d = (d1 * d1 + d2 * d2).sqrt();
    if d1.min(d2) < 7.0 {
        return v2v_pathloss_db(d, carrier_ghz, h_tx_m, h_rx_m);
    }
    let nlos = |d_a: f64, d_b: f64| {
        let n_j = (2.8 - 0.0024 * d_b).max(1.84);
        v2v_pathloss_db(d_a, carrier_ghz, h_tx_m, h_rx_m) + 20.0 - 12.5 * n_j
            + 10.0 * n_j * d_b.max(MIN_DISTANCE_M).log10()
            + 3.0 * (carrier_ghz / 5.0).log10()
    };
    nlos(d1, d2).min(nlos(d2, d1))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// All channel gains for one communication interval, linear scale.
///
/// Antenna gains and receiver noise figures are folded into each entry, so
/// SINR computations are plain power ratios. Indexing: `i`, `j` run over V2V
/// links (link `i` transmits from vehicle `i` to vehicle `i+1`), `m` over
/// sub-channels / V2I links.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// V2I link m's vehicle to the BS, on its own sub-channel m.
    pub g_v2i: Vec<f64>,
    /// V2V link i, transmitter to receiver, per sub-channel.
    pub g_v2v: Vec<Vec<f64>>,
    /// V2V link i's transmitter to the BS, per sub-channel.
    pub g_v2v_to_bs: Vec<Vec<f64>>,
    /// V2I link m's vehicle to V2V link i's receiver (on sub-channel m).
    pub g_v2i_to_v2v: Vec<Vec<f64>>,
    /// V2V link j's transmitter to V2V link i's receiver, per sub-channel.
    pub g_v2v_cross: Vec<Vec<Vec<f64>>>,
}

impl ChannelRealization {
    pub fn n_links(&self) -> usize {
        self.g_v2v.len()
    }

    pub fn all_positive_finite(&self) -> bool {
        let ok = |g: &f64| *g > 0.0 && g.is_finite();
        self.g_v2i.iter().all(ok)
            && self.g_v2v.iter().flatten().all(ok)
            && self.g_v2v_to_bs.iter().flatten().all(ok)
            && self.g_v2i_to_v2v.iter().flatten().all(ok)
            && self.g_v2v_cross.iter().flatten().flatten().all(ok)
    }
}

/// Pathloss + shadowing of every needed link pair, dB, including antenna
/// gains and receiver noise figures. Valid for one control interval.
#[derive(Debug, Clone)]
pub struct SlowChannelState {
    n_vehicles: usize,
    m: usize,
    /// Vehicle a -> vehicle b (platoon), symmetric in the slow part.
    veh_db: Vec<Vec<f64>>,
    /// V2I vehicle m -> BS.
    v2i_db: Vec<f64>,
    /// Platoon vehicle -> BS.
    veh_to_bs_db: Vec<f64>,
    /// V2I vehicle m -> platoon vehicle.
    i2v_db: Vec<Vec<f64>>,
}

impl SlowChannelState {
    /// Draws pathloss and shadowing for the given snapshot of positions.
    pub fn sample<R: Rng>(topo: &Topology, params: &CommParams, rng: &mut R) -> Result<Self> {
        topo.validate()?;
        if topo.v2i_xy.len() != params.m {
            return Err(Error::invalid(format!(
                "topology has {} V2I vehicles but params.m = {}",
                topo.v2i_xy.len(),
                params.m
            )));
        }
        let n = topo.platoon_xy.len();
        let m = params.m;
        let shadow_v2v = Normal::new(0.0, params.v2v_shadow_sigma_db)
            .map_err(|e| Error::invalid(e.to_string()))?;
        let shadow_v2i = Normal::new(0.0, params.v2i_shadow_sigma_db)
            .map_err(|e| Error::invalid(e.to_string()))?;

        let to_bs_gain =
            params.veh_antenna_gain_db + params.bs_antenna_gain_db - params.bs_noise_figure_db;
        let veh_gain = 2.0 * params.veh_antenna_gain_db - params.veh_noise_figure_db;
        let bs_elev = params.bs_height_m - params.veh_height_m;
        let bs_dist = |xy: [f64; 2]| (dist2(xy, topo.bs_xy).powi(2) + bs_elev.powi(2)).sqrt();

        // Shadowing is drawn once per unordered vehicle pair; the matrix is
        // symmetric in its slow part.
        let mut veh_db = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in (a + 1)..n {
                let pl = v2v_grid_pathloss_db(
                    topo.platoon_xy[a],
                    topo.platoon_xy[b],
                    params.carrier_ghz,
                    params.veh_height_m,
                    params.veh_height_m,
                );
                let db = -pl + shadow_v2v.sample(rng) + veh_gain;
                veh_db[a][b] = db;
                veh_db[b][a] = db;
            }
        }
        // Self pairs only arise through the minimum-separation clamp.
        for (a, row) in veh_db.iter_mut().enumerate() {
            row[a] = -v2v_pathloss_db(
                0.0,
                params.carrier_ghz,
                params.veh_height_m,
                params.veh_height_m,
            ) + veh_gain;
        }

        let v2i_db = topo
            .v2i_xy
            .iter()
            .map(|&xy| -v2i_pathloss_db(bs_dist(xy)) + shadow_v2i.sample(rng) + to_bs_gain)
            .collect();
        let veh_to_bs_db = topo
            .platoon_xy
            .iter()
            .map(|&xy| -v2i_pathloss_db(bs_dist(xy)) + shadow_v2i.sample(rng) + to_bs_gain)
            .collect();
        let mut i2v_db = vec![vec![0.0; n]; m];
        for (mi, row) in i2v_db.iter_mut().enumerate() {
            for (vi, cell) in row.iter_mut().enumerate() {
                let pl = v2v_grid_pathloss_db(
                    topo.v2i_xy[mi],
                    topo.platoon_xy[vi],
                    params.carrier_ghz,
                    params.veh_height_m,
                    params.veh_height_m,
                );
                *cell = -pl + shadow_v2v.sample(rng) + veh_gain;
            }
        }

        Ok(Self { n_vehicles: n, m, veh_db, v2i_db, veh_to_bs_db, i2v_db })
    }

    /// Applies fresh fast fading to the slow state, producing the gains of
    /// one communication interval.
    pub fn realize<R: Rng>(&self, rng: &mut R) -> ChannelRealization {
        let n_links = self.n_vehicles - 1;
        let m = self.m;
        let mut fade = |slow_db: f64| {
            let power: f64 = Exp1.sample(rng);
            db_to_linear(slow_db) * power
        };

        let g_v2i = self.v2i_db.iter().map(|&db| fade(db)).collect();
        // Vehicle-pair fading per (tx, rx, sub-channel); the direct gain of
        // link i is the (i, i+1) entry so the signal path and the matching
        // cross entry agree by construction.
        let mut pair = vec![vec![vec![0.0; m]; self.n_vehicles]; self.n_vehicles];
        for tx in 0..n_links {
            for rx in 1..self.n_vehicles {
                for sc in 0..m {
                    pair[tx][rx][sc] = fade(self.veh_db[tx][rx]);
                }
            }
        }
        let g_v2v = (0..n_links).map(|i| pair[i][i + 1].clone()).collect();
        let g_v2v_cross: Vec<Vec<Vec<f64>>> = (0..n_links)
            .map(|j| (0..n_links).map(|i| pair[j][i + 1].clone()).collect())
            .collect();
        let g_v2v_to_bs = (0..n_links)
            .map(|i| (0..m).map(|_| fade(self.veh_to_bs_db[i])).collect())
            .collect();
        let g_v2i_to_v2v = (0..m)
            .map(|mi| (0..n_links).map(|i| fade(self.i2v_db[mi][i + 1])).collect())
            .collect();

        ChannelRealization { g_v2i, g_v2v, g_v2v_to_bs, g_v2i_to_v2v, g_v2v_cross }
    }
}

/// One-shot sampling: fresh slow state plus one fast realization.
pub fn sample_channels<R: Rng>(
    topo: &Topology,
    params: &CommParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    Ok(SlowChannelState::sample(topo, params, rng)?.realize(rng))
}
