//! Per-millisecond C-V2X sidelink simulation.
//!
//! M V2I uplinks each own one sub-channel; V2V links reuse those sub-channels
//! for awareness-message delivery, creating mutual interference. A V2V link's
//! achievable rate drains its transmit queue, whose end-of-interval backlog
//! determines the follower's observation delay.

mod channel;

pub use channel::{
    db_to_linear, dbm_to_mw, sample_channels, v2i_pathloss_db, v2v_pathloss_db,
    ChannelRealization, SlowChannelState,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Radio parameters of the sidelink environment.
///
/// Powers are stored in milliwatts; dBm inputs are converted once at the
/// configuration boundary so the per-millisecond loop stays in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommParams {
    /// Number of V2I links, equal to the number of sub-channels.
    pub m: usize,
    /// Sub-channel bandwidth, Hz.
    pub w_hz: f64,
    /// Noise power, mW.
    pub sigma2_mw: f64,
    /// CAM size, bits.
    pub n_c_bits: f64,
    /// Buffer capacity, CAMs.
    pub n_q: f64,
    /// V2I transmit power, mW.
    pub p_v2i_mw: f64,
    /// V2V transmit power choices, dBm.
    pub power_levels_dbm: Vec<f64>,
    /// Carrier frequency, GHz.
    pub carrier_ghz: f64,
    pub bs_height_m: f64,
    pub veh_height_m: f64,
    pub bs_antenna_gain_db: f64,
    pub bs_noise_figure_db: f64,
    pub veh_antenna_gain_db: f64,
    pub veh_noise_figure_db: f64,
    pub v2i_shadow_sigma_db: f64,
    pub v2v_shadow_sigma_db: f64,
    /// Maximum observation delay carried by the learner state, control intervals.
    pub tau_max: usize,
    /// Communication intervals per control interval.
    pub intervals_per_control: usize,
}

impl Default for CommParams {
    fn default() -> Self {
        Self {
            m: 2,
            w_hz: 180_000.0,
            sigma2_mw: dbm_to_mw(-114.0),
            n_c_bits: 400.0 * 8.0,
            n_q: 10.0,
            p_v2i_mw: dbm_to_mw(23.0),
            power_levels_dbm: vec![23.0, 15.0, 5.0, -100.0],
            carrier_ghz: 2.0,
            bs_height_m: 25.0,
            veh_height_m: 1.5,
            bs_antenna_gain_db: 8.0,
            bs_noise_figure_db: 5.0,
            veh_antenna_gain_db: 3.0,
            veh_noise_figure_db: 9.0,
            v2i_shadow_sigma_db: 8.0,
            v2v_shadow_sigma_db: 3.0,
            tau_max: 5,
            intervals_per_control: 50,
        }
    }
}

impl CommParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::invalid("need at least one V2I link"));
        }
        if !(self.w_hz > 0.0) || !(self.n_c_bits > 0.0) {
            return Err(Error::invalid("bandwidth and CAM size must be positive"));
        }
        if self.n_q + 1.0 < self.tau_max as f64 {
            return Err(Error::invalid(format!(
                "buffer capacity {} too small for tau_max {}",
                self.n_q, self.tau_max
            )));
        }
        if self.tau_max < 1 || self.intervals_per_control < 1 {
            return Err(Error::invalid("tau_max and intervals_per_control must be at least 1"));
        }
        if self.power_levels_dbm.is_empty() {
            return Err(Error::invalid("need at least one V2V power level"));
        }
        if !(self.sigma2_mw > 0.0 && self.p_v2i_mw > 0.0) {
            return Err(Error::invalid("powers must be positive"));
        }
        Ok(())
    }
}

/// Node positions for one control interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    /// Platoon vehicle positions, front bumper, 2-D metres.
    pub platoon_xy: Vec<[f64; 2]>,
    /// Positions of the vehicles holding V2I links.
    pub v2i_xy: Vec<[f64; 2]>,
    pub bs_xy: [f64; 2],
}

impl Topology {
    /// Places the platoon at the given lane positions with the default lane
    /// ordinates and BS location.
    pub fn default_platoon(params: &CommParams, platoon_x: &[f64]) -> Self {
        let _ = params;
        Self {
            platoon_xy: platoon_x.iter().map(|&x| [x, 427.5]).collect(),
            v2i_xy: vec![[391.0, 434.75], [358.0, 434.75]],
            bs_xy: [375.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xy: &[f64; 2]| xy[0].is_finite() && xy[1].is_finite();
        if !self.platoon_xy.iter().all(finite)
            || !self.v2i_xy.iter().all(finite)
            || !finite(&self.bs_xy)
        {
            return Err(Error::invalid("non-finite position in topology"));
        }
        if self.platoon_xy.len() < 2 {
            return Err(Error::invalid("platoon needs at least two vehicles"));
        }
        let y0 = self.platoon_xy[0][1];
        if self.platoon_xy.iter().any(|xy| xy[1] != y0) {
            return Err(Error::invalid("platoon vehicles must share a lane ordinate"));
        }
        Ok(())
    }
}

/// One V2V link's resource allocation for a communication interval: at most
/// one sub-channel, plus a transmit power level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RraAction {
    /// Chosen sub-channel; `None` means no transmission.
    pub subchannel: Option<usize>,
    pub power_dbm: f64,
}

impl RraAction {
    pub fn power_mw(&self) -> f64 {
        dbm_to_mw(self.power_dbm)
    }

    fn occupies(&self, m: usize) -> bool {
        self.subchannel == Some(m)
    }
}

/// Per-link CAM backlog, fractional CAM count in [0, N_Q].
#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    pub q: Vec<f64>,
}

impl QueueState {
    pub fn new(n_links: usize) -> Self {
        Self { q: vec![0.0; n_links] }
    }

    /// Advances link `i`'s queue by one communication interval.
    pub fn step(&mut self, i: usize, rate_cam_per_s: f64, t: usize, params: &CommParams) {
        self.q[i] = step_queue(self.q[i], rate_cam_per_s, t, params.n_q);
    }
}

/// Queue recursion for one communication interval.
///
/// The served amount is 10⁻³·rate (CAMs per millisecond). At the first
/// communication interval of a control interval (t = 0) the freshly sampled
/// CAM joins the queue after service, clamped at the buffer capacity.
pub fn step_queue(q: f64, rate_cam_per_s: f64, t: usize, n_q: f64) -> f64 {
    let drained = (q - 1.0e-3 * rate_cam_per_s).max(0.0);
    if t == 0 {
        (drained + 1.0).min(n_q)
    } else {
        drained
    }
}

/// Observation delay implied by the end-of-interval backlog: ⌈q⌉ + 1.
pub fn observation_delay_raw(q: f64) -> usize {
    q.ceil() as usize + 1
}

/// Observation delay clamped to the learner's history window.
pub fn observation_delay(q: f64, tau_max: usize) -> usize {
    observation_delay_raw(q).min(tau_max)
}

/// SINR of V2I link `m` on its sub-channel, linear.
pub fn sinr_v2i(
    m: usize,
    chan: &ChannelRealization,
    actions: &[RraAction],
    params: &CommParams,
) -> f64 {
    let interference: f64 = actions
        .iter()
        .enumerate()
        .filter(|(_, a)| a.occupies(m))
        .map(|(i, a)| a.power_mw() * chan.g_v2v_to_bs[i][m])
        .sum();
    params.p_v2i_mw * chan.g_v2i[m] / (params.sigma2_mw + interference)
}

/// SINR of V2V link `i` on sub-channel `m`, linear.
///
/// The link must actually occupy `m`; querying another sub-channel is a
/// contract violation.
pub fn sinr_v2v(
    i: usize,
    m: usize,
    chan: &ChannelRealization,
    actions: &[RraAction],
    params: &CommParams,
) -> f64 {
    assert!(
        actions[i].occupies(m),
        "V2V link {i} does not occupy sub-channel {m}"
    );
    let cross: f64 = actions
        .iter()
        .enumerate()
        .filter(|(j, a)| *j != i && a.occupies(m))
        .map(|(j, a)| a.power_mw() * chan.g_v2v_cross[j][i][m])
        .sum();
    let interference = params.p_v2i_mw * chan.g_v2i_to_v2v[m][i] + cross;
    actions[i].power_mw() * chan.g_v2v[i][m] / (params.sigma2_mw + interference)
}

/// Transmission rate of V2V link `i` on sub-channel `m`, CAMs per second.
pub fn cam_rate(
    i: usize,
    m: usize,
    chan: &ChannelRealization,
    actions: &[RraAction],
    params: &CommParams,
) -> f64 {
    if actions[i].subchannel.is_none() {
        return 0.0;
    }
    let sinr = sinr_v2v(i, m, chan, actions, params);
    params.w_hz * (1.0 + sinr).log2() / params.n_c_bits
}

/// Rate of link `i` under its own allocation: zero when silent.
pub fn link_cam_rate(
    i: usize,
    chan: &ChannelRealization,
    actions: &[RraAction],
    params: &CommParams,
) -> f64 {
    match actions[i].subchannel {
        Some(m) => cam_rate(i, m, chan, actions, params),
        None => 0.0,
    }
}

/// The random resource-allocation policy: each link independently picks a
/// uniform sub-channel and a uniform power level every communication interval.
pub fn random_rra<R: Rng>(rng: &mut R, params: &CommParams, n_links: usize) -> Vec<RraAction> {
    (0..n_links)
        .map(|_| RraAction {
            subchannel: Some(rng.gen_range(0..params.m)),
            power_dbm: params.power_levels_dbm[rng.gen_range(0..params.power_levels_dbm.len())],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn lone_link_chan(g_signal: f64, m: usize) -> ChannelRealization {
        // One V2V link, all interference paths zeroed: a test fixture, not a
        // sampled realization (sampled gains are always positive).
        ChannelRealization {
            g_v2i: vec![1.0e-9; m],
            g_v2v: vec![vec![g_signal; m]],
            g_v2v_to_bs: vec![vec![0.0; m]],
            g_v2i_to_v2v: vec![vec![0.0; 1]; m],
            g_v2v_cross: vec![vec![vec![0.0; m]; 1]; 1],
        }
    }

    fn act(sc: usize, dbm: f64) -> RraAction {
        RraAction { subchannel: Some(sc), power_dbm: dbm }
    }

    #[test]
    fn sinr_v2i_db_arithmetic() {
        let params = CommParams::default();
        let chan = lone_link_chan(1.0, params.m);
        // No V2V interference on sub-channel 0: silent link on channel 1.
        let actions = vec![act(1, 23.0)];
        let sinr = sinr_v2i(0, &chan, &actions, &params);
        let expect = 10f64.powf(4.7); // 23 dBm - 90 dB + 114 dBm = 47 dB
        assert!((sinr / expect - 1.0).abs() < 1e-9, "{sinr} vs {expect}");
    }

    #[test]
    fn sinr_v2i_interference_monotone() {
        let params = CommParams::default();
        let mut chan = lone_link_chan(1.0, params.m);
        chan.g_v2v_to_bs = vec![vec![1.0e-9; params.m]];
        let clean = sinr_v2i(0, &chan, &[act(1, 23.0)], &params);
        let interfered = sinr_v2i(0, &chan, &[act(0, 23.0)], &params);
        assert!(interfered < clean);
        let weaker = sinr_v2i(0, &chan, &[act(0, 5.0)], &params);
        assert!(interfered < weaker && weaker < clean);
    }

    #[test]
    fn sinr_v2v_lone_link() {
        let params = CommParams::default();
        let chan = lone_link_chan(1.0e-9, params.m);
        let sinr = sinr_v2v(0, 0, &chan, &[act(0, 23.0)], &params);
        let expect = 10f64.powf(4.7);
        assert!((sinr / expect - 1.0).abs() < 1e-9);
    }

    #[test]
    fn silent_power_level_kills_rate() {
        let params = CommParams::default();
        let chan = lone_link_chan(1.0e-9, params.m);
        let actions = vec![act(0, -100.0)];
        let sinr = sinr_v2v(0, 0, &chan, &actions, &params);
        assert!(sinr < 1e-7);
        // Under 1e-4 CAM/s: five nano-CAMs per control interval.
        assert!(cam_rate(0, 0, &chan, &actions, &params) < 1e-4);
    }

    #[test]
    fn symmetric_links_equal_sinr() {
        let params = CommParams::default();
        let m = params.m;
        let g = 1.0e-8;
        let chan = ChannelRealization {
            g_v2i: vec![1.0e-9; m],
            g_v2v: vec![vec![g; m]; 2],
            g_v2v_to_bs: vec![vec![1e-12; m]; 2],
            g_v2i_to_v2v: vec![vec![1e-12; 2]; m],
            g_v2v_cross: vec![vec![vec![1e-10; m]; 2]; 2],
        };
        let actions = vec![act(0, 23.0), act(0, 23.0)];
        let a = sinr_v2v(0, 0, &chan, &actions, &params);
        let b = sinr_v2v(1, 0, &chan, &actions, &params);
        assert!((a - b).abs() < 1e-12 * a.abs());
    }

    #[test]
    #[should_panic(expected = "does not occupy")]
    fn sinr_on_unoccupied_subchannel_panics() {
        let params = CommParams::default();
        let chan = lone_link_chan(1.0e-9, params.m);
        sinr_v2v(0, 1, &chan, &[act(0, 23.0)], &params);
    }

    #[test]
    fn cam_rate_hand_case() {
        let params = CommParams::default();
        let chan = lone_link_chan(1.0e-9, params.m);
        let rate = cam_rate(0, 0, &chan, &[act(0, 23.0)], &params);
        // 180 kHz * log2(1 + 10^4.7) / 3200 bits.
        let expect = 180_000.0 * (1.0 + 10f64.powf(4.7)).log2() / 3200.0;
        assert!((rate / expect - 1.0).abs() < 1e-12);
        assert!((rate - 878.2).abs() < 0.5, "{rate}");
    }

    #[test]
    fn cam_rate_trivial_points() {
        let params = CommParams::default();
        let mut chan = lone_link_chan(1.0e-9, params.m);
        // SINR exactly 1 gives W/N_c.
        chan.g_v2v[0][0] = params.sigma2_mw / dbm_to_mw(23.0);
        let rate = cam_rate(0, 0, &chan, &[act(0, 23.0)], &params);
        assert!((rate - params.w_hz / params.n_c_bits).abs() < 1e-9);
        assert_eq!(rate, 56.25);
        // No transmission at all.
        let silent = vec![RraAction { subchannel: None, power_dbm: 23.0 }];
        assert_eq!(link_cam_rate(0, &chan, &silent, &params), 0.0);
    }

    #[test]
    fn queue_recursion_cases() {
        let n_q = 10.0;
        assert_eq!(step_queue(0.5, 878.2, 0, n_q), 1.0);
        assert_eq!(step_queue(0.0, 4321.0, 3, n_q), 0.0);
        assert_eq!(step_queue(n_q, 0.0, 0, n_q), n_q);
        // Plain drain.
        let q = step_queue(2.0, 1000.0, 7, n_q);
        assert!((q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delay_from_queue() {
        assert_eq!(observation_delay_raw(0.5), 2);
        assert_eq!(observation_delay_raw(0.0), 1);
        assert_eq!(observation_delay_raw(2.3), 4);
        assert_eq!(observation_delay(2.3, 5), 4);
        assert_eq!(observation_delay(9.5, 5), 5);
    }

    #[test]
    fn queue_conserves_mass_against_event_log() {
        // One control interval with synthetic rates: the recursion must match
        // q_start + 1 - total served while no clamp engages.
        let params = CommParams::default();
        let mut queue = QueueState::new(1);
        queue.q[0] = 2.25;
        let mut served = 0.0;
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for t in 0..params.intervals_per_control {
            let rate = rng.gen_range(0.0..30.0);
            served += 1.0e-3 * rate;
            queue.step(0, rate, t, &params);
        }
        assert!((queue.q[0] - (2.25 + 1.0 - served)).abs() < 1e-12);
    }

    #[test]
    fn random_rra_uniform_and_single_subchannel() {
        let params = CommParams::default();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let n = 100_000usize;
        let cells = params.m * params.power_levels_dbm.len();
        let mut counts = vec![0usize; cells];
        for _ in 0..n {
            let actions = random_rra(&mut rng, &params, 1);
            let a = actions[0];
            // The encoding invariant: exactly one sub-channel occupied.
            let occupied = (0..params.m).filter(|&m| a.occupies(m)).count();
            assert_eq!(occupied, 1);
            let p_idx = params
                .power_levels_dbm
                .iter()
                .position(|&p| p == a.power_dbm)
                .unwrap();
            counts[a.subchannel.unwrap() * params.power_levels_dbm.len() + p_idx] += 1;
        }
        let p = 1.0 / cells as f64;
        let expect = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for (cell, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expect).abs() <= 3.0 * sigma,
                "cell {cell}: {c} vs {expect} ± {sigma}"
            );
        }
    }

    #[test]
    fn random_rra_reproducible() {
        let params = CommParams::default();
        let a = random_rra(&mut ChaCha12Rng::seed_from_u64(9), &params, 4);
        let b = random_rra(&mut ChaCha12Rng::seed_from_u64(9), &params, 4);
        assert_eq!(a, b);
    }
}
