//! The multi-timescale environment.
//!
//! Each call to [`PlatoonEnv::step`] advances one 50 ms control interval:
//! rewards are computed from the current undelayed driving status, the
//! embedded communication simulation then runs 50 one-millisecond intervals
//! (fresh fast fading and a fresh random resource allocation per millisecond,
//! queue drain per link), the observation delay for the next interval is read
//! off each predecessor's end-of-interval backlog, dynamics advance, and each
//! follower's augmented state is assembled from the matching buffered
//! observation and its own action history.
//!
//! Rewards are undelayed: the simulator computes them from the driving status
//! at the very interval the action applies, even though the agent only ever
//! observes stale data. There is no reward delay during training.

use log::warn;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::cv2x::{
    link_cam_rate, observation_delay, observation_delay_raw, random_rra, CommParams, QueueState,
    SlowChannelState, Topology,
};
pub use crate::dynamics::DrivingObservation;
use crate::dynamics::{self, PlatoonParams, VehicleKinematics};
use crate::harness::rng::substream;
use crate::{Error, Result};

/// Weights of the control reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    /// Nominal maximum gap-keeping error, m.
    pub e_p_hat_max: f64,
    /// Nominal maximum velocity error, m/s.
    pub e_v_hat_max: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { alpha1: 0.2, alpha2: 0.1, alpha3: 0.4, e_p_hat_max: 10.0, e_v_hat_max: 10.0 }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha1, self.alpha2, self.alpha3, self.e_p_hat_max, self.e_v_hat_max];
        if all.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("reward weights must be positive and finite"));
        }
        Ok(())
    }
}

/// A follower's learner-facing state: delayed observation, its own recent
/// control inputs, and how stale the observation is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedState {
    /// Driving status sampled `delay` intervals ago.
    pub obs: DrivingObservation,
    /// Last `tau_max` control inputs, oldest first.
    pub action_history: Vec<f64>,
    /// Observation delay in control intervals, 1 ..= tau_max.
    pub delay: usize,
}

/// Normalization constants applied before states enter the networks.
#[derive(Debug, Clone, Copy)]
pub struct StateNorm {
    pub e_p_max: f64,
    pub e_v_max: f64,
    pub acc_max: f64,
    pub a_max: f64,
    pub tau_max: usize,
}

impl StateNorm {
    pub fn new(platoon: &PlatoonParams, weights: &RewardWeights, tau_max: usize) -> Self {
        Self {
            e_p_max: weights.e_p_hat_max,
            e_v_max: weights.e_v_hat_max,
            acc_max: platoon.acc_max,
            a_max: platoon.a_max,
            tau_max,
        }
    }

    /// Full augmented encoding: 4 observation entries, tau_max actions, delay.
    pub fn encode(&self, s: &AugmentedState, out: &mut Vec<f64>) {
        out.clear();
        self.encode_obs(&s.obs, out);
        for a in &s.action_history {
            out.push(a / self.a_max);
        }
        out.push(s.delay as f64 / self.tau_max as f64);
    }

    /// Observation-only encoding used by the no-augmentation ablation.
    pub fn encode_obs(&self, obs: &DrivingObservation, out: &mut Vec<f64>) {
        out.push(obs.e_p / self.e_p_max);
        out.push(obs.e_v / self.e_v_max);
        out.push(obs.acc_self / self.acc_max);
        out.push(obs.acc_pred / self.acc_max);
    }

    pub fn augmented_dim(&self) -> usize {
        4 + self.tau_max + 1
    }
}

/// One stored learning sample. The terminal flag is recorded for completeness
/// but never masks the bootstrap: the learner treats the horizon as infinite.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: AugmentedState,
    pub action: f64,
    pub reward: f64,
    pub next_state: AugmentedState,
    pub terminal: bool,
}

/// Where observation delays come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DelayModel {
    /// Delays emerge from the embedded sidelink simulation.
    Embedded,
    /// Delays drawn i.i.d. uniform over `lo..=hi` per follower per interval,
    /// ignoring the communication system entirely.
    IidUniform { lo: usize, hi: usize },
}

/// Undelayed control reward at one interval.
///
/// All four penalties are normalized: tracking errors by their nominal
/// maxima, the input by the input limit, the jerk by the largest jerk a
/// saturated driveline can produce in one interval.
pub fn reward(
    x: &DrivingObservation,
    a_cl: f64,
    acc_at_k: f64,
    weights: &RewardWeights,
    params: &PlatoonParams,
) -> f64 {
    let j = (a_cl - acc_at_k) / params.tau_drive;
    let jerk_norm = 2.0 * params.acc_max / params.t;
    -((x.e_p / weights.e_p_hat_max).abs()
        + weights.alpha1 * (x.e_v / weights.e_v_hat_max).abs()
        + weights.alpha2 * (a_cl / params.a_max).abs()
        + weights.alpha3 * (j / jerk_norm).abs())
}

/// Discounted sum of per-interval rewards.
pub fn episode_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut acc = 0.0;
    let mut g = 1.0;
    for r in rewards {
        acc += g * r;
        g *= gamma;
    }
    acc
}

/// Environment configuration beyond the parameter tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvConfig {
    pub platoon: PlatoonParams,
    pub comm: CommParams,
    pub weights: RewardWeights,
    /// Control intervals per episode.
    pub k_max: usize,
    /// One-dimensional initial positions, leader first.
    pub initial_positions: Vec<f64>,
    pub initial_velocity: f64,
    pub delay_model: DelayModel,
    /// Lane ordinate shared by the platoon, m.
    pub platoon_lane_y: f64,
    /// Initial lane positions of the V2I vehicles, m.
    pub v2i_initial_x: Vec<f64>,
    pub v2i_lane_y: f64,
    /// Constant V2I vehicle speed, m/s.
    pub v2i_velocity: f64,
    pub bs_xy: [f64; 2],
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            platoon: PlatoonParams::default(),
            comm: CommParams::default(),
            weights: RewardWeights::default(),
            k_max: 120,
            initial_positions: vec![416.0, 399.0, 383.0, 366.0, 350.0],
            initial_velocity: 10.0,
            delay_model: DelayModel::Embedded,
            platoon_lane_y: 427.5,
            v2i_initial_x: vec![391.0, 358.0],
            v2i_lane_y: 434.75,
            v2i_velocity: 10.0,
            bs_xy: [375.0, 0.0],
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.platoon.validate()?;
        self.comm.validate()?;
        self.weights.validate()?;
        if self.initial_positions.len() != self.platoon.n {
            return Err(Error::InvalidConfig(format!(
                "{} initial positions for {} vehicles",
                self.initial_positions.len(),
                self.platoon.n
            )));
        }
        if self.initial_positions.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidConfig("initial positions must be strictly decreasing".into()));
        }
        if let DelayModel::IidUniform { lo, hi } = self.delay_model {
            if lo < 1 || lo > hi || hi > self.comm.tau_max {
                return Err(Error::InvalidConfig(format!(
                    "uniform delay range {lo}..={hi} outside 1..={}",
                    self.comm.tau_max
                )));
            }
        }
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("episode length must be positive".into()));
        }
        if self.delay_model == DelayModel::Embedded && self.v2i_initial_x.len() != self.comm.m {
            return Err(Error::InvalidConfig(format!(
                "{} V2I vehicles for {} V2I links",
                self.v2i_initial_x.len(),
                self.comm.m
            )));
        }
        Ok(())
    }

    pub fn norm(&self) -> StateNorm {
        StateNorm::new(&self.platoon, &self.weights, self.comm.tau_max)
    }
}

/// One CSV row of the episode log.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogRow {
    pub k: usize,
    /// Follower index, 1-based as in the platoon.
    pub i: usize,
    pub e_p: f64,
    pub e_v: f64,
    pub acc: f64,
    pub a_cl: f64,
    pub tau: usize,
    pub reward: f64,
}

/// Per-interval bookkeeping returned alongside states and rewards.
#[derive(Debug, Clone, Default)]
pub struct StepInfo {
    /// Delay of each follower's *next* state.
    pub delays: Vec<usize>,
    /// Negative headway detected after the dynamics update.
    pub collisions: Vec<bool>,
    /// Delays that exceeded tau_max and were clamped this interval.
    pub delay_clamped: usize,
    /// CAM arrivals clipped by a full buffer this interval.
    pub cam_drops: usize,
}

pub struct StepOutcome {
    pub states: Vec<AugmentedState>,
    pub rewards: Vec<f64>,
    pub info: StepInfo,
}

/// Power levels at or below this are treated as a withheld grant.
const SILENT_DBM_THRESHOLD: f64 = -90.0;

/// Record of one communication interval, for test oracles that re-derive
/// queue behaviour from first principles.
#[derive(Debug, Clone, Copy)]
pub struct CommEvent {
    pub k: usize,
    pub t: usize,
    pub link: usize,
    pub rate_cam_per_s: f64,
}

pub struct PlatoonEnv {
    cfg: EnvConfig,
    norm: StateNorm,
    seed: u64,
    episode: u64,

    profile: Vec<f64>,
    k: usize,
    vehicles: Vec<VehicleKinematics>,
    v2i_x: Vec<f64>,
    queues: QueueState,
    /// Delay of the state each follower currently holds.
    delays: Vec<usize>,
    /// Observation history per follower, index [i - 1][k].
    obs_buf: Vec<Vec<DrivingObservation>>,
    histories: Vec<Vec<f64>>,
    states: Vec<AugmentedState>,

    channel_rng: ChaCha12Rng,
    rra_rng: ChaCha12Rng,
    delay_rng: ChaCha12Rng,

    log: Vec<LogRow>,
    comm_trace: Option<Vec<CommEvent>>,
    /// Episode-level counters.
    pub total_delay_clamped: usize,
    pub total_cam_drops: usize,
}

impl PlatoonEnv {
    pub fn new(cfg: EnvConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let norm = cfg.norm();
        let n = cfg.platoon.n;
        let mut env = Self {
            norm,
            seed,
            episode: 0,
            profile: Vec::new(),
            k: 0,
            vehicles: Vec::with_capacity(n),
            v2i_x: Vec::new(),
            queues: QueueState::new(n - 1),
            delays: vec![1; n - 1],
            obs_buf: vec![Vec::new(); n - 1],
            histories: vec![vec![0.0; cfg.comm.tau_max]; n - 1],
            states: Vec::new(),
            channel_rng: substream(seed, "env.channel", 0),
            rra_rng: substream(seed, "env.rra", 0),
            delay_rng: substream(seed, "env.delay", 0),
            log: Vec::new(),
            comm_trace: None,
            total_delay_clamped: 0,
            total_cam_drops: 0,
            cfg,
        };
        env.reset_streams();
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn norm(&self) -> StateNorm {
        self.norm
    }

    pub fn n_followers(&self) -> usize {
        self.cfg.platoon.n - 1
    }

    pub fn interval(&self) -> usize {
        self.k
    }

    pub fn finished(&self) -> bool {
        self.k >= self.cfg.k_max
    }

    /// Enables recording of per-millisecond link rates.
    pub fn record_comm_trace(&mut self, on: bool) {
        self.comm_trace = if on { Some(Vec::new()) } else { None };
    }

    pub fn comm_trace(&self) -> Option<&[CommEvent]> {
        self.comm_trace.as_deref()
    }

    pub fn log(&self) -> &[LogRow] {
        &self.log
    }

    /// Undelayed observation of follower `i` (1-based) recorded at interval `k`.
    pub fn observation_at(&self, i: usize, k: usize) -> DrivingObservation {
        self.obs_buf[i - 1][k]
    }

    pub fn queue_backlogs(&self) -> &[f64] {
        &self.queues.q
    }

    fn reset_streams(&mut self) {
        self.channel_rng = substream(self.seed, "env.channel", self.episode);
        self.rra_rng = substream(self.seed, "env.rra", self.episode);
        self.delay_rng = substream(self.seed, "env.delay", self.episode);
    }

    /// Starts an episode on the given leader velocity profile.
    ///
    /// Deterministic initial platoon: queues empty, action histories zero,
    /// delays 1. With a deterministic start the augmented state pins the true
    /// driving status exactly, so the optimality-transfer precondition on the
    /// initial distributions holds by construction.
    pub fn reset(&mut self, profile: &[f64], episode: u64) -> Result<Vec<AugmentedState>> {
        if profile.len() < self.cfg.k_max {
            return Err(Error::invalid(format!(
                "profile of length {} shorter than episode length {}",
                profile.len(),
                self.cfg.k_max
            )));
        }
        self.episode = episode;
        self.reset_streams();

        // Pad so the leader's forward difference is defined through the final
        // interval; the pad holds velocity constant (zero implied acc).
        self.profile = profile.to_vec();
        let last = *profile.last().unwrap();
        self.profile.extend([last, last]);

        let n = self.cfg.platoon.n;
        self.k = 0;
        self.vehicles.clear();
        self.vehicles.push(dynamics::leader_init(
            &self.profile,
            self.cfg.initial_positions[0],
            &self.cfg.platoon,
        )?);
        for i in 1..n {
            self.vehicles.push(VehicleKinematics::new(
                self.cfg.initial_positions[i],
                self.cfg.initial_velocity,
                0.0,
            ));
        }
        self.v2i_x = self.cfg.v2i_initial_x.clone();
        self.queues = QueueState::new(n - 1);
        self.delays = vec![1; n - 1];
        self.histories = vec![vec![0.0; self.cfg.comm.tau_max]; n - 1];
        self.obs_buf = vec![Vec::with_capacity(self.cfg.k_max + 1); n - 1];
        self.log.clear();
        if let Some(trace) = &mut self.comm_trace {
            trace.clear();
        }
        self.total_delay_clamped = 0;
        self.total_cam_drops = 0;

        self.record_observations();
        self.states = (0..n - 1).map(|idx| self.assemble_state(idx)).collect();
        Ok(self.states.clone())
    }

    /// Advances one control interval. Actions are clipped into the input
    /// limits before use.
    pub fn step(&mut self, actions: &[f64]) -> Result<StepOutcome> {
        if self.finished() {
            return Err(Error::invalid("stepping a finished episode"));
        }
        let n_followers = self.n_followers();
        if actions.len() != n_followers {
            return Err(Error::invalid(format!(
                "{} actions for {n_followers} followers",
                actions.len()
            )));
        }
        if actions.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("non-finite action"));
        }
        let k = self.k;
        let clipped: Vec<f64> =
            actions.iter().map(|&a| self.cfg.platoon.clip_action(a)).collect();

        // Undelayed rewards for the interval the actions apply to.
        let rewards: Vec<f64> = (0..n_followers)
            .map(|idx| {
                reward(
                    &self.obs_buf[idx][k],
                    clipped[idx],
                    self.vehicles[idx + 1].acc,
                    &self.cfg.weights,
                    &self.cfg.platoon,
                )
            })
            .collect();

        // Communication phase of interval k, then the delays carried into k+1.
        let mut info = StepInfo::default();
        match self.cfg.delay_model {
            DelayModel::Embedded => self.run_comm_interval(k, &mut info)?,
            DelayModel::IidUniform { lo, hi } => {
                info.delays =
                    (0..n_followers).map(|_| self.delay_rng.gen_range(lo..=hi)).collect();
            }
        }

        // Log the interval that just resolved, with the delay the agent saw.
        for idx in 0..n_followers {
            let x = self.obs_buf[idx][k];
            self.log.push(LogRow {
                k,
                i: idx + 1,
                e_p: x.e_p,
                e_v: x.e_v,
                acc: x.acc_self,
                a_cl: clipped[idx],
                tau: self.delays[idx],
                reward: rewards[idx],
            });
        }

        // Dynamics to interval k+1.
        self.vehicles[0] =
            dynamics::leader_step(&self.vehicles[0], &self.profile, k, &self.cfg.platoon)?;
        for idx in 0..n_followers {
            self.vehicles[idx + 1] =
                dynamics::step_vehicle(&self.vehicles[idx + 1], clipped[idx], &self.cfg.platoon)?;
        }
        for x in &mut self.v2i_x {
            *x += self.cfg.platoon.t * self.cfg.v2i_velocity;
        }
        self.record_observations();

        info.collisions = (0..n_followers)
            .map(|idx| {
                dynamics::headway(self.vehicles[idx].p, self.vehicles[idx + 1].p, self.cfg.platoon.l)
                    < 0.0
            })
            .collect();

        // Next augmented states.
        self.delays = info.delays.clone();
        for idx in 0..n_followers {
            let h = &mut self.histories[idx];
            h.rotate_left(1);
            *h.last_mut().unwrap() = clipped[idx];
        }
        self.k += 1;
        self.states = (0..n_followers).map(|idx| self.assemble_state(idx)).collect();

        self.total_delay_clamped += info.delay_clamped;
        self.total_cam_drops += info.cam_drops;
        Ok(StepOutcome { states: self.states.clone(), rewards, info })
    }

    /// Runs the 50 communication intervals of control interval `k` and
    /// derives each follower's next delay from its predecessor's backlog.
    fn run_comm_interval(&mut self, k: usize, info: &mut StepInfo) -> Result<()> {
        let comm = &self.cfg.comm;
        let n_links = self.cfg.platoon.n - 1;
        let topo = Topology {
            platoon_xy: self
                .vehicles
                .iter()
                .map(|v| [v.p, self.cfg.platoon_lane_y])
                .collect(),
            v2i_xy: self.v2i_x.iter().map(|&x| [x, self.cfg.v2i_lane_y]).collect(),
            bs_xy: self.cfg.bs_xy,
        };
        let slow = SlowChannelState::sample(&topo, comm, &mut self.channel_rng)?;
        // The silent-vs-active decision of each link is held for the whole
        // 50 ms grant period (a drawn silent level acts as a withheld grant);
        // active links re-hop sub-channel and active power level every
        // millisecond. Each millisecond's marginal action distribution stays
        // uniform over all (sub-channel, power) pairs. Holding the full draw
        // for 50 ms parks weak-power links next to the V2I uplink transmitter
        // and overflows the buffers; redrawing the silent level per
        // millisecond averages it away and pins the delay at one interval.
        let active: Vec<f64> = comm
            .power_levels_dbm
            .iter()
            .copied()
            .filter(|p| *p > SILENT_DBM_THRESHOLD)
            .collect();
        let mut acts = random_rra(&mut self.rra_rng, comm, n_links);
        for t in 0..comm.intervals_per_control {
            let chan = slow.realize(&mut self.channel_rng);
            if t > 0 {
                for a in &mut acts {
                    if a.power_dbm > SILENT_DBM_THRESHOLD && !active.is_empty() {
                        a.subchannel = Some(self.rra_rng.gen_range(0..comm.m));
                        a.power_dbm = active[self.rra_rng.gen_range(0..active.len())];
                    }
                }
            }
            for link in 0..n_links {
                let rate = link_cam_rate(link, &chan, &acts, comm);
                if t == 0 && (self.queues.q[link] - 1.0e-3 * rate).max(0.0) > comm.n_q - 1.0 {
                    info.cam_drops += 1;
                }
                self.queues.step(link, rate, t, comm);
                if let Some(trace) = &mut self.comm_trace {
                    trace.push(CommEvent { k, t, link, rate_cam_per_s: rate });
                }
            }
        }
        info.delays = (0..n_links)
            .map(|idx| {
                let q = self.queues.q[idx];
                let raw = observation_delay_raw(q);
                if raw > comm.tau_max {
                    info.delay_clamped += 1;
                    warn!("observation delay {raw} clamped to tau_max {} (q = {q:.3})", comm.tau_max);
                }
                observation_delay(q, comm.tau_max)
            })
            .collect();
        Ok(())
    }

    /// Records the undelayed driving status of every follower at the current
    /// kinematics. All entries of one observation are sampled at the same
    /// instant, including the desired headway inside the gap error.
    fn record_observations(&mut self) {
        for idx in 0..self.cfg.platoon.n - 1 {
            let (e_p, e_v) = dynamics::tracking_errors(
                &self.vehicles[idx],
                &self.vehicles[idx + 1],
                &self.cfg.platoon,
            );
            self.obs_buf[idx].push(DrivingObservation {
                e_p,
                e_v,
                acc_self: self.vehicles[idx + 1].acc,
                acc_pred: self.vehicles[idx].acc,
            });
        }
    }

    /// Builds follower `idx`'s augmented state at the current interval.
    /// Observations older than the episode start fall back to the initial
    /// one, which is exact for the deterministic start.
    fn assemble_state(&self, idx: usize) -> AugmentedState {
        let delay = self.delays[idx];
        let obs_k = self.k.saturating_sub(delay);
        AugmentedState {
            obs: self.obs_buf[idx][obs_k],
            action_history: self.histories[idx].clone(),
            delay,
        }
    }
}

#[cfg(test)]
mod tests;
