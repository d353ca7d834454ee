//! Training and evaluation loops.
//!
//! Each follower is an independent learner with its own networks, replay
//! buffer, and exploration process. One minibatch update pair (critic then
//! actor, then soft target updates) runs per follower per control interval
//! once its buffer holds a full batch. Every `eval_every` training episodes
//! the greedy policies are scored on test profiles inside the embedded
//! communication simulation, whatever the training delay model was.

use serde::{Deserialize, Serialize};

use super::agent::{DdpgAgent, Hyper};
use super::replay::ReplayBuffer;
use super::Variant;
use crate::env::{DelayModel, EnvConfig, LogRow, PlatoonEnv};
use crate::harness::rng::{substream, substream_seed};
use crate::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: Variant,
    pub episodes: usize,
    pub seed: u64,
    pub env: EnvConfig,
    pub hyper: Hyper,
    /// Evaluate every this many training episodes.
    pub eval_every: usize,
    /// Test episodes per evaluation point.
    pub eval_episodes: usize,
    /// Discount for the evaluation return (the learner's own discount is in
    /// `hyper`).
    pub eval_gamma: f64,
}

impl TrainConfig {
    pub fn new(variant: Variant, episodes: usize, seed: u64) -> Self {
        Self {
            variant,
            episodes,
            seed,
            env: EnvConfig::default(),
            hyper: Hyper::default(),
            eval_every: 10,
            eval_episodes: 10,
            eval_gamma: 1.0,
        }
    }
}

/// One point of the learning curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalPoint {
    /// Training episodes completed when this evaluation ran.
    pub episode: usize,
    /// Mean over test episodes of the summed follower returns.
    pub sum_return: f64,
    /// Mean return per follower.
    pub per_follower: Vec<f64>,
}

pub struct TrainResult {
    pub curve: Vec<EvalPoint>,
    pub agents: Vec<DdpgAgent>,
}

/// Full evaluation output; logs are kept only when requested.
#[derive(Debug, Clone, Default)]
pub struct EvalReport {
    pub per_follower: Vec<f64>,
    pub sum_return: f64,
    /// Per-episode summed return.
    pub episode_sums: Vec<f64>,
    /// Per-episode, per-follower returns.
    pub episode_returns: Vec<Vec<f64>>,
    /// Episode logs, when collected.
    pub logs: Vec<Vec<LogRow>>,
    /// Delay histogram over all followers and intervals, index = delay.
    pub delay_hist: Vec<usize>,
}

/// Greedy evaluation in the embedded-communication environment. The
/// evaluation return is discounted by `gamma`, 1 for the plain cumulative
/// reward used in reports.
pub fn evaluate(
    agents: &mut [DdpgAgent],
    variant: Variant,
    env_cfg: &EnvConfig,
    profiles: &[Vec<f64>],
    episodes: usize,
    seed: u64,
    episode_offset: u64,
    gamma: f64,
    collect_logs: bool,
) -> Result<EvalReport> {
    let mut cfg = env_cfg.clone();
    cfg.delay_model = DelayModel::Embedded;
    let norm = cfg.norm();
    let n_followers = cfg.platoon.n - 1;
    let mut env = PlatoonEnv::new(cfg, substream_seed(seed, "env.eval", 0))?;
    let mut report = EvalReport {
        per_follower: vec![0.0; n_followers],
        delay_hist: vec![0; env.config().comm.tau_max + 1],
        ..EvalReport::default()
    };
    let mut enc = vec![Vec::new(); n_followers];
    let mut actions = vec![0.0; n_followers];
    for ep in 0..episodes {
        let profile = &profiles[ep % profiles.len()];
        let mut states = env.reset(profile, episode_offset + ep as u64)?;
        let mut returns = vec![0.0; n_followers];
        let mut discount = 1.0;
        while !env.finished() {
            for i in 0..n_followers {
                variant.encode(&norm, &states[i], &mut enc[i]);
                actions[i] = agents[i].act_greedy(&enc[i]);
            }
            let out = env.step(&actions)?;
            for i in 0..n_followers {
                returns[i] += discount * out.rewards[i];
                report.delay_hist[out.states[i].delay] += 1;
            }
            discount *= gamma;
            states = out.states;
        }
        report.episode_sums.push(returns.iter().sum());
        for i in 0..n_followers {
            report.per_follower[i] += returns[i];
        }
        report.episode_returns.push(returns);
        if collect_logs {
            report.logs.push(env.log().to_vec());
        }
    }
    let n = episodes as f64;
    report.per_follower.iter_mut().for_each(|r| *r /= n);
    report.sum_return = report.episode_sums.iter().sum::<f64>() / n;
    Ok(report)
}

/// Trains one configuration and returns the learning curve plus the agents.
pub fn train(
    cfg: &TrainConfig,
    train_profiles: &[Vec<f64>],
    test_profiles: &[Vec<f64>],
    mut on_eval: impl FnMut(&EvalPoint),
) -> Result<TrainResult> {
    assert!(!train_profiles.is_empty() && !test_profiles.is_empty(), "need profiles");
    let mut env_cfg = cfg.env.clone();
    env_cfg.delay_model = cfg.variant.train_delay_model(cfg.env.comm.tau_max);
    let norm = env_cfg.norm();
    let n_followers = env_cfg.platoon.n - 1;
    let state_dim = cfg.variant.state_dim(&norm);
    let (a_min, a_max) = (env_cfg.platoon.a_min, env_cfg.platoon.a_max);

    let mut env = PlatoonEnv::new(env_cfg, substream_seed(cfg.seed, "env.train", 0))?;
    let mut agents: Vec<DdpgAgent> = (0..n_followers)
        .map(|i| {
            let mut rng = substream(cfg.seed, "agent.init", i as u64);
            DdpgAgent::new(state_dim, &cfg.hyper, a_min, a_max, &mut rng)
        })
        .collect();
    let mut buffers: Vec<ReplayBuffer> = (0..n_followers)
        .map(|_| ReplayBuffer::new(cfg.hyper.buffer_capacity, state_dim))
        .collect();
    let mut noise_rngs: Vec<_> =
        (0..n_followers).map(|i| substream(cfg.seed, "agent.noise", i as u64)).collect();
    let mut sample_rngs: Vec<_> =
        (0..n_followers).map(|i| substream(cfg.seed, "agent.sample", i as u64)).collect();

    let mut enc = vec![Vec::new(); n_followers];
    let mut enc_next = vec![Vec::new(); n_followers];
    let mut actions = vec![0.0; n_followers];
    let (mut bs, mut ba, mut br, mut bs2) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut curve = Vec::new();

    for ep in 0..cfg.episodes {
        let profile = &train_profiles[ep % train_profiles.len()];
        let mut states = env.reset(profile, ep as u64)?;
        for i in 0..n_followers {
            agents[i].noise.reset();
            cfg.variant.encode(&norm, &states[i], &mut enc[i]);
        }
        let k_max = env.config().k_max;
        for k in 0..k_max {
            for i in 0..n_followers {
                actions[i] = agents[i].act_noisy(&enc[i], &mut noise_rngs[i]);
            }
            let out = env.step(&actions)?;
            let terminal = k + 1 == k_max;
            for i in 0..n_followers {
                cfg.variant.encode(&norm, &out.states[i], &mut enc_next[i]);
                buffers[i].push(&enc[i], actions[i], out.rewards[i], &enc_next[i], terminal);
                if buffers[i].len() >= cfg.hyper.batch {
                    buffers[i].sample_into(
                        cfg.hyper.batch,
                        &mut sample_rngs[i],
                        &mut bs,
                        &mut ba,
                        &mut br,
                        &mut bs2,
                    );
                    agents[i].update(&bs, &ba, &br, &bs2, cfg.hyper.gamma, cfg.hyper.tau_soft)?;
                }
                std::mem::swap(&mut enc[i], &mut enc_next[i]);
            }
            states = out.states;
        }
        let _ = states;
        if cfg.hyper.ou_sigma_decay != 1.0 {
            for agent in &mut agents {
                agent.noise.scale_sigma(cfg.hyper.ou_sigma_decay);
            }
        }

        if (ep + 1) % cfg.eval_every == 0 {
            let round = ((ep + 1) / cfg.eval_every) as u64;
            let report = evaluate(
                &mut agents,
                cfg.variant,
                &cfg.env,
                test_profiles,
                cfg.eval_episodes,
                cfg.seed,
                round * 10_000,
                cfg.eval_gamma,
                false,
            )?;
            let point = EvalPoint {
                episode: ep + 1,
                sum_return: report.sum_return,
                per_follower: report.per_follower,
            };
            on_eval(&point);
            curve.push(point);
        }
    }
    Ok(TrainResult { curve, agents })
}
