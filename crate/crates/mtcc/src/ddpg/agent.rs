//! One follower's deterministic-policy-gradient learner: online and target
//! actor/critic pairs, adaptive-moment updates, and exploration noise.

use rand::Rng;

use super::mlp::{soft_update_tensors, Actor, ActorCache, ActorGrads, Critic, CriticCache, CriticGrads};
use super::noise::OuNoise;
use super::optim::{Optimizer, OptimizerKind};
use crate::{Error, Result};

/// Learner hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Hyper {
    pub hidden1: usize,
    pub hidden2: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub batch: usize,
    pub buffer_capacity: usize,
    pub tau_soft: f64,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    /// Multiplicative per-episode decay of the exploration diffusion; 1 keeps
    /// it constant.
    pub ou_sigma_decay: f64,
    pub optimizer: OptimizerKind,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            hidden1: 256,
            hidden2: 128,
            actor_lr: 1.0e-4,
            critic_lr: 1.0e-3,
            gamma: 0.99,
            batch: 64,
            buffer_capacity: 600_000,
            tau_soft: 0.001,
            ou_theta: 0.15,
            ou_sigma: 0.5,
            ou_sigma_decay: 1.0,
            optimizer: OptimizerKind::Adam,
        }
    }
}

/// TD target for one transition: bootstrap through the target networks, with
/// no terminal masking anywhere, including the final interval of an episode.
pub fn td_target(
    reward: f64,
    next_state: &[f64],
    target_actor: &Actor,
    target_critic: &Critic,
    gamma: f64,
    actor_cache: &mut ActorCache,
    critic_cache: &mut CriticCache,
) -> f64 {
    target_actor.forward(next_state, 1, actor_cache);
    target_critic.forward(next_state, &actor_cache.a, 1, critic_cache);
    reward + gamma * critic_cache.q[0]
}

pub struct DdpgAgent {
    pub actor: Actor,
    pub critic: Critic,
    pub target_actor: Actor,
    pub target_critic: Critic,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
    pub noise: OuNoise,
    a_min: f64,
    a_max: f64,

    actor_cache: ActorCache,
    critic_cache: CriticCache,
    t_actor_cache: ActorCache,
    t_critic_cache: CriticCache,
    actor_grads: ActorGrads,
    critic_grads: CriticGrads,
    y: Vec<f64>,
    dq: Vec<f64>,
    da: Vec<f64>,
}

impl DdpgAgent {
    pub fn new<R: Rng>(state_dim: usize, hyper: &Hyper, a_min: f64, a_max: f64, rng: &mut R) -> Self {
        let actor = Actor::new(state_dim, hyper.hidden1, hyper.hidden2, a_min, a_max, rng);
        let critic = Critic::new(state_dim, hyper.hidden1, hyper.hidden2, rng);
        // Targets start as exact copies of the online networks.
        let target_actor = actor.clone();
        let target_critic = critic.clone();
        let sizes = |t: [&Vec<f64>; 6]| t.map(|v| v.len());
        let actor_opt =
            Optimizer::new(hyper.optimizer, hyper.actor_lr, &sizes(actor.tensors()));
        let critic_opt =
            Optimizer::new(hyper.optimizer, hyper.critic_lr, &sizes(critic.tensors()));
        let actor_grads = ActorGrads::for_net(&actor);
        let critic_grads = CriticGrads::for_net(&critic);
        Self {
            actor,
            critic,
            target_actor,
            target_critic,
            actor_opt,
            critic_opt,
            noise: OuNoise::new(hyper.ou_theta, hyper.ou_sigma),
            a_min,
            a_max,
            actor_cache: ActorCache::default(),
            critic_cache: CriticCache::default(),
            t_actor_cache: ActorCache::default(),
            t_critic_cache: CriticCache::default(),
            actor_grads,
            critic_grads,
            y: Vec::new(),
            dq: Vec::new(),
            da: Vec::new(),
        }
    }

    /// Rebuilds an agent around existing networks (checkpoint loading).
    /// Optimizer moments and noise state start fresh.
    pub fn from_networks(
        actor: Actor,
        critic: Critic,
        target_actor: Actor,
        target_critic: Critic,
        hyper: &Hyper,
    ) -> Self {
        let sizes = |t: [&Vec<f64>; 6]| t.map(|v| v.len());
        let actor_opt = Optimizer::new(hyper.optimizer, hyper.actor_lr, &sizes(actor.tensors()));
        let critic_opt = Optimizer::new(hyper.optimizer, hyper.critic_lr, &sizes(critic.tensors()));
        let actor_grads = ActorGrads::for_net(&actor);
        let critic_grads = CriticGrads::for_net(&critic);
        let (a_min, a_max) = (actor.a_min, actor.a_max);
        Self {
            actor,
            critic,
            target_actor,
            target_critic,
            actor_opt,
            critic_opt,
            noise: OuNoise::new(hyper.ou_theta, hyper.ou_sigma),
            a_min,
            a_max,
            actor_cache: ActorCache::default(),
            critic_cache: CriticCache::default(),
            t_actor_cache: ActorCache::default(),
            t_critic_cache: CriticCache::default(),
            actor_grads,
            critic_grads,
            y: Vec::new(),
            dq: Vec::new(),
            da: Vec::new(),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.actor.in_dim()
    }

    pub fn act_greedy(&mut self, enc_state: &[f64]) -> f64 {
        self.actor.act(enc_state, &mut self.actor_cache)
    }

    pub fn act_noisy<R: Rng>(&mut self, enc_state: &[f64], rng: &mut R) -> f64 {
        let a = self.act_greedy(enc_state) + self.noise.sample(rng);
        a.clamp(self.a_min, self.a_max)
    }

    /// y_b = r_b + γ·Q'(s'_b, μ'(s'_b)) for a batch.
    pub fn td_targets(&mut self, rewards: &[f64], next_states: &[f64], gamma: f64) {
        let batch = rewards.len();
        self.target_actor.forward(next_states, batch, &mut self.t_actor_cache);
        self.target_critic.forward(
            next_states,
            &self.t_actor_cache.a,
            batch,
            &mut self.t_critic_cache,
        );
        self.y.clear();
        self.y.extend(
            rewards
                .iter()
                .zip(&self.t_critic_cache.q)
                .map(|(r, q)| r + gamma * q),
        );
    }

    /// One descent step on the mean squared TD residual; returns the loss.
    pub fn critic_update(&mut self, states: &[f64], actions: &[f64], targets: &[f64]) -> Result<f64> {
        let batch = actions.len();
        self.critic.forward(states, actions, batch, &mut self.critic_cache);
        let mut loss = 0.0;
        self.dq.clear();
        for (q, y) in self.critic_cache.q.iter().zip(targets) {
            let resid = q - y;
            loss += resid * resid;
            self.dq.push(2.0 * resid / batch as f64);
        }
        loss /= batch as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                context: "critic loss".into(),
                detail: format!(
                    "batch {batch}, first q {:?}, first target {:?}",
                    self.critic_cache.q.first(),
                    targets.first()
                ),
            });
        }
        self.critic_grads.zero();
        self.critic
            .backward(&mut self.critic_cache, &self.dq, Some(&mut self.critic_grads), None);
        self.critic_opt
            .step(self.critic.tensors_mut().into(), self.critic_grads.tensors().into());
        Ok(loss)
    }

    /// One ascent step on mean_b Q(s_b, μ(s_b)) through the frozen critic.
    pub fn actor_update(&mut self, states: &[f64]) -> Result<()> {
        let batch = states.len() / self.actor.in_dim();
        self.actor.forward(states, batch, &mut self.actor_cache);
        self.critic
            .forward(states, &self.actor_cache.a, batch, &mut self.critic_cache);
        // Ascent on mean Q == descent on -mean Q.
        self.dq.clear();
        self.dq.resize(batch, -1.0 / batch as f64);
        self.critic
            .backward(&mut self.critic_cache, &self.dq, None, Some(&mut self.da));
        if self.da.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite {
                context: "actor update".into(),
                detail: "non-finite dQ/da".into(),
            });
        }
        let da = std::mem::take(&mut self.da);
        self.actor_grads.zero();
        self.actor.backward(&mut self.actor_cache, &da, &mut self.actor_grads);
        self.da = da;
        self.actor_opt
            .step(self.actor.tensors_mut().into(), self.actor_grads.tensors().into());
        Ok(())
    }

    pub fn soft_update_targets(&mut self, tau: f64) {
        soft_update_tensors(self.target_actor.tensors_mut(), self.actor.tensors(), tau);
        soft_update_tensors(self.target_critic.tensors_mut(), self.critic.tensors(), tau);
    }

    /// Full update pair on one minibatch: targets, critic step, actor step,
    /// soft target updates. Returns the critic loss.
    pub fn update(
        &mut self,
        states: &[f64],
        actions: &[f64],
        rewards: &[f64],
        next_states: &[f64],
        gamma: f64,
        tau_soft: f64,
    ) -> Result<f64> {
        self.td_targets(rewards, next_states, gamma);
        let y = std::mem::take(&mut self.y);
        let loss = self.critic_update(states, actions, &y)?;
        self.y = y;
        self.actor_update(states)?;
        self.soft_update_targets(tau_soft);
        Ok(loss)
    }
}
