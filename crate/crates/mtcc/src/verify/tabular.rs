//! Finite surrogate of the delayed control problem.
//!
//! A hidden Markov chain `x` evolves under the agent's actions while the
//! agent observes `x` with a random delay. The delay moves one step up or any
//! number of steps down, with transition probabilities that may depend on the
//! currently observed `x`. Augmenting the delayed observation with the recent
//! action history and the delay value restores the Markov property; this
//! module builds that augmented chain exactly so the claim can be checked
//! numerically.

use rand::Rng;

use crate::{Error, Result};

/// Finite delayed decision process.
#[derive(Debug, Clone)]
pub struct TabularDelayedProcess {
    pub n_states: usize,
    pub n_actions: usize,
    pub tau_max: usize,
    /// chain[a][x][x'] one-step transition probabilities.
    pub chain: Vec<Vec<Vec<f64>>>,
    /// reward[x][a], the undelayed reward.
    pub reward: Vec<Vec<f64>>,
    /// delay_kernel[tau-1][x_obs][tau'-1]; support restricted to
    /// tau' <= min(tau+1, tau_max).
    pub delay_kernel: Vec<Vec<Vec<f64>>>,
    pub gamma: f64,
}

const ROW_TOL: f64 = 1.0e-12;

fn check_row(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|p| !(0.0..=1.0 + ROW_TOL).contains(p)) {
        return Err(Error::invalid(format!("{what}: probability outside [0, 1]")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(Error::invalid(format!("{what}: row sums to {sum}")));
    }
    Ok(())
}

impl TabularDelayedProcess {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 || self.tau_max == 0 {
            return Err(Error::invalid("empty state, action, or delay space"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid("discount outside [0, 1]"));
        }
        for a in 0..self.n_actions {
            for x in 0..self.n_states {
                check_row(&self.chain[a][x], &format!("chain[{a}][{x}]"))?;
            }
        }
        for tau in 1..=self.tau_max {
            for x in 0..self.n_states {
                let row = &self.delay_kernel[tau - 1][x];
                check_row(row, &format!("delay_kernel[{tau}][{x}]"))?;
                // Two-case structure: one step older, or newer by any amount.
                for (t1, p) in row.iter().enumerate() {
                    let tau_next = t1 + 1;
                    if tau_next > tau + 1 && *p > 0.0 {
                        return Err(Error::invalid(format!(
                            "delay_kernel[{tau}][{x}] jumps to {tau_next}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn history_codes(&self) -> usize {
        self.n_actions.pow(self.tau_max as u32)
    }

    pub fn n_augmented(&self) -> usize {
        self.n_states * self.history_codes() * self.tau_max
    }

    /// Augmented index of (observed x, action history oldest-first, delay).
    pub fn encode_aug(&self, x_obs: usize, history: &[usize], tau: usize) -> usize {
        debug_assert_eq!(history.len(), self.tau_max);
        let mut h_code = 0;
        for &a in history.iter().rev() {
            h_code = h_code * self.n_actions + a;
        }
        (x_obs * self.history_codes() + h_code) * self.tau_max + (tau - 1)
    }

    pub fn decode_aug(&self, idx: usize) -> (usize, Vec<usize>, usize) {
        let tau = idx % self.tau_max + 1;
        let rest = idx / self.tau_max;
        let mut h_code = rest % self.history_codes();
        let x_obs = rest / self.history_codes();
        let mut history = Vec::with_capacity(self.tau_max);
        for _ in 0..self.tau_max {
            history.push(h_code % self.n_actions);
            h_code /= self.n_actions;
        }
        (x_obs, history, tau)
    }

    /// Distribution of the current hidden x given an augmented state: the
    /// observed x pushed through the chain by the last `tau` actions.
    pub fn conditional_now(&self, x_obs: usize, history: &[usize], tau: usize) -> Vec<f64> {
        let mut dist = vec![0.0; self.n_states];
        dist[x_obs] = 1.0;
        for &a in &history[self.tau_max - tau..] {
            dist = self.push(&dist, a);
        }
        dist
    }

    fn push(&self, dist: &[f64], a: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_states];
        for (x, p) in dist.iter().enumerate() {
            if *p > 0.0 {
                for (x2, q) in self.chain[a][x].iter().enumerate() {
                    out[x2] += p * q;
                }
            }
        }
        out
    }
}

/// Exact augmented-state MDP derived from a delayed process.
#[derive(Debug, Clone)]
pub struct AugmentedTabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    /// kernel[s][a]: sparse (next state, probability) rows.
    pub kernel: Vec<Vec<Vec<(usize, f64)>>>,
    /// delayed_reward[s][a] = sum_x p(x now | s) reward(x, a).
    pub delayed_reward: Vec<Vec<f64>>,
}

/// Guard against runaway enumeration.
const MAX_AUGMENTED_STATES: usize = 1_000_000;

/// Enumerates the augmented kernel exactly.
///
/// For a delay going one step up, the observation point does not move. For a
/// delay dropping by `d`, the newly revealed observation lies `d + 1` chain
/// steps past the old one, marginalized over the intermediate hidden states
/// under the actions stored in the history.
pub fn build_augmented_mdp(proc: &TabularDelayedProcess) -> Result<AugmentedTabularMdp> {
    proc.validate()?;
    let n_aug = proc.n_augmented();
    if n_aug > MAX_AUGMENTED_STATES {
        return Err(Error::StateSpaceExplosion(n_aug));
    }
    let mut kernel = vec![vec![Vec::new(); proc.n_actions]; n_aug];
    let mut delayed_reward = vec![vec![0.0; proc.n_actions]; n_aug];

    for s in 0..n_aug {
        let (x_obs, history, tau) = proc.decode_aug(s);
        let cond = proc.conditional_now(x_obs, &history, tau);
        for a in 0..proc.n_actions {
            delayed_reward[s][a] =
                cond.iter().zip(&proc.reward).map(|(p, r)| p * r[a]).sum::<f64>();

            let mut next_history = history.clone();
            next_history.rotate_left(1);
            next_history[proc.tau_max - 1] = a;

            let mut acc: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
            for (t1, p_tau) in proc.delay_kernel[tau - 1][x_obs].iter().enumerate() {
                if *p_tau == 0.0 {
                    continue;
                }
                let tau_next = t1 + 1;
                if tau_next == tau + 1 {
                    let s2 = proc.encode_aug(x_obs, &next_history, tau_next);
                    *acc.entry(s2).or_insert(0.0) += p_tau;
                } else {
                    // d = tau - tau_next >= 0: reveal the state d + 1 steps
                    // past the old observation point.
                    let d = tau - tau_next;
                    let mut dist = vec![0.0; proc.n_states];
                    dist[x_obs] = 1.0;
                    for step in 0..=d {
                        let act = history[proc.tau_max - tau + step];
                        dist = proc.push(&dist, act);
                    }
                    for (x2, q) in dist.iter().enumerate() {
                        if *q > 0.0 {
                            let s2 = proc.encode_aug(x2, &next_history, tau_next);
                            *acc.entry(s2).or_insert(0.0) += p_tau * q;
                        }
                    }
                }
            }
            let mut row: Vec<(usize, f64)> = acc.into_iter().collect();
            row.sort_unstable_by_key(|(s2, _)| *s2);
            kernel[s][a] = row;
        }
    }
    Ok(AugmentedTabularMdp {
        n_states: n_aug,
        n_actions: proc.n_actions,
        gamma: proc.gamma,
        kernel,
        delayed_reward,
    })
}

impl AugmentedTabularMdp {
    pub fn validate_stochastic(&self) -> Result<()> {
        for (s, by_action) in self.kernel.iter().enumerate() {
            for (a, row) in by_action.iter().enumerate() {
                let sum: f64 = row.iter().map(|(_, p)| p).sum();
                if (sum - 1.0).abs() > 1.0e-12 {
                    return Err(Error::invalid(format!("kernel[{s}][{a}] sums to {sum}")));
                }
            }
        }
        Ok(())
    }
}

/// How an episode of the delayed process starts.
#[derive(Debug, Clone, Copy)]
pub enum InitSpec {
    /// The augmented start pins the observed state; the hidden chain evolves
    /// from it under the padding action. The initial true-state distribution
    /// then equals the one the augmented state implies, which is exactly the
    /// optimality-transfer precondition.
    Consistent { x_obs: usize, pad_action: usize, delay: usize },
    /// Same augmented start, but the true current state is pinned
    /// independently of the chain, breaking that precondition. Requires
    /// delay 1 so only the current state needs pinning.
    Pinned { x_obs: usize, pad_action: usize, x_now: usize },
}

impl InitSpec {
    pub fn aug_state(&self, proc: &TabularDelayedProcess) -> usize {
        match *self {
            InitSpec::Consistent { x_obs, pad_action, delay } => {
                proc.encode_aug(x_obs, &vec![pad_action; proc.tau_max], delay)
            }
            InitSpec::Pinned { x_obs, pad_action, .. } => {
                proc.encode_aug(x_obs, &vec![pad_action; proc.tau_max], 1)
            }
        }
    }
}

/// Live simulation state of the raw delayed process.
#[derive(Debug, Clone)]
pub struct SimState {
    /// Hidden chain values at times k - tau_max ..= k, oldest first.
    window: Vec<usize>,
    history: Vec<usize>,
    tau: usize,
}

impl SimState {
    pub fn observed(&self, proc: &TabularDelayedProcess) -> usize {
        self.window[proc.tau_max - self.tau]
    }

    pub fn current(&self) -> usize {
        *self.window.last().unwrap()
    }

    pub fn aug_index(&self, proc: &TabularDelayedProcess) -> usize {
        proc.encode_aug(self.observed(proc), &self.history, self.tau)
    }
}

impl TabularDelayedProcess {
    pub fn sim_reset<R: Rng>(&self, init: &InitSpec, rng: &mut R) -> SimState {
        match *init {
            InitSpec::Consistent { x_obs, pad_action, delay } => {
                assert!(delay >= 1 && delay <= self.tau_max);
                let mut window = vec![x_obs; self.tau_max + 1];
                // Walk the chain from the observation point to the present.
                let start = self.tau_max - delay;
                for i in start + 1..=self.tau_max {
                    window[i] = self.sample_next(window[i - 1], pad_action, rng);
                }
                SimState { window, history: vec![pad_action; self.tau_max], tau: delay }
            }
            InitSpec::Pinned { x_obs, pad_action, x_now } => {
                let mut window = vec![x_obs; self.tau_max + 1];
                *window.last_mut().unwrap() = x_now;
                SimState { window, history: vec![pad_action; self.tau_max], tau: 1 }
            }
        }
    }

    fn sample_row<R: Rng>(row: &[f64], rng: &mut R) -> usize {
        let mut u: f64 = rng.gen();
        for (i, p) in row.iter().enumerate() {
            u -= p;
            if u <= 0.0 {
                return i;
            }
        }
        row.len() - 1
    }

    pub fn sample_next<R: Rng>(&self, x: usize, a: usize, rng: &mut R) -> usize {
        Self::sample_row(&self.chain[a][x], rng)
    }

    /// Advances one interval under action `a`; returns the undelayed reward
    /// collected at the pre-step state.
    pub fn sim_step<R: Rng>(&self, state: &mut SimState, a: usize, rng: &mut R) -> f64 {
        let r = self.reward[state.current()][a];
        // Delay transition depends on the currently observed state.
        let tau_next =
            Self::sample_row(&self.delay_kernel[state.tau - 1][state.observed(self)], rng) + 1;
        let x_next = self.sample_next(state.current(), a, rng);
        state.window.rotate_left(1);
        *state.window.last_mut().unwrap() = x_next;
        state.history.rotate_left(1);
        state.history[self.tau_max - 1] = a;
        state.tau = tau_next;
        r
    }
}

fn random_row<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Random instance with Dirichlet-like rows, rewards in [-1, 0].
pub fn random_process<R: Rng>(
    rng: &mut R,
    n_states: usize,
    n_actions: usize,
    tau_max: usize,
    gamma: f64,
) -> TabularDelayedProcess {
    let chain = (0..n_actions)
        .map(|_| (0..n_states).map(|_| random_row(rng, n_states)).collect())
        .collect();
    let reward = (0..n_states)
        .map(|_| (0..n_actions).map(|_| -rng.gen::<f64>()).collect())
        .collect();
    let delay_kernel = (1..=tau_max)
        .map(|tau| {
            (0..n_states)
                .map(|_| {
                    let support = (tau + 1).min(tau_max);
                    let mut row = random_row(rng, support);
                    row.resize(tau_max, 0.0);
                    row
                })
                .collect()
        })
        .collect();
    TabularDelayedProcess {
        n_states,
        n_actions,
        tau_max,
        chain,
        reward,
        delay_kernel,
        gamma,
    }
}
