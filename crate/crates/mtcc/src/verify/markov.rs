//! Empirical Markov-property test.
//!
//! Simulates the raw delayed process under a uniform random policy and
//! compares, for each (state, action) cell, the next-state distribution
//! estimated inside sub-contexts that additionally fix the *previous* state
//! against the pooled estimate. A genuinely Markov state keeps every
//! sub-context within sampling noise of the pool; the bare delayed
//! observation does not, because the hidden delay leaks through the history.

use std::collections::HashMap;

use rand::Rng;

use super::tabular::{InitSpec, TabularDelayedProcess};
use crate::harness::rng::substream;

#[derive(Debug, Clone, serde::Serialize)]
pub struct MarkovSideReport {
    /// Largest total-variation gap between a sub-context estimate and its
    /// pooled distribution.
    pub max_tv_gap: f64,
    /// Largest gap in units of its own 3-sigma bound.
    pub max_excess: f64,
    pub cells_checked: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct MarkovReport {
    pub augmented: MarkovSideReport,
    pub raw_observation: MarkovSideReport,
}

#[derive(Default)]
struct Counts {
    pooled: HashMap<(usize, usize), HashMap<usize, u64>>,
    by_context: HashMap<(usize, usize, usize), HashMap<usize, u64>>,
}

impl Counts {
    fn record(&mut self, prev: usize, state: usize, action: usize, next: usize) {
        *self
            .pooled
            .entry((state, action))
            .or_default()
            .entry(next)
            .or_insert(0) += 1;
        *self
            .by_context
            .entry((prev, state, action))
            .or_default()
            .entry(next)
            .or_insert(0) += 1;
    }

    /// Compares every sufficiently-sampled sub-context against its pool.
    fn evaluate(&self, min_cell: u64) -> MarkovSideReport {
        let mut max_tv_gap: f64 = 0.0;
        let mut max_excess: f64 = 0.0;
        let mut cells = 0usize;
        for ((prev, state, action), ctx_counts) in &self.by_context {
            let _ = prev;
            let n_c: u64 = ctx_counts.values().sum();
            if n_c < min_cell {
                continue;
            }
            let pool = &self.pooled[&(*state, *action)];
            let n_pool: u64 = pool.values().sum();
            let mut tv = 0.0;
            let mut bound = 0.0;
            for (next, pool_count) in pool {
                let p = *pool_count as f64 / n_pool as f64;
                let pc = *ctx_counts.get(next).unwrap_or(&0) as f64 / n_c as f64;
                tv += 0.5 * (p - pc).abs();
                // Per-outcome 3-sigma binomial noise plus a continuity term.
                bound += 0.5 * (3.0 * (p * (1.0 - p) / n_c as f64).sqrt() + 2.0 / n_c as f64);
            }
            max_tv_gap = max_tv_gap.max(tv);
            if bound > 0.0 {
                max_excess = max_excess.max(tv / bound);
            }
            cells += 1;
        }
        MarkovSideReport { max_tv_gap, max_excess, cells_checked: cells, pass: max_excess <= 1.0 }
    }
}

/// Runs both tests over one simulated trajectory of `n_samples` steps.
pub fn markov_test(
    proc: &TabularDelayedProcess,
    n_samples: usize,
    min_cell: u64,
    seed: u64,
) -> MarkovReport {
    let mut rng = substream(seed, "verify.markov", 0);
    let init = InitSpec::Consistent { x_obs: 0, pad_action: 0, delay: 1 };
    let mut sim = proc.sim_reset(&init, &mut rng);

    let mut aug = Counts::default();
    let mut raw = Counts::default();

    // Warm up into the stationary regime, then record
    // (previous, current, action, next) at both granularities.
    let warmup = 200;
    let mut prev_aug = sim.aug_index(proc);
    let mut prev_raw = sim.observed(proc);
    let mut cur_aug = prev_aug;
    let mut cur_raw = prev_raw;
    for step in 0..n_samples + warmup + 1 {
        let action = rng.gen_range(0..proc.n_actions);
        proc.sim_step(&mut sim, action, &mut rng);
        let next_aug = sim.aug_index(proc);
        let next_raw = sim.observed(proc);
        if step > warmup {
            aug.record(prev_aug, cur_aug, action, next_aug);
            raw.record(prev_raw, cur_raw, action, next_raw);
        }
        prev_aug = cur_aug;
        prev_raw = cur_raw;
        cur_aug = next_aug;
        cur_raw = next_raw;
    }

    MarkovReport {
        augmented: aug.evaluate(min_cell),
        raw_observation: raw.evaluate(min_cell),
    }
}

/// Hand-built instance on which the bare delayed observation is visibly
/// non-Markov: a near-flip chain makes the observation sequence pin down the
/// hidden delay, and the delay transitions depend strongly on the observed
/// state.
pub fn raw_counterexample_process() -> TabularDelayedProcess {
    let flip = vec![vec![0.1, 0.9], vec![0.9, 0.1]];
    TabularDelayedProcess {
        n_states: 2,
        n_actions: 1,
        tau_max: 2,
        chain: vec![flip],
        reward: vec![vec![0.0], vec![-1.0]],
        delay_kernel: vec![
            // From delay 1: observing 0 usually ages the observation,
            // observing 1 usually keeps it fresh.
            vec![vec![0.2, 0.8], vec![0.9, 0.1]],
            // From delay 2: always drains back to 1.
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        ],
        gamma: 0.9,
    }
}

/// Instance with a deterministic unit delay; both state notions are Markov.
pub fn deterministic_delay_process() -> TabularDelayedProcess {
    let a0 = vec![vec![0.7, 0.3], vec![0.4, 0.6]];
    let a1 = vec![vec![0.2, 0.8], vec![0.9, 0.1]];
    TabularDelayedProcess {
        n_states: 2,
        n_actions: 2,
        tau_max: 1,
        chain: vec![a0, a1],
        reward: vec![vec![0.0, -0.5], vec![-1.0, -0.2]],
        delay_kernel: vec![vec![vec![1.0], vec![1.0]]],
        gamma: 0.9,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::tabular::random_process;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn augmented_state_passes_on_random_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for i in 0..5 {
            let proc = random_process(&mut rng, 3, 2, 2, 0.9);
            let report = markov_test(&proc, 300_000, 200, 1000 + i);
            assert!(
                report.augmented.pass,
                "instance {i}: excess {}",
                report.augmented.max_excess
            );
            assert!(report.augmented.cells_checked > 0);
        }
    }

    #[test]
    fn raw_observation_fails_on_the_counterexample() {
        let proc = raw_counterexample_process();
        let report = markov_test(&proc, 400_000, 200, 77);
        assert!(report.augmented.pass, "augmented excess {}", report.augmented.max_excess);
        assert!(
            !report.raw_observation.pass,
            "raw observation unexpectedly Markov: excess {}",
            report.raw_observation.max_excess
        );
        // The failure is structural, not marginal.
        assert!(report.raw_observation.max_excess > 2.0);
        assert!(report.raw_observation.max_tv_gap > 0.05);
    }

    #[test]
    fn deterministic_delay_passes_both_ways() {
        let proc = deterministic_delay_process();
        let report = markov_test(&proc, 300_000, 200, 78);
        assert!(report.augmented.pass, "excess {}", report.augmented.max_excess);
        assert!(report.raw_observation.pass, "excess {}", report.raw_observation.max_excess);
    }
}
