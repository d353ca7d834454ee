//! Uniform experience replay over encoded transitions.
//!
//! Flat ring storage: one contiguous block per field, FIFO eviction at
//! capacity, minibatch sampling uniform without replacement.

use rand::Rng;

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    state_dim: usize,
    capacity: usize,
    len: usize,
    next: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_states: Vec<f64>,
    terminals: Vec<bool>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize) -> Self {
        assert!(capacity > 0);
        Self {
            state_dim,
            capacity,
            len: 0,
            next: 0,
            states: vec![0.0; capacity * state_dim],
            actions: vec![0.0; capacity],
            rewards: vec![0.0; capacity],
            next_states: vec![0.0; capacity * state_dim],
            terminals: vec![false; capacity],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, state: &[f64], action: f64, reward: f64, next_state: &[f64], terminal: bool) {
        debug_assert_eq!(state.len(), self.state_dim);
        debug_assert_eq!(next_state.len(), self.state_dim);
        let at = self.next;
        self.states[at * self.state_dim..(at + 1) * self.state_dim].copy_from_slice(state);
        self.actions[at] = action;
        self.rewards[at] = reward;
        self.next_states[at * self.state_dim..(at + 1) * self.state_dim].copy_from_slice(next_state);
        self.terminals[at] = terminal;
        self.next = (self.next + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// Samples `batch` distinct transitions into the caller's flat buffers.
    pub fn sample_into<R: Rng>(
        &self,
        batch: usize,
        rng: &mut R,
        states: &mut Vec<f64>,
        actions: &mut Vec<f64>,
        rewards: &mut Vec<f64>,
        next_states: &mut Vec<f64>,
    ) {
        assert!(batch <= self.len, "batch {batch} exceeds buffer fill {}", self.len);
        states.clear();
        actions.clear();
        rewards.clear();
        next_states.clear();
        for idx in rand::seq::index::sample(rng, self.len, batch) {
            states.extend_from_slice(&self.states[idx * self.state_dim..(idx + 1) * self.state_dim]);
            actions.push(self.actions[idx]);
            rewards.push(self.rewards[idx]);
            next_states
                .extend_from_slice(&self.next_states[idx * self.state_dim..(idx + 1) * self.state_dim]);
        }
    }

    /// Reward stored at ring slot `i` in insertion order of the current
    /// window; test hook for eviction checks.
    #[cfg(test)]
    fn raw_rewards(&self) -> &[f64] {
        &self.rewards[..self.len]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn push_marker(buf: &mut ReplayBuffer, marker: f64) {
        buf.push(&[marker, 0.0], marker, marker, &[marker, 1.0], false);
    }

    #[test]
    fn fifo_eviction_at_capacity() {
        let mut buf = ReplayBuffer::new(5, 2);
        for i in 0..8 {
            push_marker(&mut buf, i as f64);
        }
        assert_eq!(buf.len(), 5);
        let mut seen: Vec<f64> = buf.raw_rewards().to_vec();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Oldest three (0, 1, 2) evicted.
        assert_eq!(seen, vec![3.0, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn sampling_is_without_replacement() {
        let mut buf = ReplayBuffer::new(100, 2);
        for i in 0..50 {
            push_marker(&mut buf, i as f64);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let (mut s, mut a, mut r, mut s2) = (vec![], vec![], vec![], vec![]);
        for _ in 0..20 {
            buf.sample_into(50, &mut rng, &mut s, &mut a, &mut r, &mut s2);
            let mut got = a.clone();
            got.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let expect: Vec<f64> = (0..50).map(|i| i as f64).collect();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn sampled_fields_stay_aligned() {
        let mut buf = ReplayBuffer::new(64, 2);
        for i in 0..64 {
            push_marker(&mut buf, i as f64);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let (mut s, mut a, mut r, mut s2) = (vec![], vec![], vec![], vec![]);
        buf.sample_into(16, &mut rng, &mut s, &mut a, &mut r, &mut s2);
        for b in 0..16 {
            assert_eq!(s[b * 2], a[b]);
            assert_eq!(r[b], a[b]);
            assert_eq!(s2[b * 2], a[b]);
            assert_eq!(s2[b * 2 + 1], 1.0);
        }
    }
}
