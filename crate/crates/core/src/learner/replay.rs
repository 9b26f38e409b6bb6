//! Uniform ring-buffer experience replay with flat storage.

use rand::Rng;

use super::mlp::Matrix;

/// One stored step, exposed for tests and serialization.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Fixed-capacity replay memory; the oldest record is overwritten first.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_states: Vec<f64>,
    terminals: Vec<bool>,
    len: usize,
    cursor: usize,
}

/// A sampled minibatch in matrix form.
pub struct Batch {
    pub states: Matrix,
    pub actions: Matrix,
    pub rewards: Vec<f64>,
    pub next_states: Matrix,
    pub terminals: Vec<bool>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Self {
        Self {
            capacity,
            state_dim,
            action_dim,
            states: vec![0.0; capacity * state_dim],
            actions: vec![0.0; capacity * action_dim],
            rewards: vec![0.0; capacity],
            next_states: vec![0.0; capacity * state_dim],
            terminals: vec![false; capacity],
            len: 0,
            cursor: 0,
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

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn push(&mut self, state: &[f64], action: &[f64], reward: f64, next_state: &[f64], terminal: bool) {
        debug_assert_eq!(state.len(), self.state_dim);
        debug_assert_eq!(action.len(), self.action_dim);
        debug_assert_eq!(next_state.len(), self.state_dim);
        let i = self.cursor;
        self.states[i * self.state_dim..(i + 1) * self.state_dim].copy_from_slice(state);
        self.actions[i * self.action_dim..(i + 1) * self.action_dim].copy_from_slice(action);
        self.rewards[i] = reward;
        self.next_states[i * self.state_dim..(i + 1) * self.state_dim].copy_from_slice(next_state);
        self.terminals[i] = terminal;
        self.cursor = (self.cursor + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// Uniform sample with replacement; requires `len() >= size`.
    pub fn sample<R: Rng>(&self, size: usize, rng: &mut R) -> Batch {
        assert!(self.len >= size, "buffer {} too small for batch {size}", self.len);
        let mut batch = Batch {
            states: Matrix::zeros(size, self.state_dim),
            actions: Matrix::zeros(size, self.action_dim),
            rewards: vec![0.0; size],
            next_states: Matrix::zeros(size, self.state_dim),
            terminals: vec![false; size],
        };
        for b in 0..size {
            let i = rng.gen_range(0..self.len);
            batch
                .states
                .row_mut(b)
                .copy_from_slice(&self.states[i * self.state_dim..(i + 1) * self.state_dim]);
            batch
                .actions
                .row_mut(b)
                .copy_from_slice(&self.actions[i * self.action_dim..(i + 1) * self.action_dim]);
            batch.rewards[b] = self.rewards[i];
            batch
                .next_states
                .row_mut(b)
                .copy_from_slice(&self.next_states[i * self.state_dim..(i + 1) * self.state_dim]);
            batch.terminals[b] = self.terminals[i];
        }
        batch
    }

    pub fn get(&self, i: usize) -> Transition {
        assert!(i < self.len);
        Transition {
            state: self.states[i * self.state_dim..(i + 1) * self.state_dim].to_vec(),
            action: self.actions[i * self.action_dim..(i + 1) * self.action_dim].to_vec(),
            reward: self.rewards[i],
            next_state: self.next_states[i * self.state_dim..(i + 1) * self.state_dim].to_vec(),
            terminal: self.terminals[i],
        }
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Rebuild from raw parts (checkpoint restore).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        capacity: usize,
        state_dim: usize,
        action_dim: usize,
        len: usize,
        cursor: usize,
        states: Vec<f64>,
        actions: Vec<f64>,
        rewards: Vec<f64>,
        next_states: Vec<f64>,
        terminals: Vec<bool>,
    ) -> Self {
        assert_eq!(states.len(), capacity * state_dim);
        assert_eq!(actions.len(), capacity * action_dim);
        Self { capacity, state_dim, action_dim, states, actions, rewards, next_states, terminals, len, cursor }
    }

    pub fn raw_parts(&self) -> (&[f64], &[f64], &[f64], &[f64], &[bool]) {
        (&self.states, &self.actions, &self.rewards, &self.next_states, &self.terminals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;
    use rand::RngCore;

    #[test]
    fn ring_overwrites_oldest() {
        let mut buf = ReplayBuffer::new(3, 1, 1);
        for k in 0..5 {
            buf.push(&[k as f64], &[0.0], k as f64, &[0.0], false);
        }
        assert_eq!(buf.len(), 3);
        // slots now hold records 3, 4, 2
        let rewards: Vec<f64> = (0..3).map(|i| buf.get(i).reward).collect();
        assert!(rewards.contains(&2.0) && rewards.contains(&3.0) && rewards.contains(&4.0));
    }

    #[test]
    fn sampling_is_reproducible_under_a_fixed_seed() {
        let mut buf = ReplayBuffer::new(64, 2, 1);
        for k in 0..64 {
            buf.push(&[k as f64, 0.0], &[0.5], k as f64, &[k as f64 + 1.0, 0.0], k % 7 == 0);
        }
        let mut r1 = SeedTree::new(5).stream(&[1]);
        let mut r2 = SeedTree::new(5).stream(&[1]);
        let b1 = buf.sample(16, &mut r1);
        let b2 = buf.sample(16, &mut r2);
        assert_eq!(b1.rewards, b2.rewards);
        assert_eq!(b1.states.data, b2.states.data);
        let mut r3 = SeedTree::new(6).stream(&[1]);
        let b3 = buf.sample(16, &mut r3);
        assert_ne!(b1.rewards, b3.rewards);
        let _ = r3.next_u64();
    }
}
