//! From-scratch TD3: twin critics, delayed policy updates, target-policy
//! smoothing and soft-updated target networks, all on the hand-rolled MLPs
//! in [`mlp`]. Actions live in the normalized box `[-1, 1]^dim`; the
//! environment layer maps them to physical units.

pub mod adam;
pub mod mlp;
pub mod model_io;
pub mod replay;

pub use adam::Adam;
pub use mlp::{Matrix, Mlp, OutputActivation};
pub use replay::{Batch, ReplayBuffer, Transition};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::Td3Section;
use crate::error::Result;
use crate::rng::SeedTree;

/// Dimensions and hyperparameters of one TD3 learner.
#[derive(Clone, Debug)]
pub struct Td3Config {
    pub state_dim: usize,
    pub action_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub discount: f64,
    pub soft_update: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Critic updates per policy/target update.
    pub policy_period: usize,
    /// Target-action smoothing noise std and clip (normalized units).
    pub target_noise: f64,
    pub noise_clip: f64,
    pub minibatch: usize,
}

impl Td3Config {
    pub fn from_section(section: &Td3Section, state_dim: usize, action_dim: usize) -> Self {
        Self {
            state_dim,
            action_dim,
            hidden_sizes: section.hidden_sizes.clone(),
            discount: section.discount,
            soft_update: section.soft_update,
            actor_lr: section.actor_lr,
            critic_lr: section.critic_lr,
            policy_period: section.policy_period,
            target_noise: section.target_noise,
            noise_clip: section.noise_clip,
            minibatch: section.minibatch,
        }
    }

    fn actor_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.state_dim];
        s.extend_from_slice(&self.hidden_sizes);
        s.push(self.action_dim);
        s
    }

    fn critic_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.state_dim + self.action_dim];
        s.extend_from_slice(&self.hidden_sizes);
        s.push(1);
        s
    }
}

/// Diagnostics from one gradient step.
#[derive(Clone, Copy, Debug, Default)]
pub struct UpdateDiag {
    pub critic_loss: f64,
    pub actor_updated: bool,
    pub mean_target: f64,
}

/// The learner. Target networks are private and only ever written through
/// the soft-update rule; no optimizer is attached to them.
#[derive(Clone, Debug)]
pub struct Td3 {
    pub cfg: Td3Config,
    actor: Mlp,
    critic1: Mlp,
    critic2: Mlp,
    target_actor: Mlp,
    target_critic1: Mlp,
    target_critic2: Mlp,
    adam_actor: Adam,
    adam_critic1: Adam,
    adam_critic2: Adam,
    update_count: u64,
}

impl Td3 {
    pub fn new(cfg: Td3Config, seeds: &SeedTree) -> Self {
        let mut rng = seeds.stream(&[crate::rng::stream::INIT]);
        let actor = Mlp::new(&cfg.actor_sizes(), OutputActivation::Tanh, &mut rng);
        let critic1 = Mlp::new(&cfg.critic_sizes(), OutputActivation::Linear, &mut rng);
        let critic2 = Mlp::new(&cfg.critic_sizes(), OutputActivation::Linear, &mut rng);
        let target_actor = actor.clone();
        let target_critic1 = critic1.clone();
        let target_critic2 = critic2.clone();
        let adam_actor = Adam::new(&actor, cfg.actor_lr);
        let adam_critic1 = Adam::new(&critic1, cfg.critic_lr);
        let adam_critic2 = Adam::new(&critic2, cfg.critic_lr);
        Self {
            cfg,
            actor,
            critic1,
            critic2,
            target_actor,
            target_critic1,
            target_critic2,
            adam_actor,
            adam_critic1,
            adam_critic2,
            update_count: 0,
        }
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critic1(&self) -> &Mlp {
        &self.critic1
    }

    pub fn critic2(&self) -> &Mlp {
        &self.critic2
    }

    pub fn target_actor(&self) -> &Mlp {
        &self.target_actor
    }

    pub fn target_critic1(&self) -> &Mlp {
        &self.target_critic1
    }

    pub fn target_critic2(&self) -> &Mlp {
        &self.target_critic2
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    /// Deterministic policy output in `[-1, 1]^action_dim`.
    pub fn policy(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.actor.forward(state)
    }

    /// Exploration action: policy output plus clipped Gaussian noise.
    /// `noise_std = 0` recovers the deterministic policy.
    pub fn act<R: Rng>(&self, state: &[f64], noise_std: f64, rng: &mut R) -> Result<Vec<f64>> {
        let mut a = self.actor.forward(state)?;
        if noise_std > 0.0 {
            for v in a.iter_mut() {
                let eps: f64 = rng.sample(StandardNormal);
                *v = (*v + eps * noise_std).clamp(-1.0, 1.0);
            }
        }
        Ok(a)
    }

    /// Bootstrapped targets `y = r + γ (1 - done) min(Q1', Q2')(s', â)` with
    /// smoothed target actions.
    pub fn critic_targets<R: Rng>(&self, batch: &Batch, rng: &mut R) -> Vec<f64> {
        let next_actions = self.smoothed_target_actions(&batch.next_states, rng);
        let sa = batch.next_states.hcat(&next_actions);
        let q1 = self.target_critic1.forward_batch(&sa);
        let q2 = self.target_critic2.forward_batch(&sa);
        (0..batch.rewards.len())
            .map(|b| {
                let q = q1.output().data[b].min(q2.output().data[b]);
                let cont = if batch.terminals[b] { 0.0 } else { self.cfg.discount * q };
                batch.rewards[b] + cont
            })
            .collect()
    }

    fn smoothed_target_actions<R: Rng>(&self, next_states: &Matrix, rng: &mut R) -> Matrix {
        let cache = self.target_actor.forward_batch(next_states);
        let mut actions = cache.output().clone();
        if self.cfg.target_noise > 0.0 {
            for v in actions.data.iter_mut() {
                let eps: f64 = rng.sample(StandardNormal);
                let noise = (eps * self.cfg.target_noise).clamp(-self.cfg.noise_clip, self.cfg.noise_clip);
                *v = (*v + noise).clamp(-1.0, 1.0);
            }
        }
        actions
    }

    /// One TD3 step on a sampled batch: both critics always, actor and
    /// targets every `policy_period` calls.
    pub fn update<R: Rng>(&mut self, batch: &Batch, rng: &mut R) -> UpdateDiag {
        let targets = self.critic_targets(batch, rng);
        let n = targets.len() as f64;
        let sa = batch.states.hcat(&batch.actions);

        let mut critic_loss = 0.0;
        for (critic, adam) in [
            (&mut self.critic1, &mut self.adam_critic1),
            (&mut self.critic2, &mut self.adam_critic2),
        ] {
            let cache = critic.forward_batch(&sa);
            let mut d_out = Matrix::zeros(batch.rewards.len(), 1);
            for b in 0..batch.rewards.len() {
                let err = cache.output().data[b] - targets[b];
                critic_loss += err * err / (2.0 * n);
                d_out.data[b] = 2.0 * err / n;
            }
            let grads = critic.backward_batch(&cache, &d_out);
            adam.step(critic, &grads);
        }

        let actor_updated = self.update_count % self.cfg.policy_period as u64 == 0;
        if actor_updated {
            // ascend Q1(s, π(s)): gradient of -mean(Q1) through the critic
            // input back into the actor
            let actor_cache = self.actor.forward_batch(&batch.states);
            let actions = actor_cache.output().clone();
            let sa_pi = batch.states.hcat(&actions);
            let critic_cache = self.critic1.forward_batch(&sa_pi);
            let mut d_q = Matrix::zeros(batch.rewards.len(), 1);
            for v in d_q.data.iter_mut() {
                *v = -1.0 / n;
            }
            let critic_grads = self.critic1.backward_batch(&critic_cache, &d_q);
            // slice the action part of the critic's input gradient
            let mut d_actions = Matrix::zeros(batch.rewards.len(), self.cfg.action_dim);
            for b in 0..batch.rewards.len() {
                d_actions
                    .row_mut(b)
                    .copy_from_slice(&critic_grads.input.row(b)[self.cfg.state_dim..]);
            }
            let actor_grads = self.actor.backward_batch(&actor_cache, &d_actions);
            self.adam_actor.step(&mut self.actor, &actor_grads);
            self.soft_update_targets();
        }
        self.update_count += 1;

        let mean_target = targets.iter().sum::<f64>() / n;
        UpdateDiag { critic_loss, actor_updated, mean_target }
    }

    fn soft_update_targets(&mut self) {
        let tau = self.cfg.soft_update;
        self.target_actor.blend_from(&self.actor, tau);
        self.target_critic1.blend_from(&self.critic1, tau);
        self.target_critic2.blend_from(&self.critic2, tau);
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite()
            && self.critic1.is_finite()
            && self.critic2.is_finite()
            && self.target_actor.is_finite()
            && self.target_critic1.is_finite()
            && self.target_critic2.is_finite()
    }

    /// Checkpoint access: all six networks plus optimizer states.
    pub(crate) fn parts_mut(
        &mut self,
    ) -> (
        [&mut Mlp; 6],
        [&mut Adam; 3],
        &mut u64,
    ) {
        (
            [
                &mut self.actor,
                &mut self.critic1,
                &mut self.critic2,
                &mut self.target_actor,
                &mut self.target_critic1,
                &mut self.target_critic2,
            ],
            [&mut self.adam_actor, &mut self.adam_critic1, &mut self.adam_critic2],
            &mut self.update_count,
        )
    }

    pub(crate) fn parts(&self) -> ([&Mlp; 6], [&Adam; 3], u64) {
        (
            [
                &self.actor,
                &self.critic1,
                &self.critic2,
                &self.target_actor,
                &self.target_critic1,
                &self.target_critic2,
            ],
            [&self.adam_actor, &self.adam_critic1, &self.adam_critic2],
            self.update_count,
        )
    }
}

/// Map a normalized action in `[-1, 1]` to `[lo, hi]`.
pub fn denormalize(v: f64, lo: f64, hi: f64) -> f64 {
    lo + (v.clamp(-1.0, 1.0) + 1.0) * 0.5 * (hi - lo)
}

/// Inverse of [`denormalize`].
pub fn normalize(x: f64, lo: f64, hi: f64) -> f64 {
    ((x - lo) / (hi - lo) * 2.0 - 1.0).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> Td3Config {
        Td3Config {
            state_dim: 3,
            action_dim: 2,
            hidden_sizes: vec![16, 16],
            discount: 0.9,
            soft_update: 0.01,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            policy_period: 2,
            target_noise: 0.1,
            noise_clip: 0.5,
            minibatch: 8,
        }
    }

    fn filled_buffer(seed: u64) -> ReplayBuffer {
        let mut buf = ReplayBuffer::new(128, 3, 2);
        let mut rng = SeedTree::new(seed).stream(&[9]);
        for _ in 0..128 {
            let s: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s2: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r: f64 = rng.gen_range(-1.0..1.0);
            buf.push(&s, &a, r, &s2, rng.gen_bool(0.1));
        }
        buf
    }

    #[test]
    fn actions_respect_the_box() {
        let td3 = Td3::new(tiny_cfg(), &SeedTree::new(1));
        let mut rng = SeedTree::new(2).stream(&[0]);
        for _ in 0..10_000 {
            let s: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let a = td3.act(&s, 0.4, &mut rng).unwrap();
            assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn zero_noise_action_is_the_policy() {
        let td3 = Td3::new(tiny_cfg(), &SeedTree::new(3));
        let mut rng = SeedTree::new(4).stream(&[0]);
        let s = [0.1, -0.2, 0.3];
        let a = td3.act(&s, 0.0, &mut rng).unwrap();
        assert_eq!(a, td3.policy(&s).unwrap());
    }

    #[test]
    fn exploration_noise_is_zero_mean() {
        let td3 = Td3::new(tiny_cfg(), &SeedTree::new(5));
        let mut rng = SeedTree::new(6).stream(&[0]);
        let s = [0.0, 0.0, 0.0];
        let base = td3.policy(&s).unwrap();
        let n = 40_000;
        let mut mean = vec![0.0; 2];
        for _ in 0..n {
            let a = td3.act(&s, 0.1, &mut rng).unwrap();
            for k in 0..2 {
                mean[k] += a[k] - base[k];
            }
        }
        // 3 sigma of the sample mean at std 0.1 (clipping bias is tiny here)
        let tol = 3.0 * 0.1 / (n as f64).sqrt() + 1e-3;
        for k in 0..2 {
            assert!((mean[k] / n as f64).abs() < tol, "noise mean {}", mean[k] / n as f64);
        }
    }

    #[test]
    fn identical_twins_reduce_to_single_critic_target() {
        let mut td3 = Td3::new(tiny_cfg(), &SeedTree::new(7));
        td3.target_critic2 = td3.target_critic1.clone();
        let buf = filled_buffer(8);
        let mut rng = SeedTree::new(9).stream(&[0]);
        let batch = buf.sample(16, &mut rng);
        let mut noise_rng = SeedTree::new(10).stream(&[1]);
        let y = td3.critic_targets(&batch, &mut noise_rng);
        // single-critic oracle with the same smoothing draws
        let mut noise_rng2 = SeedTree::new(10).stream(&[1]);
        let actions = td3.smoothed_target_actions(&batch.next_states, &mut noise_rng2);
        let sa = batch.next_states.hcat(&actions);
        let q = td3.target_critic1.forward_batch(&sa);
        for b in 0..16 {
            let expected = batch.rewards[b]
                + if batch.terminals[b] { 0.0 } else { 0.9 * q.output().data[b] };
            assert!((y[b] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_discount_targets_are_rewards() {
        let mut cfg = tiny_cfg();
        cfg.discount = 0.0;
        let td3 = Td3::new(cfg, &SeedTree::new(11));
        let buf = filled_buffer(12);
        let mut rng = SeedTree::new(13).stream(&[0]);
        let batch = buf.sample(16, &mut rng);
        let y = td3.critic_targets(&batch, &mut rng);
        for b in 0..16 {
            assert_eq!(y[b], batch.rewards[b]);
        }
    }

    #[test]
    fn zero_smoothing_noise_uses_the_target_policy_exactly() {
        let mut cfg = tiny_cfg();
        cfg.target_noise = 0.0;
        let td3 = Td3::new(cfg, &SeedTree::new(14));
        let buf = filled_buffer(15);
        let mut rng = SeedTree::new(16).stream(&[0]);
        let batch = buf.sample(8, &mut rng);
        let a1 = td3.smoothed_target_actions(&batch.next_states, &mut rng);
        let a2 = td3.target_actor.forward_batch(&batch.next_states);
        assert_eq!(a1.data, a2.output().data);
    }

    #[test]
    fn twin_min_target_never_exceeds_either_single_target() {
        let td3 = Td3::new(tiny_cfg(), &SeedTree::new(17));
        let buf = filled_buffer(18);
        let mut rng = SeedTree::new(19).stream(&[0]);
        let batch = buf.sample(32, &mut rng);
        let mut nrng1 = SeedTree::new(20).stream(&[1]);
        let y = td3.critic_targets(&batch, &mut nrng1);
        let mut nrng2 = SeedTree::new(20).stream(&[1]);
        let actions = td3.smoothed_target_actions(&batch.next_states, &mut nrng2);
        let sa = batch.next_states.hcat(&actions);
        let q1 = td3.target_critic1.forward_batch(&sa);
        let q2 = td3.target_critic2.forward_batch(&sa);
        for b in 0..32 {
            if !batch.terminals[b] {
                let y1 = batch.rewards[b] + 0.9 * q1.output().data[b];
                let y2 = batch.rewards[b] + 0.9 * q2.output().data[b];
                assert!(y[b] <= y1 + 1e-12 && y[b] <= y2 + 1e-12);
            }
        }
    }

    #[test]
    fn full_soft_update_copies_online_networks() {
        let mut cfg = tiny_cfg();
        cfg.soft_update = 1.0;
        cfg.policy_period = 1;
        let mut td3 = Td3::new(cfg, &SeedTree::new(21));
        let buf = filled_buffer(22);
        let mut rng = SeedTree::new(23).stream(&[0]);
        let batch = buf.sample(16, &mut rng);
        td3.update(&batch, &mut rng);
        assert_eq!(td3.actor.flat_params(), td3.target_actor.flat_params());
        assert_eq!(td3.critic1.flat_params(), td3.target_critic1.flat_params());
        assert_eq!(td3.critic2.flat_params(), td3.target_critic2.flat_params());
    }

    #[test]
    fn soft_update_contracts_toward_online_parameters() {
        let mut td3 = Td3::new(tiny_cfg(), &SeedTree::new(24));
        let before: Vec<f64> = td3
            .target_actor
            .flat_params()
            .iter()
            .zip(td3.actor.flat_params())
            .map(|(t, o)| t - o)
            .collect();
        // perturb the target so the gap is nonzero
        let mut flat = td3.target_actor.flat_params();
        for v in flat.iter_mut() {
            *v += 0.1;
        }
        td3.target_actor.set_flat_params(&flat).unwrap();
        let gap_before: Vec<f64> = td3
            .target_actor
            .flat_params()
            .iter()
            .zip(td3.actor.flat_params())
            .map(|(t, o)| t - o)
            .collect();
        td3.soft_update_targets();
        let gap_after: Vec<f64> = td3
            .target_actor
            .flat_params()
            .iter()
            .zip(td3.actor.flat_params())
            .map(|(t, o)| t - o)
            .collect();
        for (a, b) in gap_after.iter().zip(&gap_before) {
            assert!((a - b * 0.99).abs() < 1e-12, "expected exact (1-tau) contraction");
        }
        let _ = before;
    }

    #[test]
    fn actor_updates_every_policy_period() {
        let mut td3 = Td3::new(tiny_cfg(), &SeedTree::new(25));
        let buf = filled_buffer(26);
        let mut rng = SeedTree::new(27).stream(&[0]);
        let mut pattern = Vec::new();
        for _ in 0..6 {
            let batch = buf.sample(16, &mut rng);
            pattern.push(td3.update(&batch, &mut rng).actor_updated);
        }
        assert_eq!(pattern, vec![true, false, true, false, true, false]);
    }

    #[test]
    fn critic_loss_decreases_on_a_fixed_batch() {
        let mut cfg = tiny_cfg();
        cfg.critic_lr = 1e-3;
        cfg.target_noise = 0.0;
        let mut td3 = Td3::new(cfg, &SeedTree::new(28));
        let buf = filled_buffer(29);
        let mut rng = SeedTree::new(30).stream(&[0]);
        let batch = buf.sample(32, &mut rng);
        let first = td3.update(&batch, &mut rng).critic_loss;
        let mut last = first;
        for _ in 0..20 {
            last = td3.update(&batch, &mut rng).critic_loss;
        }
        assert!(last < first, "critic loss {first} -> {last}");
    }

    #[test]
    fn denormalize_maps_the_box() {
        assert_eq!(denormalize(-1.0, 0.0, 0.1), 0.0);
        assert_eq!(denormalize(1.0, 0.0, 0.1), 0.1);
        assert_eq!(denormalize(0.0, 0.0, 0.1), 0.05);
        assert_eq!(normalize(0.05, 0.0, 0.1), 0.0);
        assert_eq!(denormalize(0.5, -1.0, 1.0), 0.5);
    }
}
