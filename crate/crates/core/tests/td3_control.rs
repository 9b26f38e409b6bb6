//! Learning-signal check: the TD3 learner must crack a small double-
//! integrator docking task (same structure as the charging stage: shaped
//! distance reward, terminal bonus, bounded acceleration).

use emberwatch_core::learner::{ReplayBuffer, Td3, Td3Config};
use emberwatch_core::rng::SeedTree;
use rand::Rng;

struct DoubleIntegrator {
    pos: f64,
    vel: f64,
}

impl DoubleIntegrator {
    fn reset(rng: &mut impl Rng) -> Self {
        Self { pos: rng.gen_range(-1.0..1.0), vel: 0.0 }
    }

    fn state(&self) -> Vec<f64> {
        vec![self.pos, self.vel]
    }

    /// Returns (reward, done).
    fn step(&mut self, accel: f64) -> (f64, bool) {
        let before = self.pos.abs();
        self.vel = (self.vel + 0.1 * accel.clamp(-1.0, 1.0)).clamp(-0.5, 0.5);
        self.pos += 0.1 * self.vel;
        let after = self.pos.abs();
        if after < 0.05 {
            (10.0, true)
        } else {
            (2.0 * (before - after) - 0.02, false)
        }
    }
}

#[test]
fn td3_learns_double_integrator_docking() {
    let cfg = Td3Config {
        state_dim: 2,
        action_dim: 1,
        hidden_sizes: vec![32, 32],
        discount: 0.95,
        soft_update: 0.02,
        actor_lr: 2e-4,
        critic_lr: 1e-3,
        policy_period: 2,
        target_noise: 0.1,
        noise_clip: 0.5,
        minibatch: 64,
    };
    let tree = SeedTree::new(2024);
    let mut td3 = Td3::new(cfg, &tree);
    let mut buffer = ReplayBuffer::new(20_000, 2, 1);
    let mut rng = tree.stream(&[99]);

    let episodes = 250;
    let warmup = 20;
    let cap = 120;
    let mut successes_late = 0;
    let mut first_window = 0.0;
    let mut last_window = 0.0;
    for e in 0..episodes {
        let mut env = DoubleIntegrator::reset(&mut rng);
        let mut s = env.state();
        let mut total = 0.0;
        for _ in 0..cap {
            let a = if e < warmup {
                vec![rng.gen_range(-1.0..1.0)]
            } else {
                td3.act(&s, 0.15, &mut rng).unwrap()
            };
            let (r, done) = env.step(a[0]);
            let s2 = env.state();
            buffer.push(&s, &a, r, &s2, done);
            s = s2;
            total += r;
            if e >= warmup && buffer.len() >= 64 {
                let batch = buffer.sample(64, &mut rng);
                td3.update(&batch, &mut rng);
            }
            if done {
                if e >= episodes - 50 {
                    successes_late += 1;
                }
                break;
            }
        }
        if (warmup..warmup + 50).contains(&e) {
            first_window += total / 50.0;
        }
        if e >= episodes - 50 {
            last_window += total / 50.0;
        }
    }
    assert!(
        successes_late >= 40,
        "policy should dock in at least 40/50 late episodes, got {successes_late}"
    );
    assert!(
        last_window > first_window,
        "reward should rise: first {first_window:.2} last {last_window:.2}"
    );
}
