//! Diagnostics for the TD3 learner on a 1D double-integrator docking task.

use emberwatch_core::learner::{Matrix, ReplayBuffer, Td3, Td3Config};
use emberwatch_core::rng::SeedTree;
use rand::Rng;

struct Env {
    pos: f64,
    vel: f64,
}

impl Env {
    fn reset(rng: &mut impl Rng) -> Self {
        Self { pos: rng.gen_range(-1.0..1.0), vel: 0.0 }
    }
    fn state(&self) -> Vec<f64> {
        vec![self.pos, self.vel]
    }
    fn step(&mut self, a: f64) -> (f64, bool) {
        let before = self.pos.abs();
        self.vel = (self.vel + 0.1 * a.clamp(-1.0, 1.0)).clamp(-0.5, 0.5);
        self.pos += 0.1 * self.vel;
        let after = self.pos.abs();
        if after < 0.05 {
            (10.0, true)
        } else {
            (2.0 * (before - after) - 0.02, false)
        }
    }
}

fn q_value(td3: &Td3, s: &[f64], a: &[f64]) -> f64 {
    let sa = Matrix::from_rows(&[s.iter().chain(a).copied().collect::<Vec<f64>>()]);
    td3.critic1().forward_batch(&sa).output().data[0]
}

fn main() {
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

    let episodes = 600;
    let warmup = 20;
    let cap = 120;
    let mut window_success = 0;
    let mut window_loss = 0.0;
    let mut window_updates = 0;
    for e in 0..episodes {
        let mut env = Env::reset(&mut rng);
        let mut s = env.state();
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
            if e >= warmup && buffer.len() >= 64 {
                let batch = buffer.sample(64, &mut rng);
                let d = td3.update(&batch, &mut rng);
                window_loss += d.critic_loss;
                window_updates += 1;
            }
            if done {
                window_success += 1;
                break;
            }
        }
        if (e + 1) % 50 == 0 {
            let pi_far = td3.policy(&[0.8, 0.0]).unwrap()[0];
            let pi_near = td3.policy(&[0.1, 0.0]).unwrap()[0];
            let pi_brake = td3.policy(&[0.1, 0.5]).unwrap()[0];
            let q_minus = q_value(&td3, &[0.5, 0.0], &[-1.0]);
            let q_zero = q_value(&td3, &[0.5, 0.0], &[0.0]);
            let q_plus = q_value(&td3, &[0.5, 0.0], &[1.0]);
            println!(
                "ep {:3}: success {:2}/50 loss {:8.4} | pi(0.8,0)={:+.2} pi(0.1,0)={:+.2} pi(0.1,.5)={:+.2} | Q(.5,0;-1/0/+1)={:+.2}/{:+.2}/{:+.2}",
                e + 1,
                window_success,
                window_loss / window_updates.max(1) as f64,
                pi_far,
                pi_near,
                pi_brake,
                q_minus,
                q_zero,
                q_plus
            );
            window_success = 0;
            window_loss = 0.0;
            window_updates = 0;
        }
    }
}
