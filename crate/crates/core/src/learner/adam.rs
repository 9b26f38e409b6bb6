//! Adaptive-moment gradient steps for [`Mlp`] parameters.

use super::mlp::{Gradients, Mlp};

/// Per-network optimizer state: first/second moments shaped like the
/// parameters, plus the shared step counter for bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m_weights: Vec<Vec<f64>>,
    v_weights: Vec<Vec<f64>>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m_weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            v_weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            m_biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
            v_biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Apply one descent step along `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        for li in 0..net.layers.len() {
            Self::apply(
                &mut net.layers[li].weights,
                &grads.weights[li],
                &mut self.m_weights[li],
                &mut self.v_weights[li],
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.epsilon,
                bc1,
                bc2,
            );
            Self::apply(
                &mut net.layers[li].biases,
                &grads.biases[li],
                &mut self.m_biases[li],
                &mut self.v_biases[li],
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.epsilon,
                bc1,
                bc2,
            );
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn apply(
        params: &mut [f64],
        grads: &[f64],
        m: &mut [f64],
        v: &mut [f64],
        lr: f64,
        b1: f64,
        b2: f64,
        eps: f64,
        bc1: f64,
        bc2: f64,
    ) {
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }

    /// Raw moment access for checkpointing, ordered like `Mlp::flat_params`.
    pub fn flat_state(&self) -> (u64, Vec<f64>, Vec<f64>) {
        let mut m = Vec::new();
        let mut v = Vec::new();
        for li in 0..self.m_weights.len() {
            m.extend_from_slice(&self.m_weights[li]);
            m.extend_from_slice(&self.m_biases[li]);
            v.extend_from_slice(&self.v_weights[li]);
            v.extend_from_slice(&self.v_biases[li]);
        }
        (self.step, m, v)
    }

    pub fn set_flat_state(&mut self, step: u64, m: &[f64], v: &[f64]) {
        self.step = step;
        let mut at = 0;
        for li in 0..self.m_weights.len() {
            let w = self.m_weights[li].len();
            self.m_weights[li].copy_from_slice(&m[at..at + w]);
            self.v_weights[li].copy_from_slice(&v[at..at + w]);
            at += w;
            let b = self.m_biases[li].len();
            self.m_biases[li].copy_from_slice(&m[at..at + b]);
            self.v_biases[li].copy_from_slice(&v[at..at + b]);
            at += b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::mlp::{Matrix, OutputActivation};
    use crate::rng::SeedTree;

    #[test]
    fn descends_a_quadratic_on_a_fixed_batch() {
        let mut rng = SeedTree::new(21).stream(&[0]);
        let mut net = Mlp::new(&[2, 8, 1], OutputActivation::Linear, &mut rng);
        let mut opt = Adam::new(&net, 1e-3);
        let x = Matrix::from_rows(&[vec![0.5, -0.3], vec![-1.0, 0.8], vec![0.1, 0.9]]);
        let targets = [0.2, -0.4, 0.7];
        let loss = |net: &Mlp| -> f64 {
            let out = net.forward_batch(&x);
            out.output()
                .data
                .iter()
                .zip(&targets)
                .map(|(y, t)| (y - t) * (y - t))
                .sum::<f64>()
                / 3.0
        };
        let before = loss(&net);
        for _ in 0..400 {
            let cache = net.forward_batch(&x);
            let mut d_out = Matrix::zeros(3, 1);
            for b in 0..3 {
                d_out.data[b] = 2.0 * (cache.output().data[b] - targets[b]) / 3.0;
            }
            let grads = net.backward_batch(&cache, &d_out);
            opt.step(&mut net, &grads);
        }
        let after = loss(&net);
        assert!(after < before * 0.5, "loss {before} -> {after}");
        assert_eq!(opt.steps_taken(), 400);
    }

    #[test]
    fn flat_state_round_trip() {
        let mut rng = SeedTree::new(22).stream(&[0]);
        let mut net = Mlp::new(&[2, 4, 1], OutputActivation::Linear, &mut rng);
        let mut opt = Adam::new(&net, 1e-3);
        let x = Matrix::from_rows(&[vec![1.0, -1.0]]);
        let cache = net.forward_batch(&x);
        let mut d = Matrix::zeros(1, 1);
        d.data[0] = 1.0;
        let grads = net.backward_batch(&cache, &d);
        opt.step(&mut net, &grads);
        let (t, m, v) = opt.flat_state();
        let mut other = Adam::new(&net, 1e-3);
        other.set_flat_state(t, &m, &v);
        let (t2, m2, v2) = other.flat_state();
        assert_eq!(t, t2);
        assert_eq!(m, m2);
        assert_eq!(v, v2);
    }
}
