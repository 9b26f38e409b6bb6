//! Dense feed-forward networks with rectifier hidden layers and analytic
//! backpropagation. Batches are row-major matrices so the hot loops stay on
//! contiguous slices.

use rand::Rng;

use crate::error::{CoreError, Result};

/// Row-major 2D buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        let mut out = Matrix::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            out.row_mut(i)[..self.cols].copy_from_slice(self.row(i));
            out.row_mut(i)[self.cols..].copy_from_slice(other.row(i));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputActivation {
    Linear,
    Tanh,
}

/// One dense layer: weights are `(out x in)` row-major.
#[derive(Clone, Debug)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub fan_in: usize,
    pub fan_out: usize,
}

/// Multilayer perceptron. Hidden layers use the rectifier; the output layer
/// is linear (critics) or tanh (actors, bounded to [-1, 1] per component).
#[derive(Clone, Debug)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub output: OutputActivation,
    pub layers: Vec<Layer>,
}

/// Per-layer parameter gradients plus the gradient at the network input.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub input: Matrix,
}

impl Gradients {
    pub fn scale(&mut self, s: f64) {
        for g in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            for v in g.iter_mut() {
                *v *= s;
            }
        }
        for v in self.input.data.iter_mut() {
            *v *= s;
        }
    }
}

/// Activations kept from a forward pass, needed for the backward pass.
pub struct ForwardCache {
    /// activations[0] is the input batch; the last entry is the output.
    pub activations: Vec<Matrix>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("nonempty cache")
    }
}

/// `out[b] += x[b] * W^T + bias` for every row of the batch.
fn affine_forward(x: &Matrix, layer: &Layer, out: &mut Matrix) {
    debug_assert_eq!(x.cols, layer.fan_in);
    debug_assert_eq!(out.cols, layer.fan_out);
    for b in 0..x.rows {
        let xin = x.row(b);
        let orow = out.row_mut(b);
        for (o, dst) in orow.iter_mut().enumerate() {
            let w = &layer.weights[o * layer.fan_in..(o + 1) * layer.fan_in];
            let mut acc = layer.biases[o];
            for k in 0..layer.fan_in {
                acc += xin[k] * w[k];
            }
            *dst = acc;
        }
    }
}

impl Mlp {
    /// Uniform fan-in-scaled initialization in ±1/sqrt(fan_in). The output
    /// layer starts near zero so squashed policies begin unsaturated and
    /// value heads begin flat.
    pub fn new<R: Rng>(sizes: &[usize], output: OutputActivation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let hidden_layers = sizes.len() - 2;
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for (li, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = if li == hidden_layers { 1e-3 } else { 1.0 / (fan_in as f64).sqrt() };
            let weights = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
            let biases = (0..fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
            layers.push(Layer { weights, biases, fan_in, fan_out });
        }
        Self { sizes: sizes.to_vec(), output, layers }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(CoreError::ShapeMismatch(format!(
                "input {} vs {}",
                input.len(),
                self.input_dim()
            )));
        }
        let x = Matrix { rows: 1, cols: input.len(), data: input.to_vec() };
        Ok(self.forward_batch(&x).output().row(0).to_vec())
    }

    pub fn forward_batch(&self, input: &Matrix) -> ForwardCache {
        assert_eq!(input.cols, self.input_dim(), "batch input width");
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.clone());
        for (li, layer) in self.layers.iter().enumerate() {
            let mut out = Matrix::zeros(input.rows, layer.fan_out);
            affine_forward(acts.last().unwrap(), layer, &mut out);
            let last = li + 1 == self.layers.len();
            match (last, self.output) {
                (false, _) => {
                    for v in out.data.iter_mut() {
                        if *v < 0.0 {
                            *v = 0.0;
                        }
                    }
                }
                (true, OutputActivation::Tanh) => {
                    for v in out.data.iter_mut() {
                        *v = v.tanh();
                    }
                }
                (true, OutputActivation::Linear) => {}
            }
            acts.push(out);
        }
        ForwardCache { activations: acts }
    }

    /// Backpropagate `d_output` (gradient of some scalar loss w.r.t. the
    /// network output, one row per batch sample) through the cached pass.
    pub fn backward_batch(&self, cache: &ForwardCache, d_output: &Matrix) -> Gradients {
        let batch = d_output.rows;
        assert_eq!(d_output.cols, self.output_dim());
        assert_eq!(cache.activations.len(), self.layers.len() + 1);

        let mut d_weights: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect();
        let mut d_biases: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect();

        // delta at the last layer's pre-activation
        let mut delta = d_output.clone();
        if self.output == OutputActivation::Tanh {
            let y = cache.output();
            for (d, &o) in delta.data.iter_mut().zip(&y.data) {
                *d *= 1.0 - o * o;
            }
        }

        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let below = &cache.activations[li];
            // parameter gradients
            {
                let dw = &mut d_weights[li];
                let db = &mut d_biases[li];
                for b in 0..batch {
                    let drow = delta.row(b);
                    let xrow = below.row(b);
                    for (o, &dz) in drow.iter().enumerate() {
                        if dz != 0.0 {
                            let w = &mut dw[o * layer.fan_in..(o + 1) * layer.fan_in];
                            for k in 0..layer.fan_in {
                                w[k] += dz * xrow[k];
                            }
                            db[o] += dz;
                        }
                    }
                }
            }
            // gradient w.r.t. the layer input
            let mut d_below = Matrix::zeros(batch, layer.fan_in);
            for b in 0..batch {
                let drow = delta.row(b);
                let dst = d_below.row_mut(b);
                for (o, &dz) in drow.iter().enumerate() {
                    if dz != 0.0 {
                        let w = &layer.weights[o * layer.fan_in..(o + 1) * layer.fan_in];
                        for k in 0..layer.fan_in {
                            dst[k] += dz * w[k];
                        }
                    }
                }
            }
            if li > 0 {
                // rectifier derivative of the hidden activation below
                for (d, &a) in d_below.data.iter_mut().zip(&below.data) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            delta = d_below;
        }
        Gradients { weights: d_weights, biases: d_biases, input: delta }
    }

    /// `self = (1 - tau) * self + tau * other`, elementwise.
    pub fn blend_from(&mut self, other: &Mlp, tau: f64) {
        assert_eq!(self.sizes, other.sizes);
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x = (1.0 - tau) * *x + tau * y;
            }
            for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                *x = (1.0 - tau) * *x + tau * y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.biases.iter()).all(|v| v.is_finite()))
    }

    /// Flat read-only view over every parameter, layer by layer, weights
    /// before biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    /// Load parameters from the flat layout produced by `flat_params`.
    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(CoreError::ShapeMismatch(format!(
                "flat {} vs {}",
                flat.len(),
                self.num_params()
            )));
        }
        let mut at = 0;
        for l in self.layers.iter_mut() {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
        Ok(())
    }
}
