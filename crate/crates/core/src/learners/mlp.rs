//! Single-hidden-layer ReLU perceptron trained with full-batch Adam.
//!
//! Inputs and targets are standardized internally; the loss is
//! `sum((f(x) - y)^2) / (2n) + alpha * |W|^2 / (2n)` over both weight
//! matrices (biases are not penalized).

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_size: usize,
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_size: 50,
            l2: 1e-4,
            learning_rate: 1e-3,
            epochs: 200,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

/// Network weights in one flat buffer:
/// `[W1 (hidden x inputs, row-major) | b1 (hidden) | w2 (hidden) | b2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    n_inputs: usize,
    n_hidden: usize,
    params: Vec<f64>,
}

impl MlpNetwork {
    /// Glorot-uniform weights, zero biases.
    pub fn init(n_inputs: usize, n_hidden: usize, rng: &mut Rng) -> Self {
        let mut params = vec![0.0; Self::param_count(n_inputs, n_hidden)];
        let bound1 = (6.0 / (n_inputs + n_hidden) as f64).sqrt();
        let bound2 = (6.0 / (n_hidden + 1) as f64).sqrt();
        let w1_len = n_hidden * n_inputs;
        for p in &mut params[..w1_len] {
            *p = rng.random_range(-bound1..bound1);
        }
        let w2_start = w1_len + n_hidden;
        for p in &mut params[w2_start..w2_start + n_hidden] {
            *p = rng.random_range(-bound2..bound2);
        }
        MlpNetwork {
            n_inputs,
            n_hidden,
            params,
        }
    }

    pub fn param_count(n_inputs: usize, n_hidden: usize) -> usize {
        n_hidden * n_inputs + 2 * n_hidden + 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.n_hidden * self.n_inputs;
        (w1, w1 + self.n_hidden, w1 + 2 * self.n_hidden)
    }

    #[inline]
    pub fn forward(&self, row: &[f64]) -> f64 {
        let (b1, w2, b2) = self.offsets();
        let mut out = self.params[b2];
        for h in 0..self.n_hidden {
            let wrow = &self.params[h * self.n_inputs..(h + 1) * self.n_inputs];
            let z = wrow.iter().zip(row).map(|(a, b)| a * b).sum::<f64>() + self.params[b1 + h];
            if z > 0.0 {
                out += self.params[w2 + h] * z;
            }
        }
        out
    }

    /// Loss and its gradient with respect to the flat parameter vector.
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[f64], l2: f64) -> (f64, Vec<f64>) {
        let n = x.rows() as f64;
        let (b1, w2, b2) = self.offsets();
        let mut grad = vec![0.0; self.params.len()];
        let mut hidden = vec![0.0; self.n_hidden];
        let mut loss = 0.0;
        for (row, &target) in x.iter_rows().zip(y) {
            let mut out = self.params[b2];
            for (h, act) in hidden.iter_mut().enumerate() {
                let wrow = &self.params[h * self.n_inputs..(h + 1) * self.n_inputs];
                let z = wrow.iter().zip(row).map(|(a, b)| a * b).sum::<f64>() + self.params[b1 + h];
                *act = z.max(0.0);
                out += self.params[w2 + h] * *act;
            }
            let err = out - target;
            loss += err * err;
            let d_out = err / n;
            grad[b2] += d_out;
            for (h, &act) in hidden.iter().enumerate() {
                grad[w2 + h] += d_out * act;
                if act > 0.0 {
                    let d_z = d_out * self.params[w2 + h];
                    grad[b1 + h] += d_z;
                    let g = &mut grad[h * self.n_inputs..(h + 1) * self.n_inputs];
                    for (gi, xi) in g.iter_mut().zip(row) {
                        *gi += d_z * xi;
                    }
                }
            }
        }
        loss /= 2.0 * n;
        let mut penalty = 0.0;
        for i in (0..b1).chain(w2..b2) {
            penalty += self.params[i] * self.params[i];
            grad[i] += l2 * self.params[i] / n;
        }
        loss += l2 * penalty / (2.0 * n);
        (loss, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &Matrix) -> Self {
        let n = x.rows() as f64;
        let (mean, scale) = (0..x.cols())
            .map(|c| {
                let col = x.column(c);
                let m = col.iter().sum::<f64>() / n;
                let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
                (m, if var > 0.0 { var.sqrt() } else { 1.0 })
            })
            .unzip();
        Standardizer { mean, scale }
    }

    fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(row).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    network: MlpNetwork,
    inputs: Standardizer,
    target_mean: f64,
    target_scale: f64,
}

impl Mlp {
    pub fn fit(x: &Matrix, y: &[f64], params: &MlpParams, rng: &mut Rng) -> Self {
        let inputs = Standardizer::fit(x);
        let mut xs = Matrix::zeros(x.rows(), x.cols());
        for r in 0..x.rows() {
            inputs.apply_row(x.row(r), xs.row_mut(r));
        }
        let n = y.len() as f64;
        let target_mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - target_mean).powi(2)).sum::<f64>() / n;
        let target_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let ys: Vec<f64> = y.iter().map(|v| (v - target_mean) / target_scale).collect();

        let mut network = MlpNetwork::init(x.cols(), params.hidden_size, rng);
        let len = network.params.len();
        let (mut m, mut v) = (vec![0.0; len], vec![0.0; len]);
        for t in 1..=params.epochs {
            let (_, grad) = network.loss_and_gradient(&xs, &ys, params.l2);
            let bias1 = 1.0 - params.beta1.powi(t as i32);
            let bias2 = 1.0 - params.beta2.powi(t as i32);
            for i in 0..len {
                m[i] = params.beta1 * m[i] + (1.0 - params.beta1) * grad[i];
                v[i] = params.beta2 * v[i] + (1.0 - params.beta2) * grad[i] * grad[i];
                let step = params.learning_rate * (m[i] / bias1)
                    / ((v[i] / bias2).sqrt() + params.adam_epsilon);
                network.params[i] -= step;
            }
        }
        Mlp {
            network,
            inputs,
            target_mean,
            target_scale,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut scaled = [0.0; 64];
        let out = if row.len() <= scaled.len() {
            let buf = &mut scaled[..row.len()];
            self.inputs.apply_row(row, buf);
            self.network.forward(buf)
        } else {
            let mut buf = vec![0.0; row.len()];
            self.inputs.apply_row(row, &mut buf);
            self.network.forward(&buf)
        };
        out * self.target_scale + self.target_mean
    }

    pub fn network(&self) -> &MlpNetwork {
        &self.network
    }
}
