//! Linear support vector regression trained by dual coordinate descent on
//! the L2-regularized epsilon-insensitive objective
//! `0.5 * (|w|^2 + b^2) + C * sum(max(0, |y - w.x - b| - epsilon))`.
//! The intercept is handled as an extra constant feature of value 1.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSvrParams {
    pub tolerance: f64,
    pub c: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
}

impl Default for LinearSvrParams {
    fn default() -> Self {
        LinearSvrParams {
            tolerance: 1e-3,
            c: 1.0,
            epsilon: 0.1,
            max_epochs: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvr {
    weights: Vec<f64>,
    intercept: f64,
    epochs: usize,
}

impl LinearSvr {
    pub fn fit(x: &Matrix, y: &[f64], params: &LinearSvrParams, rng: &mut Rng) -> Self {
        let (n, d) = (x.rows(), x.cols());
        let c = params.c;
        let eps = params.epsilon;
        // w[d] is the intercept weight on the implicit constant feature.
        let mut w = vec![0.0; d + 1];
        let mut beta = vec![0.0; n];
        let diag: Vec<f64> = (0..n)
            .map(|i| x.row(i).iter().map(|v| v * v).sum::<f64>() + 1.0)
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        let mut initial_violation = None;
        let mut epochs = 0;

        while epochs < params.max_epochs {
            epochs += 1;
            order.shuffle(rng);
            let mut violation_sum = 0.0;
            for &i in &order {
                let row = x.row(i);
                let g = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[d] - y[i];
                let gp = g + eps;
                let gn = g - eps;
                let b = beta[i];
                let violation = if b == 0.0 {
                    if gp < 0.0 {
                        -gp
                    } else if gn > 0.0 {
                        gn
                    } else {
                        0.0
                    }
                } else if b >= c {
                    gp.max(0.0)
                } else if b <= -c {
                    (-gn).max(0.0)
                } else if b > 0.0 {
                    gp.abs()
                } else {
                    gn.abs()
                };
                violation_sum += violation;

                let h = diag[i];
                let z = if gp < h * b {
                    -gp / h
                } else if gn > h * b {
                    -gn / h
                } else {
                    -b
                };
                if z.abs() < 1e-14 {
                    continue;
                }
                let updated = (b + z).clamp(-c, c);
                let delta = updated - b;
                beta[i] = updated;
                for (wj, xj) in w.iter_mut().zip(row) {
                    *wj += delta * xj;
                }
                w[d] += delta;
            }
            let init = *initial_violation.get_or_insert(violation_sum);
            if violation_sum <= params.tolerance * init.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        let intercept = w.pop().unwrap_or(0.0);
        LinearSvr {
            weights: w,
            intercept,
            epochs,
        }
    }

    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.intercept
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    /// Primal objective value on the given data.
    pub fn objective(&self, x: &Matrix, y: &[f64], params: &LinearSvrParams) -> f64 {
        let reg = 0.5
            * (self.weights.iter().map(|w| w * w).sum::<f64>() + self.intercept * self.intercept);
        let loss: f64 = x
            .iter_rows()
            .zip(y)
            .map(|(row, &t)| ((t - self.predict_row(row)).abs() - params.epsilon).max(0.0))
            .sum();
        reg + params.c * loss
    }
}
