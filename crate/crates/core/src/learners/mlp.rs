//! Multilayer perceptron regressor trained by mini-batch SGD.
//!
//! Hidden layers use the rectifier, the single output is linear, and the
//! loss is mean squared error. Initialization and the per-epoch shuffle are
//! driven by one seeded generator, so a fit is a pure function of
//! `(data, hyperparameters, seed)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LearnError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// Input size, hidden sizes, then 1.
    pub layer_sizes: Vec<usize>,
    /// weights[l][out][in]
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub hyper: MlpHyper,
}

pub struct MlpGradients {
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
}

fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

impl MlpModel {
    fn init(input_dim: usize, hidden: &[usize], hyper: MlpHyper) -> MlpModel {
        let mut layer_sizes = vec![input_dim];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(1);
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 1..layer_sizes.len() {
            let fan_in = layer_sizes[l - 1];
            let limit = (6.0 / fan_in as f64).sqrt();
            weights.push(
                (0..layer_sizes[l])
                    .map(|_| {
                        (0..fan_in)
                            .map(|_| rng.random_range(-limit..limit))
                            .collect()
                    })
                    .collect(),
            );
            biases.push(vec![0.0; layer_sizes[l]]);
        }
        MlpModel {
            layer_sizes,
            weights,
            biases,
            hyper,
        }
    }

    /// Activations of every layer, input included.
    fn forward(&self, row: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![row.to_vec()];
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let prev = &acts[l];
            let last = l + 1 == self.weights.len();
            let next: Vec<f64> = w
                .iter()
                .zip(b)
                .map(|(wrow, bias)| {
                    let z = bias + wrow.iter().zip(prev).map(|(a, v)| a * v).sum::<f64>();
                    if last {
                        z
                    } else {
                        relu(z)
                    }
                })
                .collect();
            acts.push(next);
        }
        acts
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.forward(row).last().unwrap()[0]
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        x.iter().map(|r| self.predict_row(r)).collect()
    }

    /// Mean squared error over a dataset.
    pub fn loss(&self, x: &[Vec<f64>], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        x.iter()
            .zip(y)
            .map(|(row, &t)| (self.predict_row(row) - t).powi(2))
            .sum::<f64>()
            / n
    }

    fn zero_gradients(&self) -> MlpGradients {
        MlpGradients {
            weights: self
                .weights
                .iter()
                .map(|w| w.iter().map(|r| vec![0.0; r.len()]).collect())
                .collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Backpropagated gradient of the MSE loss over `(x, y)`.
    pub fn gradients(&self, x: &[Vec<f64>], y: &[f64]) -> MlpGradients {
        let mut grads = self.zero_gradients();
        let m = x.len() as f64;
        for (row, &target) in x.iter().zip(y) {
            let acts = self.forward(row);
            let output = acts.last().unwrap()[0];
            // delta at the linear output
            let mut delta = vec![2.0 * (output - target) / m];
            for l in (0..self.weights.len()).rev() {
                let prev_act = &acts[l];
                for (o, &d) in delta.iter().enumerate() {
                    grads.biases[l][o] += d;
                    for (i, &a) in prev_act.iter().enumerate() {
                        grads.weights[l][o][i] += d * a;
                    }
                }
                if l > 0 {
                    // Propagate through the rectifier of layer l-1's output.
                    let mut next_delta = vec![0.0; self.layer_sizes[l]];
                    for (i, nd) in next_delta.iter_mut().enumerate() {
                        if acts[l][i] > 0.0 {
                            let mut s = 0.0;
                            for (o, &d) in delta.iter().enumerate() {
                                s += d * self.weights[l][o][i];
                            }
                            *nd = s;
                        }
                    }
                    delta = next_delta;
                }
            }
        }
        grads
    }

    fn apply_gradients(&mut self, grads: &MlpGradients, lr: f64) {
        for (w, gw) in self.weights.iter_mut().zip(&grads.weights) {
            for (row, grow) in w.iter_mut().zip(gw) {
                for (v, g) in row.iter_mut().zip(grow) {
                    *v -= lr * g;
                }
            }
        }
        for (b, gb) in self.biases.iter_mut().zip(&grads.biases) {
            for (v, g) in b.iter_mut().zip(gb) {
                *v -= lr * g;
            }
        }
    }
}

pub fn fit_mlp(
    x: &[Vec<f64>],
    y: &[f64],
    hidden: &[usize],
    learning_rate: f64,
    epochs: usize,
    batch_size: usize,
    seed: u64,
) -> Result<MlpModel, LearnError> {
    if x.is_empty() || y.is_empty() {
        return Err(LearnError::Empty);
    }
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch(x.len(), y.len()));
    }
    if batch_size == 0 || !learning_rate.is_finite() || learning_rate <= 0.0 {
        return Err(LearnError::InvalidHyper(format!(
            "learning_rate = {learning_rate}, batch_size = {batch_size}"
        )));
    }
    if hidden.iter().any(|&h| h == 0) {
        return Err(LearnError::InvalidHyper("hidden layer of width 0".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite);
    }

    let hyper = MlpHyper {
        learning_rate,
        epochs,
        batch_size,
        seed,
    };
    let mut model = MlpModel::init(x[0].len(), hidden, hyper);
    // The init consumed the seed stream; epoch shuffles get their own.
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
    let mut indices: Vec<usize> = (0..x.len()).collect();

    for epoch in 0..epochs {
        indices.shuffle(&mut rng);
        for chunk in indices.chunks(batch_size) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| x[i].clone()).collect();
            let by: Vec<f64> = chunk.iter().map(|&i| y[i]).collect();
            let grads = model.gradients(&bx, &by);
            model.apply_gradients(&grads, learning_rate);
        }
        let loss = model.loss(x, y);
        if !loss.is_finite() {
            return Err(LearnError::Diverged { epoch });
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_data(seed: u64, n: usize, dims: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dims).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| 2.0 * r[0] - 1.5 * r[1 % dims] + 0.25)
            .collect();
        (x, y)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = toy_data(21, 3, 4);
        let model = MlpModel::init(
            4,
            &[5, 3],
            MlpHyper {
                learning_rate: 0.01,
                epochs: 0,
                batch_size: 3,
                seed: 17,
            },
        );
        let analytic = model.gradients(&x, &y);
        let step = 1e-5;
        let mut max_rel = 0.0f64;
        for l in 0..model.weights.len() {
            for o in 0..model.weights[l].len() {
                for i in 0..model.weights[l][o].len() {
                    let mut plus = model.clone();
                    plus.weights[l][o][i] += step;
                    let mut minus = model.clone();
                    minus.weights[l][o][i] -= step;
                    let numeric = (plus.loss(&x, &y) - minus.loss(&x, &y)) / (2.0 * step);
                    let a = analytic.weights[l][o][i];
                    let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
                    max_rel = max_rel.max(rel);
                }
            }
            for o in 0..model.biases[l].len() {
                let mut plus = model.clone();
                plus.biases[l][o] += step;
                let mut minus = model.clone();
                minus.biases[l][o] -= step;
                let numeric = (plus.loss(&x, &y) - minus.loss(&x, &y)) / (2.0 * step);
                let a = analytic.biases[l][o];
                let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
                max_rel = max_rel.max(rel);
            }
        }
        assert!(max_rel < 1e-4, "max relative error {max_rel}");
    }

    #[test]
    fn zero_epochs_is_reproducible_initialization() {
        let (x, y) = toy_data(4, 10, 3);
        let a = fit_mlp(&x, &y, &[8], 1e-3, 0, 4, 99).unwrap();
        let b = fit_mlp(&x, &y, &[8], 1e-3, 0, 4, 99).unwrap();
        assert_eq!(a, b);
        let c = fit_mlp(&x, &y, &[8], 1e-3, 0, 4, 100).unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn learns_linear_target_below_target_variance() {
        let (x, y) = toy_data(7, 120, 3);
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let model = fit_mlp(&x, &y, &[8], 1e-2, 500, 16, 3).unwrap();
        let mse = model.loss(&x, &y);
        assert!(mse < var, "mse {mse} >= variance {var}");
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let (x, y) = toy_data(8, 40, 3);
        // An absurd learning rate blows the loss up to infinity.
        let err = fit_mlp(&x, &y, &[8, 8], 1e12, 50, 8, 5).unwrap_err();
        match err {
            LearnError::Diverged { .. } => {}
            other => panic!("expected divergence, got {other}"),
        }
    }
}
