use rand::Rng;
use serde::{Deserialize, Serialize};

// Guards the min-max range of a feature that has been constant so far.
const RANGE_EPSILON: f64 = 1e-16;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Three-layer autoencoder with tied weights and online min-max input
/// normalization, trained by plain stochastic gradient descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autoencoder {
    pub n_visible: usize,
    pub n_hidden: usize,
    pub learning_rate: f64,
    /// Row-major `n_visible x n_hidden` encoder matrix; the decoder is its transpose.
    pub weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub visible_bias: Vec<f64>,
    pub norm_min: Vec<f64>,
    pub norm_max: Vec<f64>,
    pub trained: u64,
}

impl Autoencoder {
    pub fn new<R: Rng>(n_visible: usize, hidden_ratio: f64, learning_rate: f64, rng: &mut R) -> Self {
        let n_hidden = ((n_visible as f64 * hidden_ratio).ceil() as usize).max(1);
        let bound = 1.0 / n_visible as f64;
        let weights = (0..n_visible * n_hidden).map(|_| rng.gen_range(-bound..=bound)).collect();
        Autoencoder {
            n_visible,
            n_hidden,
            learning_rate,
            weights,
            hidden_bias: vec![0.0; n_hidden],
            visible_bias: vec![0.0; n_visible],
            norm_min: vec![0.0; n_visible],
            norm_max: vec![0.0; n_visible],
            trained: 0,
        }
    }

    fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.norm_min.iter().zip(&self.norm_max))
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo + RANGE_EPSILON))
            .collect()
    }

    fn encode(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_hidden)
            .map(|h| {
                let mut acc = self.hidden_bias[h];
                for (i, xi) in x.iter().enumerate() {
                    acc += xi * self.weights[i * self.n_hidden + h];
                }
                sigmoid(acc)
            })
            .collect()
    }

    fn decode(&self, y: &[f64]) -> Vec<f64> {
        (0..self.n_visible)
            .map(|i| {
                let row = &self.weights[i * self.n_hidden..(i + 1) * self.n_hidden];
                let acc: f64 = row.iter().zip(y).map(|(w, yh)| w * yh).sum();
                sigmoid(acc + self.visible_bias[i])
            })
            .collect()
    }

    fn rmse(a: &[f64], b: &[f64]) -> f64 {
        let sum: f64 = a.iter().zip(b).map(|(x, z)| (x - z) * (x - z)).sum();
        (sum / a.len() as f64).sqrt()
    }

    /// One gradient step on `x`; returns the reconstruction RMSE before the update.
    pub fn train(&mut self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_visible);
        if self.trained == 0 {
            self.norm_min.copy_from_slice(x);
            self.norm_max.copy_from_slice(x);
        } else {
            for (i, v) in x.iter().enumerate() {
                self.norm_min[i] = self.norm_min[i].min(*v);
                self.norm_max[i] = self.norm_max[i].max(*v);
            }
        }
        self.trained += 1;

        let x = self.normalize(x);
        let y = self.encode(&x);
        let z = self.decode(&y);
        let out_err: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a - b).collect();

        // Backpropagate the visible error to the hidden layer through the tied weights.
        let hidden_err: Vec<f64> = (0..self.n_hidden)
            .map(|h| {
                let back: f64 = (0..self.n_visible).map(|i| out_err[i] * self.weights[i * self.n_hidden + h]).sum();
                back * y[h] * (1.0 - y[h])
            })
            .collect();

        let lr = self.learning_rate;
        for i in 0..self.n_visible {
            for h in 0..self.n_hidden {
                self.weights[i * self.n_hidden + h] += lr * (x[i] * hidden_err[h] + out_err[i] * y[h]);
            }
        }
        for (b, e) in self.hidden_bias.iter_mut().zip(&hidden_err) {
            *b += lr * e;
        }
        for (b, e) in self.visible_bias.iter_mut().zip(&out_err) {
            *b += lr * e;
        }
        Self::rmse(&x, &z)
    }

    /// Reconstruction RMSE of `x` with frozen parameters.
    pub fn score(&self, x: &[f64]) -> f64 {
        if self.trained == 0 {
            return 0.0;
        }
        let x = self.normalize(x);
        let z = self.decode(&self.encode(&x));
        Self::rmse(&x, &z)
    }

    pub fn weights_finite(&self) -> bool {
        self.weights.iter().chain(&self.hidden_bias).chain(&self.visible_bias).all(|w| w.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hidden_layer_uses_ceiling_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(Autoencoder::new(10, 0.75, 0.05, &mut rng).n_hidden, 8);
        assert_eq!(Autoencoder::new(1, 0.75, 0.05, &mut rng).n_hidden, 1);
    }

    #[test]
    fn learns_a_repeating_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut ae = Autoencoder::new(4, 0.75, 0.05, &mut rng);
        let patterns = [[0.0, 1.0, 0.0, 1.0], [1.0, 0.0, 1.0, 0.0]];
        let first = ae.train(&patterns[0]);
        for i in 0..20_000 {
            ae.train(&patterns[i % 2]);
        }
        let late = ae.score(&patterns[0]);
        assert!(late < first, "{late} !< {first}");
        assert!(ae.weights_finite());
    }

    #[test]
    fn score_does_not_mutate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ae = Autoencoder::new(3, 0.75, 0.05, &mut rng);
        ae.train(&[1.0, 2.0, 3.0]);
        ae.train(&[2.0, 3.0, 4.0]);
        let before = ae.clone();
        let s = ae.score(&[100.0, -5.0, 3.0]);
        assert!(s.is_finite() && s >= 0.0);
        assert_eq!(before, ae);
    }
}
