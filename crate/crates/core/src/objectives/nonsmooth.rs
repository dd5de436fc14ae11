use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::logreg::dot;
use crate::rng::StreamKey;

/// `f(x) = (1/m) Σ_j |⟨a_j, x⟩ − b_j| + (μ/2)‖x‖²` on one node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsLoss {
    d: usize,
    /// Row-major `m × d`.
    features: Vec<f64>,
    targets: Vec<f64>,
    pub mu: f64,
}

impl AbsLoss {
    pub fn new(d: usize, features: Vec<f64>, targets: Vec<f64>, mu: f64) -> Self {
        assert_eq!(features.len(), targets.len() * d, "features do not match targets");
        Self { d, features, targets, mu }
    }

    /// `m` rows with `a_j ~ N(0, I/d)` and `b_j = ⟨a_j, x_true⟩ + 0.1·noise`.
    pub fn random(d: usize, m: usize, mu: f64, x_true: &[f64], key: StreamKey) -> Self {
        let mut rng = key.rng();
        let scale = 1.0 / (d as f64).sqrt();
        let features: Vec<f64> = (0..m * d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
            .collect();
        let targets = features
            .chunks_exact(d)
            .map(|a| {
                let z: f64 = StandardNormal.sample(&mut rng);
                dot(a, x_true) + 0.1 * z
            })
            .collect();
        Self::new(d, features, targets, mu)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.features[j * self.d..(j + 1) * self.d]
    }

    pub fn target(&self, j: usize) -> f64 {
        self.targets[j]
    }

    pub fn max_row_norm(&self) -> f64 {
        self.features
            .chunks_exact(self.d)
            .map(|a| dot(a, a).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_target(&self) -> f64 {
        self.targets.iter().map(|b| b.abs()).fold(0.0, f64::max)
    }

    /// Value and the sign subgradient, taking 0 at kinks.
    pub fn value_subgrad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let m = self.len() as f64;
        let mut value = 0.0;
        let mut g = vec![0.0; self.d];
        for j in 0..self.len() {
            let a = self.row(j);
            let res = dot(a, x) - self.targets[j];
            value += res.abs();
            let s = if res > 0.0 {
                1.0
            } else if res < 0.0 {
                -1.0
            } else {
                0.0
            };
            if s != 0.0 {
                for (gi, ai) in g.iter_mut().zip(a) {
                    *gi += s * ai;
                }
            }
        }
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi = *gi / m + self.mu * xi;
        }
        (value / m + 0.5 * self.mu * dot(x, x), g)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let m = self.len() as f64;
        let loss: f64 = (0..self.len()).map(|j| (dot(self.row(j), x) - self.targets[j]).abs()).sum();
        loss / m + 0.5 * self.mu * dot(x, x)
    }

    /// Single-sample realization `F(x, ξ = j)`.
    pub fn sample_value(&self, x: &[f64], j: usize) -> f64 {
        (dot(self.row(j), x) - self.targets[j]).abs() + 0.5 * self.mu * dot(x, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_examples() {
        let f = AbsLoss::new(1, vec![1.0], vec![0.0], 0.0);
        let (v, g) = f.value_subgrad(&[2.0]);
        assert_eq!(v, 2.0);
        assert_eq!(g, vec![1.0]);
        // kink: ⟨a, x⟩ = b
        let f = AbsLoss::new(2, vec![1.0, 1.0], vec![3.0], 0.0);
        let (v, g) = f.value_subgrad(&[1.0, 2.0]);
        assert_eq!(v, 0.0);
        assert_eq!(g, vec![0.0, 0.0]);
    }
}
