use serde::{Deserialize, Serialize};

use super::{Dataset, ObjectiveError};

/// Sign applied to `b aᵀx` inside the loss.
///
/// `Verbatim` evaluates `log(1 + exp(b aᵀx))`; `Standard` evaluates the usual
/// `log(1 + exp(-b aᵀx))`. Both are convex with identical curvature bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSign {
    #[default]
    Verbatim,
    Standard,
}

impl LossSign {
    fn factor(self) -> f64 {
        match self {
            LossSign::Verbatim => 1.0,
            LossSign::Standard => -1.0,
        }
    }
}

/// `log(1 + e^s)` without overflow.
pub fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `f(x) = (1/m) Σ_j log(1 + exp(± b_j a_jᵀx)) + (r/2)‖x‖²` on one node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticLoss {
    pub data: Dataset,
    pub r: f64,
    pub sign: LossSign,
}

impl LogisticLoss {
    pub fn new(data: Dataset, r: f64, sign: LossSign) -> Self {
        Self { data, r, sign }
    }

    fn margin(&self, a: &[f64], b: f64, x: &[f64]) -> f64 {
        self.sign.factor() * b * dot(a, x)
    }

    pub fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let m = self.data.len() as f64;
        let mut value = 0.0;
        let mut grad = vec![0.0; x.len()];
        for (a, b) in self.data.rows() {
            let s = self.margin(a, b, x);
            value += softplus(s);
            let coef = sigmoid(s) * self.sign.factor() * b;
            for (g, ai) in grad.iter_mut().zip(a) {
                *g += coef * ai;
            }
        }
        let reg = 0.5 * self.r * dot(x, x);
        for (g, xi) in grad.iter_mut().zip(x) {
            *g = *g / m + self.r * xi;
        }
        (value / m + reg, grad)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let m = self.data.len() as f64;
        let loss: f64 = self.data.rows().map(|(a, b)| softplus(self.margin(a, b, x))).sum();
        loss / m + 0.5 * self.r * dot(x, x)
    }

    /// Single-sample realization `F(x, ξ = j)`.
    pub fn sample_value(&self, x: &[f64], j: usize) -> f64 {
        softplus(self.margin(self.data.row(j), self.data.label(j), x)) + 0.5 * self.r * dot(x, x)
    }

    /// `λ_max((1/(4m)) AᵀA) + r`.
    pub fn smoothness(&self) -> f64 {
        gram_lambda_max(&self.data) + self.r
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub const POWER_ITERATIONS: usize = 50;
pub const POWER_TOLERANCE: f64 = 1e-8;

/// `λ_max((1/(4m)) AᵀA)` by power iteration from the all-ones vector.
pub fn gram_lambda_max(ds: &Dataset) -> f64 {
    let d = ds.dim();
    let m = ds.len();
    if m == 0 || d == 0 {
        return 0.0;
    }
    let scale = 1.0 / (4.0 * m as f64);
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; d];
        for (a, _) in ds.rows() {
            let t = dot(a, v);
            for (o, ai) in out.iter_mut().zip(a) {
                *o += t * ai;
            }
        }
        out.iter_mut().for_each(|o| *o *= scale);
        out
    };
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = apply(&v);
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = dot(&v, &w);
        v = w.iter().map(|x| x / norm).collect();
        if (next - lambda).abs() <= POWER_TOLERANCE * next.abs().max(1.0) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Rayleigh quotient at the final iterate
    dot(&v, &apply(&v)).max(lambda)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub r: f64,
    pub l_data: f64,
    pub mu: f64,
    pub l: f64,
}

/// `r` with `(L_data + r) / r = kappa_target` on the pooled data.
pub fn calibrate_regularizer(ds: &Dataset, kappa_target: f64) -> Result<Regularization, ObjectiveError> {
    if kappa_target.is_nan() || kappa_target <= 1.0 {
        return Err(ObjectiveError::BadConstants(format!("kappa must exceed 1, got {kappa_target}")));
    }
    let l_data = gram_lambda_max(ds);
    if l_data.is_nan() || l_data <= 0.0 {
        return Err(ObjectiveError::DegenerateData);
    }
    Ok(regularizer_for(l_data, kappa_target))
}

pub fn regularizer_for(l_data: f64, kappa_target: f64) -> Regularization {
    let r = l_data / (kappa_target - 1.0);
    Regularization {
        r,
        l_data,
        mu: r,
        l: l_data + r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::synthetic_covtype_like;

    #[test]
    fn single_sample_at_origin() {
        let ds = Dataset::new(2, vec![1.0, 0.0], vec![1.0]).unwrap();
        let (v, g) = LogisticLoss::new(ds, 0.0, LossSign::Verbatim).value_grad(&[0.0, 0.0]);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((g[0] - 0.5).abs() < 1e-15);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn regularizer_vanishes_at_origin() {
        let ds = synthetic_covtype_like(20, 4);
        let zero = vec![0.0; 54];
        let (v0, g0) = LogisticLoss::new(ds.clone(), 0.0, LossSign::Verbatim).value_grad(&zero);
        let (v1, g1) = LogisticLoss::new(ds, 3.0, LossSign::Verbatim).value_grad(&zero);
        assert_eq!(v0, v1);
        assert_eq!(g0, g1);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
        assert!((sigmoid(-800.0)).abs() < 1e-300);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn regularizer_algebra() {
        let reg = regularizer_for(1.0, 1e5);
        assert!((reg.r - 1.0 / (1e5 - 1.0)).abs() < 1e-20);
        assert!(((reg.l_data + reg.r) / reg.r - 1e5).abs() < 1e-6);
        let reg = regularizer_for(2.5, 2.0);
        assert_eq!(reg.r, 2.5);
    }

    #[test]
    fn calibrate_rejects_degenerate() {
        let ds = Dataset::new(2, vec![0.0; 4], vec![1.0, -1.0]).unwrap();
        assert!(matches!(calibrate_regularizer(&ds, 10.0), Err(ObjectiveError::DegenerateData)));
        assert!(calibrate_regularizer(&ds, 1.0).is_err());
    }
}
