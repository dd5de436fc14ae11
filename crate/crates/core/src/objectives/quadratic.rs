use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::StreamKey;

/// `f(x) = ½ (x − c)ᵀ A (x − c)` with symmetric positive definite `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    d: usize,
    /// Row-major `d × d`.
    a: Vec<f64>,
    center: Vec<f64>,
    lambda_min: f64,
    lambda_max: f64,
}

impl Quadratic {
    /// Builds from an explicit matrix; extreme eigenvalues are computed once.
    pub fn new(a: DMatrix<f64>, center: Vec<f64>) -> Self {
        let d = center.len();
        assert_eq!((a.nrows(), a.ncols()), (d, d), "matrix/center mismatch");
        let ev = crate::topology::symmetric_eigenvalues(&a);
        Self {
            d,
            a: a.transpose().as_slice().to_vec(),
            center,
            lambda_min: ev[0],
            lambda_max: ev[d - 1],
        }
    }

    /// `½‖x − c‖²`.
    pub fn isotropic(center: Vec<f64>) -> Self {
        let d = center.len();
        Self::new(DMatrix::identity(d, d), center)
    }

    /// Random rotation of `diag(λ)` with `λ` spread evenly over `[mu, l]`.
    pub fn random(d: usize, mu: f64, l: f64, key: StreamKey) -> Self {
        let mut rng = key.rng();
        let g: DMatrix<f64> = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        let q = g.qr().q();
        let lambdas: DVector<f64> = DVector::from_fn(d, |i, _| {
            if d == 1 {
                mu
            } else {
                mu + (l - mu) * i as f64 / (d - 1) as f64
            }
        });
        let a: DMatrix<f64> = &q * DMatrix::from_diagonal(&lambdas) * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let center = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self::new(a, center)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.d, &self.a)
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.a
            .chunks_exact(self.d)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        0.5 * diff.iter().zip(self.apply(&diff)).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        for (o, v) in out.iter_mut().zip(self.apply(&diff)) {
            *o = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_spectrum_spans_requested_range() {
        let q = Quadratic::random(5, 1.0, 4.0, StreamKey::new(1, 0));
        assert!((q.lambda_min() - 1.0).abs() < 1e-10);
        assert!((q.lambda_max() - 4.0).abs() < 1e-10);
        let c = q.center().to_vec();
        assert!(q.value(&c).abs() < 1e-20);
        let mut g = vec![0.0; 5];
        q.gradient_into(&c, &mut g);
        assert!(g.iter().all(|v| v.abs() < 1e-14));
    }
}
