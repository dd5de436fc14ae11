//! Block vectors in `(R^d)^V`: one `d`-block per node, stored contiguously.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackedVector {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl StackedVector {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            data: vec![0.0; n * d],
        }
    }

    /// Every node holds a copy of `block`.
    pub fn broadcast(n: usize, block: &[f64]) -> Self {
        let d = block.len();
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            data.extend_from_slice(block);
        }
        Self { n, d, data }
    }

    pub fn from_blocks(blocks: &[Vec<f64>]) -> Self {
        let n = blocks.len();
        let d = blocks.first().map_or(0, Vec::len);
        assert!(blocks.iter().all(|b| b.len() == d), "ragged blocks");
        Self {
            n,
            d,
            data: blocks.concat(),
        }
    }

    pub fn from_flat(n: usize, d: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * d, "flat data does not match n*d");
        Self { n, d, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn blocks(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.d.max(1))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n == other.n && self.d == other.d
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert!(self.same_shape(other));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn dist_sq(&self, other: &Self) -> f64 {
        debug_assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// `Σ_i block_i`.
    pub fn block_sum(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.d];
        for block in self.blocks() {
            for (s, v) in sum.iter_mut().zip(block) {
                *s += v;
            }
        }
        sum
    }

    pub fn block_mean(&self) -> Vec<f64> {
        let mut mean = self.block_sum();
        let inv = 1.0 / self.n as f64;
        mean.iter_mut().for_each(|v| *v *= inv);
        mean
    }

    /// Orthogonal projection onto the zero-block-sum subspace,
    /// `((I_n - 11ᵀ/n) ⊗ I_d) v`.
    pub fn project_zero_sum(&self) -> Self {
        let mean = self.block_mean();
        let mut out = self.clone();
        for i in 0..self.n {
            for (v, m) in out.block_mut(i).iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        out
    }

    /// `⟨v, P v⟩ = ‖P v‖²`.
    pub fn projected_norm_sq(&self) -> f64 {
        self.project_zero_sum().norm_sq()
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert!(self.same_shape(x));
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    /// `a * x + b * y`.
    pub fn lincomb(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        debug_assert!(x.same_shape(y));
        let data = x
            .data
            .iter()
            .zip(&y.data)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Self {
            n: x.n,
            d: x.d,
            data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::lincomb(1.0, self, -1.0, other)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::lincomb(1.0, self, 1.0, other)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
