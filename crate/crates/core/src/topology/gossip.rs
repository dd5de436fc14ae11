use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{Graph, TopologyError};
use crate::rng::StreamKey;
use crate::stacked::StackedVector;

/// Eigenvalues below this are treated as zero.
pub const ZERO_EIGEN_THRESHOLD: f64 = 1e-9;
/// Smallest admissible positive Laplacian eigenvalue.
pub const MIN_POSITIVE_EIGEN: f64 = 1e-12;

/// Gossip matrix of one round together with the spectral data of its source
/// Laplacian.
#[derive(Clone, Debug)]
pub struct GossipRound {
    w: DMatrix<f64>,
    /// Nonzero entries per row in ascending column order.
    rows: Vec<Vec<(usize, f64)>>,
    pub lambda_max: f64,
    pub lambda_min_plus: f64,
    pub chi_local: f64,
}

pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut lap = DMatrix::zeros(n, n);
    for (a, b) in g.edges() {
        lap[(a, b)] = -1.0;
        lap[(b, a)] = -1.0;
        lap[(a, a)] += 1.0;
        lap[(b, b)] += 1.0;
    }
    lap
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `W = L / λ_max(L)`.
pub fn gossip_from_laplacian(lap: &DMatrix<f64>) -> Result<GossipRound, TopologyError> {
    let n = lap.nrows();
    if n != lap.ncols() || n < 2 {
        return Err(TopologyError::BadSpec(format!("laplacian must be square with n >= 2, got {}x{}", n, lap.ncols())));
    }
    let ev = symmetric_eigenvalues(lap);
    let lambda_max = *ev.last().expect("n >= 2");
    let zeros = ev.iter().filter(|v| v.abs() <= ZERO_EIGEN_THRESHOLD).count();
    let lambda_min_plus = ev
        .iter()
        .copied()
        .find(|v| *v > ZERO_EIGEN_THRESHOLD)
        .unwrap_or(0.0);
    if lambda_min_plus < MIN_POSITIVE_EIGEN {
        return Err(TopologyError::SingularTopology { lambda_min_plus });
    }
    if zeros > 1 {
        // kernel larger than the consensus direction
        return Err(TopologyError::Disconnected { attempts: 1 });
    }
    let w = lap / lambda_max;
    Ok(GossipRound::from_parts(w, lambda_max, lambda_min_plus))
}

pub fn gossip_from_graph(g: &Graph) -> Result<GossipRound, TopologyError> {
    gossip_from_laplacian(&laplacian(g))
}

impl GossipRound {
    fn from_parts(w: DMatrix<f64>, lambda_max: f64, lambda_min_plus: f64) -> Self {
        let n = w.nrows();
        let rows = (0..n)
            .map(|i| (0..n).filter(|&j| w[(i, j)] != 0.0).map(|j| (j, w[(i, j)])).collect())
            .collect();
        Self {
            w,
            rows,
            lambda_max,
            lambda_min_plus,
            chi_local: lambda_max / lambda_min_plus,
        }
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Checks every gossip-matrix property against `graph` (sparsity) and
    /// `samples` random zero-sum vectors (contraction). Returns the list of
    /// violations, empty when all hold.
    pub fn violations(&self, graph: Option<&Graph>, samples: usize, key: StreamKey) -> Vec<String> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if (self.w[(i, j)] - self.w[(j, i)]).abs() > 1e-12 {
                    out.push(format!("asymmetric at ({i}, {j})"));
                }
            }
        }
        let ev = symmetric_eigenvalues(&self.w);
        if ev[0] < -1e-9 {
            out.push(format!("not PSD: smallest eigenvalue {}", ev[0]));
        }
        if let Some(g) = graph {
            for i in 0..n {
                for j in 0..n {
                    if i != j && !g.has_edge(i, j) && self.w[(i, j)] != 0.0 {
                        out.push(format!("nonzero weight on non-edge ({i}, {j})"));
                    }
                }
            }
        }
        for i in 0..n {
            let s: f64 = self.w.row(i).iter().sum();
            if s.abs() > 1e-9 {
                out.push(format!("row {i} sums to {s}"));
            }
        }
        let factor = 1.0 - 1.0 / self.chi_local;
        let mut rng = key.rng();
        for s in 0..samples {
            let raw: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let v = StackedVector::from_flat(n, 1, raw).project_zero_sum();
            let wv = gossip_apply(self, &v).expect("shape matches");
            let lhs = wv.dist_sq(&v);
            let rhs = factor * v.norm_sq() + 1e-9;
            if lhs > rhs {
                out.push(format!("contraction violated on sample {s}: {lhs} > {rhs}"));
            }
        }
        out
    }
}

/// Block-wise `(W ⊗ I_d) v` without forming the `nd × nd` matrix.
///
/// Each output block sums its row in ascending column order, so the result is
/// bitwise independent of how rows are spread over threads.
pub fn gossip_apply(w: &GossipRound, v: &StackedVector) -> Result<StackedVector, TopologyError> {
    let n = w.n();
    if v.n() != n {
        return Err(TopologyError::DimensionMismatch {
            expected: n,
            found: v.n(),
        });
    }
    let d = v.d();
    let mut out = StackedVector::zeros(n, d);
    let row_op = |(i, block): (usize, &mut [f64])| {
        for &(j, wij) in &w.rows[i] {
            for (o, x) in block.iter_mut().zip(v.block(j)) {
                *o += wij * x;
            }
        }
    };
    if d == 0 {
        return Ok(out);
    }
    if n * d >= 4096 {
        out.as_mut_slice().par_chunks_mut(d).enumerate().for_each(row_op);
    } else {
        out.as_mut_slice().chunks_mut(d).enumerate().for_each(row_op);
    }
    Ok(out)
}

/// `(I - (I - W)^T) v`, computed with `T` successive gossip applications.
///
/// With `T = ⌈χ ln 2⌉` the effective operator has condition number at most 2
/// on the zero-sum subspace.
pub fn multi_gossip_apply(w: &GossipRound, v: &StackedVector, rounds: u32) -> Result<StackedVector, TopologyError> {
    if rounds <= 1 {
        return gossip_apply(w, v);
    }
    let mut residual = v.clone();
    for _ in 0..rounds {
        let wr = gossip_apply(w, &residual)?;
        residual.axpy(-1.0, &wr);
    }
    Ok(v.sub(&residual))
}

/// Number of gossip repetitions `⌈χ ln 2⌉` (at least one).
pub fn multi_gossip_rounds(chi: f64) -> u32 {
    (chi * std::f64::consts::LN_2).ceil().max(1.0) as u32
}

/// Condition bound of `I - (I - W)^T` given the bound `chi` for `W`:
/// `1 / (1 - (1 - 1/chi)^T)`.
pub fn multi_gossip_chi(chi: f64, rounds: u32) -> f64 {
    if rounds <= 1 {
        return chi;
    }
    1.0 / (1.0 - (1.0 - 1.0 / chi).powi(rounds as i32))
}

/// `max_q χ_q` over the given rounds.
pub fn estimate_chi<'a>(rounds: impl IntoIterator<Item = &'a GossipRound>) -> Result<f64, TopologyError> {
    rounds
        .into_iter()
        .map(|r| r.chi_local)
        .reduce(f64::max)
        .ok_or(TopologyError::Empty)
}
