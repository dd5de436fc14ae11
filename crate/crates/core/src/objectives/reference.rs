use serde::{Deserialize, Serialize};

use super::{norm, NodeObjective, ObjectiveError, ProblemKind, ProblemSpec};
use crate::stacked::StackedVector;

pub const DEFAULT_SMOOTH_TOL: f64 = 1e-10;
pub const DEFAULT_NONSMOOTH_TOL: f64 = 1e-8;
pub const ITERATION_CAP: u64 = 10_000_000;

/// High-accuracy minimizer of `Σ_i f_i` with per-node (sub)gradients at it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub tolerance: f64,
    /// `‖Σ ∇f_i(x*)‖` for smooth kinds, the duality gap otherwise.
    pub residual: f64,
    pub iterations: u64,
    /// `∇f_i(x*)`, or the optimal subgradients for the non-smooth kind; they sum to zero.
    pub node_gradients: Vec<Vec<f64>>,
}

impl ReferenceSolution {
    pub fn stacked_x_star(&self, n: usize) -> StackedVector {
        StackedVector::broadcast(n, &self.x_star)
    }

    pub fn stacked_gradients(&self) -> StackedVector {
        StackedVector::from_blocks(&self.node_gradients)
    }
}

/// Solves to `‖∇F‖ ≤ tol` (smooth) or duality gap `≤ tol` (non-smooth).
/// `tol = None` picks the kind's default.
pub fn reference_minimizer(spec: &ProblemSpec, tol: Option<f64>) -> Result<ReferenceSolution, ObjectiveError> {
    match spec.kind {
        ProblemKind::Logreg | ProblemKind::Quadratic => smooth(spec, tol.unwrap_or(DEFAULT_SMOOTH_TOL)),
        ProblemKind::NonsmoothAbs => nonsmooth(spec, tol.unwrap_or(DEFAULT_NONSMOOTH_TOL)),
    }
}

/// Accelerated gradient descent with gradient-based restarts.
fn smooth(spec: &ProblemSpec, tol: f64) -> Result<ReferenceSolution, ObjectiveError> {
    let l_sum: f64 = spec.nodes.iter().filter_map(NodeObjective::smoothness).sum();
    let mu_sum: f64 = spec.nodes.iter().map(NodeObjective::strong_convexity).sum();
    let q = {
        let s = (l_sum / mu_sum).sqrt();
        (s - 1.0) / (s + 1.0)
    };
    let d = spec.d;
    let mut x = vec![0.0; d];
    let mut y = x.clone();
    let mut residual = f64::INFINITY;
    for it in 0..ITERATION_CAP {
        let g = spec.pooled_gradient(&y);
        residual = norm(&g);
        if residual <= tol {
            return Ok(finish_smooth(spec, y, tol, residual, it));
        }
        let next: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - gi / l_sum).collect();
        let uphill: f64 = g.iter().zip(next.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
        if uphill > 0.0 {
            y.clone_from(&next);
        } else {
            for i in 0..d {
                y[i] = next[i] + q * (next[i] - x[i]);
            }
        }
        x = next;
    }
    Err(ObjectiveError::NoConvergence {
        iterations: ITERATION_CAP,
        residual,
    })
}

fn finish_smooth(spec: &ProblemSpec, x: Vec<f64>, tol: f64, residual: f64, iterations: u64) -> ReferenceSolution {
    let node_gradients = spec.nodes.iter().map(|f| f.gradient(&x)).collect();
    ReferenceSolution {
        f_star: spec.pooled_value(&x),
        x_star: x,
        tolerance: tol,
        residual,
        iterations,
        node_gradients,
    }
}

/// Cyclic coordinate ascent on the dual of
/// `Σ_i (1/m_i) Σ_j |⟨a_ij, x⟩ − b_ij| + (Σ_i μ_i / 2)‖x‖²`,
/// with dual variables `u_ij ∈ [−1, 1]` and `x(u) = −(1/μ_tot) Σ w_ij u_ij a_ij`.
fn nonsmooth(spec: &ProblemSpec, tol: f64) -> Result<ReferenceSolution, ObjectiveError> {
    let nodes: Vec<&super::AbsLoss> = spec
        .nodes
        .iter()
        .map(|f| match f {
            NodeObjective::Abs(a) => Ok(a),
            _ => Err(ObjectiveError::BadConstants("non-smooth kind with smooth node".into())),
        })
        .collect::<Result<_, _>>()?;
    let d = spec.d;
    let mu_tot: f64 = nodes.iter().map(|f| f.mu).sum();
    let total_rows: u64 = nodes.iter().map(|f| f.len() as u64).sum();
    let max_epochs = (ITERATION_CAP / total_rows.max(1)).max(1);

    let mut u: Vec<Vec<f64>> = nodes.iter().map(|f| vec![0.0; f.len()]).collect();
    // v = Σ w u a
    let mut v = vec![0.0; d];
    let mut gap = f64::INFINITY;
    for epoch in 0..max_epochs {
        for (i, f) in nodes.iter().enumerate() {
            let w = 1.0 / f.len() as f64;
            #[allow(clippy::needless_range_loop)]
            for j in 0..f.len() {
                let a = f.row(j);
                let a_sq: f64 = a.iter().map(|t| t * t).sum();
                if a_sq == 0.0 {
                    continue;
                }
                let old = u[i][j];
                let va: f64 = v.iter().zip(a).map(|(p, q)| p * q).sum::<f64>() - w * old * a_sq;
                let new = ((-f.target(j) * mu_tot - va) / (w * a_sq)).clamp(-1.0, 1.0);
                if new != old {
                    let delta = w * (new - old);
                    for (vi, ai) in v.iter_mut().zip(a) {
                        *vi += delta * ai;
                    }
                    u[i][j] = new;
                }
            }
        }
        // recompute v from scratch to avoid drift
        v.iter_mut().for_each(|t| *t = 0.0);
        for (f, ui) in nodes.iter().zip(&u) {
            let w = 1.0 / f.len() as f64;
            for (j, uj) in ui.iter().enumerate() {
                for (vi, ai) in v.iter_mut().zip(f.row(j)) {
                    *vi += w * uj * ai;
                }
            }
        }
        let x: Vec<f64> = v.iter().map(|t| -t / mu_tot).collect();
        let primal = spec.pooled_value(&x);
        let linear: f64 = nodes
            .iter()
            .zip(&u)
            .map(|(f, ui)| ui.iter().enumerate().map(|(j, uj)| uj * f.target(j)).sum::<f64>() / f.len() as f64)
            .sum();
        let dual = -linear - 0.5 * v.iter().map(|t| t * t).sum::<f64>() / mu_tot;
        gap = primal - dual;
        if gap <= tol {
            let node_gradients = nodes
                .iter()
                .zip(&u)
                .map(|(f, ui)| {
                    let w = 1.0 / f.len() as f64;
                    let mut g: Vec<f64> = x.iter().map(|t| f.mu * t).collect();
                    for (j, uj) in ui.iter().enumerate() {
                        for (gk, ak) in g.iter_mut().zip(f.row(j)) {
                            *gk += w * uj * ak;
                        }
                    }
                    g
                })
                .collect();
            return Ok(ReferenceSolution {
                x_star: x,
                f_star: primal,
                tolerance: tol,
                residual: gap.max(0.0),
                iterations: (epoch + 1) * total_rows,
                node_gradients,
            });
        }
    }
    Err(ObjectiveError::NoConvergence {
        iterations: max_epochs * total_rows,
        residual: gap,
    })
}
