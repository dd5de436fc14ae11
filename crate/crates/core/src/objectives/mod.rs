//! Per-node objective suites and their problem constants.

mod dataset;
mod logreg;
mod nonsmooth;
mod quadratic;
mod reference;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{streams, StreamKey};
use crate::stacked::StackedVector;

pub use dataset::{parse_libsvm, partition, read_cache, synthetic_covtype_like, write_cache, Dataset};
pub use logreg::{
    calibrate_regularizer, gram_lambda_max, regularizer_for, sigmoid, softplus, LogisticLoss, LossSign,
    Regularization, POWER_ITERATIONS, POWER_TOLERANCE,
};
pub use nonsmooth::AbsLoss;
pub use quadratic::Quadratic;
pub use reference::{reference_minimizer, ReferenceSolution, DEFAULT_NONSMOOTH_TOL, DEFAULT_SMOOTH_TOL, ITERATION_CAP};

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: feature index {index} exceeds dimension {d}")]
    IndexOutOfRange { line: usize, index: usize, d: usize },
    #[error("{samples} samples cannot be split over {nodes} nodes")]
    TooFewSamples { samples: usize, nodes: usize },
    #[error("data Gram matrix has no positive eigenvalue")]
    DegenerateData,
    #[error("reference solver did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: u64, residual: f64 },
    #[error("bad problem constants: {0}")]
    BadConstants(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Logreg,
    Quadratic,
    NonsmoothAbs,
}

impl ProblemKind {
    pub fn is_smooth(self) -> bool {
        !matches!(self, ProblemKind::NonsmoothAbs)
    }
}

/// One node's local function `f_i`, with its stochastic realization
/// `F(x, ξ)` where `ξ` indexes a single local sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NodeObjective {
    Logistic(LogisticLoss),
    Quadratic(Quadratic),
    Abs(AbsLoss),
}

impl NodeObjective {
    pub fn dim(&self) -> usize {
        match self {
            NodeObjective::Logistic(f) => f.data.dim(),
            NodeObjective::Quadratic(f) => f.dim(),
            NodeObjective::Abs(f) => f.dim(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            NodeObjective::Logistic(f) => f.value(x),
            NodeObjective::Quadratic(f) => f.value(x),
            NodeObjective::Abs(f) => f.value(x),
        }
    }

    /// Gradient (sign subgradient for the non-smooth kind).
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            NodeObjective::Logistic(f) => out.copy_from_slice(&f.value_grad(x).1),
            NodeObjective::Quadratic(f) => f.gradient_into(x, out),
            NodeObjective::Abs(f) => out.copy_from_slice(&f.value_subgrad(x).1),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.gradient_into(x, &mut g);
        g
    }

    /// Number of realizations of `ξ`; deterministic functions report 1.
    pub fn sample_count(&self) -> usize {
        match self {
            NodeObjective::Logistic(f) => f.data.len(),
            NodeObjective::Quadratic(_) => 1,
            NodeObjective::Abs(f) => f.len(),
        }
    }

    pub fn sample_value(&self, x: &[f64], xi: usize) -> f64 {
        match self {
            NodeObjective::Logistic(f) => f.sample_value(x, xi),
            NodeObjective::Quadratic(f) => f.value(x),
            NodeObjective::Abs(f) => f.sample_value(x, xi),
        }
    }

    pub fn strong_convexity(&self) -> f64 {
        match self {
            NodeObjective::Logistic(f) => f.r,
            NodeObjective::Quadratic(f) => f.lambda_min(),
            NodeObjective::Abs(f) => f.mu,
        }
    }

    /// Gradient Lipschitz constant; `None` for the non-smooth kind.
    pub fn smoothness(&self) -> Option<f64> {
        match self {
            NodeObjective::Logistic(f) => Some(f.smoothness()),
            NodeObjective::Quadratic(f) => Some(f.lambda_max()),
            NodeObjective::Abs(_) => None,
        }
    }

    /// Bound on the Lipschitz constant of every `F(·, ξ)` on the origin ball
    /// of the given radius.
    pub fn lipschitz_value(&self, radius: f64) -> f64 {
        match self {
            NodeObjective::Logistic(f) => f.data.max_row_norm() + f.r * radius,
            NodeObjective::Quadratic(f) => f.lambda_max() * (radius + norm(f.center())),
            NodeObjective::Abs(f) => f.max_row_norm() + f.mu * radius,
        }
    }

    /// Bound on `|F(x, ξ)|` on the origin ball of the given radius.
    pub fn value_bound(&self, radius: f64) -> f64 {
        match self {
            NodeObjective::Logistic(f) => {
                softplus(f.data.max_row_norm() * radius) + 0.5 * f.r * radius * radius
            }
            NodeObjective::Quadratic(f) => {
                let span = radius + norm(f.center());
                0.5 * f.lambda_max() * span * span
            }
            NodeObjective::Abs(f) => {
                f.max_row_norm() * radius + f.max_abs_target() + 0.5 * f.mu * radius * radius
            }
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The objective suite: `n` local functions on `R^d` and their constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub n: usize,
    pub d: usize,
    /// Strong convexity shared by every `f_i`.
    pub mu: f64,
    /// `L` (max over nodes) for smooth kinds.
    pub lipschitz_grad: Option<f64>,
    /// `M₂` on the feasible ball, once a radius is set.
    pub lipschitz_value: Option<f64>,
    /// `G` on the feasible ball, once a radius is set.
    pub value_bound: Option<f64>,
    pub feasible_radius: Option<f64>,
    pub nodes: Vec<NodeObjective>,
}

impl ProblemSpec {
    pub fn from_nodes(kind: ProblemKind, nodes: Vec<NodeObjective>) -> Result<Self, ObjectiveError> {
        let n = nodes.len();
        if n == 0 {
            return Err(ObjectiveError::BadConstants("no nodes".into()));
        }
        let d = nodes[0].dim();
        if nodes.iter().any(|f| f.dim() != d) {
            return Err(ObjectiveError::Shape("nodes disagree on dimension".into()));
        }
        let mu = nodes.iter().map(NodeObjective::strong_convexity).fold(f64::INFINITY, f64::min);
        if mu.is_nan() || mu <= 0.0 {
            return Err(ObjectiveError::BadConstants(format!("strong convexity must be positive, got {mu}")));
        }
        let lipschitz_grad = if kind.is_smooth() {
            let l = nodes
                .iter()
                .filter_map(NodeObjective::smoothness)
                .fold(0.0, f64::max);
            Some(l.max(mu))
        } else {
            None
        };
        Ok(Self {
            kind,
            n,
            d,
            mu,
            lipschitz_grad,
            lipschitz_value: None,
            value_bound: None,
            feasible_radius: None,
            nodes,
        })
    }

    /// Logistic regression on pre-partitioned node data with regularizer `r`.
    pub fn logistic(parts: Vec<Dataset>, r: f64, sign: LossSign) -> Result<Self, ObjectiveError> {
        let nodes = parts
            .into_iter()
            .map(|data| NodeObjective::Logistic(LogisticLoss::new(data, r, sign)))
            .collect();
        Self::from_nodes(ProblemKind::Logreg, nodes)
    }

    /// Pooled data partitioned over `n` nodes, regularized to condition number
    /// `kappa` (pooled).
    pub fn logistic_calibrated(pooled: &Dataset, n: usize, kappa: f64, sign: LossSign) -> Result<(Self, Regularization), ObjectiveError> {
        let reg = calibrate_regularizer(pooled, kappa)?;
        let parts = partition(pooled, n)?;
        Ok((Self::logistic(parts, reg.r, sign)?, reg))
    }

    /// Random quadratics with spectra spanning `[mu, l]` on every node.
    pub fn quadratic_suite(n: usize, d: usize, mu: f64, l: f64, seed: u64) -> Result<Self, ObjectiveError> {
        if !(mu > 0.0 && l >= mu) {
            return Err(ObjectiveError::BadConstants(format!("need 0 < mu <= L, got mu={mu}, L={l}")));
        }
        let nodes = (0..n)
            .map(|i| {
                let key = StreamKey::new(seed, streams::PROBLEM_DATA).with_node(i as u64);
                NodeObjective::Quadratic(Quadratic::random(d, mu, l, key))
            })
            .collect();
        let mut spec = Self::from_nodes(ProblemKind::Quadratic, nodes)?;
        spec.mu = mu;
        spec.lipschitz_grad = Some(l);
        Ok(spec)
    }

    /// Random absolute-loss regression, `m` rows per node, shared ground truth.
    pub fn nonsmooth_suite(n: usize, d: usize, m: usize, mu: f64, seed: u64) -> Result<Self, ObjectiveError> {
        if mu.is_nan() || mu <= 0.0 {
            return Err(ObjectiveError::BadConstants(format!("mu must be positive, got {mu}")));
        }
        let mut rng = StreamKey::new(seed, streams::PROBLEM_DATA).with_index(u64::MAX).rng();
        let x_true: Vec<f64> = (0..d)
            .map(|_| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng))
            .collect();
        let nodes = (0..n)
            .map(|i| {
                let key = StreamKey::new(seed, streams::PROBLEM_DATA).with_node(i as u64);
                NodeObjective::Abs(AbsLoss::random(d, m, mu, &x_true, key))
            })
            .collect();
        Self::from_nodes(ProblemKind::NonsmoothAbs, nodes)
    }

    /// Sets `M₂` and `G` for the origin ball of radius `radius`.
    pub fn set_feasible_radius(&mut self, radius: f64) {
        self.feasible_radius = Some(radius);
        self.lipschitz_value = Some(self.nodes.iter().map(|f| f.lipschitz_value(radius)).fold(0.0, f64::max));
        self.value_bound = Some(self.nodes.iter().map(|f| f.value_bound(radius)).fold(0.0, f64::max));
    }

    /// Radius `‖x*‖ + 2‖x⁰ − x*‖`: the origin ball containing the ball of radius
    /// `2‖x⁰ − x*‖` around the minimizer.
    pub fn default_feasible_radius(x0: &[f64], x_star: &[f64]) -> f64 {
        let gap: Vec<f64> = x0.iter().zip(x_star).map(|(a, b)| a - b).collect();
        norm(x_star) + 2.0 * norm(&gap)
    }

    /// `Σ_i f_i(point)`.
    pub fn pooled_value(&self, point: &[f64]) -> f64 {
        self.nodes.iter().map(|f| f.value(point)).sum()
    }

    /// `Σ_i ∇f_i(point)`.
    pub fn pooled_gradient(&self, point: &[f64]) -> Vec<f64> {
        let mut total = vec![0.0; self.d];
        let mut g = vec![0.0; self.d];
        for f in &self.nodes {
            f.gradient_into(point, &mut g);
            for (t, gi) in total.iter_mut().zip(&g) {
                *t += gi;
            }
        }
        total
    }

    /// `F(x) = Σ_i f_i(x_i)` on a stacked vector.
    pub fn stacked_value(&self, x: &StackedVector) -> f64 {
        self.nodes.iter().enumerate().map(|(i, f)| f.value(x.block(i))).sum()
    }

    pub fn stacked_gradient(&self, x: &StackedVector) -> StackedVector {
        let mut out = StackedVector::zeros(self.n, self.d);
        for (i, f) in self.nodes.iter().enumerate() {
            f.gradient_into(x.block(i), out.block_mut(i));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_constants() {
        let q = ProblemSpec::quadratic_suite(4, 3, 1.0, 4.0, 2).unwrap();
        assert_eq!((q.n, q.d, q.mu, q.lipschitz_grad), (4, 3, 1.0, Some(4.0)));
        let ns = ProblemSpec::nonsmooth_suite(3, 5, 7, 0.1, 2).unwrap();
        assert_eq!(ns.kind, ProblemKind::NonsmoothAbs);
        assert_eq!(ns.lipschitz_grad, None);
        assert_eq!(ns.nodes[0].sample_count(), 7);
        assert!(ProblemSpec::quadratic_suite(2, 2, 2.0, 1.0, 0).is_err());
    }

    #[test]
    fn feasible_radius_sets_bounds() {
        let mut ns = ProblemSpec::nonsmooth_suite(3, 4, 5, 0.5, 1).unwrap();
        ns.set_feasible_radius(2.0);
        let m2 = ns.lipschitz_value.unwrap();
        let expected = ns
            .nodes
            .iter()
            .map(|f| match f {
                NodeObjective::Abs(a) => a.max_row_norm() + 1.0,
                _ => unreachable!(),
            })
            .fold(0.0, f64::max);
        assert!((m2 - expected).abs() < 1e-15);
        assert!(ns.value_bound.unwrap() > 0.0);
    }

    #[test]
    fn stacked_value_sums_nodes() {
        let q = ProblemSpec::quadratic_suite(3, 2, 1.0, 2.0, 5).unwrap();
        let x = StackedVector::broadcast(3, &[0.3, -0.2]);
        assert!((q.stacked_value(&x) - q.pooled_value(&[0.3, -0.2])).abs() < 1e-14);
        let g = q.stacked_gradient(&x);
        let pooled = q.pooled_gradient(&[0.3, -0.2]);
        for (a, b) in g.block_sum().iter().zip(&pooled) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
