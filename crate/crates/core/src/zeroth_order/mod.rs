//! Gradient-free oracles: randomized smoothing and the two-point / one-point
//! estimators, with bounded adversarial noise and minibatching.

mod sampling;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objectives::{NodeObjective, ProblemSpec};
use crate::rng::{streams, StreamKey};
use crate::stacked::StackedVector;

pub use sampling::{sample_unit_ball, sample_unit_sphere, smoothed_value};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("the exact scheme has no gradient-free estimator")]
    SchemeMismatch,
    #[error("missing problem constant: {0}")]
    MissingConstant(&'static str),
    #[error("bad oracle config: {0}")]
    BadConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Exact,
    Tpf,
    OpfSingle,
    OpfDouble,
}

impl Scheme {
    /// Function evaluations per direction.
    pub fn evaluations(self) -> u64 {
        match self {
            Scheme::Exact => 0,
            Scheme::OpfSingle => 1,
            Scheme::Tpf | Scheme::OpfDouble => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Exact => "exact",
            Scheme::Tpf => "tpf",
            Scheme::OpfSingle => "opf_single",
            Scheme::OpfDouble => "opf_double",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Zero,
    WorstCaseSign,
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub scheme: Scheme,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default)]
    pub noise_bound: f64,
    #[serde(default)]
    pub noise_kind: NoiseKind,
    #[serde(default)]
    pub seed: u64,
}

fn default_batch() -> usize {
    1
}

impl OracleConfig {
    pub fn exact() -> Self {
        Self {
            scheme: Scheme::Exact,
            gamma: 0.0,
            batch: 1,
            noise_bound: 0.0,
            noise_kind: NoiseKind::Zero,
            seed: 0,
        }
    }

    pub fn new(scheme: Scheme, gamma: f64, batch: usize, seed: u64) -> Self {
        Self {
            scheme,
            gamma,
            batch,
            noise_bound: 0.0,
            noise_kind: NoiseKind::Zero,
            seed,
        }
    }

    pub fn with_noise(mut self, kind: NoiseKind, bound: f64) -> Self {
        self.noise_kind = kind;
        self.noise_bound = bound;
        self
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.scheme != Scheme::Exact && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(OracleError::BadConfig(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.batch == 0 {
            return Err(OracleError::BadConfig("batch must be at least 1".into()));
        }
        if self.noise_bound.is_nan() || self.noise_bound < 0.0 {
            return Err(OracleError::BadConfig(format!("noise bound must be non-negative, got {}", self.noise_bound)));
        }
        Ok(())
    }

    /// Oracle calls charged to one node per iteration.
    pub fn calls_per_node(&self) -> u64 {
        match self.scheme {
            // one exact (sub)gradient per node
            Scheme::Exact => 1,
            s => s.evaluations() * self.batch as u64,
        }
    }
}

/// Which of the two evaluations a noise draw belongs to.
#[derive(Clone, Copy)]
enum Side {
    Plus,
    Minus,
}

fn noise(cfg: &OracleConfig, e: &[f64], side: Side, key: StreamKey) -> f64 {
    let bound = cfg.noise_bound;
    match cfg.noise_kind {
        NoiseKind::Zero => 0.0,
        NoiseKind::WorstCaseSign => {
            // adversary direction (1, …, 1)/√d; only its sign pattern matters
            let s: f64 = e.iter().sum();
            let dir = if s >= 0.0 { 1.0 } else { -1.0 };
            match side {
                Side::Plus => bound * dir,
                Side::Minus => -bound * dir,
            }
        }
        NoiseKind::Uniform => {
            let stream = match side {
                Side::Plus => streams::NOISE_PLUS,
                Side::Minus => streams::NOISE_MINUS,
            };
            if bound == 0.0 {
                0.0
            } else {
                key.with_stream(stream).rng().random_range(-bound..=bound)
            }
        }
    }
}

fn draw_xi(f: &NodeObjective, key: StreamKey) -> usize {
    let count = f.sample_count();
    if count <= 1 {
        0
    } else {
        key.rng().random_range(0..count)
    }
}

/// One direction's estimate for one node; `key` fixes `(seed, iter, node, b)`.
pub fn single_estimate(f: &NodeObjective, x: &[f64], cfg: &OracleConfig, key: StreamKey) -> Result<Vec<f64>, OracleError> {
    let d = x.len();
    let e = sample_unit_sphere(d, key.with_stream(streams::DIRECTION));
    let gamma = cfg.gamma;
    let shifted = |sign: f64| -> Vec<f64> { x.iter().zip(&e).map(|(xi, ei)| xi + sign * gamma * ei).collect() };
    let xi_plus = draw_xi(f, key.with_stream(streams::XI_PLUS));
    let coef = match cfg.scheme {
        Scheme::Exact => return Err(OracleError::SchemeMismatch),
        Scheme::Tpf | Scheme::OpfDouble => {
            let xi_minus = match cfg.scheme {
                Scheme::Tpf => xi_plus,
                _ => draw_xi(f, key.with_stream(streams::XI_MINUS)),
            };
            let fp = f.sample_value(&shifted(1.0), xi_plus) + noise(cfg, &e, Side::Plus, key);
            let fm = f.sample_value(&shifted(-1.0), xi_minus) + noise(cfg, &e, Side::Minus, key);
            d as f64 / (2.0 * gamma) * (fp - fm)
        }
        Scheme::OpfSingle => {
            let fp = f.sample_value(&shifted(1.0), xi_plus) + noise(cfg, &e, Side::Plus, key);
            d as f64 / gamma * fp
        }
    };
    Ok(e.iter().map(|t| coef * t).collect())
}

/// Fixed-shape pairwise summation, independent of how terms were produced.
fn pairwise_sum(terms: &[Vec<f64>]) -> Vec<f64> {
    match terms.len() {
        0 => Vec::new(),
        1 => terms[0].clone(),
        len => {
            let (a, b) = terms.split_at(len / 2);
            let mut left = pairwise_sum(a);
            for (l, r) in left.iter_mut().zip(pairwise_sum(b)) {
                *l += r;
            }
            left
        }
    }
}

const PARALLEL_BATCH: usize = 32;

/// Batch-averaged estimate at node `node` and iteration `iter`.
pub fn estimate_gradient(f: &NodeObjective, x: &[f64], cfg: &OracleConfig, iter: u64, node: usize) -> Result<Vec<f64>, OracleError> {
    if cfg.scheme == Scheme::Exact {
        return Err(OracleError::SchemeMismatch);
    }
    cfg.validate()?;
    let base = StreamKey::new(cfg.seed, streams::DIRECTION).with_iter(iter).with_node(node as u64);
    let one = |b: usize| single_estimate(f, x, cfg, base.with_index(b as u64));
    let terms: Vec<Vec<f64>> = if cfg.batch >= PARALLEL_BATCH {
        (0..cfg.batch).into_par_iter().map(one).collect::<Result<_, _>>()?
    } else {
        (0..cfg.batch).map(one).collect::<Result<_, _>>()?
    };
    let mut g = pairwise_sum(&terms);
    let inv = 1.0 / cfg.batch as f64;
    g.iter_mut().for_each(|t| *t *= inv);
    Ok(g)
}

/// Estimates for every node block of `x`, evaluated in parallel.
pub fn estimate_stacked(spec: &ProblemSpec, x: &StackedVector, cfg: &OracleConfig, iter: u64) -> Result<StackedVector, OracleError> {
    let blocks: Vec<Vec<f64>> = spec
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, f)| estimate_gradient(f, x.block(i), cfg, iter, i))
        .collect::<Result<_, _>>()?;
    Ok(StackedVector::from_blocks(&blocks))
}

/// `σ̃²` for the configured scheme, from `d`, `M₂` and (one-point single) `G`.
pub fn variance_bound_with(cfg: &OracleConfig, d: usize, m2: Option<f64>, g: Option<f64>) -> Result<f64, OracleError> {
    let d = d as f64;
    let (gamma, noise) = (cfg.gamma, cfg.noise_bound);
    let need_m2 = || m2.ok_or(OracleError::MissingConstant("M2"));
    match cfg.scheme {
        Scheme::Exact => Err(OracleError::SchemeMismatch),
        Scheme::Tpf => {
            let m2 = need_m2()?;
            let noise_term = if noise == 0.0 { 0.0 } else { d * noise * noise / (2f64.sqrt() * gamma * gamma) };
            Ok(2.0 * 2f64.sqrt() * d * (m2 * m2 + noise_term))
        }
        Scheme::OpfSingle => {
            let g = g.ok_or(OracleError::MissingConstant("G"))?;
            Ok(2.0 * d * d * (g * g + noise * noise) / (gamma * gamma))
        }
        Scheme::OpfDouble => {
            let m2 = need_m2()?;
            let noise_term = if noise == 0.0 { 0.0 } else { 2.0 * d * noise * noise / (gamma * gamma) };
            Ok(3.0 * d * d * (3.0 * m2 * m2 + noise_term))
        }
    }
}

pub fn variance_bound(cfg: &OracleConfig, spec: &ProblemSpec) -> Result<f64, OracleError> {
    variance_bound_with(cfg, spec.d, spec.lipschitz_value, spec.value_bound)
}

/// `Δ = d Δ̃ / γ`.
pub fn bias_bound(cfg: &OracleConfig, d: usize) -> f64 {
    if cfg.noise_bound == 0.0 {
        0.0
    } else {
        d as f64 * cfg.noise_bound / cfg.gamma
    }
}

/// `γ = ε / (2M₂)` and the resulting gradient Lipschitz constant `√d M₂ / γ`.
pub fn gamma_for_accuracy(epsilon: f64, m2: f64, d: usize) -> (f64, f64) {
    let gamma = epsilon / (2.0 * m2);
    (gamma, (d as f64).sqrt() * m2 / gamma)
}

/// Monte-Carlo statistics of an estimator at a fixed point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStats {
    pub mean: Vec<f64>,
    /// `E‖g‖²`.
    pub second_moment: f64,
    pub second_moment_std_err: f64,
    /// `‖E g − target‖`.
    pub bias_norm: f64,
    /// Norm of the per-coordinate standard errors of the mean.
    pub mean_std_err: f64,
    pub sample_count: usize,
}

/// Draws `samples` independent estimates (iteration index = sample index) and
/// compares their mean to `target`.
pub fn estimator_stats(f: &NodeObjective, x: &[f64], cfg: &OracleConfig, samples: usize, target: &[f64]) -> Result<EstimatorStats, OracleError> {
    assert!(samples >= 2, "need at least two samples");
    let d = x.len();
    let draws: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|k| estimate_gradient(f, x, cfg, k, 0))
        .collect::<Result<_, _>>()?;
    let n = samples as f64;
    let mean: Vec<f64> = (0..d).map(|i| draws.iter().map(|g| g[i]).sum::<f64>() / n).collect();
    let sq: Vec<f64> = draws.iter().map(|g| g.iter().map(|t| t * t).sum()).collect();
    let second_moment = sq.iter().sum::<f64>() / n;
    let sq_var = sq.iter().map(|s| (s - second_moment).powi(2)).sum::<f64>() / (n - 1.0);
    let mean_var: f64 = (0..d)
        .map(|i| draws.iter().map(|g| (g[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1.0) / n)
        .sum();
    let bias_norm = mean.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(EstimatorStats {
        mean,
        second_moment,
        second_moment_std_err: (sq_var / n).sqrt(),
        bias_norm,
        mean_std_err: mean_var.sqrt(),
        sample_count: samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{AbsLoss, Quadratic};

    fn linear_first_coordinate() -> NodeObjective {
        // |x₁ − (−100)| = x₁ + 100 near the origin, μ = 0
        NodeObjective::Abs(AbsLoss::new(2, vec![1.0, 0.0], vec![-100.0], 0.0))
    }

    #[test]
    fn tpf_on_linear_function_is_exact_directional_difference() {
        let f = linear_first_coordinate();
        let cfg = OracleConfig::new(Scheme::Tpf, 0.1, 1, 0);
        let key = StreamKey::new(0, streams::DIRECTION);
        let g = single_estimate(&f, &[0.0, 0.0], &cfg, key).unwrap();
        let e = sample_unit_sphere(2, key);
        // (d/(2γ))·2γ e₁ · e = d e₁ e
        assert!((g[0] - 2.0 * e[0] * e[0]).abs() < 1e-9);
        assert!((g[1] - 2.0 * e[0] * e[1]).abs() < 1e-9);
    }

    #[test]
    fn exact_scheme_is_rejected() {
        let f = linear_first_coordinate();
        let err = estimate_gradient(&f, &[0.0, 0.0], &OracleConfig::exact(), 0, 0).unwrap_err();
        assert_eq!(err, OracleError::SchemeMismatch);
    }

    #[test]
    fn variance_bound_values() {
        let tpf = OracleConfig::new(Scheme::Tpf, 0.5, 1, 0);
        assert!((variance_bound_with(&tpf, 4, Some(1.0), None).unwrap() - 8.0 * 2f64.sqrt()).abs() < 1e-12);
        let single = OracleConfig::new(Scheme::OpfSingle, 1.0, 1, 0);
        assert_eq!(variance_bound_with(&single, 2, None, Some(1.0)).unwrap(), 8.0);
        assert_eq!(
            variance_bound_with(&single, 2, Some(1.0), None),
            Err(OracleError::MissingConstant("G"))
        );
        let double = OracleConfig::new(Scheme::OpfDouble, 0.3, 1, 0);
        assert_eq!(variance_bound_with(&double, 1, Some(1.0), None).unwrap(), 9.0);
    }

    #[test]
    fn bias_and_gamma_formulas() {
        let cfg = OracleConfig::new(Scheme::Tpf, 1e-3, 1, 0).with_noise(NoiseKind::Uniform, 1e-6);
        assert!((bias_bound(&cfg, 10) - 0.01).abs() < 1e-15);
        let doubled = OracleConfig { gamma: 2e-3, ..cfg.clone() };
        assert!((bias_bound(&doubled, 10) - 0.005).abs() < 1e-15);
        assert_eq!(bias_bound(&OracleConfig::new(Scheme::Tpf, 1e-3, 1, 0), 10), 0.0);
        let (gamma, _) = gamma_for_accuracy(0.01, 5.0, 3);
        assert!((gamma - 0.001).abs() < 1e-18);
        assert_eq!(gamma_for_accuracy(10.0, 5.0, 4), (1.0, 10.0));
    }

    #[test]
    fn batch_average_is_keyed() {
        let f = NodeObjective::Quadratic(Quadratic::isotropic(vec![1.0, -1.0, 0.5]));
        let cfg = OracleConfig::new(Scheme::OpfDouble, 0.01, 40, 7).with_noise(NoiseKind::Uniform, 1e-3);
        let a = estimate_gradient(&f, &[0.2, 0.1, 0.0], &cfg, 3, 1).unwrap();
        let b = estimate_gradient(&f, &[0.2, 0.1, 0.0], &cfg, 3, 1).unwrap();
        assert_eq!(a, b);
        let c = estimate_gradient(&f, &[0.2, 0.1, 0.0], &cfg, 4, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn calls_per_node() {
        assert_eq!(OracleConfig::new(Scheme::Tpf, 0.1, 3, 0).calls_per_node(), 6);
        assert_eq!(OracleConfig::new(Scheme::OpfSingle, 0.1, 3, 0).calls_per_node(), 3);
        assert_eq!(OracleConfig::exact().calls_per_node(), 1);
    }
}
