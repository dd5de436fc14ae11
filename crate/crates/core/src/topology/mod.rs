//! Time-varying communication graphs and gossip matrices.

mod gossip;
mod graph;

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

pub use gossip::{
    estimate_chi, gossip_apply, gossip_from_graph, gossip_from_laplacian, laplacian, multi_gossip_apply,
    multi_gossip_chi, multi_gossip_rounds, symmetric_eigenvalues, GossipRound, MIN_POSITIVE_EIGEN,
    ZERO_EIGEN_THRESHOLD,
};
pub use graph::{build_graph, parse_sequence, write_sequence, Graph, GraphKind, GraphSequenceSpec, MAX_REGENERATIONS};

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("graph still disconnected after {attempts} attempt(s)")]
    Disconnected { attempts: u64 },
    #[error("bad graph spec: {0}")]
    BadSpec(String),
    #[error("singular topology: smallest positive Laplacian eigenvalue {lambda_min_plus:e} below 1e-12")]
    SingularTopology { lambda_min_plus: f64 },
    #[error("dimension mismatch: gossip matrix has {expected} nodes, vector has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty round sequence")]
    Empty,
    #[error("graph dump line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Lazily materialized gossip rounds of a [`GraphSequenceSpec`].
///
/// Deterministic families (ring, star, complete, alternating, fixed lists) are
/// cached by structure; geometric rounds keep only the current period.
#[derive(Debug)]
pub struct GraphSequence {
    spec: GraphSequenceSpec,
    cache: HashMap<u64, (Arc<Graph>, Arc<GossipRound>)>,
}

impl GraphSequence {
    pub fn new(spec: GraphSequenceSpec) -> Result<Self, TopologyError> {
        spec.validate()?;
        Ok(Self {
            spec,
            cache: HashMap::new(),
        })
    }

    pub fn spec(&self) -> &GraphSequenceSpec {
        &self.spec
    }

    fn cache_key(&self, round_index: u64) -> u64 {
        let period = self.spec.period_of(round_index);
        match self.spec.kind {
            GraphKind::Ring | GraphKind::Star | GraphKind::Complete => 0,
            GraphKind::RingStarAlternating => period % 2,
            GraphKind::FixedList => period % self.spec.graphs.len() as u64,
            GraphKind::Geometric => period,
        }
    }

    pub fn round(&mut self, round_index: u64) -> Result<(Arc<Graph>, Arc<GossipRound>), TopologyError> {
        let key = self.cache_key(round_index);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let g = build_graph(&self.spec, round_index)?;
        let w = gossip_from_graph(&g)?;
        if self.spec.kind == GraphKind::Geometric {
            self.cache.clear();
        }
        let entry = (Arc::new(g), Arc::new(w));
        self.cache.insert(key, entry.clone());
        Ok(entry)
    }

    pub fn gossip(&mut self, round_index: u64) -> Result<Arc<GossipRound>, TopologyError> {
        Ok(self.round(round_index)?.1)
    }
}

/// Upper bound on `χ` from a warm-up of `periods` period-aligned rounds,
/// multiplied by `safety` (1.0 means no inflation).
pub fn warmup_chi(spec: &GraphSequenceSpec, periods: u64, safety: f64) -> Result<f64, TopologyError> {
    let mut seq = GraphSequence::new(spec.clone())?;
    let step = spec.reseed_period.max(1);
    let mut rounds = Vec::new();
    for q in 0..periods.max(1) {
        rounds.push(seq.gossip(q * step)?);
    }
    Ok(estimate_chi(rounds.iter().map(Arc::as_ref))? * safety)
}

/// Radius for which the warm-up `χ` of a geometric sequence is closest to
/// `target_chi`, found by bisection on `[lo, hi]`.
pub fn tune_geometric_radius(n: usize, target_chi: f64, seed: u64, periods: u64) -> Result<(f64, f64), TopologyError> {
    let chi_at = |radius: f64| -> Result<f64, TopologyError> {
        let spec = GraphSequenceSpec::geometric(n, radius, seed);
        warmup_chi(&spec, periods, 1.0)
    };
    let (mut lo, mut hi) = (0.05_f64, 1.5_f64);
    // shrink lo until the sequence is connected at all
    while chi_at(lo).is_err() {
        lo *= 1.25;
        if lo >= hi {
            return Err(TopologyError::BadSpec(format!("no connected geometric radius for n={n}")));
        }
    }
    let mut best = (lo, chi_at(lo)?);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let chi = match chi_at(mid) {
            Ok(c) => c,
            Err(_) => {
                lo = mid;
                continue;
            }
        };
        if (chi - target_chi).abs() < (best.1 - target_chi).abs() {
            best = (mid, chi);
        }
        if chi > target_chi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}
