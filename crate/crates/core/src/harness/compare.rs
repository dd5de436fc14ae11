use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricsLog;
use crate::error::Result;
use crate::objectives::{ProblemSpec, ReferenceSolution};
use crate::sadom::{run, Hyperparameters, RunOptions, StopRule};
use crate::topology::{GraphSequence, GraphSequenceSpec};
use crate::zeroth_order::OracleConfig;

/// Gap thresholds relative to the initial gap, used when none are given.
pub const DEFAULT_RELATIVE_GAPS: [f64; 3] = [1e-1, 1e-2, 1e-3];

#[derive(Clone, Debug, PartialEq)]
pub struct TopologyRun {
    pub name: String,
    pub graph: GraphSequenceSpec,
    pub chi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdHit {
    /// Absolute gap threshold.
    pub gap: f64,
    pub comm: Option<u64>,
    pub oracle: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologySummary {
    pub topology: String,
    pub chi: f64,
    pub thresholds: Vec<ThresholdHit>,
    #[serde(skip)]
    pub log: MetricsLog,
}

/// Counters at the first snapshot reaching each gap.
pub fn threshold_hits(log: &MetricsLog, gaps: &[f64]) -> Vec<ThresholdHit> {
    gaps.iter()
        .map(|&gap| {
            let hit = log.first_below_gap(gap);
            ThresholdHit {
                gap,
                comm: hit.map(|r| r.comm),
                oracle: hit.map(|r| r.oracle),
            }
        })
        .collect()
}

/// Runs the same problem over each topology (concurrently) until the smallest
/// relative gap is reached or the iteration cap is hit.
///
/// `hp_for` maps a topology's `χ` to the hyperparameters used with it.
#[allow(clippy::too_many_arguments)]
pub fn compare_topologies(
    spec: &ProblemSpec,
    reference: &ReferenceSolution,
    oracle: &OracleConfig,
    runs: &[TopologyRun],
    relative_gaps: &[f64],
    max_iters: u64,
    opts: &RunOptions,
    hp_for: impl Fn(f64) -> Result<Hyperparameters> + Sync,
) -> Result<Vec<TopologySummary>> {
    let x0 = opts.x0.clone().unwrap_or_else(|| vec![0.0; spec.d]);
    let initial_gap = spec.pooled_value(&x0) - reference.f_star;
    let gaps: Vec<f64> = relative_gaps.iter().map(|r| r * initial_gap).collect();
    let smallest = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let stop = StopRule {
        max_iters,
        epsilon: None,
        gap: smallest.is_finite().then_some(smallest),
    };
    runs.par_iter()
        .map(|r| {
            let hp = hp_for(r.chi)?;
            let mut seq = GraphSequence::new(r.graph.clone())?;
            let out = run(spec, &hp, &mut seq, oracle, reference, &stop, opts)?;
            Ok(TopologySummary {
                topology: r.name.clone(),
                chi: r.chi,
                thresholds: threshold_hits(&out.log, &gaps),
                log: out.log,
            })
        })
        .collect()
}
