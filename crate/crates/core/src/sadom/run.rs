use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lyapunov::{lyapunov, SaddlePoint};
use super::{sadom_step, Hyperparameters, SadomError, SadomState};
use crate::error::{Error, Result};
use crate::harness::{consensus_error, MetricsLog, MetricsRow};
use crate::objectives::{ProblemSpec, ReferenceSolution};
use crate::stacked::StackedVector;
use crate::topology::GraphSequence;
use crate::zeroth_order::{estimate_stacked, OracleConfig, Scheme};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub max_iters: u64,
    /// Stop once the criterion column drops to this level.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Stop once the gap column drops to this level.
    #[serde(default)]
    pub gap: Option<f64>,
}

impl StopRule {
    pub fn iterations(max_iters: u64) -> Self {
        Self {
            max_iters,
            epsilon: None,
            gap: None,
        }
    }

    pub fn reached(&self, row: &MetricsRow) -> bool {
        self.epsilon.is_some_and(|eps| row.criterion <= eps) || self.gap.is_some_and(|g| row.gap <= g)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub monitor_period: u64,
    /// Gossip repetitions per product (1 = plain gossip).
    pub gossip_rounds: u32,
    /// Common starting point for every node; zero when absent.
    pub x0: Option<Vec<f64>>,
    /// Fill the `seconds` column; off by default so output is reproducible.
    pub record_wall_clock: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            monitor_period: 10,
            gossip_rounds: 1,
            x0: None,
            record_wall_clock: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub log: MetricsLog,
    pub state: SadomState,
    pub converged: bool,
}

/// Exact stacked gradient, nodes evaluated in parallel.
pub fn exact_gradient(spec: &ProblemSpec, x: &StackedVector) -> StackedVector {
    let blocks: Vec<Vec<f64>> = spec
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, f)| f.gradient(x.block(i)))
        .collect();
    StackedVector::from_blocks(&blocks)
}

/// Metrics for the current state.
pub fn snapshot(
    spec: &ProblemSpec,
    hp: &Hyperparameters,
    saddle: &SaddlePoint,
    state: &SadomState,
    counters: (u64, u64),
    seconds: f64,
) -> MetricsRow {
    let dist_sq = state.x.dist_sq(&saddle.x);
    let mean = state.x.block_mean();
    let gap = spec.pooled_value(&mean) - saddle.value;
    let gap_f = spec.pooled_value(&state.x_f.block_mean()) - saddle.value;
    let criterion = 0.5 * spec.mu * dist_sq + gap_f - 0.25 * spec.mu * state.x_f.dist_sq(&saddle.x);
    let lyap = lyapunov(state, hp, saddle, spec);
    MetricsRow {
        iter: state.k,
        comm: counters.0,
        oracle: counters.1,
        seconds,
        dist_sq,
        gap,
        criterion,
        consensus: consensus_error(&state.x),
        psi_x: lyap.psi_x,
        psi_yz: lyap.psi_yz,
    }
}

/// Iterates with `W(k)` from `graphs`, recording a row at `k = 0`, every
/// `monitor_period` iterations and at the last iteration.
pub fn run(
    spec: &ProblemSpec,
    hp: &Hyperparameters,
    graphs: &mut GraphSequence,
    oracle: &OracleConfig,
    reference: &ReferenceSolution,
    stop: &StopRule,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    oracle.validate()?;
    if graphs.spec().n != spec.n {
        return Err(Error::Config(format!(
            "graph has {} nodes, problem has {}",
            graphs.spec().n,
            spec.n
        )));
    }
    let x0 = match &opts.x0 {
        Some(v) if v.len() != spec.d => {
            return Err(Error::Config(format!("x0 has length {}, expected {}", v.len(), spec.d)))
        }
        Some(v) => StackedVector::broadcast(spec.n, v),
        None => StackedVector::zeros(spec.n, spec.d),
    };
    let saddle = SaddlePoint::new(reference, spec.n, hp.nu);
    let mut state = SadomState::new(x0);
    let period = opts.monitor_period.max(1);
    let start = Instant::now();
    let clock = |start: &Instant| if opts.record_wall_clock { start.elapsed().as_secs_f64() } else { 0.0 };
    let (mut comm, mut calls) = (0u64, 0u64);
    let mut log = MetricsLog::new();

    let first = snapshot(spec, hp, &saddle, &state, (comm, calls), clock(&start));
    let mut converged = stop.reached(&first);
    log.push(first);

    while !converged && state.k < stop.max_iters {
        let w = graphs.gossip(state.k)?;
        let iter = state.k;
        let cost = sadom_step(
            &mut state,
            hp,
            &w,
            |x_g: &StackedVector| -> Result<(StackedVector, u64)> {
                let per_node = oracle.calls_per_node() * spec.n as u64;
                let g = match oracle.scheme {
                    Scheme::Exact => exact_gradient(spec, x_g),
                    _ => estimate_stacked(spec, x_g, oracle, iter)?,
                };
                Ok((g, per_node))
            },
            opts.gossip_rounds,
        )?;
        comm += cost.comm_rounds;
        calls += cost.oracle_calls;
        if !state.is_finite() {
            return Err(SadomError::Diverged { iter: state.k }.into());
        }
        if state.k.is_multiple_of(period) || state.k == stop.max_iters {
            let row = snapshot(spec, hp, &saddle, &state, (comm, calls), clock(&start));
            converged = stop.reached(&row);
            log.push(row);
        }
    }
    Ok(RunOutcome { log, state, converged })
}
