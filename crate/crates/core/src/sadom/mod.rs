//! The accelerated primal-dual iteration over time-varying gossip matrices.

mod hyper;
mod lyapunov;
mod run;
mod step;

use thiserror::Error;

use crate::topology::TopologyError;

pub use hyper::{beta_schedule, derive_hyperparameters, Hyperparameters};
pub use lyapunov::{bregman, lyapunov, LyapunovSnapshot, SaddlePoint};
pub use run::{exact_gradient, run, snapshot, RunOptions, RunOutcome, StopRule};
pub use step::{sadom_step, solve_implicit_xy, SadomState, StepCost};

#[derive(Debug, Error, PartialEq)]
pub enum SadomError {
    #[error("bad constants: {0}")]
    BadConstants(String),
    #[error("no reference solution available")]
    NoReference,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("iterates became non-finite at iteration {iter}")]
    Diverged { iter: u64 },
    #[error(transparent)]
    Topology(#[from] TopologyError),
}
