//! Stochastic accelerated decentralized optimization over time-varying graphs.
//!
//! The crate is organized around the pieces of a decentralized run:
//!
//! - [`topology`]: graph sequences, gossip matrices and their spectral data,
//!   and the block-wise `(W ⊗ I_d)` action on stacked vectors.
//! - [`objectives`]: per-node objective suites (logistic regression,
//!   quadratics, non-smooth absolute loss), LIBSVM ingestion, partitioning and
//!   reference minimizers.
//! - [`zeroth_order`]: sphere/ball sampling, the smoothed surrogate, the
//!   gradient-free estimators and their variance/bias bounds.
//! - [`sadom`]: hyperparameters, the accelerated primal-dual iteration,
//!   Lyapunov monitoring and the run loop.
//! - [`harness`]: metrics, CSV export, complexity budgets and topology
//!   comparisons.
//! - [`config`]: the JSON run configuration shared with the CLI.
//!
//! Every random draw is a pure function of a [`rng::StreamKey`], so results do
//! not depend on evaluation order or on the number of worker threads.

pub mod config;
pub mod error;
pub mod harness;
pub mod objectives;
pub mod rng;
pub mod sadom;
pub mod stacked;
pub mod topology;
pub mod zeroth_order;

pub use error::{Error, Result};
pub use harness::{BudgetReport, MetricsLog, MetricsRow};
pub use objectives::{Dataset, ProblemKind, ProblemSpec, ReferenceSolution};
pub use sadom::{Hyperparameters, LyapunovSnapshot, SadomState};
pub use stacked::StackedVector;
pub use topology::{Graph, GraphKind, GraphSequenceSpec, GossipRound};
pub use zeroth_order::{NoiseKind, OracleConfig, Scheme};
