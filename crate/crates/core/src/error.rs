use thiserror::Error;

use crate::objectives::ObjectiveError;
use crate::sadom::SadomError;
use crate::topology::TopologyError;
use crate::zeroth_order::OracleError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-level error; each subsystem keeps its own enum.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Sadom(#[from] SadomError),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
