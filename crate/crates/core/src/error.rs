//! Errors shared by the solvers.

use thiserror::Error;

use crate::instance::InstanceError;
use crate::matching::MatchingError;
use crate::smallip::IpError;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("no stable matching exists")]
    NoStable,
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("infeasible profile: {0}")]
    InfeasibleProfile(String),
    #[error("inconsistent count matrix: {0}")]
    InconsistentMatrix(String),
    #[error("realization hypothesis violated: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Ip(#[from] IpError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
}
