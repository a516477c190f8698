use thiserror::Error;

use crate::model::Channel;

/// Failures shared by the static analyses.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("channel {0} carries unequal numbers of sends and receives")]
    Unbalanced(Channel),
    #[error("program graph has a cycle (the program deadlocks)")]
    CyclicGraph,
    #[error("programs have different process counts ({0} vs {1})")]
    ProcessCountMismatch(usize, usize),
}
