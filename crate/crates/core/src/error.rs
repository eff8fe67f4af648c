use alloc::string::String;

use crate::model::{NodeId, Step};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A value outside the domain of an operation (non-positive bpb, bad genome).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty frontier")]
    EmptyFrontier,

    #[error("node {0} is not a frontier member")]
    NotInFrontier(NodeId),

    #[error("node {0} is unknown to the lineage index")]
    UnknownNode(NodeId),

    #[error("node {0} already exists")]
    DuplicateNode(NodeId),

    #[error("record step {found} does not follow step {last}")]
    StepOrder { last: Step, found: Step },

    #[error("crossover parents have identical artifacts")]
    DegenerateCrossover,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("inconsistent record at step {step}: {reason}")]
    Record { step: Step, reason: String },
}
