#![no_std]

//! Frontier-based genetic search over research states.
//!
//! The crate holds the pure parts of the search: the elite/frontier data
//! model, description similarity, parentage queries, the deterministic
//! selection and promotion policy, and a synthetic experiment harness
//! (genomes, landscapes, a hill-climbing baseline and the run loop).
//!
//! Everything here is `no_std` with `alloc`; file formats, replay
//! verification and the command line live in the `gear` crate.

extern crate alloc;

pub mod error;
pub mod harness;
pub mod lineage;
pub mod model;
pub mod policy;
pub mod state;
pub mod text;

pub use error::{Error, Result};
pub use model::{
    DiscardReason, EliteNode, ExperimentRecord, Frontier, Metrics, NodeId, OperatorKind, Outcome,
    PromotionDecision, Role, Step,
};
pub use policy::{MutationCategory, PolicyConfig};
pub use state::SearchState;
