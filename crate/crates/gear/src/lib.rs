//! File formats, replay verification, reporting and sweeps on top of `gear-core`.

pub mod config;
pub mod error;
pub mod fixture;
pub mod logfile;
pub mod replay;
pub mod report;
pub mod run;
pub mod sweep;

pub use error::{GearError, Result};
