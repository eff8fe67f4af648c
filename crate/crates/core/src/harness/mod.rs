//! Synthetic experiment executors and the run loop.
//!
//! A [`Genome`] stands in for a training-code commit: one integer level per
//! knob. A [`LandscapeSpec`] turns a genome into metrics (or a crash), and
//! [`Engine`] drives either the frontier policy or the single-incumbent
//! hill climber over it.

mod genome;
mod hillclimb;
mod landscape;
mod rng;
mod run;

pub use genome::{crossover_genome, describe_change, mutate_genome, Genome, Knob};
pub use hillclimb::{hillclimb_step, HillclimbStep};
pub use landscape::{evaluate, Condition, CrashRule, Evaluation, Interaction, LandscapeSpec};
pub use rng::{stream, Purpose, StepRng};
pub use run::{root_node, run_search, Engine, PolicyKind, RootInfo, RunConfig, RunLog};
