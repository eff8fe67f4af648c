//! Deterministic parent selection, operator scheduling and promotion.

mod config;
mod promotion;
mod score;
mod select;

use core::fmt;

use serde::{Deserialize, Serialize};

pub use config::{Guards, PolicyConfig};
pub use promotion::{decide_child_promotion, decide_promotion};
pub use score::{
    coverage, exploration_bonus, novelty_score, productivity_score, recency_adjustment, recent_parents,
    score_elite, ScoreBreakdown,
};
pub use select::{
    choose_operator, complementarity, crossover_guard_blocked, plan_step, select_primary, select_secondary,
    StepPlan,
};

/// Broad kind of change an elite made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationCategory {
    Optimizer,
    Architecture,
    Schedule,
    DataBatch,
    Regularization,
    Other,
}

impl MutationCategory {
    pub const ALL: [MutationCategory; 6] = [
        MutationCategory::Optimizer,
        MutationCategory::Architecture,
        MutationCategory::Schedule,
        MutationCategory::DataBatch,
        MutationCategory::Regularization,
        MutationCategory::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MutationCategory::Optimizer => "optimizer",
            MutationCategory::Architecture => "architecture",
            MutationCategory::Schedule => "schedule",
            MutationCategory::DataBatch => "data_batch",
            MutationCategory::Regularization => "regularization",
            MutationCategory::Other => "other",
        }
    }
}

impl fmt::Display for MutationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
