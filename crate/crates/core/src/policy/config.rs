use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Step;

/// Toggles for the crossover and primary-selection repairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Guards {
    /// No crossover until two non-root elites exist.
    pub block_until_two_nonbaseline: bool,
    /// Drop secondary candidates that are a direct parent or child of the primary.
    pub skip_ancestor_pairs: bool,
    /// Extend the ancestry exclusion to any number of hops.
    pub multi_hop_ancestry: bool,
    /// Walk secondary parent pointers during the ancestry check.
    pub follow_secondary_ancestry: bool,
    /// No crossover when every admissible partner was already paired with the primary.
    pub block_when_no_untried_pair: bool,
    /// Feed the current best until it has been expanded `best_warmup_expansions` times.
    pub prefer_best_warmup: bool,
}

impl Guards {
    pub const fn all() -> Self {
        Guards {
            block_until_two_nonbaseline: true,
            skip_ancestor_pairs: true,
            multi_hop_ancestry: true,
            follow_secondary_ancestry: true,
            block_when_no_untried_pair: true,
            prefer_best_warmup: true,
        }
    }

    pub const fn none() -> Self {
        Guards {
            block_until_two_nonbaseline: false,
            skip_ancestor_pairs: false,
            multi_hop_ancestry: false,
            follow_secondary_ancestry: false,
            block_when_no_untried_pair: false,
            prefer_best_warmup: false,
        }
    }

    pub fn ancestry_active(&self) -> bool {
        self.skip_ancestor_pairs || self.multi_hop_ancestry
    }

    pub fn ancestry_hops(&self) -> Option<usize> {
        if self.multi_hop_ancestry {
            None
        } else {
            Some(1)
        }
    }
}

impl Default for Guards {
    fn default() -> Self {
        Guards::all()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// Frontier population.
    pub capacity: usize,
    pub beta: f64,
    pub lambda_novelty: f64,
    pub gamma_coverage: f64,
    /// Steps after which `lambda_late` / `gamma_late` replace the early weights.
    pub exploration_phase_steps: Step,
    pub lambda_late: f64,
    pub gamma_late: f64,
    pub alpha_role_mismatch: f64,
    pub mu_pair_penalty: f64,
    pub eps_improve: f64,
    pub eps_tie: f64,
    pub lean_margin_gb: f64,
    pub diverse_jaccard_threshold: f64,
    pub diverse_slack: f64,
    /// Applied to the primary parent of the previous non-crash experiment.
    pub recency_penalty_1: f64,
    /// Applied to the primary parent of the one before that.
    pub recency_penalty_2: f64,
    /// Bonus for never-used elites created within the last two steps.
    pub fresh_bonus: f64,
    /// Non-crash experiments whose parents form the novelty reference set.
    pub recency_window: usize,
    pub recency_include_secondary: bool,
    pub max_consecutive_primary: usize,
    pub crossover_window: usize,
    pub distinct_parent_window: usize,
    pub min_distinct_parents: usize,
    pub best_warmup_expansions: u32,
    pub guards: Guards,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            capacity: 4,
            beta: 0.5,
            lambda_novelty: 0.3,
            gamma_coverage: 0.3,
            exploration_phase_steps: 25,
            lambda_late: 0.1,
            gamma_late: 0.1,
            alpha_role_mismatch: 0.2,
            mu_pair_penalty: 0.1,
            eps_improve: 1.5e-4,
            eps_tie: 1.2e-4,
            lean_margin_gb: 0.5,
            diverse_jaccard_threshold: 0.65,
            diverse_slack: 1.0e-3,
            recency_penalty_1: -0.2,
            recency_penalty_2: -0.05,
            fresh_bonus: 0.05,
            recency_window: 5,
            recency_include_secondary: false,
            max_consecutive_primary: 2,
            crossover_window: 4,
            distinct_parent_window: 6,
            min_distinct_parents: 3,
            best_warmup_expansions: 3,
            guards: Guards::all(),
        }
    }
}

impl PolicyConfig {
    /// Novelty and coverage weights in effect at `step`.
    pub fn weights_at(&self, step: Step) -> (f64, f64) {
        if step > self.exploration_phase_steps {
            (self.lambda_late, self.gamma_late)
        } else {
            (self.lambda_novelty, self.gamma_coverage)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.into()));
        if self.capacity < 3 {
            return bad("capacity must be at least 3 (one slot per role)");
        }
        let weights = [
            self.beta,
            self.lambda_novelty,
            self.gamma_coverage,
            self.lambda_late,
            self.gamma_late,
            self.alpha_role_mismatch,
            self.mu_pair_penalty,
            self.recency_penalty_1,
            self.recency_penalty_2,
            self.fresh_bonus,
        ];
        if weights.iter().any(|w| !w.is_finite()) {
            return bad("weights must be finite");
        }
        let margins = [
            self.eps_improve,
            self.eps_tie,
            self.lean_margin_gb,
            self.diverse_jaccard_threshold,
            self.diverse_slack,
        ];
        if margins.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return bad("margins and thresholds must be positive");
        }
        if self.diverse_jaccard_threshold > 1.0 {
            return bad("diverse_jaccard_threshold must lie in (0, 1]");
        }
        let counts = [
            self.recency_window,
            self.max_consecutive_primary,
            self.crossover_window,
            self.distinct_parent_window,
            self.min_distinct_parents,
            self.best_warmup_expansions as usize,
        ];
        if counts.iter().any(|&c| c < 1) {
            return bad("window and quota counts must be at least 1");
        }
        Ok(())
    }
}
