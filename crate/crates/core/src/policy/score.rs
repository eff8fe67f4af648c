use alloc::vec::Vec;

use crate::model::{EliteNode, Frontier, NodeId};
use crate::policy::PolicyConfig;
use crate::state::SearchState;
use crate::text::{novelty_of, tokenize, TokenSet};

/// Components of the primary-parent score. `total` is their sum, added left to right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreBreakdown {
    pub productivity: f64,
    pub exploration_bonus: f64,
    pub novelty_term: f64,
    pub coverage_term: f64,
    pub recency_term: f64,
    pub total: f64,
}

impl ScoreBreakdown {
    pub fn new(
        productivity: f64,
        exploration_bonus: f64,
        novelty_term: f64,
        coverage_term: f64,
        recency_term: f64,
    ) -> Self {
        let total = productivity + exploration_bonus + novelty_term + coverage_term + recency_term;
        ScoreBreakdown { productivity, exploration_bonus, novelty_term, coverage_term, recency_term, total }
    }
}

/// UCB-style bonus `beta * sqrt(ln(N + 2) / (n + 1))`.
pub fn exploration_bonus(n_used: u32, total_expansions: u64, beta: f64) -> f64 {
    beta * libm::sqrt(libm::log(total_expansions as f64 + 2.0) / (f64::from(n_used) + 1.0))
}

pub fn productivity_score<A>(e: &EliteNode<A>, total_expansions: u64, beta: f64) -> f64 {
    e.mean_child_gain + exploration_bonus(e.n_used, total_expansions, beta)
}

/// `1 / sqrt(k + 1)` where `k` counts the other members sharing both role and category.
pub fn coverage<A>(e: &EliteNode<A>, frontier: &Frontier<A>) -> f64 {
    let k = frontier
        .members()
        .iter()
        .filter(|m| m.id != e.id && m.role == e.role && m.category == e.category)
        .count();
    1.0 / libm::sqrt(k as f64 + 1.0)
}

pub fn recency_adjustment<A: Clone>(e: &EliteNode<A>, state: &SearchState<A>, config: &PolicyConfig) -> f64 {
    let mut primaries = state.recent_non_crash().map(|r| r.parent1);
    if primaries.next() == Some(e.id) {
        return config.recency_penalty_1;
    }
    if primaries.next() == Some(e.id) {
        return config.recency_penalty_2;
    }
    let t = state.next_step();
    if e.n_used == 0 && e.last_used_step.is_none() && e.created_step + 2 >= t {
        return config.fresh_bonus;
    }
    0.0
}

/// Distinct parents of the last `recency_window` non-crash experiments, most recent first.
pub fn recent_parents<A: Clone>(state: &SearchState<A>, config: &PolicyConfig) -> Vec<NodeId> {
    let mut out = Vec::new();
    for r in state.recent_non_crash().take(config.recency_window) {
        let secondary = if config.recency_include_secondary { r.parent2 } else { None };
        for id in core::iter::once(r.parent1).chain(secondary) {
            if !out.contains(&id) {
                out.push(id);
            }
        }
    }
    out
}

pub fn novelty_score<A: Clone>(e: &EliteNode<A>, state: &SearchState<A>, config: &PolicyConfig) -> f64 {
    let reference: Vec<TokenSet> = recent_parents(state, config)
        .into_iter()
        .filter(|&id| id != e.id)
        .filter_map(|id| state.description_of(id).map(tokenize))
        .collect();
    novelty_of(&tokenize(&e.description), &reference)
}

pub fn score_elite<A: Clone>(
    e: &EliteNode<A>,
    state: &SearchState<A>,
    config: &PolicyConfig,
) -> ScoreBreakdown {
    let frontier = state.frontier();
    let (lambda, gamma) = config.weights_at(state.next_step());
    ScoreBreakdown::new(
        e.mean_child_gain,
        exploration_bonus(e.n_used, frontier.total_expansions(), config.beta),
        lambda * novelty_score(e, state, config),
        gamma * coverage(e, frontier),
        recency_adjustment(e, state, config),
    )
}
