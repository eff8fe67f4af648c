use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lineage::co_use_count;
use crate::model::{EliteNode, ExperimentRecord, NodeId, OperatorKind, Role};
use crate::policy::{score_elite, PolicyConfig};
use crate::state::SearchState;
use crate::text::description_distance;

/// Parents and operator for the next experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepPlan {
    pub parent1: NodeId,
    pub operator: OperatorKind,
    pub parent2: Option<NodeId>,
}

/// Highest `key`, ties to the lower id.
fn argmax<A>(items: &[&EliteNode<A>], key: impl Fn(&EliteNode<A>) -> f64) -> Option<NodeId> {
    let mut best: Option<(NodeId, f64)> = None;
    for item in items {
        let k = key(item);
        best = match best {
            Some((bi, bk)) if bk > k || (bk == k && bi < item.id) => Some((bi, bk)),
            _ => Some((item.id, k)),
        };
    }
    best.map(|(i, _)| i)
}

/// Primary parents of the last `n` non-crash experiments, most recent first.
fn recent_primaries<A: Clone>(state: &SearchState<A>, n: usize) -> Vec<NodeId> {
    state.recent_non_crash().take(n).map(|r| r.parent1).collect()
}

/// The member that may not be primary again because it was primary in each
/// of the last `max_consecutive_primary` non-crash experiments.
fn capped_primary<A: Clone>(state: &SearchState<A>, config: &PolicyConfig) -> Option<NodeId> {
    let recent = recent_primaries(state, config.max_consecutive_primary);
    let first = *recent.first()?;
    (recent.len() == config.max_consecutive_primary && recent.iter().all(|&id| id == first)).then_some(first)
}

pub fn select_primary<A: Clone>(state: &SearchState<A>, config: &PolicyConfig) -> Result<NodeId> {
    let frontier = state.frontier();
    match frontier.members() {
        [] => return Err(Error::EmptyFrontier),
        [only] => return Ok(only.id),
        _ => {}
    }

    let capped = capped_primary(state, config);
    let mut eligible: Vec<&EliteNode<A>> =
        frontier.members().iter().filter(|m| Some(m.id) != capped).collect();

    if config.guards.prefer_best_warmup {
        if let Some(best) = frontier.with_role(Role::Best).next() {
            if best.n_used < config.best_warmup_expansions && Some(best.id) != capped {
                return Ok(best.id);
            }
        }
    }

    if frontier.len() >= 3 {
        let window = recent_primaries(state, config.distinct_parent_window);
        let mut distinct = window.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < config.min_distinct_parents {
            let unused: Vec<_> = eligible.iter().copied().filter(|m| !window.contains(&m.id)).collect();
            if !unused.is_empty() {
                eligible = unused;
            }
        }
    }

    argmax(&eligible, |e| score_elite(e, state, config).total).ok_or(Error::EmptyFrontier)
}

/// `J(d_p1, d_e) + alpha * [roles differ] - mu * co_use(p1, e)`.
pub fn complementarity<A>(
    candidate: &EliteNode<A>,
    p1: &EliteNode<A>,
    log: &[ExperimentRecord<A>],
    config: &PolicyConfig,
) -> f64 {
    let distance = description_distance(&p1.description, &candidate.description);
    let mismatch = if candidate.role != p1.role { config.alpha_role_mismatch } else { 0.0 };
    distance + mismatch - config.mu_pair_penalty * co_use_count(p1.id, candidate.id, log) as f64
}

/// Most complementary admissible partner for `p1`, or `None` when the
/// guards leave nobody.
pub fn select_secondary<A: Clone>(
    state: &SearchState<A>,
    p1: NodeId,
    config: &PolicyConfig,
) -> Result<Option<NodeId>> {
    let frontier = state.frontier();
    let primary = frontier.get(p1)?;
    let guards = &config.guards;
    let log = state.log();

    let mut candidates = Vec::new();
    for m in frontier.members().iter().filter(|m| m.id != p1) {
        if guards.ancestry_active()
            && state.lineage().related(p1, m.id, guards.follow_secondary_ancestry, guards.ancestry_hops())?
        {
            continue;
        }
        if guards.block_when_no_untried_pair && co_use_count(p1, m.id, log) > 0 {
            continue;
        }
        candidates.push(m);
    }

    Ok(argmax(&candidates, |c| complementarity(c, primary, log, config)))
}

/// True when crossover is not available for `p1` at this step.
pub fn crossover_guard_blocked<A: Clone>(
    state: &SearchState<A>,
    p1: NodeId,
    config: &PolicyConfig,
) -> Result<bool> {
    let frontier = state.frontier();
    if frontier.len() < 2 {
        return Ok(true);
    }
    if config.guards.block_until_two_nonbaseline {
        let non_root = frontier.members().iter().filter(|m| m.id != state.root_id()).count();
        if non_root < 2 {
            return Ok(true);
        }
    }
    Ok(select_secondary(state, p1, config)?.is_none())
}

pub fn choose_operator<A: Clone>(
    state: &SearchState<A>,
    p1: NodeId,
    config: &PolicyConfig,
) -> Result<OperatorKind> {
    if crossover_guard_blocked(state, p1, config)? {
        return Ok(OperatorKind::Mutation);
    }
    let no_recent_crossover = !state
        .recent_non_crash()
        .take(config.crossover_window)
        .any(|r| r.operator == OperatorKind::Crossover);
    let after_promotion = state.recent_non_crash().next().is_some_and(|r| r.promotion.is_promotion());
    if no_recent_crossover || after_promotion {
        Ok(OperatorKind::Crossover)
    } else {
        Ok(OperatorKind::Mutation)
    }
}

pub fn plan_step<A: Clone>(state: &SearchState<A>, config: &PolicyConfig) -> Result<StepPlan> {
    let parent1 = select_primary(state, config)?;
    let operator = choose_operator(state, parent1, config)?;
    let parent2 = match operator {
        OperatorKind::Crossover => select_secondary(state, parent1, config)?,
        OperatorKind::Mutation => None,
    };
    Ok(StepPlan { parent1, operator, parent2 })
}
