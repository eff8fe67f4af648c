use crate::model::{DiscardReason, Frontier, Metrics, PromotionDecision, Role};
use crate::policy::PolicyConfig;
use crate::text::{jaccard_distance, tokenize};

/// Promotion cascade for a successful child; the first matching rule wins.
///
/// 1. empty slot, 2. new global best (takes the weakest slot),
/// 3. beats the weakest, 4. ties the best with less memory (replaces LEAN),
/// 5. near the weakest with a distant description (replaces the closest DIVERSE).
pub fn decide_promotion<A>(
    child: &Metrics,
    description: &str,
    frontier: &Frontier<A>,
    config: &PolicyConfig,
) -> PromotionDecision {
    if !frontier.is_full() {
        return PromotionDecision::FillEmpty { slot: frontier.len() };
    }
    let (Some(best), Some(weakest)) = (frontier.best(), frontier.weakest()) else {
        return PromotionDecision::Discard { reason: DiscardReason::BelowThresholds };
    };

    if child.bpb < best.metrics.bpb - config.eps_improve {
        return PromotionDecision::NewBest { replaced: weakest.id };
    }
    if child.bpb < weakest.metrics.bpb - config.eps_improve {
        return PromotionDecision::ReplaceWeakest { replaced: weakest.id };
    }
    if let Some(lean) = frontier.lean() {
        if child.bpb <= best.metrics.bpb + config.eps_tie
            && child.vram <= lean.metrics.vram - config.lean_margin_gb
        {
            return PromotionDecision::NewLean { replaced: lean.id };
        }
    }
    if child.bpb <= weakest.metrics.bpb + config.diverse_slack {
        let tokens = tokenize(description);
        let distances =
            frontier.members().iter().map(|m| (m, jaccard_distance(&tokens, &tokenize(&m.description))));
        let nearest = distances.clone().map(|(_, d)| d).fold(f64::INFINITY, f64::min);
        if nearest >= config.diverse_jaccard_threshold {
            let closest_diverse = distances
                .filter(|(m, _)| m.role == Role::Diverse)
                .min_by(|(a, da), (b, db)| da.total_cmp(db).then(a.id.cmp(&b.id)));
            if let Some((m, _)) = closest_diverse {
                return PromotionDecision::NewDiverse { replaced: m.id };
            }
        }
    }
    PromotionDecision::Discard { reason: DiscardReason::BelowThresholds }
}

/// [`decide_promotion`] preceded by a duplicate-artifact check, so the
/// frontier never holds two copies of the same artifact.
pub fn decide_child_promotion<A: PartialEq>(
    artifact: &A,
    child: &Metrics,
    description: &str,
    frontier: &Frontier<A>,
    config: &PolicyConfig,
) -> PromotionDecision {
    if frontier.members().iter().any(|m| &m.artifact == artifact) {
        return PromotionDecision::Discard { reason: DiscardReason::DuplicateArtifact };
    }
    decide_promotion(child, description, frontier, config)
}
