//! The promotion cascade against an independent rule-by-rule evaluator.

use gear_core::model::{DiscardReason, EliteNode, Frontier, Metrics, NodeId, PromotionDecision};
use gear_core::policy::{decide_promotion, PolicyConfig};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Member {
    bpb: f64,
    vram: f64,
    words: Vec<&'static str>,
}

fn words() -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(
        prop::sample::select(vec!["lr", "batch", "depth", "set", "to", "was", "2", "3"]),
        1..5,
    )
}

fn member() -> impl Strategy<Value = Member> {
    // Coarse grids so ties and threshold edges actually occur.
    (0u32..40, 0u32..8, words()).prop_map(|(b, v, words)| Member {
        bpb: 0.98 + f64::from(b) * 5e-5,
        vram: 50.0 + f64::from(v) * 0.25,
        words,
    })
}

fn jaccard(a: &[&str], b: &[&str]) -> f64 {
    let a: std::collections::BTreeSet<_> = a.iter().collect();
    let b: std::collections::BTreeSet<_> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    1.0 - a.intersection(&b).count() as f64 / union as f64
}

/// Independent cascade over plain indices.
fn oracle(members: &[Member], capacity: usize, child: &Member, c: &PolicyConfig) -> PromotionDecision {
    if members.len() < capacity {
        return PromotionDecision::FillEmpty { slot: members.len() };
    }
    let ids: Vec<usize> = (0..members.len()).collect();
    let best =
        *ids.iter().min_by(|&&a, &&b| members[a].bpb.total_cmp(&members[b].bpb).then(a.cmp(&b))).unwrap();
    let weakest = *ids
        .iter()
        .max_by(|&&a, &&b| {
            members[a]
                .bpb
                .total_cmp(&members[b].bpb)
                .then(members[a].vram.total_cmp(&members[b].vram))
                .then(a.cmp(&b))
        })
        .unwrap();
    let id = |i: usize| NodeId(i as u32);
    if child.bpb < members[best].bpb - c.eps_improve {
        return PromotionDecision::NewBest { replaced: id(weakest) };
    }
    if child.bpb < members[weakest].bpb - c.eps_improve {
        return PromotionDecision::ReplaceWeakest { replaced: id(weakest) };
    }
    // LEAN: lowest vram among non-best members, ties to the lower id.
    let lean = ids
        .iter()
        .copied()
        .filter(|&i| i != best)
        .min_by(|&a, &b| members[a].vram.total_cmp(&members[b].vram).then(a.cmp(&b)));
    if let Some(l) = lean {
        if child.bpb <= members[best].bpb + c.eps_tie && child.vram <= members[l].vram - c.lean_margin_gb {
            return PromotionDecision::NewLean { replaced: id(l) };
        }
    }
    if child.bpb <= members[weakest].bpb + c.diverse_slack {
        let d: Vec<f64> = members.iter().map(|m| jaccard(&child.words, &m.words)).collect();
        if d.iter().all(|&x| x >= c.diverse_jaccard_threshold) {
            let diverse = ids
                .iter()
                .copied()
                .filter(|&i| i != best && Some(i) != lean)
                .min_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
            if let Some(x) = diverse {
                return PromotionDecision::NewDiverse { replaced: id(x) };
            }
        }
    }
    PromotionDecision::Discard { reason: DiscardReason::BelowThresholds }
}

fn build(members: &[Member], capacity: usize) -> Frontier<()> {
    let mut f = Frontier::new(capacity).unwrap();
    for (i, m) in members.iter().enumerate() {
        let metrics = Metrics::new(m.bpb, m.vram, 80.0).unwrap();
        let node = EliteNode::new(
            NodeId(i as u32),
            (),
            metrics,
            m.words.join(" "),
            gear_core::MutationCategory::Other,
            None,
            None,
            0,
        );
        f.insert(node).unwrap();
    }
    f.assign_roles();
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5_000))]

    #[test]
    fn cascade_matches_oracle(
        members in prop::collection::vec(member(), 1..=4),
        full in any::<bool>(),
        child in member(),
        slack in prop::sample::select(vec![1e-4, 1e-3]),
    ) {
        let config = PolicyConfig { diverse_slack: slack, ..PolicyConfig::default() };
        let capacity = if full { members.len() } else { 4 };
        let f = build(&members, capacity);
        let metrics = Metrics::new(child.bpb, child.vram, 80.0).unwrap();
        let got = decide_promotion(&metrics, &child.words.join(" "), &f, &config);
        prop_assert_eq!(got, oracle(&members, capacity, &child, &config));
        prop_assert_eq!(got, decide_promotion(&metrics, &child.words.join(" "), &f, &config));
        if let Some(r) = got.replaced() {
            prop_assert!(f.contains(r));
        }
    }
}
