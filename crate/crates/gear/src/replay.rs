//! Replay verification: recompute every decision from the log prefix and
//! check the log-level invariants of the policy.

use std::collections::BTreeMap;
use std::fmt;

use gear_core::harness::{Engine, PolicyKind, RootInfo, RunConfig};
use gear_core::lineage::co_use_count;
use gear_core::model::{improvement, NodeId, OperatorKind, Step};
use gear_core::policy::{crossover_guard_blocked, Guards};

use crate::config::config_digest;
use crate::error::{GearError, Result};
use crate::logfile::{LoadedLog, Record};

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    /// 0 refers to the root evaluation.
    pub step: Step,
    pub field: &'static str,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Invariant {
    ConsecutivePrimary,
    CrossoverWindow,
    CrossoverAfterPromotion,
    RepeatedPair,
    AncestorPair,
    RunningBest,
    FrontierCapacity,
    ParentStats,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Invariant::ConsecutivePrimary => "consecutive-primary",
            Invariant::CrossoverWindow => "crossover-window",
            Invariant::CrossoverAfterPromotion => "crossover-after-promotion",
            Invariant::RepeatedPair => "repeated-pair",
            Invariant::AncestorPair => "ancestor-pair",
            Invariant::RunningBest => "running-best",
            Invariant::FrontierCapacity => "frontier-capacity",
            Invariant::ParentStats => "parent-stats",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub step: Step,
    pub invariant: Invariant,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    /// Records folded into the state, whether or not they matched.
    pub records_checked: usize,
    pub divergence: Option<Divergence>,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none() && self.violations.is_empty()
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "PASS: {} records, 0 divergences, 0 violations", self.records_checked);
        }
        write!(f, "FAIL: {} records checked", self.records_checked)?;
        if let Some(d) = &self.divergence {
            write!(
                f,
                "\n  step {}: {} diverges: recomputed {} but log has {}",
                d.step, d.field, d.expected, d.found
            )?;
        }
        for v in &self.violations {
            write!(f, "\n  step {}: {} violated: {}", v.step, v.invariant, v.detail)?;
        }
        Ok(())
    }
}

/// What the policy saw right before a record was applied.
struct PreState {
    frontier: Vec<NodeId>,
    blocked: bool,
}

/// Verifies `log` under `config`. The seed comes from the log header.
pub fn replay_verify(log: &LoadedLog, config: &RunConfig) -> Result<VerificationReport> {
    let digest = config_digest(config);
    if digest != log.header.config_digest {
        return Err(GearError::DigestMismatch { expected: log.header.config_digest.clone(), found: digest });
    }
    let mut config = config.clone();
    config.seed = log.header.seed;
    config.steps = config.steps.max(log.records.len() as u32).max(1);

    let mut report = VerificationReport::default();
    let root = RootInfo::evaluate(&config.landscape, config.seed)?;
    if root != log.header.root {
        report.divergence = Some(Divergence {
            step: 0,
            field: "root",
            expected: format!("{root:?}"),
            found: format!("{:?}", log.header.root),
        });
        return Ok(report);
    }

    let gear = config.policy_kind == PolicyKind::GearFixed;
    let capacity = log.header.capacity;
    let mut engine = Engine::with_root(config.clone(), log.header.root.clone())?;
    let mut pre = Vec::with_capacity(log.records.len());
    for record in &log.records {
        let state = engine.state();
        let blocked = gear && crossover_guard_blocked(state, record.parent1, &config.policy).unwrap_or(true);
        pre.push(PreState { frontier: state.frontier().members().iter().map(|m| m.id).collect(), blocked });

        if report.divergence.is_none() {
            let proposed = engine.propose()?;
            report.divergence = first_difference(&proposed, record);
        }
        engine
            .apply(record.clone())
            .map_err(|e| GearError::Integrity(format!("step {} cannot be applied: {e}", record.step)))?;
        report.records_checked += 1;
        if engine.state().frontier().len() > capacity {
            report.violations.push(Violation {
                step: record.step,
                invariant: Invariant::FrontierCapacity,
                detail: format!("{} members, capacity {capacity}", engine.state().frontier().len()),
            });
        }
    }
    let records = &log.records;
    if gear {
        check_primary_runs(records, &pre, config.policy.max_consecutive_primary, &mut report.violations);
        check_crossover_schedule(records, &pre, config.policy.crossover_window, &mut report.violations);
        check_pairs(records, &pre, &config.policy.guards, &mut report.violations);
    }
    check_running_best(log, &mut report.violations);
    check_parent_stats(log, &engine, &mut report.violations);
    Ok(report)
}

fn first_difference(proposed: &Record, found: &Record) -> Option<Divergence> {
    let step = found.step;
    macro_rules! compare {
        ($($field:ident),*) => {
            $(
                if proposed.$field != found.$field {
                    return Some(Divergence {
                        step,
                        field: stringify!($field),
                        expected: format!("{:?}", proposed.$field),
                        found: format!("{:?}", found.$field),
                    });
                }
            )*
        };
    }
    compare!(step, parent1, operator, parent2, artifact, outcome, promotion, child_id, reflection);
    None
}

/// Indices of non-crash records, in log order.
fn non_crash(records: &[Record]) -> Vec<usize> {
    (0..records.len()).filter(|&i| !records[i].is_crash()).collect()
}

fn check_primary_runs(records: &[Record], pre: &[PreState], cap: usize, out: &mut Vec<Violation>) {
    let idx = non_crash(records);
    for w in idx.windows(cap + 1) {
        let first = records[w[0]].parent1;
        if w.iter().all(|&i| records[i].parent1 == first && pre[i].frontier.len() >= 2) {
            let last = &records[*w.last().expect("non-empty window")];
            out.push(Violation {
                step: last.step,
                invariant: Invariant::ConsecutivePrimary,
                detail: format!("{first} was primary {} times running", cap + 1),
            });
        }
    }
}

fn check_crossover_schedule(records: &[Record], pre: &[PreState], window: usize, out: &mut Vec<Violation>) {
    let idx = non_crash(records);
    for (k, &i) in idx.iter().enumerate() {
        let r = &records[i];
        if pre[i].blocked || pre[i].frontier.len() < 2 || r.operator == OperatorKind::Crossover {
            continue;
        }
        if k >= window && idx[k - window..k].iter().all(|&j| records[j].operator == OperatorKind::Mutation) {
            out.push(Violation {
                step: r.step,
                invariant: Invariant::CrossoverWindow,
                detail: format!("no crossover in {} non-crash experiments", window + 1),
            });
        }
        if k >= 1 && records[idx[k - 1]].promotion.is_promotion() {
            out.push(Violation {
                step: r.step,
                invariant: Invariant::CrossoverAfterPromotion,
                detail: format!("step {} promoted but this step mutated", records[idx[k - 1]].step),
            });
        }
    }
}

/// Parent pointers of every node created before `step`.
fn parent_map(records: &[Record], step: Step) -> BTreeMap<NodeId, (NodeId, Option<NodeId>)> {
    records.iter().take_while(|r| r.step < step).map(|r| (r.candidate_id(), (r.parent1, r.parent2))).collect()
}

/// Depth-first reachability from `from` to `to` along parent pointers in at most `hops` steps.
fn reaches(
    parents: &BTreeMap<NodeId, (NodeId, Option<NodeId>)>,
    from: NodeId,
    to: NodeId,
    secondary: bool,
    hops: Option<usize>,
) -> bool {
    if hops == Some(0) {
        return false;
    }
    let Some(&(p1, p2)) = parents.get(&from) else {
        return false;
    };
    let rest = hops.map(|h| h - 1);
    let mut next = vec![p1];
    if secondary {
        next.extend(p2);
    }
    next.into_iter().any(|p| p == to || reaches(parents, p, to, secondary, rest))
}

fn related(
    parents: &BTreeMap<NodeId, (NodeId, Option<NodeId>)>,
    a: NodeId,
    b: NodeId,
    guards: &Guards,
) -> bool {
    let secondary = guards.follow_secondary_ancestry;
    let hops = if guards.multi_hop_ancestry { None } else { Some(1) };
    reaches(parents, a, b, secondary, hops) || reaches(parents, b, a, secondary, hops)
}

fn check_pairs(records: &[Record], pre: &[PreState], guards: &Guards, out: &mut Vec<Violation>) {
    for (i, r) in records.iter().enumerate() {
        let Some(p2) = r.parent2 else { continue };
        let parents = parent_map(records, r.step);
        if guards.ancestry_active() && related(&parents, r.parent1, p2, guards) {
            out.push(Violation {
                step: r.step,
                invariant: Invariant::AncestorPair,
                detail: format!("{} and {p2} share a lineage", r.parent1),
            });
        }
        if guards.block_when_no_untried_pair && co_use_count(r.parent1, p2, &records[..i]) > 0 {
            let members = &pre[i].frontier;
            let untried = members
                .iter()
                .enumerate()
                .flat_map(|(k, &a)| members[k + 1..].iter().map(move |&b| (a, b)))
                .find(|&(a, b)| {
                    co_use_count(a, b, &records[..i]) == 0
                        && !(guards.ancestry_active() && related(&parents, a, b, guards))
                });
            if let Some((a, b)) = untried {
                out.push(Violation {
                    step: r.step,
                    invariant: Invariant::RepeatedPair,
                    detail: format!("{} x {p2} repeated while {a} x {b} was untried", r.parent1),
                });
            }
        }
    }
}

fn check_running_best(log: &LoadedLog, out: &mut Vec<Violation>) {
    let mut best = f64::INFINITY;
    let mut previous = f64::INFINITY;
    for r in &log.records {
        if let Some(m) = r.outcome.metrics() {
            best = best.min(m.bpb);
        }
        if best > previous {
            out.push(Violation {
                step: r.step,
                invariant: Invariant::RunningBest,
                detail: format!("{previous} -> {best}"),
            });
        }
        previous = best;
    }
}

fn check_parent_stats(log: &LoadedLog, engine: &Engine, out: &mut Vec<Violation>) {
    let bpb_of = |id: NodeId| -> Option<f64> {
        if id == NodeId::ROOT {
            return Some(log.header.root.metrics.bpb);
        }
        log.records.get(id.0 as usize - 1)?.outcome.metrics().map(|m| m.bpb)
    };
    for m in engine.state().frontier().members() {
        let Some(own) = bpb_of(m.id) else { continue };
        let mut n = 0u32;
        let mut gains = Vec::new();
        let mut last = None;
        for r in &log.records {
            if r.parent1 == m.id {
                n += 1;
                if let Some(cm) = r.outcome.metrics() {
                    gains.push(improvement(own, cm.bpb).unwrap_or(0.0));
                }
            }
            if r.parent1 == m.id || r.parent2 == Some(m.id) {
                last = Some(r.step);
            }
        }
        let mean = if gains.is_empty() { 0.0 } else { gains.iter().sum::<f64>() / gains.len() as f64 };
        if m.n_used != n || (m.mean_child_gain - mean).abs() > 1e-12 || m.last_used_step != last {
            out.push(Violation {
                step: log.records.len() as Step,
                invariant: Invariant::ParentStats,
                detail: format!(
                    "{}: incremental (n={}, gain={}, last={:?}) vs recomputed (n={n}, gain={mean}, last={last:?})",
                    m.id, m.n_used, m.mean_child_gain, m.last_used_step
                ),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logfile::LogHeader;
    use gear_core::harness::{run_search, LandscapeSpec};
    use gear_core::model::{DiscardReason, PromotionDecision};

    fn honest(kind: PolicyKind, seed: u64, guards: Guards) -> (RunConfig, LoadedLog) {
        let mut config = RunConfig::new(kind, 60, seed, LandscapeSpec::ladder());
        config.policy.guards = guards;
        let log = run_search(config.clone()).unwrap();
        let header = LogHeader::new(&config, log.root);
        (config, LoadedLog { header, records: log.records, partial_tail: None })
    }

    #[test]
    fn honest_logs_pass() {
        for (kind, guards) in [
            (PolicyKind::GearFixed, Guards::all()),
            (PolicyKind::GearFixed, Guards::none()),
            (PolicyKind::Hillclimb, Guards::all()),
        ] {
            for seed in 0..4 {
                let (config, log) = honest(kind, seed, guards);
                let report = replay_verify(&log, &config).unwrap();
                assert!(report.passed(), "{kind} seed {seed}: {report}");
                assert_eq!(report.records_checked, 60);
            }
        }
    }

    #[test]
    fn flipped_promotion_is_caught_at_its_step() {
        let (config, mut log) = honest(PolicyKind::GearFixed, 2, Guards::all());
        let i = log.records.iter().position(|r| !r.is_crash() && !r.promotion.is_promotion()).unwrap();
        let step = log.records[i].step;
        // A discard relabelled with a different reason still applies cleanly.
        let reason = match log.records[i].promotion {
            PromotionDecision::Discard { reason: DiscardReason::BelowThresholds } => {
                DiscardReason::DuplicateArtifact
            }
            _ => DiscardReason::BelowThresholds,
        };
        log.records[i].promotion = PromotionDecision::Discard { reason };
        let report = replay_verify(&log, &config).unwrap();
        assert!(!report.passed());
        let d = report.divergence.unwrap();
        assert_eq!((d.step, d.field), (step, "promotion"));
    }

    #[test]
    fn wrong_config_is_refused() {
        let (mut config, log) = honest(PolicyKind::GearFixed, 1, Guards::all());
        config.policy.beta += 0.1;
        assert!(matches!(replay_verify(&log, &config), Err(GearError::DigestMismatch { .. })));
    }

    #[test]
    fn seed_comes_from_the_header() {
        let (mut config, log) = honest(PolicyKind::GearFixed, 3, Guards::all());
        config.seed = 99;
        assert!(replay_verify(&log, &config).unwrap().passed());
    }

    #[test]
    fn skipped_crossover_violates_the_schedule() {
        let (config, mut log) = honest(PolicyKind::GearFixed, 0, Guards::none());
        let i = log
            .records
            .iter()
            .position(|r| {
                r.operator == OperatorKind::Crossover && !r.is_crash() && !r.promotion.is_promotion()
            })
            .unwrap();
        let step = log.records[i].step;
        log.records[i].operator = OperatorKind::Mutation;
        log.records[i].parent2 = None;
        let report = replay_verify(&log, &config).unwrap();
        assert_eq!(report.divergence.as_ref().map(|d| (d.step, d.field)), Some((step, "operator")));
        assert!(report.violations.iter().any(|v| v.step == step
            && matches!(v.invariant, Invariant::CrossoverWindow | Invariant::CrossoverAfterPromotion)));
    }

    #[test]
    fn tampered_metrics_diverge() {
        let (config, mut log) = honest(PolicyKind::GearFixed, 4, Guards::all());
        let i = log.records.iter().position(|r| r.promotion.is_promotion()).unwrap();
        if let Some(m) = log.records[i].outcome.metrics().copied() {
            let desc = log.records[i].outcome.description().unwrap().to_owned();
            let category = match &log.records[i].outcome {
                gear_core::model::Outcome::Success { category, .. } => *category,
                _ => unreachable!(),
            };
            let metrics = gear_core::model::Metrics::new(m.bpb + 1e-4, m.vram, m.params).unwrap();
            log.records[i].outcome =
                gear_core::model::Outcome::Success { metrics, description: desc, category };
        }
        let report = replay_verify(&log, &config).unwrap();
        assert_eq!(report.divergence.unwrap().field, "outcome");
    }

    #[test]
    fn brute_force_reachability() {
        let mut parents = BTreeMap::new();
        parents.insert(NodeId(1), (NodeId::ROOT, None));
        parents.insert(NodeId(2), (NodeId(1), None));
        parents.insert(NodeId(3), (NodeId::ROOT, Some(NodeId(2))));
        assert!(reaches(&parents, NodeId(2), NodeId::ROOT, false, None));
        assert!(!reaches(&parents, NodeId(2), NodeId::ROOT, false, Some(1)));
        assert!(!reaches(&parents, NodeId(3), NodeId(1), false, None));
        assert!(reaches(&parents, NodeId(3), NodeId(1), true, None));
        assert!(!reaches(&parents, NodeId(3), NodeId(1), true, Some(1)));
    }
}
