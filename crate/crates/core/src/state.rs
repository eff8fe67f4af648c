//! The search state reconstructed from a root and a log prefix.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lineage::LineageIndex;
use crate::model::{EliteNode, ExperimentRecord, Frontier, NodeId, Outcome, PromotionDecision, Step};

/// Frontier, results log and lineage after some number of experiments.
///
/// Every mutation goes through [`SearchState::apply`], so a state built by
/// applying a log prefix is the same state the run loop saw at that step.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState<A> {
    root_id: NodeId,
    root_description: String,
    frontier: Frontier<A>,
    log: Vec<ExperimentRecord<A>>,
    lineage: LineageIndex,
}

impl<A: Clone> SearchState<A> {
    pub fn new(root: EliteNode<A>, capacity: usize) -> Result<Self> {
        let root_id = root.id;
        let root_description = root.description.clone();
        let mut frontier = Frontier::new(capacity)?;
        frontier.insert(root)?;
        frontier.assign_roles();
        Ok(SearchState {
            root_id,
            root_description,
            frontier,
            log: Vec::new(),
            lineage: LineageIndex::with_root(root_id),
        })
    }

    pub fn root_id(&self) -> NodeId {
        self.root_id
    }

    pub fn frontier(&self) -> &Frontier<A> {
        &self.frontier
    }

    pub fn log(&self) -> &[ExperimentRecord<A>] {
        &self.log
    }

    pub fn lineage(&self) -> &LineageIndex {
        &self.lineage
    }

    pub fn next_step(&self) -> Step {
        self.log.last().map_or(1, |r| r.step + 1)
    }

    /// Non-crash records, most recent first.
    pub fn recent_non_crash(&self) -> impl Iterator<Item = &ExperimentRecord<A>> {
        self.log.iter().rev().filter(|r| !r.is_crash())
    }

    /// Description of any node that ever existed: the root or an experiment child.
    pub fn description_of(&self, id: NodeId) -> Option<&str> {
        if id == self.root_id {
            return Some(&self.root_description);
        }
        let idx = (id.0 as usize).checked_sub(1)?;
        self.log.get(idx).filter(|r| r.step == id.0).and_then(|r| r.outcome.description())
    }

    /// Everything `apply` needs, checked up front so a rejected record leaves
    /// the state untouched.
    fn check_applicable(&self, record: &ExperimentRecord<A>) -> Result<()> {
        self.frontier.get(record.parent1)?;
        if let Some(p2) = record.parent2 {
            self.frontier.get(p2)?;
        }
        let fail = |reason: String| Err(Error::Record { step: record.step, reason });
        match record.promotion {
            PromotionDecision::FillEmpty { slot } => {
                if slot != self.frontier.len() || self.frontier.is_full() {
                    return fail(alloc::format!(
                        "fill slot {slot} but frontier has {} of {} members",
                        self.frontier.len(),
                        self.frontier.capacity()
                    ));
                }
            }
            PromotionDecision::Discard { .. } => {}
            other => {
                let replaced = other.replaced().expect("replacing promotion");
                if !self.frontier.contains(replaced) {
                    return fail(alloc::format!("replaced node {replaced} is not a member"));
                }
            }
        }
        Ok(())
    }

    /// Folds one experiment into the state: parent statistics, lineage,
    /// promotion and role reassignment.
    pub fn apply(&mut self, record: ExperimentRecord<A>) -> Result<()> {
        record.validate()?;
        let expected = self.next_step();
        if record.step != expected {
            return Err(Error::StepOrder { last: expected - 1, found: record.step });
        }
        self.check_applicable(&record)?;

        let child_bpb = record.outcome.metrics().map(|m| m.bpb);
        self.frontier.update_parent_stats(record.parent1, record.parent2, child_bpb, record.step)?;
        self.lineage.insert(record.candidate_id(), record.parent1, record.parent2)?;

        if let Outcome::Success { metrics, description, category } = &record.outcome {
            if record.promotion.is_promotion() {
                let node = EliteNode::new(
                    record.candidate_id(),
                    record.artifact.clone(),
                    *metrics,
                    description.clone(),
                    *category,
                    Some(record.parent1),
                    record.parent2,
                    record.step,
                );
                match record.promotion.replaced() {
                    None => {
                        self.frontier.insert(node)?;
                    }
                    Some(replaced) => {
                        self.frontier.replace(replaced, node)?;
                    }
                }
            }
        }
        self.frontier.assign_roles();
        self.log.push(record);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiscardReason, Metrics, OperatorKind, Role};
    use crate::policy::MutationCategory;

    fn root() -> EliteNode<u8> {
        EliteNode::new(
            NodeId::ROOT,
            0,
            Metrics::new(0.99, 60.0, 80.0).unwrap(),
            "baseline".into(),
            MutationCategory::Other,
            None,
            None,
            0,
        )
    }

    fn success(step: Step, p1: NodeId, bpb: f64, promotion: PromotionDecision) -> ExperimentRecord<u8> {
        ExperimentRecord {
            step,
            operator: OperatorKind::Mutation,
            parent1: p1,
            parent2: None,
            artifact: step as u8,
            outcome: Outcome::Success {
                metrics: Metrics::new(bpb, 50.0, 80.0).unwrap(),
                description: alloc::format!("child {step}"),
                category: MutationCategory::Optimizer,
            },
            promotion,
            reflection: String::new(),
            child_id: promotion.is_promotion().then_some(NodeId(step)),
        }
    }

    #[test]
    fn apply_fill_then_replace() {
        let mut s = SearchState::new(root(), 3).unwrap();
        s.apply(success(1, NodeId::ROOT, 0.98, PromotionDecision::FillEmpty { slot: 1 })).unwrap();
        s.apply(success(2, NodeId(1), 0.985, PromotionDecision::FillEmpty { slot: 2 })).unwrap();
        assert_eq!(s.frontier().len(), 3);
        assert_eq!(s.frontier().get(NodeId(1)).unwrap().role, Role::Best);
        s.apply(success(3, NodeId(1), 0.97, PromotionDecision::NewBest { replaced: NodeId::ROOT })).unwrap();
        assert!(!s.frontier().contains(NodeId::ROOT));
        assert_eq!(s.frontier().get(NodeId(3)).unwrap().role, Role::Best);
        assert_eq!(s.frontier().get(NodeId(1)).unwrap().n_used, 2);
        assert_eq!(s.description_of(NodeId::ROOT), Some("baseline"));
        assert_eq!(s.description_of(NodeId(2)), Some("child 2"));
        assert_eq!(s.description_of(NodeId(4)), None);
        assert!(s.lineage().is_ancestor(NodeId::ROOT, NodeId(3), false).unwrap());
    }

    #[test]
    fn apply_rejects_gaps_and_bad_slots() {
        let mut s = SearchState::new(root(), 3).unwrap();
        let err = s.apply(success(2, NodeId::ROOT, 0.98, PromotionDecision::FillEmpty { slot: 1 }));
        assert_eq!(err, Err(Error::StepOrder { last: 0, found: 2 }));
        let err = s.apply(success(1, NodeId::ROOT, 0.98, PromotionDecision::FillEmpty { slot: 2 }));
        assert!(matches!(err, Err(Error::Record { .. })));
        let discard = PromotionDecision::Discard { reason: DiscardReason::BelowThresholds };
        let err = s.apply(success(1, NodeId(7), 0.98, discard));
        assert_eq!(err, Err(Error::NotInFrontier(NodeId(7))));
    }
}
