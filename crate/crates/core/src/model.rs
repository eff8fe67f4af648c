//! Elites, the bounded frontier, and experiment records.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::MutationCategory;

/// Experiment index. The root state lives at step 0; experiments start at 1.
pub type Step = u32;

/// Identifier of a research state. The root is `NodeId(0)`; the child
/// produced by experiment `t` is `NodeId(t)` whether or not it is promoted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn for_step(step: Step) -> NodeId {
        NodeId(step)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Bits per byte, lower is better.
    pub bpb: f64,
    /// Peak memory in GB.
    pub vram: f64,
    /// Parameter count in millions.
    pub params: f64,
}

impl Metrics {
    pub fn new(bpb: f64, vram: f64, params: f64) -> Result<Self> {
        let m = Metrics { bpb, vram, params };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bpb.is_finite() && self.bpb > 0.0) {
            return Err(Error::Domain(alloc::format!("bpb must be positive, got {}", self.bpb)));
        }
        if !(self.vram.is_finite() && self.vram >= 0.0) {
            return Err(Error::Domain(alloc::format!("vram must be non-negative, got {}", self.vram)));
        }
        if !(self.params.is_finite() && self.params >= 0.0) {
            return Err(Error::Domain(alloc::format!("params must be non-negative, got {}", self.params)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Role {
    Best,
    Lean,
    Diverse,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Best => "BEST",
            Role::Lean => "LEAN",
            Role::Diverse => "DIVERSE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OperatorKind {
    Mutation,
    Crossover,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorKind::Mutation => "MUTATION",
            OperatorKind::Crossover => "CROSSOVER",
        })
    }
}

/// One frontier member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliteNode<A> {
    pub id: NodeId,
    pub artifact: A,
    pub metrics: Metrics,
    pub description: String,
    pub category: MutationCategory,
    pub role: Role,
    pub parent1: Option<NodeId>,
    pub parent2: Option<NodeId>,
    /// Times used as primary parent, crashes included.
    pub n_used: u32,
    /// Successful children folded into `mean_child_gain`.
    pub successful_children: u32,
    /// Mean of `parent_bpb - child_bpb` over successful children.
    pub mean_child_gain: f64,
    pub last_used_step: Option<Step>,
    pub created_step: Step,
}

impl<A> EliteNode<A> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: NodeId,
        artifact: A,
        metrics: Metrics,
        description: String,
        category: MutationCategory,
        parent1: Option<NodeId>,
        parent2: Option<NodeId>,
        created_step: Step,
    ) -> Self {
        EliteNode {
            id,
            artifact,
            metrics,
            description,
            category,
            role: Role::Diverse,
            parent1,
            parent2,
            n_used: 0,
            successful_children: 0,
            mean_child_gain: 0.0,
            last_used_step: None,
            created_step,
        }
    }
}

/// Signed bpb gain of a child over its parent; positive means the child is better.
pub fn improvement(parent_bpb: f64, child_bpb: f64) -> Result<f64> {
    if !(parent_bpb > 0.0 && child_bpb > 0.0) {
        return Err(Error::Domain(alloc::format!(
            "improvement needs positive bpb values, got {parent_bpb} and {child_bpb}"
        )));
    }
    Ok(parent_bpb - child_bpb)
}

/// Bounded pool of elites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier<A> {
    capacity: usize,
    members: Vec<EliteNode<A>>,
}

impl<A> Frontier<A> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("frontier capacity must be at least 1".into()));
        }
        Ok(Frontier { capacity, members: Vec::with_capacity(capacity) })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() >= self.capacity
    }

    pub fn members(&self) -> &[EliteNode<A>] {
        &self.members
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.members.iter().any(|m| m.id == id)
    }

    pub fn get(&self, id: NodeId) -> Result<&EliteNode<A>> {
        self.members.iter().find(|m| m.id == id).ok_or(Error::NotInFrontier(id))
    }

    pub fn get_mut(&mut self, id: NodeId) -> Result<&mut EliteNode<A>> {
        self.members.iter_mut().find(|m| m.id == id).ok_or(Error::NotInFrontier(id))
    }

    /// Appends a node into an empty slot.
    pub fn insert(&mut self, node: EliteNode<A>) -> Result<usize> {
        if self.is_full() {
            return Err(Error::Config(alloc::format!("frontier is full ({} members)", self.capacity)));
        }
        if self.contains(node.id) {
            return Err(Error::DuplicateNode(node.id));
        }
        self.members.push(node);
        Ok(self.members.len() - 1)
    }

    /// Puts `node` into the slot held by `replaced`, returning the evicted member.
    pub fn replace(&mut self, replaced: NodeId, node: EliteNode<A>) -> Result<EliteNode<A>> {
        if node.id != replaced && self.contains(node.id) {
            return Err(Error::DuplicateNode(node.id));
        }
        let slot =
            self.members.iter().position(|m| m.id == replaced).ok_or(Error::NotInFrontier(replaced))?;
        Ok(core::mem::replace(&mut self.members[slot], node))
    }

    /// Member with the lowest bpb, ties to the lower id.
    pub fn best(&self) -> Option<&EliteNode<A>> {
        self.members.iter().min_by(|a, b| by_bpb_then_id(a, b))
    }

    /// Member with the highest bpb; ties go to higher vram, then higher id.
    pub fn weakest(&self) -> Option<&EliteNode<A>> {
        self.members.iter().max_by(|a, b| weakness_order(a, b))
    }

    pub fn weakest_elite(&self) -> Result<NodeId> {
        self.weakest().map(|m| m.id).ok_or(Error::EmptyFrontier)
    }

    /// Member with the lowest vram among non-best members, ties to the lower id.
    pub fn lean(&self) -> Option<&EliteNode<A>> {
        let best = self.best()?.id;
        self.members
            .iter()
            .filter(|m| m.id != best)
            .min_by(|a, b| a.metrics.vram.total_cmp(&b.metrics.vram).then(a.id.cmp(&b.id)))
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &EliteNode<A>> {
        self.members.iter().filter(move |m| m.role == role)
    }

    /// Recomputes every role from scratch: BEST is the min-bpb member, LEAN
    /// the min-vram member among the rest, everyone else DIVERSE.
    pub fn assign_roles(&mut self) {
        let best = self.best().map(|m| m.id);
        let lean = self.lean().map(|m| m.id);
        for m in &mut self.members {
            m.role = if Some(m.id) == best {
                Role::Best
            } else if Some(m.id) == lean {
                Role::Lean
            } else {
                Role::Diverse
            };
        }
    }

    /// Books one use of `parent1` (and the secondary touch of `parent2`).
    /// `child_bpb` is `None` for crashed experiments.
    pub fn update_parent_stats(
        &mut self,
        parent1: NodeId,
        parent2: Option<NodeId>,
        child_bpb: Option<f64>,
        step: Step,
    ) -> Result<()> {
        if let Some(p2) = parent2 {
            self.get(p2)?;
        }
        let primary = self.get_mut(parent1)?;
        if let Some(child) = child_bpb {
            let gain = improvement(primary.metrics.bpb, child)?;
            let k = primary.successful_children as f64;
            primary.mean_child_gain = (primary.mean_child_gain * k + gain) / (k + 1.0);
            primary.successful_children += 1;
        }
        primary.n_used += 1;
        primary.last_used_step = Some(step);
        if let Some(p2) = parent2 {
            self.get_mut(p2)?.last_used_step = Some(step);
        }
        Ok(())
    }

    pub fn total_expansions(&self) -> u64 {
        self.members.iter().map(|m| u64::from(m.n_used)).sum()
    }
}

fn by_bpb_then_id<A>(a: &EliteNode<A>, b: &EliteNode<A>) -> Ordering {
    a.metrics.bpb.total_cmp(&b.metrics.bpb).then(a.id.cmp(&b.id))
}

fn weakness_order<A>(a: &EliteNode<A>, b: &EliteNode<A>) -> Ordering {
    a.metrics
        .bpb
        .total_cmp(&b.metrics.bpb)
        .then(a.metrics.vram.total_cmp(&b.metrics.vram))
        .then(a.id.cmp(&b.id))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Success { metrics: Metrics, description: String, category: MutationCategory },
    Crash { reason: String },
}

impl Outcome {
    pub fn is_crash(&self) -> bool {
        matches!(self, Outcome::Crash { .. })
    }

    pub fn metrics(&self) -> Option<&Metrics> {
        match self {
            Outcome::Success { metrics, .. } => Some(metrics),
            Outcome::Crash { .. } => None,
        }
    }

    pub fn description(&self) -> Option<&str> {
        match self {
            Outcome::Success { description, .. } => Some(description),
            Outcome::Crash { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    Crashed,
    BelowThresholds,
    /// The child's artifact equals a current member's.
    DuplicateArtifact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PromotionDecision {
    FillEmpty {
        slot: usize,
    },
    /// New global best; it takes the weakest member's slot.
    NewBest {
        replaced: NodeId,
    },
    ReplaceWeakest {
        replaced: NodeId,
    },
    NewLean {
        replaced: NodeId,
    },
    NewDiverse {
        replaced: NodeId,
    },
    Discard {
        reason: DiscardReason,
    },
}

impl PromotionDecision {
    pub fn is_promotion(&self) -> bool {
        !matches!(self, PromotionDecision::Discard { .. })
    }

    pub fn replaced(&self) -> Option<NodeId> {
        match *self {
            PromotionDecision::NewBest { replaced }
            | PromotionDecision::ReplaceWeakest { replaced }
            | PromotionDecision::NewLean { replaced }
            | PromotionDecision::NewDiverse { replaced } => Some(replaced),
            PromotionDecision::FillEmpty { .. } | PromotionDecision::Discard { .. } => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PromotionDecision::FillEmpty { .. } => "FILL_EMPTY",
            PromotionDecision::NewBest { .. } => "NEW_BEST",
            PromotionDecision::ReplaceWeakest { .. } => "REPLACE_WEAKEST",
            PromotionDecision::NewLean { .. } => "NEW_LEAN",
            PromotionDecision::NewDiverse { .. } => "NEW_DIVERSE",
            PromotionDecision::Discard { .. } => "DISCARD",
        }
    }
}

/// One append-only log entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord<A> {
    pub step: Step,
    pub operator: OperatorKind,
    pub parent1: NodeId,
    pub parent2: Option<NodeId>,
    /// The child's artifact, kept for crashes too so evaluations can be replayed.
    pub artifact: A,
    pub outcome: Outcome,
    pub promotion: PromotionDecision,
    pub reflection: String,
    pub child_id: Option<NodeId>,
}

impl<A> ExperimentRecord<A> {
    pub fn candidate_id(&self) -> NodeId {
        NodeId::for_step(self.step)
    }

    pub fn is_crash(&self) -> bool {
        self.outcome.is_crash()
    }

    /// Checks the structural invariants tying operator, parents, outcome and promotion together.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| Err(Error::Record { step: self.step, reason: reason.into() });
        if self.step == 0 {
            return fail("experiment steps start at 1");
        }
        match (self.operator, self.parent2) {
            (OperatorKind::Crossover, None) => return fail("crossover without a secondary parent"),
            (OperatorKind::Mutation, Some(_)) => return fail("mutation with a secondary parent"),
            _ => {}
        }
        if self.parent2 == Some(self.parent1) {
            return fail("secondary parent equals primary parent");
        }
        if let Some(m) = self.outcome.metrics() {
            m.validate()?;
        }
        let promoted = self.promotion.is_promotion() && !self.outcome.is_crash();
        if self.outcome.is_crash() && self.promotion.is_promotion() {
            return fail("crashed child cannot be promoted");
        }
        match self.child_id {
            Some(_) if !promoted => return fail("child id present for a discarded child"),
            Some(id) if id != self.candidate_id() => return fail("child id does not match step"),
            None if promoted => return fail("promoted child without an id"),
            _ => {}
        }
        Ok(())
    }
}
