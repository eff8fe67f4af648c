//! Parentage graph over the results log.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::model::{ExperimentRecord, NodeId, OperatorKind};

/// Parent pointers for the root and every experiment's child, promoted or not.
///
/// Nodes can only be inserted after their parents, so the graph is acyclic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LineageIndex {
    edges: BTreeMap<NodeId, (Option<NodeId>, Option<NodeId>)>,
}

impl LineageIndex {
    pub fn with_root(root: NodeId) -> Self {
        let mut edges = BTreeMap::new();
        edges.insert(root, (None, None));
        LineageIndex { edges }
    }

    pub fn from_records<A>(root: NodeId, records: &[ExperimentRecord<A>]) -> Result<Self> {
        let mut index = LineageIndex::with_root(root);
        for r in records {
            index.insert(r.candidate_id(), r.parent1, r.parent2)?;
        }
        Ok(index)
    }

    pub fn insert(&mut self, node: NodeId, parent1: NodeId, parent2: Option<NodeId>) -> Result<()> {
        if self.edges.contains_key(&node) {
            return Err(Error::DuplicateNode(node));
        }
        for p in core::iter::once(parent1).chain(parent2) {
            if !self.edges.contains_key(&p) {
                return Err(Error::UnknownNode(p));
            }
        }
        self.edges.insert(node, (Some(parent1), parent2));
        Ok(())
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.edges.contains_key(&node)
    }

    pub fn parents(&self, node: NodeId) -> Result<(Option<NodeId>, Option<NodeId>)> {
        self.edges.get(&node).copied().ok_or(Error::UnknownNode(node))
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn ancestors(&self, node: NodeId, follow_secondary: bool) -> Result<BTreeSet<NodeId>> {
        self.ancestors_within(node, follow_secondary, None)
    }

    /// Breadth-first walk up the parent pointers, at most `max_hops` levels
    /// when given. The start node is excluded.
    pub fn ancestors_within(
        &self,
        node: NodeId,
        follow_secondary: bool,
        max_hops: Option<usize>,
    ) -> Result<BTreeSet<NodeId>> {
        self.parents(node)?;
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        queue.push_back((node, 0usize));
        while let Some((current, depth)) = queue.pop_front() {
            if max_hops.is_some_and(|limit| depth >= limit) {
                continue;
            }
            let (p1, p2) = self.parents(current)?;
            let p2 = if follow_secondary { p2 } else { None };
            for parent in p1.into_iter().chain(p2) {
                if seen.insert(parent) {
                    queue.push_back((parent, depth + 1));
                }
            }
        }
        Ok(seen)
    }

    pub fn is_ancestor(&self, a: NodeId, b: NodeId, follow_secondary: bool) -> Result<bool> {
        self.parents(a)?;
        Ok(self.ancestors(b, follow_secondary)?.contains(&a))
    }

    /// True when either node is an ancestor of the other within `max_hops`.
    pub fn related(
        &self,
        a: NodeId,
        b: NodeId,
        follow_secondary: bool,
        max_hops: Option<usize>,
    ) -> Result<bool> {
        Ok(self.ancestors_within(b, follow_secondary, max_hops)?.contains(&a)
            || self.ancestors_within(a, follow_secondary, max_hops)?.contains(&b))
    }
}

/// Crossover records whose unordered parent pair is `{a, b}`.
pub fn co_use_count<A>(a: NodeId, b: NodeId, log: &[ExperimentRecord<A>]) -> usize {
    log.iter()
        .filter(|r| r.operator == OperatorKind::Crossover)
        .filter(|r| match r.parent2 {
            Some(p2) => (r.parent1 == a && p2 == b) || (r.parent1 == b && p2 == a),
            None => false,
        })
        .count()
}
