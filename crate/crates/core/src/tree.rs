//! Binary decision trees with incremental partition bookkeeping.
//!
//! [`DecisionTree`] is the live chain state: every node keeps the indices of the
//! training rows that reach it, terminals keep class counts, and a per-row
//! assignment maps each row to its terminal. Mutations update this state in place;
//! the sampler applies them to a scratch clone so a rejected proposal never touches
//! the current tree.
//!
//! [`FrozenTree`] is the compact, data-free form kept for retained samples,
//! prediction and serialization.
//!
//! Routing sends a row left iff `x[var] <= rule`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Split {
        var: usize,
        rule: f64,
        left: NodeId,
        right: NodeId,
    },
    Terminal {
        counts: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    parent: Option<NodeId>,
    kind: NodeKind,
    members: Vec<u32>,
}

impl Node {
    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    /// Training rows reaching this node.
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn n_points(&self) -> usize {
        self.members.len()
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, NodeKind::Terminal { .. })
    }

    pub fn children(&self) -> Option<(NodeId, NodeId)> {
        match self.kind {
            NodeKind::Split { left, right, .. } => Some((left, right)),
            NodeKind::Terminal { .. } => None,
        }
    }
}

/// Structural summary shared by live and frozen trees. `depths` is in preorder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeStats {
    pub terminals: usize,
    pub splits: usize,
    /// Splitting nodes whose children are both terminals.
    pub prunable: usize,
    pub depths: Vec<usize>,
}

impl TreeStats {
    pub fn total_nodes(&self) -> usize {
        self.terminals + self.splits
    }
}

/// Observed per-feature minimum and maximum among the rows at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    slots: Vec<Option<Node>>,
    free: Vec<NodeId>,
    root: NodeId,
    n_terminals: usize,
    assignment: Vec<NodeId>,
    n_classes: usize,
}

impl DecisionTree {
    /// The single-terminal tree holding every training row.
    pub fn single_terminal(ds: &Dataset) -> Self {
        let counts = ds.class_totals();
        let root = Node {
            parent: None,
            kind: NodeKind::Terminal { counts },
            members: (0..ds.n() as u32).collect(),
        };
        Self {
            slots: vec![Some(root)],
            free: Vec::new(),
            root: 0,
            n_terminals: 1,
            assignment: vec![0; ds.n()],
            n_classes: ds.n_classes(),
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.slots.get(id).and_then(Option::as_ref)
    }

    fn get(&self, id: NodeId) -> Result<&Node> {
        self.node(id).ok_or(Error::NoSuchNode(id))
    }

    fn get_mut(&mut self, id: NodeId) -> Result<&mut Node> {
        self.slots
            .get_mut(id)
            .and_then(Option::as_mut)
            .ok_or(Error::NoSuchNode(id))
    }

    pub fn n_terminals(&self) -> usize {
        self.n_terminals
    }

    pub fn n_splits(&self) -> usize {
        self.n_terminals - 1
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Terminal reached by each training row.
    pub fn assignment(&self) -> &[NodeId] {
        &self.assignment
    }

    pub fn terminal_counts(&self, id: NodeId) -> Option<&[u32]> {
        match &self.node(id)?.kind {
            NodeKind::Terminal { counts } => Some(counts),
            NodeKind::Split { .. } => None,
        }
    }

    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(2 * self.n_terminals);
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some((l, r)) = self.node(id).and_then(Node::children) {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn terminals(&self) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.is_terminal(id))
            .collect()
    }

    pub fn splits(&self) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&id| !self.is_terminal(id))
            .collect()
    }

    /// Splitting nodes whose two children are terminals, in preorder.
    pub fn prunable(&self) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.is_prunable(id))
            .collect()
    }

    pub fn prunable_count(&self) -> usize {
        self.prunable().len()
    }

    fn is_terminal(&self, id: NodeId) -> bool {
        self.node(id).is_some_and(Node::is_terminal)
    }

    pub fn is_prunable(&self, id: NodeId) -> bool {
        match self.node(id).and_then(Node::children) {
            Some((l, r)) => self.is_terminal(l) && self.is_terminal(r),
            None => false,
        }
    }

    /// Number of splits above `id`.
    pub fn depth(&self, id: NodeId) -> usize {
        let mut depth = 0;
        let mut cur = self.node(id).and_then(Node::parent);
        while let Some(p) = cur {
            depth += 1;
            cur = self.node(p).and_then(Node::parent);
        }
        depth
    }

    pub fn stats(&self) -> TreeStats {
        let order = self.preorder();
        TreeStats {
            terminals: self.n_terminals,
            splits: self.n_terminals - 1,
            prunable: order.iter().filter(|&&id| self.is_prunable(id)).count(),
            depths: order.iter().map(|&id| self.depth(id)).collect(),
        }
    }

    /// Smallest number of training rows in any terminal.
    pub fn min_partition_count(&self) -> usize {
        self.terminals()
            .iter()
            .map(|&id| self.slots[id].as_ref().map_or(0, Node::n_points))
            .min()
            .unwrap_or(0)
    }

    /// Terminals holding fewer than `p_min` rows, in preorder.
    pub fn starved_terminals(&self, p_min: usize) -> Vec<NodeId> {
        self.terminals()
            .into_iter()
            .filter(|&id| {
                self.slots[id]
                    .as_ref()
                    .is_some_and(|n| n.n_points() < p_min)
            })
            .collect()
    }

    pub fn route(&self, x: &[f64]) -> Result<NodeId> {
        let mut id = self.root;
        for _ in 0..=self.slots.len() {
            match self.get(id)?.kind {
                NodeKind::Terminal { .. } => return Ok(id),
                NodeKind::Split {
                    var,
                    rule,
                    left,
                    right,
                } => {
                    let v = *x.get(var).ok_or(Error::DimensionMismatch {
                        expected: var + 1,
                        got: x.len(),
                    })?;
                    id = if v <= rule { left } else { right };
                }
            }
        }
        Err(Error::MalformedTree(format!(
            "routing did not terminate from node {}",
            self.root
        )))
    }

    fn alloc(&mut self, node: Node) -> NodeId {
        match self.free.pop() {
            Some(id) => {
                self.slots[id] = Some(node);
                id
            }
            None => {
                self.slots.push(Some(node));
                self.slots.len() - 1
            }
        }
    }

    fn release(&mut self, id: NodeId) {
        self.slots[id] = None;
        self.free.push(id);
    }

    fn count_classes(&self, ds: &Dataset, members: &[u32]) -> Vec<u32> {
        let mut counts = vec![0u32; self.n_classes];
        for &i in members {
            counts[ds.label(i as usize) as usize - 1] += 1;
        }
        counts
    }

    /// Turns terminal `id` into a split on `x[var] <= rule`, returning the new
    /// `(left, right)` terminals. Either child may end up empty.
    pub fn split_terminal(
        &mut self,
        ds: &Dataset,
        id: NodeId,
        var: usize,
        rule: f64,
    ) -> Result<(NodeId, NodeId)> {
        if var >= ds.m() {
            return Err(Error::DimensionMismatch {
                expected: ds.m(),
                got: var + 1,
            });
        }
        let node = self.get(id)?;
        if !node.is_terminal() {
            return Err(Error::NotTerminal(id));
        }
        let (lm, rm): (Vec<u32>, Vec<u32>) = node
            .members
            .iter()
            .partition(|&&i| ds.value(i as usize, var) <= rule);
        let left = self.make_terminal(ds, id, lm);
        let right = self.make_terminal(ds, id, rm);
        self.get_mut(id)?.kind = NodeKind::Split {
            var,
            rule,
            left,
            right,
        };
        self.n_terminals += 1;
        Ok((left, right))
    }

    fn make_terminal(&mut self, ds: &Dataset, parent: NodeId, members: Vec<u32>) -> NodeId {
        let counts = self.count_classes(ds, &members);
        let id = self.alloc(Node {
            parent: Some(parent),
            kind: NodeKind::Terminal { counts },
            members,
        });
        for &i in &self.slots[id].as_ref().expect("just allocated").members {
            self.assignment[i as usize] = id;
        }
        id
    }

    /// Merges the two terminal children of split `id` back into one terminal.
    pub fn prune_split(&mut self, id: NodeId) -> Result<()> {
        if !self.is_prunable(id) {
            return match self.node(id) {
                None => Err(Error::NoSuchNode(id)),
                Some(_) => Err(Error::NotPrunable(id)),
            };
        }
        let (l, r) = self.get(id)?.children().expect("prunable node is a split");
        let mut counts = self.terminal_counts(l).expect("terminal").to_vec();
        for (c, x) in counts
            .iter_mut()
            .zip(self.terminal_counts(r).expect("terminal"))
        {
            *c += x;
        }
        self.release(l);
        self.release(r);
        let node = self.get_mut(id)?;
        node.kind = NodeKind::Terminal { counts };
        let members = core::mem::take(&mut node.members);
        for &i in &members {
            self.assignment[i as usize] = id;
        }
        self.get_mut(id)?.members = members;
        self.n_terminals -= 1;
        Ok(())
    }

    /// Removes terminal `id` together with its parent split; the sibling subtree
    /// takes the parent's place and the removed rows are routed down through it.
    /// Returns the node now occupying the parent's position.
    ///
    /// When the sibling is itself a terminal this is the same as [`Self::prune_split`]
    /// on the parent.
    pub fn collapse_terminal(&mut self, ds: &Dataset, id: NodeId) -> Result<NodeId> {
        let node = self.get(id)?;
        if !node.is_terminal() {
            return Err(Error::NotTerminal(id));
        }
        let parent = node
            .parent
            .ok_or_else(|| Error::MalformedTree(format!("terminal {id} is the root")))?;
        let (l, r) = self.get(parent)?.children().expect("parent is a split");
        let sibling = if l == id { r } else { l };
        if self.is_terminal(sibling) {
            self.prune_split(parent)?;
            return Ok(parent);
        }
        let orphans = core::mem::take(&mut self.get_mut(id)?.members);
        let grandparent = self.get(parent)?.parent;
        self.release(id);
        self.release(parent);
        self.get_mut(sibling)?.parent = grandparent;
        match grandparent {
            None => self.root = sibling,
            Some(g) => {
                if let NodeKind::Split { left, right, .. } = &mut self.get_mut(g)?.kind {
                    if *left == parent {
                        *left = sibling;
                    } else {
                        *right = sibling;
                    }
                }
            }
        }
        for i in orphans {
            let mut cur = sibling;
            loop {
                let node = self.get_mut(cur)?;
                node.members.push(i);
                match &mut node.kind {
                    NodeKind::Terminal { counts } => {
                        counts[ds.label(i as usize) as usize - 1] += 1;
                        self.assignment[i as usize] = cur;
                        break;
                    }
                    NodeKind::Split {
                        var,
                        rule,
                        left,
                        right,
                    } => {
                        cur = if ds.value(i as usize, *var) <= *rule {
                            *left
                        } else {
                            *right
                        };
                    }
                }
            }
        }
        self.n_terminals -= 1;
        Ok(sibling)
    }

    /// Replaces the variable and rule of split `id` and re-partitions its subtree.
    pub fn set_split(
        &mut self,
        ds: &Dataset,
        id: NodeId,
        new_var: usize,
        new_rule: f64,
    ) -> Result<()> {
        if new_var >= ds.m() {
            return Err(Error::DimensionMismatch {
                expected: ds.m(),
                got: new_var + 1,
            });
        }
        match &mut self.get_mut(id)?.kind {
            NodeKind::Split { var, rule, .. } => {
                *var = new_var;
                *rule = new_rule;
            }
            NodeKind::Terminal { .. } => return Err(Error::NotPrunable(id)),
        }
        let members = core::mem::take(&mut self.get_mut(id)?.members);
        self.repartition(ds, id, members);
        Ok(())
    }

    fn repartition(&mut self, ds: &Dataset, id: NodeId, members: Vec<u32>) {
        let node = self.slots[id].as_mut().expect("live node");
        match node.kind {
            NodeKind::Terminal { .. } => {
                let counts = self.count_classes(ds, &members);
                for &i in &members {
                    self.assignment[i as usize] = id;
                }
                let node = self.slots[id].as_mut().expect("live node");
                node.kind = NodeKind::Terminal { counts };
                node.members = members;
            }
            NodeKind::Split {
                var,
                rule,
                left,
                right,
            } => {
                let (lm, rm): (Vec<u32>, Vec<u32>) = members
                    .iter()
                    .partition(|&&i| ds.value(i as usize, var) <= rule);
                node.members = members;
                self.repartition(ds, left, lm);
                self.repartition(ds, right, rm);
            }
        }
    }

    /// Per-feature min/max over the rows at `id`; `None` for an empty node.
    pub fn partition_bounds(&self, ds: &Dataset, id: NodeId) -> Option<PartitionBounds> {
        let members = &self.node(id)?.members;
        if members.is_empty() {
            return None;
        }
        let mut min = vec![f64::INFINITY; ds.m()];
        let mut max = vec![f64::NEG_INFINITY; ds.m()];
        for &i in members {
            for (j, &v) in ds.row(i as usize).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Some(PartitionBounds { min, max })
    }

    /// Recomputes routing, membership and counts from scratch and compares them with
    /// the incrementally maintained state.
    pub fn check_consistency(&self, ds: &Dataset) -> Result<()> {
        if self.assignment.len() != ds.n() {
            return Err(Error::MalformedTree(format!(
                "assignment covers {} rows, dataset has {}",
                self.assignment.len(),
                ds.n()
            )));
        }
        let order = self.preorder();
        let live = self.slots.iter().filter(|s| s.is_some()).count();
        if order.len() != live {
            return Err(Error::MalformedTree(format!(
                "{live} live nodes, {} reachable",
                order.len()
            )));
        }
        let terminals = order.iter().filter(|&&id| self.is_terminal(id)).count();
        if terminals != self.n_terminals || order.len() != 2 * terminals - 1 {
            return Err(Error::MalformedTree(format!(
                "{terminals} terminals among {} nodes, recorded {}",
                order.len(),
                self.n_terminals
            )));
        }
        let mut expected_members: Vec<Vec<u32>> = vec![Vec::new(); self.slots.len()];
        for i in 0..ds.n() {
            let x = ds.row(i);
            let mut id = self.root;
            loop {
                expected_members[id].push(i as u32);
                match self.get(id)?.kind {
                    NodeKind::Terminal { .. } => break,
                    NodeKind::Split {
                        var,
                        rule,
                        left,
                        right,
                    } => {
                        id = if x[var] <= rule { left } else { right };
                    }
                }
            }
            if self.assignment[i] != id {
                return Err(Error::MalformedTree(format!(
                    "row {i} routes to {id} but is assigned to {}",
                    self.assignment[i]
                )));
            }
        }
        for &id in &order {
            let node = self.get(id)?;
            let mut members = node.members.clone();
            members.sort_unstable();
            if members != expected_members[id] {
                return Err(Error::MalformedTree(format!(
                    "membership of node {id} is stale"
                )));
            }
            if let Some((l, r)) = node.children() {
                if self.get(l)?.parent != Some(id) || self.get(r)?.parent != Some(id) {
                    return Err(Error::MalformedTree(format!(
                        "children of {id} have wrong parent"
                    )));
                }
            }
            if let NodeKind::Terminal { counts } = &node.kind {
                if *counts != self.count_classes(ds, &node.members) {
                    return Err(Error::MalformedTree(format!(
                        "counts of terminal {id} are stale"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical preorder description of the tree topology and its rules, e.g.
    /// `S0@1.5(T,S0@2(T,T))`. Two trees have equal keys iff they are the same model.
    pub fn structure_key(&self) -> String {
        let mut out = String::new();
        self.write_key(self.root, &mut out);
        out
    }

    fn write_key(&self, id: NodeId, out: &mut String) {
        match self.slots[id].as_ref().map(|n| &n.kind) {
            Some(NodeKind::Split {
                var,
                rule,
                left,
                right,
            }) => {
                let _ = write!(out, "S{var}@{rule}(");
                self.write_key(*left, out);
                out.push(',');
                self.write_key(*right, out);
                out.push(')');
            }
            _ => out.push('T'),
        }
    }

    /// Data-free copy with nodes renumbered in preorder.
    pub fn freeze(&self) -> FrozenTree {
        let order = self.preorder();
        let mut index = vec![usize::MAX; self.slots.len()];
        for (pos, &id) in order.iter().enumerate() {
            index[id] = pos;
        }
        let nodes = order
            .iter()
            .map(|&id| {
                let node = self.slots[id].as_ref().expect("reachable node");
                FrozenNode {
                    parent: node.parent.map(|p| index[p]),
                    kind: match &node.kind {
                        NodeKind::Split {
                            var,
                            rule,
                            left,
                            right,
                        } => FrozenKind::Split {
                            var: *var,
                            rule: *rule,
                            left: index[*left],
                            right: index[*right],
                        },
                        NodeKind::Terminal { counts } => FrozenKind::Terminal {
                            counts: counts.clone(),
                        },
                    },
                }
            })
            .collect();
        FrozenTree {
            nodes,
            n_classes: self.n_classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrozenKind {
    Split {
        var: usize,
        rule: f64,
        left: usize,
        right: usize,
    },
    Terminal {
        counts: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrozenNode {
    pub parent: Option<usize>,
    pub kind: FrozenKind,
}

/// Immutable tree without training rows: topology, rules and terminal class counts.
/// Node `0` is the root and nodes are stored in preorder.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenTree {
    nodes: Vec<FrozenNode>,
    n_classes: usize,
}

impl FrozenTree {
    /// Rebuilds a tree from preorder node records, validating the structure.
    pub fn from_nodes(nodes: Vec<FrozenNode>, n_classes: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::MalformedTree("no nodes".into()));
        }
        if nodes[0].parent.is_some() {
            return Err(Error::MalformedTree("node 0 must be the root".into()));
        }
        // Walk in preorder from the root; every node must be visited exactly once,
        // in storage order.
        let mut next = 0;
        let mut stack = vec![(0usize, None::<usize>)];
        while let Some((id, parent)) = stack.pop() {
            if id != next {
                return Err(Error::MalformedTree(format!(
                    "node {id} out of preorder position {next}"
                )));
            }
            let node = nodes.get(id).ok_or(Error::NoSuchNode(id))?;
            if node.parent != parent {
                return Err(Error::MalformedTree(format!("node {id} has wrong parent")));
            }
            next += 1;
            match &node.kind {
                FrozenKind::Split {
                    left, right, rule, ..
                } => {
                    if !rule.is_finite() {
                        return Err(Error::MalformedTree(format!(
                            "node {id} has non-finite rule"
                        )));
                    }
                    stack.push((*right, Some(id)));
                    stack.push((*left, Some(id)));
                }
                FrozenKind::Terminal { counts } => {
                    if counts.len() != n_classes {
                        return Err(Error::MalformedTree(format!(
                            "terminal {id} has {} counts for {n_classes} classes",
                            counts.len()
                        )));
                    }
                }
            }
        }
        if next != nodes.len() {
            return Err(Error::MalformedTree(format!(
                "{} unreachable nodes",
                nodes.len() - next
            )));
        }
        Ok(Self { nodes, n_classes })
    }

    pub fn nodes(&self) -> &[FrozenNode] {
        &self.nodes
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_terminals(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, FrozenKind::Terminal { .. }))
            .count()
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.len() - self.n_terminals()
    }

    /// Class counts of the terminal reached by `x`.
    pub fn route(&self, x: &[f64]) -> &[u32] {
        let mut id = 0;
        loop {
            match &self.nodes[id].kind {
                FrozenKind::Terminal { counts } => return counts,
                FrozenKind::Split {
                    var,
                    rule,
                    left,
                    right,
                } => {
                    id = if x[*var] <= *rule { *left } else { *right };
                }
            }
        }
    }

    pub fn stats(&self) -> TreeStats {
        let is_terminal = |i: usize| matches!(self.nodes[i].kind, FrozenKind::Terminal { .. });
        let terminals = self.n_terminals();
        let prunable = self
            .nodes
            .iter()
            .filter(|n| match n.kind {
                FrozenKind::Split { left, right, .. } => is_terminal(left) && is_terminal(right),
                FrozenKind::Terminal { .. } => false,
            })
            .count();
        let mut depths = vec![0; self.nodes.len()];
        for i in 1..self.nodes.len() {
            depths[i] = depths[self.nodes[i].parent.expect("non-root has parent")] + 1;
        }
        TreeStats {
            terminals,
            splits: self.nodes.len() - terminals,
            prunable,
            depths,
        }
    }
}
