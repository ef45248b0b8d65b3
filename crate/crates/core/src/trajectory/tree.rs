//! Search-tree reconstruction from a parsed trajectory.

use std::collections::BTreeMap;

use crate::countdown::{Number, OpSpec, SearchState};

use super::{NodeIndex, Trajectory, TrajectoryEvent};

/// Where a node appears in the trajectory. Line numbers are 0-based
/// indices into `Trajectory::events`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeInfo {
    pub state: SearchState,
    /// `Exploring Operation` line that produced the node.
    pub exploring_line: Option<usize>,
    pub generated_line: Option<usize>,
    /// First `Moving to Node` into this node.
    pub first_move_line: Option<usize>,
    /// First `Current State` line describing this node (line 0 for the root).
    pub first_state_line: Option<usize>,
}

impl NodeInfo {
    fn new(state: SearchState) -> Self {
        NodeInfo { state, exploring_line: None, generated_line: None, first_move_line: None, first_state_line: None }
    }

    pub fn numbers(&self) -> &[Number] {
        &self.state.remaining
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeDiagnostic {
    MissingRoot,
    /// Generated node whose parent is not the node being expanded.
    DetachedGeneration { line: usize, index: NodeIndex },
    Regenerated { line: usize, index: NodeIndex },
    UnknownNode { line: usize, index: NodeIndex },
    StrayState { line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeView {
    /// Root plus every generated node (and best-effort entries for unknown
    /// move targets).
    pub nodes: BTreeMap<NodeIndex, NodeInfo>,
    /// Generated indices in generation order.
    pub generated: Vec<NodeIndex>,
    /// Per parent, children in order of first arrival.
    pub explored: BTreeMap<NodeIndex, Vec<NodeIndex>>,
    /// Per node, every operation explored from it, in order.
    pub tried: BTreeMap<NodeIndex, Vec<OpSpec>>,
    pub current: NodeIndex,
    /// Last line is the `Current State` of `current`.
    pub at_state: bool,
    /// A trailing `Exploring Operation` with nothing after it.
    pub pending: Option<(OpSpec, Vec<Number>)>,
    pub diagnostics: Vec<TreeDiagnostic>,
}

impl TreeView {
    pub fn root(&self) -> Option<&NodeInfo> {
        self.nodes.get(&NodeIndex::root())
    }

    pub fn is_explored(&self, index: &NodeIndex) -> bool {
        index.is_root() || self.nodes.get(index).is_some_and(|n| n.first_move_line.is_some())
    }

    /// Root and every node that was moved into, ordered by first arrival.
    pub fn explored_nodes(&self) -> Vec<(&NodeIndex, &NodeInfo)> {
        let mut out: Vec<_> = self.nodes.iter().filter(|(k, _)| self.is_explored(k)).collect();
        out.sort_by_key(|(k, n)| if k.is_root() { 0 } else { n.first_move_line.unwrap_or(usize::MAX) });
        out
    }

    pub fn explored_children(&self, parent: &NodeIndex) -> &[NodeIndex] {
        self.explored.get(parent).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Next unused child index under `parent`.
    pub fn next_child_index(&self, parent: &NodeIndex) -> u32 {
        self.nodes
            .keys()
            .filter(|k| k.parent().as_ref() == Some(parent))
            .map(|k| k.last() + 1)
            .max()
            .unwrap_or(0)
    }
}

/// Rebuilds generation order, exploration order and the final position.
/// Inconsistencies go to `diagnostics`; the tree is built best-effort.
pub fn rebuild_tree(trajectory: &Trajectory) -> TreeView {
    let mut view = TreeView {
        nodes: BTreeMap::new(),
        generated: Vec::new(),
        explored: BTreeMap::new(),
        tried: BTreeMap::new(),
        current: NodeIndex::root(),
        at_state: false,
        pending: None,
        diagnostics: Vec::new(),
    };
    let mut pending_line = None;
    let mut awaiting_state = false;

    for (line, event) in trajectory.events.iter().enumerate() {
        view.at_state = false;
        match event {
            TrajectoryEvent::CurrentState { numbers, ops, .. } => {
                let state = SearchState { remaining: numbers.clone(), applied: ops.clone() };
                if line == 0 {
                    let mut root = NodeInfo::new(state);
                    root.first_state_line = Some(0);
                    view.nodes.insert(NodeIndex::root(), root);
                    view.at_state = true;
                    continue;
                }
                if !awaiting_state {
                    view.diagnostics.push(TreeDiagnostic::StrayState { line });
                }
                awaiting_state = false;
                let node = view.nodes.entry(view.current.clone()).or_insert_with(|| NodeInfo::new(state));
                if node.first_state_line.is_none() {
                    node.first_state_line = Some(line);
                }
                view.at_state = true;
            }
            TrajectoryEvent::ExploringOperation { op, resulting } => {
                view.tried.entry(view.current.clone()).or_default().push(*op);
                view.pending = Some((*op, resulting.clone()));
                pending_line = Some(line);
            }
            TrajectoryEvent::GeneratedNode { index, numbers, op, .. } => {
                if index.parent().as_ref() != Some(&view.current) {
                    view.diagnostics.push(TreeDiagnostic::DetachedGeneration { line, index: index.clone() });
                }
                if view.nodes.contains_key(index) || index.is_root() {
                    view.diagnostics.push(TreeDiagnostic::Regenerated { line, index: index.clone() });
                } else {
                    let mut applied = index
                        .parent()
                        .and_then(|p| view.nodes.get(&p))
                        .map(|p| p.state.applied.clone())
                        .unwrap_or_default();
                    applied.push(*op);
                    let mut info = NodeInfo::new(SearchState { remaining: numbers.clone(), applied });
                    info.exploring_line = pending_line;
                    info.generated_line = Some(line);
                    view.nodes.insert(index.clone(), info);
                    view.generated.push(index.clone());
                }
                view.pending = None;
                pending_line = None;
            }
            TrajectoryEvent::VerifyFail { .. } | TrajectoryEvent::VerifySuccess { .. } => {
                view.pending = None;
                pending_line = None;
            }
            TrajectoryEvent::MovingToNode { index } => {
                if !view.nodes.contains_key(index) {
                    view.diagnostics.push(TreeDiagnostic::UnknownNode { line, index: index.clone() });
                }
                if let Some(node) = view.nodes.get_mut(index) {
                    if !index.is_root() && node.first_move_line.is_none() {
                        node.first_move_line = Some(line);
                        if let Some(parent) = index.parent() {
                            view.explored.entry(parent).or_default().push(index.clone());
                        }
                    }
                }
                view.current = index.clone();
                view.pending = None;
                awaiting_state = true;
            }
            TrajectoryEvent::NoSolutionFound => {}
        }
    }
    if !view.nodes.contains_key(&NodeIndex::root()) {
        view.diagnostics.insert(0, TreeDiagnostic::MissingRoot);
    }
    view
}
