//! Subgoal augmentation: splice the next optimal step into a failed
//! trajectory as one of its explored nodes, prune everything after, and let
//! the generator resume from there.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{budget_used, Budget, BudgetError};
use crate::countdown::{apply_operation, OptimalPath, Problem, SearchState};
use crate::generator::{ContinuationGenerator, GeneratorError};
use crate::rng;
use crate::trajectory::{rebuild_tree, NodeIndex, Trajectory, TrajectoryEvent, TreeView};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("subgoal {0} was never explored")]
    NoSubgoalContext(usize),
    #[error("subgoal index {n} outside 1..{len}")]
    SubgoalOutOfRange { n: usize, len: usize },
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStrategy {
    /// Least failed context before the subgoal.
    #[default]
    First,
    Rand,
    Last,
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionStrategy::First => "first",
            SelectionStrategy::Rand => "rand",
            SelectionStrategy::Last => "last",
        })
    }
}

impl FromStr for SelectionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "first" => Ok(SelectionStrategy::First),
            "rand" => Ok(SelectionStrategy::Rand),
            "last" => Ok(SelectionStrategy::Last),
            other => Err(format!("unknown node selection `{other}`")),
        }
    }
}

/// Which explored child of the previous subgoal gets rewritten.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NodeSelection {
    pub strategy: SelectionStrategy,
    pub seed: u64,
}

impl NodeSelection {
    pub fn new(strategy: SelectionStrategy, seed: u64) -> Self {
        NodeSelection { strategy, seed }
    }

    fn pick(&self, pool_len: usize, problem_id: u64, n: usize) -> usize {
        match self.strategy {
            SelectionStrategy::First => 0,
            SelectionStrategy::Last => pool_len - 1,
            SelectionStrategy::Rand => {
                rng::stream(self.seed, &[rng::purpose::NODE_SELECT, problem_id, n as u64]).gen_range(0..pool_len)
            }
        }
    }
}

/// Provenance of one augmentation call. Line numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub problem_id: u64,
    pub n: usize,
    /// False when the subgoal was already explored and nothing changed.
    pub applied: bool,
    pub selected_child: Option<String>,
    /// Lines rewritten in place.
    pub replaced_lines: Vec<usize>,
    /// Lines synthesised when the previous subgoal had no explored child.
    pub inserted_lines: Vec<usize>,
    /// Last line kept before regeneration.
    pub pruned_at: usize,
    /// Budget units used by the rewritten prefix.
    pub prefix_budget_used: usize,
    pub generator_call: String,
}

fn subgoal_numbers(path: &OptimalPath, n: usize) -> &[u64] {
    &path.subgoal_states[n].remaining
}

fn find_explored(tree: &TreeView, numbers: &[u64]) -> Option<NodeIndex> {
    tree.explored_nodes()
        .into_iter()
        .find(|(_, info)| info.state.same_numbers(numbers))
        .map(|(idx, _)| idx.clone())
}

/// Whether some explored node holds the same multiset of numbers as the
/// `n`-th subgoal. The root (`n = 0`) always counts.
pub fn explored_subgoal(trajectory: &Trajectory, path: &OptimalPath, n: usize) -> bool {
    if n == 0 {
        return true;
    }
    if n >= path.subgoal_states.len() {
        return false;
    }
    find_explored(&rebuild_tree(trajectory), subgoal_numbers(path, n)).is_some()
}

/// The rewritten, pruned prefix that explores subgoal `n`, before any
/// regeneration. `None` when subgoal `n` is already explored.
pub fn subgoal_prefix(
    problem: &Problem,
    trajectory: &Trajectory,
    path: &OptimalPath,
    n: usize,
    sel: &NodeSelection,
) -> Result<Option<(Trajectory, AugmentationRecord)>, AugmentError> {
    if n == 0 || n >= path.subgoal_states.len() {
        return Err(AugmentError::SubgoalOutOfRange { n, len: path.subgoal_states.len() });
    }
    let tree = rebuild_tree(trajectory);
    if find_explored(&tree, subgoal_numbers(path, n)).is_some() {
        return Ok(None);
    }
    let parent = find_explored(&tree, subgoal_numbers(path, n - 1)).ok_or(AugmentError::NoSubgoalContext(n - 1))?;
    let parent_info = &tree.nodes[&parent];
    let op = path.ops[n - 1];
    let parent_state = SearchState { remaining: parent_info.state.remaining.clone(), applied: parent_info.state.applied.clone() };
    let child = apply_operation(&parent_state, &op).expect("subgoal op applies to an equal multiset");

    let rewrite = |index: &NodeIndex| {
        [
            TrajectoryEvent::ExploringOperation { op, resulting: child.remaining.clone() },
            TrajectoryEvent::GeneratedNode {
                index: index.clone(),
                target: problem.target,
                numbers: child.remaining.clone(),
                op,
            },
            TrajectoryEvent::MovingToNode { index: index.clone() },
            TrajectoryEvent::CurrentState {
                target: problem.target,
                numbers: child.remaining.clone(),
                ops: child.applied.clone(),
            },
        ]
    };

    let mut record = AugmentationRecord {
        problem_id: problem.id,
        n,
        applied: true,
        selected_child: None,
        replaced_lines: Vec::new(),
        inserted_lines: Vec::new(),
        pruned_at: 0,
        prefix_budget_used: 0,
        generator_call: String::new(),
    };

    let pool: Vec<&NodeIndex> = tree
        .explored_children(&parent)
        .iter()
        .filter(|c| {
            let info = &tree.nodes[*c];
            info.exploring_line.is_some() && info.generated_line.is_some() && info.first_state_line.is_some()
        })
        .collect();

    let events = if pool.is_empty() {
        // nothing to rewrite: add a fresh first child right after the
        // parent's first state line
        let at = parent_info.first_state_line.unwrap_or(0);
        let index = parent.child(0);
        let mut events = trajectory.events[..=at].to_vec();
        events.extend(rewrite(&index));
        record.selected_child = Some(index.to_string());
        record.inserted_lines = (at + 2..at + 6).collect();
        record.pruned_at = at + 5;
        events
    } else {
        let chosen = pool[sel.pick(pool.len(), problem.id, n)];
        let info = &tree.nodes[chosen];
        let lines = [
            info.exploring_line.unwrap(),
            info.generated_line.unwrap(),
            info.first_move_line.unwrap(),
            info.first_state_line.unwrap(),
        ];
        let mut events = trajectory.events[..=lines[3]].to_vec();
        for (line, event) in lines.iter().zip(rewrite(chosen)) {
            events[*line] = event;
        }
        record.selected_child = Some(chosen.to_string());
        record.replaced_lines = lines.iter().map(|l| l + 1).collect();
        record.pruned_at = lines[3] + 1;
        events
    };
    Ok(Some((Trajectory::from_events(problem.id, events), record)))
}

/// One step of subgoal augmentation. Returns the input unchanged when the
/// `n`-th subgoal is already explored; otherwise rewrites, prunes and
/// hands the prefix to `gen`.
#[allow(clippy::too_many_arguments)]
pub fn augment_subgoal(
    gen: &dyn ContinuationGenerator,
    problem: &Problem,
    trajectory: &Trajectory,
    path: &OptimalPath,
    n: usize,
    sel: &NodeSelection,
    budget: Budget,
    seed: u64,
) -> Result<(Trajectory, AugmentationRecord), AugmentError> {
    let Some((prefix, mut record)) = subgoal_prefix(problem, trajectory, path, n, sel)? else {
        let record = AugmentationRecord {
            problem_id: problem.id,
            n,
            applied: false,
            selected_child: None,
            replaced_lines: Vec::new(),
            inserted_lines: Vec::new(),
            pruned_at: trajectory.len(),
            prefix_budget_used: 0,
            generator_call: String::new(),
        };
        return Ok((trajectory.clone(), record));
    };
    record.generator_call = gen.id();
    record.prefix_budget_used = match budget.spec {
        crate::budget::BudgetSpec::ExternalTokenizer => 0,
        spec => budget_used(&prefix.text, spec, None)?,
    };
    if let Some(limit) = budget.limit.filter(|&l| record.prefix_budget_used > l) {
        // no room left to generate: keep what fits, as truncated
        let mut cut = prefix;
        while cut.len() > 1 && budget_used(&cut.text, budget.spec, None)? > limit {
            cut = cut.truncated_to(cut.len() - 1);
        }
        return Ok((cut, record));
    }
    let out = gen.continue_from(problem, &prefix, budget, seed)?;
    Ok((out, record))
}
