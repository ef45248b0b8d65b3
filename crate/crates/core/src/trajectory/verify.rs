//! The binary correctness metric: replays every line against the domain
//! rules and reports the first failure.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::countdown::{apply_operation, CountdownError, OpSpec, Problem, SearchState};

use super::{prompt_event, NodeIndex, Terminal, Trajectory, TrajectoryEvent};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    NoSolutionTerminal,
    Truncated,
    PromptMismatch,
    /// Stated result differs from the legal evaluation.
    ArithmeticMismatch { line: usize },
    /// Negative, fractional or division-by-zero operation.
    IllegalOperation { line: usize },
    OperandMissing { line: usize },
    /// `Resulting Numbers` differ from applying the operation.
    NumbersMismatch { line: usize },
    /// A `Generated Node` or `Current State` line disagrees with the tree.
    StateMismatch { line: usize },
    VerifyMismatch { line: usize },
    UnknownNode { line: usize },
    UnexpectedEvent { line: usize },
    TrailingEvents { line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub correct: bool,
    pub diagnostic: Option<Diagnostic>,
    /// Operations of the solving branch when correct.
    pub solution: Option<Vec<OpSpec>>,
}

impl Verification {
    /// The metric as 0 or 1.
    pub fn metric(&self) -> u8 {
        u8::from(self.correct)
    }

    fn fail(d: Diagnostic) -> Self {
        Verification { correct: false, diagnostic: Some(d), solution: None }
    }
}

#[derive(PartialEq)]
enum Phase {
    /// Positioned at a node; explorations allowed.
    Ready,
    /// After `Moving to Node`; a `Current State` must follow.
    AwaitState,
}

/// Scores a trajectory 1 iff it ends in a verified goal at a leaf and every
/// line is consistent with the problem.
pub fn verify(trajectory: &Trajectory, problem: &Problem) -> Verification {
    match trajectory.terminal {
        Terminal::NoSolution => return Verification::fail(Diagnostic::NoSolutionTerminal),
        Terminal::Truncated => return Verification::fail(Diagnostic::Truncated),
        Terminal::GoalReached => {}
    }
    let events = &trajectory.events;
    if events.first() != Some(&prompt_event(problem)) {
        return Verification::fail(Diagnostic::PromptMismatch);
    }

    let mut nodes: HashMap<NodeIndex, SearchState> = HashMap::new();
    nodes.insert(NodeIndex::root(), problem.root());
    let mut current = NodeIndex::root();
    let mut phase = Phase::Ready;
    let mut pending: Option<SearchState> = None;

    for (line, event) in events.iter().enumerate().skip(1) {
        let here = &nodes[&current];
        match event {
            TrajectoryEvent::ExploringOperation { op, resulting } => {
                if phase != Phase::Ready || pending.is_some() {
                    return Verification::fail(Diagnostic::UnexpectedEvent { line });
                }
                match op.operator.eval(op.left, op.right) {
                    None => return Verification::fail(Diagnostic::IllegalOperation { line }),
                    Some(v) if v != op.result => {
                        return Verification::fail(Diagnostic::ArithmeticMismatch { line })
                    }
                    Some(_) => {}
                }
                let child = match apply_operation(here, op) {
                    Ok(c) => c,
                    Err(CountdownError::OperandMissing(_)) => {
                        return Verification::fail(Diagnostic::OperandMissing { line })
                    }
                    Err(_) => return Verification::fail(Diagnostic::IllegalOperation { line }),
                };
                if &child.remaining != resulting {
                    return Verification::fail(Diagnostic::NumbersMismatch { line });
                }
                pending = Some(child);
            }
            TrajectoryEvent::GeneratedNode { index, target, numbers, op } => {
                let Some(child) = pending.take() else {
                    return Verification::fail(Diagnostic::UnexpectedEvent { line });
                };
                let consistent = child.remaining.len() >= 2
                    && index.parent().as_ref() == Some(&current)
                    && !nodes.contains_key(index)
                    && *target == problem.target
                    && *numbers == child.remaining
                    && child.applied.last() == Some(op);
                if !consistent {
                    return Verification::fail(Diagnostic::StateMismatch { line });
                }
                nodes.insert(index.clone(), child);
            }
            TrajectoryEvent::VerifyFail { value, target } | TrajectoryEvent::VerifySuccess { value, target } => {
                let Some(leaf) = pending.take() else {
                    return Verification::fail(Diagnostic::UnexpectedEvent { line });
                };
                let success = matches!(event, TrajectoryEvent::VerifySuccess { .. });
                let ok = leaf.remaining == [*value]
                    && *target == problem.target
                    && (*value == *target) == success;
                if !ok {
                    return Verification::fail(Diagnostic::VerifyMismatch { line });
                }
                if success {
                    if line + 1 != events.len() {
                        return Verification::fail(Diagnostic::TrailingEvents { line: line + 1 });
                    }
                    return Verification { correct: true, diagnostic: None, solution: Some(leaf.applied) };
                }
            }
            TrajectoryEvent::MovingToNode { index } => {
                if pending.is_some() || phase != Phase::Ready {
                    return Verification::fail(Diagnostic::UnexpectedEvent { line });
                }
                if !nodes.contains_key(index) {
                    return Verification::fail(Diagnostic::UnknownNode { line });
                }
                current = index.clone();
                phase = Phase::AwaitState;
            }
            TrajectoryEvent::CurrentState { target, numbers, ops } => {
                if phase != Phase::AwaitState {
                    return Verification::fail(Diagnostic::UnexpectedEvent { line });
                }
                if *target != problem.target || *numbers != here.remaining || *ops != here.applied {
                    return Verification::fail(Diagnostic::StateMismatch { line });
                }
                phase = Phase::Ready;
            }
            TrajectoryEvent::NoSolutionFound => {
                return Verification::fail(Diagnostic::UnexpectedEvent { line });
            }
        }
    }
    // terminal was GoalReached, so the success branch above always returns
    Verification::fail(Diagnostic::Truncated)
}
