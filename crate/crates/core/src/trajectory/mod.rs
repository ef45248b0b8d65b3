//! The stream-of-search trajectory language.
//!
//! A trajectory is a `\n`-separated list of event lines with no trailing
//! newline. The first line is the prompt, a `Current State:` line for the
//! problem root.

mod event;
mod tree;
mod verify;

pub use event::{NodeIndex, TrajectoryEvent, NO_SOLUTION};
pub use tree::{rebuild_tree, NodeInfo, TreeDiagnostic, TreeView};
pub use verify::{verify, Diagnostic, Verification};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::countdown::Problem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrajectoryError {
    /// 1-based line number.
    #[error("malformed trajectory line {0}")]
    MalformedLine(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    GoalReached,
    NoSolution,
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    Strict,
    /// Stops at the first malformed line and keeps the prefix.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub problem_id: u64,
    pub events: Vec<TrajectoryEvent>,
    /// Rendering of `events`.
    pub text: String,
    pub terminal: Terminal,
    /// First rejected line (1-based) and everything after it, lenient mode only.
    pub discarded: Option<(usize, String)>,
}

impl Trajectory {
    pub fn from_events(problem_id: u64, events: Vec<TrajectoryEvent>) -> Self {
        let text = render(&events);
        let terminal = terminal_of(&events);
        Trajectory { problem_id, events, text, terminal, discarded: None }
    }

    /// Trusts that `text` is the rendering of `events`.
    pub(crate) fn from_rendered(problem_id: u64, events: Vec<TrajectoryEvent>, text: String) -> Self {
        let terminal = terminal_of(&events);
        Trajectory { problem_id, events, text, terminal, discarded: None }
    }

    pub fn prompt(problem: &Problem) -> Self {
        Trajectory::from_events(problem.id, vec![prompt_event(problem)])
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Keeps only the first `n` lines.
    pub fn truncated_to(&self, n: usize) -> Self {
        Trajectory::from_events(self.problem_id, self.events[..n.min(self.events.len())].to_vec())
    }
}

pub fn prompt_event(problem: &Problem) -> TrajectoryEvent {
    TrajectoryEvent::CurrentState { target: problem.target, numbers: problem.inputs.clone(), ops: Vec::new() }
}

/// The prompt line for a problem.
pub fn prompt_text(problem: &Problem) -> String {
    prompt_event(problem).emit()
}

pub fn render(events: &[TrajectoryEvent]) -> String {
    let mut out = String::new();
    for (i, e) in events.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&e.emit());
    }
    out
}

fn terminal_of(events: &[TrajectoryEvent]) -> Terminal {
    match events.last() {
        Some(TrajectoryEvent::VerifySuccess { .. }) => Terminal::GoalReached,
        Some(TrajectoryEvent::NoSolutionFound) => Terminal::NoSolution,
        _ => Terminal::Truncated,
    }
}

/// Maps every line to one event. Semantic checks are left to [`verify`].
pub fn parse_trajectory(text: &str, problem: &Problem, mode: ParseMode) -> Result<Trajectory, TrajectoryError> {
    if text.is_empty() {
        return Err(TrajectoryError::MalformedLine(1));
    }
    let body = match mode {
        // a single trailing newline is what generators often leave behind
        ParseMode::Lenient => text.strip_suffix('\n').unwrap_or(text),
        ParseMode::Strict => text,
    };
    let mut events = Vec::new();
    let mut discarded = None;
    let mut offset = 0;
    for (i, line) in body.split('\n').enumerate() {
        match TrajectoryEvent::parse_line(line) {
            Some(e) => events.push(e),
            None => match mode {
                ParseMode::Strict => return Err(TrajectoryError::MalformedLine(i + 1)),
                ParseMode::Lenient => {
                    discarded = Some((i + 1, body[offset..].to_string()));
                    break;
                }
            },
        }
        offset += line.len() + 1;
    }
    if events.is_empty() {
        return Err(TrajectoryError::MalformedLine(1));
    }
    let mut traj = Trajectory::from_events(problem.id, events);
    if discarded.is_some() {
        traj.terminal = Terminal::Truncated;
        traj.discarded = discarded;
    }
    Ok(traj)
}
