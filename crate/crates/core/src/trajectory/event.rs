//! Line-level grammar of the search trajectory language.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::countdown::{parse_number, Number, OpSpec};

/// Position of a node in the search tree: `#0` is the root, child `i` of
/// `#a,b` is `#a,b,i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeIndex(pub Vec<u32>);

impl NodeIndex {
    pub fn root() -> Self {
        NodeIndex(vec![0])
    }

    pub fn is_root(&self) -> bool {
        self.0 == [0]
    }

    pub fn child(&self, i: u32) -> Self {
        let mut v = self.0.clone();
        v.push(i);
        NodeIndex(v)
    }

    pub fn parent(&self) -> Option<Self> {
        (self.0.len() > 1).then(|| NodeIndex(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    pub fn last(&self) -> u32 {
        *self.0.last().expect("node index is never empty")
    }

    /// Root-first chain of ancestors, ending with `self`.
    pub fn lineage(&self) -> Vec<NodeIndex> {
        (1..=self.0.len()).map(|n| NodeIndex(self.0[..n].to_vec())).collect()
    }
}

impl fmt::Display for NodeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("#")?;
        for (i, part) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{part}")?;
        }
        Ok(())
    }
}

impl FromStr for NodeIndex {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let body = s.strip_prefix('#').ok_or(())?;
        let parts = body
            .split(',')
            .map(|p| parse_number(p).and_then(|n| u32::try_from(n).ok()).ok_or(()))
            .collect::<Result<Vec<_>, _>>()?;
        if parts.is_empty() {
            return Err(());
        }
        Ok(NodeIndex(parts))
    }
}

/// One line of a trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryEvent {
    CurrentState { target: Number, numbers: Vec<Number>, ops: Vec<OpSpec> },
    ExploringOperation { op: OpSpec, resulting: Vec<Number> },
    GeneratedNode { index: NodeIndex, target: Number, numbers: Vec<Number>, op: OpSpec },
    MovingToNode { index: NodeIndex },
    VerifyFail { value: Number, target: Number },
    VerifySuccess { value: Number, target: Number },
    NoSolutionFound,
}

const CURRENT: &str = "Current State: ";
const EXPLORING: &str = "Exploring Operation: ";
const GENERATED: &str = "Generated Node ";
const MOVING: &str = "Moving to Node ";
const FAIL: &str = " unequal: No Solution";
const SUCCESS: &str = " equal: Goal Reached";
pub const NO_SOLUTION: &str = "No solution found.";

fn write_numbers(out: &mut String, nums: &[Number]) {
    out.push('[');
    for (i, n) in nums.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&n.to_string());
    }
    out.push(']');
}

fn write_ops(out: &mut String, ops: &[OpSpec]) {
    out.push('[');
    for (i, op) in ops.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('\'');
        out.push_str(&op.to_string());
        out.push('\'');
    }
    out.push(']');
}

impl TrajectoryEvent {
    pub fn emit(&self) -> String {
        let mut out = String::with_capacity(64);
        match self {
            TrajectoryEvent::CurrentState { target, numbers, ops } => {
                out.push_str(CURRENT);
                out.push_str(&format!("{target}:"));
                write_numbers(&mut out, numbers);
                out.push_str(", Operations: ");
                write_ops(&mut out, ops);
            }
            TrajectoryEvent::ExploringOperation { op, resulting } => {
                out.push_str(EXPLORING);
                out.push_str(&op.to_string());
                out.push_str(", Resulting Numbers: ");
                write_numbers(&mut out, resulting);
            }
            TrajectoryEvent::GeneratedNode { index, target, numbers, op } => {
                out.push_str(&format!("{GENERATED}{index}: {target}:"));
                write_numbers(&mut out, numbers);
                out.push_str(&format!(" Operation: {op}"));
            }
            TrajectoryEvent::MovingToNode { index } => {
                out.push_str(&format!("{MOVING}{index}"));
            }
            TrajectoryEvent::VerifyFail { value, target } => {
                out.push_str(&format!("{value},{target}{FAIL}"));
            }
            TrajectoryEvent::VerifySuccess { value, target } => {
                out.push_str(&format!("{value},{target}{SUCCESS}"));
            }
            TrajectoryEvent::NoSolutionFound => out.push_str(NO_SOLUTION),
        }
        out
    }

    /// Parses one line. Any line that does not re-emit to itself byte for
    /// byte is rejected, so accepted lines always round-trip.
    pub fn parse_line(line: &str) -> Option<Self> {
        let event = parse_loose(line)?;
        (event.emit() == line).then_some(event)
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, TrajectoryEvent::VerifySuccess { .. } | TrajectoryEvent::NoSolutionFound)
    }
}

impl fmt::Display for TrajectoryEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.emit())
    }
}

fn parse_numbers(s: &str) -> Option<Vec<Number>> {
    let body = s.strip_prefix('[')?.strip_suffix(']')?;
    if body.is_empty() {
        return Some(Vec::new());
    }
    body.split(", ").map(parse_number).collect()
}

fn parse_ops(s: &str) -> Option<Vec<OpSpec>> {
    let body = s.strip_prefix('[')?.strip_suffix(']')?;
    if body.is_empty() {
        return Some(Vec::new());
    }
    body.split(", ")
        .map(|item| item.strip_prefix('\'')?.strip_suffix('\'')?.parse().ok())
        .collect()
}

/// `target:[a, b]`
fn parse_labelled_numbers(s: &str) -> Option<(Number, Vec<Number>)> {
    let (target, nums) = s.split_once(':')?;
    Some((parse_number(target)?, parse_numbers(nums)?))
}

fn parse_loose(line: &str) -> Option<TrajectoryEvent> {
    if let Some(rest) = line.strip_prefix(CURRENT) {
        let (state, ops) = rest.split_once(", Operations: ")?;
        let (target, numbers) = parse_labelled_numbers(state)?;
        return Some(TrajectoryEvent::CurrentState { target, numbers, ops: parse_ops(ops)? });
    }
    if let Some(rest) = line.strip_prefix(EXPLORING) {
        let (op, nums) = rest.split_once(", Resulting Numbers: ")?;
        return Some(TrajectoryEvent::ExploringOperation { op: op.parse().ok()?, resulting: parse_numbers(nums)? });
    }
    if let Some(rest) = line.strip_prefix(GENERATED) {
        let (index, rest) = rest.split_once(": ")?;
        let (state, op) = rest.split_once(" Operation: ")?;
        let (target, numbers) = parse_labelled_numbers(state)?;
        return Some(TrajectoryEvent::GeneratedNode {
            index: index.parse().ok()?,
            target,
            numbers,
            op: op.parse().ok()?,
        });
    }
    if let Some(rest) = line.strip_prefix(MOVING) {
        return Some(TrajectoryEvent::MovingToNode { index: rest.parse().ok()? });
    }
    if line == NO_SOLUTION {
        return Some(TrajectoryEvent::NoSolutionFound);
    }
    let pair = |s: &str| -> Option<(Number, Number)> {
        let (a, b) = s.split_once(',')?;
        Some((parse_number(a)?, parse_number(b)?))
    };
    if let Some(rest) = line.strip_suffix(FAIL) {
        let (value, target) = pair(rest)?;
        return Some(TrajectoryEvent::VerifyFail { value, target });
    }
    if let Some(rest) = line.strip_suffix(SUCCESS) {
        let (value, target) = pair(rest)?;
        return Some(TrajectoryEvent::VerifySuccess { value, target });
    }
    None
}
