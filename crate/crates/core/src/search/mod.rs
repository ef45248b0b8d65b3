//! Heuristic-guided symbolic searchers that write trajectories in the
//! search language: DFS, BFS-b, and a stochastic DFS that can resume from
//! any partial trajectory.

mod heuristic;
mod writer;

pub use heuristic::{factors, Heuristic};

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{tokenizer_for, Budget, BudgetError, Tokenizer};
use crate::countdown::{apply_operation, enumerate_children, OpSpec, Problem, SearchState};
use crate::rng;
use crate::trajectory::{rebuild_tree, NodeIndex, Terminal, Trajectory, TrajectoryEvent};

use writer::TraceWriter;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("no current node can be reconstructed from the prefix")]
    PrefixUnusable,
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Budget(#[from] BudgetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    Dfs,
    Bfs { breadth: u8 },
    StochasticContinuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub heuristic: Heuristic,
    pub budget: Budget,
    /// Sampling temperature over heuristic-ranked children; 0 is greedy.
    pub temperature: f64,
    pub seed: u64,
    /// Skip children whose heuristic is not below the target.
    pub prune: bool,
}

impl SearchConfig {
    pub fn dfs(heuristic: Heuristic) -> Self {
        SearchConfig {
            algorithm: Algorithm::Dfs,
            heuristic,
            budget: Budget::unlimited(),
            temperature: 0.0,
            seed: 0,
            prune: true,
        }
    }

    pub fn bfs(breadth: u8, heuristic: Heuristic) -> Self {
        SearchConfig { algorithm: Algorithm::Bfs { breadth }, prune: false, ..SearchConfig::dfs(heuristic) }
    }

    pub fn stochastic(heuristic: Heuristic, temperature: f64, seed: u64) -> Self {
        SearchConfig {
            algorithm: Algorithm::StochasticContinuation,
            temperature,
            seed,
            prune: false,
            ..SearchConfig::dfs(heuristic)
        }
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if let Algorithm::Bfs { breadth } = self.algorithm {
            if !(1..=5).contains(&breadth) {
                return Err(SearchError::InvalidConfig(format!("bfs breadth {breadth} outside 1..=5")));
            }
        }
        if self.budget.limit == Some(0) {
            return Err(SearchError::InvalidConfig("budget limit must be positive".into()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(SearchError::InvalidConfig("temperature must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Short label, e.g. `dfs-sum` or `bfs3-multiply`.
    pub fn label(&self) -> String {
        match self.algorithm {
            Algorithm::Dfs => format!("dfs-{}", self.heuristic),
            Algorithm::Bfs { breadth } => format!("bfs{breadth}-{}", self.heuristic),
            Algorithm::StochasticContinuation => format!("stochastic-{}-t{}", self.heuristic, self.temperature),
        }
    }

    /// Inverse of [`SearchConfig::label`] for `dfs-*` and `bfsN-*`.
    pub fn from_label(label: &str) -> Result<Self, SearchError> {
        let bad = || SearchError::InvalidConfig(format!("unknown search label `{label}`"));
        let (alg, h) = label.split_once('-').ok_or_else(bad)?;
        let heuristic: Heuristic = h.parse().map_err(|_| bad())?;
        let cfg = match alg {
            "dfs" => SearchConfig::dfs(heuristic),
            _ => {
                let b = alg.strip_prefix("bfs").and_then(|b| b.parse().ok()).ok_or_else(bad)?;
                SearchConfig::bfs(b, heuristic)
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// DFS and BFS-1..5, each with both heuristics.
    pub fn pretrain_mixture() -> Vec<SearchConfig> {
        let mut out = Vec::with_capacity(12);
        for h in Heuristic::ALL {
            out.push(SearchConfig::dfs(h));
            for b in 1..=5 {
                out.push(SearchConfig::bfs(b, h));
            }
        }
        out
    }
}

/// Runs DFS or BFS-b from the problem root.
pub fn run_symbolic(problem: &Problem, cfg: &SearchConfig) -> Result<Trajectory, SearchError> {
    run_symbolic_with(problem, cfg, None)
}

pub fn run_symbolic_with(
    problem: &Problem,
    cfg: &SearchConfig,
    external: Option<Arc<dyn Tokenizer>>,
) -> Result<Trajectory, SearchError> {
    cfg.validate()?;
    let prompt = Trajectory::prompt(problem);
    let tokenizer = tokenizer_for(cfg.budget.spec, external)?;
    match cfg.algorithm {
        Algorithm::Bfs { breadth } => bfs(problem, cfg, breadth as usize, &prompt, tokenizer),
        Algorithm::Dfs | Algorithm::StochasticContinuation => resume_dfs(problem, cfg, &prompt, tokenizer),
    }
}

/// Resumes a depth-first search from wherever `prefix` stops. Already
/// explored operations are never repeated and new child indices continue
/// after the existing ones. Terminal prefixes are returned unchanged.
pub fn continue_search(prefix: &Trajectory, problem: &Problem, cfg: &SearchConfig) -> Result<Trajectory, SearchError> {
    continue_search_with(prefix, problem, cfg, None)
}

pub fn continue_search_with(
    prefix: &Trajectory,
    problem: &Problem,
    cfg: &SearchConfig,
    external: Option<Arc<dyn Tokenizer>>,
) -> Result<Trajectory, SearchError> {
    cfg.validate()?;
    let tokenizer = tokenizer_for(cfg.budget.spec, external)?;
    resume_dfs(problem, cfg, prefix, tokenizer)
}

/// Ranks children by heuristic. With positive temperature the order is a
/// draw without replacement from `softmax(-h / (target * temperature))`,
/// realised with Gumbel keys; ties keep canonical order.
fn ranked_children(
    state: &SearchState,
    problem: &Problem,
    cfg: &SearchConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<(OpSpec, SearchState)> {
    let mut scored: Vec<(f64, OpSpec, SearchState)> = enumerate_children(state)
        .into_iter()
        .filter_map(|op| {
            let child = apply_operation(state, &op).ok()?;
            let h = cfg.heuristic.value(&child.remaining, problem.target);
            if cfg.prune && h >= problem.target {
                return None;
            }
            Some((h as f64, op, child))
        })
        .collect();
    if cfg.temperature > 0.0 {
        let scale = problem.target.max(1) as f64 * cfg.temperature;
        for entry in scored.iter_mut() {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let gumbel = -(-u.ln()).ln();
            // lower key sorts first
            entry.0 = entry.0 / scale - gumbel;
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.into_iter().map(|(_, op, child)| (op, child)).collect()
}

fn state_event(problem: &Problem, state: &SearchState) -> TrajectoryEvent {
    TrajectoryEvent::CurrentState {
        target: problem.target,
        numbers: state.remaining.clone(),
        ops: state.applied.clone(),
    }
}

fn verify_event(problem: &Problem, value: u64) -> TrajectoryEvent {
    if value == problem.target {
        TrajectoryEvent::VerifySuccess { value, target: problem.target }
    } else {
        TrajectoryEvent::VerifyFail { value, target: problem.target }
    }
}

macro_rules! emit {
    ($w:expr, $e:expr) => {
        if !$w.push($e)? {
            return Ok($w.finish());
        }
    };
}

fn resume_dfs(
    problem: &Problem,
    cfg: &SearchConfig,
    prefix: &Trajectory,
    tokenizer: Arc<dyn Tokenizer>,
) -> Result<Trajectory, SearchError> {
    if matches!(prefix.terminal, Terminal::GoalReached | Terminal::NoSolution) && prefix.discarded.is_none() {
        return Ok(prefix.clone());
    }
    // a lenient parse may carry a discarded tail; continue from the valid part
    let prefix = if prefix.discarded.is_some() {
        Trajectory::from_events(prefix.problem_id, prefix.events.clone())
    } else {
        prefix.clone()
    };
    let tree = rebuild_tree(&prefix);
    if tree.root().is_none() {
        return Err(SearchError::PrefixUnusable);
    }
    let mut rng = rng::stream(cfg.seed, &[rng::purpose::SEARCH, problem.id]);
    let mut writer = TraceWriter::from_prefix(&prefix, tokenizer, cfg.budget.limit)?;
    if writer.full {
        return Ok(writer.finish());
    }

    // deepest reconstructable node on the current lineage
    let mut stack: Vec<(NodeIndex, SearchState)> = Vec::new();
    for idx in tree.current.lineage() {
        match tree.nodes.get(&idx) {
            Some(info) => stack.push((idx, info.state.clone())),
            None => break,
        }
    }
    if stack.is_empty() {
        return Err(SearchError::PrefixUnusable);
    }
    let mut at_state = tree.at_state && stack.last().map(|s| &s.0) == Some(&tree.current);
    let mut tried: HashMap<NodeIndex, Vec<OpSpec>> = tree.tried.clone().into_iter().collect();
    let mut next_child: HashMap<NodeIndex, u32> = HashMap::new();
    let mut order: HashMap<NodeIndex, Vec<(OpSpec, SearchState)>> = HashMap::new();

    if let Some((op, resulting)) = &tree.pending {
        let (idx, state) = stack.last().cloned().expect("stack is non-empty");
        let child = apply_operation(&state, op).map_err(|_| SearchError::PrefixUnusable)?;
        if &child.remaining != resulting || tree.current != idx {
            return Err(SearchError::PrefixUnusable);
        }
        if child.is_leaf() {
            let ev = verify_event(problem, child.remaining[0]);
            let solved = matches!(ev, TrajectoryEvent::VerifySuccess { .. });
            emit!(writer, ev);
            if solved {
                return Ok(writer.finish());
            }
        } else {
            let ci = tree.next_child_index(&idx);
            next_child.insert(idx.clone(), ci + 1);
            let cidx = idx.child(ci);
            emit!(writer, TrajectoryEvent::GeneratedNode {
                index: cidx.clone(),
                target: problem.target,
                numbers: child.remaining.clone(),
                op: *op,
            });
            emit!(writer, TrajectoryEvent::MovingToNode { index: cidx.clone() });
            emit!(writer, state_event(problem, &child));
            stack.push((cidx, child));
            at_state = true;
        }
    }

    // a child generated but not yet entered is where the search was heading
    if let Some(TrajectoryEvent::GeneratedNode { index, .. }) = prefix.events.last() {
        let parent_ok = stack.last().map(|s| &s.0) == index.parent().as_ref();
        if let (true, Some(info)) = (parent_ok, tree.nodes.get(index)) {
            stack.push((index.clone(), info.state.clone()));
            at_state = false;
        }
    }

    // a dangling move still owes its state line
    if let Some(TrajectoryEvent::MovingToNode { index }) = prefix.events.last() {
        if let Some((idx, state)) = stack.last() {
            if idx == index {
                emit!(writer, state_event(problem, state));
                at_state = true;
            }
        }
    }

    loop {
        let (idx, state) = stack.last().cloned().expect("loop exits before the stack empties");
        let ranked = order
            .entry(idx.clone())
            .or_insert_with(|| ranked_children(&state, problem, cfg, &mut rng));
        let done = tried.entry(idx.clone()).or_default();
        let Some((op, child)) = ranked.iter().find(|(op, _)| !done.contains(op)).cloned() else {
            stack.pop();
            at_state = false;
            if stack.is_empty() {
                emit!(writer, TrajectoryEvent::NoSolutionFound);
                return Ok(writer.finish());
            }
            continue;
        };
        done.push(op);

        if !at_state {
            emit!(writer, TrajectoryEvent::MovingToNode { index: idx.clone() });
            emit!(writer, state_event(problem, &state));
        }
        emit!(writer, TrajectoryEvent::ExploringOperation { op, resulting: child.remaining.clone() });
        if child.is_leaf() {
            let ev = verify_event(problem, child.remaining[0]);
            let solved = matches!(ev, TrajectoryEvent::VerifySuccess { .. });
            emit!(writer, ev);
            if solved {
                return Ok(writer.finish());
            }
            at_state = false;
        } else {
            let ci = *next_child.entry(idx.clone()).or_insert_with(|| tree.next_child_index(&idx));
            next_child.insert(idx.clone(), ci + 1);
            let cidx = idx.child(ci);
            emit!(writer, TrajectoryEvent::GeneratedNode {
                index: cidx.clone(),
                target: problem.target,
                numbers: child.remaining.clone(),
                op,
            });
            emit!(writer, TrajectoryEvent::MovingToNode { index: cidx.clone() });
            emit!(writer, state_event(problem, &child));
            stack.push((cidx, child));
            at_state = true;
        }
    }
}

fn bfs(
    problem: &Problem,
    cfg: &SearchConfig,
    breadth: usize,
    prompt: &Trajectory,
    tokenizer: Arc<dyn Tokenizer>,
) -> Result<Trajectory, SearchError> {
    let mut rng = rng::stream(cfg.seed, &[rng::purpose::SEARCH, problem.id]);
    let mut writer = TraceWriter::from_prefix(prompt, tokenizer, cfg.budget.limit)?;
    let mut level = vec![(NodeIndex::root(), problem.root())];
    let mut first = true;
    while !level.is_empty() {
        let mut next_level = Vec::new();
        for (idx, state) in level {
            if !first {
                emit!(writer, TrajectoryEvent::MovingToNode { index: idx.clone() });
                emit!(writer, state_event(problem, &state));
            }
            first = false;
            let mut ci = 0;
            for (op, child) in ranked_children(&state, problem, cfg, &mut rng).into_iter().take(breadth) {
                emit!(writer, TrajectoryEvent::ExploringOperation { op, resulting: child.remaining.clone() });
                if child.is_leaf() {
                    let ev = verify_event(problem, child.remaining[0]);
                    let solved = matches!(ev, TrajectoryEvent::VerifySuccess { .. });
                    emit!(writer, ev);
                    if solved {
                        return Ok(writer.finish());
                    }
                } else {
                    let cidx = idx.child(ci);
                    ci += 1;
                    emit!(writer, TrajectoryEvent::GeneratedNode {
                        index: cidx.clone(),
                        target: problem.target,
                        numbers: child.remaining.clone(),
                        op,
                    });
                    next_level.push((cidx, child));
                }
            }
        }
        level = next_level;
    }
    emit!(writer, TrajectoryEvent::NoSolutionFound);
    Ok(writer.finish())
}
