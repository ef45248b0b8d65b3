//! Operation-level MDP over trajectories: each generated line is one
//! action. Segmentation, reward assembly, GAE and log-probability
//! aggregation. Nothing here updates parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{budget_used, Budget, BudgetError, BudgetSpec, CharTokenizer, Tokenizer, WhitespaceTokenizer};
use crate::countdown::{OptimalPath, Problem};
use crate::trajectory::{rebuild_tree, verify, Trajectory, TrajectoryEvent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RlError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("alignment: {0}")]
    Alignment(String),
    #[error("text does not start with the prompt")]
    PromptMismatch,
    #[error(transparent)]
    Budget(#[from] BudgetError),
}

/// One action: a generated line, with its newline unless it is the last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpSegment {
    pub index: usize,
    pub text: String,
    /// `[start, end)` in tokens of the generated portion.
    pub token_span: (usize, usize),
    pub is_terminal: bool,
    /// The final piece is not a complete line.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardSpec {
    pub correctness_weight: f64,
    /// Budget-savings bonus weight; a stand-in form, see [`terminal_reward`].
    pub efficiency_weight: f64,
    pub subgoal_weight: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub kl_coefficient: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            correctness_weight: 1.0,
            efficiency_weight: 0.25,
            subgoal_weight: 0.2,
            gamma: 1.0,
            lambda: 0.95,
            kl_coefficient: 0.01,
        }
    }
}

impl RewardSpec {
    pub fn validate(&self) -> Result<(), String> {
        let weights = [self.correctness_weight, self.efficiency_weight, self.subgoal_weight, self.kl_coefficient];
        if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err("reward weights must be non-negative".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(format!("lambda {} outside [0, 1]", self.lambda));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AdvantageSeries {
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl AdvantageSeries {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

fn tokenizer_ref(spec: BudgetSpec, external: Option<&dyn Tokenizer>) -> Result<&dyn Tokenizer, BudgetError> {
    match spec {
        BudgetSpec::Chars => Ok(&CharTokenizer),
        BudgetSpec::WhitespaceTokens => Ok(&WhitespaceTokenizer),
        BudgetSpec::ExternalTokenizer => external.ok_or(BudgetError::BridgeUnavailable),
    }
}

/// Splits everything after the prompt line into one segment per line.
/// Tokens are counted over the full text and assigned to the segment
/// holding their first char; tokens starting inside the prompt (or its
/// newline) belong to no segment.
pub fn segment_operations(
    text: &str,
    prompt: &str,
    spec: BudgetSpec,
    external: Option<&dyn Tokenizer>,
) -> Result<Vec<OpSegment>, RlError> {
    let rest = text.strip_prefix(prompt).ok_or(RlError::PromptMismatch)?;
    let generated = match rest.strip_prefix('\n') {
        Some(g) => g,
        None if rest.is_empty() => return Ok(Vec::new()),
        None => return Err(RlError::PromptMismatch),
    };
    if generated.is_empty() {
        return Ok(Vec::new());
    }
    let offset = prompt.chars().count() + 1;

    let pieces: Vec<&str> = generated.split_inclusive('\n').collect();
    // char ranges of each piece in the full text
    let mut bounds = Vec::with_capacity(pieces.len());
    let mut at = offset;
    for p in &pieces {
        let n = p.chars().count();
        bounds.push((at, at + n));
        at += n;
    }

    let tok = tokenizer_ref(spec, external)?;
    let starts: Vec<usize> = tok.spans(text)?.into_iter().map(|(s, _)| s).filter(|&s| s >= offset).collect();
    let mut segments = Vec::with_capacity(pieces.len());
    let mut t = 0;
    let last = pieces.len() - 1;
    for (i, (p, (_, end))) in pieces.iter().zip(&bounds).enumerate() {
        let first = t;
        while t < starts.len() && (starts[t] < *end || i == last) {
            t += 1;
        }
        let line = p.strip_suffix('\n');
        segments.push(OpSegment {
            index: i,
            text: p.to_string(),
            token_span: (first, t),
            is_terminal: i == last,
            truncated: i == last && line.is_none() && TrajectoryEvent::parse_line(p).is_none(),
        });
    }
    Ok(segments)
}

/// `M · (w_c + α · (1 − used/limit))`, with the usage ratio clamped to
/// `[0, 1]`. An unlimited budget contributes no efficiency term. This is a
/// stand-in for an unpublished reward.
pub fn terminal_reward(
    trajectory: &Trajectory,
    problem: &Problem,
    spec: &RewardSpec,
    budget: Budget,
    external: Option<&dyn Tokenizer>,
) -> Result<f64, RlError> {
    if !verify(trajectory, problem).correct {
        return Ok(0.0);
    }
    let efficiency = match budget.limit {
        Some(limit) if limit > 0 => {
            let used = budget_used(&trajectory.text, budget.spec, external)? as f64;
            1.0 - (used / limit as f64).clamp(0.0, 1.0)
        }
        _ => 0.0,
    };
    Ok(spec.correctness_weight + spec.efficiency_weight * efficiency)
}

/// `η` on the segment of the first arrival (the `Current State` line) at
/// each subgoal `1..N-1`; at most one bonus per subgoal.
pub fn subgoal_bonus(trajectory: &Trajectory, path: &OptimalPath, spec: &RewardSpec) -> Vec<f64> {
    let mut bonus = vec![0.0; trajectory.len().saturating_sub(1)];
    let tree = rebuild_tree(trajectory);
    for goal in path.subgoal_states.iter().take(path.len()).skip(1) {
        let first = tree
            .nodes
            .iter()
            .filter(|(idx, info)| !idx.is_root() && info.state.same_numbers(&goal.remaining))
            .filter_map(|(_, info)| info.first_state_line)
            .min();
        if let Some(line) = first.filter(|&l| l > 0) {
            bonus[line - 1] += spec.subgoal_weight;
        }
    }
    bonus
}

/// GAE with a terminal bootstrap of 0.
pub fn compute_gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Result<AdvantageSeries, RlError> {
    compute_gae_bootstrap(rewards, values, gamma, lambda, 0.0)
}

/// GAE where `V(s_{H+1}) = bootstrap`.
pub fn compute_gae_bootstrap(
    rewards: &[f64],
    values: &[f64],
    gamma: f64,
    lambda: f64,
    bootstrap: f64,
) -> Result<AdvantageSeries, RlError> {
    if rewards.len() != values.len() {
        return Err(RlError::LengthMismatch(rewards.len(), values.len()));
    }
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut next_value = bootstrap;
    let mut acc = 0.0;
    for h in (0..n).rev() {
        let delta = rewards[h] + gamma * next_value - values[h];
        acc = delta + gamma * lambda * acc;
        advantages[h] = acc;
        next_value = values[h];
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok(AdvantageSeries { rewards: rewards.to_vec(), values: values.to_vec(), advantages, returns })
}

fn check_tiling(n_tokens: usize, segments: &[OpSegment]) -> Result<(), RlError> {
    let mut at = 0;
    for s in segments {
        if s.token_span.0 != at || s.token_span.1 < s.token_span.0 {
            return Err(RlError::Alignment(format!("segment {} starts at token {} not {at}", s.index, s.token_span.0)));
        }
        at = s.token_span.1;
    }
    if at != n_tokens {
        return Err(RlError::Alignment(format!("segments cover {at} tokens, series has {n_tokens}")));
    }
    Ok(())
}

/// Sums per-token values over each segment's token span.
pub fn sum_by_segment(per_token: &[f64], segments: &[OpSegment]) -> Result<Vec<f64>, RlError> {
    check_tiling(per_token.len(), segments)?;
    Ok(segments.iter().map(|s| per_token[s.token_span.0..s.token_span.1].iter().sum()).collect())
}

/// Log-probability of each operation: the sum over its tokens.
pub fn op_logprob(token_logprobs: &[f64], segments: &[OpSegment]) -> Result<Vec<f64>, RlError> {
    sum_by_segment(token_logprobs, segments)
}

/// `−β · (logp − logp_ref)` elementwise.
pub fn kl_penalty(logp: &[f64], logp_ref: &[f64], beta: f64) -> Result<Vec<f64>, RlError> {
    if logp.len() != logp_ref.len() {
        return Err(RlError::LengthMismatch(logp.len(), logp_ref.len()));
    }
    Ok(logp.iter().zip(logp_ref).map(|(a, b)| -beta * (a - b)).collect())
}

/// KL penalty aggregated to one value per segment.
pub fn kl_penalty_per_segment(
    logp: &[f64],
    logp_ref: &[f64],
    beta: f64,
    segments: &[OpSegment],
) -> Result<Vec<f64>, RlError> {
    sum_by_segment(&kl_penalty(logp, logp_ref, beta)?, segments)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

/// Lines per token over whole trajectories.
pub fn horizon_ratio(text: &str, spec: BudgetSpec, external: Option<&dyn Tokenizer>) -> Result<f64, RlError> {
    let tokens = budget_used(text, spec, external)?;
    let lines = if text.is_empty() { 0 } else { text.split('\n').count() };
    Ok(if tokens == 0 { 0.0 } else { lines as f64 / tokens as f64 })
}

pub fn horizon_stats<'a, I>(texts: I, spec: BudgetSpec, external: Option<&dyn Tokenizer>) -> Result<HorizonStats, RlError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut ratios = texts.into_iter().map(|t| horizon_ratio(t, spec, external)).collect::<Result<Vec<_>, _>>()?;
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    if n == 0 {
        return Ok(HorizonStats { count: 0, mean: 0.0, median: 0.0, max: 0.0 });
    }
    let median = if n % 2 == 1 { ratios[n / 2] } else { (ratios[n / 2 - 1] + ratios[n / 2]) / 2.0 };
    Ok(HorizonStats { count: n, mean: ratios.iter().sum::<f64>() / n as f64, median, max: ratios[n - 1] })
}

/// One JSONL line for an external trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageRecord {
    pub problem_id: u64,
    pub segments: Vec<OpSegment>,
    #[serde(flatten)]
    pub series: AdvantageSeries,
}

/// Segments a trajectory, assembles terminal + subgoal rewards and runs GAE.
/// `values` defaults to zeros when no critic is available.
pub fn advantage_record(
    problem: &Problem,
    trajectory: &Trajectory,
    path: Option<&OptimalPath>,
    values: Option<&[f64]>,
    spec: &RewardSpec,
    budget: Budget,
    external: Option<&dyn Tokenizer>,
) -> Result<AdvantageRecord, RlError> {
    let prompt = crate::trajectory::prompt_text(problem);
    let segments = segment_operations(&trajectory.text, &prompt, budget.spec, external)?;
    let mut rewards = match path {
        Some(p) => subgoal_bonus(trajectory, p, spec),
        None => vec![0.0; segments.len()],
    };
    if rewards.len() != segments.len() {
        return Err(RlError::LengthMismatch(rewards.len(), segments.len()));
    }
    if let Some(last) = rewards.last_mut() {
        *last += terminal_reward(trajectory, problem, spec, budget, external)?;
    }
    let zeros = vec![0.0; segments.len()];
    let series = compute_gae(&rewards, values.unwrap_or(&zeros), spec.gamma, spec.lambda)?;
    Ok(AdvantageRecord { problem_id: problem.id, segments, series })
}
