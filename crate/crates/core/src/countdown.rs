//! The Countdown arithmetic domain: problems, legal operations, search
//! states, optimal paths, problem construction and target splits.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Every value in the domain is a non-negative integer.
pub type Number = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CountdownError {
    #[error("operand {0} is not among the remaining numbers")]
    OperandMissing(Number),
    #[error("illegal operation {0}")]
    IllegalOperation(String),
    #[error("no target hit after {attempts} construction attempts")]
    RejectionBudgetExceeded { attempts: usize },
    #[error("exhaustive solving supports at most 5 inputs, got {0}")]
    TooManyInputs(usize),
    #[error("invalid optimal path: {0}")]
    InvalidPath(String),
    #[error("malformed operation `{0}`")]
    MalformedOperation(String),
    #[error("malformed target split: {0}")]
    MalformedSplit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Add,
    Sub,
    Mul,
    Div,
}

impl Operator {
    pub const ALL: [Operator; 4] = [Operator::Add, Operator::Sub, Operator::Mul, Operator::Div];

    pub fn symbol(self) -> char {
        match self {
            Operator::Add => '+',
            Operator::Sub => '-',
            Operator::Mul => '*',
            Operator::Div => '/',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(Operator::Add),
            '-' => Some(Operator::Sub),
            '*' => Some(Operator::Mul),
            '/' => Some(Operator::Div),
            _ => None,
        }
    }

    /// Evaluates `left op right` under the domain rules, returning `None`
    /// for negative, fractional, or overflowing results.
    pub fn eval(self, left: Number, right: Number) -> Option<Number> {
        match self {
            Operator::Add => left.checked_add(right),
            Operator::Sub => left.checked_sub(right),
            Operator::Mul => left.checked_mul(right),
            Operator::Div => {
                if right == 0 || !left.is_multiple_of(right) {
                    None
                } else {
                    Some(left / right)
                }
            }
        }
    }
}

/// One binary operation `left op right = result`.
///
/// Values parsed from text are not checked on construction; use
/// [`OpSpec::is_legal`] before trusting the stated result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpSpec {
    pub left: Number,
    pub operator: Operator,
    pub right: Number,
    pub result: Number,
}

impl OpSpec {
    /// Builds a legal operation, computing its result.
    pub fn new(left: Number, operator: Operator, right: Number) -> Result<Self, CountdownError> {
        match operator.eval(left, right) {
            Some(result) => Ok(OpSpec { left, operator, right, result }),
            None => Err(CountdownError::IllegalOperation(format!(
                "{left}{}{right}",
                operator.symbol()
            ))),
        }
    }

    /// True when the stated result equals the legal evaluation.
    pub fn is_legal(&self) -> bool {
        self.operator.eval(self.left, self.right) == Some(self.result)
    }
}

impl fmt::Display for OpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}={}", self.left, self.operator.symbol(), self.right, self.result)
    }
}

impl FromStr for OpSpec {
    type Err = CountdownError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CountdownError::MalformedOperation(s.to_string());
        let (lhs, result) = s.split_once('=').ok_or_else(bad)?;
        let pos = lhs.find(|c: char| !c.is_ascii_digit()).ok_or_else(bad)?;
        let operator = lhs[pos..].chars().next().and_then(Operator::from_symbol).ok_or_else(bad)?;
        let left = parse_number(&lhs[..pos]).ok_or_else(bad)?;
        let right = parse_number(&lhs[pos + 1..]).ok_or_else(bad)?;
        let result = parse_number(result).ok_or_else(bad)?;
        Ok(OpSpec { left, operator, right, result })
    }
}

/// Strict decimal parse: digits only, no sign, no redundant leading zeros.
pub(crate) fn parse_number(s: &str) -> Option<Number> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
        return None;
    }
    s.parse().ok()
}

/// A Countdown instance: reach `target` from `inputs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Problem {
    pub id: u64,
    pub target: Number,
    pub inputs: Vec<Number>,
}

impl Problem {
    pub fn new(id: u64, target: Number, inputs: Vec<Number>) -> Self {
        Problem { id, target, inputs }
    }

    /// Identity used for deduplication: target plus sorted inputs.
    pub fn key(&self) -> (Number, Vec<Number>) {
        let mut sorted = self.inputs.clone();
        sorted.sort_unstable();
        (self.target, sorted)
    }

    pub fn root(&self) -> SearchState {
        SearchState::root(self.inputs.clone())
    }

    /// Depth of every complete solution, `K - 1`.
    pub fn depth(&self) -> usize {
        self.inputs.len().saturating_sub(1)
    }
}

/// A node of the search tree: the numbers still available and the
/// operations applied so far.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SearchState {
    pub remaining: Vec<Number>,
    pub applied: Vec<OpSpec>,
}

impl SearchState {
    pub fn root(inputs: Vec<Number>) -> Self {
        SearchState { remaining: inputs, applied: Vec::new() }
    }

    pub fn is_leaf(&self) -> bool {
        self.remaining.len() <= 1
    }

    /// Multiset equality of the remaining numbers.
    pub fn same_numbers(&self, other: &[Number]) -> bool {
        same_multiset(&self.remaining, other)
    }
}

pub fn same_multiset(a: &[Number], b: &[Number]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

/// Removes one copy of each operand and appends the result. The relative
/// order of untouched numbers is kept.
pub fn apply_operation(state: &SearchState, op: &OpSpec) -> Result<SearchState, CountdownError> {
    if !op.is_legal() {
        return Err(CountdownError::IllegalOperation(op.to_string()));
    }
    let mut remaining = state.remaining.clone();
    for operand in [op.left, op.right] {
        let pos = remaining
            .iter()
            .position(|&n| n == operand)
            .ok_or(CountdownError::OperandMissing(operand))?;
        remaining.remove(pos);
    }
    remaining.push(op.result);
    let mut applied = state.applied.clone();
    applied.push(*op);
    Ok(SearchState { remaining, applied })
}

/// All legal operations from `state` in canonical order.
///
/// Operand pairs are visited by ascending `(min, max)` value, operators in
/// the order add, sub, mul, div. Add and mul keep list order of the two
/// operands; sub and div put the larger operand on the left. Identical
/// operations arising from duplicate values are listed once; distinct
/// operations with equal results (`4-2=2`, `4/2=2`) are both kept.
pub fn enumerate_children(state: &SearchState) -> Vec<OpSpec> {
    let nums = &state.remaining;
    let mut pairs = Vec::with_capacity(nums.len() * nums.len().saturating_sub(1) / 2);
    for i in 0..nums.len() {
        for j in i + 1..nums.len() {
            let (a, b) = (nums[i], nums[j]);
            pairs.push(((a.min(b), a.max(b)), (i, j)));
        }
    }
    pairs.sort();

    let mut out: Vec<OpSpec> = Vec::with_capacity(pairs.len() * 4);
    let mut push = |op: Option<OpSpec>| {
        if let Some(op) = op {
            if !out.contains(&op) {
                out.push(op);
            }
        }
    };
    for ((lo, hi), (i, j)) in pairs {
        let (first, second) = (nums[i], nums[j]);
        push(OpSpec::new(first, Operator::Add, second).ok());
        push(OpSpec::new(hi, Operator::Sub, lo).ok());
        push(OpSpec::new(first, Operator::Mul, second).ok());
        push(OpSpec::new(hi, Operator::Div, lo).ok());
        if lo != hi {
            // only exact when lo == 0
            push(OpSpec::new(lo, Operator::Div, hi).ok());
        }
    }
    out
}

/// A solving operation sequence together with the subgoal states it passes
/// through (root included at position 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimalPath {
    pub problem_id: u64,
    pub ops: Vec<OpSpec>,
    pub subgoal_states: Vec<SearchState>,
}

impl OptimalPath {
    /// Replays `ops` from the problem root and checks the result is `[target]`.
    pub fn from_ops(problem: &Problem, ops: Vec<OpSpec>) -> Result<Self, CountdownError> {
        let mut state = problem.root();
        let mut subgoal_states = Vec::with_capacity(ops.len());
        for op in &ops {
            subgoal_states.push(state.clone());
            state = apply_operation(&state, op)?;
        }
        if state.remaining != [problem.target] {
            return Err(CountdownError::InvalidPath(format!(
                "ends at {:?}, target {}",
                state.remaining, problem.target
            )));
        }
        Ok(OptimalPath { problem_id: problem.id, ops, subgoal_states })
    }

    /// Number of operations `N`.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// State after the first `n` operations (`0 <= n <= N`).
    pub fn state_after(&self, n: usize) -> SearchState {
        if n < self.subgoal_states.len() {
            return self.subgoal_states[n].clone();
        }
        let last = self.subgoal_states.last().cloned().unwrap_or_default();
        apply_operation(&last, &self.ops[self.ops.len() - 1]).unwrap_or(last)
    }
}

/// Checks every invariant of an [`OptimalPath`] against its problem.
pub fn verify_optimal_path(problem: &Problem, path: &OptimalPath) -> Result<(), CountdownError> {
    if path.problem_id != problem.id {
        return Err(CountdownError::InvalidPath("problem id mismatch".into()));
    }
    if path.ops.len() != problem.depth() {
        return Err(CountdownError::InvalidPath(format!(
            "expected {} ops, got {}",
            problem.depth(),
            path.ops.len()
        )));
    }
    let replay = OptimalPath::from_ops(problem, path.ops.clone())?;
    if replay.subgoal_states != path.subgoal_states {
        return Err(CountdownError::InvalidPath("subgoal states disagree with replay".into()));
    }
    Ok(())
}

/// Exhaustive depth-first enumeration of every operation sequence that
/// reduces the inputs to exactly `[target]`, up to `max_solutions`.
pub fn solve_all(problem: &Problem, max_solutions: usize) -> Result<Vec<OptimalPath>, CountdownError> {
    if problem.inputs.len() > 5 {
        return Err(CountdownError::TooManyInputs(problem.inputs.len()));
    }
    let mut found = Vec::new();
    let mut ops = Vec::new();
    solve_rec(problem, &problem.root(), &mut ops, &mut found, max_solutions);
    Ok(found)
}

fn solve_rec(
    problem: &Problem,
    state: &SearchState,
    ops: &mut Vec<OpSpec>,
    found: &mut Vec<OptimalPath>,
    max_solutions: usize,
) {
    if found.len() >= max_solutions {
        return;
    }
    if state.is_leaf() {
        if state.remaining == [problem.target] {
            if let Ok(path) = OptimalPath::from_ops(problem, ops.clone()) {
                found.push(path);
            }
        }
        return;
    }
    for op in enumerate_children(state) {
        let child = apply_operation(state, &op).expect("enumerated ops are applicable");
        ops.push(op);
        solve_rec(problem, &child, ops, found, max_solutions);
        ops.pop();
        if found.len() >= max_solutions {
            return;
        }
    }
}

/// Domain parameters. Defaults: four inputs in `[1, 99]`, targets in
/// `[10, 99]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainConfig {
    pub num_inputs: usize,
    pub target_min: Number,
    pub target_max: Number,
    pub input_min: Number,
    pub input_max: Number,
    /// Operation-sequence draws per input draw.
    pub rejection_attempts: usize,
    /// Input redraws before giving up.
    pub max_redraws: usize,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig {
            num_inputs: 4,
            target_min: 10,
            target_max: 99,
            input_min: 1,
            input_max: 99,
            rejection_attempts: 1000,
            max_redraws: 100,
        }
    }
}

/// Partition of the target range into train and held-out test targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSplit {
    pub train_targets: BTreeSet<Number>,
    pub test_targets: BTreeSet<Number>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Train,
    TestSeen,
    TestUnseen,
}

impl TargetSplit {
    pub fn targets(&self, side: Side) -> &BTreeSet<Number> {
        match side {
            Side::Train | Side::TestSeen => &self.train_targets,
            Side::TestUnseen => &self.test_targets,
        }
    }

    /// Audit format: `# seed`, `# train` and `# test` headers, one target per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("# seed {}\n# train\n", self.seed);
        for t in &self.train_targets {
            out.push_str(&format!("{t}\n"));
        }
        out.push_str("# test\n");
        for t in &self.test_targets {
            out.push_str(&format!("{t}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CountdownError> {
        let mut seed = 0;
        let mut train = BTreeSet::new();
        let mut test = BTreeSet::new();
        let mut section: Option<bool> = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# seed ") {
                seed = rest
                    .parse()
                    .map_err(|_| CountdownError::MalformedSplit(format!("bad seed on line {}", i + 1)))?;
            } else if line == "# train" {
                section = Some(true);
            } else if line == "# test" {
                section = Some(false);
            } else {
                let n = parse_number(line)
                    .ok_or_else(|| CountdownError::MalformedSplit(format!("line {}: `{line}`", i + 1)))?;
                match section {
                    Some(true) => train.insert(n),
                    Some(false) => test.insert(n),
                    None => return Err(CountdownError::MalformedSplit("value before section header".into())),
                };
            }
        }
        if !train.is_disjoint(&test) {
            return Err(CountdownError::MalformedSplit("train and test overlap".into()));
        }
        Ok(TargetSplit { train_targets: train, test_targets: test, seed })
    }
}

/// Default split: targets `[10, 99]`, 10% held out.
pub fn split_targets(seed: u64) -> TargetSplit {
    let cfg = DomainConfig::default();
    split_targets_in(seed, cfg.target_min, cfg.target_max, 0.1)
}

pub fn split_targets_in(seed: u64, lo: Number, hi: Number, test_fraction: f64) -> TargetSplit {
    let mut all: Vec<Number> = (lo..=hi).collect();
    let n_test = (test_fraction * all.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    let test_targets = all[..n_test].iter().copied().collect();
    let train_targets = all[n_test..].iter().copied().collect();
    TargetSplit { train_targets, test_targets, seed }
}

/// Samples inputs, then random legal operations, until the final value
/// lands in the side's target set. The generating sequence is returned as
/// the problem's optimal path.
pub fn generate_problem<R: Rng + ?Sized>(
    rng: &mut R,
    split: &TargetSplit,
    side: Side,
    cfg: &DomainConfig,
    id: u64,
) -> Result<(Problem, OptimalPath), CountdownError> {
    let targets = split.targets(side);
    let mut attempts = 0;
    for _ in 0..cfg.max_redraws.max(1) {
        let inputs: Vec<Number> = (0..cfg.num_inputs)
            .map(|_| rng.gen_range(cfg.input_min..=cfg.input_max))
            .collect();
        for _ in 0..cfg.rejection_attempts.max(1) {
            attempts += 1;
            let mut state = SearchState::root(inputs.clone());
            while !state.is_leaf() {
                let children = enumerate_children(&state);
                let op = children[rng.gen_range(0..children.len())];
                state = apply_operation(&state, &op)?;
            }
            let value = state.remaining[0];
            if value >= cfg.target_min && value <= cfg.target_max && targets.contains(&value) {
                let problem = Problem::new(id, value, inputs);
                let path = OptimalPath::from_ops(&problem, state.applied)?;
                return Ok((problem, path));
            }
        }
    }
    Err(CountdownError::RejectionBudgetExceeded { attempts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(s: &str) -> OpSpec {
        s.parse().unwrap()
    }

    #[test]
    fn apply_matches_worked_example() {
        let s = SearchState::root(vec![56, 58, 15, 8]);
        let next = apply_operation(&s, &op("58-56=2")).unwrap();
        assert_eq!(next.remaining, vec![15, 8, 2]);
        assert_eq!(next.applied, vec![op("58-56=2")]);

        let s = SearchState::root(vec![5, 20]);
        assert_eq!(apply_operation(&s, &op("20/5=4")).unwrap().remaining, vec![4]);
    }

    #[test]
    fn apply_rejects_illegal_and_missing() {
        let s = SearchState::root(vec![15, 35]);
        let neg = OpSpec { left: 15, operator: Operator::Sub, right: 35, result: 0 };
        assert!(matches!(apply_operation(&s, &neg), Err(CountdownError::IllegalOperation(_))));
        assert!(OpSpec::new(15, Operator::Sub, 35).is_err());
        assert!(OpSpec::new(7, Operator::Div, 2).is_err());
        assert!(OpSpec::new(7, Operator::Div, 0).is_err());
        assert_eq!(
            apply_operation(&s, &op("15+20=35")),
            Err(CountdownError::OperandMissing(20))
        );
        // equal operands need two copies
        let s = SearchState::root(vec![3, 4]);
        assert_eq!(apply_operation(&s, &op("3+3=6")), Err(CountdownError::OperandMissing(3)));
    }

    #[test]
    fn duplicate_inputs_consume_one_copy() {
        let s = SearchState::root(vec![28, 23, 28, 14]);
        let next = apply_operation(&s, &op("28*23=644")).unwrap();
        assert_eq!(next.remaining, vec![28, 14, 644]);
    }

    #[test]
    fn children_of_small_states() {
        let kids = enumerate_children(&SearchState::root(vec![15, 16]));
        assert!(kids.contains(&op("15+16=31")));
        assert!(kids.contains(&op("16-15=1")));
        assert!(kids.iter().all(|k| k.operator != Operator::Div));

        let kids = enumerate_children(&SearchState::root(vec![4, 2]));
        assert_eq!(kids, vec![op("4+2=6"), op("4-2=2"), op("4*2=8"), op("4/2=2")]);

        assert!(enumerate_children(&SearchState::root(vec![42])).is_empty());
    }

    #[test]
    fn children_follow_pair_order() {
        let kids = enumerate_children(&SearchState::root(vec![9, 3, 5]));
        let pairs: Vec<(Number, Number)> =
            kids.iter().map(|k| (k.left.min(k.right), k.left.max(k.right))).collect();
        let mut sorted = pairs.clone();
        sorted.sort();
        assert_eq!(pairs, sorted);
    }

    #[test]
    fn zero_division_only_one_way() {
        let kids = enumerate_children(&SearchState::root(vec![0, 5]));
        assert!(kids.contains(&op("0/5=0")));
        assert!(!kids.iter().any(|k| k.operator == Operator::Div && k.right == 0));
    }

    #[test]
    fn op_text_round_trip_and_rejects() {
        for s in ["58-56=2", "8*2=16", "20/5=4", "15+16=31", "0/5=0"] {
            assert_eq!(op(s).to_string(), s);
        }
        for bad in ["58-56", "a-b=c", "58--56=2", "058-56=2", "58-56=", "-5+3=2"] {
            assert!(bad.parse::<OpSpec>().is_err(), "{bad}");
        }
        // parsed but arithmetically wrong
        assert!(!op("58-56=3").is_legal());
    }

    #[test]
    fn solve_all_finds_worked_path() {
        let p = Problem::new(0, 25, vec![56, 58, 15, 8]);
        let sols = solve_all(&p, usize::MAX).unwrap();
        let want = vec![op("58-56=2"), op("15+8=23"), op("2+23=25")];
        assert!(sols.iter().any(|s| s.ops == want));
        for s in &sols {
            verify_optimal_path(&p, s).unwrap();
        }
    }

    #[test]
    fn solve_all_handles_duplicates() {
        let p = Problem::new(0, 18, vec![28, 23, 28, 14]);
        let sols = solve_all(&p, usize::MAX).unwrap();
        for s in &sols {
            if s.ops[0] == op("28*23=644") {
                assert_eq!(s.subgoal_states[1].remaining, vec![28, 14, 644]);
            }
        }
        // the legacy path dropped both 28s and is not a solution here
        assert!(!sols.iter().any(|s| s.ops.len() == 2));
    }

    #[test]
    fn unsolvable_returns_empty() {
        let p = Problem::new(0, 10, vec![1, 1, 1, 1]);
        assert!(solve_all(&p, usize::MAX).unwrap().is_empty());
        let p = Problem::new(0, 10, vec![1; 6]);
        assert_eq!(solve_all(&p, 1), Err(CountdownError::TooManyInputs(6)));
    }

    #[test]
    fn split_is_deterministic_partition() {
        let a = split_targets(3);
        let b = split_targets(3);
        assert_eq!(a, b);
        assert_eq!(a.test_targets.len(), 9);
        assert_eq!(a.train_targets.len(), 81);
        assert!(a.train_targets.is_disjoint(&a.test_targets));
        let all: BTreeSet<Number> = a.train_targets.union(&a.test_targets).copied().collect();
        assert_eq!(all, (10..=99).collect());
        assert_ne!(split_targets(4), a);
        assert_eq!(TargetSplit::from_text(&a.to_text()).unwrap(), a);
    }

    #[test]
    fn split_text_rejects_garbage() {
        assert!(TargetSplit::from_text("12\n").is_err());
        assert!(TargetSplit::from_text("# train\n12\n# test\n12\n").is_err());
        assert!(TargetSplit::from_text("# train\nabc\n").is_err());
    }

    #[test]
    fn generated_problems_satisfy_contract() {
        let split = split_targets(0);
        let cfg = DomainConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for id in 0..200 {
            let (p, path) = generate_problem(&mut rng, &split, Side::Train, &cfg, id).unwrap();
            assert!(split.train_targets.contains(&p.target));
            assert!((10..=99).contains(&p.target));
            assert!(p.inputs.iter().all(|&n| (1..=99).contains(&n)));
            verify_optimal_path(&p, &path).unwrap();
            assert_eq!(path.subgoal_states.len(), 3);
            assert_eq!(path.subgoal_states[0], p.root());
        }
    }

    #[test]
    fn rejection_budget_is_reported() {
        let split = TargetSplit {
            train_targets: BTreeSet::new(),
            test_targets: BTreeSet::new(),
            seed: 0,
        };
        let cfg = DomainConfig { rejection_attempts: 3, max_redraws: 2, ..DomainConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            generate_problem(&mut rng, &split, Side::Train, &cfg, 0).unwrap_err(),
            CountdownError::RejectionBudgetExceeded { attempts: 6 }
        );
    }
}
