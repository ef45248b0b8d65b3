//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Tolerances are pinned below.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gsos_core::augment::{
    augment_subgoal, explored_subgoal, subgoal_prefix, GsosParams, NodeSelection, SelectionStrategy,
};
use gsos_core::budget::Budget;
use gsos_core::countdown::{apply_operation, enumerate_children, same_multiset};
use gsos_core::generator::{ContinuationGenerator, SymbolicOracle};
use gsos_core::pipeline::{
    cmd_evaluate, cmd_gsos, cmd_make_pretrain, cmd_split, hint_sweep, make_split, problem_set, selection_sweep,
    Backend, GsosOptions, PipelineConfig,
};
use gsos_core::rl::{compute_gae, subgoal_bonus, RewardSpec};
use gsos_core::search::{run_symbolic, Heuristic, SearchConfig};
use gsos_core::trajectory::{prompt_event, render, NodeIndex};
use gsos_core::{
    parse_trajectory, verify, OptimalPath, ParseMode, Problem, Side, Trajectory, TrajectoryEvent,
};

// Pinned settings for the stochastic criteria.
const TEMPERATURE: f64 = 0.8;
const BUDGET_CHARS: usize = 1200;
const SWEEP_TOLERANCE: f64 = 0.02;
const MIN_LIFT: f64 = 0.05;
const GAE_TOLERANCE: f64 = 1e-9;
const ETA: f64 = 0.2;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn problems(seed: u64, count: usize) -> Vec<(Problem, OptimalPath)> {
    let cfg = PipelineConfig { seed, ..PipelineConfig::default() };
    problem_set(&cfg, &make_split(&cfg), Side::Train, count, &Default::default()).expect("problems")
}

fn oracle() -> SymbolicOracle {
    SymbolicOracle::new(Heuristic::Sum, TEMPERATURE)
}

fn budget() -> Budget {
    Budget::chars(BUDGET_CHARS)
}

/// 10,000 symbolic trajectories across the 12-way mixture.
fn symbolic_corpus(seed: u64, count: usize) -> Vec<(Problem, OptimalPath, Trajectory)> {
    let mixture = SearchConfig::pretrain_mixture();
    problems(seed, count)
        .into_iter()
        .enumerate()
        .map(|(i, (p, path))| {
            let cfg = mixture[i % mixture.len()].with_budget(Budget::chars(2000 + 500 * (i % 5)));
            let t = run_symbolic(&p, &cfg).expect("search");
            (p, path, t)
        })
        .collect()
}

// ---------------------------------------------------------------- 1

fn grammar_round_trip() -> Outcome {
    let corpus = symbolic_corpus(101, 10_000);
    let mut bad = 0;
    for (p, _, t) in &corpus {
        let ok = match parse_trajectory(&t.text, p, ParseMode::Strict) {
            Ok(parsed) => render(&parsed.events) == t.text && parsed.events == t.events,
            Err(_) => false,
        };
        bad += usize::from(!ok);
    }
    let msg = format!("{} trajectories, {} mismatches", corpus.len(), bad);
    if bad == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 2

/// Independent re-simulation straight from the text lines.
mod resim {
    use std::collections::HashMap;

    fn num(s: &str) -> Option<u64> {
        if s.is_empty() || (s.len() > 1 && s.starts_with('0')) || !s.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        s.parse().ok()
    }

    fn list(s: &str) -> Option<Vec<u64>> {
        let inner = s.strip_prefix('[')?.strip_suffix(']')?;
        if inner.is_empty() {
            return Some(Vec::new());
        }
        inner.split(", ").map(num).collect()
    }

    type Op = (u64, char, u64, u64);

    fn op(s: &str) -> Option<Op> {
        let (lhs, res) = s.split_once('=')?;
        let pos = lhs.find(['+', '-', '*', '/'])?;
        let sym = lhs[pos..].chars().next()?;
        Some((num(&lhs[..pos])?, sym, num(&lhs[pos + 1..])?, num(res)?))
    }

    fn op_text(o: &Op) -> String {
        format!("{}{}{}={}", o.0, o.1, o.2, o.3)
    }

    fn ops_list(s: &str) -> Option<Vec<Op>> {
        let inner = s.strip_prefix('[')?.strip_suffix(']')?;
        if inner.is_empty() {
            return Some(Vec::new());
        }
        inner.split(", ").map(|q| op(q.strip_prefix('\'')?.strip_suffix('\'')?)).collect()
    }

    fn eval(o: &Op) -> Option<u64> {
        match o.1 {
            '+' => o.0.checked_add(o.2),
            '-' => o.0.checked_sub(o.2),
            '*' => o.0.checked_mul(o.2),
            '/' => (o.2 > 0 && o.0.is_multiple_of(o.2)).then(|| o.0 / o.2),
            _ => None,
        }
    }

    fn index(s: &str) -> Option<Vec<u64>> {
        s.strip_prefix('#')?.split(',').map(num).collect()
    }

    /// `target:[...]`
    fn target_numbers(s: &str) -> Option<(u64, Vec<u64>)> {
        let (t, l) = s.split_once(':')?;
        Some((num(t)?, list(l)?))
    }

    #[derive(Clone)]
    struct Node {
        numbers: Vec<u64>,
        ops: Vec<Op>,
    }

    fn apply(node: &Node, o: &Op) -> Option<Node> {
        if eval(o)? != o.3 {
            return None;
        }
        let mut numbers = node.numbers.clone();
        let i = numbers.iter().position(|&x| x == o.0)?;
        numbers.remove(i);
        let j = numbers.iter().position(|&x| x == o.2)?;
        numbers.remove(j);
        numbers.push(o.3);
        let mut ops = node.ops.clone();
        ops.push(*o);
        Some(Node { numbers, ops })
    }

    /// True iff the text is a consistent trajectory ending in a reached goal.
    pub fn correct(text: &str, target: u64, inputs: &[u64]) -> bool {
        let lines: Vec<&str> = text.split('\n').collect();
        let prompt = format!(
            "Current State: {target}:[{}], Operations: []",
            inputs.iter().map(u64::to_string).collect::<Vec<_>>().join(", ")
        );
        if lines[0] != prompt {
            return false;
        }
        let mut nodes: HashMap<Vec<u64>, Node> = HashMap::new();
        nodes.insert(vec![0], Node { numbers: inputs.to_vec(), ops: vec![] });
        let mut current = vec![0u64];
        let mut awaiting_state = false;
        let mut pending: Option<Node> = None;
        for (i, line) in lines.iter().enumerate().skip(1) {
            let last = i + 1 == lines.len();
            if let Some(rest) = line.strip_prefix("Exploring Operation: ") {
                let Some((o, res)) = rest.split_once(", Resulting Numbers: ") else { return false };
                let (Some(o), Some(res)) = (op(o), list(res)) else { return false };
                if awaiting_state || pending.is_some() {
                    return false;
                }
                match apply(&nodes[&current], &o) {
                    Some(child) if child.numbers == res => pending = Some(child),
                    _ => return false,
                }
            } else if let Some(rest) = line.strip_prefix("Generated Node ") {
                let Some((idx, rest)) = rest.split_once(": ") else { return false };
                let Some((tn, o)) = rest.split_once(" Operation: ") else { return false };
                let (Some(idx), Some((t, numbers)), Some(o)) = (index(idx), target_numbers(tn), op(o)) else {
                    return false;
                };
                let Some(child) = pending.take() else { return false };
                let parent_ok = idx.len() == current.len() + 1 && idx[..current.len()] == current[..];
                if !parent_ok
                    || nodes.contains_key(&idx)
                    || t != target
                    || numbers != child.numbers
                    || child.numbers.len() < 2
                    || op_text(child.ops.last().unwrap()) != op_text(&o)
                {
                    return false;
                }
                nodes.insert(idx, child);
            } else if let Some(rest) = line.strip_prefix("Moving to Node ") {
                let Some(idx) = index(rest) else { return false };
                if pending.is_some() || awaiting_state || !nodes.contains_key(&idx) {
                    return false;
                }
                current = idx;
                awaiting_state = true;
            } else if let Some(rest) = line.strip_prefix("Current State: ") {
                let Some((tn, ops)) = rest.split_once(", Operations: ") else { return false };
                let (Some((t, numbers)), Some(ops)) = (target_numbers(tn), ops_list(ops)) else { return false };
                let node = &nodes[&current];
                if !awaiting_state || t != target || numbers != node.numbers || ops != node.ops {
                    return false;
                }
                awaiting_state = false;
            } else if let Some((pair, verdict)) = line.split_once(' ') {
                let Some((v, t)) = pair.split_once(',') else { return false };
                let (Some(v), Some(t)) = (num(v), num(t)) else { return false };
                let Some(leaf) = pending.take() else { return false };
                let success = match verdict {
                    "equal: Goal Reached" => true,
                    "unequal: No Solution" => false,
                    _ => return false,
                };
                if leaf.numbers != [v] || t != target || (v == t) != success {
                    return false;
                }
                if success {
                    return last;
                }
            } else {
                return false;
            }
        }
        false
    }
}

fn mutate(text: &str, rng: &mut ChaCha8Rng) -> String {
    let mut lines: Vec<String> = text.split('\n').map(str::to_string).collect();
    let i = rng.gen_range(0..lines.len());
    match rng.gen_range(0..5) {
        0 => {
            // change one digit
            let digits: Vec<usize> = lines[i].char_indices().filter(|(_, c)| c.is_ascii_digit()).map(|(k, _)| k).collect();
            if let Some(&k) = digits.choose(rng) {
                let old = lines[i].as_bytes()[k];
                let new = loop {
                    let d = b'0' + rng.gen_range(0..10u8);
                    if d != old {
                        break d;
                    }
                };
                lines[i].replace_range(k..k + 1, &(new as char).to_string());
            }
        }
        1 => {
            let ops: Vec<usize> = lines[i].char_indices().filter(|(_, c)| "+-*/".contains(*c)).map(|(k, _)| k).collect();
            if let Some(&k) = ops.choose(rng) {
                let sym = *['+', '-', '*', '/'].choose(rng).unwrap();
                lines[i].replace_range(k..k + 1, &sym.to_string());
            }
        }
        2 => {
            let j = rng.gen_range(0..lines.len());
            lines[i] = lines[j].clone();
        }
        3 => {
            lines.remove(i);
        }
        _ => {
            let dup = lines[i].clone();
            lines.insert(i, dup);
        }
    }
    lines.join("\n")
}

fn verifier_equivalence() -> Outcome {
    let corpus = symbolic_corpus(202, 1_000);
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut clean_bad, mut mutated_bad, mut clean_correct, mut mutated_changed) = (0, 0, 0, 0);
    for (p, _, t) in &corpus {
        let ours = verify(t, p).correct;
        let theirs = resim::correct(&t.text, p.target, &p.inputs);
        clean_bad += usize::from(ours != theirs);
        clean_correct += usize::from(theirs);

        let m = mutate(&t.text, &mut rng);
        mutated_changed += usize::from(m != t.text);
        let ours = match parse_trajectory(&m, p, ParseMode::Lenient) {
            Ok(mt) => verify(&mt, p).correct,
            Err(_) => false,
        };
        mutated_bad += usize::from(ours != resim::correct(&m, p.target, &p.inputs));
    }
    let msg = format!(
        "clean disagreements {clean_bad}/1000 ({clean_correct} correct), mutated disagreements {mutated_bad}/1000 ({mutated_changed} changed)"
    );
    if clean_bad == 0 && mutated_bad == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 3

fn hint_sweep_trend() -> Outcome {
    let ps = problems(303, 1_000);
    let s = hint_sweep(&ps, &oracle(), budget(), 303, 3).map_err(|e| e.to_string())?;
    let monotone = s.windows(2).all(|w| w[1] >= w[0] - SWEEP_TOLERANCE);
    let msg = format!("success by n = {s:?}");
    if monotone && s[3] == 1.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 4

fn algorithm_postconditions() -> Outcome {
    let gen = oracle();
    let mut calls = 0;
    let mut failures = Vec::new();
    let sel_for = |i: usize| {
        let s = [SelectionStrategy::First, SelectionStrategy::Rand, SelectionStrategy::Last][i % 3];
        NodeSelection::new(s, 404)
    };
    'outer: for (k, (p, path)) in problems(404, 2_000).into_iter().enumerate() {
        let y = gen.continue_from(&p, &Trajectory::prompt(&p), budget(), k as u64).map_err(|e| e.to_string())?;
        if verify(&y, &p).correct {
            continue;
        }
        let mut y = y;
        for n in 1..path.len() {
            if explored_subgoal(&y, &path, n) || !explored_subgoal(&y, &path, n - 1) {
                continue;
            }
            let sel = sel_for(calls);
            calls += 1;
            let Some((prefix, rec)) = subgoal_prefix(&p, &y, &path, n, &sel).map_err(|e| e.to_string())? else {
                failures.push(format!("problem {}: no prefix for n={n}", p.id));
                continue;
            };
            let orig: Vec<&str> = y.text.split('\n').collect();
            let new: Vec<&str> = prefix.text.split('\n').collect();
            let changed: Vec<usize> = rec.replaced_lines.iter().chain(&rec.inserted_lines).copied().collect();
            let first_changed = changed.iter().min().copied().unwrap_or(usize::MAX);
            let preserved = if rec.inserted_lines.is_empty() {
                (1..=new.len()).all(|l| changed.contains(&l) || new[l - 1] == orig[l - 1])
            } else {
                (1..first_changed).all(|l| new[l - 1] == orig[l - 1]) && new.len() == first_changed + 3
            };
            let diag = verify(&prefix, &p).diagnostic;
            let clean = matches!(diag, Some(gsos_core::trajectory::Diagnostic::Truncated));
            let explores = explored_subgoal(&prefix, &path, n);
            let (out, _) = augment_subgoal(&gen, &p, &y, &path, n, &sel, budget(), k as u64).map_err(|e| e.to_string())?;
            let extends = out.text.starts_with(&prefix.text);
            let again = subgoal_prefix(&p, &prefix, &path, n, &sel).map_err(|e| e.to_string())?.is_none();
            let (twice, rec2) = augment_subgoal(&gen, &p, &out, &path, n, &sel, budget(), 9).map_err(|e| e.to_string())?;
            let idempotent = again && twice.text == out.text && !rec2.applied;
            if !(preserved && clean && explores && extends && idempotent) {
                failures.push(format!(
                    "problem {} n={n}: preserved={preserved} clean={clean}({diag:?}) explores={explores} extends={extends} idempotent={idempotent}",
                    p.id
                ));
            }
            y = out;
            if calls == 1_000 {
                break 'outer;
            }
        }
    }
    let msg = format!("{calls} calls, {} failures{}", failures.len(), failures.first().map(|f| format!("; first: {f}")).unwrap_or_default());
    if calls == 1_000 && failures.is_empty() {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 5, 6

fn backend() -> Backend {
    Backend { generator: Arc::new(oracle()), tokenizer: None }
}

fn base_params(seed: u64) -> GsosParams {
    GsosParams {
        budget: budget(),
        seed,
        selection: NodeSelection::new(SelectionStrategy::First, seed),
        ..GsosParams::default()
    }
}

fn gsos_lift() -> Outcome {
    let ps = problems(505, 1_000);
    let b = backend();
    let plain = selection_sweep(&ps, &b, &GsosParams { augment: false, ..base_params(505) }).map_err(|e| e.to_string())?;
    let aug = selection_sweep(&ps, &b, &base_params(505)).map_err(|e| e.to_string())?;
    let (p, a) = (plain[0].success_ratio, aug[0].success_ratio);
    let msg = format!("without {p:.4}, with {a:.4}, lift {:.4} (need > {MIN_LIFT})", a - p);
    if a - p > MIN_LIFT {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn node_selection_order() -> Outcome {
    let ps = problems(606, 500);
    let r = selection_sweep(&ps, &backend(), &base_params(606)).map_err(|e| e.to_string())?;
    let (f, ra, l) = (&r[0], &r[1], &r[2]);
    let msg = format!(
        "prefix chars first {:.1} / rand {:.1} / last {:.1}; success first {:.4} / rand {:.4} / last {:.4}",
        f.mean_prefix_len, ra.mean_prefix_len, l.mean_prefix_len, f.success_ratio, ra.success_ratio, l.success_ratio
    );
    if f.mean_prefix_len < ra.mean_prefix_len && ra.mean_prefix_len < l.mean_prefix_len && l.success_ratio <= f.success_ratio
    {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 7

fn gae_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst: f64 = 0.0;
    let mut telescoping_exact = true;
    for _ in 0..1_000 {
        let n = rng.gen_range(1..60);
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let gamma = rng.gen_range(0.5..=1.0);
        let lambda = rng.gen_range(0.0..=1.0);
        let a = compute_gae(&r, &v, gamma, lambda).map_err(|e| e.to_string())?;
        for h in 0..n {
            let mut sum = 0.0;
            for k in h..n {
                let next = if k + 1 < n { v[k + 1] } else { 0.0 };
                sum += (gamma * lambda).powi((k - h) as i32) * (r[k] + gamma * next - v[k]);
            }
            worst = worst.max((sum - a.advantages[h]).abs());
        }
        // dyadic series keep every sum exact in f64
        let ri: Vec<f64> = (0..n).map(|_| rng.gen_range(-64i32..64) as f64 / 8.0).collect();
        let vi: Vec<f64> = (0..n).map(|_| rng.gen_range(-64i32..64) as f64 / 8.0).collect();
        let a = compute_gae(&ri, &vi, 1.0, 1.0).map_err(|e| e.to_string())?;
        for h in 0..n {
            let togo: f64 = ri[h..].iter().sum();
            telescoping_exact &= a.advantages[h] == togo - vi[h];
        }
    }
    let msg = format!("max |oracle - gae| = {worst:.3e} (< {GAE_TOLERANCE:e}); telescoping exact = {telescoping_exact}");
    if worst < GAE_TOLERANCE && telescoping_exact {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 8

/// Random walks that reach subgoal states several times through fresh
/// nodes, plus decoy children; returns the trajectory and the expected
/// bonus per segment.
fn revisit_trajectory(p: &Problem, path: &OptimalPath, rng: &mut ChaCha8Rng) -> (Trajectory, Vec<f64>) {
    let root = NodeIndex::root();
    let mut events = vec![prompt_event(p)];
    let mut next_child: HashMap<NodeIndex, u32> = HashMap::new();
    let mut arrivals: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut go = |events: &mut Vec<TrajectoryEvent>, from: &NodeIndex, state: &gsos_core::SearchState, op| {
        let child = apply_operation(state, &op).unwrap();
        let k = next_child.entry(from.clone()).or_insert(0);
        let idx = from.child(*k);
        *k += 1;
        events.push(TrajectoryEvent::ExploringOperation { op, resulting: child.remaining.clone() });
        events.push(TrajectoryEvent::GeneratedNode { index: idx.clone(), target: p.target, numbers: child.remaining.clone(), op });
        events.push(TrajectoryEvent::MovingToNode { index: idx.clone() });
        events.push(TrajectoryEvent::CurrentState { target: p.target, numbers: child.remaining.clone(), ops: child.applied.clone() });
        (idx, child, events.len() - 1)
    };
    let root_state = p.root();
    for _ in 0..rng.gen_range(1..6) {
        let (idx, state, line) = if rng.gen_bool(0.7) {
            go(&mut events, &root, &root_state, path.ops[0])
        } else {
            let ops = enumerate_children(&root_state);
            go(&mut events, &root, &root_state, *ops.choose(rng).unwrap())
        };
        arrivals.push((line, state.remaining.clone()));
        if path.len() > 2 && rng.gen_bool(0.5) && same_multiset(&state.remaining, &path.subgoal_states[1].remaining) {
            let (_, s2, line) = go(&mut events, &idx, &state, path.ops[1]);
            arrivals.push((line, s2.remaining.clone()));
        }
        events.push(TrajectoryEvent::MovingToNode { index: root.clone() });
        events.push(TrajectoryEvent::CurrentState { target: p.target, numbers: p.inputs.clone(), ops: vec![] });
    }
    let t = Trajectory::from_events(p.id, events);
    let mut expected = vec![0.0; t.len() - 1];
    for goal in &path.subgoal_states[1..] {
        if let Some((line, _)) = arrivals.iter().find(|(_, nums)| same_multiset(nums, &goal.remaining)) {
            expected[line - 1] += ETA;
        }
    }
    (t, expected)
}

fn subgoal_bonus_once() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let spec = RewardSpec::default();
    let mut bad = 0;
    let mut revisits = 0;
    let ps = problems(808, 500);
    for (p, path) in &ps {
        for _ in 0..4 {
            let (t, expected) = revisit_trajectory(p, path, &mut rng);
            let got = subgoal_bonus(&t, path, &spec);
            let nonzero = got.iter().filter(|x| **x != 0.0).count();
            revisits += usize::from(t.text.matches(&format!("Operations: ['{}']", path.ops[0])).count() > 1);
            if got != expected || nonzero > path.len() - 1 || got.iter().any(|x| *x != 0.0 && *x != ETA) {
                bad += 1;
            }
        }
    }
    let msg = format!("{} trajectories ({revisits} revisiting subgoal 1), {bad} mismatches, eta = {}", ps.len() * 4, spec.subgoal_weight);
    if bad == 0 && spec.subgoal_weight == ETA && revisits > 100 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 9

fn pipeline_run(dir: &Path) -> Result<(), String> {
    let cfg = PipelineConfig { seed: 909, ..PipelineConfig::default() };
    let e = |e: gsos_core::pipeline::PipelineError| e.to_string();
    cmd_split(&cfg, dir).map_err(e)?;
    cmd_make_pretrain(&cfg, &dir.join("pretrain"), None).map_err(e)?;
    cmd_gsos(&cfg, &dir.join("gsos"), &GsosOptions::default(), &mut |_| Ok(Backend::builtin(&cfg, cfg.sft_temperature)))
        .map_err(e)?;
    let eval = Backend::builtin(&cfg, cfg.eval_temperature);
    cmd_evaluate(&cfg, Some(&dir.join("eval")), &eval, &[0, 1, 2]).map_err(e)?;
    Ok(())
}

fn tree_digest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline_run(a.path())?;
    pipeline_run(b.path())?;
    let (ta, tb) = (tree_digest(a.path()), tree_digest(b.path()));
    let differing: Vec<&String> =
        ta.iter().zip(&tb).filter(|(x, y)| x != y).map(|(x, _)| &x.0).collect();
    let msg = format!("{} files, {} differ{}", ta.len(), differing.len(), if ta.len() != tb.len() { " (file sets differ)" } else { "" });
    if ta.len() == tb.len() && differing.is_empty() && ta.len() > 10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("grammar round-trip", grammar_round_trip),
        ("verifier matches re-simulation", verifier_equivalence),
        ("hint-prefix sweep", hint_sweep_trend),
        ("augmentation postconditions", algorithm_postconditions),
        ("GSoS lift", gsos_lift),
        ("node-selection ordering", node_selection_order),
        ("GAE correctness", gae_correctness),
        ("subgoal bonus once per subgoal", subgoal_bonus_once),
        ("pipeline determinism", determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    let mut err = std::io::stderr();
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        failed += usize::from(outcome.is_err());
        writeln!(err, "criterion {}: {tag} {name}: {detail} [{secs:.1}s]", i + 1).unwrap();
    }
    if failed > 0 {
        writeln!(err, "{failed} acceptance criteria failed").unwrap();
        std::process::exit(1);
    }
}
