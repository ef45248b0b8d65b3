//! Hint prefixes, subgoal augmentation, and the generate-augment-filter
//! data pass.

mod hint;
mod subgoal;

pub use hint::make_hint_prefix;
pub use subgoal::{
    augment_subgoal, explored_subgoal, subgoal_prefix, AugmentError, AugmentationRecord, NodeSelection,
    SelectionStrategy,
};

use serde::{Deserialize, Serialize};

use crate::budget::{budget_used, Budget, BudgetSpec, Tokenizer};
use crate::countdown::{OptimalPath, Problem};
use crate::generator::ContinuationGenerator;
use crate::rng::derive_seed;
use crate::trajectory::{prompt_text, verify, Trajectory};

/// One training example and how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub problem: Problem,
    pub prompt: String,
    pub trajectory: String,
    pub correct: u8,
    pub augmented: bool,
    pub subgoals_used: usize,
    pub budget_used: usize,
    pub seed: u64,
    pub iteration: u32,
    /// Which generator or search config produced the trajectory.
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub provenance: Vec<AugmentationRecord>,
}

impl DatasetRecord {
    /// Record for a trajectory produced without augmentation.
    pub fn plain(
        problem: &Problem,
        trajectory: &Trajectory,
        budget: Budget,
        tokenizer: Option<&dyn Tokenizer>,
        seed: u64,
        iteration: u32,
    ) -> Result<Self, crate::budget::BudgetError> {
        Ok(DatasetRecord {
            problem: problem.clone(),
            prompt: prompt_text(problem),
            trajectory: trajectory.text.clone(),
            correct: verify(trajectory, problem).metric(),
            augmented: false,
            subgoals_used: 0,
            budget_used: budget_used(&trajectory.text, budget.spec, tokenizer)?,
            seed,
            iteration,
            source: String::new(),
            provenance: Vec::new(),
        })
    }
}

/// Settings for one generate-augment-filter pass over a problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsosParams {
    pub tau: f64,
    pub selection: NodeSelection,
    pub budget: Budget,
    pub seed: u64,
    pub iteration: u32,
    /// `false` runs the bare generator, for paired comparisons.
    pub augment: bool,
}

impl Default for GsosParams {
    fn default() -> Self {
        GsosParams {
            tau: 0.5,
            selection: NodeSelection::default(),
            budget: Budget::default(),
            seed: 0,
            iteration: 0,
            augment: true,
        }
    }
}

/// Generates from the bare prompt, then augments subgoals `1..N-1` in
/// order for as long as the trajectory is still judged incorrect.
pub fn gsos_generate(
    gen: &dyn ContinuationGenerator,
    problem: &Problem,
    path: &OptimalPath,
    params: &GsosParams,
    tokenizer: Option<&dyn Tokenizer>,
) -> Result<DatasetRecord, AugmentError> {
    let call_seed = |n: u64| derive_seed(params.seed, &[crate::rng::purpose::GSOS, params.iteration as u64, problem.id, n]);
    let mut y = gen.continue_from(problem, &Trajectory::prompt(problem), params.budget, call_seed(0))?;
    let mut correct = verify(&y, problem).metric();
    let mut provenance = Vec::new();
    if params.augment {
        for n in 1..path.len() {
            if f64::from(correct) > params.tau {
                break;
            }
            let sel = NodeSelection { seed: derive_seed(params.selection.seed, &[params.iteration as u64]), ..params.selection };
            let (next, record) = match augment_subgoal(gen, problem, &y, path, n, &sel, params.budget, call_seed(n as u64)) {
                Ok(out) => out,
                // an earlier prefix was cut by the budget before reaching it
                Err(AugmentError::NoSubgoalContext(_)) => break,
                Err(e) => return Err(e),
            };
            y = next;
            correct = verify(&y, problem).metric();
            provenance.push(record);
        }
    }
    let subgoals_used = provenance.iter().filter(|r| r.applied).count();
    let used = match (params.budget.spec, tokenizer) {
        (BudgetSpec::ExternalTokenizer, None) => 0,
        (spec, tok) => budget_used(&y.text, spec, tok)?,
    };
    Ok(DatasetRecord {
        problem: problem.clone(),
        prompt: prompt_text(problem),
        trajectory: y.text,
        correct,
        augmented: subgoals_used > 0,
        subgoals_used,
        budget_used: used,
        seed: params.seed,
        iteration: params.iteration,
        source: gen.id(),
        provenance,
    })
}

/// Keeps records whose correctness exceeds `tau`.
pub fn filter_records(records: Vec<DatasetRecord>, tau: f64) -> Vec<DatasetRecord> {
    records.into_iter().filter(|r| f64::from(r.correct) > tau).collect()
}

/// Splits into (kept, dropped) under the same rule as [`filter_records`].
pub fn partition_records(records: Vec<DatasetRecord>, tau: f64) -> (Vec<DatasetRecord>, Vec<DatasetRecord>) {
    records.into_iter().partition(|r| f64::from(r.correct) > tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{Identity, SymbolicOracle};
    use crate::search::Heuristic;
    use crate::trajectory::{parse_trajectory, ParseMode};

    fn worked() -> (Problem, OptimalPath) {
        let p = Problem::new(0, 25, vec![56, 58, 15, 8]);
        let ops = ["58-56=2", "15+8=23", "2+23=25"].iter().map(|s| s.parse().unwrap()).collect();
        let path = OptimalPath::from_ops(&p, ops).unwrap();
        (p, path)
    }

    #[test]
    fn solving_generator_needs_no_subgoals() {
        let (p, path) = worked();
        let gen = SymbolicOracle::new(Heuristic::Sum, 0.0);
        let params = GsosParams { budget: Budget::unlimited(), ..GsosParams::default() };
        let r = gsos_generate(&gen, &p, &path, &params, None).unwrap();
        assert_eq!(r.correct, 1);
        assert_eq!(r.subgoals_used, 0);
        assert!(!r.augmented);
    }

    #[test]
    fn identity_generator_stops_at_last_subgoal() {
        let (p, path) = worked();
        let r = gsos_generate(&Identity, &p, &path, &GsosParams::default(), None).unwrap();
        assert_eq!(r.correct, 0);
        assert_eq!(r.subgoals_used, 2);
        let t = parse_trajectory(&r.trajectory, &p, ParseMode::Strict).unwrap();
        assert!(explored_subgoal(&t, &path, 2));
        assert_eq!(t.text.rsplit('\n').next().unwrap(), "Current State: 25:[2, 23], Operations: ['58-56=2', '15+8=23']");
    }

    #[test]
    fn tight_budget_record_is_incorrect() {
        let (p, path) = worked();
        let gen = SymbolicOracle::new(Heuristic::Sum, 1.0);
        let params = GsosParams { budget: Budget::chars(120), ..GsosParams::default() };
        let r = gsos_generate(&gen, &p, &path, &params, None).unwrap();
        assert_eq!(r.correct, 0);
        assert!(r.budget_used <= 120);
    }

    #[test]
    fn filtering() {
        let (p, path) = worked();
        let good = gsos_generate(&SymbolicOracle::new(Heuristic::Sum, 0.0), &p, &path, &GsosParams::default(), None)
            .unwrap();
        let bad = gsos_generate(&Identity, &p, &path, &GsosParams::default(), None).unwrap();
        let mut batch = vec![good.clone(); 4];
        batch.extend(vec![bad; 6]);
        assert_eq!(filter_records(batch.clone(), 0.5).len(), 4);
        assert!(filter_records(batch.clone(), 1.5).is_empty());
        let (kept, dropped) = partition_records(batch, 0.5);
        assert_eq!((kept.len(), dropped.len()), (4, 6));
        for r in kept {
            let t = parse_trajectory(&r.trajectory, &r.problem, ParseMode::Strict).unwrap();
            assert!(verify(&t, &r.problem).correct);
        }
    }

    #[test]
    fn record_json_shape() {
        let (p, path) = worked();
        let r = gsos_generate(&Identity, &p, &path, &GsosParams::default(), None).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in [
            "problem", "prompt", "trajectory", "correct", "augmented", "subgoals_used", "budget_used", "seed",
            "iteration", "provenance",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["provenance"][0]["n"], 1);
        let back: DatasetRecord = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
