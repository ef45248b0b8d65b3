//! The continuation-generator interface: anything that can resume a search
//! from a partial trajectory. The builtin implementation is the stochastic
//! symbolic searcher; [`crate::bridge::BridgeClient`] forwards to a model.

use thiserror::Error;

use crate::budget::Budget;
use crate::countdown::Problem;
use crate::search::{continue_search, Heuristic, SearchConfig, SearchError};
use crate::trajectory::Trajectory;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("bridge: {0}")]
    Bridge(String),
}

pub trait ContinuationGenerator: Send + Sync {
    /// Extends `prefix`; the result must start with `prefix.text` and stay
    /// within `budget`.
    fn continue_from(
        &self,
        problem: &Problem,
        prefix: &Trajectory,
        budget: Budget,
        seed: u64,
    ) -> Result<Trajectory, GeneratorError>;

    /// Provenance label recorded with every call.
    fn id(&self) -> String;
}

/// Stochastic depth-first search standing in for a trained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolicOracle {
    pub heuristic: Heuristic,
    pub temperature: f64,
    pub prune: bool,
}

impl SymbolicOracle {
    pub fn new(heuristic: Heuristic, temperature: f64) -> Self {
        SymbolicOracle { heuristic, temperature, prune: false }
    }

    pub fn config(&self, budget: Budget, seed: u64) -> SearchConfig {
        SearchConfig { prune: self.prune, ..SearchConfig::stochastic(self.heuristic, self.temperature, seed) }
            .with_budget(budget)
    }
}

impl ContinuationGenerator for SymbolicOracle {
    fn continue_from(
        &self,
        problem: &Problem,
        prefix: &Trajectory,
        budget: Budget,
        seed: u64,
    ) -> Result<Trajectory, GeneratorError> {
        Ok(continue_search(prefix, problem, &self.config(budget, seed))?)
    }

    fn id(&self) -> String {
        format!("oracle:{}:t{}{}", self.heuristic, self.temperature, if self.prune { ":prune" } else { "" })
    }
}

/// Returns every prefix untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl ContinuationGenerator for Identity {
    fn continue_from(&self, _: &Problem, prefix: &Trajectory, _: Budget, _: u64) -> Result<Trajectory, GeneratorError> {
        Ok(prefix.clone())
    }

    fn id(&self) -> String {
        "identity".into()
    }
}
