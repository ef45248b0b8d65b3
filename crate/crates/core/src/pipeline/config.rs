use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::SelectionStrategy;
use crate::budget::{Budget, BudgetSpec};
use crate::countdown::DomainConfig;
use crate::rl::RewardSpec;
use crate::search::{Heuristic, SearchConfig};

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// The stochastic symbolic searcher.
    #[default]
    Builtin,
    /// An external process speaking the bridge protocol.
    Bridge,
}

/// Everything a run depends on. Key names double as the config file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub pretrain_count: usize,
    /// Taken from the front of the pretraining problems, by ascending id.
    pub sft_count: usize,
    /// Per test side.
    pub eval_count: usize,
    pub sft_temperature: f64,
    pub eval_temperature: f64,
    pub tau: f64,
    pub max_iter: u32,
    pub selection: SelectionStrategy,
    /// Labels such as `dfs-sum` or `bfs3-multiply`.
    pub mixture: Vec<String>,
    /// Heuristic of the builtin continuation searcher.
    pub heuristic: Heuristic,
    pub budget_spec: BudgetSpec,
    pub budget_limit: usize,
    pub endpoint: Endpoint,
    pub bridge_command: Option<String>,
    /// Run between iterations when the endpoint is a bridge. Receives
    /// `GSOS_CORPUS` and `GSOS_ITERATION` in its environment.
    pub train_command: Option<String>,
    /// Problems per resumable unit of work.
    pub chunk_size: usize,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
    pub domain: DomainConfig,
    /// Operation-level rewards for the advantage export.
    pub reward: RewardSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            pretrain_count: 5_000,
            sft_count: 2_000,
            eval_count: 500,
            sft_temperature: 0.8,
            eval_temperature: 0.0,
            tau: 0.5,
            max_iter: 3,
            selection: SelectionStrategy::First,
            mixture: SearchConfig::pretrain_mixture().iter().map(SearchConfig::label).collect(),
            heuristic: Heuristic::Sum,
            budget_spec: BudgetSpec::Chars,
            budget_limit: 4096,
            endpoint: Endpoint::Builtin,
            bridge_command: None,
            train_command: None,
            chunk_size: 256,
            workers: 0,
            domain: DomainConfig::default(),
            reward: RewardSpec::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Counts at the scale of the original experiments.
    pub fn paper_scale(mut self) -> Self {
        self.pretrain_count = 500_000;
        self.sft_count = 200_000;
        self.eval_count = 10_000;
        self
    }

    pub fn budget(&self) -> Budget {
        Budget::new(self.budget_spec, self.budget_limit)
    }

    pub fn mixture_configs(&self) -> Result<Vec<SearchConfig>, PipelineError> {
        self.mixture
            .iter()
            .map(|l| SearchConfig::from_label(l).map(|c| c.with_budget(self.budget())))
            .collect::<Result<_, _>>()
            .map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if self.pretrain_count == 0 || self.sft_count == 0 || self.eval_count == 0 {
            return fail("problem counts must be positive".into());
        }
        if self.sft_count > self.pretrain_count {
            return fail(format!("sft_count {} exceeds pretrain_count {}", self.sft_count, self.pretrain_count));
        }
        if self.max_iter == 0 {
            return fail("max_iter must be at least 1".into());
        }
        if self.budget_limit == 0 || self.chunk_size == 0 {
            return fail("budget_limit and chunk_size must be positive".into());
        }
        for t in [self.sft_temperature, self.eval_temperature] {
            if !(t >= 0.0 && t.is_finite()) {
                return fail(format!("temperature {t} must be finite and non-negative"));
            }
        }
        if self.mixture.is_empty() {
            return fail("mixture is empty".into());
        }
        self.mixture_configs()?;
        let d = &self.domain;
        if d.num_inputs < 2 || d.input_min > d.input_max || d.target_min > d.target_max {
            return fail("domain ranges are empty".into());
        }
        self.reward.validate().map_err(PipelineError::Config)
    }

    /// SHA-256 over the canonical JSON form.
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serialises").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
