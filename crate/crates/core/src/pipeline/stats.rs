use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::DatasetRecord;
use crate::budget::{BudgetSpec, Tokenizer};
use crate::rl::{horizon_stats, HorizonStats};

use super::{read_jsonl, PipelineError};

/// The same summary over kept and dropped records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStat<T> {
    pub kept: T,
    pub dropped: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramEntry {
    pub subgoals_used: usize,
    pub kept: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub records: usize,
    pub kept: usize,
    pub dropped: usize,
    pub success_ratio: f64,
    /// Nearest-rank 0%, 10%, ..., 100% points of `budget_used`.
    pub length_deciles: SplitStat<Vec<f64>>,
    pub subgoals_used: Vec<HistogramEntry>,
    pub horizon: SplitStat<Option<HorizonStats>>,
    #[serde(default)]
    pub loss_deciles: Option<SplitStat<Vec<f64>>>,
}

/// Nearest-rank quantiles at 0, 0.1, ..., 1. Empty input gives an empty list.
pub fn deciles(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return v;
    }
    (0..=10)
        .map(|k| {
            let rank = ((k as f64 / 10.0) * v.len() as f64).ceil() as usize;
            v[rank.clamp(1, v.len()) - 1]
        })
        .collect()
}

/// Per-problem scalars from a JSONL file of `{"problem_id", "loss"}`.
pub fn read_losses(path: &Path) -> Result<HashMap<u64, f64>, PipelineError> {
    #[derive(Deserialize)]
    struct Row {
        problem_id: u64,
        loss: f64,
    }
    let rows: Vec<Row> = read_jsonl(path)?;
    let mut out = HashMap::with_capacity(rows.len());
    for r in rows {
        if out.insert(r.problem_id, r.loss).is_some() {
            return Err(PipelineError::Schema(format!("duplicate loss for problem {}", r.problem_id)));
        }
    }
    Ok(out)
}

pub fn stats_report(
    records: &[DatasetRecord],
    tau: f64,
    spec: BudgetSpec,
    tokenizer: Option<&dyn Tokenizer>,
    losses: Option<&HashMap<u64, f64>>,
) -> Result<StatsReport, PipelineError> {
    let (kept, dropped): (Vec<&DatasetRecord>, Vec<&DatasetRecord>) =
        records.iter().partition(|r| f64::from(r.correct) > tau);
    let lengths = |rs: &[&DatasetRecord]| deciles(&rs.iter().map(|r| r.budget_used as f64).collect::<Vec<_>>());
    let horizon = |rs: &[&DatasetRecord]| -> Result<Option<HorizonStats>, PipelineError> {
        if rs.is_empty() {
            return Ok(None);
        }
        Ok(Some(horizon_stats(rs.iter().map(|r| r.trajectory.as_str()), spec, tokenizer).map_err(|e| match e {
            crate::rl::RlError::Budget(b) => PipelineError::from(b),
            other => PipelineError::Schema(other.to_string()),
        })?))
    };
    let mut hist: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in &kept {
        hist.entry(r.subgoals_used).or_default().0 += 1;
    }
    for r in &dropped {
        hist.entry(r.subgoals_used).or_default().1 += 1;
    }
    let loss_deciles = match losses {
        None => None,
        Some(map) => {
            let pick = |rs: &[&DatasetRecord]| -> Result<Vec<f64>, PipelineError> {
                let v = rs
                    .iter()
                    .map(|r| {
                        map.get(&r.problem.id)
                            .copied()
                            .ok_or_else(|| PipelineError::Schema(format!("no loss for problem {}", r.problem.id)))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(deciles(&v))
            };
            Some(SplitStat { kept: pick(&kept)?, dropped: pick(&dropped)? })
        }
    };
    let n = records.len();
    Ok(StatsReport {
        records: n,
        kept: kept.len(),
        dropped: dropped.len(),
        success_ratio: if n == 0 { 0.0 } else { records.iter().map(|r| r.correct as f64).sum::<f64>() / n as f64 },
        length_deciles: SplitStat { kept: lengths(&kept), dropped: lengths(&dropped) },
        subgoals_used: hist
            .into_iter()
            .map(|(subgoals_used, (kept, dropped))| HistogramEntry { subgoals_used, kept, dropped })
            .collect(),
        horizon: SplitStat { kept: horizon(&kept)?, dropped: horizon(&dropped)? },
        loss_deciles,
    })
}
