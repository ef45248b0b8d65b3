use std::sync::Arc;

use crate::budget::{BudgetError, Tokenizer};
use crate::trajectory::{Trajectory, TrajectoryEvent};

/// Appends event lines while the measured length stays within the limit.
pub(crate) struct TraceWriter {
    problem_id: u64,
    events: Vec<TrajectoryEvent>,
    text: String,
    tokenizer: Arc<dyn Tokenizer>,
    limit: Option<usize>,
    used: usize,
    pub(crate) full: bool,
}

impl TraceWriter {
    pub(crate) fn from_prefix(
        prefix: &Trajectory,
        tokenizer: Arc<dyn Tokenizer>,
        limit: Option<usize>,
    ) -> Result<Self, BudgetError> {
        let used = tokenizer.count(&prefix.text)?;
        let full = limit.is_some_and(|l| used > l);
        Ok(TraceWriter {
            problem_id: prefix.problem_id,
            events: prefix.events.clone(),
            text: prefix.text.clone(),
            tokenizer,
            limit,
            used,
            full,
        })
    }

    /// Returns `false` (and latches `full`) when the line does not fit.
    pub(crate) fn push(&mut self, event: TrajectoryEvent) -> Result<bool, BudgetError> {
        if self.full {
            return Ok(false);
        }
        let line = event.emit();
        let sep = if self.events.is_empty() { "" } else { "\n" };
        let cost = if self.tokenizer.is_additive() {
            self.used + self.tokenizer.count(&format!("{sep}{line}"))?
        } else {
            self.tokenizer.count(&format!("{}{sep}{line}", self.text))?
        };
        if self.limit.is_some_and(|l| cost > l) {
            self.full = true;
            return Ok(false);
        }
        self.text.push_str(sep);
        self.text.push_str(&line);
        self.events.push(event);
        self.used = cost;
        Ok(true)
    }

    pub(crate) fn finish(self) -> Trajectory {
        Trajectory::from_rendered(self.problem_id, self.events, self.text)
    }
}
