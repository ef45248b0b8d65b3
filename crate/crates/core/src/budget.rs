//! Length accounting for trajectories. Stands in for a model's context
//! window: every generator is cut off once a trajectory's measured length
//! would pass the configured limit.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BudgetError {
    #[error("external tokenizer requested but no bridge is configured")]
    BridgeUnavailable,
    #[error("tokenizer failed: {0}")]
    Tokenizer(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetSpec {
    #[default]
    Chars,
    WhitespaceTokens,
    ExternalTokenizer,
}

impl fmt::Display for BudgetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetSpec::Chars => "chars",
            BudgetSpec::WhitespaceTokens => "whitespace_tokens",
            BudgetSpec::ExternalTokenizer => "external_tokenizer",
        })
    }
}

impl FromStr for BudgetSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "chars" => Ok(BudgetSpec::Chars),
            "whitespace_tokens" => Ok(BudgetSpec::WhitespaceTokens),
            "external_tokenizer" => Ok(BudgetSpec::ExternalTokenizer),
            other => Err(format!("unknown budget spec `{other}`")),
        }
    }
}

/// Splits text into units. Spans are `[start, end)` char offsets.
pub trait Tokenizer: Send + Sync {
    fn spans(&self, text: &str) -> Result<Vec<(usize, usize)>, BudgetError>;

    fn count(&self, text: &str) -> Result<usize, BudgetError> {
        Ok(self.spans(text)?.len())
    }

    /// Whether `count(a + b) == count(a) + count(b)` whenever `b` starts
    /// with a newline. Lets generators measure incrementally.
    fn is_additive(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CharTokenizer;

impl Tokenizer for CharTokenizer {
    fn spans(&self, text: &str) -> Result<Vec<(usize, usize)>, BudgetError> {
        Ok((0..text.chars().count()).map(|i| (i, i + 1)).collect())
    }

    fn count(&self, text: &str) -> Result<usize, BudgetError> {
        Ok(text.chars().count())
    }

    fn is_additive(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn spans(&self, text: &str) -> Result<Vec<(usize, usize)>, BudgetError> {
        let mut spans = Vec::new();
        let mut start = None;
        let mut n = 0;
        for (i, c) in text.chars().enumerate() {
            match (c.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    spans.push((s, i));
                    start = None;
                }
                _ => {}
            }
            n = i + 1;
        }
        if let Some(s) = start {
            spans.push((s, n));
        }
        Ok(spans)
    }

    fn count(&self, text: &str) -> Result<usize, BudgetError> {
        Ok(text.split_whitespace().count())
    }

    fn is_additive(&self) -> bool {
        true
    }
}

/// Resolves a spec to a tokenizer; `external` backs `ExternalTokenizer`.
pub fn tokenizer_for(
    spec: BudgetSpec,
    external: Option<Arc<dyn Tokenizer>>,
) -> Result<Arc<dyn Tokenizer>, BudgetError> {
    match spec {
        BudgetSpec::Chars => Ok(Arc::new(CharTokenizer)),
        BudgetSpec::WhitespaceTokens => Ok(Arc::new(WhitespaceTokenizer)),
        BudgetSpec::ExternalTokenizer => external.ok_or(BudgetError::BridgeUnavailable),
    }
}

pub fn budget_used(text: &str, spec: BudgetSpec, external: Option<&dyn Tokenizer>) -> Result<usize, BudgetError> {
    match spec {
        BudgetSpec::Chars => CharTokenizer.count(text),
        BudgetSpec::WhitespaceTokens => WhitespaceTokenizer.count(text),
        BudgetSpec::ExternalTokenizer => external.ok_or(BudgetError::BridgeUnavailable)?.count(text),
    }
}

/// A unit of measure plus an optional cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub spec: BudgetSpec,
    /// `None` means unlimited.
    pub limit: Option<usize>,
}

impl Budget {
    pub fn new(spec: BudgetSpec, limit: usize) -> Self {
        Budget { spec, limit: Some(limit) }
    }

    pub fn unlimited() -> Self {
        Budget { spec: BudgetSpec::Chars, limit: None }
    }

    pub fn chars(limit: usize) -> Self {
        Budget::new(BudgetSpec::Chars, limit)
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::chars(4096)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(budget_used("a b c", BudgetSpec::WhitespaceTokens, None), Ok(3));
        let line = "Current State: 25:[56, 58, 15, 8], Operations: []";
        assert_eq!(budget_used(line, BudgetSpec::Chars, None), Ok(49));
        assert_eq!(budget_used(line, BudgetSpec::Chars, None), budget_used(line, BudgetSpec::Chars, None));
        assert_eq!(
            budget_used(line, BudgetSpec::ExternalTokenizer, None),
            Err(BudgetError::BridgeUnavailable)
        );
    }

    #[test]
    fn whitespace_spans_match_count() {
        for text in ["", "  ", "a", " a  bb\nccc ", "x\ny"] {
            let spans = WhitespaceTokenizer.spans(text).unwrap();
            assert_eq!(spans.len(), WhitespaceTokenizer.count(text).unwrap(), "{text:?}");
            let chars: Vec<char> = text.chars().collect();
            for (s, e) in spans {
                assert!(chars[s..e].iter().all(|c| !c.is_whitespace()));
            }
        }
    }

    #[test]
    fn spec_parses() {
        for spec in [BudgetSpec::Chars, BudgetSpec::WhitespaceTokens, BudgetSpec::ExternalTokenizer] {
            assert_eq!(spec.to_string().parse::<BudgetSpec>(), Ok(spec));
        }
    }
}
