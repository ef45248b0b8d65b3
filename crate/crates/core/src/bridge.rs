//! Client for an external model process. One JSON object per line each way
//! over the child's stdin/stdout; every response echoes its request id.
//!
//! Requests: `{"op": "generate" | "score" | "tokenize", "id", ...}`.
//! Responses carry `continuation_text`, `per_text_loss` (plus optional
//! `token_logprobs`) or `token_spans`, or `error`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::budget::{budget_used, Budget, BudgetError, BudgetSpec, Tokenizer};
use crate::countdown::Problem;
use crate::generator::{ContinuationGenerator, GeneratorError};
use crate::trajectory::{parse_trajectory, ParseMode, Trajectory};

/// Overrides the configured bridge command.
pub const BRIDGE_ENV: &str = "GSOS_BRIDGE_CMD";

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("could not start bridge `{0}`: {1}")]
    Spawn(String, std::io::Error),
    #[error("bridge io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bridge closed its output")]
    Closed,
    #[error("bridge protocol: {0}")]
    Protocol(String),
    #[error("bridge reported: {0}")]
    Remote(String),
}

impl From<BridgeError> for GeneratorError {
    fn from(e: BridgeError) -> Self {
        GeneratorError::Bridge(e.to_string())
    }
}

impl From<BridgeError> for BudgetError {
    fn from(e: BridgeError) -> Self {
        BudgetError::Tokenizer(e.to_string())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BridgeResponse {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_text_loss: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_spans: Option<Vec<Vec<(usize, usize)>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Per-text scores from the bridge.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub per_text_loss: Vec<f64>,
    pub token_logprobs: Option<Vec<Vec<f64>>>,
}

struct Pipe {
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

pub struct BridgeClient {
    command: String,
    child: Mutex<Child>,
    pipe: Mutex<Pipe>,
    next_id: AtomicU64,
}

impl std::fmt::Debug for BridgeClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeClient").field("command", &self.command).finish()
    }
}

impl BridgeClient {
    /// Starts `command` through `sh -c`.
    pub fn spawn(command: &str) -> Result<Self, BridgeError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BridgeError::Spawn(command.to_string(), e))?;
        let stdin = child.stdin.take().ok_or(BridgeError::Closed)?;
        let stdout = BufReader::new(child.stdout.take().ok_or(BridgeError::Closed)?);
        Ok(BridgeClient {
            command: command.to_string(),
            child: Mutex::new(child),
            pipe: Mutex::new(Pipe { stdin, stdout }),
            next_id: AtomicU64::new(0),
        })
    }

    /// `$GSOS_BRIDGE_CMD` if set, else `configured`; `None` when neither.
    pub fn resolve_command(configured: Option<&str>) -> Option<String> {
        std::env::var(BRIDGE_ENV).ok().filter(|s| !s.trim().is_empty()).or_else(|| configured.map(str::to_string))
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn call(&self, mut request: serde_json::Value) -> Result<BridgeResponse, BridgeError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        request["id"] = json!(id);
        let mut pipe = self.pipe.lock().unwrap_or_else(|e| e.into_inner());
        let mut line = serde_json::to_string(&request).map_err(|e| BridgeError::Protocol(e.to_string()))?;
        line.push('\n');
        pipe.stdin.write_all(line.as_bytes())?;
        pipe.stdin.flush()?;
        let mut reply = String::new();
        if pipe.stdout.read_line(&mut reply)? == 0 {
            return Err(BridgeError::Closed);
        }
        let response: BridgeResponse =
            serde_json::from_str(reply.trim_end()).map_err(|e| BridgeError::Protocol(format!("{e}: {reply:?}")))?;
        if response.id != id {
            return Err(BridgeError::Protocol(format!("response id {} for request {id}", response.id)));
        }
        if let Some(err) = response.error {
            return Err(BridgeError::Remote(err));
        }
        Ok(response)
    }

    /// Raw continuation text after `prefix_text`.
    pub fn generate(
        &self,
        prefix_text: &str,
        max_new_units: Option<usize>,
        temperature: f64,
        seed: u64,
    ) -> Result<String, BridgeError> {
        let r = self.call(json!({
            "op": "generate",
            "prefix_text": prefix_text,
            "max_new_units": max_new_units,
            "temperature": temperature,
            "seed": seed,
        }))?;
        r.continuation_text.ok_or_else(|| BridgeError::Protocol("generate response without continuation_text".into()))
    }

    pub fn score(&self, texts: &[&str]) -> Result<Scores, BridgeError> {
        let r = self.call(json!({"op": "score", "texts": texts}))?;
        let per_text_loss =
            r.per_text_loss.ok_or_else(|| BridgeError::Protocol("score response without per_text_loss".into()))?;
        if per_text_loss.len() != texts.len() {
            return Err(BridgeError::Protocol(format!("{} losses for {} texts", per_text_loss.len(), texts.len())));
        }
        Ok(Scores { per_text_loss, token_logprobs: r.token_logprobs })
    }

    pub fn tokenize(&self, texts: &[&str]) -> Result<Vec<Vec<(usize, usize)>>, BridgeError> {
        let r = self.call(json!({"op": "tokenize", "texts": texts}))?;
        let spans = r.token_spans.ok_or_else(|| BridgeError::Protocol("tokenize response without token_spans".into()))?;
        if spans.len() != texts.len() {
            return Err(BridgeError::Protocol(format!("{} span lists for {} texts", spans.len(), texts.len())));
        }
        Ok(spans)
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        let child = self.child.get_mut().unwrap_or_else(|e| e.into_inner());
        let _ = child.kill();
        let _ = child.wait();
    }
}

impl Tokenizer for BridgeClient {
    fn spans(&self, text: &str) -> Result<Vec<(usize, usize)>, BudgetError> {
        Ok(self.tokenize(&[text])?.pop().unwrap_or_default())
    }
}

/// A bridge used as a continuation generator and tokenizer.
#[derive(Debug)]
pub struct BridgeGenerator {
    pub client: BridgeClient,
    pub temperature: f64,
}

impl BridgeGenerator {
    pub fn new(client: BridgeClient, temperature: f64) -> Self {
        BridgeGenerator { client, temperature }
    }

    fn used(&self, text: &str, spec: BudgetSpec) -> Result<usize, BudgetError> {
        budget_used(text, spec, Some(&self.client))
    }
}

impl Tokenizer for BridgeGenerator {
    fn spans(&self, text: &str) -> Result<Vec<(usize, usize)>, BudgetError> {
        self.client.spans(text)
    }
}

impl ContinuationGenerator for BridgeGenerator {
    fn continue_from(
        &self,
        problem: &Problem,
        prefix: &Trajectory,
        budget: Budget,
        seed: u64,
    ) -> Result<Trajectory, GeneratorError> {
        if prefix.terminal != crate::Terminal::Truncated {
            return Ok(prefix.clone());
        }
        let bridge = |e: BudgetError| GeneratorError::Bridge(e.to_string());
        let room = match budget.limit {
            Some(limit) => {
                let used = self.used(&prefix.text, budget.spec).map_err(bridge)?;
                if used >= limit {
                    return Ok(prefix.clone());
                }
                Some(limit - used)
            }
            None => None,
        };
        let continuation = self.client.generate(&prefix.text, room, self.temperature, seed)?;
        let full = format!("{}{}", prefix.text, continuation);
        let mut out = parse_trajectory(&full, problem, ParseMode::Lenient)
            .map_err(|e| GeneratorError::Bridge(format!("unparseable continuation: {e}")))?;
        if out.len() < prefix.len() {
            // the continuation damaged the last prefix line
            return Ok(prefix.clone());
        }
        if let Some(limit) = budget.limit {
            while out.len() > prefix.len() && self.used(&out.text, budget.spec).map_err(bridge)? > limit {
                out = out.truncated_to(out.len() - 1);
            }
        }
        Ok(out)
    }

    fn id(&self) -> String {
        format!("bridge:{}:t{}", self.client.command, self.temperature)
    }
}
