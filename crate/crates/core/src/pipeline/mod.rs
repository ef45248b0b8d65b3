//! Corpus generation, generate-augment-filter iterations, evaluation and
//! statistics. Outputs are written in problem-id order so the worker count
//! never changes a byte on disk.

mod config;
mod stats;

pub use config::{sha256_hex, Endpoint, PipelineConfig};
pub use stats::{deciles, read_losses, stats_report, HistogramEntry, SplitStat, StatsReport};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{
    gsos_generate, make_hint_prefix, partition_records, AugmentError, DatasetRecord, GsosParams, NodeSelection,
    SelectionStrategy,
};
use crate::bridge::{BridgeClient, BridgeGenerator};
use crate::budget::{Budget, BudgetError, BudgetSpec, Tokenizer};
use crate::countdown::{generate_problem, split_targets_in, CountdownError, OptimalPath, Problem, Side, TargetSplit};
use crate::generator::{ContinuationGenerator, GeneratorError, SymbolicOracle};
use crate::rl::{advantage_record, AdvantageRecord, RlError};
use crate::rng::{self, derive_seed, purpose};
use crate::search::{run_symbolic_with, SearchError};
use crate::trajectory::{parse_trajectory, verify, ParseMode, Trajectory};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bridge: {0}")]
    Bridge(String),
    #[error("problem {index}: {source}")]
    Problem { index: usize, source: CountdownError },
    #[error(transparent)]
    Search(SearchError),
    #[error("{path}:{line}: {message}")]
    Json { path: PathBuf, line: usize, message: String },
    #[error("schema: {0}")]
    Schema(String),
    #[error("augment: {0}")]
    Augment(String),
}

impl PipelineError {
    /// 2 for configuration problems, 3 for bridge failures, else 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Bridge(_) => 3,
            _ => 1,
        }
    }
}

impl From<BudgetError> for PipelineError {
    fn from(e: BudgetError) -> Self {
        PipelineError::Bridge(e.to_string())
    }
}

impl From<GeneratorError> for PipelineError {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::Bridge(m) => PipelineError::Bridge(m),
            GeneratorError::Search(SearchError::Budget(b)) => b.into(),
            GeneratorError::Search(s) => PipelineError::Search(s),
        }
    }
}

impl From<SearchError> for PipelineError {
    fn from(e: SearchError) -> Self {
        GeneratorError::Search(e).into()
    }
}

impl From<AugmentError> for PipelineError {
    fn from(e: AugmentError) -> Self {
        match e {
            AugmentError::Generator(g) => g.into(),
            AugmentError::Budget(b) => b.into(),
            other => PipelineError::Augment(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// A generator plus the tokenizer backing an external budget, if any.
#[derive(Clone)]
pub struct Backend {
    pub generator: Arc<dyn ContinuationGenerator>,
    pub tokenizer: Option<Arc<dyn Tokenizer>>,
}

impl Backend {
    pub fn builtin(cfg: &PipelineConfig, temperature: f64) -> Self {
        Backend { generator: Arc::new(SymbolicOracle::new(cfg.heuristic, temperature)), tokenizer: None }
    }

    pub fn bridge(command: &str, temperature: f64) -> Result<Self, PipelineError> {
        let client = BridgeClient::spawn(command).map_err(|e| PipelineError::Bridge(e.to_string()))?;
        let gen = Arc::new(BridgeGenerator::new(client, temperature));
        Ok(Backend { generator: gen.clone(), tokenizer: Some(gen) })
    }

    /// Builtin or bridge per the config; `$GSOS_BRIDGE_CMD` overrides the
    /// configured command.
    pub fn from_config(cfg: &PipelineConfig, temperature: f64) -> Result<Self, PipelineError> {
        match cfg.endpoint {
            Endpoint::Builtin => {
                if cfg.budget_spec == BudgetSpec::ExternalTokenizer {
                    return Err(PipelineError::Config("external_tokenizer budget needs the bridge endpoint".into()));
                }
                Ok(Backend::builtin(cfg, temperature))
            }
            Endpoint::Bridge => {
                let cmd = BridgeClient::resolve_command(cfg.bridge_command.as_deref())
                    .ok_or_else(|| PipelineError::Bridge("endpoint is bridge but no command is configured".into()))?;
                Backend::bridge(&cmd, temperature)
            }
        }
    }

    fn tokenizer_ref(&self) -> Option<&dyn Tokenizer> {
        self.tokenizer.as_deref()
    }
}

// ---------------------------------------------------------------- problems

const ID_BASE_SEEN: u64 = 1_000_000_000;
const ID_BASE_UNSEEN: u64 = 2_000_000_000;

fn side_tag(side: Side) -> (u64, u64) {
    match side {
        Side::Train => (0, 0),
        Side::TestSeen => (1, ID_BASE_SEEN),
        Side::TestUnseen => (2, ID_BASE_UNSEEN),
    }
}

pub fn make_split(cfg: &PipelineConfig) -> TargetSplit {
    split_targets_in(cfg.seed, cfg.domain.target_min, cfg.domain.target_max, 0.1)
}

/// `count` distinct problems for one side, ids ascending from the side's
/// base. Candidate `i` is drawn from its own stream; duplicates of earlier
/// candidates or of `exclude` are skipped.
pub fn problem_set(
    cfg: &PipelineConfig,
    split: &TargetSplit,
    side: Side,
    count: usize,
    exclude: &HashSet<(u64, Vec<u64>)>,
) -> Result<Vec<(Problem, OptimalPath)>, PipelineError> {
    let (tag, base) = side_tag(side);
    let mut out = Vec::with_capacity(count);
    let mut seen: HashSet<(u64, Vec<u64>)> = HashSet::new();
    let max_candidates = count.saturating_mul(20).max(1_000);
    let mut next = 0usize;
    while out.len() < count {
        if next >= max_candidates {
            return Err(PipelineError::Problem {
                index: next,
                source: CountdownError::RejectionBudgetExceeded { attempts: next },
            });
        }
        let batch = (count - out.len()).max(64).min(max_candidates - next);
        let drawn: Vec<_> = (next..next + batch)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream(cfg.seed, &[purpose::PROBLEMS, tag, i as u64]);
                generate_problem(&mut r, split, side, &cfg.domain, 0)
                    .map_err(|source| PipelineError::Problem { index: i, source })
            })
            .collect();
        next += batch;
        for d in drawn {
            let (mut problem, mut path) = d?;
            let key = problem.key();
            if exclude.contains(&key) || !seen.insert(key) {
                continue;
            }
            problem.id = base + out.len() as u64;
            path.problem_id = problem.id;
            out.push((problem, path));
            if out.len() == count {
                break;
            }
        }
    }
    Ok(out)
}

pub fn train_problems(cfg: &PipelineConfig, split: &TargetSplit) -> Result<Vec<(Problem, OptimalPath)>, PipelineError> {
    problem_set(cfg, split, Side::Train, cfg.pretrain_count, &HashSet::new())
}

/// The first `sft_count` training problems.
pub fn sft_problems(cfg: &PipelineConfig, split: &TargetSplit) -> Result<Vec<(Problem, OptimalPath)>, PipelineError> {
    let mut all = train_problems(cfg, split)?;
    all.truncate(cfg.sft_count);
    Ok(all)
}

/// Seen-target problems exclude every training problem.
pub fn test_problems(
    cfg: &PipelineConfig,
    split: &TargetSplit,
    side: Side,
) -> Result<Vec<(Problem, OptimalPath)>, PipelineError> {
    let exclude = match side {
        Side::TestSeen => train_problems(cfg, split)?.into_iter().map(|(p, _)| p.key()).collect(),
        _ => HashSet::new(),
    };
    problem_set(cfg, split, side, cfg.eval_count, &exclude)
}

// ---------------------------------------------------------------- files

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), PipelineError> {
    let mut buf = String::new();
    for item in items {
        buf.push_str(&serde_json::to_string(item).expect("records serialise"));
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| PipelineError::Json {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_records(path: &Path) -> Result<Vec<DatasetRecord>, PipelineError> {
    read_jsonl(path)
}

/// Raw trajectory texts separated by blank lines.
pub fn write_texts(path: &Path, records: &[DatasetRecord]) -> Result<(), PipelineError> {
    let body: Vec<&str> = records.iter().map(|r| r.trajectory.as_str()).collect();
    let mut text = body.join("\n\n");
    if !text.is_empty() {
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("serialises");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn file_digest(path: &Path) -> Result<String, PipelineError> {
    Ok(sha256_hex(&fs::read(path).map_err(io_err(path))?))
}

fn pool(cfg: &PipelineConfig) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("worker pool: {e}")))
}

// ---------------------------------------------------------------- split

pub fn cmd_split(cfg: &PipelineConfig, out: &Path) -> Result<TargetSplit, PipelineError> {
    cfg.validate()?;
    let split = make_split(cfg);
    write_atomic(&out.join("split.txt"), split.to_text().as_bytes())?;
    Ok(split)
}

// ---------------------------------------------------------------- pretrain

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub seed: u64,
    pub count: usize,
    pub split_digest: String,
    pub config_digest: String,
    pub files: BTreeMap<String, String>,
}

/// One symbolic trajectory per training problem, the search config drawn
/// uniformly from the mixture.
pub fn cmd_make_pretrain(cfg: &PipelineConfig, out: &Path, backend: Option<&Backend>) -> Result<Manifest, PipelineError> {
    cfg.validate()?;
    let mixture = cfg.mixture_configs()?;
    let split = make_split(cfg);
    let problems = train_problems(cfg, &split)?;
    let tokenizer = backend.and_then(|b| b.tokenizer.clone());
    let budget = cfg.budget();
    let records: Vec<DatasetRecord> = pool(cfg)?.install(|| {
        problems
            .par_iter()
            .map(|(p, _)| {
                let seed = derive_seed(cfg.seed, &[purpose::PRETRAIN_MIX, p.id]);
                let search = mixture[rng::stream(seed, &[]).gen_range(0..mixture.len())];
                let t = run_symbolic_with(p, &search, tokenizer.clone())?;
                let mut r = DatasetRecord::plain(p, &t, budget, tokenizer.as_deref(), seed, 0)?;
                r.source = search.label();
                Ok(r)
            })
            .collect::<Result<Vec<_>, PipelineError>>()
    })?;
    write_atomic(&out.join("split.txt"), split.to_text().as_bytes())?;
    write_jsonl(&out.join("records.jsonl"), &records)?;
    write_texts(&out.join("trajectories.txt"), &records)?;
    let manifest = Manifest {
        kind: "pretrain".into(),
        seed: cfg.seed,
        count: records.len(),
        split_digest: sha256_hex(split.to_text().as_bytes()),
        config_digest: cfg.digest(),
        files: ["records.jsonl", "split.txt", "trajectories.txt"]
            .iter()
            .map(|f| Ok((f.to_string(), file_digest(&out.join(f))?)))
            .collect::<Result<_, PipelineError>>()?,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    log::info!("pretrain: {} records in {}", records.len(), out.display());
    Ok(manifest)
}

// ---------------------------------------------------------------- gsos

/// Resume token for an interrupted run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub config_digest: String,
    pub iteration: u32,
    pub completed_chunks: usize,
    pub total_chunks: usize,
}

#[derive(Debug, Clone, Default)]
pub struct GsosOptions {
    pub resume: bool,
    /// Stop (as if interrupted) after this many chunks in this call.
    pub stop_after_chunks: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GsosOutcome {
    Completed(Vec<StatsReport>),
    Interrupted(Progress),
}

fn iteration_dir(out: &Path, i: u32) -> PathBuf {
    out.join(format!("iter_{i}"))
}

/// Runs the external train step on the previous iteration's kept corpus.
pub fn run_train_step(command: &str, corpus: &Path, iteration: u32) -> Result<(), PipelineError> {
    let status = std::process::Command::new("sh")
        .arg("-c")
        .arg(command)
        .env("GSOS_CORPUS", corpus)
        .env("GSOS_ITERATION", iteration.to_string())
        .status()
        .map_err(|e| PipelineError::Bridge(format!("train step: {e}")))?;
    if !status.success() {
        return Err(PipelineError::Bridge(format!("train step exited with {status}")));
    }
    Ok(())
}

/// `max_iter` rounds of generate, augment and filter over the SFT
/// problems. `backend_for(i)` supplies the generator for iteration `i`
/// (after any train step). Each chunk is written as soon as it finishes,
/// and `progress.json` records where to pick up.
pub fn cmd_gsos(
    cfg: &PipelineConfig,
    out: &Path,
    opts: &GsosOptions,
    backend_for: &mut dyn FnMut(u32) -> Result<Backend, PipelineError>,
) -> Result<GsosOutcome, PipelineError> {
    cfg.validate()?;
    let progress_path = out.join("progress.json");
    let digest = cfg.digest();
    let mut start = (1u32, 0usize);
    if progress_path.exists() {
        if !opts.resume {
            return Err(PipelineError::Config(format!("{} holds an earlier run; resume it or pick a fresh directory", out.display())));
        }
        let p: Progress = serde_json::from_str(&fs::read_to_string(&progress_path).map_err(io_err(&progress_path))?)
            .map_err(|e| PipelineError::Config(format!("progress file: {e}")))?;
        if p.config_digest != digest {
            return Err(PipelineError::Config("config changed since the interrupted run".into()));
        }
        start = (p.iteration, p.completed_chunks);
    }
    let split = make_split(cfg);
    let problems = sft_problems(cfg, &split)?;
    let chunks: Vec<&[(Problem, OptimalPath)]> = problems.chunks(cfg.chunk_size).collect();
    let workers = pool(cfg)?;
    let mut budget_chunks = opts.stop_after_chunks;
    let mut reports = Vec::new();

    for i in 1..=cfg.max_iter {
        let dir = iteration_dir(out, i);
        if i < start.0 {
            reports.push(read_stats(&dir.join("stats.json"))?);
            continue;
        }
        if i > 1 && cfg.endpoint == Endpoint::Bridge {
            if let Some(cmd) = &cfg.train_command {
                run_train_step(cmd, &iteration_dir(out, i - 1).join("trajectories.txt"), i - 1)?;
            }
        }
        let backend = backend_for(i)?;
        let params = GsosParams {
            tau: cfg.tau,
            selection: NodeSelection::new(cfg.selection, cfg.seed),
            budget: cfg.budget(),
            seed: cfg.seed,
            iteration: i,
            augment: true,
        };
        let first_chunk = if i == start.0 { start.1 } else { 0 };
        for (c, chunk) in chunks.iter().enumerate().skip(first_chunk) {
            if budget_chunks == Some(0) {
                let p = Progress { config_digest: digest, iteration: i, completed_chunks: c, total_chunks: chunks.len() };
                write_json(&progress_path, &p)?;
                return Ok(GsosOutcome::Interrupted(p));
            }
            let records: Vec<DatasetRecord> = workers.install(|| {
                chunk
                    .par_iter()
                    .map(|(p, path)| Ok(gsos_generate(&*backend.generator, p, path, &params, backend.tokenizer_ref())?))
                    .collect::<Result<_, PipelineError>>()
            })?;
            write_jsonl(&chunk_path(&dir, c), &records)?;
            write_json(
                &progress_path,
                &Progress { config_digest: digest.clone(), iteration: i, completed_chunks: c + 1, total_chunks: chunks.len() },
            )?;
            budget_chunks = budget_chunks.map(|b| b - 1);
        }
        let mut all = Vec::with_capacity(problems.len());
        for c in 0..chunks.len() {
            all.extend(read_records(&chunk_path(&dir, c))?);
        }
        let report = stats_report(&all, cfg.tau, cfg.budget_spec, backend.tokenizer_ref(), None)?;
        let (kept, dropped) = partition_records(all, cfg.tau);
        write_jsonl(&dir.join("kept.jsonl"), &kept)?;
        write_jsonl(&dir.join("dropped.jsonl"), &dropped)?;
        write_texts(&dir.join("trajectories.txt"), &kept)?;
        write_json(&dir.join("stats.json"), &report)?;
        fs::remove_dir_all(dir.join("chunks")).map_err(io_err(&dir))?;
        write_json(
            &progress_path,
            &Progress { config_digest: digest.clone(), iteration: i + 1, completed_chunks: 0, total_chunks: chunks.len() },
        )?;
        log::info!("gsos iteration {i}: success ratio {:.4}", report.success_ratio);
        reports.push(report);
    }
    Ok(GsosOutcome::Completed(reports))
}

fn chunk_path(dir: &Path, c: usize) -> PathBuf {
    dir.join("chunks").join(format!("chunk_{c:05}.jsonl"))
}

fn read_stats(path: &Path) -> Result<StatsReport, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Json { path: path.to_path_buf(), line: 0, message: e.to_string() })
}

// ---------------------------------------------------------------- evaluate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideAccuracy {
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seeds: Vec<u64>,
    /// Per seed, in `seeds` order.
    pub seen: Vec<SideAccuracy>,
    pub unseen: Vec<SideAccuracy>,
    /// `(mean, sample std)` over seeds; std is 0 for a single seed.
    pub seen_mean_std: (f64, f64),
    pub unseen_mean_std: (f64, f64),
}

/// Mean correctness of generated trajectories on one problem list.
pub fn evaluate_problems(
    problems: &[(Problem, OptimalPath)],
    backend: &Backend,
    budget: Budget,
    seed: u64,
) -> Result<Vec<DatasetRecord>, PipelineError> {
    problems
        .par_iter()
        .map(|(p, _)| {
            let s = derive_seed(seed, &[purpose::EVAL, p.id]);
            let t = backend.generator.continue_from(p, &Trajectory::prompt(p), budget, s)?;
            let mut r = DatasetRecord::plain(p, &t, budget, backend.tokenizer_ref(), s, 0)?;
            r.source = backend.generator.id();
            Ok(r)
        })
        .collect()
}

fn accuracy(records: &[DatasetRecord]) -> SideAccuracy {
    let correct = records.iter().filter(|r| r.correct == 1).count();
    let count = records.len();
    SideAccuracy { count, correct, accuracy: if count == 0 { 0.0 } else { correct as f64 / count as f64 } }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Accuracy on seen- and unseen-target test problems, once per seed.
/// Writes per-seed records and `report.json` when `out` is given.
pub fn cmd_evaluate(
    cfg: &PipelineConfig,
    out: Option<&Path>,
    backend: &Backend,
    seeds: &[u64],
) -> Result<EvalReport, PipelineError> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(PipelineError::Config("no evaluation seeds".into()));
    }
    let split = make_split(cfg);
    let seen_problems = test_problems(cfg, &split, Side::TestSeen)?;
    let unseen_problems = test_problems(cfg, &split, Side::TestUnseen)?;
    let workers = pool(cfg)?;
    let mut seen = Vec::new();
    let mut unseen = Vec::new();
    for &seed in seeds {
        let (a, b) = workers.install(|| -> Result<_, PipelineError> {
            Ok((
                evaluate_problems(&seen_problems, backend, cfg.budget(), seed)?,
                evaluate_problems(&unseen_problems, backend, cfg.budget(), seed)?,
            ))
        })?;
        if let Some(out) = out {
            write_jsonl(&out.join(format!("eval_seen_seed{seed}.jsonl")), &a)?;
            write_jsonl(&out.join(format!("eval_unseen_seed{seed}.jsonl")), &b)?;
        }
        seen.push(accuracy(&a));
        unseen.push(accuracy(&b));
    }
    let ms = |v: &[SideAccuracy]| mean_std(&v.iter().map(|a| a.accuracy).collect::<Vec<_>>());
    let report = EvalReport {
        seeds: seeds.to_vec(),
        seen_mean_std: ms(&seen),
        unseen_mean_std: ms(&unseen),
        seen,
        unseen,
    };
    if let Some(out) = out {
        write_json(&out.join("report.json"), &report)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------- sweeps

/// Success ratio after continuing from the `n`-step hint prefix, for
/// `n = 0..=max_n`.
pub fn hint_sweep(
    problems: &[(Problem, OptimalPath)],
    gen: &dyn ContinuationGenerator,
    budget: Budget,
    seed: u64,
    max_n: usize,
) -> Result<Vec<f64>, PipelineError> {
    (0..=max_n)
        .map(|n| {
            let correct: Result<Vec<u8>, PipelineError> = problems
                .par_iter()
                .map(|(p, path)| {
                    let prefix = make_hint_prefix(p, path, n);
                    let t = gen.continue_from(p, &prefix, budget, derive_seed(seed, &[p.id]))?;
                    Ok(verify(&t, p).metric())
                })
                .collect();
            let correct = correct?;
            Ok(correct.iter().map(|&c| c as f64).sum::<f64>() / correct.len().max(1) as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub strategy: SelectionStrategy,
    pub success_ratio: f64,
    /// Mean budget units of the rewritten prefixes handed to the generator.
    pub mean_prefix_len: f64,
    pub augmentations: usize,
}

/// One generate-augment pass per strategy with identical generator seeds.
pub fn selection_sweep(
    problems: &[(Problem, OptimalPath)],
    backend: &Backend,
    base: &GsosParams,
) -> Result<Vec<SelectionOutcome>, PipelineError> {
    [SelectionStrategy::First, SelectionStrategy::Rand, SelectionStrategy::Last]
        .into_iter()
        .map(|strategy| {
            let params = GsosParams { selection: NodeSelection { strategy, ..base.selection }, ..*base };
            let records: Vec<DatasetRecord> = problems
                .par_iter()
                .map(|(p, path)| Ok(gsos_generate(&*backend.generator, p, path, &params, backend.tokenizer_ref())?))
                .collect::<Result<_, PipelineError>>()?;
            let prefixes: Vec<f64> = records
                .iter()
                .flat_map(|r| r.provenance.iter().filter(|a| a.applied).map(|a| a.prefix_budget_used as f64))
                .collect();
            let success = records.iter().map(|r| r.correct as f64).sum::<f64>() / records.len().max(1) as f64;
            Ok(SelectionOutcome {
                strategy,
                success_ratio: success,
                mean_prefix_len: mean_std(&prefixes).0,
                augmentations: prefixes.len(),
            })
        })
        .collect()
}

// ---------------------------------------------------------------- advantages

/// Per-problem critic values from a JSONL file of `{"problem_id", "values"}`.
pub fn read_values(path: &Path) -> Result<HashMap<u64, Vec<f64>>, PipelineError> {
    #[derive(Deserialize)]
    struct Row {
        problem_id: u64,
        values: Vec<f64>,
    }
    let rows: Vec<Row> = read_jsonl(path)?;
    let mut out = HashMap::with_capacity(rows.len());
    for r in rows {
        if out.insert(r.problem_id, r.values).is_some() {
            return Err(PipelineError::Schema(format!("duplicate values for problem {}", r.problem_id)));
        }
    }
    Ok(out)
}

/// One advantage line per record, in record order. Subgoal bonuses need
/// the generating path, so only records whose problem is one of this
/// config's training problems get them. Missing values default to zeros.
pub fn advantage_records(
    cfg: &PipelineConfig,
    records: &[DatasetRecord],
    values: Option<&HashMap<u64, Vec<f64>>>,
    tokenizer: Option<&dyn Tokenizer>,
) -> Result<Vec<AdvantageRecord>, PipelineError> {
    let paths: HashMap<u64, (Problem, OptimalPath)> =
        train_problems(cfg, &make_split(cfg))?.into_iter().map(|(p, path)| (p.id, (p, path))).collect();
    records
        .iter()
        .map(|r| {
            let t = parse_trajectory(&r.trajectory, &r.problem, ParseMode::Lenient)
                .map_err(|e| PipelineError::Schema(format!("problem {}: {e}", r.problem.id)))?;
            let path = paths.get(&r.problem.id).filter(|(p, _)| p.key() == r.problem.key()).map(|(_, path)| path);
            let v = values.and_then(|m| m.get(&r.problem.id)).map(Vec::as_slice);
            advantage_record(&r.problem, &t, path, v, &cfg.reward, cfg.budget(), tokenizer).map_err(|e| match e {
                RlError::Budget(b) => PipelineError::from(b),
                other => PipelineError::Schema(format!("problem {}: {other}", r.problem.id)),
            })
        })
        .collect()
}
