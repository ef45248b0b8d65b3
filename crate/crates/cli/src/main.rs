use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gsos_core::budget::BudgetSpec;
use gsos_core::pipeline::{
    advantage_records, cmd_evaluate, cmd_gsos, cmd_make_pretrain, cmd_split, read_losses, read_records, read_values,
    stats_report, write_jsonl, Backend, GsosOptions, GsosOutcome, PipelineConfig, PipelineError,
};

/// Guided stream-of-search data pipeline for Countdown.
#[derive(Parser)]
#[command(name = "gsos", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML file whose keys mirror the pipeline config fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Use the original experiment's problem counts.
    #[arg(long)]
    paper_scale: bool,
}

impl Common {
    fn load(&self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.paper_scale {
            cfg = cfg.paper_scale();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the train/test target split.
    Split {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Symbolic-search pretraining corpus with a manifest.
    MakePretrain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate, augment with subgoals, and filter, for each iteration.
    Gsos {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Continue an interrupted run in `out`.
        #[arg(long)]
        resume: bool,
    },
    /// Accuracy on seen- and unseen-target test problems.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated seeds; more than one adds mean and std.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
    },
    /// Summary statistics of a record corpus.
    Stats {
        #[command(flatten)]
        common: Common,
        /// JSONL records file.
        #[arg(long)]
        corpus: PathBuf,
        /// JSONL of `{"problem_id", "loss"}` from an external scorer.
        #[arg(long)]
        losses: Option<PathBuf>,
        /// Unit for horizon ratios; defaults to the config's budget spec.
        #[arg(long)]
        budget_spec: Option<BudgetSpec>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-operation rewards, values, advantages and returns as JSONL.
    Advantages {
        #[command(flatten)]
        common: Common,
        /// JSONL records file.
        #[arg(long)]
        corpus: PathBuf,
        /// JSONL of `{"problem_id", "values"}` from a critic; zeros otherwise.
        #[arg(long)]
        values: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn print_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).expect("serialises") + "\n";
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Cmd::Split { common, out } => {
            let split = cmd_split(&common.load()?, &out)?;
            println!("{} train / {} test targets", split.train_targets.len(), split.test_targets.len());
        }
        Cmd::MakePretrain { common, out } => {
            let cfg = common.load()?;
            let backend = match cfg.budget_spec {
                BudgetSpec::ExternalTokenizer => Some(Backend::from_config(&cfg, cfg.sft_temperature)?),
                _ => None,
            };
            let manifest = cmd_make_pretrain(&cfg, &out, backend.as_ref())?;
            print_json(&manifest, None)?;
        }
        Cmd::Gsos { common, out, resume } => {
            let cfg = common.load()?;
            let opts = GsosOptions { resume, stop_after_chunks: None };
            let mut backend_for = |_| Backend::from_config(&cfg, cfg.sft_temperature);
            match cmd_gsos(&cfg, &out, &opts, &mut backend_for)? {
                GsosOutcome::Completed(reports) => {
                    for (i, r) in reports.iter().enumerate() {
                        println!("iteration {}: success ratio {:.4} ({} kept)", i + 1, r.success_ratio, r.kept);
                    }
                }
                GsosOutcome::Interrupted(p) => println!("interrupted at iteration {} chunk {}", p.iteration, p.completed_chunks),
            }
        }
        Cmd::Evaluate { common, out, seeds } => {
            let cfg = common.load()?;
            let backend = Backend::from_config(&cfg, cfg.eval_temperature)?;
            let report = cmd_evaluate(&cfg, Some(&out), &backend, &seeds)?;
            print_json(&report, None)?;
        }
        Cmd::Stats { common, corpus, losses, budget_spec, out } => {
            let cfg = common.load()?;
            let records = read_records(&corpus)?;
            let losses = losses.map(|p| read_losses(&p)).transpose()?;
            let spec = budget_spec.unwrap_or(cfg.budget_spec);
            let backend = match spec {
                BudgetSpec::ExternalTokenizer => Some(Backend::from_config(&cfg, cfg.eval_temperature)?),
                _ => None,
            };
            let tokenizer = backend.as_ref().and_then(|b| b.tokenizer.as_deref());
            let report = stats_report(&records, cfg.tau, spec, tokenizer, losses.as_ref())?;
            print_json(&report, out.as_deref())?;
        }
        Cmd::Advantages { common, corpus, values, out } => {
            let cfg = common.load()?;
            let records = read_records(&corpus)?;
            let values = values.map(|p| read_values(&p)).transpose()?;
            let backend = match cfg.budget_spec {
                BudgetSpec::ExternalTokenizer => Some(Backend::from_config(&cfg, cfg.eval_temperature)?),
                _ => None,
            };
            let tokenizer = backend.as_ref().and_then(|b| b.tokenizer.as_deref());
            let lines = advantage_records(&cfg, &records, values.as_ref(), tokenizer)?;
            write_jsonl(&out, &lines)?;
            println!("{} advantage records", lines.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
