//! `replplan`: run episode batches, replay recorded transcripts, and check
//! demo files.
//!
//! Exit codes: 0 on success, 1 when a task-level check fails (replay
//! mismatch, or success rate under `--assert-sr`), 2 on configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use replplan_core::gateway::CompletionParams;
use replplan_core::harness::{
    cmd_demo_validate, cmd_replay, cmd_run, load_bug_patches, EnvKind, HarnessError,
    ProviderConfig, ReplayBundle, RunConfig,
};
use replplan_core::kernel::{Budgets, KernelConfig};

#[derive(Parser)]
#[command(name = "replplan", version, about = "Recursive LLM-REPL planning harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of an environment and write logs and a report.
    Run(Box<RunArgs>),
    /// Replay a recorded episode bundle and compare its log.
    Replay(ReplayArgs),
    /// Parse every code entry of a demo file.
    DemoValidate {
        /// Demo file (JSON).
        path: PathBuf,
    },
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = 50)]
    max_env_steps: usize,
    #[arg(long, default_value_t = 100)]
    max_llm_calls: usize,
    #[arg(long, default_value_t = 16)]
    max_depth: usize,
}

impl BudgetArgs {
    fn budgets(&self) -> Budgets {
        Budgets {
            max_env_steps: self.max_env_steps,
            max_llm_calls: self.max_llm_calls,
            max_spawn_depth: self.max_depth,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// minishop, counter or transcript.
    #[arg(long)]
    env: String,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Task list (minishop) or recorded script (transcript).
    #[arg(long)]
    tasks: Option<PathBuf>,
    /// Task line for the transcript env.
    #[arg(long)]
    task: Option<String>,
    /// Run only these task indices.
    #[arg(long, value_delimiter = ',')]
    task_ids: Vec<usize>,
    #[arg(long)]
    demos: Option<PathBuf>,
    /// Playbook file, or a directory with task-<N>.json per task.
    #[arg(long, conflicts_with = "http_base")]
    playbook: Option<PathBuf>,
    /// Chat-completions base URL.
    #[arg(long)]
    http_base: Option<String>,
    #[arg(long, default_value = "gpt-4o-mini")]
    model: String,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,
    /// Log request and response bodies, key redacted.
    #[arg(long)]
    http_debug: bool,
    #[arg(long)]
    no_subtask_repls: bool,
    #[arg(long, value_delimiter = ',')]
    drop_repls: Vec<String>,
    /// JSON list of {repl, entry, text} demo patches.
    #[arg(long)]
    inject_bugs: Option<PathBuf>,
    #[command(flatten)]
    budgets: BudgetArgs,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with 1 when the success rate is below this fraction.
    #[arg(long)]
    assert_sr: Option<f64>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Directory with transcript.json, demos.json, playbook.json,
    /// expected.log and task.txt.
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    demos: Option<PathBuf>,
    #[arg(long)]
    playbook: Option<PathBuf>,
    #[arg(long)]
    expected: Option<PathBuf>,
    #[arg(long)]
    task: Option<String>,
    #[command(flatten)]
    budgets: BudgetArgs,
}

/// Failures that map to exit code 2. Every harness error is raised before
/// or instead of a verdict, so all of them count.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(e: HarnessError) -> anyhow::Error {
    ConfigError(e.to_string()).into()
}

fn run(args: RunArgs) -> Result<bool> {
    let env: EnvKind = args.env.parse().map_err(config_err)?;
    let provider = match (&args.playbook, &args.http_base) {
        (Some(p), None) => ProviderConfig::Scripted { playbook: p.clone() },
        (None, Some(base)) => ProviderConfig::Http {
            base_url: base.clone(),
            api_key_env: args.api_key_env.clone(),
            debug: args.http_debug,
        },
        _ => return Err(ConfigError("give exactly one of --playbook or --http-base".into()).into()),
    };
    let mut config = RunConfig::new(env, provider);
    config.catalog = args.catalog;
    config.tasks = args.tasks;
    config.task = args.task;
    config.task_ids = args.task_ids;
    config.demos = args.demos;
    config.budgets = args.budgets.budgets();
    config.no_subtask_repls = args.no_subtask_repls;
    config.drop_repls = args.drop_repls;
    if let Some(path) = &args.inject_bugs {
        config.inject_bugs = load_bug_patches(path).map_err(config_err)?;
    }
    config.seed = args.seed;
    config.out = args.out;
    config.workers = args.workers;
    config.params = CompletionParams {
        model: args.model,
        temperature: args.temperature,
        ..CompletionParams::default()
    };

    let output = cmd_run(&config).map_err(config_err)?;
    let report = &output.report;
    for row in &report.rows {
        println!(
            "episode {}: {} score {:.3} ({}, {} env steps, {} llm calls)",
            row.index,
            if row.success { "success" } else { "failure" },
            row.score,
            row.termination,
            row.env_steps,
            row.llm_calls
        );
    }
    println!("{}", report.summary());
    if let Some(out) = &config.out {
        println!("wrote {}", out.join("report.json").display());
    }
    Ok(match args.assert_sr {
        Some(threshold) => report.success_rate >= threshold,
        None => true,
    })
}

fn replay(args: ReplayArgs) -> Result<bool> {
    let mut bundle = match &args.bundle {
        Some(dir) => {
            if !dir.is_dir() {
                return Err(ConfigError(format!("{} is not a directory", dir.display())).into());
            }
            ReplayBundle::from_dir(dir).map_err(config_err)?
        }
        None => {
            let need = |p: &Option<PathBuf>, flag: &str| -> Result<PathBuf> {
                p.clone()
                    .ok_or_else(|| ConfigError(format!("--{flag} is required without --bundle")).into())
            };
            ReplayBundle {
                transcript: need(&args.transcript, "transcript")?,
                demos: need(&args.demos, "demos")?,
                playbook: need(&args.playbook, "playbook")?,
                expected_log: need(&args.expected, "expected")?,
                task: String::new(),
            }
        }
    };
    let overrides = [
        (&args.transcript, &mut bundle.transcript),
        (&args.demos, &mut bundle.demos),
        (&args.playbook, &mut bundle.playbook),
        (&args.expected, &mut bundle.expected_log),
    ];
    for (arg, slot) in overrides {
        if let Some(p) = arg {
            *slot = p.clone();
        }
    }
    if let Some(t) = args.task {
        bundle.task = t;
    }
    let config = KernelConfig {
        budgets: args.budgets.budgets(),
        ..KernelConfig::default()
    };
    let report = cmd_replay(&bundle, &config).map_err(config_err)?;
    if let Some(last) = report.actions.last() {
        println!("final action: {last}");
    }
    println!("{}", report.summary());
    Ok(report.pass)
}

fn demo_validate(path: &Path) -> Result<bool> {
    let report = cmd_demo_validate(path).map_err(config_err)?;
    print!("{report}");
    if report.repls.is_empty() {
        println!();
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(*a),
        Command::Replay(a) => replay(a),
        Command::DemoValidate { path } => demo_validate(&path),
    };
    match result.and_then(check_assert) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<ConfigError>() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn check_assert(ok: bool) -> Result<()> {
    if !ok {
        bail!("check failed");
    }
    Ok(())
}
