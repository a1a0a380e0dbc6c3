use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::config::{EnvKind, ProviderConfig, RunConfig};
use super::metrics::{EpisodeRow, MetricsReport};
use super::validate::validate_demos;
use super::{write_file, HarnessError};
use crate::envs::{load_json, CatalogItem, CounterEnv, Environment, MiniWebShop, ShopTask, TranscriptEnv, TranscriptStep};
use crate::gateway::{HttpConfig, HttpProvider, LlmProvider, Playbook, ScriptedProvider};
use crate::kernel::{run_episode, DemoFile, KernelConfig, ReplPool, Trace};

/// Loaded environment data; each episode gets its own environment.
enum EnvSource {
    Shop(Vec<CatalogItem>, Vec<ShopTask>),
    Counter,
    Transcript(Vec<TranscriptStep>, String),
}

impl EnvSource {
    fn load(config: &RunConfig) -> Result<Self, HarnessError> {
        let path = |p: &Option<PathBuf>| p.clone().expect("checked by validate");
        Ok(match config.env {
            EnvKind::Minishop => {
                let catalog: Vec<CatalogItem> = load_json(&path(&config.catalog))?;
                let tasks: Vec<ShopTask> = load_json(&path(&config.tasks))?;
                if tasks.is_empty() {
                    return Err(HarnessError::Config("task file has no tasks".into()));
                }
                EnvSource::Shop(catalog, tasks)
            }
            EnvKind::Counter => EnvSource::Counter,
            EnvKind::Transcript => EnvSource::Transcript(
                load_json(&path(&config.tasks))?,
                config.task.clone().unwrap_or_default(),
            ),
        })
    }

    fn make(&self) -> Box<dyn Environment> {
        match self {
            EnvSource::Shop(c, t) => Box::new(MiniWebShop::new(c.clone(), t.clone())),
            EnvSource::Counter => Box::new(CounterEnv::new()),
            EnvSource::Transcript(s, task) => Box::new(TranscriptEnv::new(s.clone(), task.clone())),
        }
    }

    fn num_tasks(&self) -> usize {
        match self {
            EnvSource::Shop(_, t) => t.len(),
            _ => 1,
        }
    }
}

enum Providers {
    Scripted(HashMap<usize, Playbook>),
    Http(HttpProvider),
}

impl Providers {
    fn load(config: &RunConfig, ids: &[usize]) -> Result<Self, HarnessError> {
        match &config.provider {
            ProviderConfig::Scripted { playbook } => {
                let books = if playbook.is_dir() {
                    ids.iter()
                        .map(|i| {
                            let b = Playbook::load(&playbook.join(format!("task-{i}.json")));
                            b.map(|b| (*i, b))
                        })
                        .collect::<Result<HashMap<_, _>, _>>()
                } else {
                    Playbook::load(playbook).map(|b| ids.iter().map(|i| (*i, b.clone())).collect())
                };
                Ok(Providers::Scripted(books.map_err(|e| HarnessError::Config(e.to_string()))?))
            }
            ProviderConfig::Http { base_url, api_key_env, debug } => {
                let mut http = HttpConfig::new(base_url.clone()).with_key_from_env(api_key_env);
                http.debug = *debug;
                Ok(Providers::Http(HttpProvider::new(http)?))
            }
        }
    }
}

pub struct RunOutput {
    pub report: MetricsReport,
    /// Per-episode traces, in task order.
    pub traces: Vec<Trace>,
}

/// Runs every task of the configured environment. Configuration problems
/// surface before the first episode starts.
pub fn cmd_run(config: &RunConfig) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    let demos = config.load_demos()?;
    for w in validate_demos(&demos).warnings() {
        log::warn!("{w}");
    }
    let source = EnvSource::load(config)?;
    let total = source.num_tasks();
    let ids: Vec<usize> = if config.task_ids.is_empty() {
        (0..total).collect()
    } else {
        config.task_ids.clone()
    };
    if let Some(bad) = ids.iter().find(|&&i| i >= total) {
        return Err(HarnessError::Config(format!("task {bad} out of range (0..{total})")));
    }
    let n = ids.len();
    let providers = Providers::load(config, &ids)?;
    let kernel = config.kernel_config();
    if let Some(out) = &config.out {
        std::fs::create_dir_all(out).map_err(|source| HarnessError::Io {
            path: out.display().to_string(),
            source,
        })?;
    }

    let next = AtomicUsize::new(0);
    let done: Mutex<Vec<(EpisodeRow, Trace)>> = Mutex::new(Vec::with_capacity(n));
    let failure: Mutex<Option<HarnessError>> = Mutex::new(None);
    std::thread::scope(|s| {
        for _ in 0..config.workers.min(n.max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= n || failure.lock().expect("lock").is_some() {
                    break;
                }
                match run_one(ids[k], &source, &providers, &demos, &kernel, config.out.as_deref()) {
                    Ok(pair) => done.lock().expect("lock").push(pair),
                    Err(e) => {
                        failure.lock().expect("lock").get_or_insert(e);
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    let mut done = done.into_inner().expect("lock");
    done.sort_by_key(|(row, _)| row.index);
    let (rows, traces): (Vec<_>, Vec<_>) = done.into_iter().unzip();
    let report = MetricsReport::from_rows(rows, config.seed);
    if let Some(out) = &config.out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_file(&out.join("report.json"), &(json + "\n"))?;
    }
    Ok(RunOutput { report, traces })
}

fn run_one(
    index: usize,
    source: &EnvSource,
    providers: &Providers,
    demos: &DemoFile,
    kernel: &KernelConfig,
    out: Option<&Path>,
) -> Result<(EpisodeRow, Trace), HarnessError> {
    let mut env = source.make();
    let obs = env.reset(index)?;
    let task = env.task_description();
    let scripted;
    let llm: &dyn LlmProvider = match providers {
        Providers::Scripted(books) => {
            scripted = ScriptedProvider::new(books[&index].clone());
            &scripted
        }
        Providers::Http(p) => p,
    };
    let pool = ReplPool::from_demos(demos.clone());
    let outcome = run_episode(&task, &obs, &pool, env.as_mut(), llm, kernel);
    let row = EpisodeRow::new(index, &task, &outcome.result, env.actions());
    if !row.actions_audited {
        log::error!("episode {index}: environment actions differ from act effects");
    }
    log::info!(
        "episode {index}: {} score {:.3} ({})",
        if row.success { "success" } else { "failure" },
        row.score,
        row.termination
    );
    if let Some(out) = out {
        write_file(&out.join(format!("episode-{index}.log")), outcome.trace.log())?;
        write_file(&out.join(format!("episode-{index}.jsonl")), &outcome.trace.to_jsonl())?;
    }
    Ok((row, outcome.trace))
}
