use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{read_file, HarnessError};
use crate::gateway::CompletionParams;
use crate::kernel::{Budgets, DemoFile, EntryKind, KernelConfig, ReplPool};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Minishop,
    Counter,
    Transcript,
}

impl FromStr for EnvKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minishop" => Ok(EnvKind::Minishop),
            "counter" => Ok(EnvKind::Counter),
            "transcript" => Ok(EnvKind::Transcript),
            other => Err(HarnessError::Config(format!(
                "unknown env `{other}` (expected minishop, counter or transcript)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderConfig {
    /// A playbook file shared by every task, or a directory holding
    /// `task-<N>.json` per task.
    Scripted { playbook: PathBuf },
    Http {
        base_url: String,
        /// Environment variable holding the API key.
        api_key_env: String,
        debug: bool,
    },
}

/// One demo edit: replace the text of `repls[repl].entries[entry]`, or drop
/// the entry when `text` is null.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugPatch {
    pub repl: String,
    pub entry: usize,
    pub text: Option<String>,
}

pub fn load_bug_patches(path: &Path) -> Result<Vec<BugPatch>, HarnessError> {
    let text = read_file(path)?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

/// Applies patches in order. Removals shift later indices of the same REPL,
/// so patch files list them last.
pub fn apply_bug_patches(demos: &mut DemoFile, patches: &[BugPatch]) -> Result<(), HarnessError> {
    for p in patches {
        let repl = demos
            .repls
            .iter_mut()
            .find(|r| r.name == p.repl)
            .ok_or_else(|| HarnessError::Config(format!("bug patch names unknown repl `{}`", p.repl)))?;
        let n = repl.entries.len();
        let entry = repl.entries.get_mut(p.entry).ok_or_else(|| {
            HarnessError::Config(format!(
                "bug patch for `{}` targets entry {} of {n}",
                p.repl, p.entry
            ))
        })?;
        if entry.kind != EntryKind::Code {
            return Err(HarnessError::Config(format!(
                "bug patch for `{}` entry {} targets a non-code entry",
                p.repl, p.entry
            )));
        }
        match &p.text {
            Some(t) => entry.text = t.clone(),
            None => {
                repl.entries.remove(p.entry);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub env: EnvKind,
    pub catalog: Option<PathBuf>,
    /// Task list for minishop; the recorded script for transcript.
    pub tasks: Option<PathBuf>,
    /// Task line for the transcript env.
    pub task: Option<String>,
    /// Run only these task indices; all tasks when empty.
    pub task_ids: Vec<usize>,
    pub provider: ProviderConfig,
    pub demos: Option<PathBuf>,
    pub budgets: Budgets,
    pub no_subtask_repls: bool,
    pub drop_repls: Vec<String>,
    pub inject_bugs: Vec<BugPatch>,
    /// Recorded in the report; the scripted provider has no randomness.
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub params: CompletionParams,
}

impl RunConfig {
    pub fn new(env: EnvKind, provider: ProviderConfig) -> Self {
        Self {
            env,
            catalog: None,
            tasks: None,
            task: None,
            task_ids: Vec::new(),
            provider,
            demos: None,
            budgets: Budgets::default(),
            no_subtask_repls: false,
            drop_repls: Vec::new(),
            inject_bugs: Vec::new(),
            seed: 0,
            out: None,
            workers: 1,
            params: CompletionParams::default(),
        }
    }

    pub fn kernel_config(&self) -> KernelConfig {
        KernelConfig {
            budgets: self.budgets,
            no_subtask_repls: self.no_subtask_repls,
            params: self.params.clone(),
        }
    }

    /// Checks paths and flags that can be checked without loading anything.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let need = |p: &Option<PathBuf>, flag: &str| -> Result<(), HarnessError> {
            match p {
                None => Err(HarnessError::Config(format!(
                    "--{flag} is required for --env {}",
                    env_name(self.env)
                ))),
                Some(p) if !p.exists() => Err(HarnessError::Config(format!(
                    "--{flag}: {} does not exist",
                    p.display()
                ))),
                Some(_) => Ok(()),
            }
        };
        match self.env {
            EnvKind::Minishop => {
                need(&self.catalog, "catalog")?;
                need(&self.tasks, "tasks")?;
            }
            EnvKind::Transcript => need(&self.tasks, "tasks")?,
            EnvKind::Counter => {}
        }
        if let Some(d) = &self.demos {
            if !d.exists() {
                return Err(HarnessError::Config(format!("--demos: {} does not exist", d.display())));
            }
        }
        if !self.drop_repls.is_empty() && self.demos.is_none() {
            return Err(HarnessError::Config("--drop-repls needs --demos".into()));
        }
        if !self.inject_bugs.is_empty() && self.demos.is_none() {
            return Err(HarnessError::Config("--inject-bugs needs --demos".into()));
        }
        if let ProviderConfig::Scripted { playbook } = &self.provider {
            if !playbook.exists() {
                return Err(HarnessError::Config(format!(
                    "--playbook: {} does not exist",
                    playbook.display()
                )));
            }
        }
        if self.workers == 0 {
            return Err(HarnessError::Config("--workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Demo pool with bug patches applied and dropped REPLs removed.
    pub fn load_pool(&self) -> Result<ReplPool, HarnessError> {
        Ok(ReplPool::from_demos(self.load_demos()?))
    }

    /// The demo file as the pool sees it: patched, with dropped REPLs gone.
    pub fn load_demos(&self) -> Result<DemoFile, HarnessError> {
        let Some(path) = &self.demos else {
            return Ok(DemoFile::default());
        };
        let mut demos = DemoFile::load(path)?;
        apply_bug_patches(&mut demos, &self.inject_bugs)?;
        for name in &self.drop_repls {
            if !demos.repls.iter().any(|r| &r.name == name) {
                return Err(HarnessError::Config(format!(
                    "--drop-repls: `{name}` is not in {}",
                    path.display()
                )));
            }
        }
        demos.repls.retain(|r| !self.drop_repls.contains(&r.name));
        Ok(demos)
    }
}

fn env_name(kind: EnvKind) -> &'static str {
    match kind {
        EnvKind::Minishop => "minishop",
        EnvKind::Counter => "counter",
        EnvKind::Transcript => "transcript",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{DemoRepl, HistoryEntry};

    fn demos() -> DemoFile {
        DemoFile {
            repls: vec![DemoRepl {
                name: "f".into(),
                task: "t".into(),
                entries: vec![
                    HistoryEntry::new(EntryKind::Code, "x = 1"),
                    HistoryEntry::new(EntryKind::Output, "1\n"),
                    HistoryEntry::new(EntryKind::Code, "answer(x)"),
                ],
            }],
        }
    }

    #[test]
    fn patches_replace_and_remove() {
        let mut d = demos();
        let patches = vec![
            BugPatch { repl: "f".into(), entry: 2, text: Some("answer(y)".into()) },
            BugPatch { repl: "f".into(), entry: 0, text: None },
        ];
        apply_bug_patches(&mut d, &patches).unwrap();
        let texts: Vec<_> = d.repls[0].entries.iter().map(|e| e.text.as_str()).collect();
        assert_eq!(texts, ["1\n", "answer(y)"]);
    }

    #[test]
    fn patches_reject_bad_targets() {
        let mut d = demos();
        let bad = [
            BugPatch { repl: "g".into(), entry: 0, text: None },
            BugPatch { repl: "f".into(), entry: 9, text: None },
            BugPatch { repl: "f".into(), entry: 1, text: None },
        ];
        for p in bad {
            assert!(apply_bug_patches(&mut d, &[p]).is_err());
        }
    }

    #[test]
    fn env_kind_parses() {
        assert_eq!("counter".parse::<EnvKind>().unwrap(), EnvKind::Counter);
        assert!("alfworld".parse::<EnvKind>().is_err());
    }
}
