use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::{read_file, HarnessError};
use crate::envs::{load_json, Environment, TranscriptEnv, TranscriptStep};
use crate::gateway::{Playbook, ScriptedProvider};
use crate::kernel::{run_episode, EpisodeOutcome, KernelConfig, ReplPool};

/// Files making up a recorded episode.
#[derive(Debug, Clone)]
pub struct ReplayBundle {
    pub transcript: PathBuf,
    pub demos: PathBuf,
    pub playbook: PathBuf,
    pub expected_log: PathBuf,
    pub task: String,
}

impl ReplayBundle {
    /// Reads the conventional layout: `transcript.json`, `demos.json`,
    /// `playbook.json`, `expected.log` and `task.txt`.
    pub fn from_dir(dir: &Path) -> Result<Self, HarnessError> {
        let task_path = dir.join("task.txt");
        let task = if task_path.exists() {
            read_file(&task_path)?.trim_end().to_string()
        } else {
            String::new()
        };
        Ok(Self {
            transcript: dir.join("transcript.json"),
            demos: dir.join("demos.json"),
            playbook: dir.join("playbook.json"),
            expected_log: dir.join("expected.log"),
            task,
        })
    }

    fn check(&self) -> Result<(), HarnessError> {
        for p in [&self.transcript, &self.demos, &self.playbook, &self.expected_log] {
            if !p.exists() {
                return Err(HarnessError::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct ReplayReport {
    pub pass: bool,
    pub reward: f64,
    pub actions: Vec<String>,
    /// Divergence reported by the transcript environment.
    pub divergence: Option<String>,
    /// First log difference, with the REPL turn it falls in.
    pub first_difference: Option<String>,
    /// How the episode ended, with the error text if any.
    pub termination: String,
    pub outcome: EpisodeOutcome,
}

impl ReplayReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: reward {:.1}, {} actions, {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.reward,
            self.actions.len(),
            self.termination
        );
        if let Some(d) = &self.divergence {
            s.push_str(&format!("\ndivergence: {d}"));
        }
        if let Some(d) = &self.first_difference {
            s.push_str(&format!("\nfirst difference: {d}"));
        }
        s
    }
}

fn normalized(text: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines
}

/// Compares two logs modulo trailing whitespace. A difference names the
/// line and the REPL turn (count of `>>> ` prompts in the innermost REPL)
/// in which it occurs.
pub fn first_difference(expected: &str, got: &str) -> Option<String> {
    let want = normalized(expected);
    let have = normalized(got);
    let at = (0..want.len().max(have.len())).find(|&i| want.get(i) != have.get(i))?;
    // Turn counts persist across invocations of the same name.
    let mut turns: HashMap<&str, usize> = HashMap::new();
    let mut stack: Vec<&str> = Vec::new();
    // The differing line belongs to the latest completion, itself included.
    for line in &have[..(at + 1).min(have.len())] {
        if let Some(name) = marker(line, "##### ENTER REPL `", "` #####") {
            stack.push(name);
        } else if let Some(name) = marker(line, "##### EXITING REPL `", "`#####") {
            if stack.last() == Some(&name) {
                stack.pop();
            }
        } else if line.starts_with(">>> ") {
            if let Some(top) = stack.last() {
                *turns.entry(top).or_insert(0) += 1;
            }
        }
    }
    let context = match stack.last() {
        Some(name) => format!(" (turn {} of `{name}`)", turns.get(name).copied().unwrap_or(0)),
        None => String::new(),
    };
    Some(format!(
        "line {}{context}: expected {:?}, got {:?}",
        at + 1,
        want.get(at).copied().unwrap_or("<end of log>"),
        have.get(at).copied().unwrap_or("<end of log>")
    ))
}

fn marker<'a>(line: &'a str, open: &str, close: &str) -> Option<&'a str> {
    line.strip_prefix(open)?.strip_suffix(close)
}

/// Replays a bundle through the kernel against its recorded transcript.
pub fn cmd_replay(bundle: &ReplayBundle, config: &KernelConfig) -> Result<ReplayReport, HarnessError> {
    bundle.check()?;
    let steps: Vec<TranscriptStep> = load_json(&bundle.transcript)?;
    let pool = ReplPool::load_demos(&bundle.demos)?;
    let playbook = Playbook::load(&bundle.playbook).map_err(|e| HarnessError::Config(e.to_string()))?;
    let expected = read_file(&bundle.expected_log)?;

    let mut env = TranscriptEnv::new(steps, bundle.task.clone());
    let obs = env.reset(0)?;
    let llm = ScriptedProvider::new(playbook);
    let outcome = run_episode(&bundle.task, &obs, &pool, &mut env, &llm, config);
    let first_difference = first_difference(&expected, outcome.trace.log());
    let reward = outcome.result.score;
    let termination = match outcome.result.diagnostic() {
        Some(d) => format!("{}: {d}", outcome.result.reason()),
        None => outcome.result.reason().to_string(),
    };
    Ok(ReplayReport {
        pass: reward == 1.0 && first_difference.is_none(),
        reward,
        actions: outcome.result.actions.clone(),
        divergence: env.divergence().map(str::to_string),
        first_difference,
        termination,
        outcome,
    })
}
