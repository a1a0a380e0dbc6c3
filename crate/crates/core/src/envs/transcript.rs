use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{load_json, EnvError, EnvResult, Environment};

/// One recorded step: the observation shown, then the action taken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptStep {
    pub obs: String,
    pub action: String,
}

/// Replays a recorded script and stops at the first divergent action.
#[derive(Debug, Clone)]
pub struct TranscriptEnv {
    script: Vec<TranscriptStep>,
    task: String,
    next: usize,
    actions: Vec<String>,
    done: bool,
    reward: f64,
    divergence: Option<String>,
}

impl TranscriptEnv {
    pub fn new(script: Vec<TranscriptStep>, task: impl Into<String>) -> Self {
        Self {
            script,
            task: task.into(),
            next: 0,
            actions: Vec::new(),
            done: false,
            reward: 0.0,
            divergence: None,
        }
    }

    pub fn load(path: &Path, task: impl Into<String>) -> Result<Self, EnvError> {
        Ok(Self::new(load_json(path)?, task))
    }

    /// The first mismatch, as "expected X, got Y".
    pub fn divergence(&self) -> Option<&str> {
        self.divergence.as_deref()
    }
}

impl Environment for TranscriptEnv {
    fn reset(&mut self, task: usize) -> Result<String, EnvError> {
        if task != 0 {
            return Err(EnvError::UnknownTask(task));
        }
        self.next = 0;
        self.actions.clear();
        self.done = false;
        self.reward = 0.0;
        self.divergence = None;
        Ok(self.script.first().map(|s| s.obs.clone()).unwrap_or_default())
    }

    fn step(&mut self, action: &str) -> Result<EnvResult, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        self.actions.push(action.to_string());
        let expected = self.script.get(self.next).map(|s| s.action.as_str());
        if expected != Some(action) {
            let report = format!(
                "expected {}, got {action}",
                expected.unwrap_or("end of transcript")
            );
            self.done = true;
            self.reward = 0.0;
            self.divergence = Some(report.clone());
            return Ok(EnvResult {
                obs: report,
                reward: 0.0,
                done: true,
            });
        }
        self.next += 1;
        match self.script.get(self.next) {
            Some(step) => Ok(EnvResult {
                obs: step.obs.clone(),
                reward: 0.0,
                done: false,
            }),
            None => {
                self.done = true;
                self.reward = 1.0;
                Ok(EnvResult {
                    obs: String::new(),
                    reward: 1.0,
                    done: true,
                })
            }
        }
    }

    fn score(&self) -> f64 {
        self.reward
    }

    fn task_description(&self) -> String {
        self.task.clone()
    }

    fn actions(&self) -> &[String] {
        &self.actions
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn script() -> Vec<TranscriptStep> {
        vec![
            TranscriptStep { obs: "start".into(), action: "click[a]".into() },
            TranscriptStep { obs: "page a".into(), action: "click[< Prev]".into() },
        ]
    }

    #[test]
    fn replays_and_reports() {
        let mut env = TranscriptEnv::new(script(), "t");
        assert_eq!(env.reset(0).unwrap(), "start");
        assert_eq!(env.step("click[a]").unwrap().obs, "page a");
        let r = env.step("click[< Prev]").unwrap();
        assert!(r.done);
        assert_eq!(r.reward, 1.0);

        env.reset(0).unwrap();
        env.step("click[a]").unwrap();
        let r = env.step("click[Next >]").unwrap();
        assert_eq!(r.obs, "expected click[< Prev], got click[Next >]");
        assert_eq!(env.score(), 0.0);

        let mut empty = TranscriptEnv::new(vec![], "t");
        empty.reset(0).unwrap();
        let r = empty.step("x").unwrap();
        assert!(r.done && r.reward == 0.0);
    }
}
