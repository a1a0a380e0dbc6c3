use super::{EnvError, EnvResult, Environment};

/// The counting toy: done after four integers, full reward for 1, 2, 3, 4.
#[derive(Debug, Clone, Default)]
pub struct CounterEnv {
    received: Vec<i64>,
    actions: Vec<String>,
    done: bool,
    reward: f64,
}

impl CounterEnv {
    pub const TARGET: [i64; 4] = [1, 2, 3, 4];

    pub fn new() -> Self {
        Self::default()
    }

    pub fn received(&self) -> &[i64] {
        &self.received
    }
}

impl Environment for CounterEnv {
    fn reset(&mut self, task: usize) -> Result<String, EnvError> {
        if task != 0 {
            return Err(EnvError::UnknownTask(task));
        }
        *self = Self::default();
        Ok("Count to 4.".to_string())
    }

    fn step(&mut self, action: &str) -> Result<EnvResult, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        self.actions.push(action.to_string());
        let Ok(n) = action.trim().parse::<i64>() else {
            self.done = true;
            self.reward = 0.0;
            return Ok(EnvResult {
                obs: format!("Not a number: {action}"),
                reward: 0.0,
                done: true,
            });
        };
        self.received.push(n);
        if self.received.len() == Self::TARGET.len() {
            self.done = true;
            self.reward = if self.received == Self::TARGET { 1.0 } else { 0.0 };
        }
        Ok(EnvResult {
            obs: format!("Counted {n}."),
            reward: self.reward,
            done: self.done,
        })
    }

    fn score(&self) -> f64 {
        self.reward
    }

    fn task_description(&self) -> String {
        "Count to 4.".to_string()
    }

    fn actions(&self) -> &[String] {
        &self.actions
    }
}
