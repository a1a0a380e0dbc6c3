use serde::{Deserialize, Serialize};

use crate::kernel::EpisodeResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub index: usize,
    pub task: String,
    pub success: bool,
    pub score: f64,
    pub env_steps: usize,
    pub llm_calls: usize,
    pub termination: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    pub answer: Option<String>,
    pub actions: Vec<String>,
    /// The environment received exactly the kernel's act effects.
    pub actions_audited: bool,
}

impl EpisodeRow {
    pub fn new(index: usize, task: &str, result: &EpisodeResult, env_actions: &[String]) -> Self {
        Self {
            index,
            task: task.to_string(),
            success: result.success,
            score: result.score,
            env_steps: result.env_steps,
            llm_calls: result.llm_calls,
            termination: result.reason().to_string(),
            diagnostic: result.diagnostic(),
            answer: result.answer.clone(),
            actions: result.actions.clone(),
            actions_audited: result.actions == env_actions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_score: f64,
    pub mean_env_steps: f64,
    pub mean_llm_calls: f64,
    pub seed: u64,
    pub rows: Vec<EpisodeRow>,
}

impl MetricsReport {
    /// Aggregates rows; the result does not depend on their order.
    pub fn from_rows(mut rows: Vec<EpisodeRow>, seed: u64) -> Self {
        rows.sort_by_key(|r| r.index);
        let n = rows.len();
        let mean = |f: &dyn Fn(&EpisodeRow) -> f64| {
            if n == 0 {
                0.0
            } else {
                rows.iter().map(f).sum::<f64>() / n as f64
            }
        };
        Self {
            episodes: n,
            success_rate: mean(&|r| if r.success { 1.0 } else { 0.0 }),
            mean_score: mean(&|r| r.score),
            mean_env_steps: mean(&|r| r.env_steps as f64),
            mean_llm_calls: mean(&|r| r.llm_calls as f64),
            seed,
            rows,
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "episodes: {}  SR: {:.1}%  score: {:.3}  env steps: {:.1}  llm calls: {:.1}",
            self.episodes,
            self.success_rate * 100.0,
            self.mean_score,
            self.mean_env_steps,
            self.mean_llm_calls
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(index: usize, success: bool, score: f64, steps: usize) -> EpisodeRow {
        EpisodeRow {
            index,
            task: String::new(),
            success,
            score,
            env_steps: steps,
            llm_calls: 2 * steps,
            termination: "env_done".into(),
            diagnostic: None,
            answer: None,
            actions: Vec::new(),
            actions_audited: true,
        }
    }

    #[test]
    fn aggregates_are_order_independent() {
        let a = MetricsReport::from_rows(vec![row(0, true, 1.0, 4), row(1, false, 0.5, 6)], 7);
        let b = MetricsReport::from_rows(vec![row(1, false, 0.5, 6), row(0, true, 1.0, 4)], 7);
        assert_eq!(a, b);
        assert_eq!(a.success_rate, 0.5);
        assert_eq!(a.mean_score, 0.75);
        assert_eq!(a.mean_env_steps, 5.0);
        assert_eq!(a.mean_llm_calls, 10.0);
    }

    #[test]
    fn empty_report() {
        let r = MetricsReport::from_rows(Vec::new(), 0);
        assert_eq!(r.episodes, 0);
        assert_eq!(r.success_rate, 0.0);
    }
}
