use serde_json::json;

use super::repl::{EntryKind, LlmRepl, ReplPool, ReplStatus};
use super::trace::Trace;
use super::{KernelConfig, MAX_CONTINUATIONS, MAX_SYNTAX_FAILURES, ROOT};
use crate::envs::Environment;
use crate::gateway::{
    extract_block, parse_subtask, render_prompt, ExtractError, LlmProvider, LlmRequest, PromptMode,
};
use crate::interp::{evaluate_block, EffectKind, ExecOutcome, Output, OutputKind, RuntimeFault, Value};
use crate::mlang::{ast::Stmt, echo_block, parse_block, SourceBlock};

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    EnvDone,
    RootAnswer,
    LlmCallBudget,
    EnvStepBudget,
    SyntaxFailures,
    LlmError(String),
    EnvError(String),
}

impl Termination {
    pub fn reason(&self) -> &'static str {
        match self {
            Termination::EnvDone => "env_done",
            Termination::RootAnswer => "answer",
            Termination::LlmCallBudget => "llm_call_budget",
            Termination::EnvStepBudget => "env_step_budget",
            Termination::SyntaxFailures => "syntax_failures",
            Termination::LlmError(_) => "llm_error",
            Termination::EnvError(_) => "env_error",
        }
    }

    fn diagnostic(&self) -> Option<String> {
        match self {
            Termination::LlmError(m) | Termination::EnvError(m) => Some(m.clone()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub success: bool,
    pub score: f64,
    pub env_steps: usize,
    pub llm_calls: usize,
    pub termination: Termination,
    /// `repr` of the root REPL's answer, when it gave one.
    pub answer: Option<String>,
    pub actions: Vec<String>,
}

impl EpisodeResult {
    pub fn reason(&self) -> &'static str {
        self.termination.reason()
    }

    /// Error text for the llm_error and env_error terminations.
    pub fn diagnostic(&self) -> Option<String> {
        self.termination.diagnostic()
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub result: EpisodeResult,
    pub trace: Trace,
    /// Pool state at the end of the episode, live histories included.
    pub pool: ReplPool,
}

struct Frame {
    name: String,
    /// Ledger key in the caller under which this invocation's answer goes.
    site: Option<(String, usize)>,
}

struct Runner<'a> {
    pool: ReplPool,
    env: &'a mut dyn Environment,
    llm: &'a dyn LlmProvider,
    config: &'a KernelConfig,
    stack: Vec<Frame>,
    trace: Trace,
    llm_calls: usize,
    env_steps: usize,
    latest_obs: String,
    answer: Option<String>,
}

type Step = Result<(), Termination>;

/// Runs one episode. `env` must already be reset; `initial_obs` is the
/// observation that reset returned.
pub fn run_episode(
    task: &str,
    initial_obs: &str,
    pool: &ReplPool,
    env: &mut dyn Environment,
    llm: &dyn LlmProvider,
    config: &KernelConfig,
) -> EpisodeOutcome {
    let mut pool = pool.for_episode();
    let mut root = pool.remove(ROOT).unwrap_or_else(|| LlmRepl::new(ROOT, task));
    root.task = task.to_string();
    pool.insert(root);

    let mut runner = Runner {
        pool,
        env,
        llm,
        config,
        stack: Vec::new(),
        trace: Trace::new(),
        llm_calls: 0,
        env_steps: 0,
        latest_obs: initial_obs.to_string(),
        answer: None,
    };
    runner.trace.event("episode_start", ROOT, json!({ "task": task }));
    runner.trace.obs(ROOT, initial_obs);
    runner.repl(ROOT).push(EntryKind::Obs, initial_obs);
    runner.stack.push(Frame {
        name: ROOT.to_string(),
        site: None,
    });
    runner.trace.enter(ROOT);

    let termination = match runner.run() {
        Ok(()) => unreachable!("the episode loop only ends with a termination"),
        Err(t) => t,
    };
    // Close any REPLs still open so markers stay balanced.
    while let Some(frame) = runner.stack.pop() {
        runner.trace.exit(&frame.name);
    }
    let score = runner.env.score();
    let success = matches!(termination, Termination::EnvDone | Termination::RootAnswer)
        && score >= 1.0 - 1e-9;
    runner.trace.event(
        "episode_end",
        ROOT,
        json!({
            "reason": termination.reason(),
            "diagnostic": termination.diagnostic(),
            "score": score,
            "success": success,
            "env_steps": runner.env_steps,
            "llm_calls": runner.llm_calls,
        }),
    );
    let result = EpisodeResult {
        success,
        score,
        env_steps: runner.env_steps,
        llm_calls: runner.llm_calls,
        termination,
        answer: runner.answer.take(),
        actions: runner.env.actions().to_vec(),
    };
    EpisodeOutcome {
        result,
        trace: runner.trace,
        pool: runner.pool,
    }
}

impl Runner<'_> {
    fn repl(&mut self, name: &str) -> &mut LlmRepl {
        self.pool.get_mut(name).expect("REPL on the stack is in the pool")
    }

    fn top(&self) -> String {
        self.stack.last().expect("non-empty stack").name.clone()
    }

    fn run(&mut self) -> Step {
        loop {
            let name = self.top();
            let suspended = self.repl(&name).suspended.take();
            let (block, stmt) = match suspended {
                Some(b) => b,
                None => match self.acquire(&name)? {
                    Some(b) => {
                        self.repl(&name).ledger.clear();
                        b
                    }
                    None => {
                        if self.repl(&name).syntax_failures >= MAX_SYNTAX_FAILURES {
                            self.give_up(&name)?;
                        }
                        continue;
                    }
                },
            };
            let repl = self.repl(&name);
            repl.status = ReplStatus::Running;
            let outcome = evaluate_block(&stmt, &mut repl.scope, &mut repl.ledger);
            self.record_outputs(&name, outcome.output());
            match outcome {
                ExecOutcome::Completed { .. } => {
                    self.repl(&name).status = ReplStatus::FinishedBlock;
                }
                ExecOutcome::Failed { fault, .. } => {
                    self.error_entry(&name, &fault.to_string());
                }
                ExecOutcome::Suspended { effect, .. } => {
                    self.repl(&name).suspended = Some((block, stmt));
                    let index = effect.index;
                    match effect.kind {
                        EffectKind::Act(action) => self.act(&name, index, action)?,
                        EffectKind::Answer(value) => self.answer(&name, index, value)?,
                        EffectKind::SpawnCall { args, unbound } => {
                            self.spawn(&name, &effect.call, index, args, unbound)?
                        }
                        EffectKind::GetArgs => {
                            let repl = self.repl(&name);
                            let v = repl.args_value();
                            repl.ledger.record("get_args", index, v);
                        }
                        EffectKind::GetObs => {
                            let obs = Value::text(&self.latest_obs);
                            self.repl(&name).ledger.record("get_obs", index, obs);
                        }
                        EffectKind::PrintPage => {
                            let obs = self.latest_obs.clone();
                            let repl = self.repl(&name);
                            repl.push(EntryKind::Obs, obs);
                            repl.ledger.record("print_page", index, Value::None);
                            self.trace.event("print_page", &name, json!(null));
                        }
                    }
                }
            }
        }
    }

    fn query(&mut self, render: &str, queue: &str, mode: PromptMode) -> Result<String, Termination> {
        if self.llm_calls >= self.config.budgets.max_llm_calls {
            return Err(Termination::LlmCallBudget);
        }
        self.llm_calls += 1;
        let label = match &mode {
            PromptMode::NextBlock => "next_block",
            PromptMode::Continuation { .. } => "continuation",
            PromptMode::SubtaskDescription { .. } => "subtask_description",
        };
        let prompt = render_prompt(self.repl(render), mode);
        let request = LlmRequest {
            repl: queue.to_string(),
            prompt,
        };
        let completion = self
            .llm
            .complete(&request, &self.config.params)
            .map_err(|e| Termination::LlmError(e.to_string()))?;
        self.trace.event(
            "llm_query",
            render,
            json!({ "mode": label, "queue": queue, "completion": completion }),
        );
        Ok(completion)
    }

    /// Queries the LLM for the next block. `Ok(None)` means the completion
    /// did not yield a parseable block; a diagnostic was recorded.
    fn acquire(&mut self, name: &str) -> Result<Option<(SourceBlock, Stmt)>, Termination> {
        let mut partial: Option<String> = None;
        let mut continuations = 0;
        loop {
            let mode = match &partial {
                None => PromptMode::NextBlock,
                Some(p) => PromptMode::Continuation { partial: p.clone() },
            };
            let completion = self.query(name, name, mode)?;
            let text = match &partial {
                None => completion,
                Some(p) => format!("{p}\n{completion}"),
            };
            match extract_block(&text) {
                Ok(block) => {
                    self.code_entry(name, &block.text);
                    return match parse_block(&block) {
                        Ok(stmt) => {
                            self.repl(name).syntax_failures = 0;
                            Ok(Some((block, stmt)))
                        }
                        Err(diag) => {
                            self.syntax_failure(name, &diag.message);
                            Ok(None)
                        }
                    };
                }
                Err(ExtractError::Incomplete(p)) if continuations < MAX_CONTINUATIONS => {
                    partial = Some(p);
                    continuations += 1;
                }
                Err(e) => {
                    if let ExtractError::Incomplete(p) = &e {
                        self.code_entry(name, p);
                    }
                    self.syntax_failure(name, &e.diagnostic());
                    return Ok(None);
                }
            }
        }
    }

    fn code_entry(&mut self, name: &str, text: &str) {
        self.repl(name).push(EntryKind::Code, text);
        self.trace.line(&echo_block(text));
        self.trace.event("code", name, json!({ "text": text }));
    }

    fn syntax_failure(&mut self, name: &str, message: &str) {
        self.repl(name).syntax_failures += 1;
        self.error_entry(name, message);
    }

    fn error_entry(&mut self, name: &str, message: &str) {
        self.repl(name).push(EntryKind::Error, message);
        self.trace.line(message);
        self.trace.event("error", name, json!({ "text": message }));
    }

    fn record_outputs(&mut self, name: &str, outputs: &[Output]) {
        for out in outputs {
            match out.kind {
                OutputKind::Stdout => {
                    self.repl(name).push(EntryKind::Output, out.text.clone());
                    self.trace.line(&out.text);
                    self.trace.line("");
                    self.trace.event("stdout", name, json!({ "text": out.text }));
                }
                OutputKind::Echo => {
                    self.repl(name).push(EntryKind::Echo, out.text.clone());
                    self.trace.line(&out.text);
                    self.trace.event("echo", name, json!({ "text": out.text }));
                }
            }
        }
    }

    fn act(&mut self, name: &str, index: usize, action: String) -> Step {
        if self.env_steps >= self.config.budgets.max_env_steps {
            return Err(Termination::EnvStepBudget);
        }
        for i in (0..self.stack.len()).rev() {
            let n = self.stack[i].name.clone();
            self.trace.exit(&n);
        }
        self.trace.line(&format!("> {action}"));
        let result = self
            .env
            .step(&action)
            .map_err(|e| Termination::EnvError(e.to_string()))?;
        self.env_steps += 1;
        self.trace.event(
            "act",
            name,
            json!({ "action": action, "reward": result.reward, "done": result.done }),
        );
        self.repl(name).ledger.record("act", index, Value::None);
        if !(result.done && result.obs.is_empty()) {
            self.trace.line("");
            self.trace.obs(name, &result.obs);
        }
        self.latest_obs = result.obs.clone();
        for i in 0..self.stack.len() {
            let n = self.stack[i].name.clone();
            self.repl(&n).push(EntryKind::Obs, result.obs.clone());
        }
        if result.done {
            // Exit markers were written before the action.
            self.stack.clear();
            return Err(Termination::EnvDone);
        }
        for i in 0..self.stack.len() {
            let n = self.stack[i].name.clone();
            self.trace.enter(&n);
        }
        Ok(())
    }

    fn answer(&mut self, name: &str, index: usize, value: Value) -> Step {
        self.repl(name).ledger.record("answer", index, Value::None);
        self.trace.event("answer", name, json!({ "value": value.repr() }));
        self.return_to_caller(value)
    }

    /// Pops the top REPL and hands `value` to its caller.
    fn return_to_caller(&mut self, value: Value) -> Step {
        let frame = self.stack.pop().expect("non-empty stack");
        self.repl(&frame.name).status = ReplStatus::Idle;
        self.trace.exit(&frame.name);
        match frame.site {
            None => {
                self.answer = Some(value.repr());
                Err(Termination::RootAnswer)
            }
            Some((call, index)) => {
                let parent = self.top();
                let repl = self.repl(&parent);
                repl.ledger.record(&call, index, value);
                repl.status = ReplStatus::Running;
                Ok(())
            }
        }
    }

    /// A REPL that cannot produce a valid block answers `None`.
    fn give_up(&mut self, name: &str) -> Step {
        self.repl(name).syntax_failures = 0;
        self.trace.event("give_up", name, json!(null));
        if self.stack.len() == 1 {
            return Err(Termination::SyntaxFailures);
        }
        self.return_to_caller(Value::None)
    }

    /// The caller's block fails with `fault` instead of spawning.
    fn reject_spawn(&mut self, parent: &str, fault: RuntimeFault) -> Step {
        self.repl(parent).suspended = None;
        self.error_entry(parent, &fault.to_string());
        Ok(())
    }

    fn spawn(&mut self, parent: &str, fname: &str, index: usize, args: Vec<Value>, unbound: bool) -> Step {
        if self.config.no_subtask_repls {
            return self.reject_spawn(parent, RuntimeFault::name_error(fname));
        }
        if self.stack.iter().any(|f| f.name == fname) {
            return self.reject_spawn(
                parent,
                RuntimeFault::new("RecursionError", format!("REPL '{fname}' is already running")),
            );
        }
        let depth = self.config.budgets.max_spawn_depth;
        if self.stack.len() >= depth {
            return self.reject_spawn(
                parent,
                RuntimeFault::new("RecursionError", format!("maximum REPL depth {depth} exceeded")),
            );
        }
        if unbound || !self.pool.contains(fname) {
            if self.pool.contains(fname) {
                self.trace
                    .line(&format!("Name error: {fname}. injecting with cached LLM func."));
                self.trace.event("name_error", parent, json!({ "name": fname, "pooled": true }));
            } else {
                let mode = PromptMode::SubtaskDescription {
                    fname: fname.to_string(),
                };
                let completion = self.query(parent, fname, mode)?;
                let task = parse_subtask(&completion, fname);
                self.trace
                    .event("subtask_query", parent, json!({ "name": fname, "task": task }));
                self.pool.insert(LlmRepl::new(fname, task));
                self.trace
                    .line(&format!("Name error: {fname}. creating new LLM func."));
                self.trace.event("name_error", parent, json!({ "name": fname, "pooled": false }));
            }
            self.repl(parent).scope.set(fname, Value::repl_fn(fname));
        }
        self.repl(parent).status = ReplStatus::AwaitingChild;
        let child = self.repl(fname);
        child.invocation_args = args;
        child.status = ReplStatus::Running;
        self.stack.push(Frame {
            name: fname.to_string(),
            site: Some((fname.to_string(), index)),
        });
        self.trace.enter(fname);
        Ok(())
    }
}
