use std::collections::HashMap;
use std::sync::Mutex;

use replplan_core::envs::{CounterEnv, EnvError, EnvResult, Environment};
use replplan_core::gateway::{CompletionParams, LlmError, LlmProvider, LlmRequest, Playbook, PromptMode, ScriptedProvider};
use replplan_core::kernel::{run_episode, Budgets, EntryKind, KernelConfig, ReplPool, Termination};

/// Answers every query with a completion computed from the REPL name and
/// how many times that REPL has been asked.
struct FnProvider<F: Fn(&str, usize, &LlmRequest) -> String + Send + Sync> {
    f: F,
    turns: Mutex<HashMap<String, usize>>,
}

impl<F: Fn(&str, usize, &LlmRequest) -> String + Send + Sync> FnProvider<F> {
    fn new(f: F) -> Self {
        Self { f, turns: Mutex::new(HashMap::new()) }
    }
}

impl<F: Fn(&str, usize, &LlmRequest) -> String + Send + Sync> LlmProvider for FnProvider<F> {
    fn complete(&self, request: &LlmRequest, _: &CompletionParams) -> Result<String, LlmError> {
        let mut turns = self.turns.lock().unwrap();
        let t = turns.entry(request.repl.clone()).or_insert(0);
        *t += 1;
        Ok((self.f)(&request.repl, *t, request))
    }
}

/// Echoes each action back; "quiet" gives an empty observation and "stop"
/// ends the episode with full reward.
#[derive(Default)]
struct EchoEnv {
    actions: Vec<String>,
    reward: f64,
}

impl Environment for EchoEnv {
    fn reset(&mut self, _: usize) -> Result<String, EnvError> {
        Ok("ready".into())
    }

    fn step(&mut self, action: &str) -> Result<EnvResult, EnvError> {
        self.actions.push(action.to_string());
        let done = action == "stop";
        if done {
            self.reward = 1.0;
        }
        let obs = match action {
            "quiet" | "stop" => String::new(),
            a => format!("saw {a}"),
        };
        Ok(EnvResult { obs, reward: self.reward, done })
    }

    fn score(&self) -> f64 {
        self.reward
    }

    fn task_description(&self) -> String {
        "echo".into()
    }

    fn actions(&self) -> &[String] {
        &self.actions
    }
}

fn run(playbook: Playbook, config: &KernelConfig) -> (replplan_core::kernel::EpisodeOutcome, EchoEnv) {
    let mut env = EchoEnv::default();
    let obs = env.reset(0).unwrap();
    let llm = ScriptedProvider::new(playbook);
    let out = run_episode("echo", &obs, &ReplPool::new(), &mut env, &llm, config);
    (out, env)
}

fn book<'a>(queues: Vec<(&'a str, Vec<&'a str>)>) -> Playbook {
    Playbook::from_completions(queues)
}

#[test]
fn endless_pure_blocks_stop_at_the_llm_budget() {
    let llm = FnProvider::new(|_, _, _| "x = 1".to_string());
    let mut env = CounterEnv::new();
    let obs = env.reset(0).unwrap();
    let config = KernelConfig {
        budgets: Budgets { max_llm_calls: 7, ..Budgets::default() },
        ..KernelConfig::default()
    };
    let out = run_episode("Count to 4.", &obs, &ReplPool::new(), &mut env, &llm, &config);
    assert_eq!(out.result.termination, Termination::LlmCallBudget);
    assert_eq!(out.result.reason(), "llm_call_budget");
    assert_eq!(out.result.llm_calls, 7);
    assert!(!out.result.success);
}

#[test]
fn env_step_budget_ends_the_episode() {
    let llm = FnProvider::new(|_, _, _| "act('again')".to_string());
    let mut env = EchoEnv::default();
    let obs = env.reset(0).unwrap();
    let config = KernelConfig {
        budgets: Budgets { max_env_steps: 3, ..Budgets::default() },
        ..KernelConfig::default()
    };
    let out = run_episode("echo", &obs, &ReplPool::new(), &mut env, &llm, &config);
    assert_eq!(out.result.termination, Termination::EnvStepBudget);
    assert_eq!(env.actions.len(), 3);
}

// f1 calls f2 calls ... ; with room for 16 frames the call from f15 to f16
// is refused and f15 sees an error entry instead.
#[test]
fn deep_spawn_chain_is_refused_at_the_limit() {
    let llm = FnProvider::new(|name, turn, _| {
        if name == "_main" {
            return match turn {
                1 => "r = f1()".into(),
                _ => "act('stop')".into(),
            };
        }
        let k: usize = name[1..].parse().unwrap();
        match turn {
            1 => format!("Your task is to: level {k}"),
            2 => format!("v = f{}()", k + 1),
            _ => "answer(None)".into(),
        }
    });
    let mut env = EchoEnv::default();
    let obs = env.reset(0).unwrap();
    let out = run_episode("echo", &obs, &ReplPool::new(), &mut env, &llm, &KernelConfig::default());
    assert_eq!(out.result.termination, Termination::EnvDone);
    assert!(out.result.success);
    let f15 = out.pool.get("f15").unwrap();
    assert!(f15.history.iter().any(|e| e.kind == EntryKind::Error
        && e.text == "RecursionError('maximum REPL depth 16 exceeded')"));
    assert!(out.pool.get("f16").is_none());
    // The refused call is never described.
    assert_eq!(out.trace.count("subtask_query"), 15);
}

#[test]
fn get_args_by_arity() {
    let (out, _) = run(
        book(vec![
            ("_main", vec!["x = (f(), g('abc'), h(1, 'b', [3]))", "answer(x)"]),
            ("f", vec!["Your task is to: f", "answer(get_args())"]),
            ("g", vec!["Your task is to: g", "answer(get_args())"]),
            ("h", vec!["Your task is to: h", "a, b, c = get_args()", "answer((a, b, c))"]),
        ]),
        &KernelConfig::default(),
    );
    assert_eq!(out.result.termination, Termination::RootAnswer);
    assert_eq!(out.result.answer.as_deref(), Some("(None, 'abc', (1, 'b', [3]))"));
}

#[test]
fn observations_reach_every_repl_on_the_stack() {
    let (out, env) = run(
        book(vec![
            ("_main", vec!["a()", "act('root')", "act('stop')"]),
            ("a", vec!["Your task is to: a", "b()", "answer(1)"]),
            ("b", vec!["Your task is to: b", "c()", "answer(2)"]),
            ("c", vec!["Your task is to: c", "act('deep')", "act('quiet')", "answer(3)"]),
        ]),
        &KernelConfig::default(),
    );
    assert!(out.result.success);
    assert_eq!(env.actions, ["deep", "quiet", "root", "stop"]);
    let obs = |name: &str| -> Vec<String> {
        out.pool
            .get(name)
            .unwrap()
            .history
            .iter()
            .filter(|e| e.kind == EntryKind::Obs)
            .map(|e| e.text.clone())
            .collect()
    };
    for name in ["a", "b", "c"] {
        assert_eq!(obs(name), ["saw deep", ""], "{name}");
    }
    assert_eq!(obs("_main"), ["ready", "saw deep", "", "saw root", ""]);
}

#[test]
fn three_syntax_failures_at_the_root_give_up() {
    let (out, env) = run(book(vec![("_main", vec!["x = )", "x == == 1", "y = ]"])]), &KernelConfig::default());
    assert_eq!(out.result.termination, Termination::SyntaxFailures);
    assert!(env.actions.is_empty());
    assert_eq!(out.trace.count("give_up"), 1);
}

#[test]
fn a_failed_child_answers_none() {
    let (out, _) = run(
        book(vec![
            ("_main", vec!["v = child()", "answer(v)"]),
            ("child", vec!["Your task is to: fail", "x = )", "y = )", "z = ]"]),
        ]),
        &KernelConfig::default(),
    );
    assert_eq!(out.result.termination, Termination::RootAnswer);
    assert_eq!(out.result.answer.as_deref(), Some("None"));
}

#[test]
fn unterminated_string_then_correction() {
    let bad = r#"all_requirements = ["car subwoofer", "high speed", "dual style", "12" power amplifier", "<200.00 dollars"]"#;
    let good = r#"all_requirements = ["car subwoofer", "high speed", "dual style", "12\" power amplifier", "<200.00 dollars"]"#;
    let (out, _) = run(
        book(vec![("_main", vec![bad, good, "answer(all_requirements[3])"])]),
        &KernelConfig::default(),
    );
    assert_eq!(out.result.answer.as_deref(), Some("'12\" power amplifier'"));
    let main = out.pool.get("_main").unwrap();
    let errors: Vec<_> = main.history.iter().filter(|e| e.kind == EntryKind::Error).collect();
    assert_eq!(errors.len(), 1);
    assert!(errors[0].text.starts_with("SyntaxError('unterminated string literal"));
}

#[test]
fn only_the_first_statement_of_a_completion_runs() {
    let (out, env) = run(
        book(vec![("_main", vec!["act('one')\nact('two')", "act('stop')"])]),
        &KernelConfig::default(),
    );
    assert_eq!(env.actions, ["one", "stop"]);
    let code: Vec<_> = out.pool.get("_main").unwrap().history.iter()
        .filter(|e| e.kind == EntryKind::Code)
        .map(|e| e.text.as_str())
        .collect();
    assert_eq!(code, ["act('one')", "act('stop')"]);
}

#[test]
fn compound_blocks_are_continued() {
    let llm = FnProvider::new(|_, turn, req| match turn {
        1 => "for a in ['x', 'y']:".into(),
        2 => {
            assert!(matches!(req.prompt.mode, PromptMode::Continuation { .. }));
            assert!(req.prompt.transcript.ends_with(">>> for a in ['x', 'y']:\n... "));
            "    act(a)\n".into()
        }
        _ => "act('stop')".into(),
    });
    let mut env = EchoEnv::default();
    let obs = env.reset(0).unwrap();
    let out = run_episode("echo", &obs, &ReplPool::new(), &mut env, &llm, &KernelConfig::default());
    assert!(out.result.success);
    assert_eq!(env.actions, ["x", "y", "stop"]);
}

#[test]
fn exhausted_playbook_aborts_with_the_turn() {
    let (out, _) = run(book(vec![("_main", vec!["x = 1"])]), &KernelConfig::default());
    assert_eq!(out.result.reason(), "llm_error");
    let d = out.result.diagnostic().unwrap();
    assert!(d.contains("_main") && d.contains('2'), "{d}");
}

#[test]
fn recursive_calls_are_refused() {
    let (out, _) = run(
        book(vec![
            ("_main", vec!["v = f()", "answer(v)"]),
            ("f", vec!["Your task is to: f", "w = f()", "answer('done')"]),
        ]),
        &KernelConfig::default(),
    );
    assert_eq!(out.result.answer.as_deref(), Some("'done'"));
    let f = out.pool.get("f").unwrap();
    assert!(f.history.iter().any(|e| e.text == "RecursionError(\"REPL 'f' is already running\")"));
}

#[test]
fn no_subtask_mode_turns_spawns_into_name_errors() {
    let config = KernelConfig { no_subtask_repls: true, ..KernelConfig::default() };
    let (out, _) = run(book(vec![("_main", vec!["v = helper(1)", "answer(2)"])]), &config);
    assert_eq!(out.result.answer.as_deref(), Some("2"));
    let main = out.pool.get("_main").unwrap();
    assert!(main.history.iter().any(|e| e.text == "REPLNameError(\"name 'helper' not defined.\")"));
    assert!(!out.trace.log().contains("ENTER REPL `helper`"));
}

#[test]
fn runs_are_deterministic() {
    let make = || {
        run(
            book(vec![
                ("_main", vec!["a()", "act('stop')"]),
                ("a", vec!["Your task is to: a", "print('hi')", "act('x')", "answer(1)"]),
            ]),
            &KernelConfig::default(),
        )
        .0
    };
    let (a, b) = (make(), make());
    assert_eq!(a.trace.log(), b.trace.log());
    assert_eq!(a.trace.to_jsonl(), b.trace.to_jsonl());
}
