//! Random REPL programs with actions, prints and nested subtask calls, run
//! through the kernel and through a single-pass oracle that executes each
//! statement exactly once.

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use replplan_core::envs::{EnvError, EnvResult, Environment};
use replplan_core::gateway::{Playbook, PlaybookEntry, ScriptedProvider};
use replplan_core::kernel::{run_episode, KernelConfig, ReplPool, Termination};

pub const MAX_CONTEXT_CALLS: usize = 10;
pub const MAX_SPAWN_DEPTH: usize = 3;

#[derive(Debug, Clone)]
pub enum E {
    Lit(i64),
    Var(u8),
    Add(Box<E>, Box<E>),
    Sub(Box<E>, Box<E>),
    Scale(Box<E>, i64),
}

#[derive(Debug, Clone)]
pub enum S {
    Assign(u8, E),
    /// `act('a<site>-' + str(e))`, then `v = len(get_obs())`.
    Act { site: usize, var: u8, e: E },
    Print { site: usize, e: E },
    For(i64, Vec<S>),
    If(E, Vec<S>, Vec<S>),
    /// `v = f<site>(e)`, a subtask with its own program.
    Spawn { site: usize, var: u8, e: E, child: Box<P> },
}

#[derive(Debug, Clone)]
pub struct P {
    pub body: Vec<S>,
    pub ret: E,
}

fn expr() -> BoxedStrategy<E> {
    let leaf = prop_oneof![(-3i64..=5).prop_map(E::Lit), (0u8..3).prop_map(E::Var)];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| E::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| E::Sub(Box::new(a), Box::new(b))),
            (inner, -2i64..=3).prop_map(|(a, k)| E::Scale(Box::new(a), k)),
        ]
    })
    .boxed()
}

fn stmt(depth: usize) -> BoxedStrategy<S> {
    let var = || 0u8..3;
    let mut simple = vec![
        (2, (var(), expr()).prop_map(|(v, e)| S::Assign(v, e)).boxed()),
        (2, (var(), expr()).prop_map(|(var, e)| S::Act { site: 0, var, e }).boxed()),
        (1, expr().prop_map(|e| S::Print { site: 0, e }).boxed()),
    ];
    if depth < MAX_SPAWN_DEPTH {
        simple.push((
            3,
            (var(), expr(), program(depth + 1))
                .prop_map(|(var, e, child)| S::Spawn { site: 0, var, e, child: Box::new(child) })
                .boxed(),
        ));
    }
    let simple = proptest::strategy::Union::new_weighted(simple).boxed();
    prop_oneof![
        4 => simple.clone(),
        1 => (1i64..=2, prop::collection::vec(simple.clone(), 1..3)).prop_map(|(n, b)| S::For(n, b)),
        1 => (expr(), prop::collection::vec(simple.clone(), 1..3), prop::collection::vec(simple, 0..2))
            .prop_map(|(c, t, f)| S::If(c, t, f)),
    ]
    .boxed()
}

fn program(depth: usize) -> BoxedStrategy<P> {
    // Children stay short so nested chains fit the call budget.
    let len = if depth == 0 { 1..5 } else { 0..3 };
    (prop::collection::vec(stmt(depth), len), expr())
        .prop_map(|(body, ret)| P { body, ret })
        .boxed()
}

/// A chain of `depth` nested subtask calls around a cheap innermost body.
fn chain(depth: usize) -> BoxedStrategy<P> {
    if depth == 0 {
        let filler = prop_oneof![
            3 => (0u8..3, expr()).prop_map(|(v, e)| S::Assign(v, e)),
            1 => expr().prop_map(|e| S::Print { site: 0, e }),
        ];
        return (prop::collection::vec(filler, 0..2), expr())
            .prop_map(|(body, ret)| P { body, ret })
            .boxed();
    }
    (0u8..3, expr(), chain(depth - 1), expr())
        .prop_map(|(var, e, child, ret)| P {
            body: vec![S::Spawn { site: 0, var, e, child: Box::new(child) }],
            ret,
        })
        .boxed()
}

/// A numbered program: every action, print and spawn has a unique site.
pub fn numbered() -> impl Strategy<Value = P> {
    prop_oneof![
        4 => program(0),
        1 => (1..=MAX_SPAWN_DEPTH).prop_flat_map(chain),
    ]
    .prop_map(|mut p| {
        number(&mut p.body, &mut 0);
        p
    })
}

fn number(body: &mut [S], next: &mut usize) {
    for s in body {
        match s {
            S::Act { site, .. } | S::Print { site, .. } => {
                *next += 1;
                *site = *next;
            }
            S::Spawn { site, child, .. } => {
                *next += 1;
                *site = *next;
                number(&mut child.body, next);
            }
            S::For(_, b) => number(b, next),
            S::If(_, t, f) => {
                number(t, next);
                number(f, next);
            }
            S::Assign(..) => {}
        }
    }
}

fn render_e(e: &E) -> String {
    match e {
        E::Lit(n) => format!("({n})"),
        E::Var(v) => format!("v{v}"),
        E::Add(a, b) => format!("({} + {})", render_e(a), render_e(b)),
        E::Sub(a, b) => format!("({} - {})", render_e(a), render_e(b)),
        E::Scale(a, k) => format!("({} * {k})", render_e(a)),
    }
}

fn render_body(body: &[S], indent: usize, out: &mut String) {
    let pad = "    ".repeat(indent);
    for s in body {
        match s {
            S::Assign(v, e) => out.push_str(&format!("{pad}v{v} = {}\n", render_e(e))),
            S::Act { site, var, e } => {
                out.push_str(&format!("{pad}act('a{site}-' + str({}))\n", render_e(e)));
                out.push_str(&format!("{pad}v{var} = len(get_obs())\n"));
            }
            S::Print { site, e } => out.push_str(&format!("{pad}print('p{site}', {})\n", render_e(e))),
            S::Spawn { site, var, e, .. } => {
                out.push_str(&format!("{pad}v{var} = f{site}({})\n", render_e(e)))
            }
            S::For(n, b) => {
                out.push_str(&format!("{pad}for k in range({n}):\n"));
                render_body(b, indent + 1, out);
            }
            S::If(c, t, f) => {
                out.push_str(&format!("{pad}if {} > 0:\n", render_e(c)));
                render_body(t, indent + 1, out);
                if !f.is_empty() {
                    out.push_str(&format!("{pad}else:\n"));
                    render_body(f, indent + 1, out);
                }
            }
        }
    }
}

/// One block per REPL: the root answers its three variables, a child its
/// return expression.
pub fn render(p: &P, root: bool) -> String {
    let mut out = String::from("if True:\n");
    out.push_str(if root { "    v0 = 0\n" } else { "    v0 = get_args()\n" });
    out.push_str("    v1 = 1\n    v2 = 2\n");
    render_body(&p.body, 1, &mut out);
    if root {
        out.push_str("    answer((v0, v1, v2))\n");
    } else {
        out.push_str(&format!("    answer({})\n", render_e(&p.ret)));
    }
    out
}

/// Observation for the k-th action (1-based).
pub fn observation(k: usize, action: &str) -> String {
    "x".repeat((k * 7 + action.len()) % 5 + 1)
}

#[derive(Debug, Default, PartialEq)]
pub struct Expected {
    pub actions: Vec<String>,
    pub prints: Vec<String>,
    /// act, get_obs, print, get_args, answer and subtask calls, over all
    /// REPLs.
    pub context_calls: usize,
    /// Invocations per child name.
    pub calls: BTreeMap<String, usize>,
    /// Child programs by name, for building the playbook.
    pub children: BTreeMap<String, String>,
    pub answer: String,
    /// Deepest nesting of subtask calls reached.
    pub max_depth: usize,
}

struct Oracle {
    out: Expected,
    obs: String,
}

impl Oracle {
    fn eval(&self, e: &E, vars: &[i64; 3]) -> Option<i64> {
        match e {
            E::Lit(n) => Some(*n),
            E::Var(v) => Some(vars[*v as usize]),
            E::Add(a, b) => self.eval(a, vars)?.checked_add(self.eval(b, vars)?),
            E::Sub(a, b) => self.eval(a, vars)?.checked_sub(self.eval(b, vars)?),
            E::Scale(a, k) => self.eval(a, vars)?.checked_mul(*k),
        }
    }

    fn run(&mut self, body: &[S], vars: &mut [i64; 3], depth: usize) -> Option<()> {
        for s in body {
            match s {
                S::Assign(v, e) => vars[*v as usize] = self.eval(e, vars)?,
                S::Act { site, var, e } => {
                    let action = format!("a{site}-{}", self.eval(e, vars)?);
                    self.out.actions.push(action.clone());
                    // act and get_obs
                    self.out.context_calls += 2;
                    self.obs = observation(self.out.actions.len(), &action);
                    vars[*var as usize] = self.obs.len() as i64;
                }
                S::Print { site, e } => {
                    let v = self.eval(e, vars)?;
                    self.out.prints.push(format!("p{site} {v}"));
                    self.out.context_calls += 1;
                }
                S::Spawn { site, var, e, child } => {
                    let arg = self.eval(e, vars)?;
                    let name = format!("f{site}");
                    *self.out.calls.entry(name.clone()).or_insert(0) += 1;
                    self.out.children.insert(name, render(child, false));
                    // The call itself, the child's get_args and its answer.
                    self.out.context_calls += 3;
                    let mut inner = [arg, 1, 2];
                    self.out.max_depth = self.out.max_depth.max(depth + 1);
                    self.run(&child.body, &mut inner, depth + 1)?;
                    vars[*var as usize] = self.eval(&child.ret, &inner)?;
                }
                S::For(n, b) => {
                    for _ in 0..*n {
                        self.run(b, vars, depth)?;
                    }
                }
                S::If(c, t, f) => {
                    if self.eval(c, vars)? > 0 {
                        self.run(t, vars, depth)?;
                    } else {
                        self.run(f, vars, depth)?;
                    }
                }
            }
        }
        Some(())
    }
}

/// Straight-line execution of the whole program tree; `None` on overflow.
pub fn oracle(p: &P) -> Option<Expected> {
    let mut o = Oracle { out: Expected::default(), obs: String::new() };
    let mut vars = [0, 1, 2];
    o.run(&p.body, &mut vars, 0)?;
    o.out.answer = format!("({}, {}, {})", vars[0], vars[1], vars[2]);
    o.out.context_calls += 1;
    Some(o.out)
}

/// Answers each action with [`observation`]; never finishes on its own.
#[derive(Default)]
struct ScriptEnv {
    actions: Vec<String>,
}

impl Environment for ScriptEnv {
    fn reset(&mut self, _: usize) -> Result<String, EnvError> {
        Ok(String::new())
    }

    fn step(&mut self, action: &str) -> Result<EnvResult, EnvError> {
        self.actions.push(action.to_string());
        Ok(EnvResult { obs: observation(self.actions.len(), action), reward: 0.0, done: false })
    }

    fn score(&self) -> f64 {
        0.0
    }

    fn task_description(&self) -> String {
        "program".into()
    }

    fn actions(&self) -> &[String] {
        &self.actions
    }
}

fn entry(text: String) -> PlaybookEntry {
    PlaybookEntry { expect_prefix: None, completion: text }
}

/// Runs `p` through the kernel and compares it with the oracle.
pub fn check(p: &P, want: &Expected) -> Result<(), String> {
    let mut book = Playbook::default();
    book.0.insert("_main".into(), vec![entry(render(p, true))]);
    for (name, n) in &want.calls {
        let mut q = vec![entry(format!("Your task is to: run {name}"))];
        q.extend((0..*n).map(|_| entry(want.children[name].clone())));
        book.0.insert(name.clone(), q);
    }
    let mut env = ScriptEnv::default();
    let obs = env.reset(0).unwrap();
    let llm = ScriptedProvider::new(book);
    let out = run_episode("program", &obs, &ReplPool::new(), &mut env, &llm, &KernelConfig::default());
    let r = &out.result;
    let fail = |what: &str| Err(format!("{what}\nprogram:\n{}\nlog:\n{}", render(p, true), out.trace.log()));
    if r.termination != Termination::RootAnswer {
        return fail(&format!("termination {:?}", r.termination));
    }
    if env.actions != want.actions {
        return fail(&format!("actions {:?}, oracle {:?}", env.actions, want.actions));
    }
    if r.answer.as_deref() != Some(want.answer.as_str()) {
        return fail(&format!("answer {:?}, oracle {}", r.answer, want.answer));
    }
    let mut prints: Vec<&str> = out
        .trace
        .log()
        .lines()
        .filter(|l| l.starts_with('p') && l[1..].split(' ').next().is_some_and(|n| n.parse::<usize>().is_ok()))
        .collect();
    let mut expected: Vec<&str> = want.prints.iter().map(String::as_str).collect();
    prints.sort_unstable();
    expected.sort_unstable();
    if prints != expected {
        return fail(&format!("prints {prints:?}, oracle {expected:?}"));
    }
    let llm_calls = 1 + want.calls.values().map(|n| n + 1).sum::<usize>();
    if r.llm_calls != llm_calls {
        return fail(&format!("{} llm calls, expected {llm_calls}", r.llm_calls));
    }
    if out.trace.count("act") != want.actions.len() {
        return fail("act events differ from actions");
    }
    Ok(())
}

/// Runs `cases` deterministic random programs with at most
/// [`MAX_CONTEXT_CALLS`] context calls each.
pub fn exactly_once(cases: u32) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        max_global_rejects: 100_000,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut runner = TestRunner::new_with_rng(config, rng);
    runner
        .run(&numbered(), |p| {
            let want = oracle(&p);
            prop_assume!(want.as_ref().is_some_and(|w| w.context_calls <= MAX_CONTEXT_CALLS));
            check(&p, &want.unwrap()).map_err(TestCaseError::fail)
        })
        .map_err(|e| e.to_string())
}
