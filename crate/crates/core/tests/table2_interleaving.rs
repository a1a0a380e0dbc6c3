use std::path::PathBuf;

use replplan_core::envs::{Environment, MiniWebShop};
use replplan_core::gateway::{Playbook, ScriptedProvider};
use replplan_core::kernel::{run_episode, KernelConfig, ReplPool, Termination};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/table2")
}

#[test]
fn pages_are_filtered_item_by_item() {
    let dir = fixtures();
    let mut env = MiniWebShop::load(&dir.join("catalog.json"), &dir.join("tasks.json")).unwrap();
    let obs = env.reset(0).unwrap();
    let llm = ScriptedProvider::new(Playbook::load(&dir.join("playbook.json")).unwrap());
    let task = env.task_description();
    let out = run_episode(&task, &obs, &ReplPool::new(), &mut env, &llm, &KernelConfig::default());
    assert_eq!(out.result.termination, Termination::RootAnswer);
    let mut want = vec!["search[ottoman bench]".to_string()];
    for page in 0..2 {
        for i in 1..=3 {
            want.push(format!("click [B0TB00000{}]", page * 3 + i));
            want.push("click [< Back]".to_string());
        }
        want.push("click [Next >]".to_string());
    }
    assert_eq!(out.result.actions, want);
    assert_eq!(env.actions(), want.as_slice());
    assert_eq!(
        out.result.answer.as_deref(),
        Some("['B0TB000001', 'B0TB000003', 'B0TB000005']")
    );
    assert!(llm.remaining().is_empty(), "{:?}", llm.remaining());
    assert_eq!(max_nesting(out.trace.log()), 4, "root plus three nested spawns");
}

fn max_nesting(log: &str) -> usize {
    let (mut depth, mut max) = (0usize, 0usize);
    for line in log.lines() {
        if line.starts_with("##### ENTER REPL") {
            depth += 1;
            max = max.max(depth);
        } else if line.starts_with("##### EXITING REPL") {
            depth -= 1;
        }
    }
    assert_eq!(depth, 0, "markers balance");
    max
}
