use replplan_core::interp::{
    evaluate_block, evaluate_block_with_budget, CallLedger, EffectKind, ExecOutcome, OutputKind,
    Scope, Value,
};
use replplan_core::mlang::{parse_block, SourceBlock};

fn stmt(text: &str) -> replplan_core::mlang::ast::Stmt {
    parse_block(&SourceBlock::test(text)).unwrap_or_else(|d| panic!("{}", d.message))
}

/// Drives a block to a terminal outcome, resolving `act` with `obs<i>` and
/// REPL calls with their first argument. Returns the concatenated output,
/// the ordered effects, and the final outcome.
fn drive(text: &str, scope: &mut Scope) -> (String, Vec<String>, ExecOutcome) {
    let s = stmt(text);
    let mut ledger = CallLedger::new();
    let mut out = String::new();
    let mut effects = Vec::new();
    for _ in 0..1000 {
        let outcome = evaluate_block(&s, scope, &mut ledger);
        out.push_str(&outcome.stdout());
        match &outcome {
            ExecOutcome::Suspended { effect, .. } => {
                effects.push(format!("{}#{}", effect.call, effect.index));
                let v = match &effect.kind {
                    EffectKind::Act(a) => Value::text(format!("obs after {a}")),
                    EffectKind::SpawnCall { args, .. } => args.first().cloned().unwrap_or(Value::None),
                    EffectKind::GetObs => Value::text("page"),
                    _ => Value::None,
                };
                ledger.record(&effect.call, effect.index, v);
            }
            _ => return (out, effects, outcome),
        }
    }
    panic!("block did not terminate");
}

#[test]
fn prints_happen_once_across_replays() {
    let mut scope = Scope::new();
    let text = "for i in range(3):\n    print('before', i)\n    o = act(f'click {i}')\n    print(o)";
    let (out, effects, outcome) = drive(text, &mut scope);
    assert!(matches!(outcome, ExecOutcome::Completed { .. }));
    assert_eq!(effects, ["act#1", "act#2", "act#3"]);
    // Oracle: the same loop executed straight through once.
    let mut expected = String::new();
    for i in 0..3 {
        expected.push_str(&format!("before {i}\n"));
        expected.push_str(&format!("obs after click {i}\n"));
    }
    assert_eq!(out, expected);
    assert_eq!(scope.get("o").unwrap().to_str(), "obs after click 2");
}

#[test]
fn suspension_leaves_scope_untouched() {
    let mut scope = Scope::new();
    scope.set("x", Value::Int(1));
    let before = scope.snapshot_id();
    let s = stmt("x = x + act('a')");
    let mut ledger = CallLedger::new();
    let out = evaluate_block(&s, &mut scope, &mut ledger);
    assert!(matches!(out, ExecOutcome::Suspended { .. }));
    assert_eq!(scope.get("x"), Some(&Value::Int(1)));
    assert_eq!(scope.snapshot_id(), before);
    ledger.record("act", 1, Value::Int(41));
    let out = evaluate_block(&s, &mut scope, &mut ledger);
    assert!(matches!(out, ExecOutcome::Completed { .. }));
    assert_eq!(scope.get("x"), Some(&Value::Int(42)));
    assert_eq!(scope.snapshot_id(), before + 1);
}

#[test]
fn mutation_before_suspension_is_not_kept() {
    let mut scope = Scope::new();
    scope.set("xs", Value::list(vec![]));
    let s = stmt("for i in range(2):\n    xs.append(act(i))");
    let mut ledger = CallLedger::new();
    evaluate_block(&s, &mut scope, &mut ledger);
    ledger.record("act", 1, Value::Int(10));
    evaluate_block(&s, &mut scope, &mut ledger);
    assert_eq!(scope.get("xs").unwrap().repr(), "[]");
    ledger.record("act", 2, Value::Int(20));
    evaluate_block(&s, &mut scope, &mut ledger);
    assert_eq!(scope.get("xs").unwrap().repr(), "[10, 20]");
}

#[test]
fn cached_values_are_copied() {
    let mut scope = Scope::new();
    let s = stmt("for i in range(2):\n    r = get_obs()\n    r.append(i)\n    print(r)");
    let mut ledger = CallLedger::new();
    let mut out = String::new();
    loop {
        let o = evaluate_block(&s, &mut scope, &mut ledger);
        out.push_str(&o.stdout());
        match o {
            ExecOutcome::Suspended { effect, .. } => {
                ledger.record(&effect.call, effect.index, Value::list(vec![]))
            }
            _ => break,
        }
    }
    assert_eq!(out, "[0]\n[1]\n");
}

#[test]
fn echo_skips_none_and_repeats() {
    let mut scope = Scope::new();
    let (out, _, _) = drive("'no options found.'", &mut scope);
    assert_eq!(out, "'no options found.'");
    let (out, _, _) = drive("print('x')", &mut scope);
    assert_eq!(out, "x\n");
    let s = stmt("for i in range(2):\n    i * 10\n    act(i)");
    let mut ledger = CallLedger::new();
    let mut kinds = Vec::new();
    loop {
        let o = evaluate_block(&s, &mut scope, &mut ledger);
        kinds.extend(o.output().iter().map(|x| (x.kind, x.text.clone())));
        match o {
            ExecOutcome::Suspended { effect, .. } => ledger.record(&effect.call, effect.index, Value::None),
            _ => break,
        }
    }
    assert_eq!(
        kinds,
        [(OutputKind::Echo, "0".to_string()), (OutputKind::Echo, "10".to_string())]
    );
}

#[test]
fn unbound_names() {
    let mut scope = Scope::new();
    let (_, effects, o) = drive("x = helper(1, 2)", &mut scope);
    assert_eq!(effects, ["helper#1"]);
    assert!(matches!(o, ExecOutcome::Completed { .. }));
    assert_eq!(scope.get("x"), Some(&Value::Int(1)));

    let s = stmt("y = helper(get_obs())");
    let mut ledger = CallLedger::new();
    match evaluate_block(&s, &mut scope, &mut ledger) {
        ExecOutcome::Suspended { effect, .. } => assert_eq!(effect.call, "get_obs"),
        o => panic!("{o:?}"),
    }

    let (_, _, o) = drive("print(missing)", &mut scope);
    match o {
        ExecOutcome::Failed { fault, .. } => {
            assert_eq!(fault.to_string(), "REPLNameError(\"name 'missing' not defined.\")")
        }
        o => panic!("{o:?}"),
    }
    let (_, _, o) = drive("items = search.items()", &mut scope);
    match o {
        ExecOutcome::Failed { fault, .. } => assert_eq!(
            fault.to_string(),
            "AttributeError(\"'LLMREPL' object has no attribute 'items'\")"
        ),
        o => panic!("{o:?}"),
    }
    scope.set("f", Value::repl_fn("f"));
    let (_, _, o) = drive("f.items", &mut scope);
    assert!(matches!(o, ExecOutcome::Failed { ref fault, .. } if fault.kind == "AttributeError"));
    let (_, _, o) = drive("f(1, k=2)", &mut scope);
    assert!(matches!(o, ExecOutcome::Failed { ref fault, .. } if fault.kind == "TypeError"));
}

#[test]
fn comprehension_names_do_not_leak() {
    let mut scope = Scope::new();
    scope.set("x", Value::text("kept"));
    drive("ys = [x * 2 for x in range(4) if x % 2 == 0]", &mut scope);
    assert_eq!(scope.get("ys").unwrap().repr(), "[0, 4]");
    assert_eq!(scope.get("x").unwrap().repr(), "'kept'");
    drive("zs = [k for k in [1]]", &mut scope);
    assert!(!scope.contains("k"));
}

#[test]
fn loops_and_control_flow() {
    let mut scope = Scope::new();
    let text = "total = 0\n";
    drive(text, &mut scope);
    drive("while True:\n    total += 1\n    if total > 5:\n        break\n    elif total == 2:\n        continue\n    else:\n        pass", &mut scope);
    assert_eq!(scope.get("total"), Some(&Value::Int(6)));
    scope.set("xs", Value::list(vec![Value::Int(1)]));
    drive("for x in xs:\n    if x < 4:\n        xs.append(x + 1)", &mut scope);
    assert_eq!(scope.get("xs").unwrap().repr(), "[1, 2, 3, 4]");
    drive("a, b = ('p', 'q')", &mut scope);
    assert_eq!(scope.get("b").unwrap().repr(), "'q'");
    let (_, _, o) = drive("a, b = [1, 2, 3]", &mut scope);
    assert!(matches!(o, ExecOutcome::Failed { ref fault, .. } if fault.kind == "ValueError"));
}

#[test]
fn step_budget_is_enforced() {
    let mut scope = Scope::new();
    let s = stmt("while True:\n    pass");
    let mut ledger = CallLedger::new();
    match evaluate_block_with_budget(&s, &mut scope, &mut ledger, 500) {
        ExecOutcome::Failed { fault, .. } => assert_eq!(fault.kind, "RuntimeBudgetExceeded"),
        o => panic!("{o:?}"),
    }
    let s = stmt("x = sorted(range(1000000))");
    match evaluate_block(&s, &mut scope, &mut ledger) {
        ExecOutcome::Failed { fault, .. } => assert_eq!(fault.kind, "RuntimeBudgetExceeded"),
        o => panic!("{o:?}"),
    }
    assert!(!scope.contains("x"));
}

#[test]
fn primitive_arity_and_arguments() {
    let mut scope = Scope::new();
    let (_, _, o) = drive("act()", &mut scope);
    assert!(matches!(o, ExecOutcome::Failed { ref fault, .. } if fault.kind == "TypeError"));
    let s = stmt("act(3)");
    let mut ledger = CallLedger::new();
    match evaluate_block(&s, &mut scope, &mut ledger) {
        ExecOutcome::Suspended { effect, .. } => assert_eq!(effect.kind, EffectKind::Act("3".into())),
        o => panic!("{o:?}"),
    }
    let s = stmt("answer()");
    match evaluate_block(&s, &mut scope, &mut CallLedger::new()) {
        ExecOutcome::Suspended { effect, .. } => assert_eq!(effect.kind, EffectKind::Answer(Value::None)),
        o => panic!("{o:?}"),
    }
    let (out, _, _) = drive("print('a', 'b', sep='-', end='!')", &mut scope);
    assert_eq!(out, "a-b!");
}

#[test]
fn break_outside_loop_is_a_syntax_error() {
    let d = parse_block(&SourceBlock::test("break")).unwrap_err();
    assert!(d.message.contains("'break' outside loop"), "{}", d.message);
    assert!(parse_block(&SourceBlock::test("for x in y:\n    if x:\n        break")).is_ok());
}
