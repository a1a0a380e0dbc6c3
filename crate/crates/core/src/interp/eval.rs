//! Tree-walking evaluation with replay over a call ledger.
//!
//! A block is always evaluated from its start. Each context-sensitive call
//! takes the next per-name index; a recorded index returns its cached value,
//! an unrecorded one suspends the whole pass with an [`Effect`]. The kernel
//! records the resolution and evaluates the block again.

use std::collections::HashMap;

use super::builtins::{self, is_primitive};
use super::fault::{fault, RuntimeFault};
use super::ledger::CallLedger;
use super::ops;
use super::scope::Scope;
use super::value::{HashKey, Mapping, Value};
use crate::mlang::ast::*;

/// Evaluation steps allowed per pass over a block.
pub const STEP_BUDGET: usize = 100_000;

/// Ledger name under which REPL echo values are recorded.
const ECHO: &str = "<echo>";

/// Why a pass stopped before completing: the kernel must resolve this call.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    /// Callable the index belongs to (`act`, `answer`, or a REPL name).
    pub call: String,
    /// 1-based index of this call among calls to `call` in the pass.
    pub index: usize,
    pub kind: EffectKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EffectKind {
    Act(String),
    Answer(Value),
    /// Call of a REPL function. `unbound` is set when the name had no
    /// binding, so the kernel must create or inject the REPL first.
    SpawnCall { args: Vec<Value>, unbound: bool },
    GetArgs,
    GetObs,
    PrintPage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    /// Text written by `print`.
    Stdout,
    /// Value of an expression statement, rendered with `repr`.
    Echo,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub kind: OutputKind,
    pub text: String,
}

/// Result of one pass. `output` holds only text first produced in this pass.
#[derive(Debug, Clone, PartialEq)]
pub enum ExecOutcome {
    Completed { output: Vec<Output> },
    Suspended { effect: Effect, output: Vec<Output> },
    Failed { fault: RuntimeFault, output: Vec<Output> },
}

impl ExecOutcome {
    pub fn output(&self) -> &[Output] {
        match self {
            ExecOutcome::Completed { output }
            | ExecOutcome::Suspended { output, .. }
            | ExecOutcome::Failed { output, .. } => output,
        }
    }

    /// Concatenated text of all outputs.
    pub fn stdout(&self) -> String {
        self.output().iter().map(|o| o.text.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Call,
    NonCall,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Resolution {
    Value(Value),
    /// Unbound name in call position: a child REPL will be spawned.
    Spawn(String),
    Error(RuntimeFault),
}

/// Looks a name up in the scope, then among builtins.
pub fn resolve_name(name: &str, scope: &Scope, position: Position) -> Resolution {
    if let Some(v) = scope.get(name) {
        return Resolution::Value(v.clone());
    }
    if let Some(b) = builtins::lookup(name) {
        return Resolution::Value(Value::BuiltinFn(b));
    }
    match position {
        Position::Call => Resolution::Spawn(name.to_string()),
        Position::NonCall => Resolution::Error(RuntimeFault::name_error(name)),
    }
}

/// Runs one pass of `stmt`. On completion the scope is replaced by the
/// pass's final bindings; otherwise it is left exactly as given.
pub fn evaluate_block(stmt: &Stmt, scope: &mut Scope, ledger: &mut CallLedger) -> ExecOutcome {
    evaluate_block_with_budget(stmt, scope, ledger, STEP_BUDGET)
}

pub fn evaluate_block_with_budget(
    stmt: &Stmt,
    scope: &mut Scope,
    ledger: &mut CallLedger,
    budget: usize,
) -> ExecOutcome {
    let mut ev = Evaluator {
        scope: scope.snapshot(),
        ledger,
        counts: HashMap::new(),
        output: Vec::new(),
        steps: 0,
        budget,
    };
    let result = ev.exec(stmt);
    let output = std::mem::take(&mut ev.output);
    match result {
        Ok(()) => {
            scope.commit(ev.scope);
            ExecOutcome::Completed { output }
        }
        Err(Flow::Suspend(effect)) => ExecOutcome::Suspended { effect, output },
        Err(Flow::Fault(fault)) => ExecOutcome::Failed { fault, output },
        Err(Flow::Break) | Err(Flow::Continue) => ExecOutcome::Failed {
            fault: fault("SyntaxError", "'break' outside loop"),
            output,
        },
    }
}

enum Flow {
    Fault(RuntimeFault),
    Suspend(Effect),
    Break,
    Continue,
}

impl From<RuntimeFault> for Flow {
    fn from(f: RuntimeFault) -> Self {
        Flow::Fault(f)
    }
}

type R<T> = Result<T, Flow>;

/// Evaluated positional and keyword arguments.
type CallArgs = (Vec<Value>, Vec<(String, Value)>);

fn budget_fault(budget: usize) -> RuntimeFault {
    RuntimeFault::new(
        "RuntimeBudgetExceeded",
        format!("block exceeded {budget} evaluation steps"),
    )
}

fn repl_attr(attr: &str) -> RuntimeFault {
    fault(
        "AttributeError",
        format!("'LLMREPL' object has no attribute '{attr}'"),
    )
}

struct Evaluator<'l> {
    scope: Scope,
    ledger: &'l mut CallLedger,
    counts: HashMap<String, usize>,
    output: Vec<Output>,
    steps: usize,
    budget: usize,
}

impl Evaluator<'_> {
    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(budget_fault(self.budget).into());
        }
        Ok(())
    }

    fn next_index(&mut self, name: &str) -> usize {
        let c = self.counts.entry(name.to_string()).or_insert(0);
        *c += 1;
        *c
    }

    fn context_call(&mut self, name: &str, kind: EffectKind) -> R<Value> {
        let index = self.next_index(name);
        if let Some(cached) = self.ledger.lookup(name, index) {
            return Ok(cached.value.deep_copy());
        }
        Err(Flow::Suspend(Effect {
            call: name.to_string(),
            index,
            kind,
        }))
    }

    fn emit(&mut self, kind: OutputKind, text: String) {
        if kind == OutputKind::Stdout {
            if let Some(last) = self.output.last_mut() {
                if last.kind == OutputKind::Stdout {
                    last.text.push_str(&text);
                    return;
                }
            }
        }
        self.output.push(Output { kind, text });
    }

    fn echo(&mut self, v: &Value) {
        if matches!(v, Value::None) {
            return;
        }
        let index = self.next_index(ECHO);
        if self.ledger.lookup(ECHO, index).is_some() {
            return;
        }
        let text = v.repr();
        self.ledger.record_output(ECHO, index, text.clone());
        self.emit(OutputKind::Echo, text);
    }

    fn print(&mut self, args: Vec<Value>, kwargs: Vec<(String, Value)>) -> R<Value> {
        let mut sep = " ".to_string();
        let mut end = "\n".to_string();
        for (k, v) in kwargs {
            let slot = match k.as_str() {
                "sep" => &mut sep,
                "end" => &mut end,
                other => {
                    return Err(fault(
                        "TypeError",
                        format!("'{other}' is an invalid keyword argument for print()"),
                    )
                    .into())
                }
            };
            match v {
                Value::None => {}
                Value::Text(t) => *slot = t.to_string(),
                other => {
                    return Err(fault(
                        "TypeError",
                        format!("{k} must be None or a string, not {}", other.type_name()),
                    )
                    .into())
                }
            }
        }
        let index = self.next_index("print");
        if self.ledger.lookup("print", index).is_some() {
            return Ok(Value::None);
        }
        let mut text = args.iter().map(Value::to_str).collect::<Vec<_>>().join(&sep);
        text.push_str(&end);
        self.ledger.record_print(index, text.clone());
        self.emit(OutputKind::Stdout, text);
        Ok(Value::None)
    }

    fn exec_body(&mut self, body: &[Stmt]) -> R<()> {
        for s in body {
            self.exec(s)?;
        }
        Ok(())
    }

    fn exec(&mut self, stmt: &Stmt) -> R<()> {
        self.tick()?;
        match &stmt.kind {
            StmtKind::Assign { target, value } => {
                let v = self.eval(value)?;
                self.assign(target, v)
            }
            StmtKind::AugAssign { target, op, value } => self.aug_assign(target, *op, value),
            StmtKind::Expr(e) => {
                let v = self.eval(e)?;
                self.echo(&v);
                Ok(())
            }
            StmtKind::For { target, iter, body } => {
                let iterable = self.eval(iter)?;
                match &iterable {
                    // Lists are iterated live, so appends during the loop are seen.
                    Value::List(l) => {
                        let mut i = 0;
                        loop {
                            let item = {
                                let items = l.borrow();
                                match items.get(i) {
                                    Some(v) => v.clone(),
                                    None => break,
                                }
                            };
                            i += 1;
                            if !self.loop_iteration(target, item, body)? {
                                break;
                            }
                        }
                    }
                    other => {
                        for item in ops::iterate(other)? {
                            if !self.loop_iteration(target, item, body)? {
                                break;
                            }
                        }
                    }
                }
                Ok(())
            }
            StmtKind::While { cond, body } => {
                loop {
                    self.tick()?;
                    if !self.eval(cond)?.truthy() {
                        break;
                    }
                    match self.exec_body(body) {
                        Ok(()) | Err(Flow::Continue) => {}
                        Err(Flow::Break) => break,
                        Err(other) => return Err(other),
                    }
                }
                Ok(())
            }
            StmtKind::If { branches, orelse } => {
                for (cond, body) in branches {
                    if self.eval(cond)?.truthy() {
                        return self.exec_body(body);
                    }
                }
                match orelse {
                    Some(body) => self.exec_body(body),
                    None => Ok(()),
                }
            }
            StmtKind::Break => Err(Flow::Break),
            StmtKind::Continue => Err(Flow::Continue),
            StmtKind::Pass | StmtKind::Comment(_) => Ok(()),
        }
    }

    /// Returns false when the loop should stop.
    fn loop_iteration(&mut self, target: &Target, item: Value, body: &[Stmt]) -> R<bool> {
        self.tick()?;
        self.assign(target, item)?;
        match self.exec_body(body) {
            Ok(()) | Err(Flow::Continue) => Ok(true),
            Err(Flow::Break) => Ok(false),
            Err(other) => Err(other),
        }
    }

    fn unpack(&self, v: Value, n: usize) -> R<Vec<Value>> {
        let items = match &v {
            Value::List(_) | Value::Tuple(_) | Value::Text(_) | Value::Map(_) => ops::iterate(&v)?,
            other => {
                return Err(fault(
                    "TypeError",
                    format!("cannot unpack non-iterable {} object", other.type_name()),
                )
                .into())
            }
        };
        if items.len() > n {
            return Err(fault(
                "ValueError",
                format!("too many values to unpack (expected {n})"),
            )
            .into());
        }
        if items.len() < n {
            return Err(fault(
                "ValueError",
                format!("not enough values to unpack (expected {n}, got {})", items.len()),
            )
            .into());
        }
        Ok(items)
    }

    fn assign(&mut self, target: &Target, v: Value) -> R<()> {
        match target {
            Target::Name(n, _) => {
                self.scope.set(n.clone(), v);
                Ok(())
            }
            Target::Tuple(targets, _) => {
                let items = self.unpack(v, targets.len())?;
                for (t, item) in targets.iter().zip(items) {
                    self.assign(t, item)?;
                }
                Ok(())
            }
            Target::Subscript { value, index, .. } => {
                let container = self.eval(value)?;
                let idx = self.eval(index)?;
                ops::set_index(&container, &idx, v)?;
                Ok(())
            }
            Target::Attribute { value, attr, .. } => {
                let base = self.eval_attr_base(value, attr)?;
                Err(match base {
                    Value::ReplFn(_) => repl_attr(attr),
                    other => fault(
                        "AttributeError",
                        format!("'{}' object has no attribute '{attr}'", other.type_name()),
                    ),
                }
                .into())
            }
        }
    }

    fn aug_combine(&mut self, op: BinOp, current: Value, rhs: Value) -> R<Value> {
        if op == BinOp::Add {
            if let Value::List(l) = &current {
                let items = ops::iterate(&rhs)?;
                self.charge(items.len())?;
                l.borrow_mut().extend(items);
                return Ok(current);
            }
        }
        Ok(ops::binop(op, &current, &rhs)?)
    }

    fn aug_assign(&mut self, target: &Target, op: BinOp, value: &Expr) -> R<()> {
        match target {
            Target::Name(n, _) => {
                let current = match resolve_name(n, &self.scope, Position::NonCall) {
                    Resolution::Value(v) => v,
                    Resolution::Error(e) => return Err(e.into()),
                    Resolution::Spawn(_) => unreachable!("non-call position"),
                };
                let rhs = self.eval(value)?;
                let new = self.aug_combine(op, current, rhs)?;
                self.scope.set(n.clone(), new);
                Ok(())
            }
            Target::Subscript { value: container, index, .. } => {
                let c = self.eval(container)?;
                let idx = self.eval(index)?;
                let current = ops::index(&c, &idx)?;
                let rhs = self.eval(value)?;
                let new = self.aug_combine(op, current, rhs)?;
                ops::set_index(&c, &idx, new)?;
                Ok(())
            }
            Target::Attribute { .. } | Target::Tuple(..) => {
                let v = Value::None;
                self.assign(target, v)
            }
        }
    }

    fn charge(&mut self, n: usize) -> R<()> {
        self.steps = self.steps.saturating_add(n);
        if self.steps > self.budget {
            return Err(budget_fault(self.budget).into());
        }
        Ok(())
    }

    /// The receiver of an attribute access. An unbound name here behaves
    /// like a REPL object lacking the attribute.
    fn eval_attr_base(&mut self, value: &Expr, attr: &str) -> R<Value> {
        if let ExprKind::Name(n) = &value.kind {
            self.tick()?;
            return match resolve_name(n, &self.scope, Position::Call) {
                Resolution::Value(v) => Ok(v),
                Resolution::Spawn(_) | Resolution::Error(_) => Err(repl_attr(attr).into()),
            };
        }
        self.eval(value)
    }

    fn eval_args(&mut self, args: &[Expr], kwargs: &[(String, Expr)]) -> R<CallArgs> {
        let mut a = Vec::with_capacity(args.len());
        for e in args {
            a.push(self.eval(e)?);
        }
        let mut k = Vec::with_capacity(kwargs.len());
        for (name, e) in kwargs {
            if k.iter().any(|(n, _): &(String, Value)| n == name) {
                return Err(fault("SyntaxError", format!("keyword argument repeated: {name}")).into());
            }
            k.push((name.clone(), self.eval(e)?));
        }
        Ok((a, k))
    }

    fn eval_call(&mut self, func: &Expr, args: &[Expr], kwargs: &[(String, Expr)]) -> R<Value> {
        match &func.kind {
            ExprKind::Name(n) => {
                self.tick()?;
                match resolve_name(n, &self.scope, Position::Call) {
                    Resolution::Value(callee) => {
                        let (a, k) = self.eval_args(args, kwargs)?;
                        self.call_value(callee, a, k)
                    }
                    Resolution::Spawn(name) => {
                        let (a, k) = self.eval_args(args, kwargs)?;
                        if !k.is_empty() {
                            return Err(fault(
                                "TypeError",
                                format!("{name}() takes positional arguments only"),
                            )
                            .into());
                        }
                        self.context_call(&name, EffectKind::SpawnCall { args: a, unbound: true })
                    }
                    Resolution::Error(e) => Err(e.into()),
                }
            }
            ExprKind::Attribute { value, attr } => {
                let recv = self.eval_attr_base(value, attr)?;
                if matches!(recv, Value::ReplFn(_)) {
                    return Err(repl_attr(attr).into());
                }
                let (a, k) = self.eval_args(args, kwargs)?;
                let steps = &mut self.steps;
                let budget = self.budget;
                let mut charge = |n: usize| {
                    *steps = steps.saturating_add(n);
                    if *steps > budget {
                        Err(budget_fault(budget))
                    } else {
                        Ok(())
                    }
                };
                Ok(builtins::call_method(&recv, attr, a, k, &mut charge)?)
            }
            _ => {
                let callee = self.eval(func)?;
                let (a, k) = self.eval_args(args, kwargs)?;
                self.call_value(callee, a, k)
            }
        }
    }

    fn call_value(&mut self, callee: Value, args: Vec<Value>, kwargs: Vec<(String, Value)>) -> R<Value> {
        match callee {
            Value::BuiltinFn(name) if is_primitive(name) => self.primitive(name, args, kwargs),
            Value::BuiltinFn("print") => self.print(args, kwargs),
            Value::BuiltinFn(name) => {
                let steps = &mut self.steps;
                let budget = self.budget;
                let mut charge = |n: usize| {
                    *steps = steps.saturating_add(n);
                    if *steps > budget {
                        Err(budget_fault(budget))
                    } else {
                        Ok(())
                    }
                };
                Ok(builtins::call_builtin(name, args, kwargs, &mut charge)?)
            }
            Value::ReplFn(name) => {
                if !kwargs.is_empty() {
                    return Err(fault(
                        "TypeError",
                        format!("{name}() takes positional arguments only"),
                    )
                    .into());
                }
                self.context_call(&name, EffectKind::SpawnCall { args, unbound: false })
            }
            other => Err(fault(
                "TypeError",
                format!("'{}' object is not callable", other.type_name()),
            )
            .into()),
        }
    }

    fn primitive(&mut self, name: &'static str, args: Vec<Value>, kwargs: Vec<(String, Value)>) -> R<Value> {
        if !kwargs.is_empty() {
            return Err(fault("TypeError", format!("{name}() takes no keyword arguments")).into());
        }
        let expect = |lo: usize, hi: usize| -> R<()> {
            let n = args.len();
            if n < lo || n > hi {
                let msg = match (lo, hi) {
                    (0, 0) => format!("{name}() takes no arguments ({n} given)"),
                    (1, 1) => format!("{name}() takes exactly one argument ({n} given)"),
                    _ => format!("{name}() takes at most {hi} argument ({n} given)"),
                };
                return Err(fault("TypeError", msg).into());
            }
            Ok(())
        };
        let kind = match name {
            "act" => {
                expect(1, 1)?;
                EffectKind::Act(args[0].to_str())
            }
            "answer" => {
                expect(0, 1)?;
                EffectKind::Answer(args.into_iter().next().unwrap_or(Value::None))
            }
            "get_args" => {
                expect(0, 0)?;
                EffectKind::GetArgs
            }
            "get_obs" => {
                expect(0, 0)?;
                EffectKind::GetObs
            }
            "print_page" => {
                expect(0, 0)?;
                EffectKind::PrintPage
            }
            _ => unreachable!("not a primitive: {name}"),
        };
        self.context_call(name, kind)
    }

    fn eval(&mut self, e: &Expr) -> R<Value> {
        self.tick()?;
        match &e.kind {
            ExprKind::Name(n) => match resolve_name(n, &self.scope, Position::NonCall) {
                Resolution::Value(v) => Ok(v),
                Resolution::Error(f) => Err(f.into()),
                Resolution::Spawn(_) => unreachable!("non-call position"),
            },
            ExprKind::Literal(lit) => Ok(match lit {
                Literal::None => Value::None,
                Literal::Bool(b) => Value::Bool(*b),
                Literal::Int(i) => Value::Int(*i),
                Literal::Float(f) => Value::Float(*f),
                Literal::Text(s) => Value::text(s),
            }),
            ExprKind::FString(parts) => {
                let mut out = String::new();
                for part in parts {
                    match part {
                        FPart::Text(t) => out.push_str(t),
                        FPart::Expr { expr, spec } => {
                            let v = self.eval(expr)?;
                            out.push_str(&ops::format_spec(&v, spec.as_deref().unwrap_or(""))?);
                        }
                    }
                }
                Ok(Value::text(out))
            }
            ExprKind::List(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.push(self.eval(item)?);
                }
                Ok(Value::list(out))
            }
            ExprKind::Tuple(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.push(self.eval(item)?);
                }
                Ok(Value::tuple(out))
            }
            ExprKind::Map(pairs) => {
                let mut m = Mapping::new();
                for (k, v) in pairs {
                    let key = self.eval(k)?;
                    let value = self.eval(v)?;
                    let hk: HashKey = ops::hash_key(&key)?;
                    m.insert(hk, key, value);
                }
                Ok(Value::map(m))
            }
            ExprKind::ListComp { elt, target, iter, cond } => self.list_comp(elt, target, iter, cond.as_deref()),
            ExprKind::BinOp { op, left, right } => {
                let l = self.eval(left)?;
                let r = self.eval(right)?;
                Ok(ops::binop(*op, &l, &r)?)
            }
            ExprKind::BoolOp { op, values } => {
                let mut last = Value::None;
                for (i, v) in values.iter().enumerate() {
                    last = self.eval(v)?;
                    let t = last.truthy();
                    let stop = match op {
                        BoolOp::And => !t,
                        BoolOp::Or => t,
                    };
                    if stop || i == values.len() - 1 {
                        break;
                    }
                }
                Ok(last)
            }
            ExprKind::UnaryOp { op, operand } => {
                let v = self.eval(operand)?;
                Ok(match op {
                    UnaryOp::Not => Value::Bool(!v.truthy()),
                    UnaryOp::Neg => ops::negate(&v)?,
                    UnaryOp::Pos => ops::positive(&v)?,
                })
            }
            ExprKind::Compare { left, rest } => {
                let mut l = self.eval(left)?;
                for (op, right) in rest {
                    let r = self.eval(right)?;
                    if !ops::compare(*op, &l, &r)? {
                        return Ok(Value::Bool(false));
                    }
                    l = r;
                }
                Ok(Value::Bool(true))
            }
            ExprKind::Call { func, args, kwargs } => self.eval_call(func, args, kwargs),
            ExprKind::Attribute { value, attr } => {
                let base = self.eval_attr_base(value, attr)?;
                Err(match base {
                    Value::ReplFn(_) => repl_attr(attr),
                    ref v if builtins::has_method(v, attr) => fault(
                        "TypeError",
                        format!("method '{attr}' of '{}' objects must be called", v.type_name()),
                    ),
                    v => fault(
                        "AttributeError",
                        format!("'{}' object has no attribute '{attr}'", v.type_name()),
                    ),
                }
                .into())
            }
            ExprKind::Subscript { value, index } => {
                let c = self.eval(value)?;
                let i = self.eval(index)?;
                Ok(ops::index(&c, &i)?)
            }
            ExprKind::Slice { value, lower, upper } => {
                let c = self.eval(value)?;
                let lo = match lower {
                    Some(e) => Some(self.eval(e)?),
                    None => None,
                };
                let hi = match upper {
                    Some(e) => Some(self.eval(e)?),
                    None => None,
                };
                Ok(ops::slice(&c, lo.as_ref(), hi.as_ref())?)
            }
        }
    }

    /// Comprehension variables do not leak into the enclosing scope.
    fn list_comp(&mut self, elt: &Expr, target: &Target, iter: &Expr, cond: Option<&Expr>) -> R<Value> {
        let iterable = self.eval(iter)?;
        let items = ops::iterate(&iterable)?;
        let mut names = Vec::new();
        collect_names(target, &mut names);
        let saved: Vec<(String, Option<Value>)> = names
            .iter()
            .map(|n| (n.clone(), self.scope.get(n).cloned()))
            .collect();
        let result = (|| {
            let mut out = Vec::new();
            for item in items {
                self.tick()?;
                self.assign(target, item)?;
                if let Some(c) = cond {
                    if !self.eval(c)?.truthy() {
                        continue;
                    }
                }
                out.push(self.eval(elt)?);
            }
            Ok(Value::list(out))
        })();
        for (name, old) in saved {
            match old {
                Some(v) => self.scope.set(name, v),
                None => {
                    self.scope.remove(&name);
                }
            }
        }
        result
    }
}

fn collect_names(t: &Target, out: &mut Vec<String>) {
    match t {
        Target::Name(n, _) => out.push(n.clone()),
        Target::Tuple(items, _) => items.iter().for_each(|i| collect_names(i, out)),
        _ => {}
    }
}
