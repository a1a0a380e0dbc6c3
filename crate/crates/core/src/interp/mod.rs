//! Evaluation of MiniLang blocks against a scope and a call ledger.

mod builtins;
mod eval;
mod fault;
mod ledger;
mod ops;
mod scope;
mod value;

pub use builtins::{is_primitive, lookup as lookup_builtin, BUILTINS, PRIMITIVES};
pub use eval::{
    evaluate_block, evaluate_block_with_budget, resolve_name, Effect, EffectKind, ExecOutcome,
    Output, OutputKind, Position, Resolution, STEP_BUDGET,
};
pub use fault::RuntimeFault;
pub use ledger::{CachedCall, CallLedger};
pub use scope::Scope;
pub use value::{render_value, HashKey, Mapping, RenderContext, Value};
