//! REPL-Plan runtime: a MiniLang interpreter, a recursive LLM-REPL kernel,
//! LLM gateways, text environments, and an episode harness.

pub mod envs;
pub mod gateway;
pub mod harness;
pub mod interp;
pub mod kernel;
pub mod mlang;
pub mod pyfmt;
