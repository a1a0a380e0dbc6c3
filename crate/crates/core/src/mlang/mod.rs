//! MiniLang: the indentation-sensitive scripting surface the LLM writes in.
//!
//! One block is one statement. Compound statements (`for`, `while`, `if`)
//! carry their indented bodies in the same block.

pub mod ast;
mod block;
mod diag;
pub(crate) mod lexer;
mod parser;

pub use block::{echo, echo_block, echo_partial, is_block_complete, parse_block, tokenize, Origin, SourceBlock};
pub(crate) use block::first_block_len;
pub use diag::SyntaxDiagnostic;
pub use lexer::{Op, StrLit, Tok, Token};
