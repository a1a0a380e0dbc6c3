#![allow(dead_code)]

pub mod expr;
pub mod program;
