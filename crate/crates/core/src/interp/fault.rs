use std::fmt;

use crate::pyfmt::repr_str;

/// A runtime error as the LLM sees it, e.g.
/// `AttributeError("'LLMREPL' object has no attribute 'items'")`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeFault {
    pub kind: String,
    /// Already rendered argument (usually a quoted message).
    pub arg: String,
}

impl RuntimeFault {
    pub fn new(kind: impl Into<String>, message: impl AsRef<str>) -> Self {
        Self {
            kind: kind.into(),
            arg: repr_str(message.as_ref()),
        }
    }

    pub fn with_arg(kind: impl Into<String>, arg: String) -> Self {
        Self {
            kind: kind.into(),
            arg,
        }
    }

    pub fn name_error(name: &str) -> Self {
        Self::new("REPLNameError", format!("name '{name}' not defined."))
    }
}

pub(crate) fn fault(kind: &str, message: impl AsRef<str>) -> RuntimeFault {
    RuntimeFault::new(kind, message)
}

impl fmt::Display for RuntimeFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind, self.arg)
    }
}

impl std::error::Error for RuntimeFault {}
