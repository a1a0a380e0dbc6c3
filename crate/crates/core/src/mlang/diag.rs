use std::fmt;

use super::ast::Span;
use crate::pyfmt::repr_str;

/// A parse failure, rendered as the tuple-style `SyntaxError(...)` text the
/// LLM sees in its history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxDiagnostic {
    /// Full rendered text, e.g.
    /// `SyntaxError('invalid syntax', ('<unknown>', 1, 36, '...\n', 1, 39))`.
    pub message: String,
    /// Short reason, e.g. `invalid syntax`.
    pub reason: String,
    pub span: Span,
    /// 1-based line number, including the block's line offset.
    pub line: usize,
    /// 1-based column of the offending token.
    pub col: usize,
}

impl SyntaxDiagnostic {
    pub(crate) fn new(
        text: &str,
        line_offset: usize,
        reason: impl Into<String>,
        span: Span,
    ) -> Self {
        let reason = reason.into();
        let start = span.start.min(text.len());
        let line_start = text[..start].rfind('\n').map(|i| i + 1).unwrap_or(0);
        let line_end = text[start..]
            .find('\n')
            .map(|i| start + i)
            .unwrap_or(text.len());
        let line_no = text[..start].matches('\n').count() + 1 + line_offset;
        let col = text[line_start..start].chars().count() + 1;
        let end = span.end.clamp(start, line_end);
        let end_col = if span.end > span.start {
            text[line_start..end].chars().count() + 1
        } else {
            col
        };
        let line_text = format!("{}\n", &text[line_start..line_end]);
        let message = format!(
            "SyntaxError({}, ('<unknown>', {}, {}, {}, {}, {}))",
            repr_str(&reason),
            line_no,
            col,
            repr_str(&line_text),
            line_no,
            end_col
        );
        Self {
            message,
            reason,
            span,
            line: line_no,
            col,
        }
    }
}

impl fmt::Display for SyntaxDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for SyntaxDiagnostic {}
