use crate::mlang::{first_block_len, Origin, SourceBlock};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractError {
    /// Nothing but whitespace or markers.
    Empty,
    /// A block was started but not finished; holds the normalized text.
    Incomplete(String),
}

impl ExtractError {
    /// History text for a completion that held no statement.
    pub fn diagnostic(&self) -> String {
        match self {
            ExtractError::Empty => "SyntaxError('no statement found in completion')".to_string(),
            ExtractError::Incomplete(_) => {
                "SyntaxError('incomplete block: expected an indented body')".to_string()
            }
        }
    }
}

/// Removes `>>> ` / `... ` prompts the model may have echoed.
pub fn strip_markers(completion: &str) -> String {
    let lines: Vec<&str> = completion
        .split('\n')
        .map(|line| {
            let l = line.trim_end_matches('\r');
            if l == ">>>" || l == "..." {
                ""
            } else if let Some(rest) = l.strip_prefix(">>> ").or_else(|| l.strip_prefix("... ")) {
                rest
            } else {
                l
            }
        })
        .collect();
    lines.join("\n")
}

/// Takes the first complete statement of a completion. The end of the
/// completion closes a compound block that already has a body.
pub fn extract_block(completion: &str) -> Result<SourceBlock, ExtractError> {
    let text = strip_markers(completion);
    if text.trim().is_empty() {
        return Err(ExtractError::Empty);
    }
    match first_block_len(&text, true) {
        Some(end) => {
            let start = text.len() - text.trim_start_matches(['\n', ' ', '\t']).len();
            // Keep the indentation of the first line; drop leading blank lines.
            let start = text[..start].rfind('\n').map(|i| i + 1).unwrap_or(0);
            Ok(SourceBlock::new(&text[start..end], Origin::Llm))
        }
        None => Err(ExtractError::Incomplete(text.trim_end().to_string())),
    }
}
