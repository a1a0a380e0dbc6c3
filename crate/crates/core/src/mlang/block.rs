use serde::{Deserialize, Serialize};

use super::ast::Stmt;
use super::diag::SyntaxDiagnostic;
use super::lexer::{LexError, Lexer, Mode, Tok, Token};
use super::parser::Parser;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Llm,
    Demo,
    Test,
}

/// Raw text of one REPL input: a simple statement, or one compound statement
/// with its continuation lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceBlock {
    pub text: String,
    pub origin: Origin,
    /// Added to reported line numbers.
    pub line_offset: usize,
}

impl SourceBlock {
    pub fn new(text: impl Into<String>, origin: Origin) -> Self {
        let mut text: String = text.into();
        // Trailing blank lines only terminate the block; they are not part of it.
        while text.ends_with('\n') || text.ends_with("\r") {
            text.pop();
        }
        let trimmed_len = text
            .rsplit_once('\n')
            .filter(|(_, last)| last.trim().is_empty())
            .map(|(head, _)| head.len());
        if let Some(n) = trimmed_len {
            text.truncate(n);
            return Self::new(text, origin);
        }
        Self {
            text,
            origin,
            line_offset: 0,
        }
    }

    pub fn test(text: impl Into<String>) -> Self {
        Self::new(text, Origin::Test)
    }
}

pub fn tokenize(block: &SourceBlock) -> Result<Vec<Token>, SyntaxDiagnostic> {
    let text = block.text.as_str();
    Lexer::new(text, 0, text.len(), block.line_offset, Mode::Block)
        .run()
        .map_err(LexError::into_diag)
}

/// Parses the block into exactly one top-level statement.
pub fn parse_block(block: &SourceBlock) -> Result<Stmt, SyntaxDiagnostic> {
    let tokens = tokenize(block)?;
    Parser::new(&block.text, block.line_offset, tokens).parse_single()
}

fn indent_width(line: &str) -> usize {
    let mut width = 0;
    for c in line.chars() {
        match c {
            ' ' => width += 1,
            '\t' => width = (width / 8 + 1) * 8,
            _ => break,
        }
    }
    width
}

fn is_comment_or_blank(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// True when the header line opens an indented body (`for x in y:` with
/// nothing after the colon but an optional comment).
fn opens_body(header: &str) -> bool {
    let Ok(tokens) = Lexer::new(header, 0, header.len(), 0, Mode::Block).run() else {
        return false;
    };
    let first = tokens.first().map(|t| &t.tok);
    if !matches!(first, Some(Tok::Name(n)) if matches!(n.as_str(), "for" | "while" | "if")) {
        return false;
    }
    let last = tokens
        .iter()
        .rev()
        .map(|t| &t.tok)
        .find(|t| !matches!(t, Tok::Newline | Tok::End | Tok::Comment(_) | Tok::Dedent));
    matches!(last, Some(Tok::Op(super::lexer::Op::Colon)))
}

/// Whether `partial` can be finalized as a block: a simple statement, or a
/// compound statement whose body has been closed by a blank or dedented line.
pub fn is_block_complete(partial: &str) -> bool {
    match Lexer::new(partial, 0, partial.len(), 0, Mode::Block).run() {
        Err(LexError::Incomplete(_)) => return false,
        // Malformed text is final: parsing it yields a diagnostic.
        Err(LexError::Invalid(_)) => return true,
        Ok(_) => {}
    }
    block_end(partial).is_some()
}

/// Byte length of the first complete block in `text`, if one is closed.
/// A compound block is closed by a blank line or a dedented line.
pub(crate) fn block_end(text: &str) -> Option<usize> {
    first_block_len(text, false)
}

/// Like [`block_end`], but when `eof_closes` is set the end of `text` also
/// closes a compound block that already has a body line. Lines inside open
/// brackets or triple-quoted strings belong to the statement they continue.
pub(crate) fn first_block_len(text: &str, eof_closes: bool) -> Option<usize> {
    let mut offset = 0;
    let mut lines = text.split_inclusive('\n').peekable();
    // Skip leading blank lines.
    while let Some(line) = lines.peek() {
        if line.trim().is_empty() {
            offset += line.len();
            lines.next();
        } else {
            break;
        }
    }
    let mut header_end = offset + lines.next()?.len();
    loop {
        let header = &text[offset..header_end];
        match Lexer::new(header, 0, header.len(), 0, Mode::Block).run() {
            Err(LexError::Incomplete(_)) => header_end += lines.next()?.len(),
            _ => break,
        }
    }
    let header = &text[offset..header_end];
    if is_comment_or_blank(header) || !opens_body(header) {
        return Some(header_end);
    }
    let base = indent_width(header);
    let mut end = header_end;
    let mut has_body = false;
    for line in lines {
        if line.trim().is_empty() {
            if line.ends_with('\n') && has_body {
                return Some(end);
            }
            end += line.len();
            continue;
        }
        let width = indent_width(line);
        if width <= base && !line.trim_start().starts_with('#') {
            let word = line.trim_start();
            let continues = word.starts_with("elif ")
                || word.starts_with("elif(")
                || word.starts_with("else:")
                || word.starts_with("else :");
            if !continues {
                return has_body.then_some(end);
            }
            has_body = false;
        } else if width > base {
            has_body = true;
        }
        end += line.len();
    }
    (eof_closes && has_body).then_some(end)
}

/// Echo form shown in histories: `>>> ` on the first line, `... ` on each
/// continuation line, and a lone `...` closing a multi-line compound block.
pub fn echo(text: &str, compound: bool) -> String {
    let mut out = String::new();
    let mut count = 0;
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(if i == 0 { ">>> " } else { "... " });
        out.push_str(line.trim_end_matches('\r'));
        count += 1;
    }
    if compound && count > 1 {
        out.push_str("\n...");
    }
    out
}

/// Echo form of a block, treating it as compound when its first line opens
/// an indented body.
pub fn echo_block(text: &str) -> String {
    let first = text.split('\n').next().unwrap_or("");
    echo(text, opens_body(first))
}

/// Echo lines for a partially received block, ending with a `... ` prompt.
pub fn echo_partial(text: &str) -> String {
    let mut out = echo(text, false);
    out.push_str("\n... ");
    out
}
