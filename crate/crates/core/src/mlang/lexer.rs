//! Tokenizer with Python-style indentation tracking.

use super::ast::Span;
use super::diag::SyntaxDiagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    Str(StrLit),
    Comment(String),
    Op(Op),
    Newline,
    Indent,
    Dedent,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    DoubleSlashAssign,
    PercentAssign,
    Plus,
    Minus,
    Star,
    DoubleStar,
    Slash,
    DoubleSlash,
    Percent,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Dot,
    Semicolon,
}

/// A string literal. For f-strings `value` holds the raw body between the
/// quotes; the parser splits it into text and expression parts.
#[derive(Debug, Clone, PartialEq)]
pub struct StrLit {
    pub value: String,
    pub fstring: bool,
    pub raw: bool,
    /// Byte offset of the body (after the opening quotes) in the block text.
    pub body_offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Why lexing stopped short.
#[derive(Debug, Clone)]
pub enum LexError {
    /// Input is malformed.
    Invalid(SyntaxDiagnostic),
    /// Input ended inside a construct that more lines could complete.
    Incomplete(SyntaxDiagnostic),
}

impl LexError {
    pub(crate) fn into_diag(self) -> SyntaxDiagnostic {
        match self {
            LexError::Invalid(d) | LexError::Incomplete(d) => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// A block of statements with indentation.
    Block,
    /// An embedded expression (f-string field): no indentation, no newlines.
    Expression,
}

pub(crate) struct Lexer<'a> {
    text: &'a str,
    pos: usize,
    end: usize,
    line_offset: usize,
    mode: Mode,
    tokens: Vec<Token>,
    brackets: Vec<(char, usize)>,
    indents: Vec<usize>,
    at_line_start: bool,
}

impl<'a> Lexer<'a> {
    pub(crate) fn new(text: &'a str, from: usize, to: usize, line_offset: usize, mode: Mode) -> Self {
        Self {
            text,
            pos: from,
            end: to,
            line_offset,
            mode,
            tokens: Vec::new(),
            brackets: Vec::new(),
            indents: Vec::new(),
            at_line_start: mode == Mode::Block,
        }
    }

    fn diag(&self, reason: impl Into<String>, start: usize, end: usize) -> SyntaxDiagnostic {
        SyntaxDiagnostic::new(self.text, self.line_offset, reason, Span::new(start, end))
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..self.end].chars().next()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.text[self.pos..self.end].chars().nth(offset)
    }

    fn push(&mut self, tok: Tok, start: usize, end: usize) {
        self.tokens.push(Token {
            tok,
            span: Span::new(start, end),
        });
    }

    fn line_no_at(&self, pos: usize) -> usize {
        self.text[..pos].matches('\n').count() + 1 + self.line_offset
    }

    pub(crate) fn run(mut self) -> Result<Vec<Token>, LexError> {
        while self.pos < self.end {
            if self.at_line_start && self.brackets.is_empty() && self.line_start()? {
                continue;
            }
            let c = self.peek().expect("pos < end");
            let start = self.pos;
            match c {
                ' ' | '\t' | '\x0c' | '\r' => self.pos += 1,
                '\\' => {
                    let next = self.peek_at(1);
                    match next {
                        Some('\n') => self.pos += 2,
                        Some('\r') if self.peek_at(2) == Some('\n') => self.pos += 3,
                        None => {
                            return Err(LexError::Incomplete(
                                self.diag("unexpected EOF while parsing", start, start + 1),
                            ))
                        }
                        _ => {
                            return Err(LexError::Invalid(self.diag(
                                "unexpected character after line continuation character",
                                start,
                                start + 1,
                            )))
                        }
                    }
                }
                '\n' => {
                    self.pos += 1;
                    if self.mode == Mode::Block && self.brackets.is_empty() {
                        self.newline(start);
                        self.at_line_start = true;
                    }
                }
                '#' => {
                    if self.mode == Mode::Expression {
                        return Err(LexError::Invalid(self.diag(
                            "f-string expression part cannot include '#'",
                            start,
                            start + 1,
                        )));
                    }
                    let text = self.take_comment();
                    if self.brackets.is_empty() {
                        self.push(Tok::Comment(text), start, self.pos);
                    }
                }
                '0'..='9' => self.number()?,
                '.' if matches!(self.peek_at(1), Some('0'..='9')) => self.number()?,
                '"' | '\'' => self.string(start, false, false)?,
                c if c.is_alphabetic() || c == '_' => self.name_or_prefixed_string()?,
                _ => self.operator()?,
            }
        }

        if let Some(&(open, at)) = self.brackets.last() {
            return Err(LexError::Incomplete(
                self.diag(format!("'{open}' was never closed"), at, at + 1),
            ));
        }
        let end = self.end;
        if self.mode == Mode::Block {
            self.newline(end);
            for _ in 1..self.indents.len() {
                self.push(Tok::Dedent, end, end);
            }
        }
        self.push(Tok::End, end, end);
        Ok(self.tokens)
    }

    /// Emits a Newline unless the logical line was empty.
    fn newline(&mut self, at: usize) {
        match self.tokens.last().map(|t| &t.tok) {
            None | Some(Tok::Newline) | Some(Tok::Indent) | Some(Tok::Dedent) => {}
            _ => self.push(Tok::Newline, at, at),
        }
    }

    /// Handles leading whitespace. Returns true when the whole line was consumed.
    fn line_start(&mut self) -> Result<bool, LexError> {
        let line_begin = self.pos;
        let mut width = 0usize;
        while let Some(c) = self.peek() {
            match c {
                ' ' => width += 1,
                '\t' => width = (width / 8 + 1) * 8,
                '\x0c' => width = 0,
                _ => break,
            }
            self.pos += 1;
        }
        match self.peek() {
            None => return Ok(true),
            Some('\n') => {
                self.pos += 1;
                return Ok(true);
            }
            Some('\r') if self.peek_at(1) == Some('\n') => {
                self.pos += 2;
                return Ok(true);
            }
            Some('#') => {
                // Comment-only lines do not take part in indentation.
                let start = self.pos;
                let text = self.take_comment();
                self.push(Tok::Comment(text), start, self.pos);
                self.push(Tok::Newline, self.pos, self.pos);
                if self.peek() == Some('\n') {
                    self.pos += 1;
                }
                return Ok(true);
            }
            _ => {}
        }
        self.at_line_start = false;
        match self.indents.last().copied() {
            None => self.indents.push(width),
            Some(top) if width > top => {
                self.indents.push(width);
                self.push(Tok::Indent, line_begin, self.pos);
            }
            Some(top) if width < top => {
                while let Some(&top) = self.indents.last() {
                    if width >= top {
                        break;
                    }
                    if self.indents.len() == 1 {
                        return Err(LexError::Invalid(self.diag(
                            "unindent does not match any outer indentation level",
                            self.pos,
                            self.pos,
                        )));
                    }
                    self.indents.pop();
                    self.push(Tok::Dedent, self.pos, self.pos);
                }
                if self.indents.last() != Some(&width) {
                    return Err(LexError::Invalid(self.diag(
                        "unindent does not match any outer indentation level",
                        self.pos,
                        self.pos,
                    )));
                }
            }
            Some(_) => {}
        }
        Ok(false)
    }

    fn take_comment(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.pos += c.len_utf8();
        }
        self.text[start..self.pos].trim_end_matches('\r').to_string()
    }

    fn number(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let mut is_float = false;
        let digits = |lx: &mut Self| {
            while let Some(c) = lx.peek() {
                if c.is_ascii_digit() || c == '_' {
                    lx.pos += 1;
                } else {
                    break;
                }
            }
        };
        digits(self);
        if self.peek() == Some('.') {
            is_float = true;
            self.pos += 1;
            digits(self);
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some('0'..='9')) {
                is_float = true;
                digits(self);
            } else {
                self.pos = save;
            }
        }
        if matches!(self.peek(), Some(c) if c.is_alphabetic() || c == '_') {
            return Err(LexError::Invalid(
                self.diag("invalid decimal literal", start, self.pos + 1),
            ));
        }
        let lexeme: String = self.text[start..self.pos].chars().filter(|&c| c != '_').collect();
        let tok = if is_float {
            Tok::Float(lexeme.parse().map_err(|_| {
                LexError::Invalid(self.diag("invalid decimal literal", start, self.pos))
            })?)
        } else {
            Tok::Int(lexeme.parse().map_err(|_| {
                LexError::Invalid(self.diag("integer literal too large", start, self.pos))
            })?)
        };
        self.push(tok, start, self.pos);
        Ok(())
    }

    fn name_or_prefixed_string(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let word = &self.text[start..self.pos];
        if matches!(self.peek(), Some('"' | '\'')) {
            let lower = word.to_ascii_lowercase();
            let (fstring, raw) = match lower.as_str() {
                "f" => (true, false),
                "r" => (false, true),
                "fr" | "rf" => (true, true),
                "u" => (false, false),
                _ => (false, false),
            };
            if matches!(lower.as_str(), "f" | "r" | "fr" | "rf" | "u") {
                return self.string(start, fstring, raw);
            }
        }
        self.push(Tok::Name(word.to_string()), start, self.pos);
        Ok(())
    }

    fn string(&mut self, start: usize, fstring: bool, raw: bool) -> Result<(), LexError> {
        let quote = self.peek().expect("quote");
        let triple = self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote);
        self.pos += if triple { 3 } else { 1 };
        let body_start = self.pos;
        loop {
            let Some(c) = self.peek() else {
                let line = self.line_no_at(self.end);
                return Err(if triple {
                    LexError::Incomplete(self.diag(
                        format!("unterminated triple-quoted string literal (detected at line {line})"),
                        start,
                        start,
                    ))
                } else {
                    LexError::Invalid(self.diag(
                        format!("unterminated string literal (detected at line {line})"),
                        start,
                        start,
                    ))
                });
            };
            if c == '\\' {
                self.pos += 1;
                if let Some(n) = self.peek() {
                    self.pos += n.len_utf8();
                }
                continue;
            }
            if c == '\n' && !triple {
                let line = self.line_no_at(self.pos);
                return Err(LexError::Invalid(self.diag(
                    format!("unterminated string literal (detected at line {line})"),
                    start,
                    start,
                )));
            }
            if c == quote {
                if !triple {
                    break;
                }
                if self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
                    break;
                }
            }
            self.pos += c.len_utf8();
        }
        let body = &self.text[body_start..self.pos];
        self.pos += if triple { 3 } else { 1 };
        let value = if fstring || raw {
            body.to_string()
        } else {
            unescape(body)
        };
        self.push(
            Tok::Str(StrLit {
                value,
                fstring,
                raw,
                body_offset: body_start,
            }),
            start,
            self.pos,
        );
        Ok(())
    }

    fn operator(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let rest = &self.text[self.pos..self.end];
        const OPS: &[(&str, Op)] = &[
            ("//=", Op::DoubleSlashAssign),
            ("**", Op::DoubleStar),
            ("//", Op::DoubleSlash),
            ("==", Op::Eq),
            ("!=", Op::Ne),
            ("<=", Op::Le),
            (">=", Op::Ge),
            ("+=", Op::PlusAssign),
            ("-=", Op::MinusAssign),
            ("*=", Op::StarAssign),
            ("/=", Op::SlashAssign),
            ("%=", Op::PercentAssign),
            ("+", Op::Plus),
            ("-", Op::Minus),
            ("*", Op::Star),
            ("/", Op::Slash),
            ("%", Op::Percent),
            ("<", Op::Lt),
            (">", Op::Gt),
            ("=", Op::Assign),
            ("(", Op::LParen),
            (")", Op::RParen),
            ("[", Op::LBracket),
            ("]", Op::RBracket),
            ("{", Op::LBrace),
            ("}", Op::RBrace),
            (",", Op::Comma),
            (":", Op::Colon),
            (".", Op::Dot),
            (";", Op::Semicolon),
        ];
        let Some(&(lexeme, op)) = OPS.iter().find(|(s, _)| rest.starts_with(s)) else {
            let c = self.peek().expect("pos < end");
            let reason = if c.is_ascii() {
                "invalid syntax".to_string()
            } else {
                format!("invalid character '{c}' (U+{:04X})", c as u32)
            };
            return Err(LexError::Invalid(self.diag(reason, start, start + c.len_utf8())));
        };
        self.pos += lexeme.len();
        match op {
            Op::LParen | Op::LBracket | Op::LBrace => {
                self.brackets.push((lexeme.chars().next().unwrap(), start));
            }
            Op::RParen | Op::RBracket | Op::RBrace => {
                let close = lexeme.chars().next().unwrap();
                let expected = match close {
                    ')' => '(',
                    ']' => '[',
                    _ => '{',
                };
                match self.brackets.pop() {
                    Some((open, _)) if open == expected => {}
                    Some((open, _)) => {
                        return Err(LexError::Invalid(self.diag(
                            format!(
                                "closing parenthesis '{close}' does not match opening parenthesis '{open}'"
                            ),
                            start,
                            self.pos,
                        )))
                    }
                    None => {
                        return Err(LexError::Invalid(
                            self.diag(format!("unmatched '{close}'"), start, self.pos),
                        ))
                    }
                }
            }
            _ => {}
        }
        self.push(Tok::Op(op), start, self.pos);
        Ok(())
    }
}

/// Processes backslash escapes the way CPython does for non-raw literals.
pub(crate) fn unescape(body: &str) -> String {
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            None => out.push('\\'),
            Some('\n') => {}
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('0') => out.push('\0'),
            Some('\\') => out.push('\\'),
            Some('\'') => out.push('\''),
            Some('"') => out.push('"'),
            Some('a') => out.push('\x07'),
            Some('b') => out.push('\x08'),
            Some('f') => out.push('\x0c'),
            Some('v') => out.push('\x0b'),
            Some(k @ ('x' | 'u')) => {
                let width = if k == 'x' { 2 } else { 4 };
                let hex: String = (0..width).filter_map(|_| chars.next_if(|c| c.is_ascii_hexdigit())).collect();
                match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                    Some(ch) if hex.len() == width => out.push(ch),
                    _ => {
                        out.push('\\');
                        out.push(k);
                        out.push_str(&hex);
                    }
                }
            }
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
        }
    }
    out
}
