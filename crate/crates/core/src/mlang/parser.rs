//! Recursive-descent parser producing one statement per block.

use super::ast::*;
use super::diag::SyntaxDiagnostic;
use super::lexer::{unescape, Lexer, Mode, Op, StrLit, Tok, Token};

const RESERVED: &[&str] = &[
    "for", "in", "while", "if", "elif", "else", "break", "continue", "pass", "and", "or", "not",
    "is", "True", "False", "None", "def", "class", "import", "from", "return", "lambda", "try",
    "except", "finally", "with", "as", "yield", "global", "nonlocal", "del", "assert", "raise",
    "async", "await",
];

pub(crate) fn is_reserved(name: &str) -> bool {
    RESERVED.contains(&name)
}

pub(crate) struct Parser<'a> {
    text: &'a str,
    line_offset: usize,
    tokens: Vec<Token>,
    pos: usize,
    loop_depth: usize,
}

type PResult<T> = Result<T, SyntaxDiagnostic>;

/// Positional and keyword arguments of a call.
type ArgList = (Vec<Expr>, Vec<(String, Expr)>);

impl<'a> Parser<'a> {
    pub(crate) fn new(text: &'a str, line_offset: usize, tokens: Vec<Token>) -> Self {
        Self {
            text,
            line_offset,
            tokens,
            pos: 0,
            loop_depth: 0,
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_nth(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, reason: &str) -> SyntaxDiagnostic {
        let span = match self.peek() {
            // Point at the end of the previous token for layout tokens.
            Tok::Newline | Tok::End | Tok::Dedent => {
                let p = self.prev_span().end;
                Span::new(p, p)
            }
            _ => self.span(),
        };
        SyntaxDiagnostic::new(self.text, self.line_offset, reason, span)
    }

    fn invalid(&self) -> SyntaxDiagnostic {
        match self.peek() {
            Tok::Indent => self.error_here("unexpected indent"),
            _ => self.error_here("invalid syntax"),
        }
    }

    fn at_op(&self, op: Op) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn eat_op(&mut self, op: Op) -> bool {
        if self.at_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: Op) -> PResult<Span> {
        if self.at_op(op) {
            Ok(self.advance().span)
        } else {
            Err(match op {
                Op::Colon if matches!(self.peek(), Tok::Newline | Tok::End) => {
                    self.error_here("expected ':'")
                }
                _ => self.invalid(),
            })
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.advance().span)
        } else {
            Err(self.invalid())
        }
    }

    /// Parses exactly one top-level statement followed by end of input.
    pub(crate) fn parse_single(&mut self) -> PResult<Stmt> {
        if matches!(self.peek(), Tok::End) {
            return Err(SyntaxDiagnostic::new(
                self.text,
                self.line_offset,
                "empty block",
                Span::new(0, 0),
            ));
        }
        let stmt = self.statement()?;
        if !matches!(self.peek(), Tok::End) {
            let at = stmt.span.end;
            let mut d = SyntaxDiagnostic::new(
                self.text,
                self.line_offset,
                "multiple statements found while compiling a single statement",
                Span::new(at, at),
            );
            // Report the position of the second statement when one exists.
            if !matches!(self.peek(), Tok::Dedent) {
                d = SyntaxDiagnostic::new(
                    self.text,
                    self.line_offset,
                    "multiple statements found while compiling a single statement",
                    Span::new(self.span().start, self.span().start),
                );
            }
            return Err(d);
        }
        Ok(stmt)
    }

    /// Parses a bare expression, as used inside f-string fields.
    pub(crate) fn parse_expression(&mut self) -> PResult<Expr> {
        let e = self.testlist()?;
        if !matches!(self.peek(), Tok::End) {
            return Err(self.invalid());
        }
        Ok(e)
    }

    fn statement(&mut self) -> PResult<Stmt> {
        match self.peek().clone() {
            Tok::Comment(text) => {
                let span = self.advance().span;
                self.expect_newline()?;
                Ok(Stmt {
                    kind: StmtKind::Comment(text),
                    span,
                    comment: None,
                })
            }
            Tok::Name(n) if n == "for" => self.for_stmt(),
            Tok::Name(n) if n == "while" => self.while_stmt(),
            Tok::Name(n) if n == "if" => self.if_stmt(),
            Tok::Indent => Err(self.error_here("unexpected indent")),
            _ => {
                let mut stmt = self.simple_stmt()?;
                stmt.comment = self.trailing_comment();
                if self.at_op(Op::Semicolon) {
                    return Err(self.error_here(
                        "multiple statements found while compiling a single statement",
                    ));
                }
                self.expect_newline()?;
                Ok(stmt)
            }
        }
    }

    fn trailing_comment(&mut self) -> Option<String> {
        if let Tok::Comment(c) = self.peek().clone() {
            self.advance();
            Some(c)
        } else {
            None
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::End => Ok(()),
            _ => Err(self.invalid()),
        }
    }

    fn simple_stmt(&mut self) -> PResult<Stmt> {
        let start = self.span();
        for (kw, kind) in [
            ("break", StmtKind::Break),
            ("continue", StmtKind::Continue),
            ("pass", StmtKind::Pass),
        ] {
            if self.at_kw(kw) {
                if kw != "pass" && self.loop_depth == 0 {
                    let reason = if kw == "break" {
                        "'break' outside loop"
                    } else {
                        "'continue' not properly in loop"
                    };
                    return Err(SyntaxDiagnostic::new(self.text, self.line_offset, reason, start));
                }
                self.advance();
                return Ok(Stmt {
                    kind,
                    span: start,
                    comment: None,
                });
            }
        }
        if let Tok::Name(n) = self.peek() {
            if is_reserved(n) && !matches!(n.as_str(), "not" | "True" | "False" | "None" | "lambda")
            {
                return Err(self.invalid());
            }
        }
        let lhs = self.testlist()?;
        let aug = match self.peek() {
            Tok::Op(Op::PlusAssign) => Some(BinOp::Add),
            Tok::Op(Op::MinusAssign) => Some(BinOp::Sub),
            Tok::Op(Op::StarAssign) => Some(BinOp::Mul),
            Tok::Op(Op::SlashAssign) => Some(BinOp::Div),
            Tok::Op(Op::DoubleSlashAssign) => Some(BinOp::FloorDiv),
            Tok::Op(Op::PercentAssign) => Some(BinOp::Mod),
            _ => None,
        };
        if let Some(op) = aug {
            let op_span = self.advance().span;
            let target = self.to_target(&lhs, op_span, false)?;
            let value = self.testlist()?;
            let span = start.to(value.span);
            return Ok(Stmt {
                kind: StmtKind::AugAssign { target, op, value },
                span,
                comment: None,
            });
        }
        if self.at_op(Op::Assign) {
            let op_span = self.advance().span;
            let target = self.to_target(&lhs, op_span, true)?;
            let value = self.testlist()?;
            if self.at_op(Op::Assign) {
                return Err(self.error_here("chained assignment is not supported"));
            }
            let span = start.to(value.span);
            return Ok(Stmt {
                kind: StmtKind::Assign { target, value },
                span,
                comment: None,
            });
        }
        let span = lhs.span;
        Ok(Stmt {
            kind: StmtKind::Expr(lhs),
            span,
            comment: None,
        })
    }

    fn to_target(&self, e: &Expr, op_span: Span, allow_tuple: bool) -> PResult<Target> {
        let fail = || {
            let reason = match &e.kind {
                ExprKind::Call { .. } => "cannot assign to function call here. Maybe you meant '==' instead of '='?",
                ExprKind::Literal(_) => "cannot assign to literal here. Maybe you meant '==' instead of '='?",
                _ => "cannot assign to expression here. Maybe you meant '==' instead of '='?",
            };
            let _ = op_span;
            SyntaxDiagnostic::new(self.text, self.line_offset, reason, e.span)
        };
        match &e.kind {
            ExprKind::Name(n) => {
                if is_reserved(n) {
                    return Err(fail());
                }
                Ok(Target::Name(n.clone(), e.span))
            }
            ExprKind::Tuple(items) | ExprKind::List(items) if allow_tuple => {
                let mut names = Vec::with_capacity(items.len());
                for item in items {
                    match &item.kind {
                        ExprKind::Name(n) if !is_reserved(n) => {
                            names.push(Target::Name(n.clone(), item.span))
                        }
                        _ => return Err(fail()),
                    }
                }
                Ok(Target::Tuple(names, e.span))
            }
            ExprKind::Subscript { value, index } => Ok(Target::Subscript {
                value: value.clone(),
                index: index.clone(),
                span: e.span,
            }),
            ExprKind::Attribute { value, attr } => Ok(Target::Attribute {
                value: value.clone(),
                attr: attr.clone(),
                span: e.span,
            }),
            _ => Err(fail()),
        }
    }

    /// Loop target: a name or a (possibly parenthesized) tuple of names.
    fn loop_target(&mut self) -> PResult<Target> {
        let start = self.span();
        let parens = self.eat_op(Op::LParen);
        let mut names = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Name(n) if !is_reserved(&n) => {
                    let sp = self.advance().span;
                    names.push(Target::Name(n, sp));
                }
                _ => return Err(self.invalid()),
            }
            if !self.eat_op(Op::Comma) {
                break;
            }
            if self.at_kw("in") || (parens && self.at_op(Op::RParen)) {
                break;
            }
        }
        if parens {
            self.expect_op(Op::RParen)?;
        }
        let span = start.to(self.prev_span());
        if names.len() == 1 && !parens {
            Ok(names.pop().unwrap())
        } else {
            Ok(Target::Tuple(names, span))
        }
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        let start = self.expect_kw("for")?;
        let target = self.loop_target()?;
        self.expect_kw("in")?;
        let iter = self.testlist()?;
        self.expect_op(Op::Colon)?;
        self.loop_depth += 1;
        let suite = self.suite();
        self.loop_depth -= 1;
        let (body, comment) = suite?;
        let span = start.to(self.prev_span());
        Ok(Stmt {
            kind: StmtKind::For { target, iter, body },
            span,
            comment,
        })
    }

    fn while_stmt(&mut self) -> PResult<Stmt> {
        let start = self.expect_kw("while")?;
        let cond = self.test()?;
        self.expect_op(Op::Colon)?;
        self.loop_depth += 1;
        let suite = self.suite();
        self.loop_depth -= 1;
        let (body, comment) = suite?;
        let span = start.to(self.prev_span());
        Ok(Stmt {
            kind: StmtKind::While { cond, body },
            span,
            comment,
        })
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let start = self.expect_kw("if")?;
        let cond = self.test()?;
        self.expect_op(Op::Colon)?;
        let (body, comment) = self.suite()?;
        let mut branches = vec![(cond, body)];
        let mut orelse = None;
        loop {
            if self.at_kw("elif") {
                self.advance();
                let cond = self.test()?;
                self.expect_op(Op::Colon)?;
                let (body, _) = self.suite()?;
                branches.push((cond, body));
            } else if self.at_kw("else") {
                self.advance();
                self.expect_op(Op::Colon)?;
                let (body, _) = self.suite()?;
                orelse = Some(body);
                break;
            } else {
                break;
            }
        }
        let span = start.to(self.prev_span());
        Ok(Stmt {
            kind: StmtKind::If { branches, orelse },
            span,
            comment,
        })
    }

    /// Body of a compound statement: inline simple statement or an indented
    /// block. Returns the header's trailing comment, if any.
    fn suite(&mut self) -> PResult<(Vec<Stmt>, Option<String>)> {
        let header_comment = self.trailing_comment();
        if header_comment.is_none() && !matches!(self.peek(), Tok::Newline) {
            if matches!(self.peek(), Tok::End) {
                return Err(self.error_here("expected an indented block"));
            }
            let mut stmt = self.simple_stmt()?;
            stmt.comment = self.trailing_comment();
            self.expect_newline()?;
            return Ok((vec![stmt], None));
        }
        self.expect_newline()?;
        let mut body = Vec::new();
        // Comment-only lines may precede the first indented statement.
        while let Tok::Comment(_) = self.peek() {
            body.push(self.statement()?);
        }
        if !matches!(self.peek(), Tok::Indent) {
            return Err(self.error_here("expected an indented block"));
        }
        self.advance();
        loop {
            match self.peek() {
                Tok::Dedent => {
                    self.advance();
                    break;
                }
                Tok::End => break,
                _ => body.push(self.statement()?),
            }
        }
        if body.iter().all(|s| matches!(s.kind, StmtKind::Comment(_))) {
            return Err(self.error_here("expected an indented block"));
        }
        Ok((body, header_comment))
    }

    fn testlist(&mut self) -> PResult<Expr> {
        let first = self.test()?;
        if !self.at_op(Op::Comma) {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(Op::Comma) {
            if self.starts_expr() {
                items.push(self.test()?);
            } else {
                break;
            }
        }
        let span = items[0].span.to(self.prev_span());
        Ok(Expr {
            kind: ExprKind::Tuple(items),
            span,
        })
    }

    fn starts_expr(&self) -> bool {
        match self.peek() {
            Tok::Name(n) => !is_reserved(n) || matches!(n.as_str(), "not" | "True" | "False" | "None"),
            Tok::Int(_) | Tok::Float(_) | Tok::Str(_) => true,
            Tok::Op(op) => matches!(
                op,
                Op::LParen | Op::LBracket | Op::LBrace | Op::Minus | Op::Plus
            ),
            _ => false,
        }
    }

    fn test(&mut self) -> PResult<Expr> {
        if self.at_kw("lambda") {
            return Err(self.invalid());
        }
        self.or_test()
    }

    fn or_test(&mut self) -> PResult<Expr> {
        let first = self.and_test()?;
        if !self.at_kw("or") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("or") {
            values.push(self.and_test()?);
        }
        let span = values[0].span.to(values.last().unwrap().span);
        Ok(Expr {
            kind: ExprKind::BoolOp {
                op: BoolOp::Or,
                values,
            },
            span,
        })
    }

    fn and_test(&mut self) -> PResult<Expr> {
        let first = self.not_test()?;
        if !self.at_kw("and") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("and") {
            values.push(self.not_test()?);
        }
        let span = values[0].span.to(values.last().unwrap().span);
        Ok(Expr {
            kind: ExprKind::BoolOp {
                op: BoolOp::And,
                values,
            },
            span,
        })
    }

    fn not_test(&mut self) -> PResult<Expr> {
        if self.at_kw("not") {
            let start = self.advance().span;
            let operand = self.not_test()?;
            let span = start.to(operand.span);
            return Ok(Expr {
                kind: ExprKind::UnaryOp {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
                span,
            });
        }
        self.comparison()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Op(Op::Eq) => CmpOp::Eq,
            Tok::Op(Op::Ne) => CmpOp::Ne,
            Tok::Op(Op::Lt) => CmpOp::Lt,
            Tok::Op(Op::Le) => CmpOp::Le,
            Tok::Op(Op::Gt) => CmpOp::Gt,
            Tok::Op(Op::Ge) => CmpOp::Ge,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "not" && matches!(self.peek_nth(1), Tok::Name(m) if m == "in") => {
                self.advance();
                CmpOp::NotIn
            }
            Tok::Name(n) if n == "is" => {
                if matches!(self.peek_nth(1), Tok::Name(m) if m == "not") {
                    self.advance();
                    CmpOp::IsNot
                } else {
                    CmpOp::Is
                }
            }
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let left = self.arith()?;
        let mut rest = Vec::new();
        while let Some(op) = self.cmp_op() {
            rest.push((op, self.arith()?));
        }
        if rest.is_empty() {
            return Ok(left);
        }
        let span = left.span.to(rest.last().unwrap().1.span);
        Ok(Expr {
            kind: ExprKind::Compare {
                left: Box::new(left),
                rest,
            },
            span,
        })
    }

    fn binop(op: BinOp, left: Expr, right: Expr) -> Expr {
        let span = left.span.to(right.span);
        Expr {
            kind: ExprKind::BinOp {
                op,
                left: Box::new(left),
                right: Box::new(right),
            },
            span,
        }
    }

    fn arith(&mut self) -> PResult<Expr> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op(Op::Plus) => BinOp::Add,
                Tok::Op(Op::Minus) => BinOp::Sub,
                _ => return Ok(left),
            };
            self.advance();
            let right = self.term()?;
            left = Self::binop(op, left, right);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut left = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Op(Op::Star) => BinOp::Mul,
                Tok::Op(Op::Slash) => BinOp::Div,
                Tok::Op(Op::DoubleSlash) => BinOp::FloorDiv,
                Tok::Op(Op::Percent) => BinOp::Mod,
                _ => return Ok(left),
            };
            self.advance();
            let right = self.factor()?;
            left = Self::binop(op, left, right);
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Tok::Op(Op::Minus) => Some(UnaryOp::Neg),
            Tok::Op(Op::Plus) => Some(UnaryOp::Pos),
            _ => None,
        };
        if let Some(op) = op {
            let start = self.advance().span;
            let operand = self.factor()?;
            let span = start.to(operand.span);
            return Ok(Expr {
                kind: ExprKind::UnaryOp {
                    op,
                    operand: Box::new(operand),
                },
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.atom_expr()?;
        if self.eat_op(Op::DoubleStar) {
            let exp = self.factor()?;
            return Ok(Self::binop(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn atom_expr(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.at_op(Op::LParen) {
                self.advance();
                let (args, kwargs) = self.arglist()?;
                let close = self.expect_op(Op::RParen)?;
                let span = e.span.to(close);
                e = Expr {
                    kind: ExprKind::Call {
                        func: Box::new(e),
                        args,
                        kwargs,
                    },
                    span,
                };
            } else if self.at_op(Op::LBracket) {
                self.advance();
                e = self.subscript(e)?;
            } else if self.at_op(Op::Dot) {
                self.advance();
                let attr = match self.peek().clone() {
                    Tok::Name(n) if !is_reserved(&n) => n,
                    _ => return Err(self.invalid()),
                };
                let end = self.advance().span;
                let span = e.span.to(end);
                e = Expr {
                    kind: ExprKind::Attribute {
                        value: Box::new(e),
                        attr,
                    },
                    span,
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn subscript(&mut self, value: Expr) -> PResult<Expr> {
        let lower = if self.at_op(Op::Colon) {
            None
        } else {
            Some(Box::new(self.testlist()?))
        };
        if self.eat_op(Op::Colon) {
            let upper = if self.at_op(Op::RBracket) {
                None
            } else {
                Some(Box::new(self.test()?))
            };
            let close = self.expect_op(Op::RBracket)?;
            let span = value.span.to(close);
            return Ok(Expr {
                kind: ExprKind::Slice {
                    value: Box::new(value),
                    lower,
                    upper,
                },
                span,
            });
        }
        let close = self.expect_op(Op::RBracket)?;
        let span = value.span.to(close);
        Ok(Expr {
            kind: ExprKind::Subscript {
                value: Box::new(value),
                index: lower.expect("index present when no colon"),
            },
            span,
        })
    }

    fn arglist(&mut self) -> PResult<ArgList> {
        let mut args = Vec::new();
        let mut kwargs = Vec::new();
        while !self.at_op(Op::RParen) {
            let is_kw = matches!(self.peek(), Tok::Name(n) if !is_reserved(n))
                && matches!(self.peek_nth(1), Tok::Op(Op::Assign));
            if is_kw {
                let Tok::Name(name) = self.advance().tok else {
                    unreachable!()
                };
                self.advance();
                kwargs.push((name, self.test()?));
            } else {
                if !kwargs.is_empty() {
                    return Err(self.error_here("positional argument follows keyword argument"));
                }
                args.push(self.test()?);
            }
            if !self.eat_op(Op::Comma) {
                break;
            }
        }
        Ok((args, kwargs))
    }

    fn atom(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        let span = self.span();
        match tok {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr {
                    kind: ExprKind::Literal(Literal::Int(v)),
                    span,
                })
            }
            Tok::Float(v) => {
                self.advance();
                Ok(Expr {
                    kind: ExprKind::Literal(Literal::Float(v)),
                    span,
                })
            }
            Tok::Str(_) => self.strings(),
            Tok::Name(n) => {
                let kind = match n.as_str() {
                    "True" => ExprKind::Literal(Literal::Bool(true)),
                    "False" => ExprKind::Literal(Literal::Bool(false)),
                    "None" => ExprKind::Literal(Literal::None),
                    _ if is_reserved(&n) => return Err(self.invalid()),
                    _ => ExprKind::Name(n),
                };
                self.advance();
                Ok(Expr { kind, span })
            }
            Tok::Op(Op::LParen) => {
                self.advance();
                if self.at_op(Op::RParen) {
                    let close = self.advance().span;
                    return Ok(Expr {
                        kind: ExprKind::Tuple(Vec::new()),
                        span: span.to(close),
                    });
                }
                let first = self.test()?;
                if self.at_kw("for") {
                    // Generator expressions are outside the grammar.
                    return Err(self.invalid());
                }
                let inner = if self.at_op(Op::Comma) {
                    let mut items = vec![first];
                    while self.eat_op(Op::Comma) {
                        if self.at_op(Op::RParen) {
                            break;
                        }
                        items.push(self.test()?);
                    }
                    ExprKind::Tuple(items)
                } else {
                    first.kind
                };
                let close = self.expect_op(Op::RParen)?;
                Ok(Expr {
                    kind: inner,
                    span: span.to(close),
                })
            }
            Tok::Op(Op::LBracket) => {
                self.advance();
                if self.at_op(Op::RBracket) {
                    let close = self.advance().span;
                    return Ok(Expr {
                        kind: ExprKind::List(Vec::new()),
                        span: span.to(close),
                    });
                }
                let first = self.test()?;
                if self.eat_kw("for") {
                    let target = self.loop_target()?;
                    self.expect_kw("in")?;
                    let iter = self.or_test()?;
                    let cond = if self.eat_kw("if") {
                        Some(Box::new(self.or_test()?))
                    } else {
                        None
                    };
                    if self.at_kw("for") || self.at_kw("if") {
                        return Err(self.invalid());
                    }
                    let close = self.expect_op(Op::RBracket)?;
                    return Ok(Expr {
                        kind: ExprKind::ListComp {
                            elt: Box::new(first),
                            target,
                            iter: Box::new(iter),
                            cond,
                        },
                        span: span.to(close),
                    });
                }
                let mut items = vec![first];
                while self.eat_op(Op::Comma) {
                    if self.at_op(Op::RBracket) {
                        break;
                    }
                    items.push(self.test()?);
                }
                let close = self.expect_op(Op::RBracket)?;
                Ok(Expr {
                    kind: ExprKind::List(items),
                    span: span.to(close),
                })
            }
            Tok::Op(Op::LBrace) => {
                self.advance();
                let mut pairs = Vec::new();
                while !self.at_op(Op::RBrace) {
                    let k = self.test()?;
                    self.expect_op(Op::Colon)?;
                    let v = self.test()?;
                    pairs.push((k, v));
                    if !self.eat_op(Op::Comma) {
                        break;
                    }
                }
                let close = self.expect_op(Op::RBrace)?;
                Ok(Expr {
                    kind: ExprKind::Map(pairs),
                    span: span.to(close),
                })
            }
            _ => Err(self.invalid()),
        }
    }

    /// One or more adjacent string literals, concatenated.
    fn strings(&mut self) -> PResult<Expr> {
        let start = self.span();
        let mut parts: Vec<FPart> = Vec::new();
        let mut any_f = false;
        while let Tok::Str(lit) = self.peek().clone() {
            self.advance();
            if lit.fstring {
                any_f = true;
                parts.extend(self.fstring_parts(&lit)?);
            } else {
                parts.push(FPart::Text(lit.value));
            }
        }
        let span = start.to(self.prev_span());
        if !any_f {
            let text: String = parts
                .into_iter()
                .map(|p| match p {
                    FPart::Text(t) => t,
                    FPart::Expr { .. } => unreachable!(),
                })
                .collect();
            return Ok(Expr {
                kind: ExprKind::Literal(Literal::Text(text)),
                span,
            });
        }
        // Merge adjacent text pieces.
        let mut merged: Vec<FPart> = Vec::new();
        for p in parts {
            match (merged.last_mut(), p) {
                (Some(FPart::Text(prev)), FPart::Text(t)) => prev.push_str(&t),
                (_, p) => merged.push(p),
            }
        }
        Ok(Expr {
            kind: ExprKind::FString(merged),
            span,
        })
    }

    fn fstring_parts(&self, lit: &StrLit) -> PResult<Vec<FPart>> {
        let body = lit.value.as_str();
        let base = lit.body_offset;
        let bytes = body.as_bytes();
        let mut parts = Vec::new();
        let mut literal = String::new();
        let mut i = 0;
        let flush = |literal: &mut String, parts: &mut Vec<FPart>| {
            if !literal.is_empty() {
                let text = if lit.raw {
                    std::mem::take(literal)
                } else {
                    unescape(&std::mem::take(literal))
                };
                parts.push(FPart::Text(text));
            }
        };
        while i < bytes.len() {
            match bytes[i] {
                b'{' if bytes.get(i + 1) == Some(&b'{') => {
                    literal.push('{');
                    i += 2;
                }
                b'}' if bytes.get(i + 1) == Some(&b'}') => {
                    literal.push('}');
                    i += 2;
                }
                b'}' => {
                    return Err(SyntaxDiagnostic::new(
                        self.text,
                        self.line_offset,
                        "f-string: single '}' is not allowed",
                        Span::new(base + i, base + i + 1),
                    ))
                }
                b'{' => {
                    flush(&mut literal, &mut parts);
                    let open = i;
                    let mut depth = 0usize;
                    let mut quote: Option<u8> = None;
                    let mut j = i + 1;
                    let mut expr_end = None;
                    let mut spec_start = None;
                    while j < bytes.len() {
                        let b = bytes[j];
                        if let Some(q) = quote {
                            if b == q {
                                quote = None;
                            }
                        } else {
                            match b {
                                b'\'' | b'"' => quote = Some(b),
                                b'(' | b'[' | b'{' => depth += 1,
                                b')' | b']' => depth = depth.saturating_sub(1),
                                b'}' if depth > 0 => depth -= 1,
                                b'}' => {
                                    if expr_end.is_none() {
                                        expr_end = Some(j);
                                    }
                                    break;
                                }
                                b':' if depth == 0 && expr_end.is_none() => {
                                    expr_end = Some(j);
                                    spec_start = Some(j + 1);
                                }
                                b'!' if depth == 0
                                    && expr_end.is_none()
                                    && bytes.get(j + 1) != Some(&b'=') =>
                                {
                                    expr_end = Some(j);
                                }
                                _ => {}
                            }
                        }
                        j += 1;
                    }
                    if j >= bytes.len() {
                        return Err(SyntaxDiagnostic::new(
                            self.text,
                            self.line_offset,
                            "f-string: expecting '}'",
                            Span::new(base + open, base + open + 1),
                        ));
                    }
                    let expr_end = expr_end.unwrap_or(j);
                    let inner = &body[open + 1..expr_end];
                    if inner.trim().is_empty() {
                        return Err(SyntaxDiagnostic::new(
                            self.text,
                            self.line_offset,
                            "f-string: empty expression not allowed",
                            Span::new(base + open, base + j + 1),
                        ));
                    }
                    let tokens = Lexer::new(
                        self.text,
                        base + open + 1,
                        base + expr_end,
                        self.line_offset,
                        Mode::Expression,
                    )
                    .run()
                    .map_err(|e| e.into_diag())?;
                    let expr = Parser::new(self.text, self.line_offset, tokens).parse_expression()?;
                    let spec = spec_start.map(|s| body[s..j].to_string());
                    parts.push(FPart::Expr { expr, spec });
                    i = j + 1;
                }
                _ => {
                    let ch = body[i..].chars().next().unwrap();
                    literal.push(ch);
                    i += ch.len_utf8();
                }
            }
        }
        flush(&mut literal, &mut parts);
        Ok(parts)
    }
}
