//! Text format for programs.
//!
//! ```text
//! file    := header program
//! header  := "processes" NAT ";"
//! program := "program" IDENT "{" proc* "}"
//! proc    := "process" NAT "{" stmt* "}"
//! stmt    := "send" NAT ";" | "recv" NAT ";" | "assign" IDENT ";"
//! ```
//!
//! `#` starts a comment that runs to the end of the line. Assignments are
//! accepted and dropped. Processes without a block have an empty sequence.

use std::fmt;

use thiserror::Error;

use crate::model::{ProcessId, Program, Statement};

/// 1-based source position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    BadProcessId,
    SelfChannel,
    DuplicateProcess,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Word(String),
    Nat(String),
    LBrace,
    RBrace,
    Semi,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Word(w) => write!(f, "`{w}`"),
            Token::Nat(n) => write!(f, "`{n}`"),
            Token::LBrace => f.write_str("`{`"),
            Token::RBrace => f.write_str("`}`"),
            Token::Semi => f.write_str("`;`"),
        }
    }
}

fn lex(source: &str) -> Result<(Vec<(Token, SourceSpan)>, SourceSpan), ParseError> {
    let mut tokens = Vec::new();
    let mut chars = source.chars().peekable();
    let (mut line, mut column) = (1, 1);
    let mut last = SourceSpan { line: 1, column: 1 };
    while let Some(&c) = chars.peek() {
        let span = SourceSpan { line, column };
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        last = span;
        if c.is_whitespace() {
            chars.next();
            column += 1;
        } else if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                last = SourceSpan { line, column };
                chars.next();
                column += 1;
            }
        } else if c.is_ascii_digit() || c.is_alphabetic() || c == '_' {
            let mut text = String::new();
            while let Some(&c) = chars.peek() {
                if !(c.is_alphanumeric() || c == '_') {
                    break;
                }
                last = SourceSpan { line, column };
                text.push(c);
                chars.next();
                column += 1;
            }
            let token = if text.chars().all(|c| c.is_ascii_digit()) {
                Token::Nat(text)
            } else if text.starts_with(|c: char| c.is_ascii_digit()) {
                return Err(ParseError {
                    span,
                    message: format!("malformed number `{text}`"),
                    kind: ParseErrorKind::Syntax,
                });
            } else {
                Token::Word(text)
            };
            tokens.push((token, span));
        } else {
            let token = match c {
                '{' => Token::LBrace,
                '}' => Token::RBrace,
                ';' => Token::Semi,
                other => {
                    return Err(ParseError {
                        span,
                        message: format!("unexpected character `{other}`"),
                        kind: ParseErrorKind::Syntax,
                    })
                }
            };
            chars.next();
            column += 1;
            tokens.push((token, span));
        }
    }
    Ok((tokens, last))
}

struct Parser {
    tokens: Vec<(Token, SourceSpan)>,
    pos: usize,
    /// Span reported for errors at end of input.
    end: SourceSpan,
}

impl Parser {
    fn span(&self) -> SourceSpan {
        self.tokens.get(self.pos).map_or(self.end, |(_, s)| *s)
    }

    fn error(&self, span: SourceSpan, kind: ParseErrorKind, message: String) -> ParseError {
        ParseError {
            span,
            message,
            kind,
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let found = match self.tokens.get(self.pos) {
            Some((t, _)) => t.to_string(),
            None => "end of input".to_string(),
        };
        self.error(
            self.span(),
            ParseErrorKind::Syntax,
            format!("expected {expected}, found {found}"),
        )
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn expect(&mut self, token: Token) -> Result<(), ParseError> {
        if self.peek() == Some(&token) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&token.to_string()))
        }
    }

    fn keyword(&mut self, word: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token::Word(w)) if w == word => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(&format!("`{word}`"))),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Token::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn nat(&mut self) -> Result<(u64, SourceSpan), ParseError> {
        let span = self.span();
        match self.peek() {
            Some(Token::Nat(text)) => {
                let value = text.parse::<u64>().map_err(|_| {
                    self.error(span, ParseErrorKind::Syntax, format!("number `{text}` is too large"))
                })?;
                self.pos += 1;
                Ok((value, span))
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn process_id(&mut self, n: usize) -> Result<(ProcessId, SourceSpan), ParseError> {
        let (value, span) = self.nat()?;
        match u32::try_from(value).ok().and_then(ProcessId::new) {
            Some(id) if id.index() < n => Ok((id, span)),
            _ => Err(self.error(
                span,
                ParseErrorKind::BadProcessId,
                format!("process id {value} is outside 1..={n}"),
            )),
        }
    }

    fn file(&mut self) -> Result<Program, ParseError> {
        self.keyword("processes")?;
        let (count, count_span) = self.nat()?;
        let n = match usize::try_from(count) {
            Ok(n) if (1..=u32::MAX as usize).contains(&n) => n,
            _ => {
                return Err(self.error(
                    count_span,
                    ParseErrorKind::BadProcessId,
                    format!("process count {count} must be positive"),
                ))
            }
        };
        self.expect(Token::Semi)?;
        self.keyword("program")?;
        let name = self.ident()?;
        self.expect(Token::LBrace)?;

        let mut seqs: Vec<Option<Vec<Statement>>> = vec![None; n];
        while self.peek() != Some(&Token::RBrace) {
            let block_span = self.span();
            self.keyword("process")?;
            let (owner, _) = self.process_id(n)?;
            if seqs[owner.index()].is_some() {
                return Err(self.error(
                    block_span,
                    ParseErrorKind::DuplicateProcess,
                    format!("process {owner} is defined twice"),
                ));
            }
            seqs[owner.index()] = Some(self.block(owner, n)?);
        }
        self.expect(Token::RBrace)?;
        if self.pos < self.tokens.len() {
            return Err(self.unexpected("end of input"));
        }
        let seqs = seqs.into_iter().map(Option::unwrap_or_default).collect();
        Ok(Program::from_seqs(name, seqs).expect("parser validated every statement"))
    }

    fn block(&mut self, owner: ProcessId, n: usize) -> Result<Vec<Statement>, ParseError> {
        self.expect(Token::LBrace)?;
        let mut seq = Vec::new();
        loop {
            match self.peek() {
                Some(Token::RBrace) => {
                    self.pos += 1;
                    return Ok(seq);
                }
                Some(Token::Word(w)) if w == "send" || w == "recv" => {
                    let is_send = w == "send";
                    self.pos += 1;
                    let (peer, span) = self.process_id(n)?;
                    if peer == owner {
                        return Err(self.error(
                            span,
                            ParseErrorKind::SelfChannel,
                            format!("process {owner} cannot communicate with itself"),
                        ));
                    }
                    self.expect(Token::Semi)?;
                    seq.push(if is_send {
                        Statement::send(peer)
                    } else {
                        Statement::recv(peer)
                    });
                }
                Some(Token::Word(w)) if w == "assign" => {
                    self.pos += 1;
                    self.ident()?;
                    self.expect(Token::Semi)?;
                }
                _ => return Err(self.unexpected("`send`, `recv`, `assign` or `}`")),
            }
        }
    }
}

pub fn parse(source: &str) -> Result<Program, ParseError> {
    let (tokens, end) = lex(source)?;
    Parser {
        tokens,
        pos: 0,
        end,
    }
    .file()
}

/// Canonical single-line form. Processes with empty sequences get no block.
pub fn print(p: &Program) -> String {
    let mut out = format!("processes {}; program {} {{", p.n(), p.name());
    for proc in ProcessId::all(p.n()) {
        let seq = p.seq(proc);
        if seq.is_empty() {
            continue;
        }
        out.push_str(&format!(" process {proc} {{"));
        for stmt in seq {
            let verb = match stmt.kind {
                crate::model::EventKind::Send => "send",
                crate::model::EventKind::Recv => "recv",
            };
            out.push_str(&format!(" {verb} {};", stmt.peer));
        }
        out.push_str(" }");
    }
    out.push_str(" }");
    out
}
