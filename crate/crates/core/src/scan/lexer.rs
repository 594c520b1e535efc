// SPDX-License-Identifier: Apache-2.0

//! Comment/literal stripping tokenizer.
//!
//! Produces the token stream the function scanner walks. Comments vanish,
//! string and character literals collapse to a single `Literal` token (so
//! braces inside them never count), and preprocessor directive lines are
//! recorded separately and contribute no tokens. Every token keeps the
//! 1-based line it started on.

use super::ScanError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Literal,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Ident
    }
}

/// A preprocessor directive, continuation lines joined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directive {
    pub line: u32,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub directives: Vec<Directive>,
}

const PUNCT3: [&str; 2] = ["...", "->*"];
const PUNCT2: [&str; 7] = ["::", "->", "&&", "||", "==", "!=", "##"];

pub fn strip_noncode(text: &str) -> Result<TokenStream, ScanError> {
    Lexer::new(text).run()
}

struct Lexer {
    src: Vec<char>,
    pos: usize,
    line: u32,
    at_line_start: bool,
    out: TokenStream,
}

impl Lexer {
    fn new(text: &str) -> Self {
        Lexer {
            src: text.chars().collect(),
            pos: 0,
            line: 1,
            at_line_start: true,
            out: TokenStream::default(),
        }
    }

    fn peek(&self, offset: usize) -> Option<char> {
        self.src.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn push(&mut self, kind: TokenKind, text: String, line: u32) {
        self.out.tokens.push(Token { kind, text, line });
        self.at_line_start = false;
    }

    fn run(mut self) -> Result<TokenStream, ScanError> {
        while let Some(c) = self.peek(0) {
            match c {
                '\n' => {
                    self.bump();
                    self.at_line_start = true;
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '\\' if self.peek(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '/' if self.peek(1) == Some('/') => self.line_comment(),
                '/' if self.peek(1) == Some('*') => self.block_comment()?,
                '#' if self.at_line_start => self.directive()?,
                '"' => {
                    let line = self.line;
                    let lit = self.quoted('"', String::new());
                    self.push(TokenKind::Literal, lit, line);
                }
                '\'' => {
                    let line = self.line;
                    let lit = self.quoted('\'', String::new());
                    self.push(TokenKind::Literal, lit, line);
                }
                c if is_ident_start(c) => self.ident_or_prefixed_literal()?,
                c if c.is_ascii_digit() => self.number(),
                '.' if self.peek(1).is_some_and(|d| d.is_ascii_digit()) => self.number(),
                _ => self.punct(),
            }
        }
        Ok(self.out)
    }

    fn line_comment(&mut self) {
        while let Some(c) = self.peek(0) {
            if c == '\n' {
                break;
            }
            if c == '\\' && self.peek(1) == Some('\n') {
                self.bump();
            }
            self.bump();
        }
    }

    fn block_comment(&mut self) -> Result<(), ScanError> {
        let start = self.line;
        self.bump();
        self.bump();
        loop {
            match self.bump() {
                Some('*') if self.peek(0) == Some('/') => {
                    self.bump();
                    return Ok(());
                }
                Some(_) => {}
                None => return Err(ScanError::UnterminatedComment { line: start }),
            }
        }
    }

    /// Consumes a `"` or `'` literal; an unescaped newline ends it early.
    fn quoted(&mut self, quote: char, mut text: String) -> String {
        text.push(quote);
        self.bump();
        while let Some(c) = self.peek(0) {
            match c {
                '\n' => break,
                '\\' => {
                    text.push(c);
                    self.bump();
                    if let Some(escaped) = self.bump() {
                        text.push(escaped);
                    }
                }
                c if c == quote => {
                    text.push(c);
                    self.bump();
                    break;
                }
                c => {
                    text.push(c);
                    self.bump();
                }
            }
        }
        text
    }

    fn raw_string(&mut self, prefix: String) -> Result<String, ScanError> {
        let start = self.line;
        let mut text = prefix;
        text.push('"');
        self.bump();
        let mut delim = String::new();
        loop {
            match self.bump() {
                Some('(') => break,
                Some(c) if delim.len() < 16 && c != ' ' && c != ')' && c != '\\' && c != '\n' => {
                    delim.push(c)
                }
                _ => return Err(ScanError::UnterminatedRawString { line: start }),
            }
        }
        let closing: Vec<char> = format!("){delim}\"").chars().collect();
        loop {
            if self.pos >= self.src.len() {
                return Err(ScanError::UnterminatedRawString { line: start });
            }
            if self.src[self.pos..].starts_with(&closing) {
                for _ in 0..closing.len() {
                    self.bump();
                }
                text.push_str("...\"");
                return Ok(text);
            }
            self.bump();
        }
    }

    fn ident_or_prefixed_literal(&mut self) -> Result<(), ScanError> {
        let line = self.line;
        let mut ident = String::new();
        while let Some(c) = self.peek(0) {
            if is_ident_continue(c) {
                ident.push(c);
                self.bump();
            } else {
                break;
            }
        }
        match (ident.as_str(), self.peek(0)) {
            ("R" | "u8R" | "uR" | "UR" | "LR", Some('"')) => {
                let lit = self.raw_string(ident)?;
                self.push(TokenKind::Literal, lit, line);
            }
            ("u8" | "u" | "U" | "L", Some(q @ ('"' | '\''))) => {
                let lit = self.quoted(q, ident);
                self.push(TokenKind::Literal, lit, line);
            }
            _ => self.push(TokenKind::Ident, ident, line),
        }
        Ok(())
    }

    /// pp-number, including `'` digit separators and signed exponents.
    fn number(&mut self) {
        let line = self.line;
        let mut text = String::new();
        while let Some(c) = self.peek(0) {
            let prev = text.chars().last();
            let hex = text.starts_with("0x") || text.starts_with("0X");
            let part = c.is_ascii_alphanumeric()
                || c == '_'
                || c == '.'
                || (c == '\'' && self.peek(1).is_some_and(|n| n.is_ascii_alphanumeric()))
                || ((c == '+' || c == '-')
                    && match prev {
                        Some('e' | 'E') => !hex,
                        Some('p' | 'P') => true,
                        _ => false,
                    });
            if !part {
                break;
            }
            text.push(c);
            self.bump();
        }
        self.push(TokenKind::Number, text, line);
    }

    fn punct(&mut self) {
        let line = self.line;
        let rest: String = self.src[self.pos..self.src.len().min(self.pos + 3)]
            .iter()
            .collect();
        let text = PUNCT3
            .iter()
            .chain(PUNCT2.iter())
            .find(|p| rest.starts_with(**p))
            .map(|p| p.to_string())
            .unwrap_or_else(|| rest.chars().next().map(String::from).unwrap_or_default());
        for _ in 0..text.chars().count() {
            self.bump();
        }
        self.push(TokenKind::Punct, text, line);
    }

    /// Records a directive line; nothing inside it is tokenized.
    fn directive(&mut self) -> Result<(), ScanError> {
        let line = self.line;
        let mut text = String::new();
        while let Some(c) = self.peek(0) {
            match c {
                '\n' => break,
                '\\' if self.peek(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                    text.push(' ');
                }
                '/' if self.peek(1) == Some('/') => {
                    self.line_comment();
                    break;
                }
                '/' if self.peek(1) == Some('*') => {
                    self.block_comment()?;
                    text.push(' ');
                }
                '"' | '\'' => {
                    let lit = self.quoted(c, String::new());
                    text.push_str(&lit);
                }
                c => {
                    text.push(c);
                    self.bump();
                }
            }
        }
        self.out.directives.push(Directive {
            line,
            text: text.trim_end().to_string(),
        });
        Ok(())
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}
