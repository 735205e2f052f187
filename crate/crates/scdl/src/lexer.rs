//! Tokenization of SCDL source text.
//!
//! The lexer produces a flat token list with character-accurate spans.
//! Whitespace, `//` line comments and `/* */` block comments are skipped.
//! Lexing errors do not stop the scan: the lexer reports the problem and
//! resumes at the next character, so one pass surfaces every lexical issue.

use crate::diag::{codes, sort_diagnostics, Diagnostic};
use crate::span::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    /// Identifier or contextual word (energy names, fold operators,
    /// `components`): `[A-Za-z_][A-Za-z0-9_]*` not in the reserved set.
    Ident,
    /// Reserved keyword.
    Keyword,
    /// Numeric literal: digits with an optional fraction part.
    Number,
    /// Cardinality literal containing `..`, e.g. `0..1` or `1..*`.
    Card,
    /// Double-quoted string literal; the lexeme keeps the quotes.
    Str,
    /// Operator or delimiter.
    Punct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Exact source slice, always non-empty.
    pub lexeme: String,
    pub span: SourceSpan,
}

/// Words that can never be identifiers.
pub const RESERVED: &[&str] = &[
    "scd",
    "concrete",
    "conceptual",
    "system",
    "composition",
    "environment",
    "structure",
    "mechanism",
    "properties",
    "dimension",
    "explode",
    "association",
    "intrinsic",
    "aggregate",
    "emergent",
    "number",
    "text",
    "flag",
    "env",
    "entity",
    "assoc",
    "actor",
    "step",
    "flow",
    "by",
    "structural",
    "interaction",
    "counterpart",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

/// Decodes a string literal lexeme (with quotes) to its value.
/// Supports the two escapes the language defines: `\"` and `\\`.
pub fn decode_string(lexeme: &str) -> String {
    let inner = &lexeme[1..lexeme.len().saturating_sub(1)];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some(e) => out.push(e),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Re-encodes a string value as a quoted literal.
pub fn encode_string(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    out.push('"');
    for c in value.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Splits source text into tokens. On any lexical error the whole input is
/// still scanned and all diagnostics come back together.
pub fn tokenize(source: &str, file: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut lexer = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        file,
        tokens: Vec::new(),
        diags: Vec::new(),
    };
    lexer.run();
    if lexer.diags.is_empty() {
        Ok(lexer.tokens)
    } else {
        sort_diagnostics(&mut lexer.diags);
        Err(lexer.diags)
    }
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    file: &'a str,
    tokens: Vec<Token>,
    diags: Vec<Diagnostic>,
}

impl Lexer<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn push(&mut self, kind: TokenKind, lexeme: String, start: (u32, u32)) {
        debug_assert!(!lexeme.is_empty());
        self.tokens.push(Token {
            kind,
            lexeme,
            span: SourceSpan::new(self.file, start.0, start.1, self.line, self.col),
        });
    }

    fn error(&mut self, code: &str, message: String, start: (u32, u32)) {
        self.diags.push(Diagnostic::new(
            code,
            message,
            SourceSpan::new(self.file, start.0, start.1, self.line, self.col),
        ));
    }

    fn run(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '/' && self.peek_at(1) == Some('/') {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c == '/' && self.peek_at(1) == Some('*') {
                self.block_comment();
            } else if c == '_' || c.is_ascii_alphabetic() {
                self.word();
            } else if c.is_ascii_digit() {
                self.number_or_card();
            } else if c == '"' {
                self.string();
            } else {
                self.punct();
            }
        }
    }

    fn block_comment(&mut self) {
        let start = self.here();
        self.bump();
        self.bump();
        loop {
            match self.peek() {
                None => {
                    self.error(codes::E_LEX_002, "unterminated block comment".to_string(), start);
                    return;
                }
                Some('*') if self.peek_at(1) == Some('/') => {
                    self.bump();
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn word(&mut self) {
        let start = self.here();
        let mut lexeme = String::new();
        while let Some(c) = self.peek() {
            if c == '_' || c.is_ascii_alphanumeric() {
                lexeme.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let kind = if is_reserved(&lexeme) { TokenKind::Keyword } else { TokenKind::Ident };
        self.push(kind, lexeme, start);
    }

    fn number_or_card(&mut self) {
        let start = self.here();
        let mut lexeme = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                lexeme.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if self.peek() == Some('.') && self.peek_at(1) == Some('.') {
            lexeme.push(self.bump().unwrap());
            lexeme.push(self.bump().unwrap());
            match self.peek() {
                Some('*') => {
                    lexeme.push(self.bump().unwrap());
                    self.push(TokenKind::Card, lexeme, start);
                }
                Some(c) if c.is_ascii_digit() => {
                    while let Some(c) = self.peek() {
                        if c.is_ascii_digit() {
                            lexeme.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.push(TokenKind::Card, lexeme, start);
                }
                _ => {
                    self.error(
                        codes::E_LEX_001,
                        "cardinality upper bound must be digits or `*`".to_string(),
                        start,
                    );
                }
            }
        } else if self.peek() == Some('.')
            && self.peek_at(1).map(|c| c.is_ascii_digit()).unwrap_or(false)
        {
            lexeme.push(self.bump().unwrap());
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    lexeme.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            self.push(TokenKind::Number, lexeme, start);
        } else {
            self.push(TokenKind::Number, lexeme, start);
        }
    }

    fn string(&mut self) {
        let start = self.here();
        let mut lexeme = String::new();
        lexeme.push(self.bump().unwrap());
        loop {
            match self.peek() {
                None | Some('\n') => {
                    self.error(codes::E_LEX_002, "unterminated string literal".to_string(), start);
                    return;
                }
                Some('\\') => {
                    lexeme.push(self.bump().unwrap());
                    if let Some(c) = self.peek() {
                        if c != '\n' {
                            lexeme.push(self.bump().unwrap());
                        }
                    }
                }
                Some('"') => {
                    lexeme.push(self.bump().unwrap());
                    self.push(TokenKind::Str, lexeme, start);
                    return;
                }
                Some(c) => {
                    lexeme.push(c);
                    self.bump();
                }
            }
        }
    }

    fn punct(&mut self) {
        let start = self.here();
        let c = self.peek().unwrap();
        let two = |l: &Lexer| l.peek_at(1);
        let lexeme: Option<&str> = match c {
            '{' => Some("{"),
            '}' => Some("}"),
            '[' => Some("["),
            ']' => Some("]"),
            '(' => Some("("),
            ')' => Some(")"),
            ';' => Some(";"),
            ':' => Some(":"),
            ',' => Some(","),
            '.' => Some("."),
            '=' => Some("="),
            '+' => Some("+"),
            '*' => Some("*"),
            '/' => Some("/"),
            '-' => match two(self) {
                Some('-') => Some("--"),
                Some('>') => Some("->"),
                _ => Some("-"),
            },
            '<' => {
                if two(self) == Some('-') && self.peek_at(2) == Some('>') {
                    Some("<->")
                } else if two(self) == Some('<') {
                    Some("<<")
                } else {
                    None
                }
            }
            '>' => {
                if two(self) == Some('>') {
                    Some(">>")
                } else {
                    None
                }
            }
            _ => None,
        };
        match lexeme {
            Some(text) => {
                let text = text.to_string();
                for _ in text.chars() {
                    self.bump();
                }
                self.push(TokenKind::Punct, text, start);
            }
            None => {
                self.bump();
                self.error(codes::E_LEX_001, format!("unrecognized character `{c}`"), start);
            }
        }
    }
}
