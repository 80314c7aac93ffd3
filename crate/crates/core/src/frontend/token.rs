use std::fmt;

use serde::Serialize;

/// A position in source text. `line` and `column` are 1-based, `byte_offset` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct SourcePos {
    pub line: u32,
    pub column: u32,
    pub byte_offset: usize,
}

impl SourcePos {
    pub const START: SourcePos = SourcePos {
        line: 1,
        column: 1,
        byte_offset: 0,
    };
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Half-open source range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct Span {
    pub start: SourcePos,
    pub end: SourcePos,
}

impl Span {
    pub fn new(start: SourcePos, end: SourcePos) -> Self {
        Span { start, end }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TokenKind {
    Keyword,
    Ident,
    AtIdent,
    StringLit,
    TemplateStringPart,
    NumberLit,
    BoolLit,
    Punct,
    Comment,
    Eof,
}

pub const KEYWORDS: &[&str] = &[
    "model", "type", "api", "import", "returns", "var", "return", "if", "else", "true", "false",
    "null",
];

/// A lexical token.
///
/// `text` holds the token's value: the identifier or punctuation itself, the
/// unescaped contents of string literals and template parts (without
/// delimiters), or the full comment including `//`. The raw lexeme is always
/// recoverable through `span`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == kw
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Eof => f.write_str("end of input"),
            TokenKind::StringLit => write!(f, "string '{}'", self.text),
            TokenKind::TemplateStringPart => f.write_str("template string"),
            TokenKind::Comment => f.write_str("comment"),
            _ => write!(f, "'{}'", self.text),
        }
    }
}
