use thiserror::Error;

use super::token::{SourcePos, Span, Token, TokenKind, KEYWORDS};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{pos}: {message}")]
pub struct LexError {
    pub pos: SourcePos,
    pub message: String,
}

/// Splits source text into tokens. Whitespace is skipped; `//` comments are
/// kept as [`TokenKind::Comment`] trivia. The returned list always ends with
/// an `Eof` token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    Lexer::new(source).run()
}

const TWO_CHAR_PUNCT: &[&str] = &["==", "!=", "&&", "||"];
const ONE_CHAR_PUNCT: &str = "{}()[],;:.=+?-";

struct Lexer<'a> {
    src: &'a str,
    pos: SourcePos,
    tokens: Vec<Token>,
    // One entry per open `${` hole: nesting depth of plain braces inside it.
    holes: Vec<u32>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: SourcePos::START,
            tokens: Vec::new(),
            holes: Vec::new(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos.byte_offset..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.rest().chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos.byte_offset += c.len_utf8();
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn error<T>(&self, pos: SourcePos, message: impl Into<String>) -> Result<T, LexError> {
        Err(LexError {
            pos,
            message: message.into(),
        })
    }

    fn push(&mut self, kind: TokenKind, text: String, start: SourcePos) {
        self.tokens.push(Token {
            kind,
            text,
            span: Span::new(start, self.pos),
        });
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                c if c.is_whitespace() => {
                    self.bump();
                }
                '/' if self.peek_second() == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' || (c == '\r' && self.peek_second() == Some('\n')) {
                            break;
                        }
                        self.bump();
                    }
                    let text = self.src[start.byte_offset..self.pos.byte_offset].to_string();
                    self.push(TokenKind::Comment, text, start);
                }
                '\'' | '"' => self.string(c)?,
                '`' => {
                    self.bump();
                    self.template_part()?;
                }
                '@' => {
                    self.bump();
                    if !self.peek().is_some_and(is_ident_start) {
                        return self.error(start, "expected identifier after '@'");
                    }
                    self.ident_chars();
                    let text = self.src[start.byte_offset..self.pos.byte_offset].to_string();
                    self.push(TokenKind::AtIdent, text, start);
                }
                c if is_ident_start(c) => {
                    self.ident_chars();
                    let text = &self.src[start.byte_offset..self.pos.byte_offset];
                    let kind = match text {
                        "true" | "false" => TokenKind::BoolLit,
                        t if KEYWORDS.contains(&t) => TokenKind::Keyword,
                        _ => TokenKind::Ident,
                    };
                    self.push(kind, text.to_string(), start);
                }
                c if c.is_ascii_digit() => self.number(),
                '{' => {
                    self.bump();
                    if let Some(depth) = self.holes.last_mut() {
                        *depth += 1;
                    }
                    self.push(TokenKind::Punct, "{".into(), start);
                }
                '}' => {
                    self.bump();
                    self.push(TokenKind::Punct, "}".into(), start);
                    match self.holes.last_mut() {
                        Some(0) => {
                            self.holes.pop();
                            self.template_part()?;
                        }
                        Some(depth) => *depth -= 1,
                        None => {}
                    }
                }
                _ => {
                    let rest = self.rest();
                    if let Some(p) = TWO_CHAR_PUNCT.iter().find(|p| rest.starts_with(**p)) {
                        self.bump();
                        self.bump();
                        self.push(TokenKind::Punct, (*p).to_string(), start);
                    } else if ONE_CHAR_PUNCT.contains(c) {
                        self.bump();
                        self.push(TokenKind::Punct, c.to_string(), start);
                    } else {
                        return self.error(start, format!("illegal character {c:?}"));
                    }
                }
            }
        }
        if !self.holes.is_empty() {
            return self.error(self.pos, "unterminated template string");
        }
        let end = self.pos;
        self.push(TokenKind::Eof, String::new(), end);
        Ok(self.tokens)
    }

    fn ident_chars(&mut self) {
        while self.peek().is_some_and(is_ident_continue) {
            self.bump();
        }
    }

    fn number(&mut self) {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') && self.peek_second().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        let text = self.src[start.byte_offset..self.pos.byte_offset].to_string();
        self.push(TokenKind::NumberLit, text, start);
    }

    fn escape(&mut self, esc_start: SourcePos, out: &mut String) -> Result<(), LexError> {
        match self.bump() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('0') => out.push('\0'),
            Some(c @ ('\\' | '\'' | '"' | '`' | '$')) => out.push(c),
            // Unknown escapes are kept verbatim so regex sources read naturally.
            Some(c) => {
                out.push('\\');
                out.push(c);
            }
            None => return self.error(esc_start, "unterminated escape sequence"),
        }
        Ok(())
    }

    fn string(&mut self, quote: char) -> Result<(), LexError> {
        let start = self.pos;
        self.bump();
        let mut value = String::new();
        loop {
            match self.peek() {
                None | Some('\n') => return self.error(start, "unterminated string literal"),
                Some('\\') => {
                    let esc = self.pos;
                    self.bump();
                    self.escape(esc, &mut value)?;
                }
                Some(c) if c == quote => {
                    self.bump();
                    break;
                }
                Some(c) => {
                    self.bump();
                    value.push(c);
                }
            }
        }
        self.push(TokenKind::StringLit, value, start);
        Ok(())
    }

    /// Scans template text after an opening backtick or a hole's closing
    /// brace, up to the next `${` or the closing backtick.
    fn template_part(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let mut value = String::new();
        loop {
            match self.peek() {
                None => return self.error(start, "unterminated template string"),
                Some('\\') => {
                    let esc = self.pos;
                    self.bump();
                    self.escape(esc, &mut value)?;
                }
                Some('`') => {
                    self.push(TokenKind::TemplateStringPart, value, start);
                    self.bump();
                    return Ok(());
                }
                Some('$') if self.peek_second() == Some('{') => {
                    self.push(TokenKind::TemplateStringPart, value, start);
                    let hole = self.pos;
                    self.bump();
                    self.bump();
                    self.push(TokenKind::Punct, "${".into(), hole);
                    self.holes.push(0);
                    return Ok(());
                }
                Some(c) => {
                    self.bump();
                    value.push(c);
                }
            }
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_text(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn model_header() {
        assert_eq!(
            kinds_and_text("model User {"),
            vec![
                (TokenKind::Keyword, "model".into()),
                (TokenKind::Ident, "User".into()),
                (TokenKind::Punct, "{".into()),
                (TokenKind::Eof, String::new()),
            ]
        );
    }

    #[test]
    fn empty_source() {
        assert_eq!(kinds_and_text(""), vec![(TokenKind::Eof, String::new())]);
    }

    #[test]
    fn template_with_hole() {
        assert_eq!(
            kinds_and_text("`/users/${username}`"),
            vec![
                (TokenKind::TemplateStringPart, "/users/".into()),
                (TokenKind::Punct, "${".into()),
                (TokenKind::Ident, "username".into()),
                (TokenKind::Punct, "}".into()),
                (TokenKind::TemplateStringPart, String::new()),
                (TokenKind::Eof, String::new()),
            ]
        );
    }

    #[test]
    fn braces_inside_hole_do_not_close_it() {
        let toks = kinds_and_text("`a${ {x = 1,} }b`");
        let parts: Vec<_> = toks
            .iter()
            .filter(|(k, _)| *k == TokenKind::TemplateStringPart)
            .map(|(_, t)| t.as_str())
            .collect();
        assert_eq!(parts, ["a", "b"]);
    }

    #[test]
    fn nested_template() {
        let toks = kinds_and_text("`x${`y${z}`}w`");
        let parts: Vec<_> = toks
            .iter()
            .filter(|(k, _)| *k == TokenKind::TemplateStringPart)
            .map(|(_, t)| t.as_str())
            .collect();
        assert_eq!(parts, ["x", "y", "", "w"]);
    }

    #[test]
    fn escapes_in_single_quotes() {
        let toks = tokenize(r"'\\d+'").unwrap();
        assert_eq!(toks[0].kind, TokenKind::StringLit);
        assert_eq!(toks[0].text, r"\d+");
        assert_eq!(toks[0].span.end.byte_offset, 6);
    }

    #[test]
    fn at_ident_and_keywords() {
        let toks = kinds_and_text("type @toJSONString = null true");
        assert_eq!(toks[0], (TokenKind::Keyword, "type".into()));
        assert_eq!(toks[1], (TokenKind::AtIdent, "@toJSONString".into()));
        assert_eq!(toks[3], (TokenKind::Keyword, "null".into()));
        assert_eq!(toks[4], (TokenKind::BoolLit, "true".into()));
    }

    #[test]
    fn comments_are_trivia_tokens() {
        let toks = tokenize("a // note\r\nb").unwrap();
        assert_eq!(toks[1].kind, TokenKind::Comment);
        assert_eq!(toks[1].text, "// note");
        assert_eq!(toks[2].span.start.line, 2);
        assert_eq!(toks[2].span.start.column, 1);
    }

    #[test]
    fn positions_count_chars_not_bytes() {
        let toks = tokenize("'é' x").unwrap();
        assert_eq!(toks[1].span.start.column, 5);
        assert_eq!(toks[1].span.start.byte_offset, 5);
    }

    #[test]
    fn unterminated_string_reports_start() {
        let err = tokenize("x = 'abc").unwrap_err();
        assert_eq!(err.pos.column, 5);
        assert!(err.message.contains("unterminated"));
    }

    #[test]
    fn unterminated_template() {
        assert!(tokenize("`abc").is_err());
        assert!(tokenize("`a${b").is_err());
    }

    #[test]
    fn illegal_character() {
        let err = tokenize("a # b").unwrap_err();
        assert_eq!(err.pos.column, 3);
        assert!(tokenize("@ x").is_err());
        assert!(tokenize("a & b").is_err());
    }

    #[test]
    fn number_followed_by_dot_ident() {
        let toks = kinds_and_text("1.5 2.x");
        assert_eq!(toks[0], (TokenKind::NumberLit, "1.5".into()));
        assert_eq!(toks[1], (TokenKind::NumberLit, "2".into()));
        assert_eq!(toks[2], (TokenKind::Punct, ".".into()));
    }
}
