//! Tokenizer shared by the formula and structure file readers.

use crate::error::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum TokenKind {
    /// Identifier or bare integer.
    Word(String),
    /// Double-quoted element name.
    Quoted(String),
    Sym(char),
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut column = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, column);
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
        } else if c.is_whitespace() {
            chars.next();
            column += 1;
        } else if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    chars.next();
                    column += 1;
                } else {
                    break;
                }
            }
            tokens.push(Token {
                kind: TokenKind::Word(word),
                line: tl,
                column: tc,
            });
        } else if c == '"' {
            chars.next();
            column += 1;
            let mut word = String::new();
            loop {
                match chars.next() {
                    Some('"') => {
                        column += 1;
                        break;
                    }
                    Some('\n') | None => {
                        return Err(ParseError::new(tl, tc, "unterminated quoted name"));
                    }
                    Some(c) => {
                        word.push(c);
                        column += 1;
                    }
                }
            }
            tokens.push(Token {
                kind: TokenKind::Quoted(word),
                line: tl,
                column: tc,
            });
        } else if "(),:.&|/".contains(c) {
            chars.next();
            column += 1;
            tokens.push(Token {
                kind: TokenKind::Sym(c),
                line: tl,
                column: tc,
            });
        } else {
            return Err(ParseError::new(
                tl,
                tc,
                format!("unexpected character '{c}'"),
            ));
        }
    }
    Ok(tokens)
}

/// Cursor over a token stream with position-aware error helpers.
pub(crate) struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Cursor {
    pub fn new(text: &str) -> Result<Self, ParseError> {
        let tokens = tokenize(text)?;
        let lines: Vec<&str> = text.split('\n').collect();
        let end = (
            lines.len(),
            lines.last().map_or(0, |l| l.chars().count()) + 1,
        );
        Ok(Self {
            tokens,
            pos: 0,
            end,
        })
    }

    pub fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    pub fn peek_nth(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    pub fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub fn error_here(&self, message: impl Into<String>) -> ParseError {
        match self.peek() {
            Some(t) => ParseError::new(t.line, t.column, message),
            None => ParseError::new(self.end.0, self.end.1, message),
        }
    }

    pub fn peek_is_sym(&self, c: char) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Sym(s), .. }) if *s == c)
    }

    pub fn peek_is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Word(s), .. }) if s == w)
    }

    pub fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek_is_sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error_here(format!("expected '{c}'")))
        }
    }

    pub fn expect_keyword(&mut self, w: &str) -> Result<(), ParseError> {
        if self.peek_is_word(w) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error_here(format!("expected '{w}'")))
        }
    }

    /// Next token as a word; returns it with its position.
    pub fn expect_word(&mut self, what: &str) -> Result<(String, usize, usize), ParseError> {
        match self.peek().cloned() {
            Some(Token {
                kind: TokenKind::Word(w),
                line,
                column,
            }) => {
                self.pos += 1;
                Ok((w, line, column))
            }
            _ => Err(self.error_here(format!("expected {what}"))),
        }
    }

    /// A word or a quoted name.
    pub fn expect_name(&mut self, what: &str) -> Result<(String, usize, usize), ParseError> {
        match self.peek().cloned() {
            Some(Token {
                kind: TokenKind::Word(w) | TokenKind::Quoted(w),
                line,
                column,
            }) => {
                self.pos += 1;
                Ok((w, line, column))
            }
            _ => Err(self.error_here(format!("expected {what}"))),
        }
    }
}
