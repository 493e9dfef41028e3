use crate::model::{Diagnostic, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Dot,
    At,
    Colon,
    Arrow,
    Minus,
    Lt,
    Gt,
    Plus,
    Star,
    Bang,
    AndAnd,
    OrOr,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::At => "@",
            Tok::Colon => ":",
            Tok::Arrow => "->",
            Tok::Minus => "-",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Plus => "+",
            Tok::Star => "*",
            Tok::Bang => "!",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Ident(_) | Tok::Eof => "",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

/// Splits `text` into tokens; `#` starts a comment running to end of line.
pub fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let span = |len| SourceSpan { line, column: col, length: len };
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                chars.next();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut name = String::new();
            while let Some(&c) = chars.peek().filter(|c| c.is_ascii_alphanumeric() || **c == '_') {
                name.push(c);
                chars.next();
            }
            let len = name.len();
            out.push(Token { tok: Tok::Ident(name), span: span(len) });
            col += len;
            continue;
        }
        chars.next();
        let two = |chars: &mut std::iter::Peekable<std::str::Chars>, want: char| {
            if chars.peek() == Some(&want) {
                chars.next();
                true
            } else {
                false
            }
        };
        let (tok, len) = match c {
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            ';' => (Tok::Semi, 1),
            ',' => (Tok::Comma, 1),
            '.' => (Tok::Dot, 1),
            '@' => (Tok::At, 1),
            ':' => (Tok::Colon, 1),
            '<' => (Tok::Lt, 1),
            '>' => (Tok::Gt, 1),
            '+' => (Tok::Plus, 1),
            '*' => (Tok::Star, 1),
            '!' => (Tok::Bang, 1),
            '-' if two(&mut chars, '>') => (Tok::Arrow, 2),
            '-' => (Tok::Minus, 1),
            '&' if two(&mut chars, '&') => (Tok::AndAnd, 2),
            '|' if two(&mut chars, '|') => (Tok::OrOr, 2),
            other => {
                return Err(Diagnostic::error(None, format!("unexpected character `{other}`")).at(span(1)));
            }
        };
        out.push(Token { tok, span: span(len) });
        col += len;
    }
    out.push(Token { tok: Tok::Eof, span: SourceSpan { line, column: col, length: 0 } });
    Ok(out)
}

/// Cursor over a token stream with the usual expect/peek helpers.
pub struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
}

pub type PResult<T> = Result<T, Diagnostic>;

impl Cursor {
    pub fn new(text: &str) -> PResult<Self> {
        Ok(Cursor { tokens: lex(text)?, pos: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    pub fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    pub fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span
    }

    pub fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    pub fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error(&self, message: impl Into<String>) -> Diagnostic {
        Diagnostic::error(None, message).at(self.span())
    }

    pub fn unexpected(&self, wanted: &str) -> Diagnostic {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    pub fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if self.at(&tok) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> PResult<SourceSpan> {
        if self.at_keyword(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    /// Hyphenated keyword such as `may-add`, lexed as three tokens.
    pub fn at_hyphenated(&self, first: &str, second: &str) -> bool {
        self.at_keyword(first)
            && self.peek_at(1) == &Tok::Minus
            && matches!(self.peek_at(2), Tok::Ident(s) if s == second)
    }

    pub fn eat_hyphenated(&mut self, first: &str, second: &str) -> Option<SourceSpan> {
        if self.at_hyphenated(first, second) {
            let span = self.bump().span;
            self.bump();
            self.bump();
            Some(span)
        } else {
            None
        }
    }

    pub fn ident(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.bump().span;
                Ok((s, span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    pub fn expect_eof(&self) -> PResult<()> {
        if self.at(&Tok::Eof) {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }
}
