//! Minimal s-expression reader shared by the signature, term, trace and
//! stats-dump formats. Atoms are maximal runs of non-delimiter characters;
//! `;` starts a comment running to end of line.

use std::fmt;

/// Source position, 1-based. `line == 0` means "no position" (programmatic
/// construction); `Display` then renders as empty so error messages stay clean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }

    pub fn is_known(&self) -> bool {
        self.line > 0
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_known() {
            write!(f, "line {}, column {}: ", self.line, self.col)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Atom(..) => None,
        }
    }
}

/// Lexical/structural error with the offending position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, msg: impl Into<String>) -> Self {
        Self { pos, msg: msg.into() }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.pos, self.msg)
    }
}

impl std::error::Error for SyntaxError {}

/// Parse a whole document into its top-level s-expressions.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>, SyntaxError> {
    let mut lexer = Lexer::new(text);
    let mut forms = Vec::new();
    while let Some(tok) = lexer.next_token()? {
        forms.push(parse_form(tok, &mut lexer)?);
    }
    Ok(forms)
}

/// Parse exactly one s-expression; trailing input is an error.
pub fn parse_one(text: &str) -> Result<SExpr, SyntaxError> {
    let mut lexer = Lexer::new(text);
    let first = lexer
        .next_token()?
        .ok_or_else(|| SyntaxError::new(Pos::new(1, 1), "expected an s-expression, found end of input"))?;
    let form = parse_form(first, &mut lexer)?;
    if let Some(extra) = lexer.next_token()? {
        return Err(SyntaxError::new(extra.pos, "unexpected trailing input after s-expression"));
    }
    Ok(form)
}

fn parse_form(tok: Token, lexer: &mut Lexer) -> Result<SExpr, SyntaxError> {
    match tok.kind {
        TokenKind::Atom(s) => Ok(SExpr::Atom(s, tok.pos)),
        TokenKind::Close => Err(SyntaxError::new(tok.pos, "unexpected `)`")),
        TokenKind::Open => {
            let mut items = Vec::new();
            loop {
                let next = lexer
                    .next_token()?
                    .ok_or_else(|| SyntaxError::new(tok.pos, "unclosed `(`"))?;
                if matches!(next.kind, TokenKind::Close) {
                    return Ok(SExpr::List(items, tok.pos));
                }
                items.push(parse_form(next, lexer)?);
            }
        }
    }
}

struct Token {
    kind: TokenKind,
    pos: Pos,
}

enum TokenKind {
    Open,
    Close,
    Atom(String),
}

struct Lexer<'a> {
    chars: std::str::Chars<'a>,
    peeked: Option<char>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self { chars: text.chars(), peeked: None, line: 1, col: 1 }
    }

    fn peek(&mut self) -> Option<char> {
        if self.peeked.is_none() {
            self.peeked = self.chars.next();
        }
        self.peeked
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peeked.take().or_else(|| self.chars.next());
        match c {
            Some('\n') => {
                self.line += 1;
                self.col = 1;
            }
            Some(_) => self.col += 1,
            None => {}
        }
        c
    }

    fn next_token(&mut self) -> Result<Option<Token>, SyntaxError> {
        loop {
            match self.peek() {
                None => return Ok(None),
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some(';') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some('(') => {
                    let pos = Pos::new(self.line, self.col);
                    self.bump();
                    return Ok(Some(Token { kind: TokenKind::Open, pos }));
                }
                Some(')') => {
                    let pos = Pos::new(self.line, self.col);
                    self.bump();
                    return Ok(Some(Token { kind: TokenKind::Close, pos }));
                }
                Some(_) => {
                    let pos = Pos::new(self.line, self.col);
                    let mut atom = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                            break;
                        }
                        atom.push(c);
                        self.bump();
                    }
                    return Ok(Some(Token { kind: TokenKind::Atom(atom), pos }));
                }
            }
        }
    }
}
