use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Tok {
    Ident(String),
    Int(usize),
    Float(f64),
    Dot,
    Comma,
    Colon,
    Eq,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Amp,
    Pipe,
    Tilde,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Float(x) => write!(f, "`{x}`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Amp => write!(f, "`&`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Tilde => write!(f, "`~`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub(super) struct Sp {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(super) fn lex(src: &str) -> Result<Vec<Sp>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = src.chars().peekable();
    macro_rules! push {
        ($t:expr, $c:expr) => {
            out.push(Sp { tok: $t, line, col: $c })
        };
    }
    while let Some(&c) = chars.peek() {
        let start_col = col;
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
            }
            '%' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(Tok::Ident(s), start_col);
            }
            '0'..='9' => {
                let mut s = String::new();
                let mut is_float = false;
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else if c == '.' {
                        // A digit must follow for this to be a fraction;
                        // otherwise the dot terminates a statement.
                        let mut ahead = chars.clone();
                        ahead.next();
                        match ahead.peek() {
                            Some(d) if d.is_ascii_digit() => {
                                s.push('.');
                                is_float = true;
                                chars.next();
                                col += 1;
                            }
                            _ => break,
                        }
                    } else {
                        break;
                    }
                }
                if is_float {
                    let v = s.parse::<f64>().map_err(|_| ParseError {
                        line,
                        col: start_col,
                        message: format!("invalid number `{s}`"),
                    })?;
                    push!(Tok::Float(v), start_col);
                } else {
                    let v = s.parse::<usize>().map_err(|_| ParseError {
                        line,
                        col: start_col,
                        message: format!("invalid integer `{s}`"),
                    })?;
                    push!(Tok::Int(v), start_col);
                }
            }
            _ => {
                chars.next();
                let tok = match c {
                    '.' => Tok::Dot,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '=' => Tok::Eq,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '&' => Tok::Amp,
                    '|' => Tok::Pipe,
                    '~' => Tok::Tilde,
                    _ => {
                        return Err(ParseError {
                            line,
                            col: start_col,
                            message: format!("unexpected character `{c}`"),
                        })
                    }
                };
                col += 1;
                push!(tok, start_col);
            }
        }
    }
    out.push(Sp { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Shared cursor over a token stream.
pub(super) struct Cursor {
    toks: Vec<Sp>,
    pos: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Sp>) -> Self {
        Cursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn loc(&self) -> (usize, usize) {
        let sp = &self.toks[self.pos];
        (sp.line, sp.col)
    }

    pub fn rewind(&mut self, pos: usize) {
        self.pos = pos;
    }

    pub fn err(&self, message: impl Into<String>) -> ParseError {
        let sp = &self.toks[self.pos];
        ParseError { line: sp.line, col: sp.col, message: message.into() }
    }

    pub fn expect(&mut self, want: &Tok) -> Result<(), ParseError> {
        if self.peek() == want {
            self.next();
            Ok(())
        } else {
            Err(self.err(format!("expected {want}, found {}", self.peek())))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => Err(self.err(format!("expected identifier, found {other}"))),
        }
    }

    pub fn eat_ident(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(s) if s == kw) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn at_ident(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }
}
