//! Tokenizer shared by both grammars; every token carries a 1-based line:column.

use super::{ErrorKind, ParseError};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Int(String),
    Decimal(String),
    Name(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(s) | Tok::Decimal(s) => format!("number `{}`", s),
        Tok::Name(s) => format!("name `{}`", s),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::End => "end of input".into(),
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            out.push(Token { tok: t, line: tl, col: tc });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut decimal = false;
            if i < chars.len() && chars[i] == '.' {
                decimal = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    decimal = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            if i < chars.len() && (chars[i].is_alphabetic() || chars[i] == '_') {
                return Err(ParseError::new(
                    ErrorKind::Syntax,
                    line,
                    col + (i - start),
                    "implicit multiplication is not supported; write `*`",
                ));
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: if decimal { Tok::Decimal(s) } else { Tok::Int(s) }, line: tl, col: tc });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Name(s), line: tl, col: tc });
            continue;
        }
        return Err(ParseError::new(ErrorKind::Syntax, tl, tc, format!("unexpected character `{}`", c)));
    }
    out.push(Token { tok: Tok::End, line, col });
    Ok(out)
}

/// Cursor over a token list.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Token>) -> Cursor {
        Cursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    pub fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if &self.peek().tok == t {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: &Tok) -> Result<Token, ParseError> {
        let got = self.peek().clone();
        if &got.tok == t {
            Ok(self.next())
        } else {
            Err(self.unexpected(&format!("expected {}", describe(t))))
        }
    }

    pub fn unexpected(&self, what: &str) -> ParseError {
        let t = self.peek();
        ParseError::new(ErrorKind::Syntax, t.line, t.col, format!("{}, found {}", what, describe(&t.tok)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("x +\n  b20^2").unwrap();
        assert_eq!((t[0].line, t[0].col), (1, 1));
        assert_eq!((t[1].line, t[1].col), (1, 3));
        assert_eq!(t[2].tok, Tok::Name("b20".into()));
        assert_eq!((t[2].line, t[2].col), (2, 3));
    }

    #[test]
    fn implicit_multiplication_rejected() {
        let e = tokenize("2x").unwrap_err();
        assert_eq!((e.line, e.col), (1, 2));
    }

    #[test]
    fn decimals() {
        let t = tokenize("1.25 + .5 + 3e-2").unwrap();
        assert_eq!(t[0].tok, Tok::Decimal("1.25".into()));
        assert_eq!(t[2].tok, Tok::Decimal(".5".into()));
        assert_eq!(t[4].tok, Tok::Decimal("3e-2".into()));
    }
}
