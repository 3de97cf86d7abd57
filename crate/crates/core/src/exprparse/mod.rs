//! Parsers for the two expression grammars.
//!
//! The polynomial grammar builds exact [`Poly`] values for system definitions.
//! The extended grammar adds division, rational powers, `sqrt`, `tan` and
//! `arctan`, and only ever evaluates numerically. The EBNF for both lives in
//! `docs/grammar.md`.

mod extended;
mod lexer;

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::polyalg::{Context, Ctx, Poly, Q};
use lexer::{Cursor, Tok};

pub use extended::{parse_extended, EvalError, EvalExpr, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    UnknownVariable,
    NegativeExponent,
    MalformedRationalExponent,
}

/// Parse failure with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(kind: ErrorKind, line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError { kind, line, col, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Source text together with its parsed polynomial.
#[derive(Clone, Debug)]
pub struct PolyExpr {
    pub source: String,
    pub parsed: Poly,
}

impl PolyExpr {
    pub fn parse(text: &str, ctx: &Ctx) -> Result<PolyExpr, ParseError> {
        Ok(PolyExpr { source: text.to_string(), parsed: parse_poly_in(text, ctx)? })
    }
}

/// The standard context: `x`, `y`, then the parameters in the given order.
pub fn field_context(params: &[String]) -> Result<Ctx, ParseError> {
    let mut names = vec!["x".to_string(), "y".to_string()];
    names.extend(params.iter().cloned());
    Context::new(names).map_err(|e| ParseError::new(ErrorKind::Syntax, 1, 1, e.to_string()))
}

/// Parse a polynomial in `x`, `y` and the declared parameters.
pub fn parse_poly(text: &str, params: &[String]) -> Result<Poly, ParseError> {
    parse_poly_in(text, &field_context(params)?)
}

/// Parse a polynomial over an explicit variable context.
pub fn parse_poly_in(text: &str, ctx: &Ctx) -> Result<Poly, ParseError> {
    let mut cur = Cursor::new(lexer::tokenize(text)?);
    let p = PolyParser { ctx }.sum(&mut cur)?;
    if cur.peek().tok != Tok::End {
        return Err(cur.unexpected("expected an operator or end of input"));
    }
    Ok(p)
}

pub(crate) fn parse_int(s: &str) -> BigInt {
    s.parse().expect("lexer yields digit strings")
}

struct PolyParser<'a> {
    ctx: &'a Ctx,
}

impl PolyParser<'_> {
    fn wrap(&self, e: crate::polyalg::PolyError, line: usize, col: usize) -> ParseError {
        ParseError::new(ErrorKind::Syntax, line, col, e.to_string())
    }

    fn sum(&self, cur: &mut Cursor) -> Result<Poly, ParseError> {
        let mut acc = self.product(cur)?;
        loop {
            let t = cur.peek().clone();
            let neg = match t.tok {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => return Ok(acc),
            };
            cur.next();
            let rhs = self.product(cur)?;
            acc = if neg { acc.sub(&rhs) } else { acc.add(&rhs) }.map_err(|e| self.wrap(e, t.line, t.col))?;
        }
    }

    fn product(&self, cur: &mut Cursor) -> Result<Poly, ParseError> {
        let mut acc = self.unary(cur)?;
        loop {
            let t = cur.peek().clone();
            match t.tok {
                Tok::Star => {
                    cur.next();
                    let rhs = self.unary(cur)?;
                    acc = acc.mul(&rhs).map_err(|e| self.wrap(e, t.line, t.col))?;
                }
                Tok::Slash => {
                    cur.next();
                    let d = cur.peek().clone();
                    let den = match &d.tok {
                        Tok::Int(s) => {
                            cur.next();
                            parse_int(s)
                        }
                        Tok::Decimal(_) => {
                            return Err(ParseError::new(
                                ErrorKind::Syntax,
                                d.line,
                                d.col,
                                "decimal literals are not allowed in polynomials",
                            ))
                        }
                        _ => return Err(cur.unexpected("division is only by an integer literal")),
                    };
                    if den.is_zero() {
                        return Err(ParseError::new(ErrorKind::Syntax, d.line, d.col, "division by zero"));
                    }
                    acc = acc.scale(&Q::new(1.into(), den));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&self, cur: &mut Cursor) -> Result<Poly, ParseError> {
        if cur.eat(&Tok::Minus) {
            return Ok(self.unary(cur)?.neg());
        }
        if cur.eat(&Tok::Plus) {
            return self.unary(cur);
        }
        self.power(cur)
    }

    fn power(&self, cur: &mut Cursor) -> Result<Poly, ParseError> {
        let base = self.primary(cur)?;
        let t = cur.peek().clone();
        if !cur.eat(&Tok::Caret) {
            return Ok(base);
        }
        let e = self.exponent(cur)?;
        base.pow(e).map_err(|err| self.wrap(err, t.line, t.col))
    }

    fn exponent(&self, cur: &mut Cursor) -> Result<u32, ParseError> {
        let paren = cur.eat(&Tok::LParen);
        let t = cur.peek().clone();
        let e = match &t.tok {
            Tok::Int(s) => {
                cur.next();
                let v = parse_int(s);
                if v > BigInt::from(255) {
                    return Err(ParseError::new(ErrorKind::Syntax, t.line, t.col, "exponent too large"));
                }
                u32::try_from(v).expect("bounded above")
            }
            Tok::Minus => {
                return Err(ParseError::new(
                    ErrorKind::NegativeExponent,
                    t.line,
                    t.col,
                    "negative exponents are not polynomial",
                ))
            }
            _ => return Err(cur.unexpected("expected a nonnegative integer exponent")),
        };
        if paren {
            cur.expect(&Tok::RParen)?;
        }
        Ok(e)
    }

    fn primary(&self, cur: &mut Cursor) -> Result<Poly, ParseError> {
        let t = cur.peek().clone();
        match &t.tok {
            Tok::Int(s) => {
                cur.next();
                Ok(Poly::constant(self.ctx, Q::from_integer(parse_int(s))))
            }
            Tok::Decimal(_) => Err(ParseError::new(
                ErrorKind::Syntax,
                t.line,
                t.col,
                "decimal literals are not allowed in polynomials",
            )),
            Tok::Name(n) => {
                cur.next();
                if cur.peek().tok == Tok::LParen {
                    return Err(ParseError::new(
                        ErrorKind::Syntax,
                        t.line,
                        t.col,
                        format!("function `{}` is not part of the polynomial grammar", n),
                    ));
                }
                Poly::var(self.ctx, n).map_err(|_| {
                    ParseError::new(ErrorKind::UnknownVariable, t.line, t.col, format!("unknown variable `{}`", n))
                })
            }
            Tok::LParen => {
                cur.next();
                let p = self.sum(cur)?;
                cur.expect(&Tok::RParen)?;
                Ok(p)
            }
            _ => Err(cur.unexpected("expected a number, a name or `(`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::Mono;

    fn params(p: &[&str]) -> Vec<String> {
        p.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn basic_polynomials() {
        let p = parse_poly("x^2 + 2*x*y", &[]).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.coeff(Mono::from_exps(&[1, 1]).unwrap()), Q::from_integer(2.into()));
        let p = parse_poly("-y + a*x*y", &params(&["a"])).unwrap();
        assert_eq!(p.coeff(Mono::from_exps(&[0, 1, 0]).unwrap()), Q::from_integer((-1).into()));
        assert_eq!(p.coeff(Mono::from_exps(&[1, 1, 1]).unwrap()), Q::from_integer(1.into()));
    }

    #[test]
    fn rejections() {
        let e = parse_poly("x^(-1)", &[]).unwrap_err();
        assert_eq!(e.kind, ErrorKind::NegativeExponent);
        assert_eq!((e.line, e.col), (1, 4));
        let e = parse_poly("x + z", &[]).unwrap_err();
        assert_eq!(e.kind, ErrorKind::UnknownVariable);
        assert_eq!(e.col, 5);
        assert_eq!(parse_poly("1.5*x", &[]).unwrap_err().kind, ErrorKind::Syntax);
        assert_eq!(parse_poly("2x", &[]).unwrap_err().kind, ErrorKind::Syntax);
        assert_eq!(parse_poly("x/y", &[]).unwrap_err().kind, ErrorKind::Syntax);
        assert_eq!(parse_poly("x/0", &[]).unwrap_err().kind, ErrorKind::Syntax);
        assert_eq!(parse_poly("(x", &[]).unwrap_err().kind, ErrorKind::Syntax);
        assert_eq!(parse_poly("x y", &[]).unwrap_err().kind, ErrorKind::Syntax);
        let e = parse_poly("x +\n  * y", &[]).unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
    }

    #[test]
    fn rational_literals_are_exact() {
        let p = parse_poly("3/2*x - x/4", &[]).unwrap();
        assert_eq!(p.to_string(), "5/4*x");
    }

    #[test]
    fn print_round_trip() {
        let ps = params(&["a", "b20"]);
        let p = parse_poly("-(1 - a*x^3)*(x + b20*x^4)/7 + 3/5*y^2*b20", &ps).unwrap();
        let q = parse_poly(&p.to_string(), &ps).unwrap();
        assert_eq!(p, q);
    }
}
