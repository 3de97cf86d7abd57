//! Extended grammar: closed-form expressions evaluated numerically.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::lexer::{self, Cursor, Tok};
use super::{parse_int, ErrorKind, ParseError};
use crate::polyalg::{BigFloat, Q};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(Q),
    Name(String),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    /// Real power `base^(p/q)` with `q > 0` and `gcd(p, q) = 1`.
    Pow(Box<Node>, i64, u32),
    Sqrt(Box<Node>),
    Tan(Box<Node>),
    Atan(Box<Node>),
}

/// Parsed closed-form expression; never simplified, only evaluated.
#[derive(Clone, Debug)]
pub struct EvalExpr {
    source: String,
    root: Node,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    /// Pole or branch point: division by zero, even root of a negative, tan pole, overflow.
    Domain(String),
    UnboundName(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Domain(s) => write!(f, "domain error: {}", s),
            EvalError::UnboundName(s) => write!(f, "unbound name `{}`", s),
        }
    }
}

impl std::error::Error for EvalError {}

/// Number types the evaluator runs on.
pub trait Scalar: Clone {
    type Prec: Copy;
    fn from_q(q: &Q, prec: Self::Prec) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Option<Self>;
    fn neg(&self) -> Self;
    /// Real `n`-th root; `None` on even roots of negatives.
    fn root(&self, n: u32) -> Option<Self>;
    fn powi(&self, n: i64) -> Option<Self>;
    fn tan(&self) -> Option<Self>;
    fn atan(&self) -> Self;
    fn is_finite(&self) -> bool;
}

impl Scalar for f64 {
    type Prec = ();
    fn from_q(q: &Q, _: ()) -> f64 {
        q.to_f64().unwrap_or(f64::NAN)
    }
    fn add(&self, o: &f64) -> f64 {
        self + o
    }
    fn sub(&self, o: &f64) -> f64 {
        self - o
    }
    fn mul(&self, o: &f64) -> f64 {
        self * o
    }
    fn div(&self, o: &f64) -> Option<f64> {
        if *o == 0.0 {
            None
        } else {
            Some(self / o)
        }
    }
    fn neg(&self) -> f64 {
        -self
    }
    fn root(&self, n: u32) -> Option<f64> {
        match n {
            0 => None,
            1 => Some(*self),
            2 => (*self >= 0.0).then(|| self.sqrt()),
            3 => Some(self.cbrt()),
            _ if *self < 0.0 && n % 2 == 0 => None,
            _ if *self < 0.0 => Some(-(-self).powf(1.0 / n as f64)),
            _ => Some(self.powf(1.0 / n as f64)),
        }
    }
    fn powi(&self, n: i64) -> Option<f64> {
        if n < 0 && *self == 0.0 {
            return None;
        }
        Some(f64::powi(*self, n as i32))
    }
    fn tan(&self) -> Option<f64> {
        let c = self.cos();
        if c == 0.0 {
            None
        } else {
            Some(self.sin() / c)
        }
    }
    fn atan(&self) -> f64 {
        f64::atan(*self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Scalar for BigFloat {
    type Prec = u32;
    fn from_q(q: &Q, prec: u32) -> BigFloat {
        BigFloat::from_rational(q, prec)
    }
    fn add(&self, o: &BigFloat) -> BigFloat {
        BigFloat::add(self, o)
    }
    fn sub(&self, o: &BigFloat) -> BigFloat {
        BigFloat::sub(self, o)
    }
    fn mul(&self, o: &BigFloat) -> BigFloat {
        BigFloat::mul(self, o)
    }
    fn div(&self, o: &BigFloat) -> Option<BigFloat> {
        self.checked_div(o)
    }
    fn neg(&self) -> BigFloat {
        BigFloat::neg(self)
    }
    fn root(&self, n: u32) -> Option<BigFloat> {
        self.nth_root(n)
    }
    fn powi(&self, n: i64) -> Option<BigFloat> {
        BigFloat::powi(self, n)
    }
    fn tan(&self) -> Option<BigFloat> {
        BigFloat::tan(self)
    }
    fn atan(&self) -> BigFloat {
        BigFloat::atan(self)
    }
    fn is_finite(&self) -> bool {
        true
    }
}

impl EvalExpr {
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Names referenced by the expression, sorted and deduplicated.
    pub fn names(&self) -> Vec<String> {
        fn walk(n: &Node, out: &mut Vec<String>) {
            match n {
                Node::Num(_) => {}
                Node::Name(s) => out.push(s.clone()),
                Node::Neg(a) | Node::Pow(a, _, _) | Node::Sqrt(a) | Node::Tan(a) | Node::Atan(a) => walk(a, out),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Evaluate with names resolved by `env`; never returns a non-finite value.
    pub fn eval<T: Scalar>(&self, env: &dyn Fn(&str) -> Option<T>, prec: T::Prec) -> Result<T, EvalError> {
        eval_node(&self.root, env, prec)
    }

    /// Double-precision evaluation at `(x, y)` with extra named values.
    pub fn eval_xy(&self, x: f64, y: f64, extra: &[(String, f64)]) -> Result<f64, EvalError> {
        let env = |n: &str| match n {
            "x" => Some(x),
            "y" => Some(y),
            _ => extra.iter().find(|(k, _)| k == n).map(|(_, v)| *v),
        };
        self.eval(&env, ())
    }
}

fn domain(what: &str) -> EvalError {
    EvalError::Domain(what.to_string())
}

fn eval_node<T: Scalar>(n: &Node, env: &dyn Fn(&str) -> Option<T>, prec: T::Prec) -> Result<T, EvalError> {
    let r = match n {
        Node::Num(q) => T::from_q(q, prec),
        Node::Name(s) => env(s).ok_or_else(|| EvalError::UnboundName(s.clone()))?,
        Node::Neg(a) => eval_node(a, env, prec)?.neg(),
        Node::Add(a, b) => eval_node(a, env, prec)?.add(&eval_node(b, env, prec)?),
        Node::Sub(a, b) => eval_node(a, env, prec)?.sub(&eval_node(b, env, prec)?),
        Node::Mul(a, b) => eval_node(a, env, prec)?.mul(&eval_node(b, env, prec)?),
        Node::Div(a, b) => {
            let (a, b) = (eval_node(a, env, prec)?, eval_node(b, env, prec)?);
            a.div(&b).ok_or_else(|| domain("division by zero"))?
        }
        Node::Pow(a, p, q) => {
            let base = eval_node(a, env, prec)?;
            let r = base.root(*q).ok_or_else(|| domain("even root of a negative number"))?;
            r.powi(*p).ok_or_else(|| domain("negative power of zero"))?
        }
        Node::Sqrt(a) => eval_node(a, env, prec)?.root(2).ok_or_else(|| domain("sqrt of a negative number"))?,
        Node::Tan(a) => eval_node(a, env, prec)?.tan().ok_or_else(|| domain("tan pole"))?,
        Node::Atan(a) => eval_node(a, env, prec)?.atan(),
    };
    if !r.is_finite() {
        return Err(domain("non-finite intermediate value"));
    }
    Ok(r)
}

/// Parse the extended grammar.
pub fn parse_extended(text: &str) -> Result<EvalExpr, ParseError> {
    let mut cur = Cursor::new(lexer::tokenize(text)?);
    let root = sum(&mut cur)?;
    if cur.peek().tok != Tok::End {
        return Err(cur.unexpected("expected an operator or end of input"));
    }
    Ok(EvalExpr { source: text.to_string(), root })
}

fn sum(cur: &mut Cursor) -> Result<Node, ParseError> {
    let mut acc = product(cur)?;
    loop {
        if cur.eat(&Tok::Plus) {
            acc = Node::Add(Box::new(acc), Box::new(product(cur)?));
        } else if cur.eat(&Tok::Minus) {
            acc = Node::Sub(Box::new(acc), Box::new(product(cur)?));
        } else {
            return Ok(acc);
        }
    }
}

fn product(cur: &mut Cursor) -> Result<Node, ParseError> {
    let mut acc = unary(cur)?;
    loop {
        if cur.eat(&Tok::Star) {
            acc = Node::Mul(Box::new(acc), Box::new(unary(cur)?));
        } else if cur.eat(&Tok::Slash) {
            acc = Node::Div(Box::new(acc), Box::new(unary(cur)?));
        } else {
            return Ok(acc);
        }
    }
}

fn unary(cur: &mut Cursor) -> Result<Node, ParseError> {
    if cur.eat(&Tok::Minus) {
        return Ok(Node::Neg(Box::new(unary(cur)?)));
    }
    if cur.eat(&Tok::Plus) {
        return unary(cur);
    }
    power(cur)
}

fn power(cur: &mut Cursor) -> Result<Node, ParseError> {
    let base = primary(cur)?;
    if !cur.eat(&Tok::Caret) {
        return Ok(base);
    }
    let (p, q) = exponent(cur)?;
    Ok(Node::Pow(Box::new(base), p, q))
}

fn malformed(t: &lexer::Token, msg: &str) -> ParseError {
    ParseError::new(ErrorKind::MalformedRationalExponent, t.line, t.col, msg)
}

fn small_int(t: &lexer::Token, s: &str) -> Result<i64, ParseError> {
    parse_int(s).to_i64().filter(|v| *v <= 1 << 20).ok_or_else(|| malformed(t, "exponent too large"))
}

/// `n`, `-n`, `(n)`, `(-n)`, `(p/q)` or `(-p/q)`.
fn exponent(cur: &mut Cursor) -> Result<(i64, u32), ParseError> {
    let paren = cur.eat(&Tok::LParen);
    let neg = cur.eat(&Tok::Minus);
    let t = cur.peek().clone();
    let p = match &t.tok {
        Tok::Int(s) => {
            cur.next();
            small_int(&t, s)?
        }
        Tok::Decimal(_) => return Err(malformed(&t, "exponent must be an integer or p/q")),
        _ => return Err(malformed(&t, "expected an integer or p/q exponent")),
    };
    let mut q = 1i64;
    if paren {
        if cur.eat(&Tok::Slash) {
            let d = cur.peek().clone();
            q = match &d.tok {
                Tok::Int(s) => {
                    cur.next();
                    small_int(&d, s)?
                }
                _ => return Err(malformed(&d, "expected an integer denominator")),
            };
            if q == 0 {
                return Err(malformed(&d, "zero denominator in exponent"));
            }
        }
        let close = cur.peek().clone();
        if !cur.eat(&Tok::RParen) {
            return Err(malformed(&close, "rational exponents are written (p/q)"));
        }
    }
    let g = num_integer::gcd(p, q).max(1);
    let (p, q) = (p / g, q / g);
    Ok((if neg { -p } else { p }, q as u32))
}

fn decimal_to_q(s: &str) -> Q {
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().unwrap_or(0)),
        None => (s, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let digits = format!("{}{}", int, frac);
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().unwrap() };
    let scale = exp - frac.len() as i64;
    let ten = BigInt::from(10);
    if scale >= 0 {
        Q::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Q::new(n, num_traits::pow(ten, (-scale) as usize))
    }
}

fn primary(cur: &mut Cursor) -> Result<Node, ParseError> {
    let t = cur.peek().clone();
    match &t.tok {
        Tok::Int(s) => {
            cur.next();
            Ok(Node::Num(Q::from_integer(parse_int(s))))
        }
        Tok::Decimal(s) => {
            cur.next();
            Ok(Node::Num(decimal_to_q(s)))
        }
        Tok::Name(n) => {
            cur.next();
            let func = match n.as_str() {
                "sqrt" => Some(Node::Sqrt as fn(Box<Node>) -> Node),
                "tan" => Some(Node::Tan as fn(Box<Node>) -> Node),
                "arctan" | "atan" => Some(Node::Atan as fn(Box<Node>) -> Node),
                _ => None,
            };
            match func {
                Some(f) => {
                    cur.expect(&Tok::LParen)?;
                    let arg = sum(cur)?;
                    cur.expect(&Tok::RParen)?;
                    Ok(f(Box::new(arg)))
                }
                None => {
                    if cur.peek().tok == Tok::LParen {
                        return Err(ParseError::new(ErrorKind::Syntax, t.line, t.col, format!("unknown function `{}`", n)));
                    }
                    Ok(Node::Name(n.clone()))
                }
            }
        }
        Tok::LParen => {
            cur.next();
            let e = sum(cur)?;
            cur.expect(&Tok::RParen)?;
            Ok(e)
        }
        _ => Err(cur.unexpected("expected a number, a name, a function or `(`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(e: &str, x: f64, y: f64) -> Result<f64, EvalError> {
        parse_extended(e).unwrap().eval_xy(x, y, &[])
    }

    #[test]
    fn closed_forms() {
        assert!((at("x^2 + y^2/(1+y)^2", 1.0, 1.0).unwrap() - 1.25).abs() < 1e-15);
        assert_eq!(at("sqrt(1+0)", 0.3, -2.0).unwrap(), 1.0);
        assert!(matches!(at("y/(1+y)", 0.0, -1.0), Err(EvalError::Domain(_))));
        assert!(matches!(at("(x)^(1/2)", -1.0, 0.0), Err(EvalError::Domain(_))));
        assert!((at("x^(1/3)", -8.0, 0.0).unwrap() + 2.0).abs() < 1e-12);
        assert!((at("x^(-2/3)", 8.0, 0.0).unwrap() - 0.25).abs() < 1e-12);
        assert!((at("arctan(1)*4 - tan(0.5) + tan(0.5)", 0.0, 0.0).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert!(matches!(at("a + x", 0.0, 0.0), Err(EvalError::UnboundName(_))));
    }

    #[test]
    fn decimals_are_exact_rationals() {
        let e = parse_extended("0.1 + 2.5e-1").unwrap();
        let v: BigFloat = e.eval(&|_| None, 128).unwrap();
        assert_eq!(v, BigFloat::from_rational(&Q::new(7.into(), 20.into()), 128));
    }

    #[test]
    fn exponent_errors() {
        for bad in ["x^(1/0)", "x^(a/2)", "x^1.5", "x^(1/2"] {
            let e = parse_extended(bad).unwrap_err();
            assert_eq!(e.kind, ErrorKind::MalformedRationalExponent, "{}", bad);
        }
        assert_eq!(parse_extended("foo(x)").unwrap_err().kind, ErrorKind::Syntax);
    }

    #[test]
    fn bigfloat_radicals() {
        let e = parse_extended("(22868 + 468*sqrt(3297))^(1/3)").unwrap();
        let v: BigFloat = e.eval(&|_| None, 256).unwrap();
        assert!((v.to_f64() - 36.776_428_803_97).abs() < 1e-9);
    }
}
