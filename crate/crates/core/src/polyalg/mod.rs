//! Exact arithmetic foundation: rationals, bigfloats, sparse polynomials.

pub mod bigfloat;
pub mod mono;
pub mod poly;

pub use bigfloat::{BigFloat, DEFAULT_PREC, GUARD_BITS};
pub use mono::{monomial_compare, Mono, MonoOrder};
pub use poly::{linear_combination, sum_of_products, Binding, Context, Ctx, Poly, Substituted, WeightMap, WeightedDegree};

use thiserror::Error;

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type Q = num_rational::BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("polynomials live in different variable contexts")]
    VariableContextMismatch,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}` in context")]
    DuplicateVariable(String),
    #[error("too many variables ({0}); at most 16 are supported")]
    TooManyVariables(usize),
    #[error("exponent overflow (exponents are limited to 255)")]
    ExponentOverflow,
    #[error("exponent vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("zero polynomial has no primitive part")]
    ZeroPolynomial,
    #[error("no weight for variable `{0}`")]
    MissingWeight(String),
    #[error("variable `{0}` is unbound in numeric substitution")]
    UnboundVariableInNumericMode(String),
}

/// Parse a rational written `p`, `-p` or `p/q`.
pub fn parse_rational(s: &str) -> Option<Q> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: num_bigint::BigInt = n.parse().ok()?;
    let d: num_bigint::BigInt = d.parse().ok()?;
    if num_traits::Zero::is_zero(&d) {
        return None;
    }
    Some(Q::new(n, d))
}

/// `p` or `p/q` text for a rational.
pub fn format_rational(q: &Q) -> String {
    if num_traits::One::is_one(q.denom()) {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}
