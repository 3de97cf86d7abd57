//! Built-in catalog of reducible systems, their printed artifacts, and the
//! verification battery that checks a record end to end.
//!
//! Family formulas may mention free parameters, algebraic constants and
//! inverse symbols (`w` standing for `1/D`). All of these become variables of
//! the polynomial context; exact checks clear inverse symbols by multiplying
//! through by powers of `D`, and records with algebraic constants are checked
//! in BigFloat.

use std::collections::BTreeMap;
use std::time::Instant;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Deserialize;
use thiserror::Error;

use crate::calgorithm::{self, CalgError, PointValue, SysOptions, UrabeClosedForm};
use crate::exprparse::{self, parse_extended, parse_poly_in, EvalExpr, ParseError};
use crate::lienard::{
    self, check_inverse_integrating_factor, check_linearization, check_power_integral, lie_bracket, LienardError,
    PlanarField, PlanarSystem, PowerIntegral, PowerTerm, Shape,
};
use crate::numverify::{self, LinearizationOptions, NumError, NumField};
use crate::polyalg::{parse_rational, BigFloat, Context, Ctx, Poly, PolyError, Q, DEFAULT_PREC, GUARD_BITS};

const BUILTIN: &str = include_str!("../data/catalog.toml");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog data: {0}")]
    Data(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),
    #[error("{field}: {err}")]
    Parse { field: String, err: ParseError },
    #[error(transparent)]
    Lienard(#[from] LienardError),
    #[error(transparent)]
    Calg(#[from] CalgError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

type Result<T> = std::result::Result<T, CatalogError>;

fn data(msg: impl Into<String>) -> CatalogError {
    CatalogError::Data(msg.into())
}

// ---------------------------------------------------------------------------
// raw TOML

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    #[serde(default)]
    constant: Vec<RawConstant>,
    #[serde(default)]
    family: Vec<RawFamily>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstant {
    id: String,
    title: String,
    minimal_polynomial: String,
    interval: [String; 2],
    radical: Option<String>,
}

#[derive(Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct RawDegree {
    default: u32,
    min: u32,
    #[serde(default)]
    even: bool,
}

#[derive(Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct RawUrabeForm {
    k1: String,
    k2: String,
    k3: String,
    s: String,
}

#[derive(Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct RawPower {
    num: String,
    base: String,
    exponent: String,
}

#[derive(Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct RawLinearization {
    u: String,
    v: String,
    base: String,
    exponent: String,
}

#[derive(Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct RawCommuting {
    xdot: String,
    ydot: String,
    bracket_xdot: String,
    bracket_ydot: String,
}

#[derive(Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct RawNumericLinearization {
    u: String,
    v: String,
    min_abs_y: String,
}

#[derive(Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    id: String,
    #[serde(default)]
    aliases: Vec<String>,
    title: String,
    kind: String,
    params: Vec<String>,
    degree: Option<RawDegree>,
    #[serde(default)]
    defaults: BTreeMap<String, String>,
    #[serde(default)]
    constants: Vec<String>,
    #[serde(default)]
    inverses: BTreeMap<String, String>,
    #[serde(default)]
    nonzero: Vec<String>,
    #[serde(default)]
    macros: BTreeMap<String, String>,
    xdot: String,
    ydot: String,
    shape: Option<String>,
    urabe: String,
    note: Option<String>,
    urabe_form: Option<RawUrabeForm>,
    first_integral: Option<RawPower>,
    linearization: Option<RawLinearization>,
    commuting: Option<RawCommuting>,
    inverse_factor: Option<String>,
    numeric_first_integral: Option<String>,
    numeric_linearization: Option<RawNumericLinearization>,
}

// ---------------------------------------------------------------------------
// constants

/// A real algebraic number given by its minimal polynomial and an isolating interval.
#[derive(Clone, Debug)]
pub struct AlgebraicConstant {
    pub id: String,
    pub title: String,
    /// Polynomial in `s`.
    pub minimal_polynomial: Poly,
    pub interval: (Q, Q),
    pub radical: Option<EvalExpr>,
}

impl AlgebraicConstant {
    /// Bisection on the isolating interval to `prec` bits.
    pub fn value(&self, prec: u32) -> BigFloat {
        let work = prec + GUARD_BITS;
        let p = &self.minimal_polynomial;
        let sign_at = |v: &BigFloat| p.eval_float(&[Some(v.clone())], work).expect("univariate").signum();
        let mut lo = BigFloat::from_rational(&self.interval.0, work);
        let mut hi = BigFloat::from_rational(&self.interval.1, work);
        let s_lo = sign_at(&lo);
        for _ in 0..work + 8 {
            let mid = lo.add(&hi).mul_pow2(-1);
            let s = sign_at(&mid);
            if s == 0 {
                return mid.with_precision(prec);
            }
            if s == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo.add(&hi).mul_pow2(-1).with_precision(prec)
    }

    /// `|p(v)|` divided by `Σ|a_i|·|v|^i`.
    pub fn relative_residual(&self, v: &BigFloat) -> BigFloat {
        let prec = v.precision();
        let p = &self.minimal_polynomial;
        let num = p.eval_float(&[Some(v.clone())], prec).expect("univariate").abs();
        let abs_terms: Vec<_> = p.terms().iter().map(|(m, c)| (*m, c.abs())).collect();
        let scale = Poly::from_terms(p.ctx(), abs_terms).eval_float(&[Some(v.abs())], prec).expect("univariate");
        num.div(&scale)
    }

    /// Difference between the radical form and the bisection value, if a radical is given.
    pub fn radical_gap(&self, prec: u32) -> Option<BigFloat> {
        let r = self.radical.as_ref()?;
        let env = |_: &str| None;
        let v = r.eval::<BigFloat>(&env, prec).ok()?;
        Some(v.sub(&self.value(prec)).abs())
    }
}

// ---------------------------------------------------------------------------
// families

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Expected to pass its battery at the defaults.
    Isochronous,
    /// A general template; no verdict is expected.
    Template,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UrabeKind {
    Zero,
    Closed,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSpec {
    pub default: u32,
    pub min: u32,
    pub even: bool,
}

#[derive(Clone)]
pub struct Family {
    pub id: String,
    pub aliases: Vec<String>,
    pub title: String,
    pub kind: Kind,
    pub params: Vec<String>,
    pub degree: Option<DegreeSpec>,
    pub defaults: BTreeMap<String, Q>,
    pub constants: Vec<String>,
    pub urabe: UrabeKind,
    pub note: Option<String>,
    pub shape: Option<Shape>,
    raw: RawFamily,
}

impl std::fmt::Debug for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Family").field("id", &self.id).field("title", &self.title).finish()
    }
}

impl Family {
    pub fn has_attachments(&self) -> bool {
        let r = &self.raw;
        r.first_integral.is_some()
            || r.linearization.is_some()
            || r.commuting.is_some()
            || r.inverse_factor.is_some()
            || r.numeric_first_integral.is_some()
            || r.numeric_linearization.is_some()
    }

    pub fn xdot_source(&self) -> &str {
        &self.raw.xdot
    }

    pub fn ydot_source(&self) -> &str {
        &self.raw.ydot
    }

    pub fn inverse_names(&self) -> Vec<String> {
        self.raw.inverses.keys().cloned().collect()
    }

    fn check_degree(&self, n: Option<u32>) -> Result<Option<u32>> {
        match (&self.degree, n) {
            (None, None) => Ok(None),
            (None, Some(_)) => Err(CatalogError::ConstraintViolation(format!("`{}` takes no degree", self.id))),
            (Some(d), None) => Ok(Some(d.default)),
            (Some(d), Some(n)) => {
                if n < d.min {
                    return Err(CatalogError::ConstraintViolation(format!("degree {} below minimum {}", n, d.min)));
                }
                if d.even && n % 2 == 1 {
                    return Err(CatalogError::ConstraintViolation(format!("`{}` needs an even degree", self.id)));
                }
                Ok(Some(n))
            }
        }
    }
}

/// A standalone system: the family fields a user document may carry.
#[derive(Clone, Debug, Default)]
pub struct SystemDocument {
    pub shape: Option<Shape>,
    pub parameters: Vec<String>,
    pub constants: Vec<String>,
    /// Inverse symbol and the polynomial it inverts.
    pub inverses: BTreeMap<String, String>,
    pub defaults: BTreeMap<String, Q>,
    pub xdot: String,
    pub ydot: String,
}

impl Family {
    /// A template family wrapping a user document.
    pub fn from_document(id: &str, doc: &SystemDocument) -> Family {
        let raw = RawFamily {
            id: id.to_string(),
            aliases: Vec::new(),
            title: id.to_string(),
            kind: "template".into(),
            params: doc.parameters.clone(),
            degree: None,
            defaults: BTreeMap::new(),
            constants: doc.constants.clone(),
            inverses: doc.inverses.clone(),
            nonzero: Vec::new(),
            macros: BTreeMap::new(),
            xdot: doc.xdot.clone(),
            ydot: doc.ydot.clone(),
            shape: None,
            urabe: "unknown".into(),
            note: None,
            urabe_form: None,
            first_integral: None,
            linearization: None,
            commuting: None,
            inverse_factor: None,
            numeric_first_integral: None,
            numeric_linearization: None,
        };
        Family {
            id: id.to_string(),
            aliases: Vec::new(),
            title: id.to_string(),
            kind: Kind::Template,
            params: doc.parameters.clone(),
            degree: None,
            defaults: doc.defaults.clone(),
            constants: doc.constants.clone(),
            urabe: UrabeKind::Unknown,
            note: None,
            shape: doc.shape,
            raw,
        }
    }
}

/// Replace macro names by their parenthesized bodies, then `{expr}` by its value in `n`.
fn expand(text: &str, n: Option<u32>, macros: &BTreeMap<String, String>) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            match macros.get(&word) {
                Some(body) => {
                    out.push('(');
                    out.push_str(&expand(body, n, macros)?);
                    out.push(')');
                }
                None => out.push_str(&word),
            }
            continue;
        }
        if c == '{' {
            let close = chars[i..].iter().position(|&d| d == '}').ok_or_else(|| data(format!("unclosed `{{` in `{}`", text)))?;
            let inner: String = chars[i + 1..i + close].iter().collect();
            let n = n.ok_or_else(|| data(format!("`{{{}}}` needs a degree", inner)))?;
            let v = DegreeExpr::new(&inner, n).eval()?;
            if v.is_integer() && !v.is_negative() {
                out.push_str(&v.to_integer().to_string());
            } else {
                out.push('(');
                out.push_str(&crate::polyalg::format_rational(&v));
                out.push(')');
            }
            i += close + 1;
            continue;
        }
        out.push(c);
        i += 1;
    }
    Ok(out)
}

/// Rational arithmetic in `n`: integers, `n`, `+ - * /`, `^` with integer exponent, parentheses.
struct DegreeExpr<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    n: u32,
}

impl<'a> DegreeExpr<'a> {
    fn new(src: &'a str, n: u32) -> DegreeExpr<'a> {
        DegreeExpr { src, bytes: src.as_bytes(), pos: 0, n }
    }

    fn err(&self, what: &str) -> CatalogError {
        data(format!("in `{{{}}}` at column {}: {}", self.src, self.pos + 1, what))
    }

    fn skip(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos] == b' ' {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip();
        self.bytes.get(self.pos).copied()
    }

    fn eval(mut self) -> Result<Q> {
        let v = self.sum()?;
        if self.peek().is_some() {
            return Err(self.err("trailing input"));
        }
        Ok(v)
    }

    fn sum(&mut self) -> Result<Q> {
        let mut acc = self.product()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let r = self.product()?;
            acc = if op == b'+' { acc + r } else { acc - r };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<Q> {
        let mut acc = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let r = self.unary()?;
            if op == b'*' {
                acc *= r;
            } else {
                if r.is_zero() {
                    return Err(self.err("division by zero"));
                }
                acc /= r;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Q> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let e = self.atom()?;
            let e = e.to_integer().to_i32().filter(|_| e.is_integer()).ok_or_else(|| self.err("integer exponent expected"))?;
            if base.is_zero() && e < 0 {
                return Err(self.err("division by zero"));
            }
            return Ok(num_traits::pow::Pow::pow(base, e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Q> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.sum()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(b'n') => {
                self.pos += 1;
                Ok(Q::from_integer(self.n.into()))
            }
            Some(d) if d.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                Ok(parse_rational(&self.src[start..self.pos]).expect("digits"))
            }
            _ => Err(self.err("expected a number, `n` or `(`")),
        }
    }
}

fn parse_q(field: &str, text: &str) -> Result<Q> {
    let t = text.trim();
    let t = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')).unwrap_or(t);
    parse_rational(t.trim()).ok_or_else(|| data(format!("{}: `{}` is not a rational number", field, text)))
}

/// The parsed catalog.
#[derive(Clone, Debug)]
pub struct Catalog {
    pub constants: Vec<AlgebraicConstant>,
    pub families: Vec<Family>,
}

impl Catalog {
    /// The catalog shipped with the library.
    pub fn builtin() -> Result<Catalog> {
        Catalog::from_toml(BUILTIN)
    }

    pub fn from_toml(text: &str) -> Result<Catalog> {
        let raw: RawCatalog = toml::from_str(text).map_err(|e| data(e.to_string()))?;
        let sctx = Context::new(["s"])?;
        let mut constants = Vec::new();
        for c in raw.constant {
            let field = format!("constant {}", c.id);
            let minimal_polynomial = parse_poly_in(&c.minimal_polynomial, &sctx)
                .map_err(|err| CatalogError::Parse { field: field.clone(), err })?;
            let lo = parse_q(&field, &c.interval[0])?;
            let hi = parse_q(&field, &c.interval[1])?;
            let (a, b) = (minimal_polynomial.eval_rational(&[lo.clone()]), minimal_polynomial.eval_rational(&[hi.clone()]));
            if lo >= hi || a.signum() * b.signum() >= Q::zero() {
                return Err(data(format!("{}: interval does not isolate a simple root", field)));
            }
            let radical = c
                .radical
                .as_deref()
                .map(parse_extended)
                .transpose()
                .map_err(|err| CatalogError::Parse { field: field.clone(), err })?;
            constants.push(AlgebraicConstant { id: c.id, title: c.title, minimal_polynomial, interval: (lo, hi), radical });
        }
        let mut families = Vec::new();
        for f in raw.family {
            let kind = match f.kind.as_str() {
                "isochronous" => Kind::Isochronous,
                "template" => Kind::Template,
                k => return Err(data(format!("{}: unknown kind `{}`", f.id, k))),
            };
            let urabe = match f.urabe.as_str() {
                "zero" => UrabeKind::Zero,
                "closed" => UrabeKind::Closed,
                "unknown" => UrabeKind::Unknown,
                k => return Err(data(format!("{}: unknown urabe kind `{}`", f.id, k))),
            };
            if urabe == UrabeKind::Closed && f.urabe_form.is_none() {
                return Err(data(format!("{}: closed Urabe function without a form", f.id)));
            }
            let shape = match f.shape.as_deref() {
                None => None,
                Some("case1") => Some(Shape::Case1),
                Some("case2") => Some(Shape::Case2),
                Some(s) => return Err(data(format!("{}: unknown shape `{}`", f.id, s))),
            };
            let mut defaults = BTreeMap::new();
            for p in &f.params {
                let v = f.defaults.get(p).ok_or_else(|| data(format!("{}: no default for `{}`", f.id, p)))?;
                defaults.insert(p.clone(), parse_q(&f.id, v)?);
            }
            for c in &f.constants {
                if !constants.iter().any(|k: &AlgebraicConstant| &k.id == c) {
                    return Err(CatalogError::UnknownConstant(c.clone()));
                }
            }
            families.push(Family {
                id: f.id.clone(),
                aliases: f.aliases.clone(),
                title: f.title.clone(),
                kind,
                params: f.params.clone(),
                degree: f.degree.as_ref().map(|d| DegreeSpec { default: d.default, min: d.min, even: d.even }),
                defaults,
                constants: f.constants.clone(),
                urabe,
                note: f.note.clone(),
                shape,
                raw: f,
            });
        }
        let cat = Catalog { constants, families };
        // every record must instantiate at its defaults
        for f in &cat.families {
            cat.instantiate(&f.id, None, &BTreeMap::new())
                .map_err(|e| data(format!("{} does not instantiate: {}", f.id, e)))?;
        }
        Ok(cat)
    }

    pub fn family(&self, id: &str) -> Result<&Family> {
        self.families
            .iter()
            .find(|f| f.id == id || f.aliases.iter().any(|a| a == id))
            .ok_or_else(|| CatalogError::UnknownFamily(id.to_string()))
    }

    pub fn constant(&self, id: &str) -> Result<&AlgebraicConstant> {
        self.constants.iter().find(|c| c.id == id).ok_or_else(|| CatalogError::UnknownConstant(id.to_string()))
    }

    /// Instantiate `id` at degree `n`, binding the given parameters; the rest stay symbolic.
    pub fn instantiate(&self, id: &str, n: Option<u32>, bindings: &BTreeMap<String, Q>) -> Result<Instance> {
        self.instantiate_family(self.family(id)?, n, bindings)
    }

    /// As [`Catalog::instantiate`] for a family that need not be in the catalog.
    pub fn instantiate_family(&self, fam: &Family, n: Option<u32>, bindings: &BTreeMap<String, Q>) -> Result<Instance> {
        let n = fam.check_degree(n)?;
        for k in bindings.keys() {
            if !fam.params.contains(k) {
                return Err(CatalogError::ConstraintViolation(format!("`{}` is not a parameter of `{}`", k, fam.id)));
            }
        }
        let raw = &fam.raw;
        let mut names: Vec<String> = vec!["x".into(), "y".into()];
        names.extend(fam.params.iter().cloned());
        names.extend(fam.constants.iter().cloned());
        names.extend(raw.inverses.keys().cloned());
        let full = Context::new(names.clone())?;
        let parse = |field: &str, text: &str| -> Result<Poly> {
            let t = expand(text, n, &raw.macros)?;
            parse_poly_in(&t, &full).map_err(|err| CatalogError::Parse { field: format!("{}.{}", fam.id, field), err })
        };
        let field = PlanarField::new(parse("xdot", &raw.xdot)?, parse("ydot", &raw.ydot)?)?;
        let system = match fam.shape {
            Some(s) => PlanarSystem::with_shape(&field, s)?,
            None => PlanarSystem::detect(&field)?,
        };
        let system = system.specialize(bindings)?;
        let ctx = system.ctx().clone();
        let rat: Vec<Option<Q>> = full.names().iter().map(|k| bindings.get(k).cloned()).collect();
        let none = vec![None; full.len()];
        let bind = |p: Poly| -> Result<Poly> { Ok(p.substitute_exact(&rat, &none)?.to_ctx(&ctx)?) };
        let bound = |field: &str, text: &str| -> Result<Poly> { bind(parse(field, text)?) };

        let mut constants = BTreeMap::new();
        for c in &fam.constants {
            constants.insert(c.clone(), self.constant(c)?.value(DEFAULT_PREC));
        }
        let mut inverses = Vec::new();
        for (w, d) in &raw.inverses {
            inverses.push((w.clone(), bound(&format!("inverses.{}", w), d)?));
        }
        let mut nonzero = Vec::new();
        for (k, text) in raw.nonzero.iter().enumerate() {
            nonzero.push(bound(&format!("nonzero[{}]", k), text)?);
        }
        let mut inst = Instance {
            id: fam.id.clone(),
            degree: n,
            system,
            bindings: bindings.clone(),
            constants,
            inverses,
            attachments: Attachments::default(),
        };
        for (what, p) in inst.inverses.iter().map(|(w, d)| (format!("denominator of {}", w), d)).chain(nonzero.iter().map(|p| ("a nonzero constraint".to_string(), p))) {
            if inst.vanishes(p)? {
                return Err(CatalogError::ConstraintViolation(format!("{} vanishes: {} = 0", what, p)));
            }
        }

        let mut a = Attachments::default();
        if let Some(u) = &raw.urabe_form {
            let pctx = inst.system.param_ctx()?;
            let k = |field: &str, t: &str| -> Result<Poly> { Ok(bound(field, t)?.to_ctx(&pctx)?) };
            let s = parse_q("urabe_form.s", &expand(&u.s, n, &raw.macros)?)?;
            let s = s.to_integer().to_u32().filter(|_| s.is_integer()).ok_or_else(|| data("urabe_form.s must be a natural number"))?;
            a.urabe_form = Some(UrabeClosedForm { k1: k("k1", &u.k1)?, k2: k("k2", &u.k2)?, k3: k("k3", &u.k3)?, s });
        }
        if let Some(h) = &raw.first_integral {
            a.first_integral = Some(PowerIntegral {
                num: bound("first_integral.num", &h.num)?,
                base: bound("first_integral.base", &h.base)?,
                exponent: parse_q("first_integral.exponent", &expand(&h.exponent, n, &raw.macros)?)?,
            });
            a.first_integral_src = Some((expand(&h.num, n, &raw.macros)?, expand(&h.base, n, &raw.macros)?));
        }
        if let Some(l) = &raw.linearization {
            let base = bound("linearization.base", &l.base)?;
            let exponent = parse_q("linearization.exponent", &expand(&l.exponent, n, &raw.macros)?)?;
            a.linearization = Some((
                PowerTerm { poly: bound("linearization.u", &l.u)?, base: base.clone(), exponent: exponent.clone() },
                PowerTerm { poly: bound("linearization.v", &l.v)?, base, exponent },
            ));
            a.linearization_src = Some((
                expand(&l.u, n, &raw.macros)?,
                expand(&l.v, n, &raw.macros)?,
                expand(&l.base, n, &raw.macros)?,
            ));
        }
        if let Some(c) = &raw.commuting {
            a.commuting = Some((
                PlanarField::new(bound("commuting.xdot", &c.xdot)?, bound("commuting.ydot", &c.ydot)?)?,
                PlanarField::new(bound("commuting.bracket_xdot", &c.bracket_xdot)?, bound("commuting.bracket_ydot", &c.bracket_ydot)?)?,
            ));
        }
        if let Some(v) = &raw.inverse_factor {
            a.inverse_factor = Some(bound("inverse_factor", v)?);
        }
        let ext = |field: &str, t: &str| -> Result<EvalExpr> {
            parse_extended(&expand(t, n, &raw.macros)?).map_err(|err| CatalogError::Parse { field: format!("{}.{}", fam.id, field), err })
        };
        if let Some(h) = &raw.numeric_first_integral {
            a.numeric_first_integral = Some(ext("numeric_first_integral", h)?);
        }
        if let Some(l) = &raw.numeric_linearization {
            let min_abs_y = parse_rational(l.min_abs_y.trim())
                .and_then(|q| q.to_f64())
                .or_else(|| l.min_abs_y.trim().parse::<f64>().ok())
                .ok_or_else(|| data("numeric_linearization.min_abs_y is not a number"))?;
            a.numeric_linearization = Some((ext("numeric_linearization.u", &l.u)?, ext("numeric_linearization.v", &l.v)?, min_abs_y));
        }
        inst.attachments = a;
        Ok(inst)
    }

    /// Instantiate with every parameter bound: `bindings` first, then the defaults.
    pub fn instantiate_at_defaults(&self, id: &str, n: Option<u32>, bindings: &BTreeMap<String, Q>) -> Result<Instance> {
        self.instantiate_family_at_defaults(self.family(id)?, n, bindings)
    }

    pub fn instantiate_family_at_defaults(&self, fam: &Family, n: Option<u32>, bindings: &BTreeMap<String, Q>) -> Result<Instance> {
        let mut all = fam.defaults.clone();
        for (k, v) in bindings {
            all.insert(k.clone(), v.clone());
        }
        self.instantiate_family(fam, n, &all)
    }
}

/// Printed artifacts, parsed over the instance context.
#[derive(Clone, Debug, Default)]
pub struct Attachments {
    pub urabe_form: Option<UrabeClosedForm>,
    pub first_integral: Option<PowerIntegral>,
    first_integral_src: Option<(String, String)>,
    pub linearization: Option<(PowerTerm, PowerTerm)>,
    linearization_src: Option<(String, String, String)>,
    /// The commuting field and the expected bracket.
    pub commuting: Option<(PlanarField, PlanarField)>,
    pub inverse_factor: Option<Poly>,
    pub numeric_first_integral: Option<EvalExpr>,
    pub numeric_linearization: Option<(EvalExpr, EvalExpr, f64)>,
}

/// A catalog record at a degree and (partial) parameter point.
#[derive(Clone, Debug)]
pub struct Instance {
    pub id: String,
    pub degree: Option<u32>,
    /// Over `[x, y, unbound params, constants, inverse symbols]`.
    pub system: PlanarSystem,
    pub bindings: BTreeMap<String, Q>,
    pub constants: BTreeMap<String, BigFloat>,
    /// Inverse symbol and its denominator, over the system context.
    pub inverses: Vec<(String, Poly)>,
    pub attachments: Attachments,
}

/// Value of a zero-Urabe check.
#[derive(Clone, Debug)]
pub enum ZeroUrabeOutcome {
    /// Cleared conditions, exact; empty when the identity holds.
    Exact(Vec<Poly>),
    /// Largest absolute residual at the bound point.
    Float(BigFloat),
}

impl Instance {
    pub fn ctx(&self) -> &Ctx {
        self.system.ctx()
    }

    pub fn field(&self) -> Result<PlanarField> {
        Ok(self.system.field()?)
    }

    /// Parameters that are still symbolic.
    pub fn free_params(&self) -> Vec<String> {
        self.system
            .params()
            .into_iter()
            .filter(|p| !self.constants.contains_key(p) && !self.inverses.iter().any(|(w, _)| w == p))
            .collect()
    }

    fn float_env(&self, prec: u32) -> Result<Vec<Option<BigFloat>>> {
        let names = self.ctx().names().to_vec();
        let mut vals: Vec<Option<BigFloat>> = names.iter().map(|n| self.constants.get(n).map(|v| v.with_precision(prec))).collect();
        for (w, d) in &self.inverses {
            let dv = d.eval_float(&vals, prec).map_err(|_| CatalogError::ConstraintViolation(format!("parameters of the denominator of {} are unbound", w)))?;
            let i = self.ctx().index(w).expect("inverse symbol in context");
            vals[i] = Some(BigFloat::one(prec).checked_div(&dv).ok_or_else(|| CatalogError::ConstraintViolation(format!("denominator of {} vanishes", w)))?);
        }
        Ok(vals)
    }

    /// True if `p` (free of x, y) is zero at the bound point, or identically zero when symbolic.
    fn vanishes(&self, p: &Poly) -> Result<bool> {
        if p.is_zero() {
            return Ok(true);
        }
        let free = self.free_params();
        let vars = p.variables();
        if vars.iter().any(|v| free.contains(v) || self.inverses.iter().any(|(w, _)| w == v)) {
            return Ok(false);
        }
        if vars.is_empty() {
            return Ok(false);
        }
        let vals: Vec<Option<BigFloat>> = self.ctx().names().iter().map(|n| self.constants.get(n).cloned()).collect();
        let v = p.eval_float(&vals, DEFAULT_PREC)?;
        Ok(v.abs().cmp_value(&BigFloat::from_i64(10, DEFAULT_PREC).powi(-60).expect("nonzero")).is_lt())
    }

    /// `D^k·p(w = 1/D)` for each inverse symbol, so the result is free of inverse symbols.
    pub fn clear_inverses(&self, p: &Poly) -> Result<Poly> {
        let mut p = p.clone();
        for (w, d) in &self.inverses {
            let Some(i) = p.ctx().index(w) else { continue };
            let d = d.to_ctx(p.ctx())?;
            let cs = p.coefficients_in(i);
            let k = cs.len().saturating_sub(1) as u32;
            let mut acc = Poly::zero(p.ctx());
            for (j, c) in cs.iter().enumerate() {
                if !c.is_zero() {
                    acc = acc.add(&c.mul(&d.pow(k - j as u32)?)?)?;
                }
            }
            p = acc;
        }
        Ok(p)
    }

    /// The zero-Urabe identity: exact when no algebraic constants occur, BigFloat otherwise.
    pub fn zero_urabe_check(&self) -> Result<ZeroUrabeOutcome> {
        let conds = self.system.zero_urabe_conditions()?;
        if self.constants.is_empty() {
            let mut left = Vec::new();
            for c in &conds {
                let r = self.clear_inverses(&c.to_ctx(self.ctx())?)?;
                if !r.is_zero() {
                    left.push(r);
                }
            }
            return Ok(ZeroUrabeOutcome::Exact(left));
        }
        let vals = self.float_env(DEFAULT_PREC)?;
        let mut worst = BigFloat::zero(DEFAULT_PREC);
        for c in &conds {
            let v = c.to_ctx(self.ctx())?.eval_float(&vals, DEFAULT_PREC).map_err(|_| {
                CatalogError::ConstraintViolation(format!("bind all parameters of `{}` for a numeric check", self.id))
            })?;
            if v.abs().cmp_value(&worst).is_gt() {
                worst = v.abs();
            }
        }
        Ok(ZeroUrabeOutcome::Float(worst))
    }

    /// Values for every non-field symbol; all parameters must be bound.
    pub fn point(&self) -> Result<BTreeMap<String, PointValue>> {
        let free = self.free_params();
        if let Some(p) = free.first() {
            return Err(CatalogError::ConstraintViolation(format!("parameter `{}` is unbound", p)));
        }
        let vals = self.float_env(DEFAULT_PREC)?;
        let mut out = BTreeMap::new();
        for (k, v) in self.constants.iter() {
            out.insert(k.clone(), PointValue::Float(v.clone()));
        }
        for (w, d) in &self.inverses {
            let pv = match d.as_constant() {
                Some(q) => PointValue::Rational(Q::one() / q),
                None => PointValue::Float(vals[self.ctx().index(w).expect("inverse in context")].clone().expect("evaluated")),
            };
            out.insert(w.clone(), pv);
        }
        Ok(out)
    }

    /// f64 values for every non-field symbol.
    pub fn float_point(&self) -> Result<BTreeMap<String, f64>> {
        let mut out: BTreeMap<String, f64> = self.bindings.iter().map(|(k, v)| (k.clone(), v.to_f64().unwrap_or(f64::NAN))).collect();
        for (k, v) in self.point()? {
            let f = match v {
                PointValue::Rational(q) => q.to_f64().unwrap_or(f64::NAN),
                PointValue::Float(b) => b.to_f64(),
            };
            out.insert(k, f);
        }
        Ok(out)
    }

    pub fn num_field(&self) -> Result<NumField> {
        Ok(NumField::new(&self.field()?, &self.float_point()?)?)
    }
}

// ---------------------------------------------------------------------------
// battery

#[derive(Clone, Debug)]
pub struct BatteryOptions {
    /// Order `m` for the candidate check.
    pub order: usize,
    pub urabe_order: usize,
    pub amplitudes: Vec<f64>,
    pub tol: f64,
    pub spread_threshold: f64,
    pub numeric: bool,
    pub deadline: Option<Instant>,
}

impl Default for BatteryOptions {
    fn default() -> BatteryOptions {
        BatteryOptions {
            order: 6,
            urabe_order: 20,
            amplitudes: numverify::default_amplitudes(),
            tol: numverify::DEFAULT_TOL,
            spread_threshold: 1e-6,
            numeric: true,
            deadline: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub residual: Option<f64>,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, residual: Option<f64>, detail: impl Into<String>) -> Check {
        Check { name: name.to_string(), pass, residual, detail: detail.into() }
    }
}

#[derive(Clone, Debug)]
pub struct BatteryReport {
    pub id: String,
    pub degree: Option<u32>,
    pub bindings: BTreeMap<String, Q>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl BatteryReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn fmt_f(v: f64) -> String {
    format!("{:.3e}", v)
}

/// Run every check that applies to the record at the given point.
pub fn verification_battery(
    cat: &Catalog,
    id: &str,
    n: Option<u32>,
    bindings: &BTreeMap<String, Q>,
    opts: &BatteryOptions,
) -> Result<BatteryReport> {
    family_battery(cat, cat.family(id)?, n, bindings, opts)
}

/// The battery for any family; parameters without defaults must be bound.
pub fn family_battery(
    cat: &Catalog,
    fam: &Family,
    n: Option<u32>,
    bindings: &BTreeMap<String, Q>,
    opts: &BatteryOptions,
) -> Result<BatteryReport> {
    let inst = cat.instantiate_family_at_defaults(fam, n, bindings)?;
    let mut checks = Vec::new();

    if fam.urabe == UrabeKind::Zero {
        // identically in the free parameters where the coefficients are rational
        let target = if fam.constants.is_empty() { cat.instantiate_family(fam, n, &BTreeMap::new())? } else { inst.clone() };
        checks.push(match target.zero_urabe_check()? {
            ZeroUrabeOutcome::Exact(left) => {
                let scope = if target.free_params().is_empty() { "at the point".to_string() } else { format!("identically in {}", target.free_params().join(", ")) };
                if left.is_empty() {
                    Check::new("zero-urabe", true, Some(0.0), format!("exact, {}", scope))
                } else {
                    Check::new("zero-urabe", false, None, format!("{} nonzero cleared coefficients, first {}", left.len(), left[0]))
                }
            }
            ZeroUrabeOutcome::Float(r) => {
                let pass = r.cmp_value(&calgorithm::float_threshold()).is_lt();
                Check::new("zero-urabe", pass, Some(r.to_f64()), format!("max residual {}", r.to_decimal_string(6)))
            }
        });
    }

    let sys_opts = SysOptions { deadline: opts.deadline, ..SysOptions::default() };
    let rep = calgorithm::verify_candidate(&inst.system, &inst.point()?, opts.order, &sys_opts)?;
    let worst = rep.residuals.iter().map(|(_, r)| r.to_f64().abs()).fold(0.0, f64::max);
    let first_bad = rep.residuals.iter().find(|(_, r)| !r.is_negligible(&calgorithm::float_threshold()));
    let detail = match first_bad {
        None => format!("all {} conditions vanish", rep.residuals.len()),
        Some((i, r)) => format!("condition at index {} is {}", i, r),
    };
    checks.push(Check::new(&format!("candidate(m={})", opts.order), rep.pass, Some(worst), detail));

    let field = inst.field()?;
    if let Some(h) = &inst.attachments.urabe_form {
        let l = lienard::reduce_to_lienard(&inst.system)?;
        let ok = calgorithm::urabe_series_check(&l, h, opts.urabe_order)?;
        checks.push(Check::new("urabe-closed-form", ok, None, format!("series identity to order {}", opts.urabe_order)));
    }

    // exact artifact checks, symbolic in the parameters when possible
    let sym = if fam.constants.is_empty() && inst.inverses.is_empty() { cat.instantiate_family(fam, n, &BTreeMap::new())? } else { inst.clone() };
    let sym_field = sym.field()?;
    let scope = if sym.free_params().is_empty() { "at the point".to_string() } else { format!("symbolic in {}", sym.free_params().join(", ")) };
    if let Some(h) = &sym.attachments.first_integral {
        let ok = check_power_integral(h, &sym_field)?;
        checks.push(Check::new("first-integral", ok, None, format!("exact, {}", scope)));
    }
    if let Some((u, v)) = &sym.attachments.linearization {
        let ok = check_linearization(u, v, &sym_field)?;
        checks.push(Check::new("linearization", ok, None, format!("exact, {}", scope)));
    }
    if let Some((y, expected)) = &sym.attachments.commuting {
        let got = lie_bracket(&sym_field, y)?;
        let ok = got == *expected;
        checks.push(Check::new("commuting-field", ok, None, format!("bracket = ({}, {})", got.xdot, got.ydot)));
    }
    if let Some(v) = &sym.attachments.inverse_factor {
        let ok = check_inverse_integrating_factor(v, &sym_field)?;
        checks.push(Check::new("inverse-integrating-factor", ok, None, format!("exact, {}", scope)));
    }

    if opts.numeric {
        numeric_checks(&inst, &field, opts, &mut checks)?;
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(BatteryReport { id: fam.id.clone(), degree: inst.degree, bindings: inst.bindings.clone(), checks, pass })
}

fn numeric_checks(inst: &Instance, field: &PlanarField, opts: &BatteryOptions, checks: &mut Vec<Check>) -> Result<()> {
    let point = inst.float_point()?;
    let nf = NumField::new(field, &point)?;
    let extra: Vec<(String, f64)> = point.iter().map(|(k, v)| (k.clone(), *v)).collect();
    let x0 = [0.2, 0.0];
    let orbit_span = 2.0 * std::f64::consts::PI;

    let mut integrals: Vec<(String, EvalExpr)> = Vec::new();
    if let Some((num, base)) = &inst.attachments.first_integral_src {
        let e = inst.attachments.first_integral.as_ref().expect("parsed with its source").exponent.clone();
        let b = parse_extended(base).map_err(|err| CatalogError::Parse { field: "first_integral.base".into(), err })?;
        let sign = if b.eval_xy(x0[0], x0[1], &extra).unwrap_or(1.0) < 0.0 { "-" } else { "" };
        let text = format!("({})/({}({}))^({}/{})", num, sign, base, e.numer(), e.denom());
        let h = parse_extended(&text).map_err(|err| CatalogError::Parse { field: "first_integral".into(), err })?;
        integrals.push(("first-integral-drift".into(), h));
    }
    if let Some(h) = &inst.attachments.numeric_first_integral {
        integrals.push(("numeric-first-integral-drift".into(), h.clone()));
    }
    if !integrals.is_empty() {
        let orbit = numverify::integrate_orbit(&nf, x0, opts.tol, orbit_span)?;
        for (name, h) in integrals {
            checks.push(match numverify::integral_drift(&orbit, &h, &extra) {
                Ok(d) => Check::new(&name, d < 1e-8, Some(d), format!("relative drift {} from (0.2, 0)", fmt_f(d))),
                Err(e) => Check::new(&name, false, None, e.to_string()),
            });
        }
    }

    let mut lins: Vec<(String, EvalExpr, EvalExpr, f64)> = Vec::new();
    if let (Some((u, v, base)), Some((pu, _))) = (&inst.attachments.linearization_src, &inst.attachments.linearization) {
        let e = &pu.exponent;
        let mk = |m: &str| parse_extended(&format!("({})*({})^({}/{})", m, base, e.numer(), e.denom()));
        let (u, v) = (mk(u), mk(v));
        if let (Ok(u), Ok(v)) = (u, v) {
            lins.push(("linearization-numeric".into(), u, v, 0.0));
        }
    }
    if let Some((u, v, min_abs_y)) = &inst.attachments.numeric_linearization {
        lins.push(("numeric-linearization".into(), u.clone(), v.clone(), *min_abs_y));
    }
    for (name, u, v, min_abs_y) in lins {
        let lo = LinearizationOptions { min_abs_y, extra: extra.clone(), ..LinearizationOptions::default() };
        checks.push(match numverify::numeric_linearization_check(&nf, &u, &v, [0.3, 0.0], &lo) {
            Ok(r) => Check::new(
                &name,
                r.pass,
                Some(r.max_u_residual.max(r.max_v_residual).max(r.radius_drift)),
                format!("{} samples used, {} skipped", r.used, r.skipped),
            ),
            Err(e) => Check::new(&name, false, None, e.to_string()),
        });
    }

    checks.push(scan_inside_annulus(&nf, opts));
    Ok(())
}

/// Halvings tried when an orbit leaves the period annulus.
const MAX_SHRINK: u32 = 4;

/// Isochronicity scan, halving the amplitudes while some orbit fails to return.
fn scan_inside_annulus(nf: &NumField, opts: &BatteryOptions) -> Check {
    let mut last_err = String::new();
    for k in 0..=MAX_SHRINK {
        let scale = 0.5f64.powi(k as i32);
        let amps: Vec<f64> = opts.amplitudes.iter().map(|a| a * scale).collect();
        match numverify::isochronicity_scan(nf, &amps, opts.tol) {
            Ok(s) => {
                let scaled = if k == 0 { String::new() } else { format!(", amplitudes scaled by 1/{}", 1u32 << k) };
                return Check::new(
                    "isochronicity-scan",
                    s.spread < opts.spread_threshold,
                    Some(s.spread),
                    format!("period spread {} over {} amplitudes{}", fmt_f(s.spread), s.periods.len(), scaled),
                );
            }
            Err(e @ (NumError::BlowUp(_) | NumError::StepSizeUnderflow(_) | NumError::NoReturnDetected(_))) => {
                last_err = e.to_string();
            }
            Err(e) => return Check::new("isochronicity-scan", false, None, e.to_string()),
        }
    }
    Check::new("isochronicity-scan", false, None, last_err)
}

/// Batteries for several records in parallel, in input order.
pub fn run_batteries(cat: &Catalog, ids: &[String], opts: &BatteryOptions) -> Vec<(String, Result<BatteryReport>)> {
    std::thread::scope(|sc| {
        let handles: Vec<_> = ids
            .iter()
            .map(|id| {
                let id = id.clone();
                sc.spawn(move || {
                    let r = verification_battery(cat, &id, None, &BTreeMap::new(), opts);
                    (id, r)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("battery worker panicked")).collect()
    })
}

/// Context over which catalog formulas with parameters `params` are parsed.
pub fn formula_context(params: &[String]) -> Result<Ctx> {
    exprparse::field_context(params).map_err(|err| CatalogError::Parse { field: "parameters".into(), err })
}
