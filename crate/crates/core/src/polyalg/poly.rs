//! Sparse multivariate polynomials over ℚ with a frozen variable context.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rustc_hash::FxHashMap;

use super::bigfloat::BigFloat;
use super::mono::{Mono, MonoOrder, MAX_VARS};
use super::{PolyError, Q};

/// Ordered variable names shared by every polynomial built on it.
#[derive(Debug, PartialEq, Eq)]
pub struct Context {
    names: Vec<String>,
}

pub type Ctx = Arc<Context>;

impl Context {
    pub fn new<I, S>(names: I) -> Result<Ctx, PolyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > MAX_VARS {
            return Err(PolyError::TooManyVariables(names.len()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(PolyError::DuplicateVariable(n.clone()));
            }
        }
        Ok(Arc::new(Context { names }))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

fn same_ctx(a: &Ctx, b: &Ctx) -> bool {
    Arc::ptr_eq(a, b) || a.names == b.names
}

/// Polynomial with rational coefficients; terms sorted by packed monomial, no zeros.
#[derive(Clone, Debug)]
pub struct Poly {
    ctx: Ctx,
    terms: Vec<(Mono, Q)>,
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        same_ctx(&self.ctx, &other.ctx) && self.terms == other.terms
    }
}

impl Eq for Poly {}

/// Weight per variable name, for weighted-degree queries.
pub type WeightMap = BTreeMap<String, i64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeightedDegree {
    Zero,
    Homogeneous(i64),
    Mixed { min: i64, max: i64 },
}

impl WeightedDegree {
    pub fn is_homogeneous(&self) -> bool {
        !matches!(self, WeightedDegree::Mixed { .. })
    }
}

/// Value bound to a variable in [`Poly::substitute`].
#[derive(Clone, Debug)]
pub enum Binding {
    Rational(Q),
    Poly(Poly),
    Float(BigFloat),
}

#[derive(Clone, Debug)]
pub enum Substituted {
    Poly(Poly),
    Float(BigFloat),
}

impl Poly {
    pub fn zero(ctx: &Ctx) -> Poly {
        Poly { ctx: ctx.clone(), terms: Vec::new() }
    }

    pub fn constant(ctx: &Ctx, c: Q) -> Poly {
        let mut p = Poly::zero(ctx);
        if !c.is_zero() {
            p.terms.push((Mono::ONE, c));
        }
        p
    }

    pub fn one(ctx: &Ctx) -> Poly {
        Poly::constant(ctx, Q::one())
    }

    pub fn from_int(ctx: &Ctx, c: i64) -> Poly {
        Poly::constant(ctx, Q::from_integer(c.into()))
    }

    pub fn var(ctx: &Ctx, name: &str) -> Result<Poly, PolyError> {
        let i = ctx.index(name).ok_or_else(|| PolyError::UnknownVariable(name.to_string()))?;
        Ok(Poly { ctx: ctx.clone(), terms: vec![(Mono::var(i, 1)?, Q::one())] })
    }

    pub fn monomial(ctx: &Ctx, m: Mono, c: Q) -> Poly {
        let mut p = Poly::zero(ctx);
        if !c.is_zero() {
            p.terms.push((m, c));
        }
        p
    }

    /// Build from unsorted terms, merging duplicates and dropping zeros.
    pub fn from_terms(ctx: &Ctx, mut terms: Vec<(Mono, Q)>) -> Poly {
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Mono, Q)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == m => last.1 += c,
                _ => out.push((m, c)),
            }
        }
        out.retain(|t| !t.1.is_zero());
        Poly { ctx: ctx.clone(), terms: out }
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn terms(&self) -> &[(Mono, Q)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.0.is_one())
    }

    /// The value if the polynomial is a constant.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.as_slice() {
            [] => Some(Q::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn constant_term(&self) -> Q {
        match self.terms.first() {
            Some((m, c)) if m.is_one() => c.clone(),
            _ => Q::zero(),
        }
    }

    pub fn coeff(&self, m: Mono) -> Q {
        match self.terms.binary_search_by(|t| t.0.cmp(&m)) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => Q::zero(),
        }
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.iter().map(|t| t.0.degree()).max()
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.iter().map(|t| t.0.exp(var)).max().unwrap_or(0)
    }

    fn check_ctx(&self, other: &Poly) -> Result<(), PolyError> {
        if same_ctx(&self.ctx, &other.ctx) {
            Ok(())
        } else {
            Err(PolyError::VariableContextMismatch)
        }
    }

    fn merge(&self, other: &Poly, sign: bool) -> Poly {
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    let c = if sign { -&b[j].1 } else { b[j].1.clone() };
                    out.push((b[j].0, c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if sign { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                    if !c.is_zero() {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Poly { ctx: self.ctx.clone(), terms: out }
    }

    pub fn add(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_ctx(other)?;
        Ok(self.merge(other, false))
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_ctx(other)?;
        Ok(self.merge(other, true))
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_ctx(other)?;
        sum_of_products(&self.ctx, &[(self, other)])
    }

    pub fn neg(&self) -> Poly {
        Poly {
            ctx: self.ctx.clone(),
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }

    pub fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero(&self.ctx);
        }
        Poly {
            ctx: self.ctx.clone(),
            terms: self.terms.iter().map(|(m, c)| (*m, c * k)).collect(),
        }
    }

    pub fn mul_mono(&self, m: Mono) -> Result<Poly, PolyError> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (t, c) in &self.terms {
            terms.push((t.mul(m)?, c.clone()));
        }
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Poly { ctx: self.ctx.clone(), terms })
    }

    pub fn pow(&self, e: u32) -> Result<Poly, PolyError> {
        let mut result = Poly::one(&self.ctx);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    pub fn differentiate(&self, var: &str) -> Result<Poly, PolyError> {
        let i = self.ctx.index(var).ok_or_else(|| PolyError::UnknownVariable(var.to_string()))?;
        Ok(self.differentiate_index(i))
    }

    pub fn differentiate_index(&self, i: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.exp(i) > 0)
            .map(|(m, c)| {
                let e = m.exp(i);
                (m.with_exp(i, e - 1), c * Q::from_integer(e.into()))
            })
            .collect();
        Poly::from_terms(&self.ctx, terms)
    }

    /// Coefficients of powers of variable `i`: `self = Σ_k out[k]·v^k`.
    pub fn coefficients_in(&self, i: usize) -> Vec<Poly> {
        let d = self.degree_in(i) as usize;
        let mut buckets: Vec<Vec<(Mono, Q)>> = vec![Vec::new(); d + 1];
        for (m, c) in &self.terms {
            buckets[m.exp(i) as usize].push((m.with_exp(i, 0), c.clone()));
        }
        buckets.into_iter().map(|t| Poly::from_terms(&self.ctx, t)).collect()
    }

    /// Rebuild from coefficients of variable `i`.
    pub fn from_coefficients(ctx: &Ctx, i: usize, coeffs: &[Poly]) -> Result<Poly, PolyError> {
        let mut terms = Vec::new();
        for (k, p) in coeffs.iter().enumerate() {
            let vk = Mono::var(i, k as u32)?;
            for (m, c) in &p.terms {
                if m.exp(i) != 0 {
                    return Err(PolyError::VariableContextMismatch);
                }
                terms.push((m.mul(vk)?, c.clone()));
            }
        }
        Ok(Poly::from_terms(ctx, terms))
    }

    /// Same polynomial over another context, matching variables by name.
    pub fn to_ctx(&self, target: &Ctx) -> Result<Poly, PolyError> {
        if same_ctx(&self.ctx, target) {
            return Ok(Poly { ctx: target.clone(), terms: self.terms.clone() });
        }
        let n = self.ctx.len();
        let mut map = vec![None; n];
        for (i, name) in self.ctx.names.iter().enumerate() {
            map[i] = target.index(name);
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut out = Mono::ONE;
            for (i, slot) in map.iter().enumerate() {
                let e = m.exp(i);
                if e == 0 {
                    continue;
                }
                let j = slot.ok_or_else(|| PolyError::UnknownVariable(self.ctx.names[i].clone()))?;
                out = out.with_exp(j, e);
            }
            terms.push((out, c.clone()));
        }
        Ok(Poly::from_terms(target, terms))
    }

    /// Names of variables that occur with a positive exponent.
    pub fn variables(&self) -> Vec<String> {
        (0..self.ctx.len())
            .filter(|&i| self.terms.iter().any(|t| t.0.exp(i) > 0))
            .map(|i| self.ctx.names[i].clone())
            .collect()
    }

    pub fn leading(&self, order: MonoOrder) -> Option<&(Mono, Q)> {
        let n = self.ctx.len();
        self.terms.iter().max_by(|a, b| a.0.cmp_order(b.0, order, n))
    }

    /// Terms in descending `order`.
    pub fn sorted_terms(&self, order: MonoOrder) -> Vec<(Mono, Q)> {
        let n = self.ctx.len();
        let mut t = self.terms.clone();
        t.sort_by(|a, b| b.0.cmp_order(a.0, order, n));
        t
    }

    /// Integer polynomial with content 1 and positive DRL-leading coefficient.
    pub fn primitive_part(&self) -> Result<Poly, PolyError> {
        if self.is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        let mut den = BigInt::one();
        let mut num = BigInt::zero();
        for (_, c) in &self.terms {
            den = den.lcm(c.denom());
            num = num.gcd(c.numer());
        }
        let lead_neg = self.leading(MonoOrder::Drl).map(|t| t.1.is_negative()).unwrap_or(false);
        let mut k = Q::new(den, num);
        if lead_neg {
            k = -k;
        }
        Ok(self.scale(&k))
    }

    pub fn weighted_degree(&self, w: &WeightMap) -> Result<WeightedDegree, PolyError> {
        let n = self.ctx.len();
        let mut weights = vec![0i64; n];
        for i in 0..n {
            if self.terms.iter().any(|t| t.0.exp(i) > 0) {
                weights[i] = *w
                    .get(&self.ctx.names[i])
                    .ok_or_else(|| PolyError::MissingWeight(self.ctx.names[i].clone()))?;
            }
        }
        let mut range: Option<(i64, i64)> = None;
        for (m, _) in &self.terms {
            let d: i64 = (0..n).map(|i| weights[i] * m.exp(i) as i64).sum();
            range = Some(match range {
                None => (d, d),
                Some((lo, hi)) => (lo.min(d), hi.max(d)),
            });
        }
        Ok(match range {
            None => WeightedDegree::Zero,
            Some((lo, hi)) if lo == hi => WeightedDegree::Homogeneous(lo),
            Some((lo, hi)) => WeightedDegree::Mixed { min: lo, max: hi },
        })
    }

    /// Substitute bindings; any BigFloat binding switches to numeric mode,
    /// which then requires every occurring variable to be bound.
    pub fn substitute(&self, bindings: &BTreeMap<String, Binding>) -> Result<Substituted, PolyError> {
        let numeric = bindings.values().any(|b| matches!(b, Binding::Float(_)));
        if numeric {
            let prec = bindings
                .values()
                .filter_map(|b| match b {
                    Binding::Float(f) => Some(f.precision()),
                    _ => None,
                })
                .max()
                .unwrap_or(super::bigfloat::DEFAULT_PREC);
            let mut vals: Vec<Option<BigFloat>> = Vec::with_capacity(self.ctx.len());
            for name in &self.ctx.names {
                vals.push(match bindings.get(name) {
                    Some(Binding::Float(f)) => Some(f.clone()),
                    Some(Binding::Rational(q)) => Some(BigFloat::from_rational(q, prec)),
                    Some(Binding::Poly(p)) => match p.as_constant() {
                        Some(q) => Some(BigFloat::from_rational(&q, prec)),
                        None => return Err(PolyError::UnboundVariableInNumericMode(name.clone())),
                    },
                    None => None,
                });
            }
            return self.eval_float(&vals, prec).map(Substituted::Float);
        }
        let n = self.ctx.len();
        let mut rat: Vec<Option<Q>> = vec![None; n];
        let mut sym: Vec<Option<Poly>> = vec![None; n];
        for (i, name) in self.ctx.names.iter().enumerate() {
            match bindings.get(name) {
                Some(Binding::Rational(q)) => rat[i] = Some(q.clone()),
                Some(Binding::Poly(p)) => {
                    self.check_ctx(p)?;
                    match p.as_constant() {
                        Some(q) => rat[i] = Some(q),
                        None => sym[i] = Some(p.clone()),
                    }
                }
                _ => {}
            }
        }
        Ok(Substituted::Poly(self.substitute_exact(&rat, &sym)?))
    }

    /// Exact substitution by position; `rat[i]` takes precedence over `sym[i]`.
    pub fn substitute_exact(&self, rat: &[Option<Q>], sym: &[Option<Poly>]) -> Result<Poly, PolyError> {
        let n = self.ctx.len();
        let mut rat_pows: Vec<Vec<Q>> = vec![Vec::new(); n];
        let mut sym_pows: Vec<Vec<Poly>> = vec![Vec::new(); n];
        let mut plain: Vec<(Mono, Q)> = Vec::new();
        let mut symbolic: BTreeMap<Mono, Vec<(Mono, Q)>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut coef = c.clone();
            let mut rest = Mono::ONE;
            let mut subs = Mono::ONE;
            for i in 0..n {
                let e = m.exp(i) as usize;
                if e == 0 {
                    continue;
                }
                if let Some(q) = rat.get(i).and_then(|r| r.as_ref()) {
                    let pw = &mut rat_pows[i];
                    if pw.is_empty() {
                        pw.push(Q::one());
                    }
                    while pw.len() <= e {
                        let next = pw.last().unwrap() * q;
                        pw.push(next);
                    }
                    coef *= &pw[e];
                } else if sym.get(i).and_then(|s| s.as_ref()).is_some() {
                    subs = subs.with_exp(i, e as u32);
                } else {
                    rest = rest.with_exp(i, e as u32);
                }
            }
            if coef.is_zero() {
                continue;
            }
            if subs.is_one() {
                plain.push((rest, coef));
            } else {
                symbolic.entry(subs).or_default().push((rest, coef));
            }
        }
        let mut result = Poly::from_terms(&self.ctx, plain);
        for (subs, rest_terms) in symbolic {
            let mut factor = Poly::one(&self.ctx);
            for i in 0..n {
                let e = subs.exp(i) as usize;
                if e == 0 {
                    continue;
                }
                let base = sym[i].as_ref().unwrap();
                let pw = &mut sym_pows[i];
                if pw.is_empty() {
                    pw.push(Poly::one(&self.ctx));
                }
                while pw.len() <= e {
                    let next = pw.last().unwrap().mul(base)?;
                    pw.push(next);
                }
                factor = factor.mul(&pw[e])?;
            }
            let rest = Poly::from_terms(&self.ctx, rest_terms);
            result = result.add(&rest.mul(&factor)?)?;
        }
        Ok(result)
    }

    pub fn eval_rational(&self, vals: &[Q]) -> Q {
        let mut total = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, v) in vals.iter().enumerate() {
                let e = m.exp(i);
                if e > 0 {
                    t *= num_traits::pow(v.clone(), e as usize);
                }
            }
            total += t;
        }
        total
    }

    /// Numeric evaluation; `vals[i]` may be absent only for variables that do not occur.
    pub fn eval_float(&self, vals: &[Option<BigFloat>], prec: u32) -> Result<BigFloat, PolyError> {
        let mut total = BigFloat::zero(prec);
        let mut pows: Vec<Vec<BigFloat>> = vec![Vec::new(); self.ctx.len()];
        for (m, c) in &self.terms {
            let mut t = BigFloat::from_rational(c, prec);
            for i in 0..self.ctx.len() {
                let e = m.exp(i) as usize;
                if e == 0 {
                    continue;
                }
                let v = vals
                    .get(i)
                    .and_then(|v| v.as_ref())
                    .ok_or_else(|| PolyError::UnboundVariableInNumericMode(self.ctx.names[i].clone()))?;
                let pw = &mut pows[i];
                if pw.is_empty() {
                    pw.push(BigFloat::one(prec));
                }
                while pw.len() <= e {
                    let next = pw.last().unwrap().mul(v);
                    pw.push(next);
                }
                t = t.mul(&pw[e]);
            }
            total = total.add(&t);
        }
        Ok(total)
    }

    pub fn eval_f64(&self, vals: &[f64]) -> f64 {
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for (i, v) in vals.iter().enumerate() {
                let e = m.exp(i);
                if e > 0 {
                    t *= v.powi(e as i32);
                }
            }
            total += t;
        }
        total
    }

    /// Largest absolute coefficient as f64 (for diagnostics).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|t| t.1.abs().to_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
    }

    pub(crate) fn from_sorted_unchecked(ctx: &Ctx, terms: Vec<(Mono, Q)>) -> Poly {
        Poly { ctx: ctx.clone(), terms }
    }
}

/// Common-denominator integer view of a polynomial.
struct IntView {
    den: BigInt,
    small: Option<Vec<(u128, i64)>>,
    big: Vec<(u128, BigInt)>,
    max_abs: f64,
    degree: u32,
}

fn int_view(p: &Poly) -> IntView {
    let mut den = BigInt::one();
    for (_, c) in &p.terms {
        if !c.denom().is_one() {
            den = den.lcm(c.denom());
        }
    }
    let mut big = Vec::with_capacity(p.terms.len());
    let mut small = Some(Vec::with_capacity(p.terms.len()));
    let mut max_abs: f64 = 0.0;
    for (m, c) in &p.terms {
        let n = if c.denom() == &den { c.numer().clone() } else { c.numer() * (&den / c.denom()) };
        match (&mut small, n.to_i64()) {
            (Some(s), Some(v)) => {
                s.push((m.0, v));
                max_abs = max_abs.max((v as f64).abs());
            }
            _ => small = None,
        }
        big.push((m.0, n));
    }
    if small.is_none() {
        max_abs = f64::INFINITY;
    }
    IntView { den, small, big, max_abs, degree: p.total_degree().unwrap_or(0) }
}

/// Σ pᵢ·qᵢ in one accumulation pass; the hot kernel behind series products.
pub fn sum_of_products(ctx: &Ctx, pairs: &[(&Poly, &Poly)]) -> Result<Poly, PolyError> {
    let pairs: Vec<(&Poly, &Poly)> = pairs.iter().copied().filter(|(a, b)| !a.is_zero() && !b.is_zero()).collect();
    for (a, b) in &pairs {
        if !same_ctx(ctx, &a.ctx) || !same_ctx(ctx, &b.ctx) {
            return Err(PolyError::VariableContextMismatch);
        }
    }
    if pairs.is_empty() {
        return Ok(Poly::zero(ctx));
    }
    if pairs.len() == 1 && (pairs[0].0.len() == 1 || pairs[0].1.len() == 1) {
        let (a, b) = pairs[0];
        let (single, other) = if a.len() == 1 { (a, b) } else { (b, a) };
        let (m, c) = &single.terms[0];
        let mut p = other.mul_mono(*m)?;
        if !c.is_one() {
            p = p.scale(c);
        }
        return Ok(p);
    }
    let views: Vec<(IntView, IntView)> = pairs.iter().map(|(a, b)| (int_view(a), int_view(b))).collect();
    for (va, vb) in &views {
        if va.degree + vb.degree > super::mono::MAX_EXP {
            // Per-variable overflow is impossible below this bound; above it, check exactly.
            for (ma, _) in &va.big {
                for (mb, _) in &vb.big {
                    Mono(*ma).mul(Mono(*mb))?;
                }
            }
        }
    }
    let mut den = BigInt::one();
    let mut pair_dens = Vec::with_capacity(views.len());
    for (va, vb) in &views {
        let d = &va.den * &vb.den;
        den = den.lcm(&d);
        pair_dens.push(d);
    }
    let factors: Vec<BigInt> = pair_dens.iter().map(|d| &den / d).collect();
    let estimate: usize = views.iter().map(|(a, b)| a.big.len() * b.big.len()).sum::<usize>().min(1 << 22);

    // i128 fast path when the accumulated magnitude provably fits.
    let mut bound = 0.0f64;
    let mut fast = true;
    for ((va, vb), k) in views.iter().zip(&factors) {
        match (k.to_i64(), va.small.is_some() && vb.small.is_some()) {
            (Some(kv), true) => {
                bound += (kv as f64).abs() * va.max_abs * vb.max_abs * (va.big.len().min(vb.big.len()) as f64);
            }
            _ => fast = false,
        }
    }
    let mut terms: Vec<(Mono, Q)>;
    if fast && bound < 2f64.powi(120) {
        let mut acc: FxHashMap<u128, i128> = FxHashMap::default();
        acc.reserve(estimate);
        for ((va, vb), k) in views.iter().zip(&factors) {
            let k = k.to_i64().unwrap() as i128;
            let (sa, sb) = (va.small.as_ref().unwrap(), vb.small.as_ref().unwrap());
            for &(ma, ca) in sa {
                let ka = k * ca as i128;
                for &(mb, cb) in sb {
                    *acc.entry(ma + mb).or_insert(0) += ka * cb as i128;
                }
            }
        }
        terms = Vec::with_capacity(acc.len());
        for (m, c) in acc {
            if c != 0 {
                terms.push((Mono(m), Q::new(BigInt::from(c), den.clone())));
            }
        }
    } else {
        let mut acc: FxHashMap<u128, BigInt> = FxHashMap::default();
        acc.reserve(estimate);
        for ((va, vb), k) in views.iter().zip(&factors) {
            for (ma, ca) in &va.big {
                let ka = k * ca;
                for (mb, cb) in &vb.big {
                    let e = acc.entry(ma + mb).or_insert_with(BigInt::zero);
                    *e += &ka * cb;
                }
            }
        }
        terms = Vec::with_capacity(acc.len());
        for (m, c) in acc {
            if !c.is_zero() {
                terms.push((Mono(m), Q::new(c, den.clone())));
            }
        }
    }
    terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    Ok(Poly::from_sorted_unchecked(ctx, terms))
}

/// Σ cᵢ·pᵢ with rational scalars.
pub fn linear_combination(ctx: &Ctx, items: &[(Q, &Poly)]) -> Result<Poly, PolyError> {
    let mut acc: FxHashMap<u128, Q> = FxHashMap::default();
    for (k, p) in items {
        if !same_ctx(ctx, &p.ctx) {
            return Err(PolyError::VariableContextMismatch);
        }
        if k.is_zero() {
            continue;
        }
        for (m, c) in &p.terms {
            let e = acc.entry(m.0).or_insert_with(Q::zero);
            *e += k * c;
        }
    }
    let mut terms: Vec<(Mono, Q)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(m, c)| (Mono(m), c)).collect();
    terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    Ok(Poly::from_sorted_unchecked(ctx, terms))
}

fn write_rational(f: &mut fmt::Formatter<'_>, q: &BigRational) -> fmt::Result {
    if q.denom().is_one() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for Poly {
    /// Canonical text in the polynomial grammar, DRL-descending terms.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let n = self.ctx.len();
        for (k, (m, c)) in self.sorted_terms(MonoOrder::Drl).iter().enumerate() {
            let neg = c.is_negative();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let a = c.abs();
            let mut first = true;
            if !a.is_one() || m.is_one() {
                write_rational(f, &a)?;
                first = false;
            }
            for i in 0..n {
                let e = m.exp(i);
                if e == 0 {
                    continue;
                }
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "{}", self.ctx.names[i])?;
                if e > 1 {
                    write!(f, "^{}", e)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    fn ctx() -> Ctx {
        Context::new(["x", "y", "a", "c"]).unwrap()
    }

    fn v(c: &Ctx, n: &str) -> Poly {
        Poly::var(c, n).unwrap()
    }

    #[test]
    fn add_cancels() {
        let c = ctx();
        let (x, y) = (v(&c, "x"), v(&c, "y"));
        let p = x.add(&y).unwrap().add(&x.sub(&y).unwrap()).unwrap();
        assert_eq!(p, x.scale(&q(2, 1)));
    }

    #[test]
    fn distribution() {
        let c = ctx();
        let (x, a, cc) = (v(&c, "x"), v(&c, "a"), v(&c, "c"));
        let one = Poly::one(&c);
        let l = one.sub(&a.mul(&x.pow(3).unwrap()).unwrap()).unwrap();
        let r = x.add(&cc.mul(&x.pow(4).unwrap()).unwrap()).unwrap();
        let p = l.mul(&r).unwrap();
        assert_eq!(p.to_string(), "-x^7*a*c - x^4*a + x^4*c + x");
        assert!(x.mul(&Poly::zero(&c)).unwrap().is_zero());
    }

    #[test]
    fn derivative_examples() {
        let c = ctx();
        let (x, y, a) = (v(&c, "x"), v(&c, "y"), v(&c, "a"));
        let p = x.pow(2).unwrap().mul(&y).unwrap();
        assert_eq!(p.differentiate("x").unwrap(), x.mul(&y).unwrap().scale(&q(2, 1)));
        let p = a.mul(&x.pow(4).unwrap()).unwrap();
        assert_eq!(p.differentiate("x").unwrap().to_string(), "4*x^3*a");
        assert!(x.pow(2).unwrap().differentiate("y").unwrap().is_zero());
        assert!(matches!(x.differentiate("z"), Err(PolyError::UnknownVariable(_))));
    }

    #[test]
    fn primitive_part_examples() {
        let c = ctx();
        let (x, y) = (v(&c, "x"), v(&c, "y"));
        let p = x.scale(&q(3, 2)).add(&y.scale(&q(3, 1))).unwrap();
        assert_eq!(p.primitive_part().unwrap(), x.add(&y.scale(&q(2, 1))).unwrap());
        assert_eq!(x.neg().primitive_part().unwrap(), x);
        assert!(Poly::zero(&c).primitive_part().is_err());
    }

    #[test]
    fn substitution() {
        let c = ctx();
        let (x, y) = (v(&c, "x"), v(&c, "y"));
        let p = x.pow(2).unwrap().add(&y.pow(2).unwrap()).unwrap();
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), Binding::Rational(q(3, 1)));
        b.insert("y".to_string(), Binding::Rational(q(4, 1)));
        match p.substitute(&b).unwrap() {
            Substituted::Poly(r) => assert_eq!(r.as_constant(), Some(q(25, 1))),
            _ => panic!(),
        }
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), Binding::Float(BigFloat::from_i64(3, 64)));
        assert!(matches!(p.substitute(&b), Err(PolyError::UnboundVariableInNumericMode(_))));
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), Binding::Poly(y.add(&Poly::one(&c)).unwrap()));
        match p.substitute(&b).unwrap() {
            Substituted::Poly(r) => assert_eq!(r.to_string(), "2*y^2 + 2*y + 1"),
            _ => panic!(),
        }
    }

    #[test]
    fn weighted_degrees() {
        let c = Context::new(["a11", "b20", "b30"]).unwrap();
        let w: WeightMap = [("a11", 1), ("b20", 1), ("b30", 2)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let p = v(&c, "a11").mul(&v(&c, "b20")).unwrap().add(&v(&c, "b30")).unwrap();
        assert_eq!(p.weighted_degree(&w).unwrap(), WeightedDegree::Homogeneous(2));
        let p = v(&c, "a11").add(&v(&c, "b30")).unwrap();
        assert!(!p.weighted_degree(&w).unwrap().is_homogeneous());
        let mut w2 = w.clone();
        w2.remove("b30");
        assert!(matches!(p.weighted_degree(&w2), Err(PolyError::MissingWeight(_))));
    }

    #[test]
    fn context_mismatch() {
        let c1 = ctx();
        let c2 = Context::new(["x"]).unwrap();
        assert!(matches!(v(&c1, "x").add(&v(&c2, "x")), Err(PolyError::VariableContextMismatch)));
        assert_eq!(v(&c2, "x").to_ctx(&c1).unwrap(), v(&c1, "x"));
    }

    #[test]
    fn big_coefficients_take_slow_path() {
        let c = ctx();
        let x = v(&c, "x");
        let big = Q::from_integer(BigInt::from(10).pow(30));
        let p = x.scale(&big).add(&Poly::one(&c)).unwrap();
        let sq = p.mul(&p).unwrap();
        assert_eq!(sq.coeff(Mono::var(0, 2).unwrap()), &big * &big);
        assert_eq!(sq.coeff(Mono::var(0, 1).unwrap()), &big * q(2, 1));
    }
}
