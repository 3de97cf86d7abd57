//! Necessary conditions of isochronicity by Taylor matching.
//!
//! Isochronicity is `X/(1 + h(X)) = g·e^F` for an odd `h = Σ c_{2k+1} X^{2k+1}`.
//! With `u = φ(x)` both sides become series in `u`; the coefficient of `u^{2k+2}`
//! is linear in the new unknown `c_{2k+1}` and determines it, and the coefficients of
//! odd powers `u^j`, `j ≥ 3`, are the conditions `Sys(m)`.
//!
//! Coefficient `j` is exact as soon as the series reach order `j + 1`, so the
//! computation runs index by index: the power table of the reversion `x(u)`, both
//! compositions, and the recurrence for `R = Y/(1 + h(Y))` advance together.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lienard::{reduce_to_lienard, LienardError, LienardForm, PlanarSystem};
use crate::polyalg::{
    linear_combination, sum_of_products, BigFloat, Binding, Ctx, Poly, PolyError, Substituted, WeightMap, DEFAULT_PREC,
    Q,
};
use crate::powerseries::{SeriesError, TruncatedSeries};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CalgError {
    #[error("coefficient of c{c} at index {index} is not a nonzero rational constant: {detail}")]
    NonlinearCOccurrence { c: usize, index: usize, detail: String },
    #[error("conditions differ between truncation {0} and {1}")]
    TruncationSensitivity(usize, usize),
    #[error("order must be at least 1")]
    InvalidOrder,
    #[error("time limit exceeded at coefficient index {0}")]
    ResourceLimit(usize),
    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),
    #[error("k2 must be a positive rational square")]
    NonPositiveK2,
    #[error("Urabe exponent s must be odd and positive, got {0}")]
    BadExponent(u32),
    #[error("parameter `{0}` does not follow the a_ij / b_ij / c_(2i+1) naming")]
    UnconventionalName(String),
    #[error("system has no parameter `{0}`")]
    MissingParameter(String),
    #[error(transparent)]
    Lienard(#[from] LienardError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

type Result<T> = std::result::Result<T, CalgError>;

#[derive(Clone, Debug, Default)]
pub struct SysOptions {
    /// Truncation order; defaults to the smallest exact one, `2m + 2`.
    pub truncation: Option<usize>,
    /// Recompute at truncation + 2 and demand identical output.
    pub cross_check: bool,
    pub deadline: Option<Instant>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RecordKind {
    Trivial,
    Eliminated { c: usize, value: Poly },
    Condition { residual: Poly },
}

/// Both sides of the matching at one index of `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexRecord {
    pub index: usize,
    pub lhs: Poly,
    pub rhs: Poly,
    pub kind: RecordKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionDerivation {
    pub order: usize,
    pub truncation: usize,
    pub records: Vec<IndexRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SysResult {
    pub params: Ctx,
    /// Normalized `Sys(m)`: primitive, positive DRL lead, no repeats.
    pub conditions: Vec<Poly>,
    /// `c_{2k+1}` keyed by `2k+1`.
    pub urabe: BTreeMap<usize, Poly>,
    pub derivation: ConditionDerivation,
}

impl SysResult {
    /// Unnormalized residuals at indices 3, 5, …
    pub fn raw_conditions(&self) -> Vec<(usize, Poly)> {
        self.derivation
            .records
            .iter()
            .filter_map(|r| match &r.kind {
                RecordKind::Condition { residual } => Some((r.index, residual.clone())),
                _ => None,
            })
            .collect()
    }
}

/// Primitive parts of the nonzero inputs, without repeats.
pub fn normalize_conditions(raw: &[Poly]) -> Result<Vec<Poly>> {
    let mut out: Vec<Poly> = Vec::new();
    for p in raw {
        if p.is_zero() {
            continue;
        }
        let n = p.primitive_part()?;
        if !out.contains(&n) {
            out.push(n);
        }
    }
    Ok(out)
}

fn check_deadline(deadline: Option<Instant>, index: usize) -> Result<()> {
    match deadline {
        Some(d) if Instant::now() > d => Err(CalgError::ResourceLimit(index)),
        _ => Ok(()),
    }
}

fn coeffs_upto(s: &TruncatedSeries, n: usize, ctx: &Ctx) -> Vec<Poly> {
    let mut v: Vec<Poly> = s.coeffs().iter().take(n).cloned().collect();
    while v.len() < n {
        v.push(Poly::zero(ctx));
    }
    v
}

pub fn generate_sys(s: &PlanarSystem, m: usize, opts: &SysOptions) -> Result<SysResult> {
    if m == 0 {
        return Err(CalgError::InvalidOrder);
    }
    let n = opts.truncation.unwrap_or(2 * m + 2).max(2 * m + 2);
    let l = reduce_to_lienard(s)?;
    let first = run(&l, m, n, opts.deadline)?;
    if opts.cross_check {
        let second = run(&l, m, n + 2, opts.deadline)?;
        if first.conditions != second.conditions || first.urabe != second.urabe {
            return Err(CalgError::TruncationSensitivity(n, n + 2));
        }
    }
    Ok(first)
}

fn run(l: &LienardForm, m: usize, n: usize, deadline: Option<Instant>) -> Result<SysResult> {
    let bundle = l.build_series_bundle(n)?;
    let ctx = bundle.phi.ctx().clone();
    let top = 2 * m + 1;
    let zero = Poly::zero(&ctx);
    let phi = coeffs_upto(&bundle.phi, n, &ctx);
    let g = coeffs_upto(&bundle.g_exp_f, n, &ctx);
    let xf = coeffs_upto(&bundle.x_fn, n, &ctx);
    let one_q = Q::one();
    if phi[1].as_constant() != Some(one_q.clone()) {
        return Err(SeriesError::NonUnitLinearCoefficient.into());
    }

    // pw[k][j]: coefficient j of x(u)^k.
    let mut pw: Vec<Vec<Poly>> = vec![vec![zero.clone(); top + 1]; top + 1];
    pw[0][0] = Poly::one(&ctx);
    // Left side L = G∘x(u), right side Y = X∘x(u).
    let mut lhs = vec![zero.clone(); top + 1];
    let mut y = vec![zero.clone(); top + 1];
    lhs[0] = g[0].clone();
    y[0] = xf[0].clone();
    // Odd powers of Y (ypow[k], k odd) and Y² for h(Y).
    let mut y2 = vec![zero.clone(); top + 1];
    let mut ypow: Vec<Vec<Poly>> = vec![vec![zero.clone(); top + 1]; top + 1];
    let mut h = vec![zero.clone(); top + 1];
    let mut r = vec![zero.clone(); top + 1];
    let mut cs: BTreeMap<usize, Poly> = BTreeMap::new();
    let mut records = Vec::new();
    let mut raw = Vec::new();

    for j in 1..=top {
        check_deadline(deadline, j)?;
        // Row j of the power table; x(u)^k for k ≥ 2 only needs b_1..b_{j-1}.
        for k in 2..=j {
            let pairs: Vec<(&Poly, &Poly)> = (k - 1..j).map(|i| (&pw[k - 1][i], &pw[1][j - i])).collect();
            pw[k][j] = sum_of_products(&ctx, &pairs)?;
        }
        pw[1][j] = if j == 1 {
            Poly::one(&ctx)
        } else {
            let pairs: Vec<(&Poly, &Poly)> = (2..=j).map(|k| (&phi[k], &pw[k][j])).collect();
            sum_of_products(&ctx, &pairs)?.neg()
        };
        let pl: Vec<(&Poly, &Poly)> = (1..=j).map(|k| (&g[k], &pw[k][j])).collect();
        lhs[j] = sum_of_products(&ctx, &pl)?;
        let py: Vec<(&Poly, &Poly)> = (1..=j).map(|k| (&xf[k], &pw[k][j])).collect();
        y[j] = sum_of_products(&ctx, &py)?;

        let p2: Vec<(&Poly, &Poly)> = (1..j).map(|i| (&y[i], &y[j - i])).collect();
        y2[j] = sum_of_products(&ctx, &p2)?;
        ypow[1][j] = y[j].clone();
        for k in (3..top).step_by(2) {
            if j >= k {
                let (lo, hi) = ypow.split_at_mut(k);
                let prev = &lo[k - 2];
                let pairs: Vec<(&Poly, &Poly)> = (k - 2..=j - 2).map(|i| (&prev[i], &y2[j - i])).collect();
                hi[0][j] = sum_of_products(&ctx, &pairs)?;
            }
        }
        // h_j from the c's known so far; c_{j−1} for even j is added once solved.
        let items: Vec<(&Poly, &Poly)> = cs.iter().filter(|(k, _)| **k <= j).map(|(k, c)| (c, &ypow[*k][j])).collect();
        h[j] = sum_of_products(&ctx, &items)?;
        let pr: Vec<(&Poly, &Poly)> = (1..j).map(|i| (&h[i], &r[j - i])).collect();
        let s_j = y[j].sub(&sum_of_products(&ctx, &pr)?)?;

        if j == 1 {
            r[1] = s_j;
            records.push(IndexRecord { index: 1, lhs: lhs[1].clone(), rhs: r[1].clone(), kind: RecordKind::Trivial });
        } else if j % 2 == 0 {
            // s_j − c_{j−1}·Y_1^{j−1}·R_1 = L_j.
            let c_idx = j - 1;
            let lin = ypow[c_idx][c_idx].mul(&r[1])?;
            let lin_q = lin.as_constant().filter(|q| !q.is_zero()).ok_or_else(|| {
                CalgError::NonlinearCOccurrence { c: c_idx, index: j, detail: lin.to_string() }
            })?;
            let c = s_j.sub(&lhs[j])?.scale(&(Q::one() / lin_q));
            h[c_idx] = h[c_idx].add(&c.mul(&ypow[c_idx][c_idx])?)?;
            h[j] = h[j].add(&c.mul(&ypow[c_idx][j])?)?;
            r[j] = lhs[j].clone();
            records.push(IndexRecord {
                index: j,
                lhs: lhs[j].clone(),
                rhs: r[j].clone(),
                kind: RecordKind::Eliminated { c: c_idx, value: c.clone() },
            });
            cs.insert(c_idx, c);
        } else {
            r[j] = s_j;
            let residual = lhs[j].sub(&r[j])?;
            raw.push(residual.clone());
            records.push(IndexRecord {
                index: j,
                lhs: lhs[j].clone(),
                rhs: r[j].clone(),
                kind: RecordKind::Condition { residual },
            });
        }
    }
    Ok(SysResult {
        params: ctx,
        conditions: normalize_conditions(&raw)?,
        urabe: cs,
        derivation: ConditionDerivation { order: m, truncation: n, records },
    })
}

/// A residual after substituting a parameter point.
#[derive(Clone, Debug, PartialEq)]
pub enum Residual {
    Exact(Q),
    Float(BigFloat),
}

impl Residual {
    pub fn is_negligible(&self, threshold: &BigFloat) -> bool {
        match self {
            Residual::Exact(q) => q.is_zero(),
            Residual::Float(f) => f.abs().cmp_value(threshold).is_lt(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Residual::Exact(q) => BigFloat::from_rational(q, 64).to_f64(),
            Residual::Float(f) => f.to_f64(),
        }
    }
}

impl fmt::Display for Residual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Residual::Exact(q) => write!(f, "{}", crate::polyalg::format_rational(q)),
            Residual::Float(x) => write!(f, "{}", x.to_decimal_string(12)),
        }
    }
}

#[derive(Clone, Debug)]
pub enum PointValue {
    Rational(Q),
    Float(BigFloat),
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub order: usize,
    /// `(index, residual)` for every condition index 3, 5, …, 2m+1.
    pub residuals: Vec<(usize, Residual)>,
    pub urabe: BTreeMap<usize, Residual>,
    pub pass: bool,
}

/// Threshold for bigfloat residuals.
pub fn float_threshold() -> BigFloat {
    BigFloat::from_i64(10, DEFAULT_PREC).powi(-40).expect("nonzero base")
}

/// Substitute a full parameter point into `Sys(m)` and the Urabe coefficients.
pub fn verify_candidate(
    s: &PlanarSystem,
    point: &BTreeMap<String, PointValue>,
    m: usize,
    opts: &SysOptions,
) -> Result<VerifyReport> {
    for p in s.params() {
        if !point.contains_key(&p) {
            return Err(CalgError::UnboundParameter(p));
        }
    }
    let rational: BTreeMap<String, Q> = point
        .iter()
        .filter_map(|(k, v)| match v {
            PointValue::Rational(q) => Some((k.clone(), q.clone())),
            _ => None,
        })
        .collect();
    let floats: BTreeMap<String, Binding> = point
        .iter()
        .filter_map(|(k, v)| match v {
            PointValue::Float(f) => Some((k.clone(), Binding::Float(f.clone()))),
            _ => None,
        })
        .collect();
    let spec = s.specialize(&rational)?;
    let sys = generate_sys(&spec, m, opts)?;
    let eval = |p: &Poly| -> Result<Residual> {
        if let Some(q) = p.as_constant() {
            return Ok(Residual::Exact(q));
        }
        match p.substitute(&floats)? {
            Substituted::Float(f) => Ok(Residual::Float(f)),
            Substituted::Poly(p) => match p.as_constant() {
                Some(q) => Ok(Residual::Exact(q)),
                None => Err(CalgError::UnboundParameter(p.variables().join(", "))),
            },
        }
    };
    let threshold = float_threshold();
    let mut residuals = Vec::new();
    for (i, p) in sys.raw_conditions() {
        residuals.push((i, eval(&p)?));
    }
    let mut urabe = BTreeMap::new();
    for (k, c) in &sys.urabe {
        urabe.insert(*k, eval(c)?);
    }
    let pass = residuals.iter().all(|(_, r)| r.is_negligible(&threshold));
    Ok(VerifyReport { order: m, residuals, urabe, pass })
}

/// `h(X) = k1·X^s / √(k2 + k3·X^{2s})`; coefficients over the parameter context.
#[derive(Clone, Debug, PartialEq)]
pub struct UrabeClosedForm {
    pub k1: Poly,
    pub k2: Poly,
    pub k3: Poly,
    pub s: u32,
}

fn rational_sqrt(q: &Q) -> Option<Q> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| Q::new(n, d))
}

/// Does `X/(1 + h(X)) = g·e^F` hold to `order` in `x`?
pub fn urabe_series_check(l: &LienardForm, h: &UrabeClosedForm, order: usize) -> Result<bool> {
    if h.s % 2 == 0 {
        return Err(CalgError::BadExponent(h.s));
    }
    let k2 = h.k2.as_constant().filter(|q| q.is_positive()).ok_or(CalgError::NonPositiveK2)?;
    let root = rational_sqrt(&k2).ok_or(CalgError::NonPositiveK2)?;
    let b = l.build_series_bundle(order)?;
    let ctx = b.x_fn.ctx().clone();
    let k1 = h.k1.to_ctx(&ctx)?.scale(&(Q::one() / &root));
    let k3 = h.k3.to_ctx(&ctx)?.scale(&(Q::one() / &k2));
    let x = &b.x_fn;
    let xs = x.pow(h.s)?;
    let one = TruncatedSeries::constant("x", &ctx, Poly::one(&ctx), order);
    let inner = one.add(&xs.mul(&xs)?.mul_poly(&k3)?)?;
    let hx = xs.mul_poly(&k1)?.mul(&inner.sqrt_unit()?.recip()?)?;
    let lhs = x.mul(&one.add(&hx)?.recip()?)?;
    Ok(lhs == b.g_exp_f)
}

/// Weight `i+j−1` for `a_ij`, `b_ij` and `2i+1` for `c_{2i+1}`.
pub fn weight_of(name: &str) -> Result<i64> {
    let bad = || CalgError::UnconventionalName(name.to_string());
    let bytes = name.as_bytes();
    match bytes.first() {
        Some(b'a') | Some(b'b') if bytes.len() == 3 && bytes[1..].iter().all(u8::is_ascii_digit) => {
            let w = (bytes[1] - b'0') as i64 + (bytes[2] - b'0') as i64 - 1;
            if w < 1 {
                return Err(bad());
            }
            Ok(w)
        }
        Some(b'c') if bytes.len() > 1 && bytes[1..].iter().all(u8::is_ascii_digit) => {
            let k: i64 = name[1..].parse().map_err(|_| bad())?;
            if k % 2 == 1 {
                Ok(k)
            } else {
                Err(bad())
            }
        }
        _ => Err(bad()),
    }
}

pub fn assign_weights(s: &PlanarSystem) -> Result<WeightMap> {
    s.params().into_iter().map(|p| weight_of(&p).map(|w| (p, w))).collect()
}

pub fn check_sys_weighted_homogeneous(cs: &[Poly], w: &WeightMap) -> Result<bool> {
    for c in cs {
        if !c.weighted_degree(w)?.is_homogeneous() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Result of rescaling `(x, y) ↦ (x/b20, y/b20)`: the system at `b20 = 1`
/// over the rescaled parameters `p' = p / b20^{w(p)}`.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub system: PlanarSystem,
    pub pivot: Option<String>,
    pub weights: WeightMap,
}

impl Normalized {
    pub fn push_point(&self, point: &BTreeMap<String, Q>) -> Result<BTreeMap<String, Q>> {
        let Some(pivot) = &self.pivot else { return Ok(point.clone()) };
        let b = point.get(pivot).ok_or_else(|| CalgError::UnboundParameter(pivot.clone()))?;
        let mut out = BTreeMap::new();
        for (k, v) in point {
            if k != pivot {
                let w = self.weights.get(k).copied().unwrap_or(0);
                out.insert(k.clone(), v / num_traits::pow(b.clone(), w as usize));
            }
        }
        Ok(out)
    }

    pub fn pull_point(&self, point: &BTreeMap<String, Q>, b20: &Q) -> BTreeMap<String, Q> {
        let Some(pivot) = &self.pivot else { return point.clone() };
        let mut out: BTreeMap<String, Q> = point
            .iter()
            .map(|(k, v)| {
                let w = self.weights.get(k).copied().unwrap_or(0);
                (k.clone(), v * num_traits::pow(b20.clone(), w as usize))
            })
            .collect();
        out.insert(pivot.clone(), b20.clone());
        out
    }
}

pub fn normalize_b20(s: &PlanarSystem) -> Result<Normalized> {
    let weights = assign_weights(s)?;
    if !s.params().iter().any(|p| p == "b20") {
        return Ok(Normalized { system: s.clone(), pivot: None, weights });
    }
    let values: BTreeMap<String, Q> = [("b20".to_string(), Q::one())].into_iter().collect();
    Ok(Normalized { system: s.specialize(&values)?, pivot: Some("b20".into()), weights })
}

/// `Σ λᵢ pᵢ` helper for tests and callers comparing against printed polynomials.
pub fn rational_multiple(p: &Poly, q: &Poly) -> Option<Q> {
    let (mp, cp) = p.terms().first()?;
    let cq = q.coeff(*mp);
    if cq.is_zero() {
        return None;
    }
    let lambda = cp / &cq;
    let diff = linear_combination(p.ctx(), &[(Q::one(), p), (-lambda.clone(), q)]).ok()?;
    diff.is_zero().then_some(lambda)
}
