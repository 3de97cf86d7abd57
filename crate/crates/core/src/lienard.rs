//! Reducible planar systems, their Liénard form `ẍ + f(x)ẋ² + g(x) = 0`,
//! the series bundle built from `f` and `g`, and exact vector-field checks.
//!
//! Two shapes are handled:
//! - `Case1`: `ẋ = −y·Ã(x)`, `ẏ = B̃(x) + C̃(x)·y²`, giving `f = (C̃ − Ã′)/Ã`, `g = Ã·B̃`;
//! - `Case2`: `ẋ = −y`, `ẏ = x·(1 + P(y))`, giving `f = −P′/(1+P)`, `g = x·(1+P)`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::polyalg::{Context, Ctx, Poly, PolyError, Q};
use crate::powerseries::{SeriesError, TruncatedSeries};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LienardError {
    #[error("shape not Case1/Case2: {0}")]
    MalformedSystem(String),
    #[error("linearization components use different bases or exponents")]
    MismatchedBase,
    #[error("inverse integrating factor must be nonzero")]
    ZeroV,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

type Result<T> = std::result::Result<T, LienardError>;

/// A polynomial vector field `(ẋ, ẏ)` over a context containing `x` and `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarField {
    pub xdot: Poly,
    pub ydot: Poly,
}

impl PlanarField {
    pub fn new(xdot: Poly, ydot: Poly) -> Result<PlanarField> {
        if xdot.ctx().names() != ydot.ctx().names() {
            return Err(PolyError::VariableContextMismatch.into());
        }
        for v in ["x", "y"] {
            if xdot.ctx().index(v).is_none() {
                return Err(PolyError::UnknownVariable(v.into()).into());
            }
        }
        Ok(PlanarField { xdot, ydot })
    }

    pub fn ctx(&self) -> &Ctx {
        self.xdot.ctx()
    }

    fn xi(&self) -> usize {
        self.ctx().index("x").expect("checked at construction")
    }

    fn yi(&self) -> usize {
        self.ctx().index("y").expect("checked at construction")
    }

    /// Lie derivative `ẋ·∂ₓp + ẏ·∂ᵧp`.
    pub fn derive(&self, p: &Poly) -> Result<Poly> {
        let px = p.differentiate_index(self.xi());
        let py = p.differentiate_index(self.yi());
        Ok(px.mul(&self.xdot)?.add(&py.mul(&self.ydot)?)?)
    }

    pub fn divergence(&self) -> Poly {
        let a = self.xdot.differentiate_index(self.xi());
        let b = self.ydot.differentiate_index(self.yi());
        a.add(&b).expect("same context")
    }

    pub fn is_zero(&self) -> bool {
        self.xdot.is_zero() && self.ydot.is_zero()
    }

    pub fn to_ctx(&self, ctx: &Ctx) -> Result<PlanarField> {
        PlanarField::new(self.xdot.to_ctx(ctx)?, self.ydot.to_ctx(ctx)?)
    }
}

impl fmt::Display for PlanarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x' = {}\ny' = {}", self.xdot, self.ydot)
    }
}

/// `[X, Y] = (JY)·X − (JX)·Y`.
pub fn lie_bracket(x: &PlanarField, y: &PlanarField) -> Result<PlanarField> {
    let first = x.derive(&y.xdot)?.sub(&y.derive(&x.xdot)?)?;
    let second = x.derive(&y.ydot)?.sub(&y.derive(&x.ydot)?)?;
    PlanarField::new(first, second)
}

/// `X·∇V = V·div X` exactly.
pub fn check_inverse_integrating_factor(v: &Poly, x: &PlanarField) -> Result<bool> {
    if v.is_zero() {
        return Err(LienardError::ZeroV);
    }
    let v = v.to_ctx(x.ctx())?;
    Ok(x.derive(&v)?.sub(&v.mul(&x.divergence())?)?.is_zero())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Case1,
    Case2,
}

/// A system in one of the two reducible shapes.
#[derive(Clone, Debug, PartialEq)]
pub enum PlanarSystem {
    /// `ẋ = −y·a(x)`, `ẏ = b(x) + c(x)·y²`.
    Case1 { a: Poly, b: Poly, c: Poly },
    /// `ẋ = −y`, `ẏ = x·(1 + p(y))`.
    Case2 { p: Poly },
}

/// Does `p` avoid the field variable other than `var`?
fn only_in(p: &Poly, var: usize) -> bool {
    let ctx = p.ctx();
    ["x", "y"].iter().filter_map(|n| ctx.index(n)).filter(|&i| i != var).all(|i| p.degree_in(i) == 0)
}

fn is_one(p: &Poly) -> bool {
    p.as_constant().is_some_and(|c| c == Q::from_integer(1.into()))
}

impl PlanarSystem {
    /// Detect the shape, preferring `Case1` when both apply.
    pub fn detect(field: &PlanarField) -> Result<PlanarSystem> {
        match PlanarSystem::with_shape(field, Shape::Case1) {
            Ok(s) => Ok(s),
            Err(e1) => PlanarSystem::with_shape(field, Shape::Case2).map_err(|e2| {
                LienardError::MalformedSystem(format!("{}; {}", strip(&e1), strip(&e2)))
            }),
        }
    }

    pub fn with_shape(field: &PlanarField, shape: Shape) -> Result<PlanarSystem> {
        let (xi, yi) = (field.xi(), field.yi());
        let bad = |m: &str| LienardError::MalformedSystem(m.to_string());
        match shape {
            Shape::Case1 => {
                let xs = field.xdot.coefficients_in(yi);
                if xs.len() != 2 || !xs[0].is_zero() {
                    return Err(bad("case 1 needs x' = -y*A(x)"));
                }
                let a = xs[1].neg();
                let ys = field.ydot.coefficients_in(yi);
                if ys.len() == 2 || ys.len() > 3 || (ys.len() == 3 && !ys[1].is_zero()) {
                    return Err(bad("case 1 needs y' = B(x) + C(x)*y^2"));
                }
                let b = ys[0].clone();
                let c = ys.get(2).cloned().unwrap_or_else(|| Poly::zero(field.ctx()));
                for p in [&a, &b, &c] {
                    if !only_in(p, xi) {
                        return Err(bad("case 1 coefficients must depend on x only"));
                    }
                }
                let ac = a.coefficients_in(xi);
                if !is_one(&ac[0]) {
                    return Err(bad("case 1 needs A(0) = 1"));
                }
                let bc = b.coefficients_in(xi);
                if !bc[0].is_zero() || bc.len() < 2 || !is_one(&bc[1]) {
                    return Err(bad("case 1 needs B(x) = x + O(x^2)"));
                }
                Ok(PlanarSystem::Case1 { a, b, c })
            }
            Shape::Case2 => {
                let minus_y = Poly::var(field.ctx(), "y")?.neg();
                if field.xdot != minus_y {
                    return Err(bad("case 2 needs x' = -y"));
                }
                let yc = field.ydot.coefficients_in(xi);
                if yc.len() != 2 || !yc[0].is_zero() {
                    return Err(bad("case 2 needs y' = x*(1 + P(y))"));
                }
                let p = yc[1].sub(&Poly::one(field.ctx()))?;
                if !only_in(&p, yi) || !p.coefficients_in(yi)[0].is_zero() {
                    return Err(bad("case 2 needs P(y) depending on y only with P(0) = 0"));
                }
                Ok(PlanarSystem::Case2 { p })
            }
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            PlanarSystem::Case1 { .. } => Shape::Case1,
            PlanarSystem::Case2 { .. } => Shape::Case2,
        }
    }

    pub fn ctx(&self) -> &Ctx {
        match self {
            PlanarSystem::Case1 { a, .. } => a.ctx(),
            PlanarSystem::Case2 { p } => p.ctx(),
        }
    }

    /// Parameter names: every context variable except `x` and `y`.
    pub fn params(&self) -> Vec<String> {
        self.ctx().names().iter().filter(|n| *n != "x" && *n != "y").cloned().collect()
    }

    pub fn param_ctx(&self) -> Result<Ctx> {
        Ok(Context::new(self.params())?)
    }

    /// Bind some parameters to rationals; the result lives over `[x, y, remaining...]`.
    pub fn specialize(&self, values: &BTreeMap<String, Q>) -> Result<PlanarSystem> {
        let ctx = self.ctx();
        let rat: Vec<Option<Q>> = ctx.names().iter().map(|n| values.get(n).cloned()).collect();
        let sym = vec![None; ctx.len()];
        let rest: Vec<String> = self.params().into_iter().filter(|n| !values.contains_key(n)).collect();
        let target = crate::exprparse::field_context(&rest)
            .map_err(|e| LienardError::MalformedSystem(e.message))?;
        let fld = self.field()?;
        let spec = PlanarField::new(
            fld.xdot.substitute_exact(&rat, &sym)?.to_ctx(&target)?,
            fld.ydot.substitute_exact(&rat, &sym)?.to_ctx(&target)?,
        )?;
        PlanarSystem::with_shape(&spec, self.shape())
    }

    pub fn field(&self) -> Result<PlanarField> {
        let ctx = self.ctx();
        let y = Poly::var(ctx, "y")?;
        match self {
            PlanarSystem::Case1 { a, b, c } => {
                PlanarField::new(y.mul(a)?.neg(), b.add(&c.mul(&y.pow(2)?)?)?)
            }
            PlanarSystem::Case2 { p } => {
                let x = Poly::var(ctx, "x")?;
                PlanarField::new(y.neg(), x.mul(&Poly::one(ctx).add(p)?)?)
            }
        }
    }

    /// Coefficients in `x` of the polynomial identity equivalent to a zero Urabe function.
    pub fn zero_urabe_conditions(&self) -> Result<Vec<Poly>> {
        let ctx = self.ctx();
        let (var, p) = match self {
            PlanarSystem::Case1 { a, b, c } => {
                let xi = ctx.index("x").expect("field context");
                let e = a.mul(&b.differentiate_index(xi))?.add(&c.mul(b)?)?.sub(&Poly::one(ctx))?;
                (xi, e)
            }
            PlanarSystem::Case2 { p } => (ctx.index("y").expect("field context"), p.clone()),
        };
        let pctx = self.param_ctx()?;
        let mut out = Vec::new();
        for c in p.coefficients_in(var) {
            if !c.is_zero() {
                out.push(c.to_ctx(&pctx)?);
            }
        }
        Ok(out)
    }
}

fn strip(e: &LienardError) -> String {
    match e {
        LienardError::MalformedSystem(m) => m.clone(),
        other => other.to_string(),
    }
}

/// `num/den` with polynomials in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fraction {
    pub num: Poly,
    pub den: Poly,
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_one(&self.den) {
            write!(f, "{}", self.num)
        } else if self.num.is_zero() {
            write!(f, "0")
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

/// The pair `(f, g)` of `ẍ + f(x)ẋ² + g(x) = 0`; both live in the system context
/// and involve `x` and parameters only.
#[derive(Clone, Debug, PartialEq)]
pub struct LienardForm {
    pub f: Fraction,
    pub g: Fraction,
    pub shape: Shape,
}

pub fn reduce_to_lienard(s: &PlanarSystem) -> Result<LienardForm> {
    let ctx = s.ctx();
    let xi = ctx.index("x").expect("field context");
    let one = Poly::one(ctx);
    match s {
        PlanarSystem::Case1 { a, b, c } => Ok(LienardForm {
            f: Fraction { num: c.sub(&a.differentiate_index(xi))?, den: a.clone() },
            g: Fraction { num: a.mul(b)?, den: one },
            shape: Shape::Case1,
        }),
        PlanarSystem::Case2 { p } => {
            let yi = ctx.index("y").expect("field context");
            let mut sym = vec![None; ctx.len()];
            sym[yi] = Some(Poly::var(ctx, "x")?);
            let px = p.substitute_exact(&vec![None; ctx.len()], &sym)?;
            let den = one.add(&px)?;
            Ok(LienardForm {
                f: Fraction { num: px.differentiate_index(xi).neg(), den: den.clone() },
                g: Fraction { num: Poly::var(ctx, "x")?.mul(&den)?, den: one },
                shape: Shape::Case2,
            })
        }
    }
}

/// Series in `x` of `f`, `g`, `F = ∫f`, `e^F`, `e^{2F}`, `φ = ∫e^F`, `X` and `g·e^F`.
/// Coefficients live in the parameter context.
#[derive(Clone, Debug)]
pub struct SeriesBundle {
    pub order: usize,
    pub f: TruncatedSeries,
    pub g: TruncatedSeries,
    pub big_f: TruncatedSeries,
    pub exp_f: TruncatedSeries,
    pub exp_2f: TruncatedSeries,
    pub phi: TruncatedSeries,
    pub x_fn: TruncatedSeries,
    pub g_exp_f: TruncatedSeries,
}

fn series_of(p: &Poly, pctx: &Ctx, order: usize) -> Result<TruncatedSeries> {
    let xi = p.ctx().index("x").expect("field context");
    let mut cs = Vec::new();
    for c in p.coefficients_in(xi) {
        cs.push(c.to_ctx(pctx)?);
    }
    Ok(TruncatedSeries::new("x", pctx, cs, order))
}

impl LienardForm {
    pub fn param_ctx(&self) -> Result<Ctx> {
        let names: Vec<String> =
            self.f.num.ctx().names().iter().filter(|n| *n != "x" && *n != "y").cloned().collect();
        Ok(Context::new(names)?)
    }

    pub fn f_series(&self, pctx: &Ctx, order: usize) -> Result<TruncatedSeries> {
        let num = series_of(&self.f.num, pctx, order)?;
        Ok(num.div(&series_of(&self.f.den, pctx, order)?)?)
    }

    pub fn g_series(&self, pctx: &Ctx, order: usize) -> Result<TruncatedSeries> {
        let num = series_of(&self.g.num, pctx, order)?;
        Ok(num.div(&series_of(&self.g.den, pctx, order)?)?)
    }

    /// `g′ + f·g − 1` with denominators cleared by `den(f)·den(g)²`.
    pub fn zero_urabe_numerator(&self) -> Result<Poly> {
        let xi = self.f.num.ctx().index("x").expect("field context");
        let (gn, gd) = (&self.g.num, &self.g.den);
        let gp = gn.differentiate_index(xi).mul(gd)?.sub(&gn.mul(&gd.differentiate_index(xi))?)?;
        let lhs = gp.mul(&self.f.den)?.add(&self.f.num.mul(gn)?.mul(gd)?)?;
        Ok(lhs.sub(&self.f.den.mul(&gd.pow(2)?)?)?)
    }

    pub fn build_series_bundle(&self, order: usize) -> Result<SeriesBundle> {
        let pctx = self.param_ctx()?;
        let f = self.f_series(&pctx, order)?;
        let g = self.g_series(&pctx, order)?;
        let big_f = f.integrate().truncate(order);
        let exp_f = big_f.exp()?;
        let exp_2f = exp_f.mul(&exp_f)?;
        let phi = exp_f.integrate().truncate(order);
        let two = Q::from_integer(2.into());
        let energy = g.mul(&exp_2f)?.integrate().scale(&two);
        let x_fn = energy.shift_down(2)?.sqrt_unit()?.shift_up(1).truncate(order);
        let g_exp_f = g.mul(&exp_f)?;
        Ok(SeriesBundle { order, f, g, big_f, exp_f, exp_2f, phi, x_fn, g_exp_f })
    }

    /// `I = 2∫g·e^{2F} + ẋ²·e^{2F}`.
    pub fn energy_first_integral(&self, order: usize) -> Result<EnergyIntegral> {
        let b = self.build_series_bundle(order + 1)?;
        let two = Q::from_integer(2.into());
        let potential = b.g.mul(&b.exp_2f)?.integrate().scale(&two).truncate(order);
        Ok(EnergyIntegral { potential, kinetic: b.exp_2f.truncate(order), f: b.f, g: b.g })
    }
}

impl fmt::Display for LienardForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f = {}\ng = {}", self.f, self.g)
    }
}

/// Series form of the energy integral `I(x, v) = potential(x) + v²·kinetic(x)`, `v = ẋ`.
#[derive(Clone, Debug)]
pub struct EnergyIntegral {
    pub potential: TruncatedSeries,
    pub kinetic: TruncatedSeries,
    f: TruncatedSeries,
    g: TruncatedSeries,
}

impl EnergyIntegral {
    /// Coefficients in `x` of the `v` and `v³` parts of `v·∂ₓI − (g + f·v²)·∂ᵥI`;
    /// both vanish to the truncation order when `I` is conserved.
    pub fn derivative_residual(&self) -> Result<(TruncatedSeries, TruncatedSeries)> {
        let two = Q::from_integer(2.into());
        let k2 = self.kinetic.scale(&two);
        let lin = self.potential.differentiate().sub(&self.g.mul(&k2)?)?;
        let cub = self.kinetic.differentiate().sub(&self.f.mul(&k2)?)?;
        Ok((lin, cub))
    }

    /// `I` as a polynomial over `[x, v, params...]`.
    pub fn to_poly(&self) -> Result<Poly> {
        let pctx = self.potential.ctx();
        let mut names = vec!["x".to_string(), "v".to_string()];
        names.extend(pctx.names().iter().cloned());
        let ctx = Context::new(names)?;
        let lift = |s: &TruncatedSeries| -> Result<Poly> {
            let cs: Vec<Poly> = s.coeffs().iter().map(|c| c.to_ctx(&ctx)).collect::<std::result::Result<_, _>>()?;
            Ok(Poly::from_coefficients(&ctx, 0, &cs)?)
        };
        let v2 = Poly::var(&ctx, "v")?.pow(2)?;
        Ok(lift(&self.potential)?.add(&lift(&self.kinetic)?.mul(&v2)?)?)
    }
}

/// `H = num / base^exponent`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerIntegral {
    pub num: Poly,
    pub base: Poly,
    pub exponent: Q,
}

/// `q·D·Ṅ − p·N·Ḋ = 0` for `H = N/D^{p/q}` along `field`.
pub fn check_power_integral(h: &PowerIntegral, field: &PlanarField) -> Result<bool> {
    let n = h.num.to_ctx(field.ctx())?;
    let d = h.base.to_ctx(field.ctx())?;
    let (p, q) = (Q::from_integer(h.exponent.numer().clone()), Q::from_integer(h.exponent.denom().clone()));
    let lhs = d.mul(&field.derive(&n)?)?.scale(&q);
    let rhs = n.mul(&field.derive(&d)?)?.scale(&p);
    Ok(lhs.sub(&rhs)?.is_zero())
}

/// One component `poly·base^exponent` of a coordinate change.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerTerm {
    pub poly: Poly,
    pub base: Poly,
    pub exponent: Q,
}

/// `u = M·D^{p/q}`, `v = N·D^{p/q}` linearize `field` to `u̇ = −v`, `v̇ = u`.
pub fn check_linearization(u: &PowerTerm, v: &PowerTerm, field: &PlanarField) -> Result<bool> {
    let ctx = field.ctx();
    let d = u.base.to_ctx(ctx)?;
    if d != v.base.to_ctx(ctx)? || u.exponent != v.exponent {
        return Err(LienardError::MismatchedBase);
    }
    if d.is_zero() {
        return Err(LienardError::MismatchedBase);
    }
    let m = u.poly.to_ctx(ctx)?;
    let n = v.poly.to_ctx(ctx)?;
    let p = Q::from_integer(u.exponent.numer().clone());
    let q = Q::from_integer(u.exponent.denom().clone());
    let dd = field.derive(&d)?;
    let first = d.mul(&field.derive(&m)?)?.scale(&q).add(&m.mul(&dd)?.scale(&p))?.add(&n.mul(&d)?.scale(&q))?;
    let second = d.mul(&field.derive(&n)?)?.scale(&q).add(&n.mul(&dd)?.scale(&p))?.sub(&m.mul(&d)?.scale(&q))?;
    Ok(first.is_zero() && second.is_zero())
}

/// Is `p` free of the field variables?
pub fn is_parameter_only(p: &Poly) -> bool {
    let ctx = p.ctx();
    ["x", "y"].iter().filter_map(|n| ctx.index(n)).all(|i| p.degree_in(i) == 0)
}
