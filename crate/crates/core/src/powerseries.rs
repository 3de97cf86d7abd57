//! Truncated univariate power series with polynomial coefficients.
//!
//! A series of order `N` stores `c₀…c_{N−1}` and stands for `Σ cₖ tᵏ + O(t^N)`.
//! Binary operations truncate to the smaller order. Everything is exact.

use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::polyalg::{linear_combination, sum_of_products, Ctx, Poly, PolyError, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("constant term is not an invertible rational constant")]
    NonInvertibleConstantTerm,
    #[error("inner series of a composition must have zero constant term")]
    NonzeroInnerConstant,
    #[error("linear coefficient is not a nonzero rational constant")]
    NonUnitLinearCoefficient,
    #[error("bad constant term: {0}")]
    BadConstantTerm(&'static str),
    #[error("series use different variables or coefficient contexts")]
    Mismatch,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    var: String,
    ctx: Ctx,
    coeffs: Vec<Poly>,
}

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

impl TruncatedSeries {
    pub fn new(var: &str, ctx: &Ctx, mut coeffs: Vec<Poly>, order: usize) -> TruncatedSeries {
        coeffs.truncate(order);
        while coeffs.len() < order {
            coeffs.push(Poly::zero(ctx));
        }
        TruncatedSeries { var: var.to_string(), ctx: ctx.clone(), coeffs }
    }

    pub fn zero(var: &str, ctx: &Ctx, order: usize) -> TruncatedSeries {
        TruncatedSeries::new(var, ctx, Vec::new(), order)
    }

    pub fn constant(var: &str, ctx: &Ctx, c: Poly, order: usize) -> TruncatedSeries {
        TruncatedSeries::new(var, ctx, vec![c], order)
    }

    /// The series `t` itself.
    pub fn identity(var: &str, ctx: &Ctx, order: usize) -> TruncatedSeries {
        TruncatedSeries::new(var, ctx, vec![Poly::zero(ctx), Poly::one(ctx)], order)
    }

    /// Rational coefficients, lowest degree first.
    pub fn from_rationals(var: &str, ctx: &Ctx, cs: &[Q], order: usize) -> TruncatedSeries {
        let coeffs = cs.iter().map(|c| Poly::constant(ctx, c.clone())).collect();
        TruncatedSeries::new(var, ctx, coeffs, order)
    }

    /// Expand a polynomial in variable `var_index` of its context; coefficients stay in that context.
    pub fn from_poly(p: &Poly, var_index: usize, order: usize) -> TruncatedSeries {
        let name = p.ctx().names()[var_index].clone();
        TruncatedSeries::new(&name, p.ctx(), p.coefficients_in(var_index), order)
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, k: usize) -> &Poly {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[Poly] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Poly::is_zero)
    }

    pub fn truncate(&self, order: usize) -> TruncatedSeries {
        TruncatedSeries::new(&self.var, &self.ctx, self.coeffs.clone(), order.min(self.order()))
    }

    fn check(&self, other: &TruncatedSeries) -> Result<usize, SeriesError> {
        if self.var != other.var || self.ctx.names() != other.ctx.names() {
            return Err(SeriesError::Mismatch);
        }
        Ok(self.order().min(other.order()))
    }

    fn with(&self, coeffs: Vec<Poly>) -> TruncatedSeries {
        TruncatedSeries { var: self.var.clone(), ctx: self.ctx.clone(), coeffs }
    }

    pub fn add(&self, other: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
        let n = self.check(other)?;
        let c = (0..n).map(|k| self.coeffs[k].add(&other.coeffs[k])).collect::<Result<_, _>>()?;
        Ok(self.with(c))
    }

    pub fn sub(&self, other: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
        let n = self.check(other)?;
        let c = (0..n).map(|k| self.coeffs[k].sub(&other.coeffs[k])).collect::<Result<_, _>>()?;
        Ok(self.with(c))
    }

    pub fn neg(&self) -> TruncatedSeries {
        self.with(self.coeffs.iter().map(Poly::neg).collect())
    }

    pub fn scale(&self, k: &Q) -> TruncatedSeries {
        self.with(self.coeffs.iter().map(|c| c.scale(k)).collect())
    }

    /// Multiply every coefficient by a polynomial.
    pub fn mul_poly(&self, p: &Poly) -> Result<TruncatedSeries, SeriesError> {
        let c = self.coeffs.iter().map(|c| c.mul(p)).collect::<Result<_, _>>()?;
        Ok(self.with(c))
    }

    /// Coefficient `j` of the product `a·b` (both must have order > j).
    pub fn product_coeff(a: &[Poly], b: &[Poly], j: usize) -> Result<Poly, SeriesError> {
        let ctx = a[0].ctx().clone();
        let pairs: Vec<(&Poly, &Poly)> = (0..=j).map(|i| (&a[i], &b[j - i])).collect();
        Ok(sum_of_products(&ctx, &pairs)?)
    }

    pub fn mul(&self, other: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
        let n = self.check(other)?;
        let c = (0..n).map(|j| Self::product_coeff(&self.coeffs, &other.coeffs, j)).collect::<Result<_, _>>()?;
        Ok(self.with(c))
    }

    pub fn pow(&self, e: u32) -> Result<TruncatedSeries, SeriesError> {
        let mut r = TruncatedSeries::constant(&self.var, &self.ctx, Poly::one(&self.ctx), self.order());
        for _ in 0..e {
            r = r.mul(self)?;
        }
        Ok(r)
    }

    fn rational_constant(&self) -> Option<Q> {
        self.coeffs.first().and_then(Poly::as_constant)
    }

    pub fn recip(&self) -> Result<TruncatedSeries, SeriesError> {
        let a0 = self.rational_constant().filter(|c| !c.is_zero()).ok_or(SeriesError::NonInvertibleConstantTerm)?;
        let inv = Q::one() / a0;
        let n = self.order();
        let mut b: Vec<Poly> = Vec::with_capacity(n);
        b.push(Poly::constant(&self.ctx, inv.clone()));
        for k in 1..n {
            let pairs: Vec<(&Poly, &Poly)> = (1..=k).map(|i| (&self.coeffs[i], &b[k - i])).collect();
            let s = sum_of_products(&self.ctx, &pairs)?;
            b.push(s.scale(&-inv.clone()));
        }
        Ok(self.with(b))
    }

    pub fn div(&self, other: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
        self.mul(&other.recip()?)
    }

    pub fn exp(&self) -> Result<TruncatedSeries, SeriesError> {
        if self.coeffs.first().is_some_and(|c| !c.is_zero()) {
            return Err(SeriesError::BadConstantTerm("exp needs a zero constant term"));
        }
        let n = self.order();
        let da: Vec<Poly> = (0..n).map(|i| self.coeffs[i].scale(&q(i as i64, 1))).collect();
        let mut e: Vec<Poly> = Vec::with_capacity(n);
        if n > 0 {
            e.push(Poly::one(&self.ctx));
        }
        for k in 1..n {
            let pairs: Vec<(&Poly, &Poly)> = (1..=k).map(|i| (&da[i], &e[k - i])).collect();
            e.push(sum_of_products(&self.ctx, &pairs)?.scale(&q(1, k as i64)));
        }
        Ok(self.with(e))
    }

    pub fn log(&self) -> Result<TruncatedSeries, SeriesError> {
        if self.rational_constant() != Some(Q::one()) {
            return Err(SeriesError::BadConstantTerm("log needs constant term 1"));
        }
        let n = self.order();
        let mut b: Vec<Poly> = Vec::with_capacity(n);
        let mut db: Vec<Poly> = Vec::with_capacity(n);
        if n > 0 {
            b.push(Poly::zero(&self.ctx));
            db.push(Poly::zero(&self.ctx));
        }
        for k in 1..n {
            let pairs: Vec<(&Poly, &Poly)> = (1..k).map(|i| (&db[i], &self.coeffs[k - i])).collect();
            let s = sum_of_products(&self.ctx, &pairs)?;
            let bk = self.coeffs[k].sub(&s.scale(&q(1, k as i64)))?;
            db.push(bk.scale(&q(k as i64, 1)));
            b.push(bk);
        }
        Ok(self.with(b))
    }

    /// Square root of a series with constant term 1.
    pub fn sqrt_unit(&self) -> Result<TruncatedSeries, SeriesError> {
        if self.rational_constant() != Some(Q::one()) {
            return Err(SeriesError::BadConstantTerm("sqrt needs constant term 1"));
        }
        let n = self.order();
        let mut b: Vec<Poly> = Vec::with_capacity(n);
        b.push(Poly::one(&self.ctx));
        for k in 1..n {
            let pairs: Vec<(&Poly, &Poly)> = (1..k).map(|i| (&b[i], &b[k - i])).collect();
            let s = sum_of_products(&self.ctx, &pairs)?;
            b.push(self.coeffs[k].sub(&s)?.scale(&q(1, 2)));
        }
        Ok(self.with(b))
    }

    /// Antiderivative with zero constant; the order rises by one.
    pub fn integrate(&self) -> TruncatedSeries {
        let mut c = Vec::with_capacity(self.order() + 1);
        c.push(Poly::zero(&self.ctx));
        for (k, a) in self.coeffs.iter().enumerate() {
            c.push(a.scale(&q(1, k as i64 + 1)));
        }
        self.with(c)
    }

    /// Termwise derivative; the order drops by one.
    pub fn differentiate(&self) -> TruncatedSeries {
        let c = self.coeffs.iter().enumerate().skip(1).map(|(k, a)| a.scale(&q(k as i64, 1))).collect();
        self.with(c)
    }

    /// Multiply by `t^k`; the order rises by `k`.
    pub fn shift_up(&self, k: usize) -> TruncatedSeries {
        let mut c = vec![Poly::zero(&self.ctx); k];
        c.extend(self.coeffs.iter().cloned());
        self.with(c)
    }

    /// Divide by `t^k`, which must divide exactly; the order drops by `k`.
    pub fn shift_down(&self, k: usize) -> Result<TruncatedSeries, SeriesError> {
        if self.coeffs.iter().take(k).any(|c| !c.is_zero()) {
            return Err(SeriesError::BadConstantTerm("low coefficients must vanish to divide by a power"));
        }
        Ok(self.with(self.coeffs.iter().skip(k).cloned().collect()))
    }

    /// `self ∘ inner` by Horner evaluation in the series ring.
    pub fn compose(&self, inner: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
        let n = self.check(inner)?;
        if inner.coeffs.first().is_some_and(|c| !c.is_zero()) {
            return Err(SeriesError::NonzeroInnerConstant);
        }
        let inner = inner.truncate(n);
        let mut r = TruncatedSeries::zero(&self.var, &self.ctx, n);
        for k in (0..n).rev() {
            r = r.mul(&inner)?;
            let c0 = r.coeffs[0].add(&self.coeffs[k])?;
            r.coeffs[0] = c0;
        }
        Ok(r)
    }

    /// Compositional inverse; also returns the table of powers `b^k`, `k = 0..N`.
    pub fn revert_with_powers(&self) -> Result<(TruncatedSeries, Vec<Vec<Poly>>), SeriesError> {
        let n = self.order();
        if self.coeffs.first().is_some_and(|c| !c.is_zero()) {
            return Err(SeriesError::NonzeroInnerConstant);
        }
        let a1 = self
            .coeffs
            .get(1)
            .and_then(Poly::as_constant)
            .filter(|c| !c.is_zero())
            .ok_or(SeriesError::NonUnitLinearCoefficient)?;
        let inv = Q::one() / a1;
        let zero = Poly::zero(&self.ctx);
        // pw[k][j] = coefficient j of b^k; pw[1] is b itself.
        let mut pw: Vec<Vec<Poly>> = vec![vec![zero.clone(); n]; n.max(2)];
        if n > 0 {
            pw[0][0] = Poly::one(&self.ctx);
        }
        if n > 1 {
            pw[1][1] = Poly::constant(&self.ctx, inv.clone());
        }
        for j in 2..n {
            for k in 2..=j {
                let pairs: Vec<(&Poly, &Poly)> = (k - 1..j).map(|i| (&pw[k - 1][i], &pw[1][j - i])).collect();
                pw[k][j] = sum_of_products(&self.ctx, &pairs)?;
            }
            let pairs: Vec<(&Poly, &Poly)> = (2..=j).map(|k| (&self.coeffs[k], &pw[k][j])).collect();
            let s = sum_of_products(&self.ctx, &pairs)?;
            pw[1][j] = s.scale(&-inv.clone());
        }
        let b = self.with(pw[1].clone());
        Ok((b, pw))
    }

    pub fn revert(&self) -> Result<TruncatedSeries, SeriesError> {
        Ok(self.revert_with_powers()?.0)
    }

    /// `self ∘ b` given the power table of `b` from [`Self::revert_with_powers`].
    pub fn compose_with_powers(&self, powers: &[Vec<Poly>], var: &str) -> Result<TruncatedSeries, SeriesError> {
        let n = self.order().min(powers.first().map_or(0, Vec::len));
        let mut c = Vec::with_capacity(n);
        for j in 0..n {
            let pairs: Vec<(&Poly, &Poly)> = (0..=j.min(powers.len() - 1)).map(|k| (&self.coeffs[k], &powers[k][j])).collect();
            c.push(sum_of_products(&self.ctx, &pairs)?);
        }
        Ok(TruncatedSeries { var: var.to_string(), ctx: self.ctx.clone(), coeffs: c })
    }

    /// `Σ cₖ tᵏ` as a polynomial in variable `var_index` of `ctx`.
    pub fn to_poly(&self, var_index: usize) -> Result<Poly, SeriesError> {
        Ok(Poly::from_coefficients(&self.ctx, var_index, &self.coeffs)?)
    }

    /// Rational combination of series.
    pub fn linear_combination(items: &[(Q, &TruncatedSeries)]) -> Result<TruncatedSeries, SeriesError> {
        let first = items.first().ok_or(SeriesError::Mismatch)?.1;
        let mut n = first.order();
        for (_, s) in items {
            n = n.min(first.check(s)?);
        }
        let mut c = Vec::with_capacity(n);
        for j in 0..n {
            let parts: Vec<(Q, &Poly)> = items.iter().map(|(k, s)| (k.clone(), &s.coeffs[j])).collect();
            c.push(linear_combination(&first.ctx, &parts)?);
        }
        Ok(first.with(c))
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let text = c.to_string();
            let wrapped = if c.len() > 1 { format!("({})", text) } else { text };
            match k {
                0 => write!(f, "{}", wrapped)?,
                1 => write!(f, "{}*{}", wrapped, self.var)?,
                _ => write!(f, "{}*{}^{}", wrapped, self.var, k)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O({}^{})", self.var, self.order())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::Context;

    fn ctx() -> Ctx {
        Context::new(Vec::<String>::new()).unwrap()
    }

    fn s(cs: &[(i64, i64)], n: usize) -> TruncatedSeries {
        let cs: Vec<Q> = cs.iter().map(|&(a, b)| q(a, b)).collect();
        TruncatedSeries::from_rationals("x", &ctx(), &cs, n)
    }

    #[test]
    fn geometric_and_products() {
        assert_eq!(s(&[(1, 1), (-1, 1)], 4).recip().unwrap(), s(&[(1, 1); 4], 4));
        let p = s(&[(1, 1), (1, 1)], 3).mul(&s(&[(1, 1), (-1, 1)], 3)).unwrap();
        assert_eq!(p, s(&[(1, 1), (0, 1), (-1, 1)], 3));
        assert_eq!(s(&[(0, 1), (1, 1), (1, 1)], 4).recip(), Err(SeriesError::NonInvertibleConstantTerm));
    }

    #[test]
    fn composition() {
        let outer = s(&[(1, 1), (2, 1), (1, 1)], 3);
        let inner = s(&[(0, 1), (1, 1), (1, 1)], 3);
        assert_eq!(outer.compose(&inner).unwrap(), s(&[(1, 1), (2, 1), (3, 1)], 3));
        let id = TruncatedSeries::identity("x", &ctx(), 5);
        let f = s(&[(2, 1), (3, 1), (0, 1), (5, 1), (7, 1)], 5);
        assert_eq!(f.compose(&id).unwrap(), f);
        let g = s(&[(0, 1), (3, 1), (0, 1), (5, 1), (7, 1)], 5);
        assert_eq!(id.compose(&g).unwrap(), g);
        assert_eq!(id.compose(&f), Err(SeriesError::NonzeroInnerConstant));
    }

    #[test]
    fn reversion() {
        let a = s(&[(0, 1), (1, 1), (1, 1)], 6);
        let b = a.revert().unwrap();
        assert_eq!(b, s(&[(0, 1), (1, 1), (-1, 1), (2, 1), (-5, 1), (14, 1)], 6));
        assert_eq!(a.compose(&b).unwrap(), TruncatedSeries::identity("x", &ctx(), 6));
        let id = TruncatedSeries::identity("x", &ctx(), 6);
        assert_eq!(id.revert().unwrap(), id);
        assert_eq!(s(&[(0, 1), (0, 1), (1, 1)], 4).revert(), Err(SeriesError::NonUnitLinearCoefficient));
    }

    #[test]
    fn exp_log_sqrt() {
        let e = s(&[(0, 1), (0, 1), (3, 2)], 5).exp().unwrap();
        assert_eq!(e, s(&[(1, 1), (0, 1), (3, 2), (0, 1), (9, 8)], 5));
        let l = s(&[(1, 1), (1, 1)], 4).log().unwrap();
        assert_eq!(l, s(&[(0, 1), (1, 1), (-1, 2), (1, 3)], 4));
        assert_eq!(l.exp().unwrap(), s(&[(1, 1), (1, 1)], 4));
        let r = s(&[(1, 1), (1, 1)], 3).sqrt_unit().unwrap();
        assert_eq!(r, s(&[(1, 1), (1, 2), (-1, 8)], 3));
        assert_eq!(s(&[(1, 1)], 4).sqrt_unit().unwrap(), s(&[(1, 1)], 4));
        assert_eq!(s(&[(1, 1), (2, 1), (1, 1)], 6).sqrt_unit().unwrap(), s(&[(1, 1), (1, 1)], 6));
        assert!(s(&[(2, 1)], 3).sqrt_unit().is_err());
        assert!(s(&[(1, 1)], 3).exp().is_err());
    }

    #[test]
    fn calculus() {
        let i = s(&[(0, 1), (1, 1)], 3).integrate();
        assert_eq!(i, s(&[(0, 1), (0, 1), (1, 2)], 4));
        let a = s(&[(1, 1), (0, 1), (0, 1), (2, 1)], 4);
        assert_eq!(a.integrate(), s(&[(0, 1), (1, 1), (0, 1), (0, 1), (1, 2)], 5));
        assert_eq!(a.integrate().differentiate(), a);
    }

    #[test]
    fn symbolic_coefficients() {
        let c = Context::new(["a"]).unwrap();
        let a = Poly::var(&c, "a").unwrap();
        let f = TruncatedSeries::new("x", &c, vec![Poly::zero(&c), Poly::one(&c), a.clone()], 5);
        let g = f.revert().unwrap();
        assert_eq!(f.compose(&g).unwrap(), TruncatedSeries::identity("x", &c, 5));
        assert_eq!(g.coeff(2), &a.neg());
        assert_eq!(g.coeff(3), &a.pow(2).unwrap().scale(&q(2, 1)));
    }
}
