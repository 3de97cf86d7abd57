//! Buchberger's algorithm over ℚ with the normal selection strategy.
//!
//! Internally polynomials are kept as term lists sorted descending in the chosen
//! order, so leading terms are at the front and reductions are linear merges.

use std::cmp::Ordering;
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::polyalg::{Ctx, Mono, MonoOrder, Poly, PolyError, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroebnerError {
    #[error("no nonzero generators")]
    EmptyInput,
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

type Result<T> = std::result::Result<T, GroebnerError>;

#[derive(Clone, Debug)]
pub struct Limits {
    pub max_pairs: usize,
    pub max_degree: u32,
    pub deadline: Option<Instant>,
}

impl Default for Limits {
    fn default() -> Limits {
        Limits { max_pairs: 5000, max_degree: 40, deadline: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroebnerBasis {
    pub generators: Vec<Poly>,
    pub order: MonoOrder,
    pub reduced: bool,
}

/// Terms sorted descending in `order`.
#[derive(Clone, Debug)]
struct Dp {
    terms: Vec<(Mono, Q)>,
}

struct Ring {
    order: MonoOrder,
    nvars: usize,
}

impl Ring {
    fn cmp(&self, a: Mono, b: Mono) -> Ordering {
        a.cmp_order(b, self.order, self.nvars)
    }

    fn from_poly(&self, p: &Poly) -> Dp {
        Dp { terms: p.sorted_terms(self.order) }
    }

    /// `a − c·m·b`.
    fn sub_mul(&self, a: &Dp, c: &Q, m: Mono, b: &Dp) -> Result<Dp> {
        let mut out = Vec::with_capacity(a.terms.len() + b.terms.len());
        let (mut i, mut j) = (0, 0);
        let shifted = |k: usize| -> Result<(Mono, Q)> {
            let (bm, bc) = &b.terms[k];
            Ok((bm.mul(m)?, -(c * bc)))
        };
        while i < a.terms.len() || j < b.terms.len() {
            if j == b.terms.len() {
                out.push(a.terms[i].clone());
                i += 1;
                continue;
            }
            let t = shifted(j)?;
            if i == a.terms.len() {
                out.push(t);
                j += 1;
                continue;
            }
            match self.cmp(a.terms[i].0, t.0) {
                Ordering::Greater => {
                    out.push(a.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(t);
                    j += 1;
                }
                Ordering::Equal => {
                    let s = &a.terms[i].1 + &t.1;
                    if !s.is_zero() {
                        out.push((t.0, s));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(Dp { terms: out })
    }

    /// Full reduction of `p` by monic `basis`.
    fn reduce(&self, p: &Dp, basis: &[Dp]) -> Result<Dp> {
        let mut p = p.clone();
        let mut rem: Vec<(Mono, Q)> = Vec::new();
        while let Some((lm, lc)) = p.terms.first().cloned() {
            match basis.iter().find(|g| g.terms[0].0.divides(lm)) {
                Some(g) => {
                    let m = g.terms[0].0.div_of(lm);
                    p = self.sub_mul(&p, &lc, m, g)?;
                }
                None => {
                    rem.push((lm, lc));
                    p.terms.remove(0);
                }
            }
        }
        Ok(Dp { terms: rem })
    }

    fn monic(&self, mut p: Dp) -> Dp {
        if let Some((_, lc)) = p.terms.first().cloned() {
            let inv = Q::one() / lc;
            for t in &mut p.terms {
                t.1 *= &inv;
            }
        }
        p
    }

    fn spoly(&self, f: &Dp, g: &Dp) -> Result<Dp> {
        let l = f.terms[0].0.lcm(g.terms[0].0);
        let a = Dp { terms: f.terms.iter().map(|(m, c)| Ok((m.mul(f.terms[0].0.div_of(l))?, c.clone()))).collect::<Result<_>>()? };
        self.sub_mul(&a, &Q::one(), g.terms[0].0.div_of(l), g)
    }

    fn to_poly(&self, ctx: &Ctx, p: &Dp) -> Poly {
        Poly::from_terms(ctx, p.terms.clone())
    }
}

fn check_limits(lim: &Limits, pairs: usize) -> Result<()> {
    if pairs > lim.max_pairs {
        return Err(GroebnerError::ResourceLimit(format!("more than {} critical pairs", lim.max_pairs)));
    }
    if let Some(d) = lim.deadline {
        if Instant::now() > d {
            return Err(GroebnerError::ResourceLimit("time limit exceeded".into()));
        }
    }
    Ok(())
}

/// Content 1, positive leading coefficient in `order`.
fn normalize(p: &Poly, order: MonoOrder) -> Result<Poly> {
    let pp = p.primitive_part()?;
    let negative = pp.leading(order).is_some_and(|(_, c)| c.is_negative());
    Ok(if negative { pp.neg() } else { pp })
}

/// Reduced Gröbner basis of `gens`; deterministic for a given input order.
pub fn buchberger(gens: &[Poly], order: MonoOrder, lim: &Limits) -> Result<GroebnerBasis> {
    let first = gens.iter().find(|g| !g.is_zero()).ok_or(GroebnerError::EmptyInput)?;
    let ctx = first.ctx().clone();
    for g in gens {
        if g.ctx().names() != ctx.names() {
            return Err(PolyError::VariableContextMismatch.into());
        }
    }
    let ring = Ring { order, nvars: ctx.len() };
    let mut basis: Vec<Dp> = Vec::new();
    for g in gens.iter().filter(|g| !g.is_zero()) {
        let d = g.total_degree().unwrap_or(0);
        if d > lim.max_degree {
            return Err(GroebnerError::ResourceLimit(format!("degree {} exceeds cap {}", d, lim.max_degree)));
        }
        basis.push(ring.monic(ring.from_poly(g)));
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for j in 0..basis.len() {
        for i in 0..j {
            pairs.push((i, j));
        }
    }
    let mut processed = 0usize;
    while !pairs.is_empty() {
        // normal strategy: smallest lcm first, ties by order then index
        let key = |&(i, j): &(usize, usize)| basis[i].terms[0].0.lcm(basis[j].terms[0].0);
        let best = (0..pairs.len())
            .min_by(|&a, &b| {
                let (la, lb) = (key(&pairs[a]), key(&pairs[b]));
                ring.cmp(la, lb).then(pairs[a].cmp(&pairs[b]))
            })
            .expect("nonempty");
        let (i, j) = pairs.swap_remove(best);
        let (li, lj) = (basis[i].terms[0].0, basis[j].terms[0].0);
        if li.coprime(lj) {
            continue;
        }
        let l = li.lcm(lj);
        // chain criterion: some k with LM_k | lcm and both other pairs already gone
        let chain = (0..basis.len()).any(|k| {
            k != i
                && k != j
                && basis[k].terms[0].0.divides(l)
                && !pairs.contains(&(i.min(k), i.max(k)))
                && !pairs.contains(&(j.min(k), j.max(k)))
        });
        if chain {
            continue;
        }
        processed += 1;
        check_limits(lim, processed)?;
        let s = ring.spoly(&basis[i], &basis[j])?;
        let r = ring.reduce(&s, &basis)?;
        if r.terms.is_empty() {
            continue;
        }
        let r = ring.monic(r);
        let deg = r.terms.iter().map(|t| t.0.degree()).max().unwrap_or(0);
        if deg > lim.max_degree {
            return Err(GroebnerError::ResourceLimit(format!("degree {} exceeds cap {}", deg, lim.max_degree)));
        }
        if r.terms[0].0.is_one() {
            let one = Poly::one(&ctx);
            return Ok(GroebnerBasis { generators: vec![one], order, reduced: true });
        }
        let n = basis.len();
        basis.push(r);
        for k in 0..n {
            pairs.push((k, n));
        }
    }
    // Minimal basis, then interreduce.
    let mut minimal: Vec<Dp> = Vec::new();
    for (k, g) in basis.iter().enumerate() {
        let lm = g.terms[0].0;
        let dominated = basis.iter().enumerate().any(|(o, h)| {
            let hl = h.terms[0].0;
            o != k && hl.divides(lm) && (hl != lm || o < k)
        });
        if !dominated {
            minimal.push(g.clone());
        }
    }
    let mut reduced = Vec::with_capacity(minimal.len());
    for k in 0..minimal.len() {
        let others: Vec<Dp> = minimal.iter().enumerate().filter(|(o, _)| *o != k).map(|(_, g)| g.clone()).collect();
        let head = Dp { terms: minimal[k].terms[..1].to_vec() };
        let tail = Dp { terms: minimal[k].terms[1..].to_vec() };
        let t = ring.reduce(&tail, &others)?;
        let mut terms = head.terms;
        terms.extend(t.terms);
        reduced.push(Dp { terms });
    }
    reduced.sort_by(|a, b| ring.cmp(a.terms[0].0, b.terms[0].0));
    let generators = reduced.iter().map(|g| normalize(&ring.to_poly(&ctx, g), order)).collect::<Result<_>>()?;
    Ok(GroebnerBasis { generators, order, reduced: true })
}

impl GroebnerBasis {
    fn ring(&self) -> Option<(Ring, Ctx)> {
        let ctx = self.generators.first()?.ctx().clone();
        Some((Ring { order: self.order, nvars: ctx.len() }, ctx))
    }

    fn monic_basis(&self, ring: &Ring) -> Vec<Dp> {
        self.generators.iter().map(|g| ring.monic(ring.from_poly(g))).collect()
    }

    /// Remainder of multivariate division; zero iff `p` lies in the ideal.
    pub fn normal_form(&self, p: &Poly) -> Result<Poly> {
        let Some((ring, ctx)) = self.ring() else { return Ok(p.clone()) };
        let p = p.to_ctx(&ctx)?;
        let r = ring.reduce(&ring.from_poly(&p), &self.monic_basis(&ring))?;
        Ok(ring.to_poly(&ctx, &r))
    }

    pub fn contains(&self, p: &Poly) -> Result<bool> {
        Ok(self.normal_form(p)?.is_zero())
    }

    pub fn is_unit(&self) -> bool {
        self.generators.len() == 1 && self.generators[0].is_constant() && !self.generators[0].is_zero()
    }

    /// Buchberger's criterion: every S-polynomial reduces to zero.
    pub fn satisfies_criterion(&self) -> Result<bool> {
        let Some((ring, _)) = self.ring() else { return Ok(true) };
        let b = self.monic_basis(&ring);
        for j in 0..b.len() {
            for i in 0..j {
                let s = ring.spoly(&b[i], &b[j])?;
                if !ring.reduce(&s, &b)?.terms.is_empty() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}
