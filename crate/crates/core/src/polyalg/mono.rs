//! Packed exponent vectors: one byte per variable, up to 16 variables.

use std::cmp::Ordering;

use super::PolyError;

pub const MAX_VARS: usize = 16;
pub const MAX_EXP: u32 = 255;

const HIGH: u128 = 0x8080_8080_8080_8080_8080_8080_8080_8080;

/// Exponent vector packed into a `u128`; byte `i` holds the exponent of variable `i`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Mono(pub(crate) u128);

/// Monomial orders used by the Gröbner engine and for leading terms.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum MonoOrder {
    /// Degree reverse lexicographic.
    Drl,
    Lex,
}

impl Mono {
    pub const ONE: Mono = Mono(0);

    pub fn from_exps(exps: &[u32]) -> Result<Mono, PolyError> {
        if exps.len() > MAX_VARS {
            return Err(PolyError::TooManyVariables(exps.len()));
        }
        let mut m = 0u128;
        for (i, &e) in exps.iter().enumerate() {
            if e > MAX_EXP {
                return Err(PolyError::ExponentOverflow);
            }
            m |= (e as u128) << (8 * i);
        }
        Ok(Mono(m))
    }

    pub fn var(i: usize, e: u32) -> Result<Mono, PolyError> {
        if i >= MAX_VARS {
            return Err(PolyError::TooManyVariables(i + 1));
        }
        if e > MAX_EXP {
            return Err(PolyError::ExponentOverflow);
        }
        Ok(Mono((e as u128) << (8 * i)))
    }

    #[inline]
    pub fn exp(self, i: usize) -> u32 {
        ((self.0 >> (8 * i)) & 0xff) as u32
    }

    pub fn exps(self, n: usize) -> Vec<u32> {
        (0..n).map(|i| self.exp(i)).collect()
    }

    #[inline]
    pub fn degree(self) -> u32 {
        let mut s = 0;
        let mut v = self.0;
        while v != 0 {
            s += (v & 0xff) as u32;
            v >>= 8;
        }
        s
    }

    pub fn is_one(self) -> bool {
        self.0 == 0
    }

    /// Product with overflow detection on every byte.
    pub fn mul(self, other: Mono) -> Result<Mono, PolyError> {
        let (a, b) = (self.0, other.0);
        let t = (a & !HIGH) + (b & !HIGH);
        let carry = ((a & b) | ((a | b) & t)) & HIGH;
        if carry != 0 {
            return Err(PolyError::ExponentOverflow);
        }
        Ok(Mono(a + b))
    }

    pub fn divides(self, other: Mono) -> bool {
        (0..MAX_VARS).all(|i| self.exp(i) <= other.exp(i))
    }

    /// `other / self`, assuming `self` divides `other`.
    pub fn div_of(self, other: Mono) -> Mono {
        Mono(other.0 - self.0)
    }

    pub fn lcm(self, other: Mono) -> Mono {
        let mut m = 0u128;
        for i in 0..MAX_VARS {
            m |= (self.exp(i).max(other.exp(i)) as u128) << (8 * i);
        }
        Mono(m)
    }

    pub fn coprime(self, other: Mono) -> bool {
        (0..MAX_VARS).all(|i| self.exp(i) == 0 || other.exp(i) == 0)
    }

    pub fn with_exp(self, i: usize, e: u32) -> Mono {
        let cleared = self.0 & !(0xffu128 << (8 * i));
        Mono(cleared | ((e as u128) << (8 * i)))
    }

    pub fn cmp_order(self, other: Mono, order: MonoOrder, nvars: usize) -> Ordering {
        match order {
            MonoOrder::Lex => {
                for i in 0..nvars {
                    let c = self.exp(i).cmp(&other.exp(i));
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                Ordering::Equal
            }
            MonoOrder::Drl => {
                let c = self.degree().cmp(&other.degree());
                if c != Ordering::Equal {
                    return c;
                }
                for i in (0..nvars).rev() {
                    let c = self.exp(i).cmp(&other.exp(i));
                    if c != Ordering::Equal {
                        return c.reverse();
                    }
                }
                Ordering::Equal
            }
        }
    }
}

/// Compare two exponent vectors under `order` (variables ordered first > last).
pub fn monomial_compare(e1: &[u32], e2: &[u32], order: MonoOrder) -> Result<Ordering, PolyError> {
    if e1.len() != e2.len() {
        return Err(PolyError::LengthMismatch(e1.len(), e2.len()));
    }
    let d1: u64 = e1.iter().map(|&e| e as u64).sum();
    let d2: u64 = e2.iter().map(|&e| e as u64).sum();
    Ok(match order {
        MonoOrder::Lex => e1.cmp(e2),
        MonoOrder::Drl => d1.cmp(&d2).then_with(|| {
            for i in (0..e1.len()).rev() {
                if e1[i] != e2[i] {
                    return e2[i].cmp(&e1[i]);
                }
            }
            Ordering::Equal
        }),
    })
}
