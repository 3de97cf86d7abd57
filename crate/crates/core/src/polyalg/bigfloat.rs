//! Binary floating point of configurable precision on top of `BigInt`.
//!
//! Values are `mant · 2^exp` with `|mant| < 2^prec`, trailing zero bits
//! stripped so equal values have identical representations. Field operations
//! and roots are correctly rounded (round half to even); `tan`/`atan`/`pi`
//! run at extra working precision and are faithful rather than exact.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Q;

pub const DEFAULT_PREC: u32 = 256;
pub const GUARD_BITS: u32 = 32;

#[derive(Clone, Debug)]
pub struct BigFloat {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

impl PartialEq for BigFloat {
    fn eq(&self, other: &Self) -> bool {
        self.mant == other.mant && self.exp == other.exp
    }
}

fn bits(m: &BigUint) -> i64 {
    m.bits() as i64
}

impl BigFloat {
    pub fn zero(prec: u32) -> BigFloat {
        BigFloat { mant: BigInt::zero(), exp: 0, prec }
    }

    pub fn one(prec: u32) -> BigFloat {
        BigFloat::from_i64(1, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> BigFloat {
        BigFloat::round(BigInt::from(v), 0, false, prec)
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> BigFloat {
        BigFloat::round(v.clone(), 0, false, prec)
    }

    pub fn from_f64(v: f64, prec: u32) -> Option<BigFloat> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(BigFloat::zero(prec));
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let e = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if e == 0 { (frac, -1074) } else { (frac | (1u64 << 52), e - 1075) };
        Some(BigFloat::round(BigInt::from(m) * sign, e, false, prec))
    }

    pub fn from_rational(q: &Q, prec: u32) -> BigFloat {
        BigFloat::div_ints(q.numer(), 0, q.denom(), 0, prec)
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn with_precision(&self, prec: u32) -> BigFloat {
        BigFloat::round(self.mant.clone(), self.exp, false, prec)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Exact rational value.
    pub fn to_rational(&self) -> Q {
        if self.exp >= 0 {
            Q::from_integer(&self.mant << self.exp as usize)
        } else {
            Q::new(self.mant.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    /// Binary exponent of the leading bit plus one (`|x| < 2^top`); very negative for zero.
    pub fn top(&self) -> i64 {
        if self.is_zero() {
            return i64::MIN / 4;
        }
        bits(self.mant.magnitude()) + self.exp
    }

    /// Round `m·2^e` (plus a sticky fraction below bit 0 when `sticky`) to `prec` bits.
    fn round(m: BigInt, e: i64, sticky: bool, prec: u32) -> BigFloat {
        if m.is_zero() {
            return BigFloat::zero(prec);
        }
        let neg = m.is_negative();
        let mut mag = m.into_parts().1;
        let mut e = e;
        let nb = bits(&mag);
        if nb > prec as i64 {
            let sh = (nb - prec as i64) as usize;
            let rem = &mag & ((BigUint::one() << sh) - BigUint::one());
            let mut q = mag >> sh;
            let half = BigUint::one() << (sh - 1);
            let up = match rem.cmp(&half) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => sticky || q.is_odd(),
            };
            if up {
                q += 1u32;
            }
            mag = q;
            e += sh as i64;
        }
        if mag.is_zero() {
            return BigFloat::zero(prec);
        }
        let tz = mag.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            mag >>= tz as usize;
            e += tz as i64;
        }
        let mant = BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, mag);
        BigFloat { mant, exp: e, prec }
    }

    /// `(n·2^en) / (d·2^ed)` correctly rounded.
    fn div_ints(n: &BigInt, en: i64, d: &BigInt, ed: i64, prec: u32) -> BigFloat {
        assert!(!d.is_zero(), "division by zero");
        if n.is_zero() {
            return BigFloat::zero(prec);
        }
        let neg = n.is_negative() != d.is_negative();
        let (nm, dm) = (n.magnitude(), d.magnitude());
        let k = (prec as i64 + 3 + bits(dm) - bits(nm)).max(0) as usize;
        let (q, r) = (nm << k).div_rem(dm);
        let q = BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, q);
        BigFloat::round(q, en - k as i64 - ed, !r.is_zero(), prec)
    }

    pub fn neg(&self) -> BigFloat {
        BigFloat { mant: -&self.mant, exp: self.exp, prec: self.prec }
    }

    pub fn abs(&self) -> BigFloat {
        BigFloat { mant: self.mant.abs(), exp: self.exp, prec: self.prec }
    }

    pub fn add(&self, other: &BigFloat) -> BigFloat {
        let prec = self.prec.max(other.prec);
        if self.is_zero() {
            return other.with_precision(prec);
        }
        if other.is_zero() {
            return self.with_precision(prec);
        }
        let cutoff = self.top().max(other.top()) - prec as i64 - 8;
        let base = self.exp.min(other.exp).max(cutoff);
        let align = |x: &BigFloat| -> BigInt {
            if x.exp >= base {
                &x.mant << (x.exp - base) as usize
            } else {
                // Shift right with the lost bits jammed into the last bit.
                let sh = (base - x.exp) as usize;
                let mag = x.mant.magnitude();
                let kept = mag >> sh;
                let lost = !(mag & ((BigUint::one() << sh) - BigUint::one())).is_zero();
                let kept = if lost { kept | BigUint::one() } else { kept };
                BigInt::from_biguint(x.mant.sign(), kept)
            }
        };
        BigFloat::round(align(self) + align(other), base, false, prec)
    }

    pub fn sub(&self, other: &BigFloat) -> BigFloat {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &BigFloat) -> BigFloat {
        let prec = self.prec.max(other.prec);
        BigFloat::round(&self.mant * &other.mant, self.exp + other.exp, false, prec)
    }

    pub fn checked_div(&self, other: &BigFloat) -> Option<BigFloat> {
        if other.is_zero() {
            return None;
        }
        let prec = self.prec.max(other.prec);
        Some(BigFloat::div_ints(&self.mant, self.exp, &other.mant, other.exp, prec))
    }

    pub fn div(&self, other: &BigFloat) -> BigFloat {
        self.checked_div(other).expect("division by zero")
    }

    pub fn mul_i64(&self, k: i64) -> BigFloat {
        BigFloat::round(&self.mant * k, self.exp, false, self.prec)
    }

    pub fn div_i64(&self, k: i64) -> BigFloat {
        BigFloat::div_ints(&self.mant, self.exp, &BigInt::from(k), 0, self.prec)
    }

    pub fn mul_pow2(&self, k: i64) -> BigFloat {
        if self.is_zero() {
            return self.clone();
        }
        BigFloat { mant: self.mant.clone(), exp: self.exp + k, prec: self.prec }
    }

    pub fn powi(&self, n: i64) -> Option<BigFloat> {
        let mut result = BigFloat::one(self.prec);
        let mut base = self.clone();
        let mut e = n.unsigned_abs();
        // Repeated squaring at extra precision, then one final rounding step.
        let wp = self.prec + 64;
        base = base.with_precision(wp);
        result = result.with_precision(wp);
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        if n < 0 {
            result = BigFloat::one(wp).checked_div(&result)?;
        }
        Some(result.with_precision(self.prec))
    }

    /// Real `n`-th root; `None` for even roots of negatives.
    pub fn nth_root(&self, n: u32) -> Option<BigFloat> {
        if n == 0 {
            return None;
        }
        if n == 1 || self.is_zero() {
            return Some(self.clone());
        }
        if self.is_negative() && n % 2 == 0 {
            return None;
        }
        let prec = self.prec;
        let n64 = n as i64;
        let mag = self.mant.magnitude();
        let mut k = (n64 * (prec as i64 + 2) - bits(mag)).max(0);
        k += (self.exp - k).rem_euclid(n64);
        let m = mag << k as usize;
        let s = m.nth_root(n);
        let sticky = num_traits::pow(s.clone(), n as usize) != m;
        let s = BigInt::from_biguint(self.mant.sign(), s);
        Some(BigFloat::round(s, (self.exp - k) / n64, sticky, prec))
    }

    pub fn sqrt(&self) -> Option<BigFloat> {
        self.nth_root(2)
    }

    pub fn cmp_value(&self, other: &BigFloat) -> Ordering {
        let d = self.sub(other);
        d.signum().cmp(&0)
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let mag = self.mant.magnitude();
        let nb = bits(mag);
        let (top, e) = if nb > 64 { (mag >> (nb - 64) as usize, self.exp + nb - 64) } else { (mag.clone(), self.exp) };
        let v = top.to_f64().unwrap_or(f64::INFINITY);
        let v = if e > 2000 {
            f64::INFINITY
        } else if e < -2200 {
            0.0
        } else {
            v * 2f64.powi(e as i32)
        };
        if self.is_negative() {
            -v
        } else {
            v
        }
    }

    /// Scientific decimal text with `digits` significant digits.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let digits = digits.max(1);
        let log10 = (self.top() as f64 - 0.5) * std::f64::consts::LOG10_2;
        let mut d10 = log10.floor() as i64;
        let q = self.to_rational().abs();
        let ten = BigInt::from(10);
        loop {
            let s = digits as i64 - 1 - d10;
            let scaled = if s >= 0 {
                &q * Q::from_integer(num_traits::pow(ten.clone(), s as usize))
            } else {
                &q / Q::from_integer(num_traits::pow(ten.clone(), (-s) as usize))
            };
            let n = scaled.round().to_integer();
            let text = n.to_string();
            if text.len() > digits {
                d10 += 1;
                continue;
            }
            if text.len() < digits {
                d10 -= 1;
                continue;
            }
            let sign = if self.is_negative() { "-" } else { "" };
            let (head, tail) = text.split_at(1);
            return if tail.is_empty() {
                format!("{}{}e{}", sign, head, d10)
            } else {
                format!("{}{}.{}e{}", sign, head, tail, d10)
            };
        }
    }

    /// π at precision `prec` via Machin's formula.
    pub fn pi(prec: u32) -> BigFloat {
        let wp = prec + 64;
        let a = atan_series(&BigFloat::one(wp).div_i64(5));
        let b = atan_series(&BigFloat::one(wp).div_i64(239));
        a.mul_i64(16).sub(&b.mul_i64(4)).with_precision(prec)
    }

    pub fn atan(&self) -> BigFloat {
        let prec = self.prec;
        let wp = prec + 64;
        let x = self.with_precision(wp);
        if x.is_zero() {
            return BigFloat::zero(prec);
        }
        let one = BigFloat::one(wp);
        let r = if x.abs().cmp_value(&one) == Ordering::Greater {
            let half_pi = BigFloat::pi(wp).mul_pow2(-1);
            let inner = atan_reduced(&one.div(&x.abs()));
            let v = half_pi.sub(&inner);
            if x.is_negative() {
                v.neg()
            } else {
                v
            }
        } else {
            atan_reduced(&x)
        };
        r.with_precision(prec)
    }

    /// `(sin x, cos x)` at working precision.
    fn sin_cos(&self) -> (BigFloat, BigFloat) {
        let prec = self.prec;
        let wp = prec + 64 + (self.top().max(0) as u32);
        let x = self.with_precision(wp);
        let pi = BigFloat::pi(wp);
        let k = x.div(&pi).to_rational().round().to_integer();
        let r = x.sub(&pi.mul(&BigFloat::from_bigint(&k, wp)));
        let halvings = 10;
        let r = r.mul_pow2(-halvings);
        let r2 = r.mul(&r);
        let eps_top = -(wp as i64) - 4;
        let mut term = r.clone();
        let mut s = r.clone();
        let mut n = 1i64;
        loop {
            term = term.mul(&r2).div_i64((n + 1) * (n + 2)).neg();
            n += 2;
            if term.is_zero() || term.top() < eps_top {
                break;
            }
            s = s.add(&term);
        }
        let mut c = BigFloat::one(wp).sub(&s.mul(&s)).sqrt().unwrap_or_else(|| BigFloat::zero(wp));
        let mut s = s;
        for _ in 0..halvings {
            let s2 = s.mul(&c).mul_pow2(1);
            c = c.mul(&c).sub(&s.mul(&s));
            s = s2;
        }
        if k.is_odd() {
            (s.neg(), c.neg())
        } else {
            (s, c)
        }
    }

    pub fn sin(&self) -> BigFloat {
        self.sin_cos().0.with_precision(self.prec)
    }

    pub fn cos(&self) -> BigFloat {
        self.sin_cos().1.with_precision(self.prec)
    }

    /// `None` when the cosine underflows to zero (a pole).
    pub fn tan(&self) -> Option<BigFloat> {
        let (s, c) = self.sin_cos();
        Some(s.checked_div(&c)?.with_precision(self.prec))
    }
}

/// Taylor series of atan for small arguments.
fn atan_series(x: &BigFloat) -> BigFloat {
    let wp = x.precision();
    let x2 = x.mul(x);
    let eps_top = -(wp as i64) - 4;
    let mut power = x.clone();
    let mut sum = x.clone();
    let mut k = 1i64;
    loop {
        power = power.mul(&x2).neg();
        k += 2;
        let term = power.div_i64(k);
        if term.is_zero() || term.top() < eps_top {
            break;
        }
        sum = sum.add(&term);
    }
    sum
}

/// atan on |x| ≤ 1 with argument halving `x ↦ x/(1+√(1+x²))`.
fn atan_reduced(x: &BigFloat) -> BigFloat {
    let wp = x.precision();
    let one = BigFloat::one(wp);
    let mut y = x.clone();
    let halvings = 8;
    for _ in 0..halvings {
        let root = one.add(&y.mul(&y)).sqrt().expect("positive radicand");
        y = y.div(&one.add(&root));
    }
    atan_series(&y).mul_pow2(halvings)
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(((self.prec as f64) * std::f64::consts::LOG10_2) as usize);
        write!(f, "{}", self.to_decimal_string(digits))
    }
}
