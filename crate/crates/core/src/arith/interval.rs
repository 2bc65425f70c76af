//! Outward-rounded dyadic interval arithmetic.
//!
//! An [`Interval`] at precision `p` encloses a real in
//! `[lo / 2^p, hi / 2^p]`. Every operation rounds `lo` down and `hi` up, so
//! the enclosure is rigorous; transcendental functions add an explicit bound
//! for the truncated series tail.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: BigInt,
    hi: BigInt,
    prec: u32,
}

fn pow2(k: u32) -> BigInt {
    BigInt::one() << k as usize
}

fn floor_shr(v: &BigInt, k: u32) -> BigInt {
    v.div_floor(&pow2(k))
}

fn ceil_shr(v: &BigInt, k: u32) -> BigInt {
    v.div_ceil(&pow2(k))
}

fn ceil_sqrt(v: &BigInt) -> BigInt {
    let s = v.sqrt();
    if &s * &s < *v {
        s + 1
    } else {
        s
    }
}

impl Interval {
    pub fn from_bounds(lo: BigInt, hi: BigInt, prec: u32) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi, prec }
    }

    pub fn from_int(n: impl Into<BigInt>, prec: u32) -> Self {
        let v = n.into() << prec as usize;
        Self { lo: v.clone(), hi: v, prec }
    }

    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        let scaled = r.numer() << prec as usize;
        Self {
            lo: scaled.div_floor(r.denom()),
            hi: scaled.div_ceil(r.denom()),
            prec,
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn lo_rational(&self) -> Rational {
        Rational::new(self.lo.clone(), pow2(self.prec))
    }

    pub fn hi_rational(&self) -> Rational {
        Rational::new(self.hi.clone(), pow2(self.prec))
    }

    /// Width in units of `2^-prec`.
    pub fn width_units(&self) -> BigInt {
        &self.hi - &self.lo
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    /// `(floor(lo), floor(hi))` of the real endpoints.
    pub fn floor_bounds(&self) -> (BigInt, BigInt) {
        (floor_shr(&self.lo, self.prec), floor_shr(&self.hi, self.prec))
    }

    pub fn mid_f64(&self) -> f64 {
        let mid = Rational::new(&self.lo + &self.hi, pow2(self.prec + 1));
        super::rational_to_f64(&mid)
    }

    pub fn lo_f64(&self) -> f64 {
        super::rational_to_f64(&self.lo_rational())
    }

    pub fn hi_f64(&self) -> f64 {
        super::rational_to_f64(&self.hi_rational())
    }

    /// Re-expresses the enclosure at another precision, rounding outward.
    pub fn with_prec(&self, prec: u32) -> Self {
        match prec.cmp(&self.prec) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let s = (prec - self.prec) as usize;
                Self { lo: &self.lo << s, hi: &self.hi << s, prec }
            }
            Ordering::Less => {
                let s = self.prec - prec;
                Self { lo: floor_shr(&self.lo, s), hi: ceil_shr(&self.hi, s), prec }
            }
        }
    }

    fn widen(&self, units: i64) -> Self {
        Self { lo: &self.lo - units, hi: &self.hi + units, prec: self.prec }
    }

    fn magnitude_units(&self) -> BigInt {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn hull(&self, other: &Self) -> Self {
        debug_assert_eq!(self.prec, other.prec);
        Self {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
            prec: self.prec,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert_eq!(self.prec, o.prec);
        Self { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi, prec: self.prec }
    }

    pub fn sub(&self, o: &Self) -> Self {
        debug_assert_eq!(self.prec, o.prec);
        Self { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo, prec: self.prec }
    }

    pub fn neg(&self) -> Self {
        Self { lo: -&self.hi, hi: -&self.lo, prec: self.prec }
    }

    pub fn mul(&self, o: &Self) -> Self {
        debug_assert_eq!(self.prec, o.prec);
        let products = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let min = products.iter().min().expect("non-empty");
        let max = products.iter().max().expect("non-empty");
        Self { lo: floor_shr(min, self.prec), hi: ceil_shr(max, self.prec), prec: self.prec }
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        let (a, b) = (&self.lo * k, &self.hi * k);
        if k.is_negative() {
            Self { lo: b, hi: a, prec: self.prec }
        } else {
            Self { lo: a, hi: b, prec: self.prec }
        }
    }

    /// Division by a positive integer.
    pub fn div_int(&self, k: u64) -> Self {
        assert!(k > 0);
        let k = BigInt::from(k);
        Self { lo: self.lo.div_floor(&k), hi: self.hi.div_ceil(&k), prec: self.prec }
    }

    /// `None` when the divisor straddles zero at this precision.
    pub fn div(&self, o: &Self) -> Option<Self> {
        debug_assert_eq!(self.prec, o.prec);
        if o.contains_zero() {
            return None;
        }
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for a in [&self.lo, &self.hi] {
            let scaled = a << self.prec as usize;
            for b in [&o.lo, &o.hi] {
                let f = scaled.div_floor(b);
                let c = scaled.div_ceil(b);
                lo = Some(lo.map_or(f.clone(), |x| x.min(f)));
                hi = Some(hi.map_or(c.clone(), |x| x.max(c)));
            }
        }
        Some(Self { lo: lo?, hi: hi?, prec: self.prec })
    }

    pub fn sqrt(&self) -> Option<Self> {
        if self.hi.is_negative() {
            return None;
        }
        let lo = if self.lo.is_positive() { (&self.lo << self.prec as usize).sqrt() } else { BigInt::zero() };
        let hi = ceil_sqrt(&(&self.hi << self.prec as usize));
        Some(Self { lo, hi, prec: self.prec })
    }

    pub fn exp(&self) -> Self {
        let lo = exp_point(&self.lo, self.prec);
        let hi = exp_point(&self.hi, self.prec);
        Self { lo: lo.lo, hi: hi.hi, prec: self.prec }
    }

    /// Natural logarithm; `None` unless the interval is strictly positive.
    pub fn ln(&self) -> Option<Self> {
        if !self.is_positive() {
            return None;
        }
        let lo = ln_point(&self.lo, self.prec);
        let hi = ln_point(&self.hi, self.prec);
        Some(Self { lo: lo.lo, hi: hi.hi, prec: self.prec })
    }

    /// `self^e = exp(e ln self)` for a strictly positive base.
    pub fn pow(&self, e: &Self) -> Option<Self> {
        Some(self.ln()?.mul(e).exp())
    }

    pub fn pi(prec: u32) -> Self {
        let w = prec + 16;
        let a = atan_inv(5, w);
        let b = atan_inv(239, w);
        a.mul_int(&BigInt::from(16)).sub(&b.mul_int(&BigInt::from(4))).with_prec(prec)
    }

    pub fn cos(&self) -> Self {
        sin_cos(self).1
    }

    pub fn sin(&self) -> Self {
        sin_cos(self).0
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        sin_cos(self)
    }
}

/// exp(v / 2^p) for a single dyadic point.
fn exp_point(v: &BigInt, p: u32) -> Interval {
    if v.is_negative() {
        let pos = exp_point(&(-v << 8usize), p + 8);
        // 1/e^|v| with outward rounding
        let one = Interval::from_int(1, p + 8);
        return one.div(&pos).expect("exp is positive").with_prec(p);
    }
    let bits = v.bits() as i64;
    let k = (bits - p as i64 + 2).max(0) as u32;
    // magnitude of e^x in bits bounds the absolute error growth
    let x_upper = if bits > p as i64 { 1u64 << (bits - p as i64).min(62) } else { 1 };
    let growth = ((x_upper as f64) * std::f64::consts::LOG2_E).ceil() as u32 + 2;
    let w = p + k + growth + 24;

    // y = v / 2^(p+k) <= 1/4, exact at precision w
    let y = Interval::from_bounds(v << (w - p - k) as usize, v << (w - p - k) as usize, w);
    let mut sum = Interval::from_int(1, w);
    let mut term = Interval::from_int(1, w);
    let mut n = 1u64;
    loop {
        term = term.mul(&y).div_int(n);
        sum = sum.add(&term);
        if term.magnitude_units() <= BigInt::from(2) {
            break;
        }
        n += 1;
    }
    let mut acc = sum.widen(2);
    for _ in 0..k {
        acc = acc.mul(&acc);
    }
    acc.with_prec(p)
}

/// 2 atanh(z) for an enclosure z in [0, 1/3].
fn two_atanh(z: &Interval) -> Interval {
    let z2 = z.mul(z);
    let mut pow = z.clone();
    let mut sum = z.clone();
    let mut n = 1u64;
    loop {
        pow = pow.mul(&z2);
        let term = pow.div_int(2 * n + 1);
        sum = sum.add(&term);
        if term.magnitude_units() <= BigInt::one() {
            break;
        }
        n += 1;
    }
    sum.widen(1).mul_int(&BigInt::from(2))
}

fn ln2(w: u32) -> Interval {
    two_atanh(&Interval::from_rational(&Rational::new(1.into(), 3.into()), w))
}

/// ln(v / 2^p) for a positive dyadic point.
fn ln_point(v: &BigInt, p: u32) -> Interval {
    debug_assert!(v.is_positive());
    // v / 2^p = 2^e * y with y in [1, 2)
    let e = v.bits() as i64 - 1 - p as i64;
    let w = p + 32 + (64 - e.unsigned_abs().leading_zeros());
    let shift = w as i64 - p as i64 - e;
    let y = if shift >= 0 {
        let s = v << shift as usize;
        Interval::from_bounds(s.clone(), s, w)
    } else {
        let s = (-shift) as u32;
        Interval::from_bounds(floor_shr(v, s), ceil_shr(v, s), w)
    };
    let one = Interval::from_int(1, w);
    let z = y.sub(&one).div(&y.add(&one)).expect("y + 1 > 0");
    let mut res = two_atanh(&z);
    if e != 0 {
        res = res.add(&ln2(w).mul_int(&BigInt::from(e)));
    }
    res.with_prec(p)
}

/// atan(1/n) by its alternating series, enclosing the tail by the next term.
fn atan_inv(n: u64, w: u32) -> Interval {
    let n_big = BigInt::from(n);
    let n2 = &n_big * &n_big;
    let mut denom_pow = n_big.clone();
    let mut sum = Interval::from_int(0, w);
    let mut k = 0u64;
    loop {
        let term = Interval::from_rational(
            &Rational::new(BigInt::one(), &denom_pow * BigInt::from(2 * k + 1)),
            w,
        );
        if term.hi <= BigInt::one() {
            // remaining alternating tail is bounded by this term
            return sum.widen(1);
        }
        sum = if k % 2 == 0 { sum.add(&term) } else { sum.sub(&term) };
        denom_pow *= &n2;
        k += 1;
    }
}

fn sin_cos(x: &Interval) -> (Interval, Interval) {
    let p = x.prec;
    let mut w = p + 24;
    let mut xr = x.with_prec(w);

    // reduce by a multiple of 2 pi when the argument is large
    if xr.magnitude_units() > (BigInt::from(4) << w as usize) {
        let turns = (xr.mid_f64() / std::f64::consts::TAU).round();
        let k = BigInt::from(turns as i64);
        w += k.bits() as u32 + 8;
        xr = x.with_prec(w);
        let two_pi = Interval::pi(w).mul_int(&BigInt::from(2));
        xr = xr.sub(&two_pi.mul_int(&k));
    }

    let bound = xr.magnitude_units();
    let m = floor_shr(&bound, w).to_u64().unwrap_or(u64::MAX) + 1;
    let mut sin = Interval::from_int(0, w);
    let mut cos = Interval::from_int(1, w);
    let mut term = Interval::from_int(1, w);
    let mut n = 1u64;
    loop {
        term = term.mul(&xr).div_int(n);
        match n % 4 {
            1 => sin = sin.add(&term),
            2 => cos = cos.sub(&term),
            3 => sin = sin.sub(&term),
            _ => cos = cos.add(&term),
        }
        if n > 2 * m && term.magnitude_units() <= BigInt::one() {
            break;
        }
        n += 1;
    }
    (sin.widen(2).with_prec(p), cos.widen(2).with_prec(p))
}
