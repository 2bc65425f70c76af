use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::Rational;

/// Base-`base` digits `d_1 d_2 ...` after the radix point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitString {
    pub base: u32,
    pub digits: Vec<u32>,
}

impl DigitString {
    pub fn new(base: u32, digits: Vec<u32>) -> Self {
        assert!(base >= 2, "base must be at least 2");
        debug_assert!(digits.iter().all(|&d| d < base));
        Self { base, digits }
    }

    pub fn empty(base: u32) -> Self {
        Self::new(base, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn is_prefix_of(&self, other: &DigitString) -> bool {
        self.base == other.base
            && self.digits.len() <= other.digits.len()
            && other.digits[..self.digits.len()] == self.digits[..]
    }

    /// Value `0.d_1 ... d_n` as an exact rational.
    pub fn value(&self) -> Rational {
        let mut num = BigInt::zero();
        let mut den = BigInt::from(1u32);
        for &d in &self.digits {
            num = num * self.base + d;
            den *= self.base;
        }
        Rational::new(num, den)
    }
}

impl fmt::Display for DigitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.base <= 36 {
            for &d in &self.digits {
                let c = std::char::from_digit(d, self.base).unwrap_or('?');
                write!(f, "{c}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.digits.iter().map(|d| d.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

/// First `count` digits of `x` in `[0, 1)`. Long division never yields an
/// infinite tail of `base - 1`, so this is the canonical expansion.
pub fn digits_of_rational(x: &Rational, base: u32, count: usize) -> DigitString {
    assert!(base >= 2);
    assert!(!x.is_negative() && x.numer() < x.denom(), "x must lie in [0, 1)");
    let q = x.denom();
    let mut r = x.numer().clone();
    let mut digits = Vec::with_capacity(count);
    for _ in 0..count {
        r *= base;
        let (d, rem) = r.div_rem(q);
        digits.push(d.to_u32().expect("digit below base"));
        r = rem;
    }
    DigitString::new(base, digits)
}

/// Longest digit prefix shared by every real in `[lo, hi)`.
///
/// Digit `j` is certain when `floor(lo b^j) = ceil(hi b^j) - 1`, i.e. the
/// whole half-open interval sits inside one cell of width `b^-j`.
pub fn certain_digits(lo: &Rational, hi: &Rational, base: u32) -> DigitString {
    assert!(base >= 2);
    assert!(!lo.is_negative() && lo < hi && hi <= &Rational::from_integer(1.into()));
    let b = BigInt::from(base);

    // floor(lo b^j) and floor(hi b^j) with their remainders, updated
    // incrementally: floor(y b^{j+1}) = b floor(y b^j) + floor(b rem / den)
    let (lo_den, hi_den) = (lo.denom(), hi.denom());
    let (mut lo_floor, mut lo_rem) = lo.numer().div_rem(lo_den);
    let (mut hi_floor, mut hi_rem) = hi.numer().div_rem(hi_den);

    let mut digits = Vec::new();
    loop {
        let (lq, lr) = (&lo_rem * &b).div_rem(lo_den);
        lo_floor = &lo_floor * &b + lq;
        lo_rem = lr;
        let (hq, hr) = (&hi_rem * &b).div_rem(hi_den);
        hi_floor = &hi_floor * &b + hq;
        hi_rem = hr;

        let hi_below = if hi_rem.is_zero() { &hi_floor - 1 } else { hi_floor.clone() };
        if lo_floor != hi_below {
            break;
        }
        let d = lo_floor.mod_floor(&b);
        digits.push(d.to_u32().expect("digit below base"));
    }
    DigitString::new(base, digits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};

    fn ds(base: u32, s: &str) -> DigitString {
        DigitString::new(base, s.chars().map(|c| c.to_digit(base).unwrap()).collect())
    }

    #[test]
    fn certain_digit_examples() {
        let lo = rat(1, 3);
        let hi = &lo + rat(1, 1000);
        assert_eq!(certain_digits(&lo, &hi, 10), ds(10, "33"));
        assert_eq!(certain_digits(&rat_int(0), &rat_int(1), 2), ds(2, ""));
        // [1/4, 3/8) = [0.010, 0.011) in binary: three digits are shared
        assert_eq!(certain_digits(&rat(1, 4), &rat(3, 8), 2), ds(2, "010"));
    }

    #[test]
    fn digits_examples() {
        assert_eq!(digits_of_rational(&rat(1, 2), 2, 3), ds(2, "100"));
        assert_eq!(digits_of_rational(&rat(4, 9), 3, 4), ds(3, "1100"));
        assert_eq!(digits_of_rational(&rat_int(0), 7, 2), ds(7, "00"));
    }

    #[test]
    fn value_round_trip() {
        let d = ds(3, "1201");
        assert_eq!(digits_of_rational(&d.value(), 3, 4), d);
        assert_eq!(d.to_string(), "1201");
        assert!(ds(3, "12").is_prefix_of(&d));
    }

    #[test]
    fn grid_interval_yields_exact_depth() {
        // [k/5^6, (k+1)/5^6) determines exactly six base-5 digits
        let lo = rat(4321, 15625);
        let hi = rat(4322, 15625);
        assert_eq!(certain_digits(&lo, &hi, 5).len(), 6);
    }
}
