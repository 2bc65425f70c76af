//! Fractional parts `{r^j t x}` of rationals through modular residues.
//!
//! For `x = p/q` the fractional part of `M x` only depends on `M p mod q`,
//! so `r^j` never has to be materialised in full.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use super::Rational;

/// `{scale * t * x}` computed exactly as `((scale * t * p) mod q) / q`.
pub fn frac_mod1(x: &Rational, scale: &BigInt, t: i64) -> Rational {
    let q = x.denom();
    let prod = (scale.mod_floor(q) * BigInt::from(t)).mod_floor(q) * x.numer();
    Rational::new(prod.mod_floor(q), q.clone())
}

/// `{base^exp * t * x}` using modular exponentiation for `base^exp mod q`.
pub fn frac_pow_mod1(x: &Rational, base: u64, exp: u64, t: i64) -> Rational {
    let q = x.denom();
    let q_mag = q.magnitude();
    let residue = BigUint::from(base).modpow(&BigUint::from(exp), q_mag);
    frac_mod1(x, &BigInt::from_biguint(Sign::Plus, residue), t)
}

/// Arithmetic in `Z/qZ` with phases `a/q` read back as `f64`.
///
/// Two implementations exist so that the hot loops of the objective and of
/// Weyl sums stay in machine words whenever the modulus allows it.
pub trait ModRing: Sync + Send {
    type Elem: Clone + Send + Sync;

    fn reduce(&self, v: &BigUint) -> Self::Elem;
    fn reduce_signed(&self, v: i64) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn zero(&self) -> Self::Elem;
    /// `a / q` as a float in `[0, 1)`.
    fn phase(&self, a: &Self::Elem) -> f64;
    fn to_biguint(&self, a: &Self::Elem) -> BigUint;
}

/// Moduli below `2^63`; products fit in `u128`.
#[derive(Clone, Copy, Debug)]
pub struct SmallMod {
    q: u64,
}

impl SmallMod {
    pub fn new(q: u64) -> Self {
        assert!(q >= 1);
        Self { q }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }
}

impl ModRing for SmallMod {
    type Elem = u64;

    fn reduce(&self, v: &BigUint) -> u64 {
        (v % self.q).to_u64().unwrap_or(0)
    }

    fn reduce_signed(&self, v: i64) -> u64 {
        (v as i128).rem_euclid(self.q as i128) as u64
    }

    #[inline]
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.q as u128) as u64
    }

    #[inline]
    fn add(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 + *b as u128) % self.q as u128) as u64
    }

    fn zero(&self) -> u64 {
        0
    }

    #[inline]
    fn phase(&self, a: &u64) -> f64 {
        *a as f64 / self.q as f64
    }

    fn to_biguint(&self, a: &u64) -> BigUint {
        BigUint::from(*a)
    }
}

#[derive(Clone, Debug)]
pub struct BigMod {
    q: BigUint,
}

impl BigMod {
    pub fn new(q: BigUint) -> Self {
        assert!(!q.is_zero());
        Self { q }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.q
    }
}

impl ModRing for BigMod {
    type Elem = BigUint;

    fn reduce(&self, v: &BigUint) -> BigUint {
        v % &self.q
    }

    fn reduce_signed(&self, v: i64) -> BigUint {
        let r = BigInt::from(v).mod_floor(&BigInt::from_biguint(Sign::Plus, self.q.clone()));
        r.to_biguint().unwrap_or_default()
    }

    fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.q
    }

    fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a + b) % &self.q
    }

    fn zero(&self) -> BigUint {
        BigUint::zero()
    }

    fn phase(&self, a: &BigUint) -> f64 {
        // 64 leading bits of a/q suffice for an f64 mantissa
        let scaled = (a << 64usize) / &self.q;
        scaled.to_f64().unwrap_or(0.0) * 2f64.powi(-64)
    }

    fn to_biguint(&self, a: &BigUint) -> BigUint {
        a.clone()
    }
}

/// Largest modulus handled by [`SmallMod`].
pub const SMALL_MOD_LIMIT: u64 = 1 << 63;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};
    use num_traits::One;

    #[test]
    fn frac_mod1_examples() {
        assert_eq!(frac_mod1(&rat(1, 3), &BigInt::from(2), 1), rat(2, 3));
        assert_eq!(frac_mod1(&rat(1, 3), &BigInt::from(4), 1), rat(1, 3));
        assert_eq!(frac_mod1(&rat_int(0), &BigInt::from(12345), -7), rat_int(0));
        // negative multipliers wrap into [0, 1)
        assert_eq!(frac_mod1(&rat(1, 3), &BigInt::one(), -1), rat(2, 3));
    }

    #[test]
    fn pow_variant_matches_scale_variant() {
        let x = rat(5, 21);
        for j in 0..20u32 {
            let scale = BigInt::from(2).pow(j);
            assert_eq!(frac_pow_mod1(&x, 2, j as u64, 3), frac_mod1(&x, &scale, 3));
        }
    }

    #[test]
    fn rings_agree() {
        let small = SmallMod::new(1_000_003);
        let big = BigMod::new(BigUint::from(1_000_003u64));
        let a = small.reduce_signed(-17);
        let b = big.reduce_signed(-17);
        assert_eq!(BigUint::from(a), b);
        let a2 = small.mul(&a, &small.reduce(&BigUint::from(999_999u64)));
        let b2 = big.mul(&b, &big.reduce(&BigUint::from(999_999u64)));
        assert_eq!(BigUint::from(a2), b2);
        assert!((small.phase(&a2) - big.phase(&b2)).abs() < 1e-15);
    }
}
