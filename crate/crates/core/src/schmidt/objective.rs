//! The step objective `A'_m(x)`.
//!
//! For `x = P/Q` every phase `r^j t x mod 1` is `y/Q` with
//! `y = r^j t P mod Q`. Consecutive `j` only multiply `y` by `r`, so after
//! one modular product per `(r, t)` the inner loop runs on machine words
//! whenever `Q r < 2^128`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};

use crate::arith::interval::Interval;
use crate::arith::{Neumaier, Rational};
use crate::error::Result;
use crate::plan::SequencePlan;
use crate::schedule::Schedule;

#[derive(Clone, Debug)]
pub(crate) enum Modulus {
    Word(u128),
    Big(BigUint),
}

#[derive(Clone, Debug)]
pub(crate) enum Residue {
    Word(u128),
    Big(BigUint),
}

impl Modulus {
    pub(crate) fn new(q: &BigUint, max_mult: u64) -> Self {
        let mult_bits = 64 - max_mult.max(1).leading_zeros() as u64;
        if q.bits() <= 127 && q.bits() + mult_bits <= 128 {
            Modulus::Word(q.to_u128().expect("checked bit length"))
        } else {
            Modulus::Big(q.clone())
        }
    }

    pub(crate) fn residue(&self, v: &BigUint) -> Residue {
        match self {
            Modulus::Word(q) => Residue::Word((v % BigUint::from(*q)).to_u128().unwrap()),
            Modulus::Big(q) => Residue::Big(v % q),
        }
    }

    pub(crate) fn add(&self, a: &Residue, b: &Residue) -> Residue {
        match (self, a, b) {
            (Modulus::Word(q), Residue::Word(a), Residue::Word(b)) => Residue::Word(addmod(*a, *b, *q)),
            (Modulus::Big(q), Residue::Big(a), Residue::Big(b)) => Residue::Big((a + b) % q),
            _ => unreachable!("residue from a different modulus"),
        }
    }

    pub(crate) fn to_biguint(&self) -> BigUint {
        match self {
            Modulus::Word(q) => BigUint::from(*q),
            Modulus::Big(q) => q.clone(),
        }
    }
}

impl Residue {
    pub(crate) fn to_biguint(&self) -> BigUint {
        match self {
            Residue::Word(v) => BigUint::from(*v),
            Residue::Big(v) => v.clone(),
        }
    }
}

#[inline]
fn addmod(a: u128, b: u128, q: u128) -> u128 {
    // q < 2^127, so the sum cannot overflow
    let s = a + b;
    if s >= q {
        s - q
    } else {
        s
    }
}

#[inline]
fn mulmod(a: u128, b: u128, q: u128) -> u128 {
    if q <= u64::MAX as u128 {
        return (a % q) * (b % q) % q;
    }
    let (mut a, mut b) = (a % q, b % q);
    let mut r = 0u128;
    while b > 0 {
        if b & 1 == 1 {
            r = addmod(r, a, q);
        }
        a = addmod(a, a, q);
        b >>= 1;
    }
    r
}

#[derive(Clone, Debug)]
struct Term {
    r: u64,
    /// how often `r` occurs among the active bases
    mult: u64,
    len: u64,
    /// `r^{<m; r> + 1} mod Q`
    rho: Residue,
}

/// `A'_m` for all `x` sharing the denominator `Q`.
#[derive(Clone, Debug)]
pub(crate) struct Objective {
    m: u64,
    terms: Vec<Term>,
    pub(crate) modulus: Modulus,
}

impl Objective {
    pub(crate) fn new(m: usize, plan: &SequencePlan, schedule: &Schedule, q: &BigUint) -> Result<Self> {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for r in plan.active_bases(m)? {
            *counts.entry(r).or_default() += 1;
        }
        let max_r = counts.keys().copied().max().unwrap_or(1);
        let modulus = Modulus::new(q, max_r);
        let mut terms = Vec::with_capacity(counts.len());
        for (r, mult) in counts {
            let lo = schedule.symbol_at(m as u64, r)?;
            let hi = schedule.symbol_at(m as u64 + 1, r)?;
            let rho = modulus.residue(&BigUint::from(r).modpow(&BigUint::from(lo + 1), q));
            terms.push(Term { r, mult, len: hi.saturating_sub(lo), rho });
        }
        Ok(Self { m: m as u64, terms, modulus })
    }

    /// Number of `e(.)` evaluations per call of [`Objective::eval`].
    pub(crate) fn phase_evaluations(&self) -> u64 {
        self.terms.iter().map(|t| self.m * t.len).sum()
    }

    /// `A'_m(P/Q)` in floating point; the `t < 0` half is the conjugate of
    /// the `t > 0` half.
    pub(crate) fn eval(&self, p: &Residue) -> f64 {
        let mut total = Neumaier::default();
        match (&self.modulus, p) {
            (Modulus::Word(q), Residue::Word(p)) => {
                let (q, qf) = (*q, *q as f64);
                for term in &self.terms {
                    let Residue::Word(rho) = term.rho else { unreachable!() };
                    let start = mulmod(rho, *p, q);
                    let mut y0 = 0u128;
                    for _ in 1..=self.m {
                        y0 = addmod(y0, start, q);
                        let mut y = y0;
                        let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
                        for _ in 0..term.len {
                            let (s, c) = (TAU * (y as f64 / qf)).sin_cos();
                            re.add(c);
                            im.add(s);
                            y = y * term.r as u128 % q;
                        }
                        let (re, im) = (re.value(), im.value());
                        total.add(term.mult as f64 * (re * re + im * im));
                    }
                }
            }
            (Modulus::Big(q), Residue::Big(p)) => {
                for term in &self.terms {
                    let Residue::Big(rho) = &term.rho else { unreachable!() };
                    let start = (rho * p) % q;
                    let mut y0 = BigUint::zero();
                    for _ in 1..=self.m {
                        y0 = (&y0 + &start) % q;
                        let mut y = y0.clone();
                        let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
                        for _ in 0..term.len {
                            let (s, c) = (TAU * big_phase(&y, q)).sin_cos();
                            re.add(c);
                            im.add(s);
                            y = (y * term.r) % q;
                        }
                        let (re, im) = (re.value(), im.value());
                        total.add(term.mult as f64 * (re * re + im * im));
                    }
                }
            }
            _ => unreachable!("residue from a different modulus"),
        }
        2.0 * total.value()
    }

    /// Rigorous enclosure of `A'_m(P/Q)` at `prec` bits.
    pub(crate) fn eval_interval(&self, p: &BigUint, prec: u32) -> Interval {
        let q = self.modulus.to_biguint();
        let qi = BigInt::from_biguint(Sign::Plus, q.clone());
        let two_pi = Interval::pi(prec).mul_int(&BigInt::from(2));
        let mut total = Interval::from_int(0, prec);
        for term in &self.terms {
            let rho = term.rho.to_biguint();
            let start = (rho * p) % &q;
            let mut y0 = BigUint::zero();
            for _ in 1..=self.m {
                y0 = (&y0 + &start) % &q;
                let mut y = y0.clone();
                let mut re = Interval::from_int(0, prec);
                let mut im = Interval::from_int(0, prec);
                for _ in 0..term.len {
                    let phase = Rational::new(BigInt::from_biguint(Sign::Plus, y.clone()), qi.clone());
                    let (s, c) = two_pi.mul(&Interval::from_rational(&phase, prec)).sin_cos();
                    re = re.add(&c);
                    im = im.add(&s);
                    y = (y * term.r) % &q;
                }
                let sq = re.mul(&re).add(&im.mul(&im));
                total = total.add(&sq.mul_int(&BigInt::from(term.mult)));
            }
        }
        total.mul_int(&BigInt::from(2))
    }
}

/// `y / q` to f64 accuracy for big moduli.
fn big_phase(y: &BigUint, q: &BigUint) -> f64 {
    let shift = q.bits().saturating_sub(64) as usize;
    let (ys, qs) = (y >> shift, q >> shift);
    ys.to_f64().unwrap_or(0.0) / qs.to_f64().unwrap_or(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mulmod_matches_bigint() {
        let q: u128 = (1u128 << 100) + 12345;
        let (a, b) = ((1u128 << 99) + 77, (1u128 << 98) + 3);
        let expect = (BigUint::from(a) * BigUint::from(b)) % BigUint::from(q);
        assert_eq!(BigUint::from(mulmod(a, b, q)), expect);
        assert_eq!(mulmod(7, 9, 10), 3);
    }

    #[test]
    fn big_phase_accuracy() {
        let q = BigUint::from(3u32).pow(200);
        let y = &q / BigUint::from(3u32);
        assert!((big_phase(&y, &q) - 1.0 / 3.0).abs() < 1e-15);
    }
}
