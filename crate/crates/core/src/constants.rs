//! Multiplicative structure of a base pair `(r, s)` and the explicit
//! constants of the cosine-product estimate
//! `sum_{n<N} prod_{k>K} |cos(pi r^n l / s^k)| <= 2 N^{1 - a20}`.
//!
//! Quantities that overflow any machine type (the thresholds `N0`, and
//! `a20` in the variant valid for every `N`) are kept as natural logarithms.

use std::cmp::Ordering;
use std::f64::consts::{E, LN_2, PI};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{rational_serde, Rational};
use crate::error::{Error, Result};

/// Canonical prime factorization `[(p, e)]` with increasing primes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization(pub Vec<(u64, u32)>);

impl Factorization {
    pub fn exponent_of(&self, p: u64) -> u32 {
        self.0.iter().find(|(q, _)| *q == p).map_or(0, |(_, e)| *e)
    }

    pub fn product(&self) -> BigInt {
        self.0
            .iter()
            .fold(BigInt::one(), |acc, &(p, e)| acc * BigInt::from(p).pow(e))
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().map(|(p, _)| *p)
    }
}

/// Trial division; bases are small by nature of the problem.
pub fn factorize(mut n: u64) -> Factorization {
    assert!(n >= 2, "factorize needs n >= 2");
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.checked_mul(p).is_some_and(|pp| pp <= n) {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    Factorization(out)
}

/// `r ~ s`: the exponent vectors of `r` and `s` are proportional.
pub fn mult_dependent(r: u64, s: u64) -> bool {
    let (fr, fs) = (factorize(r), factorize(s));
    if fr.0.len() != fs.0.len() || fr.primes().ne(fs.primes()) {
        return false;
    }
    let (d0, e0) = (fr.0[0].1 as u64, fs.0[0].1 as u64);
    fr.0.iter()
        .zip(&fs.0)
        .all(|(&(_, d), &(_, e))| d as u64 * e0 == e as u64 * d0)
}

/// `p`-adic valuation of a non-zero integer.
pub fn valuation(n: &BigInt, p: u64) -> u32 {
    assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let g = a.mod_floor(m).extended_gcd(m);
    if g.gcd.is_one() {
        Some(g.x.mod_floor(m))
    } else {
        None
    }
}

/// Per-prime quantities `t_i = r^{e_i} / s^{d_i} = u_i / v_i`, `f_i`, `g_i`
/// and the residue `q_i` with `t_i^{f_i} = 1 + q_i p_i^{g_i - 1} (mod p_i^{g_i})`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrimeRecord {
    pub prime: u64,
    /// exponent of the prime in `r`
    pub d: u32,
    /// exponent of the prime in `s`
    pub e: u32,
    #[serde(with = "rational_serde")]
    pub t: Rational,
    #[serde(with = "crate::arith::bigint_serde")]
    pub u: BigInt,
    #[serde(with = "crate::arith::bigint_serde")]
    pub v: BigInt,
    pub f: u32,
    pub g: u32,
    /// `q_i mod p_i`, in `1..p_i`
    pub q: u64,
}

impl PrimeRecord {
    /// Checks the defining congruence by exact modular arithmetic.
    pub fn congruence_holds(&self) -> bool {
        let p = BigInt::from(self.prime);
        if self.q == 0 || self.q >= self.prime {
            return false;
        }
        let modulus = p.pow(self.g);
        let uf = self.u.pow(self.f);
        let vf = self.v.pow(self.f);
        let Some(inv) = mod_inverse(&vf, &modulus) else {
            return false;
        };
        let lhs = (uf * inv).mod_floor(&modulus);
        let rhs = (BigInt::one() + BigInt::from(self.q) * p.pow(self.g - 1)).mod_floor(&modulus);
        lhs == rhs
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasePairAnalysis {
    pub r: u64,
    pub s: u64,
    /// primes of `rs` ordered by `d_i / e_i` descending, `d / 0 = +inf`
    pub primes: Vec<PrimeRecord>,
    /// `max(d_i) * max(e_i)`
    pub b: u32,
    /// number of distinct primes of `rs`
    pub h: usize,
}

impl BasePairAnalysis {
    /// `d_l e_k - d_k e_l >= 0` whenever `l <= k`.
    pub fn ordering_holds(&self) -> bool {
        let ps = &self.primes;
        (0..ps.len()).all(|l| {
            (l..ps.len()).all(|k| {
                ps[l].d as i64 * ps[k].e as i64 - ps[k].d as i64 * ps[l].e as i64 >= 0
            })
        })
    }
}

/// `d_a / e_a` versus `d_b / e_b` with `d / 0 = +inf`.
fn ratio_cmp(a: (u32, u32), b: (u32, u32)) -> Ordering {
    (a.0 as u64 * b.1 as u64).cmp(&(b.0 as u64 * a.1 as u64))
}

pub fn analyze_pair(r: u64, s: u64) -> Result<BasePairAnalysis> {
    if r < 2 || s < 2 {
        return Err(Error::Invalid(format!("bases must be >= 2, got ({r}, {s})")));
    }
    if mult_dependent(r, s) {
        return Err(Error::MultiplicativelyDependent { r, s });
    }
    let (fr, fs) = (factorize(r), factorize(s));
    let mut primes: Vec<u64> = fr.primes().chain(fs.primes()).collect();
    primes.sort_unstable();
    primes.dedup();
    let mut de: Vec<(u64, u32, u32)> =
        primes.iter().map(|&p| (p, fr.exponent_of(p), fs.exponent_of(p))).collect();
    de.sort_by(|a, b| ratio_cmp((b.1, b.2), (a.1, a.2)).then(a.0.cmp(&b.0)));

    let b = de.iter().map(|x| x.1).max().unwrap_or(0) * de.iter().map(|x| x.2).max().unwrap_or(0);
    let mut records = Vec::with_capacity(de.len());
    for (i, &(p, d_i, e_i)) in de.iter().enumerate() {
        // exponent of p_j in t_i is d_j e_i - e_j d_i: >= 0 for j <= i, <= 0 after
        let mut u = BigInt::one();
        let mut v = BigInt::one();
        for (j, &(pj, d_j, e_j)) in de.iter().enumerate() {
            let expo = d_j as i64 * e_i as i64 - e_j as i64 * d_i as i64;
            let factor = BigInt::from(pj).pow(expo.unsigned_abs() as u32);
            if j <= i {
                debug_assert!(expo >= 0);
                u *= factor;
            } else {
                debug_assert!(expo <= 0);
                v *= factor;
            }
        }
        let t = Rational::new(u.clone(), v.clone());
        debug_assert_eq!(
            t,
            Rational::new(BigInt::from(r).pow(e_i), BigInt::from(s).pow(d_i))
        );
        let f = if p == 2 { 2 } else { (p - 1) as u32 };
        let diff = u.pow(f) - v.pow(f);
        let val = valuation(&diff, p);
        let g = val + 1;
        let pb = BigInt::from(p);
        let reduced = &diff / pb.pow(val);
        let inv = mod_inverse(&v.pow(f), &pb).expect("v is prime to p");
        let q = (reduced * inv).mod_floor(&pb).to_u64().expect("residue below p");
        records.push(PrimeRecord { prime: p, d: d_i, e: e_i, t, u, v, f, g, q });
    }
    Ok(BasePairAnalysis { r, s, h: records.len(), primes: records, b })
}

/// Which `N`-range the constants are valid for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// valid for `N >= N0` (the thresholds below)
    LargeN,
    /// valid for every `N`, at the price of astronomically small constants
    AllN,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "large-n" => Ok(Variant::LargeN),
            "all-n" => Ok(Variant::AllN),
            _ => Err(Error::Invalid(format!("unknown variant {s:?} (large-n | all-n)"))),
        }
    }
}

/// A positive real stored by its natural logarithm. `value` underflows to
/// zero for the all-`N` constants; `ln` is authoritative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogReal {
    pub ln: f64,
}

impl LogReal {
    pub fn from_value(v: f64) -> Self {
        assert!(v > 0.0);
        Self { ln: v.ln() }
    }

    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    pub fn min(self, o: Self) -> Self {
        if self.ln <= o.ln {
            self
        } else {
            o
        }
    }
}

/// Every explicit constant for one base pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantSet {
    pub r: u64,
    pub s: u64,
    /// `max(r, s)`
    pub m: u64,
    pub variant: Variant,
    pub a1: u32,
    #[serde(with = "crate::arith::bigint_serde")]
    pub a2: BigInt,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
    pub a8: f64,
    pub a9: f64,
    pub a14: LogReal,
    pub a15: LogReal,
    pub a20: LogReal,
    pub a21: f64,
    pub a22: LogReal,
    pub alpha5: f64,
    pub log_n0_hs2: f64,
    pub log_n0_hs3: f64,
    pub log_n0_hs4: f64,
    /// diagnostic: `alpha5 <= 1.87 sqrt(log s)`
    pub alpha5_within_bound: bool,
}

/// `log N0` for the first reduction step: `288 m L^4 + 192 L^3 + 24 L^2`.
pub fn log_n0_hs2(m: u64) -> f64 {
    let l = (m as f64).ln();
    288.0 * m as f64 * l.powi(4) + 192.0 * l.powi(3) + 24.0 * l.powi(2)
}

/// `log N0` of the final threshold: `288 (12 m L^4 + 8 L^3 + L^2)`.
pub fn log_n0_hs4(m: u64) -> f64 {
    let l = (m as f64).ln();
    288.0 * (12.0 * m as f64 * l.powi(4) + 8.0 * l.powi(3) + l.powi(2))
}

/// The closed-form choice `a4 = 0.028 / log(s^2 - 2)`.
pub fn a4_closed_form(s: u64) -> f64 {
    0.028 / ((s * s - 2) as f64).ln()
}

/// `log f(a)` with `f(a) = 2^{1/4 + 2a} a^a (1 - 2a)^{1/2 - a}`.
fn log_f(a: f64) -> f64 {
    (0.25 + 2.0 * a) * LN_2 + a * a.ln() + (0.5 - a) * (1.0 - 2.0 * a).ln()
}

/// Supremum of the admissible `a4` in `(0, 1/16]`, i.e. of the `a` with
/// `(s^2 - 2)^a < f(a)`, by bisection to relative tolerance `1e-6`.
pub fn solve_exact_a4(s: u64) -> f64 {
    assert!(s >= 2);
    let c = ((s * s - 2) as f64).ln();
    let admissible = |a: f64| a * c < log_f(a);
    let top = 1.0 / 16.0;
    if admissible(top) {
        return top;
    }
    let (mut lo, mut hi) = (1e-12, top);
    while hi - lo > 1e-6 * lo {
        let mid = 0.5 * (lo + hi);
        if admissible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn compute_constants(analysis: &BasePairAnalysis, variant: Variant) -> ConstantSet {
    let (r, s) = (analysis.r, analysis.s);
    let m = r.max(s);
    let ls = (s as f64).ln();
    let lm = (m as f64).ln();

    let a1 = analysis.primes.iter().map(|p| p.g).max().unwrap_or(0);
    let a2 = analysis
        .primes
        .iter()
        .filter(|p| p.e > 0)
        .map(|p| BigInt::from(p.prime).pow(2 * analysis.b + p.g))
        .max()
        .unwrap_or_else(BigInt::zero);
    let a3 = 120.0 * ls.sqrt();
    let a4 = a4_closed_form(s);
    let alpha5 = E / (4.0 * PI * (a4 * (1.0 - 2.0 * a4)).sqrt());
    let a5 = LN_2 / (16.0 * ls);
    let a6 = 0.014 / ls * (1.0 / ls - 1.0 / s as f64);
    let a8 = a5 - (7f64.ln() + 3.0 * lm.ln()) / (288.0 * m as f64);
    let a9 = a6 / 2.0;
    let a21 = (PI / (s * s) as f64).cos();
    let neg_log_a21 = -a21.ln();

    let hs2 = log_n0_hs2(m);
    let hs4 = log_n0_hs4(m);

    let (a14, a15) = match variant {
        Variant::LargeN => (LogReal::from_value(a8 / 6.0), LogReal::from_value(a9 / 6.0)),
        Variant::AllN => (
            LogReal { ln: -hs4 - hs4.ln() },
            LogReal { ln: -LN_2 - hs4.ln() },
        ),
    };
    let a22 = LogReal { ln: a15.ln + neg_log_a21.ln() };
    let a20 = a14.min(a22);

    ConstantSet {
        r,
        s,
        m,
        variant,
        a1,
        a2,
        a3,
        a4,
        a5,
        a6,
        a8,
        a9,
        a14,
        a15,
        a20,
        a21,
        a22,
        alpha5,
        log_n0_hs2: hs2,
        log_n0_hs3: 2.0 * hs2,
        log_n0_hs4: hs4,
        alpha5_within_bound: alpha5 <= 1.87 * ls.sqrt(),
    }
}

/// The approximate closed form `0.0057 / (s^4 log s) * (1/log s - 1/s)` of
/// the large-`N` constant `a20`.
pub fn a20_approximation(s: u64) -> f64 {
    let ls = (s as f64).ln();
    0.0057 / ((s as f64).powi(4) * ls) * (1.0 / ls - 1.0 / s as f64)
}

impl ConstantSet {
    /// `(name, value, defining formula)` rows for display.
    pub fn describe(&self) -> Vec<(&'static str, String, &'static str)> {
        let lr = |x: &LogReal| format!("{:.6e} (ln = {:.6})", x.value(), x.ln);
        let (a14_f, a15_f) = match self.variant {
            Variant::LargeN => ("a8 / 6", "a9 / 6"),
            Variant::AllN => ("1 / (N0 log N0), N0 = N0_HS4", "1 / (2 log N0)"),
        };
        vec![
            ("a1", self.a1.to_string(), "max_i g_i"),
            ("a2", self.a2.to_string(), "max_{i, e_i > 0} p_i^(2b + g_i)"),
            ("a3", format!("{:.9}", self.a3), "120 sqrt(log s)"),
            ("a4", format!("{:.9}", self.a4), "0.028 / log(s^2 - 2)"),
            ("alpha5", format!("{:.9}", self.alpha5), "e / (4 pi sqrt(a4 (1 - 2 a4)))"),
            ("a5", format!("{:.9}", self.a5), "log 2 / (16 log s)"),
            ("a6", format!("{:.9e}", self.a6), "0.014 / log s * (1/log s - 1/s)"),
            ("a8", format!("{:.9e}", self.a8), "a5 - (log 7 + 3 log log m) / (288 m)"),
            ("a9", format!("{:.9e}", self.a9), "a6 / 2"),
            ("a14", lr(&self.a14), a14_f),
            ("a15", lr(&self.a15), a15_f),
            ("a21", format!("{:.12}", self.a21), "cos(pi / s^2)"),
            ("a22", lr(&self.a22), "-a15 log a21"),
            ("a20", lr(&self.a20), "min(a14, a22)"),
            ("log_N0_HS2", format!("{:.6}", self.log_n0_hs2), "288 m L^4 + 192 L^3 + 24 L^2, L = log m"),
            ("log_N0_HS3", format!("{:.6}", self.log_n0_hs3), "2 log N0_HS2"),
            ("log_N0_HS4", format!("{:.6}", self.log_n0_hs4), "288 (12 m L^4 + 8 L^3 + L^2)"),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(12), Factorization(vec![(2, 2), (3, 1)]));
        assert_eq!(factorize(2), Factorization(vec![(2, 1)]));
        assert_eq!(factorize(360), Factorization(vec![(2, 3), (3, 2), (5, 1)]));
        assert_eq!(factorize(360).product(), BigInt::from(360));
        assert_eq!(factorize(97), Factorization(vec![(97, 1)]));
    }

    #[test]
    fn dependence_examples() {
        assert!(mult_dependent(2, 8));
        assert!(!mult_dependent(2, 3));
        assert!(mult_dependent(4, 8));
        assert!(mult_dependent(12, 144));
        assert!(!mult_dependent(12, 18));
    }

    #[test]
    fn analysis_of_two_three() {
        let a = analyze_pair(2, 3).unwrap();
        assert_eq!(a.primes.iter().map(|p| p.prime).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!((a.b, a.h), (1, 2));
        let p2 = &a.primes[0];
        assert_eq!((p2.t.clone(), p2.f, p2.g), (rat(1, 3), 2, 4));
        let p3 = &a.primes[1];
        assert_eq!((p3.t.clone(), p3.f, p3.g), (rat(2, 1), 2, 2));
        assert!(a.primes.iter().all(PrimeRecord::congruence_holds));
        assert!(a.ordering_holds());
    }

    #[test]
    fn dependent_pair_is_rejected() {
        assert!(matches!(analyze_pair(4, 8), Err(Error::MultiplicativelyDependent { .. })));
    }

    #[test]
    fn two_three_golden_constants() {
        let c = compute_constants(&analyze_pair(2, 3).unwrap(), Variant::LargeN);
        assert_eq!(c.a1, 4);
        assert_eq!(c.a2, BigInt::from(81));
        assert!((c.log_n0_hs4 - 18506.0).abs() < 1.0);
        assert_eq!(c.a20, c.a22);
        let ratio = c.a20.value() / a20_approximation(3);
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn all_n_variant_is_log_space() {
        let c = compute_constants(&analyze_pair(2, 3).unwrap(), Variant::AllN);
        assert!(c.a20.ln < -18000.0);
        assert_eq!(c.a20.value(), 0.0);
    }

    #[test]
    fn exact_a4_examples() {
        let a2 = solve_exact_a4(2);
        assert!((0.053..=0.057).contains(&a2), "{a2}");
        let a3 = solve_exact_a4(3);
        assert!(a3 > a4_closed_form(3) && a3 < 1.0 / 16.0);
        assert!(solve_exact_a4(10) < a3);
    }
}
