//! Measuring equidistribution: exact discrepancies, Weyl sums over orbits
//! `{b^n x}`, the Erdős–Turán bound, the cosine-product sum, nice digit
//! pairs and the cell-deviation bridge.

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{
    is_unit_interval, rat_int, BigMod, DigitString, ModRing, Neumaier, Rational, SmallMod, SMALL_MOD_LIMIT,
};
use crate::constants::mult_dependent;
use crate::error::{Error, Result};

fn check_points(points: &[Rational]) -> Result<Vec<Rational>> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    if let Some(p) = points.iter().find(|p| !is_unit_interval(p)) {
        return Err(Error::Invalid(format!("point {p} is outside [0, 1)")));
    }
    let mut v = points.to_vec();
    v.sort();
    Ok(v)
}

/// `D_N = max_i (i/N - x_(i)) + max_i (x_(i) - (i-1)/N)` over the sorted
/// points, exactly.
pub fn discrepancy_extreme(points: &[Rational]) -> Result<Rational> {
    let xs = check_points(points)?;
    let n = rat_int(xs.len() as i64);
    let mut up: Option<Rational> = None;
    let mut down: Option<Rational> = None;
    for (i, x) in xs.iter().enumerate() {
        let a = rat_int(i as i64 + 1) / &n - x;
        let b = x - rat_int(i as i64) / &n;
        up = Some(up.map_or(a.clone(), |u| u.max(a)));
        down = Some(down.map_or(b.clone(), |d| d.max(b)));
    }
    Ok(up.unwrap() + down.unwrap())
}

/// `D*_N = max_i max(i/N - x_(i), x_(i) - (i-1)/N)`.
pub fn discrepancy_star(points: &[Rational]) -> Result<Rational> {
    let xs = check_points(points)?;
    let n = rat_int(xs.len() as i64);
    let mut best = Rational::zero();
    for (i, x) in xs.iter().enumerate() {
        let a = rat_int(i as i64 + 1) / &n - x;
        let b = x - rat_int(i as i64) / &n;
        best = best.max(a).max(b);
    }
    Ok(best)
}

/// `{b^n x}` for `n = 1..=count`.
pub fn orbit_points(x: &Rational, base: u64, count: usize) -> Vec<Rational> {
    let q = x.denom().clone();
    let mut y = x.numer().mod_floor(&q);
    let b = BigInt::from(base);
    (0..count)
        .map(|_| {
            y = (&y * &b).mod_floor(&q);
            Rational::new(y.clone(), q.clone())
        })
        .collect()
}

/// Phases `{b^n t x}`, `n = 1..=count`, read as floats, through exact
/// residues.
fn orbit_phases<R: ModRing>(ring: &R, p: &BigUint, base: u64, t: i64, count: usize, f: &mut impl FnMut(f64)) {
    let b = ring.reduce(&BigUint::from(base));
    let mut y = ring.mul(&ring.reduce(p), &ring.reduce_signed(t));
    for _ in 0..count {
        y = ring.mul(&y, &b);
        f(ring.phase(&y));
    }
}

/// `sum_{n=1}^N e(b^n t x)` with compensated summation.
pub fn weyl_sum(x: &Rational, base: u64, t: i64, count: usize) -> Complex64 {
    let q = x.denom().to_biguint().expect("positive denominator");
    let p = x.numer().mod_floor(x.denom()).to_biguint().expect("reduced");
    let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
    let mut acc = |phase: f64| {
        let (s, c) = (std::f64::consts::TAU * phase).sin_cos();
        re.add(c);
        im.add(s);
    };
    match q.to_u64() {
        Some(qs) if qs < SMALL_MOD_LIMIT => orbit_phases(&SmallMod::new(qs), &p, base, t, count, &mut acc),
        _ => orbit_phases(&BigMod::new(q), &p, base, t, count, &mut acc),
    }
    Complex64::new(re.value(), im.value())
}

/// Constants of the Erdős–Turán inequality
/// `D_N <= C1/H + C2 sum_{t<=H} |W_t| / (t N)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtConstants {
    pub c1: f64,
    pub c2: f64,
}

impl Default for EtConstants {
    fn default() -> Self {
        Self { c1: 1.0, c2: 3.0 }
    }
}

/// `H = floor(log N)`, at least 1.
pub fn default_h(count: usize) -> usize {
    ((count as f64).ln().floor() as usize).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtBound {
    pub h: usize,
    pub constants: EtConstants,
    /// `|W_t| / N` for `t = 1..=H`
    pub normalised_sums: Vec<f64>,
    pub bound: f64,
}

pub fn erdos_turan_bound(x: &Rational, base: u64, count: usize, h: usize, constants: EtConstants) -> Result<EtBound> {
    if h == 0 || count == 0 {
        return Err(Error::Invalid("Erdős–Turán bound needs H >= 1 and N >= 1".into()));
    }
    let normalised_sums: Vec<f64> =
        (1..=h).map(|t| weyl_sum(x, base, t as i64, count).norm() / count as f64).collect();
    let mut acc = Neumaier::default();
    for (i, w) in normalised_sums.iter().enumerate() {
        acc.add(w / (i + 1) as f64);
    }
    let bound = constants.c1 / h as f64 + constants.c2 * acc.value();
    Ok(EtBound { h, constants, normalised_sums, bound })
}

/// Result of the truncated cosine-product sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hs5Sum {
    pub value: f64,
    /// bound on `|value - exact sum|`
    pub certified_error: f64,
    /// `l >= s^K`
    pub hypothesis_holds: bool,
    /// number of cosine factors evaluated
    pub factors: u64,
}

pub const DEFAULT_HS5_TOL: f64 = 1e-12;

/// Base-`s` digits of `v`, least significant first.
fn digits_le(v: &BigUint, s: u64) -> Vec<u64> {
    if s <= 256 {
        return v.to_radix_le(s as u32).into_iter().map(u64::from).collect();
    }
    let mut out = Vec::new();
    let mut v = v.clone();
    let sb = BigUint::from(s);
    while !v.is_zero() {
        let (q, r) = v.div_rem(&sb);
        out.push(r.to_u64().unwrap());
        v = q;
    }
    out
}

/// `sum_{n=0}^{N-1} prod_{k>K} |cos(pi r^n l / s^k)|`.
///
/// With `M = r^n l` and base-`s` digits `d_i` of `M`, the argument of factor
/// `k` is `y_k = {M / s^k} = (d_{k-1} + y_{k-1}) / s`, a contracting
/// recursion, so rounding errors stay at a few ulps. Once every digit is
/// consumed `y_{k+1} = y_k / s`; the product is cut at the first such `y`
/// below `tol` and the tail is bounded by
/// `prod >= 1 - (pi y)^2 / (2 (1 - s^-2))`.
pub fn hs5_sum(r: u64, s: u64, l: &BigUint, k: u32, count: usize, tol: f64) -> Result<Hs5Sum> {
    if r < 2 || s < 2 || count == 0 || l.is_zero() {
        return Err(Error::Invalid("hs5 needs r, s >= 2, l >= 1 and N >= 1".into()));
    }
    if mult_dependent(r, s) {
        return Err(Error::MultiplicativelyDependent { r, s });
    }
    if !(tol > 0.0 && tol < 0.5) {
        return Err(Error::Invalid("tolerance must lie in (0, 1/2)".into()));
    }
    let hypothesis_holds = *l >= BigUint::from(s).pow(k);
    let eps = f64::EPSILON;
    let sf = s as f64;
    let tail_factor = std::f64::consts::PI.powi(2) / 2.0 / (1.0 - 1.0 / (sf * sf));
    let mut total = Neumaier::default();
    let mut err = 0.0f64;
    let mut factors = 0u64;
    let mut big_m = l.clone();
    for _ in 0..count {
        let digits = digits_le(&big_m, s);
        let mut y = 0.0f64;
        let mut prod = 1.0f64;
        let mut nf = 0u64;
        let mut kk = 0usize;
        loop {
            let d = digits.get(kk).copied().unwrap_or(0);
            y = (d as f64 + y) / sf;
            kk += 1;
            if kk >= digits.len() && y < tol {
                // factors max(kk, K+1).. are left out
                err += prod * tail_factor * y * y;
                break;
            }
            if kk > k as usize {
                prod *= (std::f64::consts::PI * y).cos().abs();
                nf += 1;
            }
        }
        // each factor: argument off by <= 4 eps, cos off by <= 1 ulp, one
        // rounded product; for factors in [0, 1] the errors add up
        err += nf as f64 * (4.0 * std::f64::consts::PI * eps + 2.0 * eps);
        factors += nf;
        total.add(prod);
        big_m *= r;
    }
    let value = total.value();
    err += count as f64 * eps * value.max(1.0);
    Ok(Hs5Sum { value, certified_error: err, hypothesis_holds, factors })
}

/// `value <= 2 N^{1 - a20}` compared in log space.
pub fn hs5_bound_holds(value: f64, count: usize, ln_a20: f64) -> bool {
    if value <= 0.0 {
        return true;
    }
    value.ln() <= 2f64.ln() + (1.0 - ln_a20.exp()) * (count as f64).ln()
}

/// How successive digit pairs are counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PairCounting {
    #[default]
    Overlapping,
    NonOverlapping,
}

/// Which pairs are nice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NicePredicate {
    /// not `00` and not `(s-1)(s-1)`
    #[default]
    NotConstantExtreme,
    /// not both digits in `{0, s-1}`
    NotBothExtreme,
}

impl NicePredicate {
    pub fn is_nice(self, a: u32, b: u32, base: u32) -> bool {
        let top = base - 1;
        match self {
            NicePredicate::NotConstantExtreme => !((a == 0 && b == 0) || (a == top && b == top)),
            NicePredicate::NotBothExtreme => !((a == 0 || a == top) && (b == 0 || b == top)),
        }
    }
}

/// `z_K`: nice pairs `(c_i, c_{i+1})` with `i >= K` (0-based positions).
pub fn nice_digit_pairs(d: &DigitString, from: usize, counting: PairCounting, predicate: NicePredicate) -> usize {
    let step = match counting {
        PairCounting::Overlapping => 1,
        PairCounting::NonOverlapping => 2,
    };
    let n = d.digits.len();
    (from..n.saturating_sub(1))
        .step_by(step)
        .filter(|&i| predicate.is_nice(d.digits[i], d.digits[i + 1], d.base))
        .count()
}

/// `2 q^{-k} + q^k dev`, exactly.
pub fn cell_deviation_discrepancy_bound(q: u64, k: u32, dev: &Rational) -> Result<Rational> {
    if q < 2 || k < 1 || *dev < Rational::zero() {
        return Err(Error::Invalid("need q >= 2, k >= 1 and dev >= 0".into()));
    }
    let qk = Rational::from_integer(BigInt::from(q).pow(k));
    Ok(rat_int(2) / &qk + qk * dev)
}

/// `2 q^{-k} + q^k dev` for a real exponent `k`.
pub fn cell_deviation_bound_real(q: f64, k: f64, dev: f64) -> f64 {
    2.0 * q.powf(-k) + q.powf(k) * dev
}

/// Word-frequency parameters `L = sqrt(log N) / 4`, deviation `e^{-L^2}`,
/// cells of size `b^{-L}`.
pub fn turing_bound(base: u64, n: f64) -> f64 {
    let l = n.ln().sqrt() / 4.0;
    cell_deviation_bound_real(base as f64, l, (-l * l).exp())
}

/// Cells of size `q^{-k}` with per-cell deviation
/// `(24/eps)^{1/6} (q^k)^{1/3} N^{-1/6}`.
pub fn sierpinski_bound(q: u64, k: u32, eps: f64, n: f64) -> f64 {
    let qk = (q as f64).powi(k as i32);
    let dev = (24.0 / eps).powf(1.0 / 6.0) * qk.powf(1.0 / 3.0) * n.powf(-1.0 / 6.0);
    cell_deviation_bound_real(q as f64, k as f64, dev)
}

/// One row of an orbit measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitRow {
    pub n: usize,
    #[serde(with = "crate::arith::rational_serde")]
    pub extreme: Rational,
    #[serde(with = "crate::arith::rational_serde")]
    pub star: Rational,
    pub h: usize,
    pub weyl_first: f64,
    pub et_bound: f64,
}

/// Discrepancies and the Erdős–Turán bound of `{b^n x}` at each requested
/// prefix length.
pub fn orbit_table(x: &Rational, base: u64, lengths: &[usize], constants: EtConstants) -> Result<Vec<OrbitRow>> {
    let max = lengths.iter().copied().max().unwrap_or(0);
    let pts = orbit_points(x, base, max);
    lengths
        .iter()
        .map(|&n| {
            let h = default_h(n);
            let et = erdos_turan_bound(x, base, n, h, constants)?;
            Ok(OrbitRow {
                n,
                extreme: discrepancy_extreme(&pts[..n])?,
                star: discrepancy_star(&pts[..n])?,
                h,
                weyl_first: et.normalised_sums[0],
                et_bound: et.bound,
            })
        })
        .collect()
}

/// Prefix lengths `1, 2, 4, ...` up to and including `n`.
pub fn doubling_lengths(n: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut k = 1;
    while k < n {
        v.push(k);
        k *= 2;
    }
    if n > 0 {
        v.push(n);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    #[test]
    fn discrepancy_examples() {
        assert_eq!(discrepancy_extreme(&[rat(1, 2)]).unwrap(), rat(1, 1));
        assert_eq!(discrepancy_extreme(&[rat(1, 4), rat(3, 4)]).unwrap(), rat(1, 2));
        assert_eq!(discrepancy_star(&[rat(1, 4), rat(3, 4)]).unwrap(), rat(1, 4));
        assert_eq!(discrepancy_star(&[rat(0, 1)]).unwrap(), rat(1, 1));
        let grid: Vec<Rational> = (1..=5).map(|i| rat(2 * i - 1, 10)).collect();
        assert_eq!(discrepancy_extreme(&grid).unwrap(), rat(1, 5));
        assert!(matches!(discrepancy_extreme(&[]), Err(Error::EmptySet)));
    }

    #[test]
    fn weyl_examples() {
        let w = weyl_sum(&rat(1, 3), 2, 1, 2);
        assert!((w.re + 1.0).abs() < 1e-12 && w.im.abs() < 1e-12);
        let z = weyl_sum(&Rational::zero(), 7, 3, 50);
        assert_eq!(z, Complex64::new(50.0, 0.0));
        let a = weyl_sum(&rat(5, 17), 3, 2, 40);
        let b = weyl_sum(&rat(5, 17), 3, -2, 40);
        assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn et_examples() {
        let z = erdos_turan_bound(&Rational::zero(), 2, 100, 4, EtConstants::default()).unwrap();
        let harmonic = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
        assert!((z.bound - (0.25 + 3.0 * harmonic)).abs() < 1e-12);
        assert_eq!(default_h(2000), 7);
    }

    #[test]
    fn nice_pairs_examples() {
        let d = DigitString::new(3, vec![0, 0, 2, 1]);
        let c = |p| nice_digit_pairs(&d, 0, PairCounting::Overlapping, p);
        assert_eq!(c(NicePredicate::NotConstantExtreme), 2);
        assert_eq!(c(NicePredicate::NotBothExtreme), 1);
        assert_eq!(nice_digit_pairs(&DigitString::new(3, vec![0; 6]), 0, PairCounting::Overlapping, NicePredicate::default()), 0);
        let ones = DigitString::new(4, vec![1, 2, 1, 2, 2, 1]);
        assert_eq!(nice_digit_pairs(&ones, 2, PairCounting::Overlapping, NicePredicate::default()), 3);
        assert_eq!(nice_digit_pairs(&ones, 0, PairCounting::NonOverlapping, NicePredicate::default()), 3);
    }

    #[test]
    fn bridge_examples() {
        assert_eq!(cell_deviation_discrepancy_bound(3, 2, &Rational::zero()).unwrap(), rat(2, 9));
        assert_eq!(cell_deviation_discrepancy_bound(2, 1, &rat(1, 10)).unwrap(), rat(6, 5));
        assert!((cell_deviation_bound_real(2.0, 1.0, 0.1) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn hs5_small() {
        let r = hs5_sum(3, 2, &BigUint::from(2u32), 1, 16, DEFAULT_HS5_TOL).unwrap();
        assert!(r.hypothesis_holds);
        assert!(r.value >= 0.0 && r.value <= 16.0);
        assert!(r.certified_error < 1e-9);
        assert!(matches!(
            hs5_sum(2, 4, &BigUint::from(1u32), 0, 4, DEFAULT_HS5_TOL),
            Err(Error::MultiplicativelyDependent { .. })
        ));
    }
}
