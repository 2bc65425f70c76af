use absnormal::arith::{certain_digits, digits_of_rational, frac_mod1, frac_pow_mod1, rat, Rational};
use absnormal::schedule::Schedule;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use proptest::prelude::*;

const DIGITS: u32 = 220;

/// `e^{sqrt m} + 2 s1 m^3` in fixed point with scale `10^DIGITS`, via the
/// Taylor series; the result is off by far less than `10^-150`.
fn sqrt_cubic_symbol_fixed(m: u64, s1: u64) -> (BigInt, BigInt) {
    let scale = BigInt::from(10).pow(DIGITS);
    let x = (BigInt::from(m) * &scale * &scale).sqrt();
    let mut term = scale.clone();
    let mut sum = scale.clone();
    let mut n = 1u32;
    while !term.is_zero() {
        term = &term * &x / (&scale * n);
        sum += &term;
        n += 1;
    }
    sum += BigInt::from(2 * s1 * m * m * m) * &scale;
    (sum, scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sqrt_cubic_symbol_matches_high_precision(m in 1u64..=1000, s1 in 3u64..=60) {
        let (v, scale) = sqrt_cubic_symbol_fixed(m, s1);
        let (fl, rem) = v.div_rem(&scale);
        let margin = BigInt::from(10).pow(DIGITS - 150);
        prop_assume!(rem > margin && &scale - &rem > margin);
        let got = Schedule::paper(s1, 4096).symbol(m).unwrap();
        prop_assert_eq!(BigInt::from(got), fl);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn frac_mod1_matches_full_powers(
        q in 1i64..=1_000_000,
        p in 0i64..1_000_000,
        r in 2u64..=20,
        t in -50i64..=50,
    ) {
        prop_assume!(t != 0);
        let x = rat(p % q, q);
        let mut pow = BigInt::from(1);
        for j in 1..=50u64 {
            pow *= r;
            let naive = {
                let v = Rational::from_integer(&pow * BigInt::from(t)) * &x;
                &v - v.floor()
            };
            prop_assert_eq!(&frac_mod1(&x, &pow, t), &naive);
            prop_assert_eq!(frac_pow_mod1(&x, r, j, t), naive);
        }
    }

    #[test]
    fn certain_digits_are_maximal(
        d1 in 1i64..=10_000,
        d2 in 1i64..=10_000,
        a in 0i64..10_000,
        c in 1i64..=10_000,
        b in 2u32..=16,
    ) {
        let (lo, hi) = (rat(a % d1, d1), rat(c.min(d2), d2));
        prop_assume!(lo < hi);
        let got = certain_digits(&lo, &hi, b);
        let j = got.len();
        // a prefix of the expansion of lo
        prop_assert_eq!(&digits_of_rational(&lo, b, j).digits, &got.digits);
        // one more digit is not shared: lo and points just below hi split
        let eta = Rational::new(BigInt::from(1), BigInt::from(2) * hi.denom() * BigInt::from(b).pow(j as u32 + 1));
        let top = &hi - eta;
        prop_assert!(top >= lo);
        let next_lo = digits_of_rational(&lo, b, j + 1).digits[j];
        let next_top = digits_of_rational(&top, b, j + 1).digits;
        prop_assert!(next_top[..j] == got.digits[..]);
        prop_assert_ne!(next_lo, next_top[j]);
    }
}
