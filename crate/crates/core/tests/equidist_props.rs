use absnormal::arith::{rat, rational_to_f64};
use absnormal::equidist::{
    discrepancy_extreme, discrepancy_star, erdos_turan_bound, orbit_points, weyl_sum, EtConstants,
};
use proptest::prelude::*;

proptest! {
    #[test]
    fn weyl_sums_are_bounded_and_conjugate(
        q in 1i64..=100_000,
        p in 0i64..100_000,
        base in 2u64..=12,
        t in 1i64..=20,
        n in 1usize..=500,
    ) {
        let x = rat(p % q, q);
        let w = weyl_sum(&x, base, t, n);
        prop_assert!(w.norm() <= n as f64 + 1e-9);
        let c = weyl_sum(&x, base, -t, n);
        prop_assert!((w.re - c.re).abs() < 1e-9 && (w.im + c.im).abs() < 1e-9);
    }

    #[test]
    fn star_sits_between_half_and_full_extreme(pts in prop::collection::vec((0i64..1000, 1i64..=1000), 1..40)) {
        let pts: Vec<_> = pts.into_iter().map(|(a, b)| rat(a % b, b)).collect();
        let d = discrepancy_extreme(&pts).unwrap();
        let s = discrepancy_star(&pts).unwrap();
        prop_assert!(s <= d && d <= &s * rat(2, 1));
    }

    #[test]
    fn et_bound_dominates(q in 2i64..=50_000, p in 1i64..50_000, base in 2u64..=10, n in 2usize..=600) {
        let x = rat(p % q, q);
        let h = ((n as f64).ln().floor() as usize).max(1);
        let et = erdos_turan_bound(&x, base, n, h, EtConstants::default()).unwrap();
        let d = rational_to_f64(&discrepancy_extreme(&orbit_points(&x, base, n)).unwrap());
        prop_assert!(et.bound >= d);
    }
}

#[test]
fn weyl_sum_is_n_exactly_on_phase_zero_orbits() {
    // q | b t: every point b^n t x is an integer
    for (x, b, t) in [(rat(1, 6), 6, 1), (rat(1, 4), 2, 2), (rat(5, 9), 3, 3), (rat(0, 1), 7, 5)] {
        let w = weyl_sum(&x, b, t, 37);
        assert_eq!(w.re, 37.0);
        assert_eq!(w.im, 0.0);
    }
    // a single non-zero phase breaks equality
    let w = weyl_sum(&rat(1, 3), 2, 1, 5);
    assert!(w.norm() < 5.0);
}
