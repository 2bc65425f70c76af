use absnormal::arith::{rat, rational_to_f64, Rational, DEFAULT_PRECISION_CAP};
use absnormal::plan::{toy_plan_from_csv, SequencePlan};
use absnormal::schedule::Schedule;
use absnormal::schmidt::{objective_am, ConstructionState, DEFAULT_WIDTH_CAP};
use num_bigint::BigInt;
use num_integer::Integer;
use proptest::prelude::*;

const TOY_CSV: &str = "2,5,0.4\n3,5,0.35\n4,6,0.1\n";
const TOY_SYMBOLS: [u64; 7] = [4, 10, 18, 28, 40, 54, 70];

fn toy() -> (SequencePlan, Schedule) {
    (
        toy_plan_from_csv(TOY_CSV, 8).unwrap(),
        Schedule::toy(TOY_SYMBOLS.to_vec(), DEFAULT_PRECISION_CAP).unwrap(),
    )
}

/// `sum_r sum_{0 < |t| <= m} |sum_j e(r^j t x)|^2` with full powers `r^j`.
fn naive_objective(x: &Rational, m: usize, plan: &SequencePlan, schedule: &Schedule) -> f64 {
    let mut total = 0.0;
    for r in plan.active_bases(m).unwrap() {
        let lo = schedule.symbol_at(m as u64, r).unwrap();
        let hi = schedule.symbol_at(m as u64 + 1, r).unwrap();
        for t in (-(m as i64)..=m as i64).filter(|&t| t != 0) {
            let (mut re, mut im) = (0.0f64, 0.0f64);
            for j in lo + 1..=hi {
                let v = BigInt::from(r).pow(j as u32) * BigInt::from(t) * x.numer();
                let phase = rational_to_f64(&Rational::new(v.mod_floor(x.denom()), x.denom().clone()));
                re += (std::f64::consts::TAU * phase).cos();
                im += (std::f64::consts::TAU * phase).sin();
            }
            total += re * re + im * im;
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_matches_naive_evaluation(q in 1i64..=1_000_000, p in 0i64..1_000_000, m in 1usize..=5) {
        let (plan, schedule) = toy();
        let x = rat(p % q, q);
        let got = objective_am(&x, m, &plan, &schedule).unwrap();
        let want = naive_objective(&x, m, &plan, &schedule);
        prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{} vs {}", got, want);
    }
}

fn run_with_threads(threads: usize, steps: usize) -> String {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let (plan, schedule) = toy();
        let mut st = ConstructionState::new(plan, schedule, DEFAULT_WIDTH_CAP);
        st.run(steps).unwrap();
        st.to_json()
    })
}

#[test]
fn state_does_not_depend_on_thread_count() {
    let one = run_with_threads(1, 5);
    assert_eq!(one, run_with_threads(3, 5));
    assert_eq!(one, run_with_threads(8, 5));
}

#[test]
fn xi_grows_and_intervals_nest() {
    let (plan, schedule) = toy();
    let mut st = ConstructionState::new(plan, schedule, DEFAULT_WIDTH_CAP);
    st.run(6).unwrap();
    let one = rat(1, 1);
    let mut prev = rat(0, 1);
    for s in &st.steps {
        assert!(s.xi >= prev && s.xi < one, "step {}", s.m);
        assert!(s.nested, "step {}", s.m);
        prev = s.xi.clone();
    }
    let (lo, hi) = st.certain_interval();
    assert!(lo == st.xi && hi > lo && hi <= one);
}
