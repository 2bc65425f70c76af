use absnormal::constants::mult_dependent;
use absnormal::plan::{default_plan, default_s_sequence, ln_a20_all_n, toy_plan, DEFAULT_LN_BETA_FLOOR};
use proptest::prelude::*;

#[test]
fn default_tables_are_monotone_and_positive() {
    let plan = default_plan(24, DEFAULT_LN_BETA_FLOOR).unwrap();
    assert!(plan.raw_ln_beta.windows(2).all(|w| w[1] <= w[0]));
    assert!(plan.raw_gamma.windows(2).all(|w| w[1] >= w[0]));
    let raw_r: Vec<u64> = (2..26).collect();
    let raw_s = default_s_sequence(24);
    assert!(plan.r.iter().all(|r| raw_r.contains(r)));
    assert!(plan.s.iter().all(|s| raw_s.contains(s)));
    for &r in &raw_r {
        for &s in &raw_s {
            if !mult_dependent(r, s) {
                let ln = ln_a20_all_n(r, s).unwrap();
                assert!(ln.is_finite(), "({r},{s})");
            }
        }
    }
}

#[test]
fn unclamped_default_plan_still_validates() {
    // without the floor the decay test rejects every raw index after the first
    let plan = default_plan(12, f64::NEG_INFINITY).unwrap();
    assert!(plan.phi.iter().all(|&p| p == 1));
}

proptest! {
    #[test]
    fn repetition_preserves_membership(
        rows in prop::collection::vec((2u64..=12, 3u64..=12, 0.01f64..0.49), 1..8),
        horizon in 1usize..=16,
    ) {
        let mut rows = rows;
        rows.sort_by(|a, b| b.2.total_cmp(&a.2));
        let raw_r: Vec<u64> = rows.iter().map(|r| r.0).collect();
        let raw_s: Vec<u64> = rows.iter().map(|r| r.1).collect();
        let ln_beta: Vec<f64> = rows.iter().map(|r| r.2.ln()).collect();
        let gamma = absnormal::plan::gamma_table(&raw_r, &raw_s);
        let Ok(plan) = toy_plan(&raw_r, &raw_s, &ln_beta, &gamma, horizon) else {
            return Ok(());
        };
        prop_assert_eq!(plan.r.len(), horizon);
        prop_assert!(plan.r.iter().all(|r| raw_r.contains(r)));
        prop_assert!(plan.s.iter().all(|s| raw_s.contains(s)));
        prop_assert_eq!(plan.phi[0], 1);
        prop_assert!(plan.phi.windows(2).all(|w| w[1] <= w[0] + 1));
        for (k, &p) in plan.phi.iter().enumerate() {
            prop_assert_eq!(plan.r[k], raw_r.get(p - 1).copied().unwrap_or(*raw_r.last().unwrap()));
        }
        plan.validate().unwrap();
    }
}
