//! The exhaustive-minimisation construction.
//!
//! Step `m` starts from `xi_{m-1}`, rounds it up to the grid `s_m^{-a_m}`
//! (giving `eta_m`), and tries every way of writing 0/1 digits into the
//! base-`s_m` positions `a_m + 1 ..= b_m - 2`. The candidate minimising
//! `A'_m` becomes `xi_m`; ties go to the smallest candidate.

mod objective;

use std::path::Path;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{ceil_int, certain_digits, rat_int, rational_serde, DigitString, Rational};
use crate::error::{Error, Result};
use crate::plan::SequencePlan;
use crate::schedule::Schedule;
use objective::{Objective, Residue};

pub const STATE_VERSION: u32 = 1;
/// Largest enumerated width `w = b_m - a_m - 2` (2^24 candidates).
pub const DEFAULT_WIDTH_CAP: u32 = 24;
/// Objectives closer than this (relative) are re-evaluated rigorously.
pub const TIE_RELATIVE: f64 = 1e-12;
/// Working precision in bits for near-tie re-evaluation.
pub const REFINE_PRECISION: u32 = 256;
/// Constant of the objective estimate `A'_m(xi_m) <= 36 m^2 (<m+1> - <m>)^{2 - beta_m}`.
pub const LEMMA_CONSTANT: f64 = 36.0;

/// `ceil(xi s^a) / s^a`.
pub fn eta(xi_prev: &Rational, s: u64, a: u64) -> Rational {
    let scale = BigInt::from(s).pow(a as u32);
    Rational::new(ceil_int(&(xi_prev * Rational::from_integer(scale.clone()))), scale)
}

/// `sigma_m(xi_{m-1})`: `eta + sum_k c_k s^{-(a+k)}`, `c_k in {0, 1}`,
/// `k = 1..=w`. Candidate `idx` carries `c_k` in bit `w - k`, so index
/// order is value order.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    pub eta: Rational,
    pub s: u64,
    pub a: u64,
    pub width: i64,
    /// `eta * s^a`
    grid: BigInt,
}

impl CandidateSet {
    pub fn new(xi_prev: &Rational, s: u64, a: u64, b: u64) -> Self {
        let eta = eta(xi_prev, s, a);
        let grid = (&eta * Rational::from_integer(BigInt::from(s).pow(a as u32))).to_integer();
        Self { eta, s, a, width: b as i64 - a as i64 - 2, grid }
    }

    /// `max(w, 0)`: a negative width leaves only `eta`.
    pub fn effective_width(&self) -> u32 {
        self.width.max(0) as u32
    }

    pub fn count(&self) -> u64 {
        1u64 << self.effective_width()
    }

    /// Common denominator `s^{a + w}`.
    pub fn denominator(&self) -> BigUint {
        BigUint::from(self.s).pow(self.a as u32 + self.effective_width())
    }

    pub fn numerator(&self, idx: u64) -> BigUint {
        let w = self.effective_width();
        let s = BigUint::from(self.s);
        let mut n = self.grid.to_biguint().expect("eta >= 0") * s.pow(w);
        for i in 0..w {
            if idx >> i & 1 == 1 {
                n += s.pow(i);
            }
        }
        n
    }

    pub fn value(&self, idx: u64) -> Rational {
        Rational::new(
            BigInt::from_biguint(Sign::Plus, self.numerator(idx)),
            BigInt::from_biguint(Sign::Plus, self.denominator()),
        )
    }

    /// `c_1 c_2 ... c_w`.
    pub fn bits(&self, idx: u64) -> String {
        let w = self.effective_width();
        (1..=w).map(|k| if idx >> (w - k) & 1 == 1 { '1' } else { '0' }).collect()
    }
}

/// `A'_m(x)` for any rational `x` in `[0, 1)`.
pub fn objective_am(x: &Rational, m: usize, plan: &SequencePlan, schedule: &Schedule) -> Result<f64> {
    let q = x.denom().to_biguint().expect("positive denominator");
    let p = x.numer().mod_floor(x.denom()).to_biguint().expect("reduced");
    let obj = Objective::new(m, plan, schedule, &q)?;
    Ok(obj.eval(&obj.modulus.residue(&p)))
}

/// Per-step record; together with the embedded plan and schedule it is
/// enough to replay and audit the step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub m: usize,
    pub s: u64,
    /// `<m>` and `<m+1>`
    pub symbol: u64,
    pub symbol_next: u64,
    pub a: u64,
    pub b: u64,
    pub width: i64,
    #[serde(with = "rational_serde")]
    pub eta: Rational,
    pub chosen_index: u64,
    pub chosen_bits: String,
    #[serde(with = "rational_serde")]
    pub xi: Rational,
    pub candidate_count: u64,
    pub best_objective: f64,
    pub second_objective: Option<f64>,
    /// candidates re-evaluated with interval arithmetic
    pub near_tie_refined: usize,
    pub phase_evaluations: u64,
    pub ln_beta: f64,
    /// `A'_m(xi_m) / (m^2 (<m+1> - <m>)^{2 - beta_m})`
    pub lemma_ratio: f64,
    pub lemma_within_bound: bool,
    /// `[xi_m, xi_m + s_m^{-(b_m-2)})` lies in the previous such interval
    pub nested: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionState {
    pub format_version: u32,
    pub plan: SequencePlan,
    pub schedule: Schedule,
    pub width_cap: u32,
    pub m: usize,
    #[serde(with = "rational_serde")]
    pub xi: Rational,
    pub steps: Vec<StepLog>,
}

impl ConstructionState {
    /// Step 0: `xi_0 = 0`.
    pub fn new(plan: SequencePlan, schedule: Schedule, width_cap: u32) -> Self {
        Self {
            format_version: STATE_VERSION,
            plan,
            schedule,
            width_cap,
            m: 0,
            xi: Rational::zero(),
            steps: Vec::new(),
        }
    }

    pub fn certified(&self) -> bool {
        self.plan.certified && !self.schedule.is_toy()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("state serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let st: Self = serde_json::from_str(text).map_err(|e| Error::State(e.to_string()))?;
        if st.format_version != STATE_VERSION {
            return Err(Error::State(format!(
                "state format version {} is not supported (expected {STATE_VERSION})",
                st.format_version
            )));
        }
        if st.steps.len() != st.m || st.steps.last().map_or(Rational::zero(), |l| l.xi.clone()) != st.xi {
            return Err(Error::State("state step log is inconsistent with m and xi".into()));
        }
        st.plan.validate()?;
        Ok(st)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::State(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// `[xi_m, xi_m + s_m^{-(b_m - 2)})`, or `[0, 1)` before step 1.
    pub fn certain_interval(&self) -> (Rational, Rational) {
        match self.steps.last() {
            None => (Rational::zero(), Rational::one()),
            Some(l) => (l.xi.clone(), &l.xi + interval_length(l.s, l.b)),
        }
    }

    /// Runs one step with parallel candidate evaluation.
    pub fn step(&mut self) -> Result<&StepLog> {
        let log = compute_step(self, true)?;
        self.m = log.m;
        self.xi = log.xi.clone();
        self.steps.push(log);
        Ok(self.steps.last().unwrap())
    }

    pub fn run(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }
}

/// `s^{-(b - 2)}`; the exponent may be negative for tiny schedules.
fn interval_length(s: u64, b: u64) -> Rational {
    let base = rat_int(s as i64);
    num_traits::Pow::pow(base, -(b as i64 - 2) as i32)
}

/// Outcome of the exhaustive search.
#[derive(Clone, Debug, PartialEq)]
struct SearchResult {
    index: u64,
    objective: f64,
    second: Option<f64>,
    refined: usize,
}

type Scored = (f64, u64);

fn better(a: &Scored, b: &Scored) -> bool {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).is_lt()
}

/// Keeps the two best `(objective, index)` pairs; associative and
/// commutative, so the parallel reduction order does not matter.
#[derive(Clone, Copy, Debug, Default)]
struct Top2 {
    first: Option<Scored>,
    second: Option<Scored>,
}

impl Top2 {
    fn push(mut self, c: Scored) -> Self {
        match self.first {
            None => self.first = Some(c),
            Some(f) if better(&c, &f) => {
                self.second = Some(f);
                self.first = Some(c);
            }
            _ => {
                if self.second.map_or(true, |s| better(&c, &s)) {
                    self.second = Some(c);
                }
            }
        }
        self
    }

    fn merge(self, o: Self) -> Self {
        [o.first, o.second].into_iter().flatten().fold(self, Top2::push)
    }
}

struct Evaluator<'a> {
    cands: &'a CandidateSet,
    objective: Objective,
    base: Residue,
    pows: Vec<Residue>,
}

impl<'a> Evaluator<'a> {
    fn new(cands: &'a CandidateSet, m: usize, plan: &SequencePlan, schedule: &Schedule) -> Result<Self> {
        let q = cands.denominator();
        let objective = Objective::new(m, plan, schedule, &q)?;
        let w = cands.effective_width();
        let s = BigUint::from(cands.s);
        let base = objective.modulus.residue(&(cands.grid.to_biguint().expect("eta >= 0") * s.pow(w)));
        let pows = (0..w).map(|i| objective.modulus.residue(&s.pow(i))).collect();
        Ok(Self { cands, objective, base, pows })
    }

    fn residue(&self, idx: u64) -> Residue {
        let mut r = self.base.clone();
        for (i, p) in self.pows.iter().enumerate() {
            if idx >> i & 1 == 1 {
                r = self.objective.modulus.add(&r, p);
            }
        }
        r
    }

    fn eval(&self, idx: u64) -> f64 {
        self.objective.eval(&self.residue(idx))
    }

    fn tie_tolerance(best: f64) -> f64 {
        TIE_RELATIVE * best.abs().max(1.0)
    }

    fn search(&self, parallel: bool) -> SearchResult {
        let n = self.cands.count();
        let top = if parallel {
            (0..n)
                .into_par_iter()
                .fold(Top2::default, |acc, i| acc.push((self.eval(i), i)))
                .reduce(Top2::default, Top2::merge)
        } else {
            let mut acc = Top2::default();
            for i in 0..n {
                acc = acc.push((self.eval(i), i));
            }
            acc
        };
        let first = top.first.expect("at least one candidate");
        let tol = Self::tie_tolerance(first.0);
        let near_tie = top.second.is_some_and(|s| s.0 - first.0 <= tol);
        if !near_tie {
            return SearchResult { index: first.1, objective: first.0, second: top.second.map(|s| s.0), refined: 0 };
        }
        let limit = first.0 + tol;
        let tied: Vec<u64> = if parallel {
            (0..n).into_par_iter().filter(|&i| self.eval(i) <= limit).collect()
        } else {
            (0..n).filter(|&i| self.eval(i) <= limit).collect()
        };
        let encl: Vec<(u64, Rational, Rational)> = tied
            .iter()
            .map(|&i| {
                let iv = self
                    .objective
                    .eval_interval(&self.residue(i).to_biguint(), REFINE_PRECISION);
                (i, iv.lo_rational(), iv.hi_rational())
            })
            .collect();
        let min_hi = encl.iter().map(|e| &e.2).min().expect("non-empty").clone();
        // every candidate not provably above the minimum counts as tied
        let index = encl.iter().filter(|e| e.1 <= min_hi).map(|e| e.0).min().expect("non-empty");
        let objective = self.eval(index);
        let second = if index == first.1 { top.second.map(|s| s.0) } else { Some(first.0) };
        SearchResult { index, objective, second, refined: encl.len() }
    }
}

fn compute_step(state: &ConstructionState, parallel: bool) -> Result<StepLog> {
    let m = state.m + 1;
    let (plan, schedule) = (&state.plan, &state.schedule);
    let s = plan.s_at(m)?;
    let symbol = schedule.symbol(m as u64)?;
    let symbol_next = schedule.symbol(m as u64 + 1)?;
    if symbol_next <= symbol {
        return Err(Error::Invalid(format!("schedule is not increasing at m = {m}")));
    }
    let (a, b) = schedule.digit_positions(m as u64, s)?;
    let cands = CandidateSet::new(&state.xi, s, a, b);
    if cands.width > state.width_cap as i64 {
        return Err(Error::WidthExceedsCap { step: m, width: cands.width, cap: state.width_cap });
    }
    let ev = Evaluator::new(&cands, m, plan, schedule)?;
    let found = ev.search(parallel);
    let xi = cands.value(found.index);
    if xi >= Rational::one() {
        return Err(Error::Verification(format!("xi_{m} reached 1")));
    }

    let ln_beta = plan.ln_beta_at(m)?;
    let denom = (m * m) as f64 * ((symbol_next - symbol) as f64).powf(2.0 - ln_beta.exp());
    let lemma_ratio = found.objective / denom;

    let (prev_lo, prev_hi) = state.certain_interval();
    let hi = &xi + interval_length(s, b);
    let nested = prev_lo <= xi && hi <= prev_hi;

    Ok(StepLog {
        m,
        s,
        symbol,
        symbol_next,
        a,
        b,
        width: cands.width,
        eta: cands.eta.clone(),
        chosen_index: found.index,
        chosen_bits: cands.bits(found.index),
        xi,
        candidate_count: cands.count(),
        best_objective: found.objective,
        second_objective: found.second,
        near_tie_refined: found.refined,
        phase_evaluations: cands.count() * ev.objective.phase_evaluations(),
        ln_beta,
        lemma_ratio,
        lemma_within_bound: lemma_ratio <= LEMMA_CONSTANT,
        nested,
    })
}

/// Per-step findings of [`verify_state`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepAudit {
    pub m: usize,
    pub argmin_confirmed: bool,
    pub ordering_ok: bool,
    pub nested: bool,
}

/// Replays every logged step with a single-threaded exhaustive search and
/// checks that it reproduces the log exactly, that no candidate beats the
/// chosen one, and that `xi_{m-1} <= eta_m <= xi_m < eta_m + s^{-a_m}`.
pub fn verify_state(state: &ConstructionState) -> Result<Vec<StepAudit>> {
    let mut replay = ConstructionState::new(state.plan.clone(), state.schedule.clone(), state.width_cap);
    let mut audits = Vec::new();
    for logged in &state.steps {
        let log = compute_step(&replay, false)?;
        let cands = CandidateSet::new(&replay.xi, log.s, log.a, log.b);
        let ev = Evaluator::new(&cands, log.m, &replay.plan, &replay.schedule)?;
        let best = log.best_objective;
        let tol = Evaluator::tie_tolerance(best);
        let no_better = (0..cands.count()).all(|i| ev.eval(i) >= best - tol);
        let argmin_confirmed = no_better && log == *logged;
        let grid = num_traits::Pow::pow(rat_int(log.s as i64), -(log.a as i32));
        let ordering_ok = replay.xi <= log.eta && log.eta <= log.xi && log.xi < &log.eta + grid;
        audits.push(StepAudit { m: log.m, argmin_confirmed, ordering_ok, nested: log.nested });
        if !argmin_confirmed {
            return Err(Error::Verification(format!("step {} does not replay to the logged argmin", log.m)));
        }
        if !ordering_ok {
            return Err(Error::Verification(format!("step {} violates xi_(m-1) <= eta <= xi < eta + s^-a", log.m)));
        }
        replay.m = log.m;
        replay.xi = log.xi.clone();
        replay.steps.push(log);
    }
    if replay != *state {
        return Err(Error::Verification("replayed state differs from the stored one".into()));
    }
    Ok(audits)
}

/// Digits of the limit `xi` that are already certain: the common prefix of
/// `[xi_M, xi_M + s_M^{-(b_M - 2)})` in `out_base`.
pub fn emit_digits(state: &ConstructionState, out_base: u32) -> DigitString {
    if state.steps.is_empty() {
        return DigitString::empty(out_base);
    }
    let (lo, hi) = state.certain_interval();
    let hi = hi.min(Rational::one());
    certain_digits(&lo, &hi, out_base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, DEFAULT_PRECISION_CAP};
    use crate::plan::{default_plan, toy_plan_from_csv, DEFAULT_LN_BETA_FLOOR};

    fn toy_state() -> ConstructionState {
        let plan = toy_plan_from_csv("2,5,0.4\n3,5,0.35\n4,6,0.1\n", 7).unwrap();
        let schedule = Schedule::toy(vec![4, 10, 18, 28, 40, 54, 70], DEFAULT_PRECISION_CAP).unwrap();
        ConstructionState::new(plan, schedule, 12)
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(&Rational::zero(), 3, 5), Rational::zero());
        assert_eq!(eta(&rat(7, 20), 3, 2), rat(4, 9));
        assert_eq!(eta(&rat(4, 9), 3, 2), rat(4, 9));
    }

    #[test]
    fn candidates_are_ordered() {
        let c = CandidateSet::new(&rat(7, 20), 3, 2, 7);
        assert_eq!(c.width, 3);
        assert_eq!(c.count(), 8);
        assert_eq!(c.value(0), rat(4, 9));
        assert_eq!(c.value(0b100), rat(4, 9) + rat(1, 27));
        assert_eq!(c.value(0b001), rat(4, 9) + rat(1, 243));
        assert_eq!(c.bits(0b100), "100");
        for i in 1..8 {
            assert!(c.value(i - 1) < c.value(i));
        }
    }

    #[test]
    fn objective_at_zero() {
        let plan = default_plan(3, DEFAULT_LN_BETA_FLOOR).unwrap();
        let sched = Schedule::paper(3, DEFAULT_PRECISION_CAP);
        assert_eq!(objective_am(&Rational::zero(), 1, &plan, &sched).unwrap(), 8192.0);
    }

    #[test]
    fn true_schedule_width_is_capped() {
        let plan = default_plan(3, DEFAULT_LN_BETA_FLOOR).unwrap();
        let mut st = ConstructionState::new(plan, Schedule::paper(3, DEFAULT_PRECISION_CAP), DEFAULT_WIDTH_CAP);
        let err = st.step().unwrap_err();
        assert!(matches!(err, Error::WidthExceedsCap { step: 1, width: 38, cap: 24 }));
    }

    #[test]
    fn top2_merge_is_order_free() {
        let items = [(3.0, 5), (1.0, 9), (1.0, 2), (2.0, 1)];
        let a = items.iter().fold(Top2::default(), |t, &c| t.push(c));
        let b = items.iter().rev().fold(Top2::default(), |t, &c| t.push(c));
        assert_eq!(a.first, Some((1.0, 2)));
        assert_eq!(a.second, Some((1.0, 9)));
        assert_eq!((a.first, a.second), (b.first, b.second));
    }

    #[test]
    fn toy_run_replays() {
        let mut st = toy_state();
        st.run(4).unwrap();
        let audits = verify_state(&st).unwrap();
        assert!(audits.iter().all(|a| a.argmin_confirmed && a.ordering_ok));
        let back = ConstructionState::from_json(&st.to_json()).unwrap();
        assert_eq!(back, st);
    }

    #[test]
    fn emitted_digits_match_grid() {
        let mut st = toy_state();
        assert!(emit_digits(&st, 10).is_empty());
        st.run(3).unwrap();
        let last = st.steps.last().unwrap();
        let d = emit_digits(&st, last.s as u32);
        assert_eq!(d.len() as u64, last.b - 2);
    }
}
