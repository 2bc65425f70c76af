//! Base sequences `R`, `S`, the decay tables `beta_k`, `gamma_k`, the
//! repetition function `phi` and the indices `m0(r)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constants::{analyze_pair, compute_constants, mult_dependent, Variant};
use crate::error::{Error, Result};

/// `ln(1e-300)`, the default floor applied to the logarithms of the
/// all-`N` beta values during plan construction.
pub const DEFAULT_LN_BETA_FLOOR: f64 = -690.775_527_898_213_7;

/// A plan after repetition. Sequences are 1-indexed in the maths and
/// 0-indexed here: `r[0]` is `r'_1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequencePlan {
    pub horizon: usize,
    pub r: Vec<u64>,
    pub s: Vec<u64>,
    /// `phi(1..=horizon)`, values are 1-based raw indices
    pub phi: Vec<usize>,
    /// `ln beta_k` of the raw tables, `k = 1..=horizon`
    pub raw_ln_beta: Vec<f64>,
    /// `gamma_k` of the raw tables
    pub raw_gamma: Vec<u64>,
    /// `m0(r)` for every distinct `r` in `r`
    pub m0: BTreeMap<u64, usize>,
    /// false for user-supplied tables
    pub certified: bool,
    /// floor applied to `ln beta`, if any
    pub ln_beta_floor: Option<f64>,
}

impl SequencePlan {
    pub fn r_at(&self, m: usize) -> Result<u64> {
        self.check_index(m)?;
        Ok(self.r[m - 1])
    }

    pub fn s_at(&self, m: usize) -> Result<u64> {
        self.check_index(m)?;
        Ok(self.s[m - 1])
    }

    /// `ln beta'_m = ln beta_{phi(m)}`.
    pub fn ln_beta_at(&self, m: usize) -> Result<f64> {
        self.check_index(m)?;
        Ok(self.raw_ln_beta[self.phi[m - 1] - 1])
    }

    /// The bases `r'_i`, `i <= m`, that enter the step-`m` objective, i.e.
    /// those with `m0(r'_i) <= m`. Repeated values are kept.
    pub fn active_bases(&self, m: usize) -> Result<Vec<u64>> {
        self.check_index(m)?;
        Ok(self.r[..m].iter().copied().filter(|r| self.m0[r] <= m).collect())
    }

    fn check_index(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.horizon {
            return Err(Error::Invalid(format!(
                "step {m} outside the plan horizon 1..={}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Re-checks every invariant of a plan, e.g. after loading one from disk.
    pub fn validate(&self) -> Result<()> {
        let h = self.horizon;
        if h == 0 {
            return Err(Error::Invalid("plan horizon must be at least 1".into()));
        }
        if self.r.len() != h || self.s.len() != h || self.phi.len() != h {
            return Err(Error::Invalid("plan sequences must have horizon entries".into()));
        }
        if self.raw_ln_beta.len() < h || self.raw_gamma.len() < h {
            return Err(Error::Invalid("plan tables must cover the horizon".into()));
        }
        if self.phi[0] != 1 {
            return Err(Error::Invalid("phi(1) must be 1".into()));
        }
        for k in 1..h {
            let (prev, cur) = (self.phi[k - 1], self.phi[k]);
            if cur < prev || cur > prev + 1 {
                return Err(Error::Invalid(format!("phi jumps from {prev} to {cur} at k = {}", k + 1)));
            }
        }
        if self.r.iter().any(|&r| r < 2) || self.s.iter().any(|&s| s <= 2) {
            return Err(Error::Invalid("plan needs r >= 2 and s > 2".into()));
        }
        let s1 = self.s[0];
        for (i, &s) in self.s.iter().enumerate() {
            if s > (i as u64 + 1) * s1 {
                return Err(Error::Invalid(format!("s_{} = {s} exceeds {} * s_1", i + 1, i + 1)));
            }
        }
        let half = 0.5f64.ln();
        for k in 0..h {
            if self.raw_ln_beta[k] >= half {
                return Err(Error::Invalid(format!("beta_{} must be below 1/2", k + 1)));
            }
            if k > 0 && self.raw_ln_beta[k] > self.raw_ln_beta[k - 1] {
                return Err(Error::Invalid(format!("beta table increases at k = {}", k + 1)));
            }
            if k > 0 && self.raw_gamma[k] < self.raw_gamma[k - 1] {
                return Err(Error::Invalid(format!("gamma table decreases at k = {}", k + 1)));
            }
        }
        let (lb1, g1) = (self.raw_ln_beta[0], self.raw_gamma[0]);
        for k in 1..=h {
            let p = self.phi[k - 1];
            if self.raw_ln_beta[p - 1] < lb1 - 0.25 * (k as f64).ln() - 1e-12 {
                return Err(Error::Invalid(format!("beta decay condition fails at k = {k}")));
            }
            if self.raw_gamma[p - 1] > g1 * k as u64 {
                return Err(Error::Invalid(format!("gamma growth condition fails at k = {k}")));
            }
        }
        for &r in &self.r {
            let m0 = *self
                .m0
                .get(&r)
                .ok_or_else(|| Error::Invalid(format!("m0({r}) missing")))?;
            if m0 != compute_m0(r, &self.s)? {
                return Err(Error::Invalid(format!("m0({r}) = {m0} is inconsistent")));
            }
        }
        Ok(())
    }
}

/// The first `count` integers above 2 that are not perfect powers.
pub fn default_s_sequence(count: usize) -> Vec<u64> {
    (3u64..).filter(|&n| !is_perfect_power(n)).take(count).collect()
}

pub fn is_perfect_power(n: u64) -> bool {
    use crate::constants::factorize;
    if n < 4 {
        return false;
    }
    let f = factorize(n);
    let g = f.0.iter().fold(0u32, |g, &(_, e)| num_integer::gcd(g, e));
    g > 1
}

/// Applies the repetition function. `ln_beta` and `gamma` are indexed by
/// raw position `k = 1, 2, ...` (stored 0-based).
pub fn apply_phi(
    raw_r: &[u64],
    raw_s: &[u64],
    ln_beta: &[f64],
    gamma: &[u64],
    horizon: usize,
) -> Result<Vec<usize>> {
    if horizon == 0 {
        return Err(Error::Invalid("plan horizon must be at least 1".into()));
    }
    let n = raw_r.len().min(raw_s.len()).min(ln_beta.len()).min(gamma.len());
    if n < horizon {
        return Err(Error::Invalid(format!(
            "raw tables cover {n} entries but the horizon is {horizon}"
        )));
    }
    let (lb1, g1) = (ln_beta[0], gamma[0]);
    let mut phi = vec![1usize];
    for k in 2..=horizon {
        let threshold = lb1 - 0.25 * (k as f64).ln();
        let top = phi[k - 2] + 1;
        let chosen = (1..=top)
            .rev()
            .find(|&p| ln_beta[p - 1] >= threshold && gamma[p - 1] <= g1 * k as u64)
            .ok_or(Error::PlanInfeasible { k })?;
        phi.push(chosen);
    }
    Ok(phi)
}

/// Smallest `m0` such that `r` is independent of every `s_m`, `m0 <= m <=
/// s.len()`.
pub fn compute_m0(r: u64, s: &[u64]) -> Result<usize> {
    match s.iter().rposition(|&sm| mult_dependent(r, sm)) {
        None => Ok(1),
        Some(last) if last + 1 == s.len() => Err(Error::HorizonTooShort { r, horizon: s.len() }),
        Some(last) => Ok(last + 2),
    }
}

/// `gamma_k = max(r_1..r_k, s_1..s_k)`.
pub fn gamma_table(raw_r: &[u64], raw_s: &[u64]) -> Vec<u64> {
    let mut g = 0;
    raw_r
        .iter()
        .zip(raw_s)
        .map(|(&r, &s)| {
            g = g.max(r).max(s);
            g
        })
        .collect()
}

/// Builds the plan from raw sequences and tables.
pub fn build_plan(
    raw_r: &[u64],
    raw_s: &[u64],
    ln_beta: &[f64],
    gamma: &[u64],
    horizon: usize,
    certified: bool,
    ln_beta_floor: Option<f64>,
) -> Result<SequencePlan> {
    let phi = apply_phi(raw_r, raw_s, ln_beta, gamma, horizon)?;
    let r: Vec<u64> = phi.iter().map(|&p| raw_r[p - 1]).collect();
    let s: Vec<u64> = phi.iter().map(|&p| raw_s[p - 1]).collect();
    let mut m0 = BTreeMap::new();
    for &ri in &r {
        if let std::collections::btree_map::Entry::Vacant(e) = m0.entry(ri) {
            e.insert(compute_m0(ri, &s)?);
        }
    }
    let plan = SequencePlan {
        horizon,
        r,
        s,
        phi,
        raw_ln_beta: ln_beta[..horizon].to_vec(),
        raw_gamma: gamma[..horizon].to_vec(),
        m0,
        certified,
        ln_beta_floor,
    };
    plan.validate()?;
    Ok(plan)
}

/// `ln a20(r, s)` of the all-`N` variant, or `None` for dependent pairs.
pub fn ln_a20_all_n(r: u64, s: u64) -> Option<f64> {
    let analysis = analyze_pair(r, s).ok()?;
    Some(compute_constants(&analysis, Variant::AllN).a20.ln)
}

/// `R = 2, 3, 4, ...`, `S` = non-perfect-powers above 2, `beta` from the
/// all-`N` constants with dependent pairs skipped and `ln beta` clamped
/// from below at `ln_floor`.
pub fn default_plan(horizon: usize, ln_floor: f64) -> Result<SequencePlan> {
    if horizon == 0 {
        return Err(Error::Invalid("plan horizon must be at least 1".into()));
    }
    let raw_r: Vec<u64> = (2..horizon as u64 + 2).collect();
    let raw_s = default_s_sequence(horizon);
    let mut ln_beta = Vec::with_capacity(horizon);
    let mut cur = f64::INFINITY;
    for k in 0..horizon {
        for j in 0..=k {
            for (a, b) in [(raw_r[k], raw_s[j]), (raw_r[j], raw_s[k])] {
                if let Some(v) = ln_a20_all_n(a, b) {
                    cur = cur.min(v);
                }
            }
        }
        if !cur.is_finite() {
            return Err(Error::PlanInfeasible { k: k + 1 });
        }
        ln_beta.push(cur.max(ln_floor).min(0.5f64.ln() - 1e-9));
    }
    let gamma = gamma_table(&raw_r, &raw_s);
    build_plan(&raw_r, &raw_s, &ln_beta, &gamma, horizon, true, Some(ln_floor))
}

/// A toy plan from CSV rows `r,s,beta[,gamma]` (header optional). Missing
/// gamma values are computed from the sequences.
pub fn toy_plan_from_csv(text: &str, horizon: usize) -> Result<SequencePlan> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut raw_r = Vec::new();
    let mut raw_s = Vec::new();
    let mut beta = Vec::new();
    let mut gamma_col: Vec<Option<u64>> = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Invalid(format!("bad toy plan CSV: {e}")))?;
        if row == 0 && rec.get(0).is_some_and(|c| c.parse::<u64>().is_err()) {
            continue;
        }
        let bad = || Error::Invalid(format!("bad toy plan row {}: {:?}", row + 1, rec));
        if rec.len() < 3 {
            return Err(bad());
        }
        raw_r.push(rec[0].parse::<u64>().map_err(|_| bad())?);
        raw_s.push(rec[1].parse::<u64>().map_err(|_| bad())?);
        let b: f64 = rec[2].parse().map_err(|_| bad())?;
        if !(b > 0.0) {
            return Err(bad());
        }
        beta.push(b.ln());
        gamma_col.push(match rec.get(3) {
            Some(g) if !g.is_empty() => Some(g.parse().map_err(|_| bad())?),
            _ => None,
        });
    }
    let computed = gamma_table(&raw_r, &raw_s);
    let gamma: Vec<u64> = gamma_col
        .iter()
        .zip(&computed)
        .map(|(g, c)| g.unwrap_or(*c))
        .collect();
    toy_plan(&raw_r, &raw_s, &beta, &gamma, horizon)
}

/// A toy plan from explicit tables; `ln_beta` holds natural logarithms.
/// Short tables are extended by repeating their last entry.
pub fn toy_plan(
    raw_r: &[u64],
    raw_s: &[u64],
    ln_beta: &[f64],
    gamma: &[u64],
    horizon: usize,
) -> Result<SequencePlan> {
    if raw_r.is_empty() || raw_r.len() != raw_s.len() || raw_r.len() != ln_beta.len() {
        return Err(Error::Invalid("toy plan tables must be non-empty and of equal length".into()));
    }
    let extend = |v: &[u64]| -> Vec<u64> {
        let mut v = v.to_vec();
        while v.len() < horizon {
            v.push(*v.last().unwrap());
        }
        v
    };
    let mut lb = ln_beta.to_vec();
    while lb.len() < horizon {
        lb.push(*lb.last().unwrap());
    }
    build_plan(&extend(raw_r), &extend(raw_s), &lb, &extend(gamma), horizon, false, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_sequence_skips_powers() {
        assert_eq!(default_s_sequence(5), vec![3, 5, 6, 7, 10]);
        assert_eq!(default_s_sequence(1), vec![3]);
        assert!(default_s_sequence(40).iter().all(|&s| !is_perfect_power(s)));
    }

    #[test]
    fn phi_example() {
        let lb: Vec<f64> = [0.4f64, 0.3, 0.1, 0.1].iter().map(|b| b.ln()).collect();
        let phi = apply_phi(&[2, 3, 4, 5], &[3, 5, 6, 7], &lb, &[3, 4, 5, 7], 4).unwrap();
        assert_eq!(phi, vec![1, 1, 1, 2]);
    }

    #[test]
    fn phi_constant_beta_is_identity() {
        let lb = vec![0.2f64.ln(); 6];
        let phi = apply_phi(&[2; 6], &[3; 6], &lb, &[3; 6], 6).unwrap();
        assert_eq!(phi, (1..=6).collect::<Vec<_>>());
    }

    #[test]
    fn phi_stuck_when_beta_collapses() {
        let lb = vec![0.4f64.ln(), 1e-9f64.ln(), 1e-9f64.ln()];
        let phi = apply_phi(&[2, 3, 4], &[3, 5, 6], &lb, &[3, 5, 6], 3).unwrap();
        assert_eq!(phi, vec![1, 1, 1]);
    }

    #[test]
    fn m0_examples() {
        assert_eq!(compute_m0(2, &default_s_sequence(10)).unwrap(), 1);
        assert_eq!(compute_m0(9, &[3, 3, 5]).unwrap(), 3);
        assert_eq!(compute_m0(8, &default_s_sequence(10)).unwrap(), 1);
        assert!(matches!(compute_m0(9, &[5, 3]), Err(Error::HorizonTooShort { r: 9, horizon: 2 })));
    }

    #[test]
    fn default_plan_invariants() {
        let p = default_plan(12, DEFAULT_LN_BETA_FLOOR).unwrap();
        p.validate().unwrap();
        assert!(p.certified);
        assert_eq!(p.r[0], 2);
        assert_eq!(p.s[0], 3);
        assert_eq!(p.m0[&2], 1);
        for k in 1..p.horizon {
            assert!(p.raw_ln_beta[k] <= p.raw_ln_beta[k - 1]);
            assert!(p.raw_gamma[k] >= p.raw_gamma[k - 1]);
        }
    }

    #[test]
    fn toy_csv_plan() {
        let csv = "r,s,beta\n2,3,0.4\n3,5,0.35\n4,6,0.1\n";
        let p = toy_plan_from_csv(csv, 6).unwrap();
        assert!(!p.certified);
        assert_eq!(p.r, vec![2, 3, 3, 3, 3, 3]);
        assert_eq!(p.s, vec![3, 5, 5, 5, 5, 5]);
        assert_eq!(p.m0[&3], 2);
        assert_eq!(p.active_bases(1).unwrap(), vec![2]);
        assert_eq!(p.active_bases(2).unwrap(), vec![2, 3]);
        let back: SequencePlan = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
