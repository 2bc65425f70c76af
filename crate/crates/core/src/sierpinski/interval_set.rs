use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::arith::{rational_serde, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfOpen {
    #[serde(with = "rational_serde")]
    pub lo: Rational,
    #[serde(with = "rational_serde")]
    pub hi: Rational,
}

/// Finite union of disjoint half-open intervals `[lo, hi)`, sorted, with
/// no empty or touching members.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<HalfOpen>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Normalises arbitrary `(lo, hi)` pairs: drops empty ones, sorts and
    /// merges overlapping or adjacent ones.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Rational, Rational)>) -> Self {
        let mut v: Vec<(Rational, Rational)> = pairs.into_iter().filter(|(a, b)| a < b).collect();
        v.sort();
        let mut out: Vec<HalfOpen> = Vec::with_capacity(v.len());
        for (lo, hi) in v {
            match out.last_mut() {
                Some(last) if lo <= last.hi => {
                    if hi > last.hi {
                        last.hi = hi;
                    }
                }
                _ => out.push(HalfOpen { lo, hi }),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[HalfOpen] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> Rational {
        self.intervals.iter().fold(Rational::zero(), |acc, i| acc + (&i.hi - &i.lo))
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let idx = self.intervals.partition_point(|i| i.hi <= *x);
        self.intervals.get(idx).is_some_and(|i| i.lo <= *x)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_pairs(
            self.intervals
                .iter()
                .chain(&other.intervals)
                .map(|i| (i.lo.clone(), i.hi.clone())),
        )
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = (&a[i].lo).max(&b[j].lo);
            let hi = (&a[i].hi).min(&b[j].hi);
            if lo < hi {
                out.push(HalfOpen { lo: lo.clone(), hi: hi.clone() });
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { intervals: out }
    }

    /// `[lo, hi) ∩ self`.
    pub fn clip(&self, lo: &Rational, hi: &Rational) -> Self {
        self.intersect(&Self::from_pairs([(lo.clone(), hi.clone())]))
    }

    /// Measure of `self ∩ [lo, hi)` without building the intersection.
    pub fn measure_within(&self, lo: &Rational, hi: &Rational) -> Rational {
        let start = self.intervals.partition_point(|i| i.hi <= *lo);
        let mut total = Rational::zero();
        for i in &self.intervals[start..] {
            if i.lo >= *hi {
                break;
            }
            let a = (&i.lo).max(lo);
            let b = (&i.hi).min(hi);
            if a < b {
                total += b - a;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    #[test]
    fn normalises() {
        let s = IntervalSet::from_pairs([
            (rat(1, 2), rat(3, 4)),
            (rat(0, 1), rat(1, 4)),
            (rat(1, 4), rat(1, 3)),
            (rat(5, 8), rat(7, 8)),
            (rat(1, 9), rat(1, 9)),
        ]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.measure(), rat(1, 3) + rat(3, 8));
        assert!(s.contains(&rat(0, 1)));
        assert!(!s.contains(&rat(1, 3)));
        assert_eq!(s.measure_within(&rat(1, 4), &rat(3, 4)), rat(1, 12) + rat(1, 4));
    }
}
