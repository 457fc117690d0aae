//! Interval partitions of `[n]`, flattened and reduced distributions, and the
//! oblivious geometric partition for monotone distributions.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dist::{conditional, half_l1, tv_distance, Interval, Pmf};
use crate::error::{check_positive, Error, Result};

/// Ordered, disjoint, consecutive intervals covering `[n]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalPartition {
    n: usize,
    intervals: Vec<Interval>,
}

impl IntervalPartition {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        let first = intervals
            .first()
            .ok_or_else(|| Error::InvalidPartition("no intervals".into()))?;
        if first.lo() != 1 {
            return Err(Error::InvalidPartition(format!(
                "first interval starts at {}",
                first.lo()
            )));
        }
        for w in intervals.windows(2) {
            if w[1].lo() != w[0].hi() + 1 {
                return Err(Error::InvalidPartition(format!(
                    "[{}, {}] is not followed by an adjacent interval",
                    w[0].lo(),
                    w[0].hi()
                )));
            }
        }
        let n = intervals.last().map(Interval::hi).unwrap_or(0);
        Ok(IntervalPartition { n, intervals })
    }

    /// Consecutive intervals of the given (positive) lengths.
    pub fn from_lengths(lengths: &[usize]) -> Result<Self> {
        let mut lo = 1;
        let mut intervals = Vec::with_capacity(lengths.len());
        for &len in lengths {
            if len == 0 {
                return Err(Error::InvalidPartition("zero-length interval".into()));
            }
            intervals.push(Interval::from_bounds(lo, lo + len - 1));
            lo += len;
        }
        Self::new(intervals)
    }

    pub fn singletons(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        Ok(IntervalPartition {
            n,
            intervals: (1..=n).map(|i| Interval::from_bounds(i, i)).collect(),
        })
    }

    pub fn trivial(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        Ok(IntervalPartition {
            n,
            intervals: vec![Interval::from_bounds(1, n)],
        })
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.intervals.iter().map(Interval::len).collect()
    }

    /// 0-based position of the interval containing the 1-based point `i`.
    pub fn locate(&self, i: usize) -> usize {
        self.intervals.partition_point(|iv| iv.hi() < i)
    }

    /// True iff every interval of `coarse` is a union of intervals of `self`.
    pub fn refines(&self, coarse: &IntervalPartition) -> bool {
        if self.n != coarse.n {
            return false;
        }
        let cuts: std::collections::HashSet<usize> =
            self.intervals.iter().map(Interval::hi).collect();
        coarse.intervals.iter().all(|iv| cuts.contains(&iv.hi()))
    }

    /// Aggregates per-symbol counts over `[n]` into per-interval counts.
    pub fn reduce_counts(&self, counts: &[u64]) -> Result<Vec<u64>> {
        self.check_domain(counts.len())?;
        Ok(self
            .intervals
            .iter()
            .map(|iv| counts[iv.lo() - 1..iv.hi()].iter().sum())
            .collect())
    }

    fn check_domain(&self, n: usize) -> Result<()> {
        if self.n != n {
            Err(Error::DimensionMismatch {
                left: self.n,
                right: n,
            })
        } else {
            Ok(())
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl Serialize for IntervalPartition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.intervals.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntervalPartition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let intervals = Vec::<Interval>::deserialize(deserializer)?;
        IntervalPartition::new(intervals).map_err(serde::de::Error::custom)
    }
}

/// Flattened distribution: each interval's mass spread evenly over it.
pub fn flatten(p: &Pmf, part: &IntervalPartition) -> Result<Pmf> {
    part.check_domain(p.len())?;
    let mut out = Vec::with_capacity(p.len());
    for iv in part.intervals() {
        let avg = p.mass_of(*iv) / iv.len() as f64;
        out.extend(std::iter::repeat_n(avg, iv.len()));
    }
    Ok(Pmf::from_raw(out))
}

/// Reduced distribution over `[len]`: point `j` gets `p(I_j)`.
pub fn reduce(p: &Pmf, part: &IntervalPartition) -> Result<Pmf> {
    part.check_domain(p.len())?;
    Ok(Pmf::from_raw(
        part.intervals().iter().map(|iv| p.mass_of(*iv)).collect(),
    ))
}

/// `d_TV(p, flatten(p, part))`.
pub fn flatness_error(p: &Pmf, part: &IntervalPartition) -> Result<f64> {
    part.check_domain(p.len())?;
    let mass = p.masses();
    let mut total = 0.0;
    for iv in part.intervals() {
        let slice = &mass[iv.lo() - 1..iv.hi()];
        let avg = slice.iter().sum::<f64>() / iv.len() as f64;
        total += slice.iter().map(|v| (v - avg).abs()).sum::<f64>();
    }
    Ok(0.5 * total)
}

/// Upper bound `(1/2) sum_j |p(I_j) - q(I_j)| + sum_j p(I_j) d_TV(p_{I_j}, q_{I_j})`
/// on `d_TV(p, q)`. Intervals where either side has zero mass contribute only
/// the first term.
pub fn decomp_tv_upper_bound(p: &Pmf, q: &Pmf, part: &IntervalPartition) -> Result<f64> {
    part.check_domain(p.len())?;
    part.check_domain(q.len())?;
    let mut coarse = 0.0;
    let mut local = 0.0;
    for iv in part.intervals() {
        let (pi, qi) = (p.mass_of(*iv), q.mass_of(*iv));
        coarse += (pi - qi).abs();
        if pi > 0.0 && qi > 0.0 {
            let pc = conditional(p, *iv)?;
            let qc = conditional(q, *iv)?;
            local += pi * half_l1(pc.masses(), qc.masses());
        }
    }
    Ok(0.5 * coarse + local)
}

/// Partition whose intervals are all nonempty `I_i ∩ I'_j`.
pub fn common_refinement(
    a: &IntervalPartition,
    b: &IntervalPartition,
) -> Result<IntervalPartition> {
    a.check_domain(b.n)?;
    let mut cuts: Vec<usize> = a
        .intervals
        .iter()
        .chain(&b.intervals)
        .map(Interval::hi)
        .collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut lo = 1;
    let intervals = cuts
        .into_iter()
        .map(|hi| {
            let iv = Interval::from_bounds(lo, hi);
            lo = hi + 1;
            iv
        })
        .collect();
    Ok(IntervalPartition { n: a.n, intervals })
}

/// Direction a monotone distribution is known to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    NonIncreasing,
    NonDecreasing,
}

/// Target-flatness to geometric-ratio conversion for the oblivious partition.
///
/// For any non-increasing `p`, `flatness_error(p, birge_partition(n, eps))`
/// is `O(eps)`; `flat_constant` is the constant used for that `O(.)`, so a
/// `target`-flat partition is built with `eps = target / flat_constant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirgeConfig {
    pub flat_constant: f64,
}

impl Default for BirgeConfig {
    fn default() -> Self {
        BirgeConfig { flat_constant: 4.0 }
    }
}

impl BirgeConfig {
    pub fn ratio_for(&self, target_flatness: f64) -> f64 {
        target_flatness / self.flat_constant
    }

    /// Oblivious partition that is `target_flatness`-flat for every
    /// distribution of the given orientation.
    pub fn partition(
        &self,
        n: usize,
        target_flatness: f64,
        orientation: Monotonicity,
    ) -> Result<IntervalPartition> {
        check_positive("flat_constant", self.flat_constant)?;
        birge_partition(n, self.ratio_for(target_flatness), orientation)
    }
}

/// Lengths `floor((1+eps)^j)` for `j = 1, 2, ...`, with the last one truncated
/// so the total is exactly `n`; all singletons when `eps <= 1/n`.
pub fn birge_lengths(n: usize, eps: f64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    check_positive("eps", eps)?;
    if eps <= 1.0 / n as f64 {
        return Ok(vec![1; n]);
    }
    let growth = 1.0 + eps;
    let mut lengths = Vec::new();
    let mut covered = 0usize;
    let mut power = 1.0f64;
    while covered < n {
        power *= growth;
        // guard against x.999999 for powers that are exact integers
        let len = ((power * (1.0 + 1e-12)).floor() as usize).max(1);
        let len = len.min(n - covered);
        lengths.push(len);
        covered += len;
    }
    Ok(lengths)
}

/// Oblivious partition of `[n]`; the non-decreasing version is the mirror
/// image of the non-increasing one.
pub fn birge_partition(n: usize, eps: f64, orientation: Monotonicity) -> Result<IntervalPartition> {
    let mut lengths = birge_lengths(n, eps)?;
    if orientation == Monotonicity::NonDecreasing {
        lengths.reverse();
    }
    IntervalPartition::from_lengths(&lengths)
}

/// Oblivious partition of the sub-interval `interval`, as absolute intervals.
pub fn birge_partition_of(
    interval: Interval,
    eps: f64,
    orientation: Monotonicity,
) -> Result<Vec<Interval>> {
    let local = birge_partition(interval.len(), eps, orientation)?;
    Ok(local
        .intervals
        .iter()
        .map(|iv| iv.shifted(interval.lo() - 1))
        .collect())
}

/// Convenience re-check of the reduction identity used by tests and the
/// harness: `d_TV` of the reduced pair.
pub fn reduced_tv(p: &Pmf, q: &Pmf, part: &IntervalPartition) -> Result<f64> {
    tv_distance(&reduce(p, part)?, &reduce(q, part)?)
}
