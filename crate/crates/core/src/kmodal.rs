//! Sample-driven flat decompositions for k-modal distributions.
//!
//! The pipeline: an empirical distribution accurate in Kolmogorov distance,
//! a greedy cut into atomic intervals of empirical mass about `eps/(100k)`,
//! a moderate / heavy / negligible classification, and an orientation test
//! on each moderate interval. Intervals judged monotone are refined with the
//! oblivious geometric partition; the rest are kept whole.

use serde::Serialize;

use crate::decomposition::{birge_partition_of, BirgeConfig, IntervalPartition, Monotonicity};
use crate::dist::{Interval, MassProfile, Pmf};
use crate::error::{check_positive, check_unit_open, Error, Result};
use crate::sampler::{counts_from_samples, SampleSource};

/// Sample counts plus the Kolmogorov radius that holds with the construction's
/// failure probability.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPmf {
    counts: Vec<u64>,
    // prefix[j] = counts[0] + ... + counts[j-1]
    prefix: Vec<u64>,
    m: u64,
    kolmogorov_radius: f64,
}

/// `sqrt(ln(2/delta) / (2m))`: `P[d_K(p, p_hat) > radius] <= delta`.
pub fn dkw_radius(m: u64, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * m as f64)).sqrt()
}

/// Smallest `m` with `2 exp(-2 m tau^2) <= delta`, i.e. `ceil(ln(2/delta) / (2 tau^2))`.
pub fn dkw_sample_count(tau: f64, delta: f64) -> Result<u64> {
    check_positive("tau", tau)?;
    check_unit_open("delta", delta)?;
    let m = ((2.0 / delta).ln() / (2.0 * tau * tau)).ceil();
    if !m.is_finite() || m >= u64::MAX as f64 {
        return Err(Error::BudgetOverflow(format!(
            "sample budget {m} for tau = {tau} does not fit in 64 bits"
        )));
    }
    Ok(m.max(1.0) as u64)
}

/// Kolmogorov accuracy used by the flat-decomposition construction.
pub fn construction_tau(eps: f64, k: usize) -> f64 {
    eps * eps / (20000.0 * k as f64)
}

impl EmpiricalPmf {
    pub fn from_counts(counts: Vec<u64>, delta: f64) -> Result<Self> {
        check_unit_open("delta", delta)?;
        if counts.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let mut prefix = Vec::with_capacity(counts.len() + 1);
        let mut acc = 0u64;
        prefix.push(0);
        for &c in &counts {
            acc = acc
                .checked_add(c)
                .ok_or_else(|| Error::BudgetOverflow("sample count overflow".into()))?;
            prefix.push(acc);
        }
        if acc == 0 {
            return Err(Error::EmptySamples);
        }
        Ok(EmpiricalPmf {
            counts,
            prefix,
            m: acc,
            kolmogorov_radius: dkw_radius(acc, delta),
        })
    }

    pub fn domain_size(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.m
    }

    pub fn kolmogorov_radius(&self) -> f64 {
        self.kolmogorov_radius
    }

    pub fn mass(&self) -> Vec<f64> {
        let m = self.m as f64;
        self.counts.iter().map(|&c| c as f64 / m).collect()
    }

    pub fn to_pmf(&self) -> Pmf {
        Pmf::from_raw(self.mass())
    }
}

impl MassProfile for EmpiricalPmf {
    fn domain_size(&self) -> usize {
        self.counts.len()
    }

    fn interval_mass(&self, interval: Interval) -> f64 {
        (self.prefix[interval.hi()] - self.prefix[interval.lo() - 1]) as f64 / self.m as f64
    }
}

/// Empirical distribution of a 1-based sample sequence over `[n]`.
pub fn build_empirical(samples: &[usize], n: usize, delta: f64) -> Result<EmpiricalPmf> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    EmpiricalPmf::from_counts(counts_from_samples(samples, n)?, delta)
}

/// Raw (not necessarily normalized) masses; handy for exact or perturbed
/// stand-ins for an empirical distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMasses {
    prefix: Vec<f64>,
}

impl RawMasses {
    pub fn new(mass: &[f64]) -> Self {
        let mut prefix = Vec::with_capacity(mass.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &v in mass {
            acc += v;
            prefix.push(acc);
        }
        RawMasses { prefix }
    }
}

impl MassProfile for RawMasses {
    fn domain_size(&self) -> usize {
        self.prefix.len() - 1
    }

    fn interval_mass(&self, interval: Interval) -> f64 {
        self.prefix[interval.hi()] - self.prefix[interval.lo() - 1]
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::param("k", "modality parameter must be at least 1"))
    } else {
        Ok(())
    }
}

/// Greedy left-to-right cut: each interval is the shortest prefix of the
/// remainder with mass at least `eps/(100k)`; a remainder lighter than that
/// becomes the final interval.
pub fn atomic_intervals<M: MassProfile + ?Sized>(
    p_hat: &M,
    eps: f64,
    k: usize,
) -> Result<IntervalPartition> {
    check_positive("eps", eps)?;
    check_k(k)?;
    let n = p_hat.domain_size();
    let threshold = eps / (100.0 * k as f64);
    let mut intervals = Vec::new();
    let mut lo = 1;
    while lo <= n {
        let rest = Interval::from_bounds(lo, n);
        if p_hat.interval_mass(rest) < threshold {
            intervals.push(rest);
            break;
        }
        // shortest prefix reaching the threshold; prefix masses are monotone
        let (mut a, mut b) = (lo, n);
        while a < b {
            let mid = a + (b - a) / 2;
            if p_hat.interval_mass(Interval::from_bounds(lo, mid)) >= threshold {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        intervals.push(Interval::from_bounds(lo, a));
        lo = a + 1;
    }
    IntervalPartition::new(intervals)
}

/// Three-way split of the atomic intervals.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct IntervalClassification {
    pub moderate: Vec<Interval>,
    pub heavy_points: Vec<Interval>,
    pub negligible: Vec<Interval>,
}

impl IntervalClassification {
    /// All intervals in domain order.
    pub fn merged(&self) -> Vec<Interval> {
        let mut all: Vec<Interval> = self
            .moderate
            .iter()
            .chain(&self.heavy_points)
            .chain(&self.negligible)
            .copied()
            .collect();
        all.sort_unstable();
        all
    }

    pub fn tiles(&self, n: usize) -> bool {
        IntervalPartition::new(self.merged())
            .map(|p| p.domain_size() == n)
            .unwrap_or(false)
    }
}

/// `[a, b]` is moderate iff its mass is at most `3 eps/(100k)`; otherwise `b`
/// is a heavy point and `[a, b-1]` (when nonempty) is negligible.
pub fn classify_atomic<M: MassProfile + ?Sized>(
    p_hat: &M,
    atomic: &IntervalPartition,
    eps: f64,
    k: usize,
) -> Result<IntervalClassification> {
    check_positive("eps", eps)?;
    check_k(k)?;
    if atomic.domain_size() != p_hat.domain_size() {
        return Err(Error::DimensionMismatch {
            left: atomic.domain_size(),
            right: p_hat.domain_size(),
        });
    }
    let moderate_cap = 3.0 * eps / (100.0 * k as f64);
    let mut out = IntervalClassification::default();
    for &iv in atomic.intervals() {
        if p_hat.interval_mass(iv) <= moderate_cap {
            out.moderate.push(iv);
        } else {
            out.heavy_points
                .push(Interval::from_bounds(iv.hi(), iv.hi()));
            if iv.lo() < iv.hi() {
                out.negligible
                    .push(Interval::from_bounds(iv.lo(), iv.hi() - 1));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationVerdict {
    Up,
    Down,
    Flat,
}

/// Compares every initial interval `[a, j]` of `I = [a, b]` against the
/// uniform distribution on `I`: `Up` if some gap `u_I - p_hat_I` exceeds
/// `eps/7`, else `Down` if some gap is below `-eps/7`, else `Flat`.
pub fn orientation<M: MassProfile + ?Sized>(
    p_hat: &M,
    interval: Interval,
    eps: f64,
) -> Result<OrientationVerdict> {
    check_positive("eps", eps)?;
    interval.check_within(p_hat.domain_size())?;
    if interval.len() == 1 {
        return Ok(OrientationVerdict::Flat);
    }
    let total = p_hat.interval_mass(interval);
    if total <= 0.0 {
        return Err(Error::ZeroMass {
            lo: interval.lo(),
            hi: interval.hi(),
        });
    }
    let threshold = eps / 7.0;
    let width = interval.len() as f64;
    let a = interval.lo();
    let (mut max_gap, mut min_gap) = (f64::NEG_INFINITY, f64::INFINITY);
    for j in a..=interval.hi() {
        let uniform = (j - a + 1) as f64 / width;
        let observed = p_hat.interval_mass(Interval::from_bounds(a, j)) / total;
        let gap = uniform - observed;
        max_gap = max_gap.max(gap);
        min_gap = min_gap.min(gap);
    }
    Ok(if max_gap > threshold {
        OrientationVerdict::Up
    } else if min_gap < -threshold {
        OrientationVerdict::Down
    } else {
        OrientationVerdict::Flat
    })
}

/// Output of the flat-decomposition construction with its intermediate
/// artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatDecomposition {
    pub partition: IntervalPartition,
    pub atomic: IntervalPartition,
    pub classification: IntervalClassification,
    /// One verdict per moderate interval, in order.
    pub verdicts: Vec<OrientationVerdict>,
    pub samples_drawn: u64,
}

/// Deterministic part of the construction, run on any mass profile.
pub fn flat_decomposition_from_masses<M: MassProfile + ?Sized>(
    p_hat: &M,
    eps: f64,
    k: usize,
    birge: &BirgeConfig,
) -> Result<FlatDecomposition> {
    let atomic = atomic_intervals(p_hat, eps, k)?;
    let classification = classify_atomic(p_hat, &atomic, eps, k)?;
    let mut pieces: Vec<Interval> = classification
        .heavy_points
        .iter()
        .chain(&classification.negligible)
        .copied()
        .collect();
    let birge_ratio = birge.ratio_for(eps / 4.0);
    let mut verdicts = Vec::with_capacity(classification.moderate.len());
    for &iv in &classification.moderate {
        let verdict = if p_hat.interval_mass(iv) <= 0.0 {
            OrientationVerdict::Flat
        } else {
            orientation(p_hat, iv, eps)?
        };
        verdicts.push(verdict);
        match verdict {
            OrientationVerdict::Flat => pieces.push(iv),
            OrientationVerdict::Down => pieces.extend(birge_partition_of(
                iv,
                birge_ratio,
                Monotonicity::NonIncreasing,
            )?),
            OrientationVerdict::Up => pieces.extend(birge_partition_of(
                iv,
                birge_ratio,
                Monotonicity::NonDecreasing,
            )?),
        }
    }
    pieces.sort_unstable();
    Ok(FlatDecomposition {
        partition: IntervalPartition::new(pieces)?,
        atomic,
        classification,
        verdicts,
        samples_drawn: 0,
    })
}

/// Number of samples [`construct_flat_decomposition`] draws.
pub fn construction_sample_count(eps: f64, delta: f64, k: usize) -> Result<u64> {
    check_k(k)?;
    dkw_sample_count(construction_tau(eps, k), delta)
}

/// Draws `ceil(ln(2/delta) / (2 tau^2))` samples with `tau = eps^2/(20000k)`
/// and builds a partition that is `eps`-flat for `p` with probability at
/// least `1 - delta` whenever `p` is k-modal.
pub fn construct_flat_decomposition<S: SampleSource + ?Sized>(
    source: &mut S,
    n: usize,
    eps: f64,
    delta: f64,
    k: usize,
    birge: &BirgeConfig,
) -> Result<FlatDecomposition> {
    check_unit_open("eps", eps)?;
    check_unit_open("delta", delta)?;
    check_k(k)?;
    if source.domain_size() != n {
        return Err(Error::DimensionMismatch {
            left: source.domain_size(),
            right: n,
        });
    }
    let m = construction_sample_count(eps, delta, k)?;
    let p_hat = EmpiricalPmf::from_counts(source.draw_counts(m)?, delta)?;
    let mut out = flat_decomposition_from_masses(&p_hat, eps, k, birge)?;
    out.samples_drawn = m;
    Ok(out)
}
