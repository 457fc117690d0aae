//! Exact discrete distributions over `[n] = {1, ..., n}`.
//!
//! All public indices are 1-based to match the usual `[n]` notation; the
//! backing storage is 0-based.

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Raw sums further than this from 1 are rejected at construction.
pub const CONSTRUCTION_TOLERANCE: f64 = 1e-6;

/// Sums within this distance of 1 are stored untouched; anything else is
/// rescaled so the stored masses sum to 1.
pub const NORMALIZED_TOLERANCE: f64 = 1e-12;

/// A closed interval `[lo, hi]` of domain indices, `1 <= lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    lo: usize,
    hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(Error::InvalidInterval { lo, hi, n: hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(i: usize) -> Result<Self> {
        Interval::new(i, i)
    }

    /// Callers guarantee `1 <= lo <= hi`.
    pub(crate) fn from_bounds(lo: usize, hi: usize) -> Self {
        debug_assert!(lo >= 1 && lo <= hi, "bad interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, i: usize) -> bool {
        self.lo <= i && i <= self.hi
    }

    pub fn check_within(&self, n: usize) -> Result<()> {
        if self.hi > n {
            Err(Error::InvalidInterval {
                lo: self.lo,
                hi: self.hi,
                n,
            })
        } else {
            Ok(())
        }
    }

    /// Shift by `offset` positions to the right.
    pub fn shifted(&self, offset: usize) -> Interval {
        Interval::from_bounds(self.lo + offset, self.hi + offset)
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[usize; 2]>::deserialize(deserializer)?;
        Interval::new(lo, hi).map_err(serde::de::Error::custom)
    }
}

/// Anything that can report the mass of an interval of `[n]`.
///
/// Implemented by exact distributions, empirical distributions and raw mass
/// vectors, so the decomposition pipeline runs unchanged on each.
pub trait MassProfile {
    fn domain_size(&self) -> usize;

    /// Mass of `[lo, hi]`; callers guarantee the interval lies in `[n]`.
    fn interval_mass(&self, interval: Interval) -> f64;

    fn point_mass(&self, i: usize) -> f64 {
        self.interval_mass(Interval::from_bounds(i, i))
    }
}

/// A finite probability mass function over `[n]`.
#[derive(Debug, Clone)]
pub struct Pmf {
    mass: Vec<f64>,
    // cumulative[j] = p([1, j]); cumulative[0] = 0.
    cumulative: Vec<f64>,
}

impl PartialEq for Pmf {
    fn eq(&self, other: &Self) -> bool {
        self.mass == other.mass
    }
}

impl Pmf {
    /// Validates and stores `mass`. Entries must be finite and non-negative
    /// with a sum within [`CONSTRUCTION_TOLERANCE`] of 1.
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::EmptyDomain);
        }
        if let Some((i, &v)) = mass
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidMass(format!("p({}) = {v}", i + 1)));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > CONSTRUCTION_TOLERANCE {
            return Err(Error::InvalidMass(format!("masses sum to {total}")));
        }
        let mass = if (total - 1.0).abs() > NORMALIZED_TOLERANCE {
            mass.into_iter().map(|v| v / total).collect()
        } else {
            mass
        };
        Ok(Self::from_raw(mass))
    }

    /// Normalizes arbitrary non-negative weights with a positive total.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyDomain);
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMass(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::InvalidMass(format!("weights sum to {total}")));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    /// Stores `mass` as-is. Used for outputs of exact transformations whose
    /// sum is already 1 up to rounding.
    pub(crate) fn from_raw(mass: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(mass.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for &v in &mass {
            acc += v;
            cumulative.push(acc);
        }
        Pmf { mass, cumulative }
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        Ok(Self::from_raw(vec![1.0 / n as f64; n]))
    }

    /// Point mass at `i` (1-based) over `[n]`.
    pub fn point_mass(n: usize, i: usize) -> Result<Self> {
        Interval::point(i)?.check_within(n)?;
        let mut mass = vec![0.0; n];
        mass[i - 1] = 1.0;
        Ok(Self::from_raw(mass))
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    /// `p(i)` for 1-based `i`.
    pub fn prob(&self, i: usize) -> f64 {
        self.mass[i - 1]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn into_masses(self) -> Vec<f64> {
        self.mass
    }

    /// `P(j) = p([1, j])` for `j` in `0..=n`.
    pub fn prefix_mass(&self, j: usize) -> f64 {
        self.cumulative[j]
    }

    pub fn cdf(&self) -> Cdf {
        Cdf {
            cumulative: self.cumulative[1..].to_vec(),
        }
    }

    /// `p(I)` by direct summation over the interval.
    pub fn mass_of(&self, interval: Interval) -> f64 {
        self.mass[interval.lo - 1..interval.hi].iter().sum()
    }

    /// Mirror image `i -> n + 1 - i`.
    pub fn reversed(&self) -> Pmf {
        let mut mass = self.mass.clone();
        mass.reverse();
        Pmf::from_raw(mass)
    }

    pub fn max_mass(&self) -> f64 {
        self.mass.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_mass(&self) -> f64 {
        self.mass.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.mass.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.mass.windows(2).all(|w| w[0] <= w[1])
    }

    /// Inverse-CDF draw of one 1-based index.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.cumulative[self.mass.len()];
        let u: f64 = rng.random::<f64>() * total;
        let idx = self.cumulative[1..].partition_point(|&c| c <= u);
        idx.min(self.mass.len() - 1) + 1
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl MassProfile for Pmf {
    fn domain_size(&self) -> usize {
        self.mass.len()
    }

    fn interval_mass(&self, interval: Interval) -> f64 {
        (self.cumulative[interval.hi] - self.cumulative[interval.lo - 1]).max(0.0)
    }

    fn point_mass(&self, i: usize) -> f64 {
        self.mass[i - 1]
    }
}

#[derive(Serialize, Deserialize)]
struct PmfFile {
    n: usize,
    mass: Vec<f64>,
}

impl Serialize for Pmf {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PmfFile {
            n: self.mass.len(),
            mass: self.mass.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pmf {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = PmfFile::deserialize(deserializer)?;
        if file.n != file.mass.len() {
            return Err(serde::de::Error::custom(format!(
                "n = {} but {} masses given",
                file.n,
                file.mass.len()
            )));
        }
        Pmf::new(file.mass).map_err(serde::de::Error::custom)
    }
}

/// Cumulative distribution function `P(j) = p([1, j])`, `j` in `[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    cumulative: Vec<f64>,
}

impl Cdf {
    /// `P(j)` for 1-based `j`.
    pub fn at(&self, j: usize) -> f64 {
        self.cumulative[j - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.cumulative
    }
}

/// Max- and min-intervals of a distribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModalityReport {
    pub max_intervals: Vec<Interval>,
    pub min_intervals: Vec<Interval>,
    pub k: usize,
}

fn check_same_domain(p: &Pmf, q: &Pmf) -> Result<()> {
    if p.len() != q.len() {
        Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        })
    } else {
        Ok(())
    }
}

/// Total variation distance `(1/2) sum_i |p(i) - q(i)|`.
pub fn tv_distance(p: &Pmf, q: &Pmf) -> Result<f64> {
    check_same_domain(p, q)?;
    Ok(half_l1(p.masses(), q.masses()))
}

/// Compensated (Neumaier) sum, so that long vectors of tiny masses keep
/// their distance accurate to a few ulps.
pub(crate) fn half_l1(a: &[f64], b: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let term = (x - y).abs();
        let t = sum + term;
        comp += if sum >= term {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
    }
    0.5 * (sum + comp)
}

/// Kolmogorov distance `max_j |P(j) - Q(j)|`.
pub fn kolmogorov_distance(p: &Pmf, q: &Pmf) -> Result<f64> {
    check_same_domain(p, q)?;
    Ok(p.cumulative
        .iter()
        .zip(&q.cumulative)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Scans maximal plateaus lying inside `[2, n-1]` and reports those strictly
/// above (max-interval) or strictly below (min-interval) both neighbours.
/// Plateaus are detected with exact float equality.
pub fn modality(p: &Pmf) -> ModalityReport {
    modality_within(p, 0.0)
}

/// Like [`modality`], but neighbouring masses whose relative difference is at
/// most `rel_tol` count as equal. Outputs of exact transformations carry
/// rounding noise on levels that are equal in exact arithmetic; a tolerance
/// of a few ulps keeps that noise from registering as extra modes.
pub fn modality_within(p: &Pmf, rel_tol: f64) -> ModalityReport {
    let mass = p.masses();
    let n = mass.len();
    let same = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs());
    let mut report = ModalityReport {
        max_intervals: Vec::new(),
        min_intervals: Vec::new(),
        k: 0,
    };
    // 0-based run [start, end]
    let mut start = 0;
    while start < n {
        let value = mass[start];
        let mut end = start;
        while end + 1 < n && same(mass[end + 1], mass[end]) {
            end += 1;
        }
        if start >= 1 && end + 1 < n {
            let (left, right) = (mass[start - 1], mass[end + 1]);
            let last = mass[end];
            let interval = Interval::from_bounds(start + 1, end + 1);
            if left < value && right < last {
                report.max_intervals.push(interval);
            } else if left > value && right > last {
                report.min_intervals.push(interval);
            }
        }
        start = end + 1;
    }
    report.k = report.max_intervals.len() + report.min_intervals.len();
    report
}

/// `m` i.i.d. 1-based draws from `p`.
pub fn sample<R: Rng + ?Sized>(p: &Pmf, rng: &mut R, m: usize) -> Vec<usize> {
    (0..m).map(|_| p.draw(rng)).collect()
}

/// Conditional distribution `p_I(i) = p(i) / p(I)`, re-indexed to `[|I|]`.
pub fn conditional(p: &Pmf, interval: Interval) -> Result<Pmf> {
    interval.check_within(p.len())?;
    let slice = &p.masses()[interval.lo - 1..interval.hi];
    let total: f64 = slice.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroMass {
            lo: interval.lo,
            hi: interval.hi,
        });
    }
    Ok(Pmf::from_raw(slice.iter().map(|v| v / total).collect()))
}

/// True iff `u([1, j]) <= p([1, j])` for every initial interval, which holds
/// for every non-increasing `p`.
pub fn initial_interval_dominance_check(p: &Pmf) -> bool {
    let n = p.len() as f64;
    (1..=p.len()).all(|j| j as f64 / n <= p.prefix_mass(j) + NORMALIZED_TOLERANCE)
}
