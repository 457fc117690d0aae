//! Small-domain base testers: identity to a known distribution, closeness of
//! two sampled distributions, and plug-in total variation estimation.
//!
//! Every tester is a deterministic function of its samples. Budgets are
//! computed by [`TesterBudget`]; the `*_counts` variants take per-symbol
//! count vectors so that callers holding very large samples never need to
//! materialize them.

use serde::{Deserialize, Serialize};

use crate::dist::{half_l1, Pmf};
use crate::error::{check_unit_open, Error, Result};
use crate::sampler::counts_from_samples;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TesterVerdict {
    Accept,
    Reject,
}

impl TesterVerdict {
    pub fn is_accept(self) -> bool {
        self == TesterVerdict::Accept
    }
}

impl std::fmt::Display for TesterVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TesterVerdict::Accept => "accept",
            TesterVerdict::Reject => "reject",
        })
    }
}

/// Constants scaling the three sample-complexity formulas (natural logs):
///
/// * `s_IK = ceil(c_IK * sqrt(l) * ln(l + 1) * eps^-2 * ln(1/delta))`
/// * `s_IU = ceil(c_IU * l^(2/3) * ln((l + 1)/delta) * eps^(-8/3))`
/// * `s_E  = ceil(c_E * inflation * (l / ln(l + 1)) * eps^-2 * ln(1/delta))`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TesterBudget {
    pub s_ik_constant: f64,
    pub s_iu_constant: f64,
    pub s_e_constant: f64,
    /// Extra factor on `s_E` absorbing the bias of the plug-in estimator.
    pub estimate_inflation: f64,
}

impl Default for TesterBudget {
    fn default() -> Self {
        TesterBudget {
            s_ik_constant: 1.0,
            s_iu_constant: 1.0,
            s_e_constant: 1.0,
            estimate_inflation: 2.0,
        }
    }
}

fn to_count(raw: f64, what: &str) -> Result<u64> {
    if !raw.is_finite() || raw >= u64::MAX as f64 {
        return Err(Error::BudgetOverflow(format!(
            "{what} budget {raw} does not fit in 64 bits"
        )));
    }
    Ok(raw.ceil().max(1.0) as u64)
}

fn check_gap(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("eps", format!("{eps} must lie in (0, 1]")))
    }
}

fn check_domain(ell: usize) -> Result<()> {
    if ell == 0 {
        Err(Error::EmptyDomain)
    } else {
        Ok(())
    }
}

impl TesterBudget {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("s_ik_constant", self.s_ik_constant),
            ("s_iu_constant", self.s_iu_constant),
            ("s_e_constant", self.s_e_constant),
            ("estimate_inflation", self.estimate_inflation),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        Ok(())
    }

    fn check(&self, ell: usize, eps: f64, delta: f64) -> Result<()> {
        self.validate()?;
        check_domain(ell)?;
        check_gap(eps)?;
        check_unit_open("delta", delta)
    }

    pub fn identity_known(&self, ell: usize, eps: f64, delta: f64) -> Result<u64> {
        self.check(ell, eps, delta)?;
        let l = ell as f64;
        let raw = self.s_ik_constant * l.sqrt() * (l + 1.0).ln() * (1.0 / delta).ln() / (eps * eps);
        to_count(raw, "identity (known)")
    }

    pub fn identity_unknown(&self, ell: usize, eps: f64, delta: f64) -> Result<u64> {
        self.check(ell, eps, delta)?;
        let l = ell as f64;
        let raw = self.s_iu_constant
            * l.powf(2.0 / 3.0)
            * ((l + 1.0) / delta).ln()
            * eps.powf(-8.0 / 3.0);
        to_count(raw, "identity (unknown)")
    }

    pub fn estimate(&self, ell: usize, eps: f64, delta: f64) -> Result<u64> {
        self.check(ell, eps, delta)?;
        let l = ell as f64;
        let raw =
            self.s_e_constant * self.estimate_inflation * (l / (l + 1.0).ln()) * (1.0 / delta).ln()
                / (eps * eps);
        to_count(raw, "estimation")
    }
}

/// Decision threshold on a squared-l2 statistic: half of `4 eps^2 / l`,
/// the least squared l2 distance between two distributions on `[l]` that
/// are `eps`-far in total variation.
pub fn l2_threshold(ell: usize, eps: f64) -> f64 {
    2.0 * eps * eps / ell as f64
}

/// `sum_i ((X_i - m q_i)^2 - X_i) / m^2`, an estimate of `||p - q||_2^2`.
pub fn identity_known_statistic(counts: &[u64], q: &Pmf) -> Result<f64> {
    if counts.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: counts.len(),
            right: q.len(),
        });
    }
    let m: u64 = counts.iter().sum();
    if m == 0 {
        return Err(Error::EmptySamples);
    }
    let mf = m as f64;
    let total: f64 = counts
        .iter()
        .zip(q.masses())
        .map(|(&x, &qi)| {
            let x = x as f64;
            let d = x - mf * qi;
            d * d - x
        })
        .sum();
    Ok(total / (mf * mf))
}

/// Unbiased estimate of `||p - q||_2^2` from two independent samples:
/// collision rates within each sample minus twice the cross-coincidence rate.
pub fn identity_unknown_statistic(counts_p: &[u64], counts_q: &[u64]) -> Result<f64> {
    if counts_p.len() != counts_q.len() {
        return Err(Error::DimensionMismatch {
            left: counts_p.len(),
            right: counts_q.len(),
        });
    }
    let mp: u64 = counts_p.iter().sum();
    let mq: u64 = counts_q.iter().sum();
    if mp < 2 || mq < 2 {
        return Err(Error::param(
            "samples",
            "closeness statistic needs at least two samples per side",
        ));
    }
    let (mp, mq) = (mp as f64, mq as f64);
    let (mut self_p, mut self_q, mut cross) = (0.0, 0.0, 0.0);
    for (&x, &y) in counts_p.iter().zip(counts_q) {
        let (x, y) = (x as f64, y as f64);
        self_p += x * (x - 1.0);
        self_q += y * (y - 1.0);
        cross += x * y;
    }
    Ok(self_p / (mp * (mp - 1.0)) + self_q / (mq * (mq - 1.0)) - 2.0 * cross / (mp * mq))
}

fn verdict(stat: f64, ell: usize, eps: f64) -> TesterVerdict {
    if stat <= l2_threshold(ell, eps) {
        TesterVerdict::Accept
    } else {
        TesterVerdict::Reject
    }
}

pub fn test_identity_known_counts(counts: &[u64], q: &Pmf, eps: f64) -> Result<TesterVerdict> {
    check_gap(eps)?;
    let stat = identity_known_statistic(counts, q)?;
    Ok(if q.len() == 1 {
        TesterVerdict::Accept
    } else {
        verdict(stat, q.len(), eps)
    })
}

/// Accepts when the samples look like draws from `q`; `delta` only enters
/// through the budget, which the caller is expected to have honoured.
pub fn test_identity_known(
    samples: &[usize],
    q: &Pmf,
    eps: f64,
    delta: f64,
) -> Result<TesterVerdict> {
    check_unit_open("delta", delta)?;
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let counts = counts_from_samples(samples, q.len())?;
    test_identity_known_counts(&counts, q, eps)
}

pub fn test_identity_unknown_counts(
    counts_p: &[u64],
    counts_q: &[u64],
    eps: f64,
) -> Result<TesterVerdict> {
    check_gap(eps)?;
    check_domain(counts_p.len())?;
    if counts_p.len() == 1 && counts_q.len() == 1 {
        return Ok(TesterVerdict::Accept);
    }
    let stat = identity_unknown_statistic(counts_p, counts_q)?;
    Ok(verdict(stat, counts_p.len(), eps))
}

pub fn test_identity_unknown(
    samples_p: &[usize],
    samples_q: &[usize],
    ell: usize,
    eps: f64,
    delta: f64,
) -> Result<TesterVerdict> {
    check_unit_open("delta", delta)?;
    check_domain(ell)?;
    let cp = counts_from_samples(samples_p, ell)?;
    let cq = counts_from_samples(samples_q, ell)?;
    test_identity_unknown_counts(&cp, &cq, eps)
}

fn normalized(counts: &[u64]) -> Result<Vec<f64>> {
    let m: u64 = counts.iter().sum();
    if m == 0 {
        return Err(Error::EmptySamples);
    }
    let m = m as f64;
    Ok(counts.iter().map(|&c| c as f64 / m).collect())
}

/// Plug-in estimate `1/2 sum |p_hat - q|`.
pub fn l1_estimate_known_counts(counts: &[u64], q: &Pmf) -> Result<f64> {
    if counts.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: counts.len(),
            right: q.len(),
        });
    }
    if q.len() == 1 {
        return Ok(0.0);
    }
    Ok(half_l1(&normalized(counts)?, q.masses()).min(1.0))
}

/// Plug-in estimate `1/2 sum |p_hat - q_hat|`.
pub fn l1_estimate_sampled_counts(counts_p: &[u64], counts_q: &[u64]) -> Result<f64> {
    if counts_p.len() != counts_q.len() {
        return Err(Error::DimensionMismatch {
            left: counts_p.len(),
            right: counts_q.len(),
        });
    }
    check_domain(counts_p.len())?;
    let (p, q) = (normalized(counts_p)?, normalized(counts_q)?);
    if p.len() == 1 {
        return Ok(0.0);
    }
    Ok(half_l1(&p, &q).min(1.0))
}

/// The reference side of an estimation problem.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    Known(&'a Pmf),
    Sampled(&'a [usize]),
}

pub fn l1_estimate(
    samples_p: &[usize],
    q: Reference<'_>,
    ell: usize,
    eps: f64,
    delta: f64,
) -> Result<f64> {
    check_gap(eps)?;
    check_unit_open("delta", delta)?;
    check_domain(ell)?;
    let cp = counts_from_samples(samples_p, ell)?;
    match q {
        Reference::Known(q) => {
            if q.len() != ell {
                return Err(Error::DimensionMismatch {
                    left: ell,
                    right: q.len(),
                });
            }
            l1_estimate_known_counts(&cp, q)
        }
        Reference::Sampled(sq) => l1_estimate_sampled_counts(&cp, &counts_from_samples(sq, ell)?),
    }
}
