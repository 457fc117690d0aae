//! The eight top-level testers: identity testing and total variation
//! estimation for monotone and k-modal distributions, with the reference
//! distribution either known explicitly or available through samples.
//!
//! Each tester builds a partition that is flat for both distributions,
//! reduces them onto `[l]` where `l` is the number of intervals, and hands
//! the reduced problem to a base tester from [`crate::testers`].

use serde::{Deserialize, Serialize};

use crate::decomposition::{
    birge_lengths, common_refinement, reduce, BirgeConfig, IntervalPartition, Monotonicity,
};
use crate::dist::Pmf;
use crate::error::{check_unit_open, Error, Result};
use crate::kmodal::{
    construct_flat_decomposition, construction_sample_count, flat_decomposition_from_masses,
};
use crate::sampler::SampleSource;
use crate::testers::{
    l1_estimate_known_counts, l1_estimate_sampled_counts, test_identity_known_counts,
    test_identity_unknown_counts, TesterBudget, TesterVerdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    MonotoneNonIncreasing,
    MonotoneNonDecreasing,
    Kmodal(usize),
}

impl Family {
    pub fn monotonicity(self) -> Option<Monotonicity> {
        match self {
            Family::MonotoneNonIncreasing => Some(Monotonicity::NonIncreasing),
            Family::MonotoneNonDecreasing => Some(Monotonicity::NonDecreasing),
            Family::Kmodal(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Identity,
    L1Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QMode {
    Explicit,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub family: Family,
    pub task: Task,
    pub q_mode: QMode,
    pub eps: f64,
    pub delta: f64,
}

impl ProblemSpec {
    pub fn new(family: Family, task: Task, q_mode: QMode, eps: f64, delta: f64) -> Result<Self> {
        let spec = ProblemSpec {
            family,
            task,
            q_mode,
            eps,
            delta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_open("eps", self.eps)?;
        check_unit_open("delta", self.delta)?;
        if self.family == Family::Kmodal(0) {
            return Err(Error::param("k", "modality parameter must be at least 1"));
        }
        Ok(())
    }
}

/// Tunable constants shared by all reduction testers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub birge: BirgeConfig,
    pub budget: TesterBudget,
}

/// How the tester reaches the reference distribution `q`.
pub enum Reference<'a> {
    Known(&'a Pmf),
    Sampled(&'a mut dyn SampleSource),
}

impl Reference<'_> {
    fn mode(&self) -> QMode {
        match self {
            Reference::Known(_) => QMode::Explicit,
            Reference::Sampled(_) => QMode::Sampled,
        }
    }

    fn domain_size(&self) -> usize {
        match self {
            Reference::Known(q) => q.len(),
            Reference::Sampled(s) => s.domain_size(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestResult {
    Verdict(TesterVerdict),
    Estimate(f64),
}

impl TestResult {
    pub fn verdict(self) -> Option<TesterVerdict> {
        match self {
            TestResult::Verdict(v) => Some(v),
            TestResult::Estimate(_) => None,
        }
    }

    pub fn estimate(self) -> Option<f64> {
        match self {
            TestResult::Estimate(e) => Some(e),
            TestResult::Verdict(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub result: TestResult,
    /// The partition the problem was reduced along.
    pub partition: IntervalPartition,
    pub samples_p: u64,
    pub samples_q: u64,
}

impl TestOutcome {
    pub fn samples_used(&self) -> u64 {
        self.samples_p + self.samples_q
    }
}

/// Samples the reduced base test draws from each sampled side.
pub fn base_budget(
    task: Task,
    q_mode: QMode,
    budget: &TesterBudget,
    ell: usize,
    eps: f64,
    delta: f64,
) -> Result<u64> {
    match (task, q_mode) {
        (Task::Identity, QMode::Explicit) => budget.identity_known(ell, eps, delta),
        (Task::Identity, QMode::Sampled) => budget.identity_unknown(ell, eps, delta),
        (Task::L1Estimate, _) => budget.estimate(ell, eps, delta),
    }
}

fn check_reference(spec: &ProblemSpec, n: usize, q: &Reference<'_>) -> Result<()> {
    spec.validate()?;
    if q.mode() != spec.q_mode {
        return Err(Error::param(
            "q",
            format!("expected {:?} reference", spec.q_mode),
        ));
    }
    if q.domain_size() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: q.domain_size(),
        });
    }
    Ok(())
}

/// Draws the base budget through `partition` and runs the base tester.
fn run_reduced<S: SampleSource + ?Sized>(
    spec: &ProblemSpec,
    cfg: &ReductionConfig,
    partition: &IntervalPartition,
    p: &mut S,
    q: &mut Reference<'_>,
    eps: f64,
    delta: f64,
) -> Result<(TestResult, u64, u64)> {
    let ell = partition.len();
    let m = base_budget(spec.task, spec.q_mode, &cfg.budget, ell, eps, delta)?;
    let counts_p = partition.reduce_counts(&p.draw_counts(m)?)?;
    let (result, drawn_q) = match q {
        Reference::Known(q) => {
            let q_r = reduce(q, partition)?;
            let result = match spec.task {
                Task::Identity => {
                    TestResult::Verdict(test_identity_known_counts(&counts_p, &q_r, eps)?)
                }
                Task::L1Estimate => {
                    TestResult::Estimate(l1_estimate_known_counts(&counts_p, &q_r)?)
                }
            };
            (result, 0)
        }
        Reference::Sampled(src) => {
            let counts_q = partition.reduce_counts(&src.draw_counts(m)?)?;
            let result = match spec.task {
                Task::Identity => {
                    TestResult::Verdict(test_identity_unknown_counts(&counts_p, &counts_q, eps)?)
                }
                Task::L1Estimate => {
                    TestResult::Estimate(l1_estimate_sampled_counts(&counts_p, &counts_q)?)
                }
            };
            (result, m)
        }
    };
    Ok((result, m, drawn_q))
}

/// Flatness target of the oblivious partition: `eps/8` for identity
/// testing, `eps/4` for estimation.
pub fn monotone_flatness_target(task: Task, eps: f64) -> f64 {
    match task {
        Task::Identity => eps / 8.0,
        Task::L1Estimate => eps / 4.0,
    }
}

pub fn monotone_partition(
    spec: &ProblemSpec,
    cfg: &ReductionConfig,
    n: usize,
) -> Result<IntervalPartition> {
    let orientation = spec
        .family
        .monotonicity()
        .ok_or_else(|| Error::param("family", "monotone tester needs a monotone family"))?;
    cfg.birge.partition(
        n,
        monotone_flatness_target(spec.task, spec.eps),
        orientation,
    )
}

/// Identity test or estimate for distributions of a declared monotone
/// orientation. The orientation is a precondition and is not verified.
pub fn test_monotone<S: SampleSource + ?Sized>(
    spec: &ProblemSpec,
    cfg: &ReductionConfig,
    p: &mut S,
    mut q: Reference<'_>,
) -> Result<TestOutcome> {
    let n = p.domain_size();
    check_reference(spec, n, &q)?;
    let partition = monotone_partition(spec, cfg, n)?;
    let (result, samples_p, samples_q) =
        run_reduced(spec, cfg, &partition, p, &mut q, spec.eps / 2.0, spec.delta)?;
    Ok(TestOutcome {
        result,
        partition,
        samples_p,
        samples_q,
    })
}

fn kmodal_k(spec: &ProblemSpec) -> Result<usize> {
    match spec.family {
        Family::Kmodal(k) if k >= 1 => Ok(k),
        _ => Err(Error::param(
            "family",
            "k-modal tester needs a k-modal family",
        )),
    }
}

/// Identity test or estimate for k-modal distributions. Flat decompositions
/// are built for `p` from samples and for `q` from samples or, when `q` is
/// known, from its exact masses; the problem is reduced along their common
/// refinement.
pub fn test_kmodal<S: SampleSource + ?Sized>(
    spec: &ProblemSpec,
    cfg: &ReductionConfig,
    p: &mut S,
    mut q: Reference<'_>,
) -> Result<TestOutcome> {
    let n = p.domain_size();
    check_reference(spec, n, &q)?;
    let k = kmodal_k(spec)?;
    let (eps_d, delta_d) = (spec.eps / 2.0, spec.delta / 4.0);
    let dp = construct_flat_decomposition(p, n, eps_d, delta_d, k, &cfg.birge)?;
    let dq = match &mut q {
        Reference::Known(qp) => flat_decomposition_from_masses(*qp, eps_d, k, &cfg.birge)?,
        Reference::Sampled(src) => {
            construct_flat_decomposition(&mut **src, n, eps_d, delta_d, k, &cfg.birge)?
        }
    };
    let partition = common_refinement(&dp.partition, &dq.partition)?;
    let (result, base_p, base_q) = run_reduced(
        spec,
        cfg,
        &partition,
        p,
        &mut q,
        spec.eps / 2.0,
        spec.delta / 2.0,
    )?;
    Ok(TestOutcome {
        result,
        partition,
        samples_p: dp.samples_drawn + base_p,
        samples_q: dq.samples_drawn + base_q,
    })
}

/// Dispatches on the family.
pub fn run_tester<S: SampleSource + ?Sized>(
    spec: &ProblemSpec,
    cfg: &ReductionConfig,
    p: &mut S,
    q: Reference<'_>,
) -> Result<TestOutcome> {
    match spec.family {
        Family::Kmodal(_) => test_kmodal(spec, cfg, p, q),
        _ => test_monotone(spec, cfg, p, q),
    }
}

/// Samples a tester draws, split by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleCount {
    pub from_p: u64,
    pub from_q: u64,
}

impl SampleCount {
    pub fn total(&self) -> u64 {
        self.from_p + self.from_q
    }
}

/// Exact k-modal sample count once the refinement size `ell_j` is known.
pub fn kmodal_sample_count_given(
    spec: &ProblemSpec,
    cfg: &ReductionConfig,
    ell_j: usize,
) -> Result<SampleCount> {
    spec.validate()?;
    let k = kmodal_k(spec)?;
    let m_dkw = construction_sample_count(spec.eps / 2.0, spec.delta / 4.0, k)?;
    let base = base_budget(
        spec.task,
        spec.q_mode,
        &cfg.budget,
        ell_j,
        spec.eps / 2.0,
        spec.delta / 2.0,
    )?;
    let (q_dkw, q_base) = match spec.q_mode {
        QMode::Explicit => (0, 0),
        QMode::Sampled => (m_dkw, base),
    };
    Ok(SampleCount {
        from_p: m_dkw + base,
        from_q: q_dkw + q_base,
    })
}

/// Upper bound on the number of intervals in one flat decomposition of
/// `[n]` built at accuracy `eps`: every atomic interval contributes either
/// at most two pieces or an oblivious sub-partition of at most `n` points.
pub fn kmodal_partition_size_bound(
    n: usize,
    eps: f64,
    k: usize,
    birge: &BirgeConfig,
) -> Result<usize> {
    let atomic = (100.0 * k as f64 / eps).ceil() as usize + 1;
    let sub = birge_lengths(n, birge.ratio_for(eps / 4.0))?.len().max(2);
    Ok((atomic.saturating_mul(sub)).min(n))
}

/// Samples the tester for `spec` draws on a domain of size `n`. Exact for
/// monotone families; for k-modal families the partition size is data
/// dependent and the structural upper bound on it is used.
pub fn end_to_end_sample_count(
    spec: &ProblemSpec,
    cfg: &ReductionConfig,
    n: usize,
) -> Result<SampleCount> {
    spec.validate()?;
    match spec.family {
        Family::Kmodal(k) => {
            let one = kmodal_partition_size_bound(n, spec.eps / 2.0, k, &cfg.birge)?;
            let ell_j = (2 * one).saturating_sub(1).min(n);
            kmodal_sample_count_given(spec, cfg, ell_j)
        }
        _ => {
            let ell = monotone_partition(spec, cfg, n)?.len();
            let m = base_budget(
                spec.task,
                spec.q_mode,
                &cfg.budget,
                ell,
                spec.eps / 2.0,
                spec.delta,
            )?;
            let from_q = if spec.q_mode == QMode::Sampled { m } else { 0 };
            Ok(SampleCount { from_p: m, from_q })
        }
    }
}
