//! Seeded Monte-Carlo experiments over the reduction testers.
//!
//! Trial `t` of an experiment with master seed `s` draws its own seed from
//! the ChaCha8 stream `t` of `s`; that seed alone reproduces the trial, and
//! it is written into every report row. Trials run in a rayon pool, and
//! rows are assembled in trial order, so reports do not depend on the
//! number of threads.

pub mod instances;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::flatness_error;
use crate::dist::Pmf;
use crate::error::{Error, Result};
use crate::reduction::{
    end_to_end_sample_count, monotone_partition, run_tester, Family, ProblemSpec, QMode,
    ReductionConfig, Reference, Task, TestResult,
};
use crate::sampler::{PmfSampler, SampleSource};
use crate::testers::{
    l1_estimate_known_counts, l1_estimate_sampled_counts, test_identity_known_counts,
    test_identity_unknown_counts, TesterBudget,
};

pub use instances::{generate_instance, generate_pair, Instance, InstanceKind, PairKind};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "MODAL_PROBE_THREADS";

// Stream layout inside one trial's generator.
const STREAM_INSTANCE: u64 = 0;
const STREAM_P: u64 = 1;
const STREAM_Q: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub instance: InstanceKind,
    pub pair: PairKind,
    #[serde(default)]
    pub reduction: ReductionConfig,
    /// Wall-clock column; disable for byte-reproducible CSV output.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// Instance family implied by the problem's family.
    pub fn natural_instance(family: Family) -> InstanceKind {
        match family {
            Family::Kmodal(k) => InstanceKind::RandomKmodal { k },
            other => InstanceKind::RandomMonotone {
                orientation: other.monotonicity().expect("monotone family"),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        if self.trials == 0 {
            return Err(Error::param("trials", "at least one trial is required"));
        }
        if self.n == 0 && !matches!(self.instance, InstanceKind::Lifted { .. }) {
            return Err(Error::EmptyDomain);
        }
        if self.threads == Some(0) {
            return Err(Error::param("threads", "thread count must be positive"));
        }
        Ok(())
    }
}

/// Seed of trial `trial` under master seed `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng.next_u64()
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    /// `accept`/`reject`, or the estimate printed with full precision.
    pub verdict_or_estimate: String,
    pub samples_used: u64,
    pub flatness_p: f64,
    pub flatness_q: f64,
    pub wall_ms: f64,
    pub true_tv: f64,
    pub partition_size: usize,
}

impl TrialRow {
    pub fn accepted(&self) -> Option<bool> {
        match self.verdict_or_estimate.as_str() {
            "accept" => Some(true),
            "reject" => Some(false),
            _ => None,
        }
    }

    pub fn estimate(&self) -> Option<f64> {
        self.verdict_or_estimate.parse().ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: ExperimentConfig,
    pub rows: Vec<TrialRow>,
    pub acceptance_rate: Option<f64>,
    pub mean_abs_error: Option<f64>,
    /// Fraction of estimates within `eps` of the true distance.
    pub coverage: Option<f64>,
    pub mean_flatness_p: f64,
    pub mean_flatness_q: f64,
    pub max_flatness_p: f64,
    pub max_flatness_q: f64,
    pub mean_samples: f64,
}

impl TrialReport {
    /// Aggregates recomputed from `rows`.
    pub fn from_rows(config: ExperimentConfig, rows: Vec<TrialRow>) -> Self {
        let count = rows.len().max(1) as f64;
        let verdicts: Vec<bool> = rows.iter().filter_map(TrialRow::accepted).collect();
        let acceptance_rate = (!verdicts.is_empty())
            .then(|| verdicts.iter().filter(|&&a| a).count() as f64 / verdicts.len() as f64);
        let errors: Vec<f64> = if config.problem.task == Task::L1Estimate {
            rows.iter()
                .filter_map(|r| r.estimate().map(|e| (e - r.true_tv).abs()))
                .collect()
        } else {
            Vec::new()
        };
        let (mean_abs_error, coverage) = if errors.is_empty() {
            (None, None)
        } else {
            let m = errors.len() as f64;
            let eps = config.problem.eps;
            (
                Some(errors.iter().sum::<f64>() / m),
                Some(errors.iter().filter(|&&e| e <= eps).count() as f64 / m),
            )
        };
        let fold = |f: fn(&TrialRow) -> f64| {
            let vals = rows.iter().map(f);
            (vals.clone().sum::<f64>() / count, vals.fold(0.0, f64::max))
        };
        let (mean_flatness_p, max_flatness_p) = fold(|r| r.flatness_p);
        let (mean_flatness_q, max_flatness_q) = fold(|r| r.flatness_q);
        let mean_samples = rows.iter().map(|r| r.samples_used as f64).sum::<f64>() / count;
        TrialReport {
            config,
            rows,
            acceptance_rate,
            mean_abs_error,
            coverage,
            mean_flatness_p,
            mean_flatness_q,
            max_flatness_p,
            max_flatness_q,
            mean_samples,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "trial",
            "seed",
            "verdict_or_estimate",
            "samples_used",
            "flatness_p",
            "flatness_q",
            "wall_ms",
        ])?;
        for r in &self.rows {
            w.write_record(&[
                r.trial.to_string(),
                r.seed.to_string(),
                r.verdict_or_estimate.clone(),
                r.samples_used.to_string(),
                r.flatness_p.to_string(),
                r.flatness_q.to_string(),
                r.wall_ms.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json` next to each other.
    pub fn write_files(&self, stem: &Path) -> Result<()> {
        let csv_file = std::fs::File::create(stem.with_extension("csv"))?;
        self.write_csv(std::io::BufWriter::new(csv_file))?;
        let json_file = std::fs::File::create(stem.with_extension("json"))?;
        let mut json = std::io::BufWriter::new(json_file);
        self.write_json(&mut json)?;
        json.flush()?;
        Ok(())
    }
}

fn format_result(result: TestResult) -> String {
    match result {
        TestResult::Verdict(v) => v.to_string(),
        TestResult::Estimate(e) => format!("{e}"),
    }
}

/// Runs one trial from its seed.
pub fn run_trial(config: &ExperimentConfig, trial: usize, seed: u64) -> Result<TrialRow> {
    let start = Instant::now();
    let instance = generate_pair(
        config.instance,
        config.n,
        config.pair,
        &mut stream(seed, STREAM_INSTANCE),
    )?;
    let Instance { p, q, tv } = instance;
    let mut p_src = PmfSampler::new(&p, stream(seed, STREAM_P));
    let outcome = match config.problem.q_mode {
        QMode::Explicit => run_tester(
            &config.problem,
            &config.reduction,
            &mut p_src,
            Reference::Known(&q),
        )?,
        QMode::Sampled => {
            let mut q_src = PmfSampler::new(&q, stream(seed, STREAM_Q));
            run_tester(
                &config.problem,
                &config.reduction,
                &mut p_src,
                Reference::Sampled(&mut q_src),
            )?
        }
    };
    let flatness_p = flatness_error(&p, &outcome.partition)?;
    let flatness_q = flatness_error(&q, &outcome.partition)?;
    let wall_ms = if config.record_timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    Ok(TrialRow {
        trial,
        seed,
        verdict_or_estimate: format_result(outcome.result),
        samples_used: outcome.samples_used(),
        flatness_p,
        flatness_q,
        wall_ms,
        true_tv: tv,
        partition_size: outcome.partition.len(),
    })
}

/// Thread count from the config, else from the environment, else rayon's default.
pub fn resolve_threads(requested: Option<usize>) -> Option<usize> {
    requested.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&t| t > 0)
    })
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = resolve_threads(threads) {
        builder = builder.num_threads(t);
    }
    builder
        .build()
        .map_err(|e| Error::param("threads", e.to_string()))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<TrialReport> {
    config.validate()?;
    let rows: Result<Vec<TrialRow>> = pool(config.threads)?.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t, trial_seed(config.seed, t as u64)))
            .collect()
    });
    Ok(TrialReport::from_rows(config.clone(), rows?))
}

/// One point of a sample-count scaling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    /// Partition size for monotone families (exact) or its upper bound (k-modal).
    pub partition_size: usize,
    pub samples: u64,
    /// Budget of the plug-in estimator run directly on `[n]`.
    pub naive_samples: u64,
}

pub fn sweep(problem: &ProblemSpec, cfg: &ReductionConfig, ns: &[usize]) -> Result<Vec<SweepRow>> {
    ns.iter()
        .map(|&n| {
            let partition_size = match problem.family {
                Family::Kmodal(k) => crate::reduction::kmodal_partition_size_bound(
                    n,
                    problem.eps / 2.0,
                    k,
                    &cfg.birge,
                )?,
                _ => monotone_partition(problem, cfg, n)?.len(),
            };
            Ok(SweepRow {
                n,
                partition_size,
                samples: end_to_end_sample_count(problem, cfg, n)?.total(),
                naive_samples: cfg.budget.estimate(n, problem.eps, problem.delta)?,
            })
        })
        .collect()
}

/// Empirical behaviour of a base tester at one domain size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub ell: usize,
    pub samples: u64,
    /// Acceptance rate (identity) or coverage (estimation) on `p = q = uniform`.
    pub completeness: f64,
    /// Rejection rate (identity) or coverage (estimation) on a pair at distance `eps`.
    pub soundness: f64,
}

/// Half of `[ell]` at `(1 + 2 eps)/ell`, the other half at `(1 - 2 eps)/ell`:
/// exactly `eps` from uniform.
pub fn calibration_far(ell: usize, eps: f64) -> Result<Pmf> {
    if ell < 2 || ell % 2 == 1 || eps >= 0.5 {
        return Err(Error::param(
            "ell",
            "calibration needs an even domain and eps < 1/2",
        ));
    }
    let l = ell as f64;
    Pmf::new(
        (0..ell)
            .map(|i| {
                if i % 2 == 0 {
                    (1.0 + 2.0 * eps) / l
                } else {
                    (1.0 - 2.0 * eps) / l
                }
            })
            .collect(),
    )
}

/// Runs the base tester selected by `task`/`q_mode` directly on `[ell]` for
/// each domain size, `trials` times on a close pair and a far pair.
#[allow(clippy::too_many_arguments)]
pub fn calibrate(
    task: Task,
    q_mode: QMode,
    budget: &TesterBudget,
    ells: &[usize],
    eps: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<CalibrationRow>> {
    if trials == 0 {
        return Err(Error::param("trials", "at least one trial is required"));
    }
    ells.iter()
        .map(|&ell| {
            let m = crate::reduction::base_budget(task, q_mode, budget, ell, eps, delta)?;
            let uniform = Pmf::uniform(ell)?;
            let far = calibration_far(ell, eps)?;
            let score = |p: &Pmf, tv: f64, close: bool| -> Result<f64> {
                let hits: Result<Vec<bool>> = (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let s = trial_seed(seed ^ ell as u64, t as u64);
                        let cp = PmfSampler::new(p, stream(s, STREAM_P)).draw_counts(m)?;
                        Ok(match (task, q_mode) {
                            (Task::Identity, QMode::Explicit) => {
                                test_identity_known_counts(&cp, &uniform, eps)?.is_accept() == close
                            }
                            (Task::Identity, QMode::Sampled) => {
                                let cq = PmfSampler::new(&uniform, stream(s, STREAM_Q))
                                    .draw_counts(m)?;
                                test_identity_unknown_counts(&cp, &cq, eps)?.is_accept() == close
                            }
                            (Task::L1Estimate, QMode::Explicit) => {
                                (l1_estimate_known_counts(&cp, &uniform)? - tv).abs() <= eps
                            }
                            (Task::L1Estimate, QMode::Sampled) => {
                                let cq = PmfSampler::new(&uniform, stream(s, STREAM_Q))
                                    .draw_counts(m)?;
                                (l1_estimate_sampled_counts(&cp, &cq)? - tv).abs() <= eps
                            }
                        })
                    })
                    .collect();
                let hits = hits?;
                Ok(hits.iter().filter(|&&h| h).count() as f64 / trials as f64)
            };
            Ok(CalibrationRow {
                ell,
                samples: m,
                completeness: score(&uniform, 0.0, true)?,
                soundness: score(&far, eps, false)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_seeds_are_stable_and_distinct() {
        assert_eq!(trial_seed(7, 3), trial_seed(7, 3));
        assert_ne!(trial_seed(7, 3), trial_seed(7, 4));
        assert_ne!(trial_seed(7, 3), trial_seed(8, 3));
    }

    #[test]
    fn calibration_far_is_at_eps() {
        let p = calibration_far(8, 0.25).unwrap();
        let d = crate::dist::tv_distance(&p, &Pmf::uniform(8).unwrap()).unwrap();
        assert!((d - 0.25).abs() < 1e-12);
        assert!(calibration_far(7, 0.25).is_err());
    }
}
