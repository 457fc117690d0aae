//! Sample-efficient identity testing and distance estimation for monotone
//! and k-modal distributions over `[n] = {1, ..., n}`.
//!
//! All public indices, intervals and samples are 1-based.

pub mod decomposition;
pub mod dist;
pub mod error;
pub mod harness;
pub mod kmodal;
pub mod lowerbound;
pub mod reduction;
pub mod sampler;
pub mod testers;

pub use decomposition::{
    birge_partition, common_refinement, flatness_error, flatten, reduce, BirgeConfig,
    IntervalPartition, Monotonicity,
};
pub use dist::{kolmogorov_distance, modality, tv_distance, Interval, MassProfile, Pmf};
pub use error::{Error, Result};
pub use kmodal::{construct_flat_decomposition, EmpiricalPmf, OrientationVerdict};
pub use lowerbound::{LbTransform, LiftedSampler};
pub use reduction::{
    end_to_end_sample_count, run_tester, test_kmodal, test_monotone, Family, ProblemSpec, QMode,
    ReductionConfig, Reference, Task, TestOutcome, TestResult,
};
pub use sampler::{PmfSampler, ReplaySource, SampleSource};
pub use testers::{TesterBudget, TesterVerdict};
