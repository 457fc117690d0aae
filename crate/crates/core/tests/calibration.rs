//! Freezes the default budget constants: each base tester, run directly on
//! `[l]` with the default budget, must meet its `1 - delta` contract on the
//! uniform distribution and on a pair at distance exactly `eps`.

use modal_probe::harness::calibrate;
use modal_probe::reduction::{QMode, Task};
use modal_probe::testers::TesterBudget;

const DELTA: f64 = 0.1;
const TRIALS: usize = 200;

fn check(task: Task, q_mode: QMode, ells: &[usize], eps_grid: &[f64]) {
    let budget = TesterBudget::default();
    for &eps in eps_grid {
        let rows = calibrate(task, q_mode, &budget, ells, eps, DELTA, TRIALS, 17).unwrap();
        for r in rows {
            assert!(
                r.completeness >= 1.0 - DELTA && r.soundness >= 1.0 - DELTA,
                "{task:?}/{q_mode:?} eps={eps} l={}: completeness {} soundness {}",
                r.ell,
                r.completeness,
                r.soundness
            );
        }
    }
}

const SMALL: [usize; 6] = [8, 16, 32, 64, 128, 256];

#[test]
fn identity_known_defaults() {
    check(Task::Identity, QMode::Explicit, &SMALL, &[0.1, 0.25, 0.4]);
}

#[test]
fn identity_unknown_defaults() {
    check(Task::Identity, QMode::Sampled, &SMALL, &[0.1, 0.25, 0.4]);
}

#[test]
fn estimate_defaults_hold_on_large_domains() {
    // plug-in bias grows with l, so the estimator is checked further out
    let ells = [8, 64, 256, 1024, 4096];
    check(Task::L1Estimate, QMode::Explicit, &ells, &[0.1, 0.25]);
    check(Task::L1Estimate, QMode::Sampled, &ells, &[0.1, 0.25]);
}
