use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use modal_probe::harness::instances::{generate_instance, generate_pair, InstanceKind, PairKind};
use modal_probe::harness::{run_experiment, sweep, trial_seed, ExperimentConfig, TrialReport};
use modal_probe::{
    modality, tv_distance, Family, Monotonicity, Pmf, ProblemSpec, QMode, ReductionConfig, Task,
};

fn config(problem: ProblemSpec, n: usize, trials: usize, pair: PairKind) -> ExperimentConfig {
    ExperimentConfig {
        problem,
        n,
        trials,
        seed: 7,
        instance: ExperimentConfig::natural_instance(problem.family),
        pair,
        reduction: ReductionConfig::default(),
        record_timing: false,
        threads: None,
    }
}

fn csv_bytes(report: &TrialReport) -> Vec<u8> {
    let mut out = Vec::new();
    report.write_csv(&mut out).unwrap();
    out
}

fn monotone_identity() -> ProblemSpec {
    ProblemSpec::new(
        Family::MonotoneNonIncreasing,
        Task::Identity,
        QMode::Explicit,
        0.5,
        0.1,
    )
    .unwrap()
}

#[test]
fn monotone_completeness_config() {
    let report = run_experiment(&config(monotone_identity(), 10_000, 200, PairKind::Same)).unwrap();
    assert_eq!(report.rows.len(), 200);
    let rate = report.acceptance_rate.unwrap();
    assert!(rate >= 0.9, "acceptance rate {rate}");
    assert!(report.max_flatness_p <= 0.5);
}

#[test]
fn same_config_gives_identical_csv() {
    let problem = ProblemSpec::new(
        Family::Kmodal(2),
        Task::L1Estimate,
        QMode::Sampled,
        0.4,
        0.1,
    )
    .unwrap();
    let cfg = config(problem, 2_000, 12, PairKind::Far { min_tv: 0.3 });
    let first = csv_bytes(&run_experiment(&cfg).unwrap());
    let mut single = cfg.clone();
    single.threads = Some(1);
    let second = csv_bytes(&run_experiment(&single).unwrap());
    assert_eq!(first, second);
}

#[test]
fn csv_layout() {
    let report = run_experiment(&config(monotone_identity(), 500, 3, PairKind::Same)).unwrap();
    let text = String::from_utf8(csv_bytes(&report)).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial,seed,verdict_or_estimate,samples_used,flatness_p,flatness_q,wall_ms"
    );
    for (t, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[0], t.to_string());
        assert_eq!(fields[1], trial_seed(7, t as u64).to_string());
        assert!(fields[2] == "accept" || fields[2] == "reject");
        assert_eq!(fields[6], "0");
    }
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("run");
    let report = run_experiment(&config(monotone_identity(), 300, 4, PairKind::Same)).unwrap();
    report.write_files(&stem).unwrap();
    let json = std::fs::read_to_string(stem.with_extension("json")).unwrap();
    let back: TrialReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    assert_eq!(
        std::fs::read(stem.with_extension("csv")).unwrap(),
        csv_bytes(&report)
    );
}

#[test]
fn generators_meet_postconditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let p = generate_instance(
            InstanceKind::RandomMonotone {
                orientation: Monotonicity::NonIncreasing,
            },
            100,
            &mut rng,
        )
        .unwrap();
        assert_eq!(modality(&p).k, 0);
        assert!(p.is_non_increasing());
        let p = generate_instance(InstanceKind::RandomKmodal { k: 3 }, 1_000, &mut rng).unwrap();
        assert!(modality(&p).k <= 3);
    }
    let u = Pmf::uniform(64).unwrap();
    let mut perturbed = 0;
    for _ in 0..20 {
        let p = generate_instance(InstanceKind::UniformHalfHard, 64, &mut rng).unwrap();
        let tv = tv_distance(&p, &u).unwrap();
        if tv > 0.0 {
            perturbed += 1;
            assert!((tv - 0.25).abs() < 1e-12);
        }
    }
    assert!(perturbed > 0);
}

#[test]
fn far_pairs_report_exact_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for kind in [
        InstanceKind::RandomMonotone {
            orientation: Monotonicity::NonDecreasing,
        },
        InstanceKind::RandomKmodal { k: 2 },
    ] {
        let inst = generate_pair(kind, 800, PairKind::Far { min_tv: 0.3 }, &mut rng).unwrap();
        let tv = tv_distance(&inst.p, &inst.q).unwrap();
        assert_eq!(inst.tv, tv);
        assert!(tv >= 0.3);
    }
}

#[test]
fn sweep_is_sub_linear() {
    let rows = sweep(
        &monotone_identity(),
        &ReductionConfig::default(),
        &[1 << 10, 1 << 14, 1 << 18],
    )
    .unwrap();
    assert_eq!(rows.len(), 3);
    for w in rows.windows(2) {
        assert!(w[0].samples <= w[1].samples);
        assert!((w[1].samples as f64) / (w[0].samples as f64) < (w[1].n as f64) / (w[0].n as f64));
    }
    assert!(rows[2].samples as f64 / rows[0].samples as f64 <= 4.0);
    assert!(rows[2].samples < rows[2].naive_samples);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = config(monotone_identity(), 100, 0, PairKind::Same);
    assert!(run_experiment(&cfg).is_err());
    cfg.trials = 1;
    cfg.threads = Some(0);
    assert!(run_experiment(&cfg).is_err());
}
