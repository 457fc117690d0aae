use std::process::{Command, Output};

fn modal_probe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modal-probe"))
        .args(args)
        .env("MODAL_PROBE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn test_command_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = modal_probe(&[
            "test",
            "--family",
            "monotone-inc",
            "--n",
            "3000",
            "--trials",
            "8",
            "--seed",
            "5",
            "--no-timing",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with(
        "trial,seed,verdict_or_estimate,samples_used,flatness_p,flatness_q,wall_ms\n"
    ));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn estimate_command_emits_json_report() {
    let out = modal_probe(&[
        "estimate",
        "--family",
        "kmodal",
        "--k",
        "2",
        "--variant",
        "unknown",
        "--n",
        "1500",
        "--eps",
        "0.4",
        "--trials",
        "3",
        "--pair",
        "far",
        "--min-tv",
        "0.3",
        "--format",
        "json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
    assert!(doc["coverage"].as_f64().is_some());
}

#[test]
fn config_file_round_trips_through_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let first = modal_probe(&[
        "test",
        "--n",
        "800",
        "--trials",
        "4",
        "--no-timing",
        "--format",
        "json",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(first.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, doc["config"].to_string()).unwrap();
    let again = modal_probe(&[
        "test",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(again.status.success());
    let redo: serde_json::Value = serde_json::from_str(&stdout(&again)).unwrap();
    assert_eq!(doc["rows"], redo["rows"]);
}

#[test]
fn decompose_reads_input_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("p.json");
    std::fs::write(
        &input,
        r#"{"n": 10, "mass": [0.3, 0.2, 0.1, 0.1, 0.1, 0.05, 0.05, 0.04, 0.03, 0.03]}"#,
    )
    .unwrap();
    let out = modal_probe(&[
        "decompose",
        "--input",
        input.to_str().unwrap(),
        "--eps",
        "0.5",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lo,hi,mass"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.first().unwrap()[0], 1.0);
    assert_eq!(rows.last().unwrap()[1], 10.0);
    let total: f64 = rows.iter().map(|r| r[2]).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn decompose_kmodal_json() {
    let out = modal_probe(&[
        "decompose",
        "--family",
        "kmodal",
        "--k",
        "2",
        "--n",
        "500",
        "--eps",
        "0.5",
        "--exact",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["n"], 500);
    assert!(doc["flatness_error"].as_f64().unwrap() <= 0.5);
    assert_eq!(doc["details"]["samples_drawn"], 0);
}

#[test]
fn lift_matches_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("p.json");
    std::fs::write(&input, r#"{"n": 2, "mass": [0.5, 0.5]}"#).unwrap();
    let out = modal_probe(&[
        "lift",
        "--input",
        input.to_str().unwrap(),
        "--eps",
        "0.5",
        "--k",
        "1",
        "--p-min",
        "0.5",
        "--p-max",
        "0.5",
    ]);
    assert!(out.status.success());
    // c = 1, m = 2, a = (1, 2): masses 0.5, 0.25, 0.25
    assert_eq!(stdout(&out), "index,mass\n1,0.5\n2,0.25\n3,0.25\n");
}

#[test]
fn simulate_emits_integers_in_range() {
    let out = modal_probe(&["simulate", "--n", "50", "--m", "200", "--seed", "9"]);
    assert!(out.status.success());
    let xs: Vec<usize> = stdout(&out).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(xs.len(), 200);
    assert!(xs.iter().all(|&x| (1..=50).contains(&x)));
    assert_eq!(
        stdout(&modal_probe(&[
            "simulate", "--n", "50", "--m", "200", "--seed", "9"
        ])),
        stdout(&out)
    );
}

#[test]
fn simulate_through_lift() {
    let out = modal_probe(&[
        "simulate", "--n", "3", "--m", "100", "--lift", "--lift-k", "2",
    ]);
    assert!(out.status.success());
    let lifted = modal_probe(&["lift", "--n", "3", "--k", "2", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&lifted)).unwrap();
    let support = doc["transform"]["support"].as_u64().unwrap();
    assert!(stdout(&out)
        .lines()
        .all(|l| (1..=support).contains(&l.parse::<u64>().unwrap())));
}

#[test]
fn sweep_reports_sub_linear_counts() {
    let out = modal_probe(&["sweep", "--ns", "1024,16384,262144", "--eps", "0.5"]);
    assert!(out.status.success());
    let rows: Vec<Vec<u64>> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2][2] < 4 * rows[0][2]);
}

#[test]
fn calibrate_prints_rates() {
    let out = modal_probe(&[
        "calibrate",
        "--ells",
        "16",
        "--trials",
        "40",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let row = &doc["rows"][0];
    assert_eq!(row["ell"], 16);
    assert!(row["completeness"].as_f64().unwrap() >= 0.0);
}

#[test]
fn invalid_config_exits_with_two() {
    assert_eq!(
        modal_probe(&["test", "--eps", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        modal_probe(&["test", "--trials", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        modal_probe(&["test", "--family", "square"]).status.code(),
        Some(2)
    );
    assert_eq!(
        modal_probe(&["lift", "--n", "2", "--p-min", "0.9", "--p-max", "0.1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn io_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope").join("out.csv");
    assert_eq!(
        modal_probe(&[
            "test",
            "--trials",
            "1",
            "--n",
            "100",
            "--out",
            missing.to_str().unwrap()
        ])
        .status
        .code(),
        Some(3)
    );
    let absent = dir.path().join("absent.json");
    assert_eq!(
        modal_probe(&["decompose", "--input", absent.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}
