// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tvwin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvwin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().to_owned())
        .collect()
}

fn floats(v: &[String]) -> Vec<f64> {
    v.iter().map(|s| s.parse().unwrap()).collect()
}

#[test]
fn denoise_three_point_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", "t,y\n0,0\n1,2\n2,1\n");
    let out = tvwin(&["denoise", &input, "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,y,u_star,segment_id");
    let u = floats(&column(&text, "u_star"));
    for (a, b) in u.iter().zip([0.5, 1.25, 1.25]) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(column(&text, "segment_id"), vec!["0", "1", "1"]);
}

#[test]
fn denoise_zero_and_large_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", "t,y\n0,0.1\n0.5,3\n2,-1\n3,2.5\n");
    let out = tvwin(&["denoise", &input, "--lambda", "0"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(column(&text, "u_star"), column(&text, "y"));

    let out = tvwin(&["denoise", &input, "--lambda", "1e6"]);
    let text = String::from_utf8(out.stdout).unwrap();
    // periods 0.5, 0.5, 1.5, 1
    let mean = (0.5 * 0.1 + 0.5 * 3.0 + -1.5 + 1.0 * 2.5) / 3.5;
    for u in floats(&column(&text, "u_star")) {
        assert!((u - mean).abs() < 1e-9);
    }
}

#[test]
fn denoise_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let y: Vec<String> = (0..50)
        .map(|i| format!("{},{}", i as f64 * 0.37, ((i * 7919) % 101) as f64 / 13.0))
        .collect();
    let input = write(dir.path(), "in.csv", &format!("t,y\n{}\n", y.join("\n")));
    let first = dir.path().join("a.csv");
    let out = tvwin(&[
        "denoise",
        &input,
        "--auto",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("selected lambda"));
    let a = fs::read_to_string(&first).unwrap();
    // the output has t and y columns, so it is valid input again
    let out = tvwin(&["denoise", first.to_str().unwrap(), "--lambda", "0"]);
    let b = String::from_utf8(out.stdout).unwrap();
    assert_eq!(column(&b, "u_star"), column(&a, "y"));
    assert_eq!(column(&b, "y"), column(&a, "y"));
}

#[test]
fn denoise_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "t,y\n0,1\n1,x\n");
    let out = tvwin(&["denoise", &bad, "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 3"));

    let back = write(dir.path(), "back.csv", "t,y\n0,1\n2,1\n1,1\n");
    let out = tvwin(&["denoise", &back, "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(1));

    let out = tvwin(&["denoise", &back]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn monitor_constant_input_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<String> = (0..40).map(|i| format!("{i},2.5")).collect();
    let input = write(dir.path(), "c.csv", &format!("t,y\n{}\n", rows.join("\n")));
    let out = tvwin(&["monitor", &input, "--window", "10", "--baseline", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "start_index,sigma_star,lambda_used,mad_sigma,shift_alert"
    );
    assert_eq!(text.lines().count(), 32);
    assert!(floats(&column(&text, "sigma_star"))
        .iter()
        .all(|&s| s == 0.0));
    assert!(column(&text, "shift_alert").iter().all(|a| a == "false"));

    let out = tvwin(&["monitor", &input, "--window", "50", "--baseline", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn monitor_flags_model_two_ramp() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = tvwin(&[
        "trace",
        "--model",
        "2",
        "--seed",
        "3",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = tvwin(&[
        "monitor",
        trace.to_str().unwrap(),
        "--window",
        "200",
        "--warmup",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    let starts = column(&text, "start_index");
    let alerts = column(&text, "shift_alert");
    let first = alerts.iter().position(|a| a == "true").unwrap();
    let start: usize = starts[first].parse().unwrap();
    // the window ending at sample start + 199 must reach past t = 1000
    assert!(start + 199 > 1000, "first alert at window {start}");
}

#[test]
fn warmup_matches_equivalent_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    tvwin(&[
        "trace",
        "--model",
        "1",
        "--seed",
        "9",
        "--n",
        "600",
        "--out",
        trace.to_str().unwrap(),
    ]);
    let tr = trace.to_str().unwrap();
    let warm = tvwin(&["monitor", tr, "--window", "100", "--warmup", "20"]);
    let stderr = String::from_utf8(warm.stderr).unwrap();
    let baseline = stderr
        .lines()
        .find_map(|l| l.strip_prefix("baseline sigma: "))
        .unwrap()
        .to_owned();
    let fixed = tvwin(&["monitor", tr, "--window", "100", "--baseline", &baseline]);
    let a = String::from_utf8(warm.stdout).unwrap();
    let b = String::from_utf8(fixed.stdout).unwrap();
    assert_eq!(column(&a, "sigma_star"), column(&b, "sigma_star"));
    // alerts can differ only inside the warm-up windows
    assert_eq!(
        column(&a, "shift_alert")[20..],
        column(&b, "shift_alert")[20..]
    );
}

#[test]
fn simulate_is_reproducible_and_validates_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"n": 400, "windows": [80], "repetitions": 2, "steps": [[0, 0], [200, 5]]}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = tvwin(&[
            "simulate",
            "--config",
            &cfg,
            "--seed",
            "5",
            "--out-dir",
            d.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for f in ["rows.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let rows = fs::read_to_string(a.join("rows.csv")).unwrap();
    assert_eq!(column(&rows, "seed"), vec!["5", "6"]);

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"repetitions": 0, "q": 0, "colour": 1}"#,
    );
    let out = tvwin(&[
        "simulate",
        "--config",
        &bad,
        "--out-dir",
        a.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("colour"));
    let bad = write(dir.path(), "bad2.json", r#"{"repetitions": 0, "q": 0}"#);
    let out = tvwin(&[
        "simulate",
        "--config",
        &bad,
        "--out-dir",
        a.to_str().unwrap(),
    ]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("repetitions") && err.contains("q:"), "{err}");
}

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "b.json",
        r#"{"n": 300, "windows": [20, 40], "steps": [[0, 0], [150, 4]]}"#,
    );
    let out_dir = dir.path().join("out");
    let out = tvwin(&[
        "bench",
        "--config",
        &cfg,
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(out_dir.join("bench.csv")).unwrap();
    assert_eq!(column(&csv, "window"), vec!["20", "40"]);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("bench.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
}
