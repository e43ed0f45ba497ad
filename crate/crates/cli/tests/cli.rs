use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nested-eg"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn nested-eg")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_spec(dir: &Path) -> std::path::PathBuf {
    let spec = dir.join("sticky.json");
    std::fs::write(
        &spec,
        r#"{"kind":"markov","emissions":[0.25,0.75],"transition":[[0.9,0.1],[0.1,0.9]],"seed":7}"#,
    )
    .unwrap();
    spec
}

#[test]
fn simulate_run_verify_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path());
    let series = dir.path().join("series.csv");
    let out = run(&["simulate", "--spec", s(&spec), "--T", "2000", "--out", s(&series)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(series.with_extension("json").exists());

    let mut logs = Vec::new();
    for loss in ["absolute", "square", "pinball:0.3"] {
        let log = dir.path().join(format!("log-{}", loss.replace(':', "-")));
        let out = run(&["run", "--input", s(&series), "--out", s(&log), "--forecaster", "meta", "--loss", loss]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(summary["steps"], 2000);
        assert_eq!(summary["rng"], "chacha8");
        assert_eq!(summary["seed"], 7);
        for f in ["steps.csv", "summary.json", "timing.json"] {
            assert!(log.join(f).exists(), "{f}");
        }

        let out = run(&["verify-bounds", "--log", s(&log), "--input", s(&series)]);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(out.status.success(), "{stdout}");
        assert!(stdout.lines().all(|l| l.starts_with("PASS ")), "{stdout}");
        assert!(log.join("verify.json").exists());
        logs.push(log);
    }

    let report_dir = dir.path().join("report");
    let mut args = vec!["report", "--out", s(&report_dir), "--logs"];
    args.extend(logs.iter().map(|l| s(l)));
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
    for f in ["summary.csv", "average_loss.csv", "node_count.csv", "weights.csv", "regret_vs_bound.csv", "report.json"] {
        assert!(report_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn logs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path());
    let series = dir.path().join("series.csv");
    assert!(run(&["simulate", "--spec", s(&spec), "--T", "500", "--seed", "11", "--out", s(&series)]).status.success());
    let again = dir.path().join("again.csv");
    assert!(run(&["simulate", "--spec", s(&spec), "--T", "500", "--seed", "11", "--out", s(&again)]).status.success());
    assert_eq!(std::fs::read(&series).unwrap(), std::fs::read(&again).unwrap());

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for log in [&a, &b] {
        assert!(run(&["run", "--input", s(&series), "--out", s(log), "--loss", "square"]).status.success());
    }
    for f in ["steps.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn tree_run_on_covariates() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("cov.csv");
    let mut text = String::from("t,x,y\n");
    for k in 0..1000 {
        let x = (k as f64 * 0.618_033_988_75).fract();
        text.push_str(&format!("{},{},{}\n", k + 1, x, x * x));
    }
    std::fs::write(&input, text).unwrap();
    let log = dir.path().join("tree");
    let out = run(&["run", "--input", s(&input), "--out", s(&log), "--forecaster", "tree", "--loss", "absolute"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(log.join("tree.json").exists());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["nodes"].as_u64().unwrap() <= 81);
    let out = run(&["verify-bounds", "--log", s(&log), "--input", s(&input), "--L", "0.5,2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));

    // The tree forecaster has nothing to split on without covariates.
    let series = dir.path().join("series.csv");
    std::fs::write(&series, "t,y\n1,0.5\n2,0.25\n").unwrap();
    let out = run(&["run", "--input", s(&series), "--out", s(&dir.path().join("x")), "--forecaster", "tree"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.csv");
    std::fs::write(&input, "t,y\n1,0.1\n2,0.2\n3,0.9\n").unwrap();
    let out = run(&["oracle", "--input", s(&input), "--kind", "constant", "--loss", "absolute"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "constant");
    assert!((v["argmin"].as_f64().unwrap() - 0.2).abs() < 1e-9);
    assert!((v["loss"].as_f64().unwrap() - 0.8).abs() < 1e-9);

    let out = run(&["oracle", "--input", s(&input), "--kind", "lipschitz", "--loss", "square", "--L", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "lipschitz");
    assert!(v["loss"].as_f64().unwrap() >= 0.0);
}

#[test]
fn malformed_input_is_diagnosed() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "t,y\n1,0.5\n2,1.5\n").unwrap();
    let out = run(&["run", "--input", s(&bad), "--out", s(&dir.path().join("log"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3"), "{err}");

    std::fs::write(&bad, "t,y\n1,0.5\n2,abc\n").unwrap();
    let out = run(&["oracle", "--input", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["run", "--input", s(&bad), "--out", s(&dir.path().join("log")), "--loss", "pinball:2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_rejects_wrong_input() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "t,y\n1,0.1\n2,0.2\n3,0.3\n").unwrap();
    std::fs::write(&b, "t,y\n1,0.1\n2,0.2\n3,0.4\n").unwrap();
    let log = dir.path().join("log");
    assert!(run(&["run", "--input", s(&a), "--out", s(&log), "--forecaster", "eg"]).status.success());
    let out = run(&["verify-bounds", "--log", s(&log), "--input", s(&b)]);
    assert_eq!(out.status.code(), Some(2));
}
