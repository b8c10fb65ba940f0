use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fcaug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcaug")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: [&str; 6] = ["--set", "truth.n_cases=3", "--set", "iiml.max_outer_iterations=2", "--set", "iiml.ml_epochs=50"];

fn gen(dir: &Path) {
    let mut args = vec!["gen-truth", "--out", s(dir), "--seed", "11"];
    args.extend(SMALL);
    let o = fcaug(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn full_command_chain() {
    let root = tempfile::tempdir().unwrap();
    let cases = root.path().join("cases");
    gen(&cases);
    let o = fcaug(&["verify-truth", "--cases", s(&cases), "--workers", "2"]);
    assert_eq!(code(&o), 0);

    let train = root.path().join("train");
    let mut args = vec!["train", "--cases", s(&cases), "--out", s(&train), "--training-ids", "1,2", "--workers", "2"];
    args.extend(SMALL);
    let o = fcaug(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["weights.txt", "j_history.csv", "manifest.toml"] {
        assert!(train.join(f).exists(), "{f}");
    }

    let eval = root.path().join("eval");
    let weights = train.join("weights.txt");
    let o = fcaug(&["evaluate", "--cases", s(&cases), "--weights", s(&weights), "--out", s(&eval), "--training-ids", "1,2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = fs::read_to_string(eval.join("metrics.csv")).unwrap();
    let rows = metrics.lines().filter(|l| !l.starts_with('#')).count() - 1;
    let failures = fs::read_to_string(eval.join("failures.csv")).unwrap();
    let failed = failures.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows + failed, 3);
    assert!(eval.join("summary.txt").exists());
}

#[test]
fn simulate_is_deterministic() {
    let root = tempfile::tempdir().unwrap();
    let cases = root.path().join("cases");
    gen(&cases);
    let run = |name: &str, workers: &str| {
        let out = root.path().join(name);
        let o = fcaug(&["simulate", "--cases", s(&cases), "--case-id", "2", "--out", s(&out), "--workers", workers]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a", "1"), run("b", "3"));
    for f in ["case_2_profiles.csv", "case_2_history_baseline.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn tampering_is_detected() {
    let root = tempfile::tempdir().unwrap();
    let cases = root.path().join("cases");
    gen(&cases);
    let profile = cases.join("profiles/case_3.csv");
    let text = fs::read_to_string(&profile).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[5].split(',').map(String::from).collect();
    let v: f64 = fields[1].parse().unwrap();
    fields[1] = format!("{:?}", v + 1e-9);
    lines[5] = fields.join(",");
    fs::write(&profile, lines.join("\n") + "\n").unwrap();
    let o = fcaug(&["verify-truth", "--cases", s(&cases)]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("[3]"));
}

#[test]
fn exit_codes() {
    let root = tempfile::tempdir().unwrap();
    let out = s(root.path());
    let o = fcaug(&["gen-truth", "--out", out, "--set", "iiml.fd_step=-1"]);
    assert_eq!(code(&o), 2);
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("kind = \"config\"") && stderr.contains("exit_code = 2"), "{stderr}");

    let o = fcaug(&["train", "--cases", "/nonexistent/cases", "--out", out, "--training-ids", "1"]);
    assert_eq!(code(&o), 4);

    let cases = root.path().join("cases");
    gen(&cases);
    let o = fcaug(&["simulate", "--cases", s(&cases), "--case-id", "1", "--out", out, "--set", "solver.max_steps=2"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("case_id = 1"));

    let o = fcaug(&["simulate", "--cases", s(&cases), "--case-id", "99", "--out", out]);
    assert_eq!(code(&o), 4);
    let o = fcaug(&["train", "--cases", s(&cases), "--out", out]);
    assert_eq!(code(&o), 2);
}
