use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn seqtrial(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqtrial")).args(args).env_remove("SEQTRIAL_THREADS").output().expect("spawn seqtrial")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_flag(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn samplesize_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqtrial(&["samplesize", "--out", &out_flag(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("n=857")), "{text}");
    assert!(text.lines().any(|l| l == "r*=0.928"), "{text}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("samplesize.json")).unwrap()).unwrap();
    assert_eq!(json["n"], 857);
}

#[test]
fn constancy_table_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqtrial(&["samplesize", "--constancy", "true", "--out", &out_flag(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("constancy.csv")).unwrap();
    assert!(csv.starts_with('#'));
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 300);
}

#[test]
fn zero_horizon_design() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqtrial(&["design-binary", "--horizon", "0", "--out", &out_flag(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("policy.json").exists());
    assert!(dir.path().join("region.csv").exists());
}

#[test]
fn unknown_config_field_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"command\": \"samplesize\",\n  \"alpha\": 0.05,\n  \"alhpa\": 0.01\n}\n").unwrap();
    let o = seqtrial(&["samplesize", "--config", cfg.to_str().unwrap(), "--out", &out_flag(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 4") && err.contains("alhpa"), "{err}");
}

#[test]
fn config_command_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"command": "ecmo", "reps": 10}"#).unwrap();
    let o = seqtrial(&["samplesize", "--config", cfg.to_str().unwrap(), "--out", &out_flag(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ecmo"));
}

#[test]
fn config_without_command_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"delta": 0.2}"#).unwrap();
    let o = seqtrial(&["samplesize", "--config", cfg.to_str().unwrap(), "--out", &out_flag(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"command": "samplesize", "delta": 0.2}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let out = out_flag(dir.path());
    let from_file = seqtrial(&["samplesize", "--config", cfg, "--out", &out]);
    assert!(stdout(&from_file).starts_with("n=215"), "{}", stdout(&from_file));
    let overridden = seqtrial(&["samplesize", "--config", cfg, "--delta", "0.1", "--out", &out]);
    assert!(stdout(&overridden).starts_with("n=857"), "{}", stdout(&overridden));
}

#[test]
fn invalid_parameters_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqtrial(&["samplesize", "--alpha", "1.5", "--out", &out_flag(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = seqtrial(&["design-binary", "--prior1", "0,1", "--out", &out_flag(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = seqtrial(&["samplesize", "--threads", "0", "--out", &out_flag(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ecmo_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqtrial(&["ecmo", "--reps", "200", "--out", &out_flag(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ecmo.json")).unwrap()).unwrap();
    let p = json["posteriors"]["prob_superior"].as_f64().unwrap();
    assert!((p - 90.0 / 91.0).abs() < 1e-9);
    assert_eq!(json["operating_characteristics"].as_array().unwrap().len(), 3);
}

#[test]
fn simulation_is_deterministic_given_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| vec!["simulate".to_string(), "--reps".into(), "100".into(), "--horizon".into(), "20".into(), "--deltas".into(), "0,0.2".into(), "--seed".into(), "7".into(), "--out".into(), out_flag(d)];
    for d in [a.path(), b.path()] {
        let v = args(d);
        let o = seqtrial(&v.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let x = fs::read_to_string(a.path().join("oc.csv")).unwrap();
    let y = fs::read_to_string(b.path().join("oc.csv")).unwrap();
    assert_eq!(x, y);
    assert_eq!(x.lines().filter(|l| !l.starts_with('#')).count(), 1 + 8);
}

#[test]
fn gibbs_on_bundled_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqtrial(&["gibbs", "--burn", "100", "--keep", "300", "--chains", "2", "--out", &out_flag(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["chain_1.csv", "chain_2.csv", "gibbs.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("gibbs.json")).unwrap()).unwrap();
    assert_eq!(json["centres"], 8);
}

#[test]
fn gibbs_missing_data_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqtrial(&["gibbs", "--data", "/nonexistent/centres.csv", "--out", &out_flag(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn normal_design_with_paths() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqtrial(&["design-normal", "--horizon", "30", "--grid-points", "401", "--theta", "0.5,-0.5", "--out", &out_flag(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["boundaries.csv", "path_1.csv", "path_2.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn implied_prior_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqtrial(&["implied-prior", "--draws", "20000", "--bins", "41", "--out", &out_flag(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("implied_prior.csv")).unwrap();
    let mass: f64 = csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-9);
}

#[test]
fn every_subcommand_has_help() {
    let cases: &[(&str, &[&str])] = &[
        ("design-binary", &["--prior1", "--cost", "--horizon", "--gamma", "--calibrated"]),
        ("design-normal", &["--sigma2", "--grid-points", "--theta"]),
        ("simulate", &["--reps", "--deltas", "--pp-statistic"]),
        ("frontier", &["--costs", "--reps"]),
        ("prior-sensitivity", &["--prior", "--reps"]),
        ("pg-validate", &["--ns", "--datasets"]),
        ("ecmo", &["--reps"]),
        ("samplesize", &["--alpha", "--beta", "--pi0", "--constancy"]),
        ("gibbs", &["--data", "--iw-df", "--burn", "--chains"]),
        ("implied-prior", &["--draws", "--bins"]),
    ];
    for (cmd, flags) in cases {
        let o = seqtrial(&[cmd, "--help"]);
        assert!(o.status.success(), "{cmd}");
        let text = stdout(&o);
        for f in flags.iter().chain(&["--config", "--out", "--seed", "--threads"]) {
            assert!(text.contains(f), "{cmd} --help lacks {f}");
        }
    }
}
