use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_homflow"))
}

fn config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, body).unwrap();
    p
}

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> i32 {
    bin()
        .arg(sub)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .status()
        .unwrap()
        .code()
        .unwrap()
}

const LOCAL: &str = r#"
version = 1
space = "group"
methods = ["rkmk4"]

[field]
family = "group-nonlinear"

[ladder]
from = 3
to = 9
"#;

#[test]
fn missing_ladder_exits_2_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "version = 1\nmethods = [\"rkmk4\"]\n[field]\nfamily = \"constant\"\n");
    let out = tmp.path().join("out");
    assert_eq!(run("local-order", &cfg, &out, &[]), 2);
    assert!(!out.exists());
}

#[test]
fn malformed_toml_and_bad_version_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    for body in ["version = ", "version = 7\n", "version = 1\nexperiment = \"trees\"\nextra = 1\n"] {
        let cfg = config(tmp.path(), body);
        assert_eq!(run("trees", &cfg, &out, &[]), 2, "{body}");
    }
    assert_eq!(run("trees", &tmp.path().join("absent.toml"), &out, &[]), 2);
    assert!(!out.exists());
}

#[test]
fn subcommand_must_match_experiment_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "version = 1\nexperiment = \"trees\"\n");
    let out = tmp.path().join("out");
    assert_eq!(run("gronwall", &cfg, &out, &[]), 2);
    assert!(!out.exists());
}

#[test]
fn bad_thread_cap_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "version = 1\n");
    let out = tmp.path().join("out");
    let code = bin()
        .env("HOMFLOW_THREADS", "many")
        .args(["trees", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .code();
    assert_eq!(code, Some(2));
    assert!(!out.exists());
}

#[test]
fn order_table_shape_and_report_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), LOCAL);
    let out = tmp.path().join("out");
    assert_eq!(run("local-order", &cfg, &out, &[]), 0);

    let csv = fs::read_to_string(out.join("local-order_rkmk4.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 8);
    assert!(lines[0].starts_with("h,err_metric,err_testfn_max"));
    let hs: Vec<f64> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(hs.windows(2).all(|w| w[0] > w[1]));

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for key in ["experiment", "method", "field", "slopes", "checks", "pass"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["experiment"], "local-order");
    assert_eq!(json["pass"], true);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), LOCAL);
    let mut outputs = Vec::new();
    for threads in ["1", "3", "0"] {
        let out = tmp.path().join(format!("out{threads}"));
        let status = bin()
            .env("HOMFLOW_THREADS", threads)
            .args(["local-order", "--seed", "5", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        let mut files: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        outputs.push(files.iter().map(|f| fs::read(f).unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn format_flag_selects_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "version = 1\nmax_order = 5\n");
    let csv_only = tmp.path().join("csv");
    assert_eq!(run("trees", &cfg, &csv_only, &["--format", "csv"]), 0);
    assert!(csv_only.join("trees.csv").exists() && !csv_only.join("report.json").exists());
    let json_only = tmp.path().join("json");
    assert_eq!(run("trees", &cfg, &json_only, &["--format", "json"]), 0);
    assert!(!json_only.join("trees.csv").exists() && json_only.join("report.json").exists());

    let csv = fs::read_to_string(csv_only.join("trees.csv")).unwrap();
    let counts: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(counts, ["1e0", "1e0", "2e0", "5e0", "1.4e1", "4.2e1"]);
}

#[test]
fn runtime_failure_exits_1() {
    // Steps this large push the one-step error out of the comparison ball.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        "version = 1\nmethods = [\"lie-euler\"]\n[field]\nfamily = \"sphere-nonlinear\"\nepsilon = 40.0\n[ladder]\nvalues = [1.0, 0.9, 0.8, 0.7]\n",
    );
    let out = tmp.path().join("out");
    assert_eq!(run("local-order", &cfg, &out, &[]), 1);
}
