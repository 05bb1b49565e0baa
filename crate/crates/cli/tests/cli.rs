//! End-to-end tests of the `psnet` binary: exit codes, report formats, and
//! determinism of the output bytes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workspace_configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn psnet(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut command = Command::new(env!("CARGO_BIN_EXE_psnet"));
    command.args(args);
    for (key, value) in envs {
        command.env(key, value);
    }
    command.output().expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> TempDir {
        let path = std::env::temp_dir()
            .join(format!("psnet-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&path).expect("temp dir");
        TempDir(path)
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.0.join(name);
        std::fs::write(&path, contents).expect("write temp file");
        path
    }

    fn path(&self) -> &Path {
        &self.0
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

#[test]
fn solve_prints_a_deterministic_table() {
    let config = workspace_configs().join("tandem-whittle.toml");
    let args =
        ["solve", "--config", config.to_str().unwrap(), "--truncation", "20,20"];
    let first = psnet(&args, &[]);
    assert!(first.status.success(), "stderr: {}", String::from_utf8_lossy(&first.stderr));
    let text = stdout_of(&first);
    assert!(text.starts_with("# occupancy-table v1"), "got: {text}");
    assert!(text.contains("# classes: 2"));

    let second = psnet(&args, &[]);
    assert_eq!(first.stdout, second.stdout, "table differs between runs");
}

#[test]
fn verify_balance_passes_on_a_sound_network() {
    let config = workspace_configs().join("tandem-whittle.toml");
    let output = psnet(
        &["verify-balance", "--config", config.to_str().unwrap(), "--truncation", "25,25"],
        &[],
    );
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    assert!(stdout_of(&output).contains("PASS"));
}

#[test]
fn verify_balance_accepts_a_solved_table_from_a_file() {
    let dir = TempDir::new("pi-roundtrip");
    let config = workspace_configs().join("tandem-whittle.toml");
    let table = dir.path().join("pi.txt");
    let solve = psnet(
        &[
            "solve",
            "--config",
            config.to_str().unwrap(),
            "--truncation",
            "25,25",
            "--out",
            table.to_str().unwrap(),
        ],
        &[],
    );
    assert!(solve.status.success());

    let verify = psnet(
        &[
            "verify-balance",
            "--config",
            config.to_str().unwrap(),
            "--pi",
            table.to_str().unwrap(),
        ],
        &[],
    );
    assert!(verify.status.success(), "stderr: {}", String::from_utf8_lossy(&verify.stderr));
    assert!(stdout_of(&verify).contains("PASS"));
}

#[test]
fn solver_commands_accept_experiment_files() {
    let config = workspace_configs().join("erlang-loss.toml");
    let solve = psnet(
        &["solve", "--config", config.to_str().unwrap(), "--truncation", "3"],
        &[],
    );
    assert!(solve.status.success(), "stderr: {}", String::from_utf8_lossy(&solve.stderr));
    let text = stdout_of(&solve);
    assert!(text.contains("# classes: 1"), "got: {text}");
    // The embedded network blocks at 3, so the support is exact.
    assert!(text.contains("# boundary-mass: 0e0"), "got: {text}");

    let verify = psnet(
        &["verify-balance", "--config", config.to_str().unwrap(), "--truncation", "3"],
        &[],
    );
    assert!(verify.status.success(), "stderr: {}", String::from_utf8_lossy(&verify.stderr));
    assert!(stdout_of(&verify).contains("PASS"));
}

/// A four-state cycle whose stationary law satisfies global balance but not
/// partial balance: flow through each state circulates instead of balancing
/// per source. The outer shell of states (any count of 2) is unreachable
/// from the cycle; it exists so every lookup the verifier makes stays inside
/// the tabulated domain, and it drains to the exterior so validation finds
/// no starved class anywhere.
const CYCLE_NETWORK: &str = r#"
classes = 2
discipline = "processor-sharing"

[rates]
kind = "tabulated"
entries = [
    { state = [0, 0], rates = [0.0, 2.0, 1.0,  0.0, 0.0, 0.0,  0.0, 0.0, 0.0] },
    { state = [1, 0], rates = [0.0, 0.0, 1.0,  1.0, 0.0, 0.0,  0.0, 0.0, 0.0] },
    { state = [0, 1], rates = [0.0, 1.0, 0.0,  0.0, 0.0, 0.0,  1.0, 0.0, 0.0] },
    { state = [1, 1], rates = [0.0, 0.0, 0.0,  1.0, 0.0, 0.0,  3.0, 0.0, 0.0] },
    { state = [2, 0], rates = [0.0, 0.0, 0.0,  1.0, 0.0, 0.0,  0.0, 0.0, 0.0] },
    { state = [0, 2], rates = [0.0, 0.0, 0.0,  0.0, 0.0, 0.0,  1.0, 0.0, 0.0] },
    { state = [2, 1], rates = [0.0, 0.0, 0.0,  1.0, 0.0, 0.0,  1.0, 0.0, 0.0] },
    { state = [1, 2], rates = [0.0, 0.0, 0.0,  1.0, 0.0, 0.0,  1.0, 0.0, 0.0] },
    { state = [2, 2], rates = [0.0, 0.0, 0.0,  1.0, 0.0, 0.0,  1.0, 0.0, 0.0] },
]

[[workloads]]
family = "exponential"
rate = 1.0

[[workloads]]
family = "exponential"
rate = 1.0
"#;

#[test]
fn failed_verdicts_exit_with_one() {
    let dir = TempDir::new("cycle");
    let config = dir.file("cycle.toml", CYCLE_NETWORK);
    let output = psnet(
        &["verify-balance", "--config", config.to_str().unwrap(), "--truncation", "1,1"],
        &[],
    );
    assert_eq!(output.status.code(), Some(1), "stdout: {}", stdout_of(&output));
    assert!(stdout_of(&output).contains("FAIL"));
}

#[test]
fn unusable_input_exits_with_two() {
    let missing = psnet(
        &["solve", "--config", "/nonexistent.toml", "--truncation", "5"],
        &[],
    );
    assert_eq!(missing.status.code(), Some(2));

    let dir = TempDir::new("bad-toml");
    let config = dir.file("bad.toml", "classes = ");
    let malformed = psnet(
        &["solve", "--config", config.to_str().unwrap(), "--truncation", "5"],
        &[],
    );
    assert_eq!(malformed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("line 1"));

    let no_truncation =
        psnet(&["solve", "--config", config.to_str().unwrap()], &[]);
    assert_eq!(no_truncation.status.code(), Some(2));
}

#[test]
fn simulate_summarizes_a_run() {
    let config = workspace_configs().join("single-server.toml");
    let output = psnet(
        &[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--truncation",
            "200",
            "--events",
            "50000",
            "--seed",
            "7",
        ],
        &[],
    );
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let text = stdout_of(&output);
    assert!(text.contains("simulation summary"));
    assert!(text.contains("events: 50000 (warmup 0)"));
}

const SMALL_EXPERIMENT: &str = r#"
name = "single-server-small"
truncation = [200]
seed = 11
events = 60000
tv-max = 0.05

[network]
classes = 1
discipline = "processor-sharing"

[network.rates]
kind = "single-class"
arrivals = { constant = 0.5, capacity = 200 }
services = { constant = 1.0, capacity = 200 }

[[network.workloads]]
family = "exponential"
rate = 1.0

[[arms]]
name = "exponential"
workloads = [{ family = "exponential", rate = 1.0 }]

[[arms]]
name = "uniform"
workloads = [{ family = "uniform", lo = 0.0, hi = 2.0 }]
"#;

#[test]
fn experiment_writes_reports_under_the_report_dir() {
    let dir = TempDir::new("experiment");
    let config = dir.file("experiment.toml", SMALL_EXPERIMENT);
    let output = psnet(
        &[
            "experiment",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "experiment.txt",
            "--json",
            "experiment.json",
        ],
        &[("PSNET_REPORT_DIR", dir.path().to_str().unwrap())],
    );
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let text = std::fs::read_to_string(dir.path().join("experiment.txt")).unwrap();
    assert!(text.contains("experiment: single-server-small"));
    assert!(text.contains("overall: PASS"), "text:\n{text}");

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("experiment.json")).unwrap())
            .unwrap();
    assert_eq!(json["pass"], serde_json::Value::Bool(true));
    assert_eq!(json["arms"].as_array().unwrap().len(), 2);
}

#[test]
fn control_detects_fifo_sensitivity() {
    let output = psnet(
        &["control", "--load", "0.8", "--events", "150000", "--seed", "42"],
        &[],
    );
    assert!(output.status.success(), "stdout: {}", stdout_of(&output));
    assert!(stdout_of(&output).contains("sensitivity detected"));
}
