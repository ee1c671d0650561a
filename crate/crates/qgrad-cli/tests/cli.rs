//! End-to-end checks of the qgrad binary: reproducibility, replay, formats,
//! and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn qgrad(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgrad"))
        .current_dir(dir)
        .env_remove("QGRAD_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const TASK_CFG: &str = "\
[problem]
family = task
machines = 4
tasks = 2
cap = 3
demand = 2,2

[quantizer]
kind = circular
n = 8

[schedule]
kind = constant
gamma = 0.1

[stopping]
rule = grad_norm
epsilon = 0.1

[run]
max_iter = 5000
seed = 3
output = out/run
";

#[test]
fn identical_config_and_seed_give_byte_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.cfg"), TASK_CFG).unwrap();
    let a = qgrad(dir.path(), &["run", "--config", "exp.cfg", "--output", "a"]);
    let b = qgrad(dir.path(), &["run", "--config", "exp.cfg", "--output", "b"]);
    assert!(a.status.success() && b.status.success());
    let ta = std::fs::read(dir.path().join("a.csv")).unwrap();
    let tb = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);
}

#[test]
fn sidecar_replays_to_the_same_trace() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.cfg"), TASK_CFG).unwrap();
    let a = qgrad(dir.path(), &["run", "--config", "exp.cfg", "--output", "orig"]);
    assert!(a.status.success());
    let b = qgrad(dir.path(), &["run", "--replay", "orig.json", "--output", "replayed"]);
    assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    let ta = std::fs::read(dir.path().join("orig.csv")).unwrap();
    let tb = std::fs::read(dir.path().join("replayed.csv")).unwrap();
    assert_eq!(ta, tb);
}

#[test]
fn env_seed_overrides_config_but_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.cfg"), TASK_CFG).unwrap();
    let base = qgrad(dir.path(), &["run", "--config", "exp.cfg", "--output", "s3"]);
    let env = Command::new(env!("CARGO_BIN_EXE_qgrad"))
        .current_dir(dir.path())
        .env("QGRAD_SEED", "9")
        .args(["run", "--config", "exp.cfg", "--output", "s9"])
        .output()
        .unwrap();
    let flag = Command::new(env!("CARGO_BIN_EXE_qgrad"))
        .current_dir(dir.path())
        .env("QGRAD_SEED", "9")
        .args(["run", "--config", "exp.cfg", "--seed", "3", "--output", "s3flag"])
        .output()
        .unwrap();
    assert!(base.status.success() && env.status.success() && flag.status.success());
    let t3 = std::fs::read(dir.path().join("s3.csv")).unwrap();
    let t9 = std::fs::read(dir.path().join("s9.csv")).unwrap();
    let t3f = std::fs::read(dir.path().join("s3flag.csv")).unwrap();
    assert_ne!(t3, t9);
    assert_eq!(t3, t3f);
}

#[test]
fn single_member_sweep_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.cfg"), TASK_CFG).unwrap();
    // the run stops on the rule; for comparison disable stopping in both
    let no_stop = "--set=stopping.rule=none";
    let a = qgrad(
        dir.path(),
        &["run", "--config", "exp.cfg", no_stop, "--max-iter", "500", "--output", "single"],
    );
    let b = qgrad(
        dir.path(),
        &["sweep", "--config", "exp.cfg", no_stop, "--max-iter", "500", "--gammas", "0.1", "--output", "sw"],
    );
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    let run_trace = std::fs::read(dir.path().join("single.csv")).unwrap();
    let member = std::fs::read(dir.path().join("sw_gamma0.csv")).unwrap();
    assert_eq!(run_trace, member);
    let summary = std::fs::read_to_string(dir.path().join("sw_summary.csv")).unwrap();
    assert!(summary.starts_with("gamma,floor,final_f,bits\n"));
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn trace_csv_has_the_documented_header_and_empty_l_alpha_off_orthant() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.cfg"), TASK_CFG).unwrap();
    let out = qgrad(dir.path(), &["run", "--config", "exp.cfg", "--output", "t"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,f,grad_norm,l_alpha,gamma,bits");
    // task dual is unconstrained: l_alpha column stays empty
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 6);
    assert!(row[3].is_empty());
    assert_eq!(row[5], "0");
}

#[test]
fn cover_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = qgrad(dir.path(), &["cover", "--kind", "minimal", "--dims", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("0.382683"), "{text}");
    assert!(text.contains("proper    = true"));

    let out = qgrad(dir.path(), &["cover", "--kind", "circular", "--n", "8"]);
    let text = stdout(&out);
    assert!(text.contains("theta     = 22.5"), "{text}");

    // e1, e2 from a file: improper
    std::fs::write(dir.path().join("basis2.txt"), "2\n1 0\n0 1\n").unwrap();
    let out = qgrad(dir.path(), &["cover", "--file", "basis2.txt", "--certify"]);
    let text = stdout(&out);
    assert!(text.contains("proper    = false"), "{text}");
    assert!(text.contains("lp_proper = false"), "{text}");
    assert!(text.contains("-0.707106"), "{text}");
}

#[test]
fn bounds_examples_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qgrad(
        dir.path(),
        &["bounds", "type1", "--gap", "2", "--lipschitz", "1", "--cos-theta", "1", "--eps", "0.2"],
    );
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("t_upper      = 100"), "{text}");
    assert!(text.contains("gamma_star   = 0.2"), "{text}");

    let out = qgrad(
        dir.path(),
        &["bounds", "rate", "--iters", "100", "--gap", "2", "--lipschitz", "1", "--cos-theta", "1"],
    );
    assert!(stdout(&out).contains("epsilon_star = 0.2"));

    // inadmissible gamma: exit code 2, message names the interval
    let out = qgrad(
        dir.path(),
        &[
            "bounds", "type1", "--gap", "2", "--lipschitz", "1", "--cos-theta", "1", "--eps",
            "0.2", "--gamma", "0.9",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("(0, 0.4)"), "{err}");

    // json form parses
    let out = qgrad(
        dir.path(),
        &[
            "bounds", "strong", "--lipschitz", "1", "--cos-theta", "1", "--eps", "0.01", "--mu",
            "1", "--gamma", "0.05", "--gap", "2", "--json",
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["t_upper"], 534);
}

#[test]
fn invalid_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "[schedule]\nkind = power\np = 1.5\n").unwrap();
    let out = qgrad(dir.path(), &["run", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("summable"));

    // circular quantizer against a non-planar problem
    std::fs::write(
        dir.path().join("mismatch.cfg"),
        "[problem]\nfamily = quadratic\ndims = 3\n[quantizer]\nkind = circular\nn = 8\n",
    )
    .unwrap();
    let out = qgrad(dir.path(), &["run", "--config", "mismatch.cfg"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tcp_default_uses_per_coordinate_convention() {
    let dir = tempfile::tempdir().unwrap();
    let out = qgrad(
        dir.path(),
        &["run", "--gamma", "0.1", "--seed", "1", "--max-iter", "200", "--output", "tcp"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tcp.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["gamma_scale"], 10.0);
    assert_eq!(sidecar["bits_per_iteration"], 100);
    // unit-step opt-out
    let out = qgrad(
        dir.path(),
        &[
            "run", "--gamma", "0.1", "--seed", "1", "--max-iter", "200",
            "--set", "run.unit_step=true", "--output", "tcp_unit",
        ],
    );
    assert!(out.status.success());
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tcp_unit.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["gamma_scale"], 1.0);
}

#[test]
fn quantizer_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    // an octagon as a custom set behaves like circular(8)
    let mut text = String::from("2\n");
    for k in 0..8 {
        let a = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
        text.push_str(&format!("{:.17} {:.17}\n", a.cos(), a.sin()));
    }
    std::fs::write(dir.path().join("octagon.txt"), text).unwrap();
    let out = qgrad(dir.path(), &["cover", "--file", "octagon.txt"]);
    assert!(out.status.success());
    let printed = stdout(&out);
    assert!(printed.contains("0.923879"), "{printed}");
    assert!(printed.contains("Exact2D"), "{printed}");

    // and a run can quantize through the same file
    std::fs::write(dir.path().join("exp.cfg"), TASK_CFG).unwrap();
    let out = qgrad(
        dir.path(),
        &[
            "run", "--config", "exp.cfg",
            "--set", "quantizer.kind=file",
            "--set", "quantizer.path=octagon.txt",
            "--output", "fileq",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("stopping rule satisfied"));
}

/// The flow-control defaults at γ = 0.1 reach an L1 floor below 0.05 within
/// the 10^4-iteration budget.
#[test]
fn tcp_default_run_floor() {
    let dir = tempfile::tempdir().unwrap();
    let out = qgrad(dir.path(), &["run", "--gamma", "0.1", "--seed", "1", "--output", "tcpfull"]);
    assert!(out.status.success());
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tcpfull.json")).unwrap())
            .unwrap();
    let floor = sidecar["floor"].as_f64().unwrap();
    assert!(floor < 0.05, "floor = {floor}");
}
