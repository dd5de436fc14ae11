use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use zosadom_core::config::RunConfig;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_zosadom"));
    c.env_remove("ZO_SADOM_THREADS");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const QUADRATIC: &str = r#"{
    "problem": {"kind": "quadratic", "d": 3, "mu": 1.0, "l": 4.0},
    "nodes": 5, "graph": {"kind": "ring"}, "algorithm": "sadom",
    "stop": {"max_iters": 200}, "monitor_period": 20, "seed": 4
}"#;

const NONSMOOTH: &str = r#"{
    "problem": {"kind": "nonsmooth_abs", "d": 4, "samples_per_node": 10, "mu": 0.1},
    "nodes": 6, "graph": {"kind": "geometric", "radius": 0.6}, "algorithm": "zo-sadom",
    "oracle": {"scheme": "tpf", "gamma": 0.01, "batch": 40, "seed": 2},
    "stop": {"max_iters": 100, "epsilon": 1e-2}, "monitor_period": 10, "seed": 2
}"#;

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_gossip_on_complete_graph_succeeds() {
    let o = bin().args(["verify-gossip"]).arg(configs().join("complete_graph.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("0 violation(s)"));
}

#[test]
fn zero_iteration_run_prints_initial_row_and_exits_2() {
    let o = bin()
        .args(["run", "--override", "stop.max_iters=0", "--output", "-"])
        .arg(configs().join("complete_graph.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "iter,comm,oracle,seconds,dist_sq,gap,criterion,consensus,psi_x,psi_yz");
    assert!(lines[1].starts_with("0,0,0,"));
    assert!(text.contains("# chi="));
}

#[test]
fn unknown_key_is_a_single_line_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", &QUADRATIC.replace("\"seed\": 4", "\"seed\": 4, \"gamma_\": 1"));
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error:"), "{err}");
    assert!(err.contains("gamma_"));
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn missing_file_and_bad_thread_count_fail_cleanly() {
    let o = bin().args(["budget", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
    let o = bin()
        .env("ZO_SADOM_THREADS", "many")
        .arg("graph-info")
        .arg(configs().join("complete_graph.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ns.json", NONSMOOTH);
    let mut outputs = Vec::new();
    for threads in ["1", "4", "0"] {
        let out = dir.path().join(format!("run{threads}.csv"));
        let o = bin().env("ZO_SADOM_THREADS", threads).arg("run").arg(&cfg).arg("--output").arg(&out).output().unwrap();
        assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", stderr(&o));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn cached_reference_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.json", QUADRATIC);
    let o = bin().arg("reference").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cache = dir.path().join("q.reference.json");
    assert!(cache.exists());
    let a = bin().arg("run").arg(&cfg).args(["--output", "-"]).output().unwrap();
    let b = bin().arg("run").arg(&cfg).args(["--output", "-"]).arg("--reference").arg(&cache).output().unwrap();
    assert_eq!(stdout(&a), stdout(&b));
    assert!(!stdout(&a).is_empty());
}

#[test]
fn override_changes_output_length() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.json", QUADRATIC);
    let rows = |extra: &[&str]| {
        let o = bin().arg("run").arg(&cfg).args(["--output", "-"]).args(extra).output().unwrap();
        stdout(&o).lines().filter(|l| !l.starts_with('#')).count()
    };
    // header + rows at 0, 20, ..., 200
    assert_eq!(rows(&[]), 12);
    assert_eq!(rows(&["--override", "monitor_period=100"]), 4);
}

#[test]
fn budget_reports_consistent_counts() {
    let o = bin().arg("budget").arg(configs().join("nonsmooth_tpf.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let n = v["n_iterations"].as_u64().unwrap();
    assert!(n > 0);
    assert_eq!(v["n_comm"].as_u64().unwrap(), n);
    assert_eq!(v["n_oracle"].as_u64().unwrap(), n * 2 * 10);
    assert_eq!(v["scheme"], "tpf");
}

#[test]
fn budget_requires_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ns.json", &NONSMOOTH.replace(", \"epsilon\": 1e-2", ""));
    let o = bin().arg("budget").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("stop.epsilon"));
}

#[test]
fn verify_oracle_writes_bound_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "q.json",
        &QUADRATIC.replace("\"algorithm\": \"sadom\"", "\"algorithm\": \"zo-sadom\", \"oracle\": {\"scheme\": \"tpf\", \"gamma\": 0.1}"),
    );
    let out = dir.path().join("oracle.csv");
    let o = bin().arg("verify-oracle").arg(&cfg).args(["--samples", "2000", "--output"]).arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scheme,d,gamma,delta_tilde,second_moment,bound,bias,bias_bound");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("tpf,3,"));
}

#[test]
fn graph_info_lists_rounds() {
    let o = bin().arg("graph-info").arg(configs().join("complete_graph.json")).args(["--rounds", "5"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
    assert!(text.contains("chi_max=1.000000"));
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            RunConfig::load(&path, &[]).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
    let paper = RunConfig::load(configs().join("covtype_paper.json"), &[]).unwrap();
    assert_eq!((paper.nodes, paper.oracle.batch), (100, 55));
    assert_eq!(paper.oracle.gamma, 1e-4);
}
