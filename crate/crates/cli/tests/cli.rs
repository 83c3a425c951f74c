use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graphon-dyn"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn worked_example(dir: &Path) {
    write(dir, "f.json", r#"{"n": 3, "edges": [[1, 2], [1, 3]]}"#);
    write(dir, "g.json", r#"{"n": 4, "edges": [[1, 2], [1, 3]]}"#);
}

const STICKY_RUN: &str = r#"{
  "model": {
    "process": {"kind": {"markov": {"P": [[0.9, 0.1], [0.1, 0.9]], "init": [0.5, 0.5]}}},
    "kernel": {"block": [[1, 0], [0, 1]]}
  },
  "sim": {"n_nodes": 6, "T": 50, "seed": 11},
  "analysis": {"patterns": [{"n": 2, "edges": [[1, 2]]}], "n_steps": 100000}
}"#;

fn read_manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn density_worked_example() {
    let tmp = TempDir::new().unwrap();
    worked_example(tmp.path());
    let o = run(&["density", "--pattern", "f.json", "--graph", "g.json"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["count"], 6);
    assert_eq!(v["total"], 64);
    assert_eq!(v["density"], 0.09375);
    assert_eq!(v["exact"], "6/64");
}

#[test]
fn density_on_graphon_writes_csv_and_manifest() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "f.json", r#"{"n": 2, "edges": [[1, 2]]}"#);
    write(tmp.path(), "w.json", r#"{"block_measures": [0.5, 0.5], "values": [[0.8, 0.2], [0.2, 0.8]]}"#);
    let args = ["density", "--pattern", "f.json", "--graphon", "w.json", "--mc", "2000", "--seed", "5", "--out", "out"];
    let o = run(&args, tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "quantity,value,exact,stderr");
    let exact: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(exact[0], "hom_density");
    assert!((exact[1].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
    assert!(lines[2].starts_with("hom_density_mc,"));

    assert_eq!(fs::read_to_string(tmp.path().join("out/density.csv")).unwrap(), text);
    let m = read_manifest(&tmp.path().join("out"));
    assert_eq!(m["subcommand"], "density");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["analysis"]["mc_samples"], 2000);
}

#[test]
fn cut_norm_and_distance() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "u.json", r#"{"block_measures": [0.5, 0.5], "values": [[1, -1], [-1, 1]]}"#);
    let o = run(&["cutnorm", "--kernel", "u.json"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "quantity,value,exact,stderr\ncut_norm,0.25,true,\n");

    write(tmp.path(), "a.json", r#"{"block_measures": [0.5, 0.5], "values": [[0.9, 0.1], [0.1, 0.3]]}"#);
    write(tmp.path(), "b.json", r#"{"block_measures": [0.5, 0.5], "values": [[0.3, 0.1], [0.1, 0.9]]}"#);
    let o = run(&["cutdist", "--graphon", "a.json", "--other", "b.json"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "quantity,value,exact,stderr\ncut_distance,0,false,\n");
    assert!(stderr(&o).contains("relabelings"));

    let o = run(&["cutnorm", "--graphon", "a.json", "--other", "b.json"], tmp.path());
    let value: f64 = stdout(&o).lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 0.15).abs() < 1e-12);
}

#[test]
fn simulate_constant_one_gives_complete_graphs() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "run.json",
        r#"{"model": {"process": {"kind": {"iid": {"marginal": "uniform"}}}, "kernel": {"constant": 1.0}},
            "sim": {"n_nodes": 4, "T": 5, "seed": 1}}"#,
    );
    let o = run(&["simulate", "--config", "run.json", "--out", "traj"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let traj = tmp.path().join("traj");
    let complete: Value = serde_json::from_str(r#"{"n": 4, "edges": [[1,2],[1,3],[1,4],[2,3],[2,4],[3,4]]}"#).unwrap();
    for t in 0..5 {
        let g: Value = serde_json::from_str(&fs::read_to_string(traj.join(format!("step_{t:04}.json"))).unwrap()).unwrap();
        assert_eq!(g, complete);
    }
    let m = read_manifest(&traj);
    assert_eq!(m["seed"], 1);
    assert_eq!(m["kernel_used"], serde_json::json!({"constant": 1.0}));
    assert_eq!(m["outputs"].as_array().unwrap().len(), 5);
    assert!(m["config"]["model"]["process"].is_object());
}

#[test]
fn runs_are_byte_identical_and_replay_from_manifest() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "run.json", STICKY_RUN);
    for out in ["a", "b"] {
        assert!(run(&["simulate", "--config", "run.json", "--out", out], tmp.path()).status.success());
    }
    let one_thread = bin()
        .args(["simulate", "--config", "run.json", "--out", "c"])
        .env("GRAPHON_DYN_THREADS", "1")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(one_thread.status.success());
    assert!(run(&["simulate", "--config", "a/manifest.json", "--out", "d"], tmp.path()).status.success());

    let a = read_manifest(&tmp.path().join("a"));
    for other in ["b", "c", "d"] {
        let m = read_manifest(&tmp.path().join(other));
        assert_eq!(m["outputs"], a["outputs"], "{other}");
        assert_eq!(m["config"], a["config"], "{other}");
    }
    for entry in a["outputs"].as_array().unwrap() {
        let file = entry["file"].as_str().unwrap();
        let bytes = fs::read(tmp.path().join("a").join(file)).unwrap();
        assert_eq!(bytes, fs::read(tmp.path().join("b").join(file)).unwrap());
        let digest = {
            use sha2::Digest;
            hex::encode(sha2::Sha256::digest(&bytes))
        };
        assert_eq!(entry["sha256"], digest);
    }
}

#[test]
fn sample_prints_one_graph() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "run.json", STICKY_RUN);
    let o = run(&["sample", "--config", "run.json"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let g: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(g["n"], 6);
    assert_eq!(stdout(&run(&["sample", "--config", "run.json"], tmp.path())), stdout(&o));
}

#[test]
fn ergodic_last_partial_average_near_target() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "run.json", STICKY_RUN);
    let o = run(&["ergodic", "--config", "run.json"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,partial_average,target"));
    let last: Vec<String> = text.lines().last().unwrap().split(',').map(String::from).collect();
    let n: f64 = last[0].parse().unwrap();
    assert_eq!(n, 100_000.0);
    let (avg, target): (f64, f64) = (last[1].parse().unwrap(), last[2].parse().unwrap());
    assert!((target - 0.5).abs() < 1e-12);
    assert!((avg - target).abs() <= 5.0 / n.sqrt(), "{avg}");
    assert_eq!(text.lines().count(), 100_001);
}

#[test]
fn ergodic_warns_when_not_mixing() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "run.json",
        r#"{"model": {"process": {"kind": {"markov": {"P": [[0, 1], [1, 0]], "init": [0.5, 0.5]}}},
                      "kernel": {"block": [[1, 0], [0, 1]]}},
            "sim": {"seed": 2}, "analysis": {"patterns": [{"n": 2, "edges": [[1, 2]]}], "n_steps": 10}}"#,
    );
    let o = run(&["ergodic", "--config", "run.json", "--out", "e"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("not weakly mixing"));
    assert_eq!(read_manifest(&tmp.path().join("e"))["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn recurrence_rows_per_step() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "run.json", STICKY_RUN);
    let o = run(&["recurrence", "--config", "run.json"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,matched"));
    let rows: Vec<(usize, u8)> = lines
        .map(|l| {
            let (t, m) = l.split_once(',').unwrap();
            (t.parse().unwrap(), m.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().enumerate().all(|(i, &(t, m))| t == i && m <= 1));
}

#[test]
fn invariance_keeps_edge_density() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "w.json",
        r#"{"block_measures": [0.25, 0.25, 0.25, 0.25], "values": [[0.9,0.1,0.3,0.2],[0.1,0.5,0.4,0.6],[0.3,0.4,0.2,0.7],[0.2,0.6,0.7,0.1]]}"#,
    );
    write(tmp.path(), "p.json", "[[5,1,1,1],[1,3,2,1],[2,2,2,2],[1,1,1,4]]");
    let o = run(&["invariance", "--graphon", "w.json", "--transition", "p.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = run(&["invariance", "--graphon", "w.json", "--transition", "p.json", "--sinkhorn", "--steps", "4"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let densities: Vec<f64> =
        text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(densities.len(), 5);
    assert!(densities.iter().all(|d| (d - densities[0]).abs() <= 1e-10));

    write(tmp.path(), "p.json", "[[0.5,0.1,0.1,0.3],[0.1,0.3,0.2,0.4],[0.2,0.2,0.3,0.3],[0.1,0.4,0.3,0.2]]");
    let o = run(&["invariance", "--graphon", "w.json", "--transition", "p.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("doubly stochastic"), "{}", stderr(&o));
}

#[test]
fn schema_violation_names_the_field_and_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "run.json",
        r#"{"model": {"process": {"kind": {"iid": {"marginal": [0.5, 0.5]}}}, "kernel": {"block": [[1, 0], [0, 1]]}},
            "sim": {"n_nodes": 4, "T": 2, "seed": -1}}"#,
    );
    let o = run(&["simulate", "--config", "run.json", "--out", "traj"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim.seed"), "{}", stderr(&o));
    assert!(!tmp.path().join("traj").exists());

    write(tmp.path(), "run.json", r#"{"model": {"process": {"kind": {"iid": {"marginal": [0.5, 0.5]}}}, "kernal": {}}}"#);
    let o = run(&["sample", "--config", "run.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model") && stderr(&o).contains("kernal"), "{}", stderr(&o));

    worked_example(tmp.path());
    write(tmp.path(), "bad.json", r#"{"n": 3, "edges": [[1, 4]]}"#);
    let o = run(&["density", "--pattern", "f.json", "--graph", "bad.json", "--out", "d"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("vertex 4"), "{}", stderr(&o));
    assert!(!tmp.path().join("d").exists());
}

#[test]
fn dimension_mismatch_names_both_sizes() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "run.json",
        r#"{"model": {"process": {"kind": {"iid": {"marginal": [0.2, 0.3, 0.5]}}}, "kernel": {"block": [[1, 0], [0, 1]]}},
            "sim": {"n_nodes": 4, "T": 2, "seed": 1}}"#,
    );
    let o = run(&["simulate", "--config", "run.json", "--out", "traj"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("expected 3") && err.contains("found 2"), "{err}");
    assert!(!tmp.path().join("traj").exists());
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    worked_example(tmp.path());
    write(tmp.path(), "big.json", r#"{"n": 9, "edges": []}"#);
    let o = run(&["density", "--pattern", "big.json", "--graph", "g.json"], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    write(tmp.path(), "run.json", STICKY_RUN);
    let o = run(&["simulate", "--config", "run.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    write(tmp.path(), "blocker", "");
    let o = run(&["simulate", "--config", "run.json", "--out", "blocker"], tmp.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    let o = bin()
        .args(["density", "--pattern", "f.json", "--graph", "g.json"])
        .env("GRAPHON_DYN_THREADS", "many")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["density", "--pattern", "missing.json", "--graph", "g.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}
