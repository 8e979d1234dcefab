// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lakeprune"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap_or(Value::Null)
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run_in(dir, args).status.code().unwrap()
}

fn small_lake(dir: &Path) {
    std::fs::write(dir.join("spec.toml"), "tables_target = 25\nroot_rows = 200\npartition_rows = 50\n").unwrap();
    ok(dir, &["synth", "--lake", "lake", "--spec", "spec.toml", "--seed", "5", "--lineage", "lineage.jsonl"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["--help"]), 0);
    assert_eq!(code(d, &["frobnicate"]), 1);
    assert_eq!(code(d, &["pipeline", "--lake", "x"]), 1);
    assert_eq!(code(d, &["evaluate", "--graph", "none.json", "--truth", "none.jsonl"]), 1);
    small_lake(d);
    assert_eq!(code(d, &["pipeline", "--lake", "lake", "--out", "g.json", "--clp-t", "0"]), 1);
    assert_eq!(code(d, &["--threads", "0", "pipeline", "--lake", "lake", "--out", "g.json"]), 1);
    std::fs::write(d.join("bad.json"), "{ not json").unwrap();
    assert_eq!(code(d, &["evaluate", "--graph", "bad.json", "--truth", "lineage.jsonl"]), 1);
    std::fs::write(d.join("bad.toml"), "tables_target = 'many'").unwrap();
    assert_eq!(code(d, &["synth", "--lake", "lake2", "--spec", "bad.toml"]), 1);
}

#[test]
fn schema_stage_then_evaluate_detects_everything() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_lake(d);
    let printed = ok(d, &["pipeline", "--lake", "lake", "--out", "sgb.json", "--stop-after", "sgb"]);
    assert!(printed["edges"]["sgb"].as_u64().unwrap() > 0);
    assert!(printed["edges"]["mmp"].is_null());
    ok(d, &["truth", "--lake", "lake", "--out", "truth.jsonl"]);
    let eval = ok(d, &["evaluate", "--graph", "sgb.json", "--truth", "truth.jsonl"]);
    assert_eq!(eval["SGB"]["not_detected"], 0);
}

#[test]
fn full_pipeline_writes_stage_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_lake(d);
    let printed = ok(d, &["pipeline", "--lake", "lake", "--out", "g.json"]);
    for f in ["g.json", "g.sgb.json", "g.mmp.json", "run.json"] {
        assert!(d.join(f).exists(), "{f}");
    }
    assert!(printed["counters"]["rows_scanned"].as_u64().is_some());
    ok(d, &["truth", "--lake", "lake", "--out", "truth.jsonl"]);
    let eval = ok(
        d,
        &["evaluate", "--graph", "g.sgb.json", "--graph", "g.mmp.json", "--graph", "g.json", "--truth", "truth.jsonl"],
    );
    let incorrect = |s: &str| eval[s]["incorrect_lt1"].as_u64().unwrap();
    assert!(incorrect("SGB") >= incorrect("MMP") && incorrect("MMP") >= incorrect("CLP"));
    for s in ["SGB", "MMP", "CLP"] {
        assert_eq!(eval[s]["not_detected"], 0);
    }
    let record: Value = serde_json::from_str(&std::fs::read_to_string(d.join("run.json")).unwrap()).unwrap();
    assert_eq!(record["command"], "evaluate");
}

#[test]
fn truth_as_graph_has_no_incorrect_edges() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_lake(d);
    ok(d, &["pipeline", "--lake", "lake", "--out", "g.json"]);
    let g: Value = serde_json::from_str(&std::fs::read_to_string(d.join("g.json")).unwrap()).unwrap();
    let lines: Vec<String> = g["edges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| serde_json::json!({ "parent": e["parent"], "child": e["child"], "cm": 1.0 }).to_string())
        .collect();
    std::fs::write(d.join("self.jsonl"), lines.join("\n")).unwrap();
    let eval = ok(d, &["evaluate", "--graph", "g.json", "--truth", "self.jsonl"]);
    assert_eq!(eval["CLP"]["incorrect_lt1"], 0);
    assert_eq!(eval["CLP"]["not_detected"], 0);
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_lake(d);
    ok(d, &["--threads", "1", "pipeline", "--lake", "lake", "--out", "one.json", "--seed", "3"]);
    ok(d, &["--threads", "4", "pipeline", "--lake", "lake", "--out", "four.json", "--seed", "3"]);
    for (a, b) in [("one.json", "four.json"), ("one.sgb.json", "four.sgb.json"), ("one.mmp.json", "four.mmp.json")] {
        assert_eq!(std::fs::read(d.join(a)).unwrap(), std::fs::read(d.join(b)).unwrap());
    }
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_lake(d);
    ok(d, &["--run-json", "p.run.json", "pipeline", "--lake", "lake", "--out", "g.json", "--clp-s", "2"]);
    let before = std::fs::read(d.join("g.json")).unwrap();
    std::fs::remove_file(d.join("g.json")).unwrap();
    let out = run_in(d, &["replay", "p.run.json", "--check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(d.join("g.json")).unwrap(), before);

    // A tampered output makes the check fail.
    let mut record: Value = serde_json::from_str(&std::fs::read_to_string(d.join("p.run.json")).unwrap()).unwrap();
    record["outputs"][0]["xxh3"] = Value::String("0".repeat(32));
    std::fs::write(d.join("bad.run.json"), record.to_string()).unwrap();
    assert_eq!(code(d, &["replay", "bad.run.json", "--check"]), 1);
}

fn write_chain_fixture(d: &Path) {
    std::fs::write(
        d.join("chain.json"),
        r#"{"stage": "CLP", "nodes": ["p", "q"], "edges": [{"parent": "p", "child": "q", "stage": "CLP", "common_columns": ["a"]}]}"#,
    )
    .unwrap();
    std::fs::write(
        d.join("econ.json"),
        r#"[{"node": "p", "size_bytes": 1000, "maintenance_freq": 0, "access_freq": 1, "rows": 100},
            {"node": "q", "size_bytes": 800, "maintenance_freq": 0, "access_freq": 1, "rows": 1000000}]"#,
    )
    .unwrap();
    std::fs::write(d.join("tf.json"), r#"[{"parent": "p", "child": "q", "transformation": "filter"}]"#).unwrap();
    std::fs::write(d.join("cost.toml"), "C_s = 1.0\nC_m = 0.0\nr = 0.1\nw = 0.2\nr_l = 0.0\nw_l = 0.0\nTh = 10\n")
        .unwrap();
}

#[test]
fn optimize_chain_and_savings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_chain_fixture(d);
    // Keep both: 1800. Delete q: 1000 + (0.1 * 1000 + 0.2 * 800) = 1260. p cannot go.
    for extra in [None, Some("--force-ilp")] {
        let mut args = vec![
            "optimize", "--graph", "chain.json", "--cost", "cost.toml", "--econ", "econ.json", "--transforms", "tf.json",
            "--out", "plan.json",
        ];
        args.extend(extra);
        ok(d, &args);
        let plan: Value = serde_json::from_str(&std::fs::read_to_string(d.join("plan.json")).unwrap()).unwrap();
        assert_eq!(plan["deletions"], serde_json::json!(["q"]));
        assert_eq!(plan["reconstruct_via"], serde_json::json!([{"child": "q", "parent": "p"}]));
        assert!((plan["objective"].as_f64().unwrap() - 1260.0).abs() < 1e-9);
    }
    let report = ok(
        d,
        &[
            "savings", "--plan", "plan.json", "--econ", "econ.json", "--cost", "cost.toml", "--horizon", "1",
            "--graph", "chain.json",
        ],
    );
    assert_eq!(report["row_scans_saved_per_month"].as_f64().unwrap(), 4_330_000.0);
    std::fs::write(d.join("other.json"), r#"{"stage": "CLP", "nodes": ["p", "q"], "edges": []}"#).unwrap();
    assert_eq!(
        code(d, &["savings", "--plan", "plan.json", "--econ", "econ.json", "--cost", "cost.toml", "--graph", "other.json"]),
        1
    );
}

#[test]
fn optimize_rejects_missing_economics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_chain_fixture(d);
    std::fs::write(d.join("econ.json"), r#"[{"node": "p", "size_bytes": 1, "maintenance_freq": 0, "access_freq": 1}]"#)
        .unwrap();
    let args = [
        "optimize", "--graph", "chain.json", "--cost", "cost.toml", "--econ", "econ.json", "--transforms", "tf.json",
        "--out", "plan.json",
    ];
    assert_eq!(code(d, &args), 1);
}

fn csv(d: &Path, name: &str, rows: std::ops::Range<i64>) -> PathBuf {
    let mut text = String::from("id,amount\n");
    for i in rows {
        text.push_str(&format!("{i},{}\n", i * 3));
    }
    let path = d.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn updates_match_fresh_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    csv(d, "base.csv", 0..100);
    csv(d, "part.csv", 10..40);
    csv(d, "extra.csv", 50..70);
    csv(d, "shrunk.csv", 60..100);
    ok(d, &["ingest", "--input", "base.csv", "--lake", "lake", "--partition-rows", "16"]);
    ok(d, &["ingest", "--input", "part.csv", "--lake", "lake", "--partition-rows", "16"]);
    ok(d, &["pipeline", "--lake", "lake", "--out", "g.json"]);

    let fresh = |d: &Path| {
        ok(d, &["pipeline", "--lake", "lake", "--out", "fresh.json"]);
        std::fs::read(d.join("fresh.json")).unwrap()
    };
    ok(d, &["update", "add", "--lake", "lake", "--graph", "g.json", "--name", "extra", "--input", "extra.csv"]);
    assert_eq!(std::fs::read(d.join("g.json")).unwrap(), fresh(d));
    ok(
        d,
        &[
            "update", "mutate", "--lake", "lake", "--graph", "g.json", "--name", "base", "--change", "rows-removed",
            "--input", "shrunk.csv",
        ],
    );
    assert_eq!(std::fs::read(d.join("g.json")).unwrap(), fresh(d));
    ok(d, &["update", "remove", "--lake", "lake", "--graph", "g.json", "--name", "part"]);
    assert_eq!(std::fs::read(d.join("g.json")).unwrap(), fresh(d));

    assert_eq!(
        code(
            d,
            &[
                "update", "mutate", "--lake", "lake", "--graph", "g.json", "--name", "base", "--change",
                "columns-added", "--input", "shrunk.csv",
            ]
        ),
        1
    );
    assert_eq!(code(d, &["update", "remove", "--lake", "lake", "--graph", "g.json", "--name", "ghost"]), 1);
}

#[test]
fn clp_grid_and_bench_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_lake(d);
    ok(d, &["truth", "--lake", "lake", "--out", "truth.jsonl"]);
    let grid = ok(d, &["clp-grid", "--lake", "lake", "--s", "1,4", "--t", "5,10,30", "--truth", "truth.jsonl"]);
    let cells = grid["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 6);
    assert!(cells.iter().all(|c| c["not_detected"] == 0));

    ok(d, &["bench-opt", "--nodes", "8,12", "--p", "0.2", "--trials", "2", "--out", "a.jsonl"]);
    ok(d, &["--threads", "1", "bench-opt", "--nodes", "8,12", "--p", "0.2", "--trials", "2", "--out", "b.jsonl"]);
    let a = std::fs::read_to_string(d.join("a.jsonl")).unwrap();
    assert_eq!(a.lines().count(), 4);
    assert_eq!(a, std::fs::read_to_string(d.join("b.jsonl")).unwrap());
}
