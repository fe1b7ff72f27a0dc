use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qftmove::compiler::big_batch_count;
use qftmove::schedule::Schedule;
use serde_json::{json, Value};
use tempfile::TempDir;

fn qftmove(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qftmove"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn compile_to(dir: &Path, name: &str, args: &[&str]) -> (String, Schedule) {
    let path = dir.join(name).to_str().unwrap().to_string();
    let mut full = vec!["compile"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", &path]);
    let o = qftmove(&full);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    let s = Schedule::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    (path, s)
}

fn verify(path: &str) -> Output {
    qftmove(&["verify", path])
}

#[test]
fn qft30_linear_has_227_big_batches_and_verifies() {
    let dir = TempDir::new().unwrap();
    let (path, s) = compile_to(
        dir.path(),
        "q30.json",
        &["--circuit", "qft", "--n", "30", "--layout", "linear"],
    );
    assert_eq!(big_batch_count(&s), 227);
    let o = verify(&path);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("violations: 0"));
    assert!(stdout(&o).contains("gate trace: equivalent"));
}

#[test]
fn qft2_has_three_big_batches() {
    let dir = TempDir::new().unwrap();
    let (_, s) = compile_to(
        dir.path(),
        "q2.json",
        &["--circuit", "qft", "--n", "2", "--layout", "linear"],
    );
    assert_eq!(big_batch_count(&s), 3);
}

#[test]
fn qaoa_theta_zero_has_no_pulses() {
    let dir = TempDir::new().unwrap();
    let (path, s) = compile_to(
        dir.path(),
        "qa.json",
        &[
            "--circuit",
            "qaoa",
            "--n",
            "10",
            "--theta",
            "0",
            "--seed",
            "1",
            "--layout",
            "linear",
        ],
    );
    assert!(s.stages.iter().all(|st| st.pulse.is_none()));
    assert_eq!(verify(&path).status.code(), Some(0));
}

#[test]
fn every_compile_variant_passes_verify() {
    let dir = TempDir::new().unwrap();
    let fold = dir.path().join("fold.json");
    let o = qftmove(&["fold", "--n", "20"]);
    assert!(o.status.success());
    fs::write(&fold, &o.stdout).unwrap();
    let fold = fold.to_str().unwrap();
    let variants: Vec<Vec<&str>> = vec![
        vec!["--n", "17", "--layout", "zigzag"],
        vec!["--n", "17", "--layout", "zigzag", "--grid", "12x9"],
        vec!["--n", "20", "--layout", "path", "--path-file", fold],
        vec!["--n", "9", "--keep-final-swap"],
        vec!["--n", "9", "--delta", "1/3"],
        vec![
            "--circuit",
            "qaoa",
            "--n",
            "14",
            "--theta",
            "60",
            "--seed",
            "3",
            "--layout",
            "zigzag",
        ],
        vec![
            "--circuit",
            "qaoa",
            "--n",
            "14",
            "--theta",
            "100",
            "--seed",
            "3",
        ],
    ];
    for (i, v) in variants.iter().enumerate() {
        let (path, _) = compile_to(dir.path(), &format!("v{i}.json"), v);
        let o = qftmove(&["verify", &path, "--json"]);
        assert_eq!(o.status.code(), Some(0), "{v:?}: {}", stdout(&o));
        let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(report["violations"], json!([]));
        assert_eq!(report["gate_equivalence"]["equivalent"], json!(true));
    }
}

fn pos(x: &str, y: &str) -> Value {
    json!([x, y])
}

#[test]
fn tampered_duplicate_destination_is_one_violation() {
    let mv = |atom: usize, from: Value, to: Value| json!({"atom": atom, "from": from, "to": to});
    let batch = |dir: i8, moves: Vec<Value>| json!({"kind": "big", "axis": "x", "direction": dir, "moves": moves});
    let schedule = json!({
        "metadata": {"circuit": {"kind": "opaque"}, "strategy": "hand", "drop_final_swap": false, "delta": "1/4"},
        "architecture": {"rows": 1, "cols": 4, "unit_distance_um": 15.0},
        "initial_placement": [
            {"atom": 0, "site": {"x": 0, "y": 0}},
            {"atom": 1, "site": {"x": 1, "y": 0}}
        ],
        "stages": [{
            "index": 0, "m_stage": 0, "mode": "restore",
            "pre_moves": [batch(-1, vec![mv(1, pos("1", "0"), pos("1/4", "0"))])],
            "pulse": {"pairs": [[0, 1]]},
            "post_moves": [
                batch(1, vec![mv(0, pos("0", "0"), pos("1", "0")), mv(1, pos("1/4", "0"), pos("1", "0"))]),
                batch(1, vec![mv(1, pos("1", "0"), pos("7/4", "0"))])
            ]
        }]
    });
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, serde_json::to_string(&schedule).unwrap()).unwrap();
    let o = qftmove(&["verify", path.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let v = report["violations"].as_array().unwrap();
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!(v[0]["rule"], json!("duplicate-destination"));
}

#[test]
fn empty_schedule_verifies_with_zero_metrics() {
    let schedule = json!({
        "metadata": {"circuit": {"kind": "opaque"}, "strategy": "hand", "drop_final_swap": false, "delta": "1/4"},
        "architecture": {"rows": 1, "cols": 3, "unit_distance_um": 15.0},
        "initial_placement": [{"atom": 0, "site": {"x": 0, "y": 0}}],
        "stages": []
    });
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("empty.json");
    fs::write(&path, schedule.to_string()).unwrap();
    let o = verify(path.to_str().unwrap());
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).starts_with("g2=0 Q=1 S=0 N_trans=0 big_count=0"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn unreadable_schedule_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("junk.json");
    fs::write(&path, "{ not json").unwrap();
    assert_eq!(verify(path.to_str().unwrap()).status.code(), Some(2));
    assert_eq!(verify("/nonexistent/schedule.json").status.code(), Some(2));
}

#[test]
fn grid_too_small_suggests_minimum() {
    let o = qftmove(&[
        "compile", "--n", "30", "--layout", "zigzag", "--grid", "5x5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("8x8"), "{}", stderr(&o));
    let o = qftmove(&["compile", "--n", "5", "--delta", "1/2"]);
    assert_eq!(o.status.code(), Some(2));
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn sweep_single_n_and_determinism() {
    let a = qftmove(&["sweep", "--n-min", "5", "--n-max", "5"]);
    assert!(a.status.success(), "{}", stderr(&a));
    let text = stdout(&a);
    assert!(
        text.starts_with("n,strategy,g2,Q,S,n_trans,big_count,big_dist,offset_count,offset_dist,")
    );
    let rows = csv_rows(&text);
    let strategies: Vec<&str> = rows.iter().map(|r| &r[1]).collect();
    assert_eq!(strategies, ["linear", "zigzag", "tlb"]);
    assert_eq!(
        stdout(&qftmove(&["sweep", "--n-min", "5", "--n-max", "5"])),
        text
    );
}

#[test]
fn sweep_5_to_50_matches_bound() {
    let o = qftmove(&["sweep", "--n-min", "5", "--n-max", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 46 * 3);
    let mut last_n = 0;
    for r in &rows {
        let n: usize = r[0].parse().unwrap();
        assert!(n >= last_n);
        last_n = n;
        assert_eq!(r[6].parse::<usize>().unwrap(), 8 * n - 13, "{r:?}");
        if n == 50 && &r[1] == "tlb" {
            let total: f64 = r[14].parse().unwrap();
            assert!((total / 1.4e-15 - 1.0).abs() < 0.1, "{total}");
        }
    }
}

#[test]
fn params_file_and_overrides() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("params.toml");
    fs::write(&p, "f_exc = 1.0\nT2 = 1.5\n").unwrap();
    let o = qftmove(&["fidelity", "--tlb", "30", "--params", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r["total"].as_f64().unwrap() / 3.8e-4 - 1.0).abs() < 0.1);
    assert_eq!(r["total_sci"], json!("3.8e-4"));

    fs::write(&p, "f_exe = 1.0\n").unwrap();
    let o = qftmove(&["fidelity", "--tlb", "30", "--params", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = qftmove(&["fidelity", "--tlb", "30", "--f-exc", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fidelity_of_a_compiled_schedule() {
    let dir = TempDir::new().unwrap();
    let (path, _) = compile_to(dir.path(), "q.json", &["--n", "12"]);
    let tlb: Value = serde_json::from_str(&stdout(&qftmove(&["fidelity", "--tlb", "12"]))).unwrap();
    let ours: Value =
        serde_json::from_str(&stdout(&qftmove(&["fidelity", "--schedule", &path]))).unwrap();
    assert_eq!(ours["total"], tlb["total"]);
    let kin = qftmove(&["fidelity", "--schedule", &path, "--timing", "kinematic"]);
    let kin: Value = serde_json::from_str(&stdout(&kin)).unwrap();
    assert!(kin["total"].as_f64().unwrap() < ours["total"].as_f64().unwrap());
}

#[test]
fn fold_outputs() {
    let w1: Value = serde_json::from_str(&stdout(&qftmove(&["fold", "--w", "1"]))).unwrap();
    assert_eq!(w1["path"].as_array().unwrap().len(), 4);
    assert_eq!(w1["wasted"], json!(0));
    let w2: Value = serde_json::from_str(&stdout(&qftmove(&["fold", "--w", "2"]))).unwrap();
    assert_eq!(w2["wasted"], json!(2));
    assert_eq!(w2["path"].as_array().unwrap().len(), 14);
    let n100: Value = serde_json::from_str(&stdout(&qftmove(&["fold", "--n", "100"]))).unwrap();
    assert_eq!(n100["side"], json!(12));
    assert!((n100["efficiency"].as_f64().unwrap() - 100.0 / 144.0).abs() < 1e-12);
    let ascii = stdout(&qftmove(&["fold", "--w", "1", "--format", "ascii"]));
    assert_eq!(ascii.lines().count(), 2);
    assert_eq!(qftmove(&["fold"]).status.code(), Some(2));
}

#[test]
fn qaoa_sweep_is_ordered_and_repeatable() {
    let args = [
        "qaoa-sweep",
        "--n",
        "8",
        "--seeds",
        "3",
        "--theta-min",
        "50",
        "--theta-max",
        "100",
        "--theta-step",
        "25",
    ];
    let a = qftmove(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    let rows = csv_rows(&stdout(&a));
    let keys: Vec<(String, String)> = rows
        .iter()
        .map(|r| (r[1].to_string(), r[2].to_string()))
        .collect();
    let want: Vec<(String, String)> = [50, 75, 100]
        .iter()
        .flat_map(|t| (0..3).map(move |s| (t.to_string(), s.to_string())))
        .collect();
    assert_eq!(keys, want);
    assert_eq!(stdout(&qftmove(&args)), stdout(&a));
}
