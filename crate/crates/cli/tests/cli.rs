use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use loosetree::embed::HierarchyConfig;
use loosetree::instances::{random_hypertree, GenKind, GenSpec, Persist};
use loosetree::Hypertree;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_loosetree"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn construct(args: &[&str], out: &Path) {
    let mut all = vec!["construct"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", s(out)]);
    let o = run(&all);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn valid_tree_exits_zero() {
    let dir = TempDir::new().unwrap();
    let t = path(&dir, "t.json");
    construct(&["tree", "--n", "21", "--seed", "4"], &t);
    let o = run(&["validate", s(&t)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("21 vertices, 10 edges"));
}

#[test]
fn non_linear_tree_exits_two_with_edge_index() {
    let dir = TempDir::new().unwrap();
    let t = path(&dir, "bad.json");
    std::fs::write(&t, r#"{"schema":"loosetree-v1","k":3,"n":5,"root":0,"edges":[[0,1,2],[3,4,0],[1,2,3]]}"#).unwrap();
    let o = run(&["validate", s(&t)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("edge 2"), "{}", stderr(&o));
}

#[test]
fn missing_file_exits_one() {
    let o = run(&["validate", "/nonexistent/tree.json"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn stats_leaf_count_matches_library() {
    let dir = TempDir::new().unwrap();
    let kinds = [GenKind::UniformAttachment, GenKind::PathHeavy, GenKind::StarHeavy];
    for i in 0..50u64 {
        let k = 3 + (i % 3) as usize;
        let n = 1 + (k - 1) * (2 + (i as usize * 7) % 40);
        let t = random_hypertree(&GenSpec::tree(kinds[i as usize % 3], n, k, i)).unwrap();
        let file = path(&dir, &format!("t{i}.json"));
        t.save(&file).unwrap();
        let o = run(&["stats", s(&file), "--json"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        let reloaded = Hypertree::load(&file).unwrap();
        assert_eq!(v["leaf_edges"], reloaded.leaf_edges().len(), "file {i}");
        assert_eq!(v["edges"], reloaded.num_edges());
    }
}

#[test]
fn graph_stats_report_degrees_per_level() {
    let dir = TempDir::new().unwrap();
    let g = path(&dir, "g.json");
    construct(&["graph", "--kind", "complete", "--n", "9", "--k", "4"], &g);
    let o = run(&["stats", s(&g), "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let levels = v["min_degrees"].as_array().unwrap();
    assert_eq!(levels.len(), 3);
    assert!(levels.iter().all(|l| l["normalized"] == "1/1"));
}

#[test]
fn decompose_star_passes_audit() {
    let dir = TempDir::new().unwrap();
    let t = path(&dir, "star.json");
    let dec = path(&dir, "dec.json");
    construct(&["tree", "--kind", "star-heavy", "--bias", "1", "--n", "201"], &t);
    let o = run(&["decompose", s(&t), "--out", s(&dec)]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(!text.contains("FAIL"), "{text}");
    let line = text.lines().find(|l| l.starts_with("levels L = ")).unwrap();
    let (l, bound) = line.trim_start_matches("levels L = ").split_once(", bound ").unwrap();
    assert!(l.parse::<u64>().unwrap() <= bound.parse::<u64>().unwrap());
    assert!(dec.exists());
}

#[test]
fn decompose_audit_failure_exits_three() {
    let dir = TempDir::new().unwrap();
    let t = path(&dir, "t.json");
    construct(&["tree", "--kind", "star-heavy", "--n", "31", "--seed", "2"], &t);
    let o = run(&["decompose", s(&t)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("A1"), "{}", stderr(&o));
}

#[test]
fn embed_on_complete_host_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (g, t) = (path(&dir, "g.json"), path(&dir, "t.json"));
    construct(&["graph", "--kind", "complete", "--n", "31"], &g);
    construct(&["tree", "--n", "31", "--seed", "8"], &t);
    let a = run(&["embed", s(&g), s(&t), "--image", "7", "--seed", "5"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let b = run(&["embed", s(&g), s(&t), "--image", "7", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["map"][0], 7);
}

#[test]
fn almost_spanning_embed_honours_both_roots() {
    let dir = TempDir::new().unwrap();
    let (g, t, e) = (path(&dir, "g.json"), path(&dir, "t.json"), path(&dir, "e.json"));
    construct(&["graph", "--kind", "complete", "--n", "80"], &g);
    construct(&["tree", "--n", "21", "--seed", "1"], &t);
    let o = run(&["embed", s(&g), s(&t), "--image", "3", "--almost", "20:50", "--out", s(&e)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&e).unwrap()).unwrap();
    assert_eq!(v["map"][0], 3);
    assert_eq!(v["map"][20], 50);
}

#[test]
fn tightness_star_fails_and_oracle_agrees() {
    let dir = TempDir::new().unwrap();
    let (g, t) = (path(&dir, "g.json"), path(&dir, "t.json"));
    let o = run(&["construct", "tightness", "--n", "13", "--out", s(&g)]);
    assert_eq!(code(&o), 0);
    let apex = stderr(&o).trim().trim_start_matches("apex ").to_string();
    construct(&["tree", "--kind", "star-heavy", "--bias", "1", "--n", "13"], &t);
    let stats: Value = serde_json::from_str(&stdout(&run(&["stats", s(&t), "--json"]))).unwrap();
    assert_eq!(stats["max_degree"], 6, "a spanning star");

    let e = run(&["embed", s(&g), s(&t), "--image", &apex]);
    assert_eq!(code(&e), 4);
    assert!(stderr(&e).contains("complete phase"), "{}", stderr(&e));

    let o = run(&["oracle", s(&g), s(&t), "--root", "0", "--image", &apex]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["found"], false);
    assert_eq!(v["exhausted"], true);
    assert!(v["nodes_explored"].as_u64().unwrap() > 0);
}

#[test]
fn oracle_finds_on_complete_host() {
    let dir = TempDir::new().unwrap();
    let (g, t, e) = (path(&dir, "g.json"), path(&dir, "t.json"), path(&dir, "e.json"));
    construct(&["graph", "--kind", "complete", "--n", "11"], &g);
    construct(&["tree", "--n", "11", "--seed", "3"], &t);
    let o = run(&["oracle", s(&g), s(&t), "--root", "0", "--image", "4", "--out", s(&e)]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["found"], true);
    assert!(e.exists());
}

#[test]
fn config_help_lists_the_defaults() {
    let o = run(&["embed", "--help"]);
    let help = stdout(&o);
    let line = help.split("Defaults:").nth(1).expect("defaults in help");
    let listed: Value = line
        .split_whitespace()
        .take(8)
        .map(|kv| {
            let (k, v) = kv.split_once('=').unwrap();
            (k.to_string(), Value::String(v.to_string()))
        })
        .collect::<serde_json::Map<_, _>>()
        .into();
    let defaults = serde_json::to_value(HierarchyConfig::default()).unwrap();
    assert_eq!(listed, defaults);
}

#[test]
fn config_file_is_accepted() {
    let dir = TempDir::new().unwrap();
    let (g, t, c) = (path(&dir, "g.json"), path(&dir, "t.json"), path(&dir, "c.json"));
    construct(&["graph", "--kind", "complete", "--n", "25"], &g);
    construct(&["tree", "--n", "25"], &t);
    std::fs::write(&c, serde_json::to_string(&HierarchyConfig::default()).unwrap()).unwrap();
    let o = run(&["embed", s(&g), s(&t), "--config", s(&c)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    std::fs::write(&c, "{\"gamma\": 3}").unwrap();
    let o = run(&["embed", s(&g), s(&t), "--config", s(&c)]);
    assert_eq!(code(&o), 2);
}

fn experiment(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["experiment"];
    all.extend_from_slice(args);
    let o = run(&all);
    let v = serde_json::from_str(&stdout(&o)).unwrap_or(Value::Null);
    (code(&o), v)
}

#[test]
fn concentration_on_complete_graph_always_passes() {
    let (c, v) = experiment(&["concentration", "--n", "40", "--trials", "30", "--jobs", "2"]);
    assert_eq!(c, 0);
    assert_eq!(v["successes"], 30);
    assert_eq!(v["summary"]["pass_rate"], 1.0);
}

#[test]
fn solver_agreement_has_no_disagreements() {
    let dir = TempDir::new().unwrap();
    let cx = path(&dir, "cx");
    let (c, v) = experiment(&["solver-agreement", "--trials", "300", "--seed", "11", "--counterexamples", s(&cx)]);
    assert_eq!(c, 0);
    assert_eq!(v["summary"]["disagreements"], 0);
    assert!(!cx.exists());
}

#[test]
fn dichotomy_sweep_has_no_failures() {
    let dir = TempDir::new().unwrap();
    let cx = path(&dir, "cx");
    let (c, v) = experiment(&["dichotomy-sweep", "--trials", "40", "--counterexamples", s(&cx)]);
    assert_eq!(c, 0);
    assert_eq!(v["summary"]["failures"], 0);
    assert!(!cx.exists());
}

#[test]
fn experiments_are_seed_reproducible() {
    let strip = |mut v: Value| {
        v["elapsed_ms"] = Value::Null;
        for r in v["rows"].as_array_mut().unwrap() {
            r["elapsed_ms"] = Value::Null;
        }
        v
    };
    let args = ["pipeline-sweep", "--n", "25,31", "--density", "0.9", "--trials", "3", "--seed", "9"];
    let (_, a) = experiment(&args);
    let (_, b) = experiment(&[&args[..], &["--jobs", "1"]].concat());
    assert_eq!(strip(a.clone()), strip(b));
    assert_eq!(a["successes"], 6);
}
