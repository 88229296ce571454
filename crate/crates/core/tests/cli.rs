use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use blockkit::formats::{read_blocks, read_trace};

fn blockkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockkit")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = blockkit(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_ring_writes_edges_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["--out", s(dir.path()), "generate", "ring-of-cliques", "--cliques", "20", "--size", "5"]);
    let edges = fs::read_to_string(dir.path().join("graph.txt")).unwrap();
    assert_eq!(edges.lines().count(), 220);
    let truth = fs::read_to_string(dir.path().join("truth.txt")).unwrap();
    assert_eq!(truth.lines().count(), 100);
    assert!(truth.lines().all(|l| l.split_whitespace().count() == 2));
}

#[test]
fn dcsbm_generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("params.json");
    fs::write(&spec, r#"{"sizes": [10, 10], "omega": [[0.5, 0.05], [0.05, 0.5]]}"#).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["--seed", "7", "--out", s(out), "generate", "dcsbm", "--spec", s(&spec)]);
    }
    assert_eq!(fs::read(a.join("graph.txt")).unwrap(), fs::read(b.join("graph.txt")).unwrap());
    assert_eq!(fs::read(a.join("truth.txt")).unwrap(), fs::read(b.join("truth.txt")).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    let out = blockkit(&["generate", "ring-of-cliques", "--cliques", "20"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(blockkit(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = blockkit(&["--out", s(dir.path()), "sample"]);
    assert_eq!(out.status.code(), Some(2));
    let bad = blockkit(&["--out", s(dir.path()), "generate", "ring-of-cliques", "--cliques", "2", "--size", "5"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn unreadable_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let out = blockkit(&["--out", s(dir.path()), "sample", "--input", s(&missing)]);
    assert_eq!(out.status.code(), Some(1));
}

fn ring_graph(dir: &Path) -> std::path::PathBuf {
    ok(&["--out", s(dir), "generate", "ring-of-cliques", "--cliques", "4", "--size", "3"]);
    dir.join("graph.txt")
}

#[test]
fn single_record_sample_and_seed_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let graph = ring_graph(dir.path());
    let one = dir.path().join("one");
    let stdout = ok(&[
        "--out", s(&one), "sample", "--input", s(&graph), "--steps", "1500", "--burn-in", "500", "--thin", "1000",
    ]);
    assert!(stdout.contains("steps/sec"));
    let trace = fs::read_to_string(one.join("trace.txt")).unwrap();
    assert_eq!(trace.lines().count(), 2);
    assert!(trace.starts_with("#blockkit-trace n=12 m=16 hash="));
    assert!(fs::read_to_string(one.join("logp.csv")).unwrap().starts_with("chain,step,logp,k\n"));

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["--seed", "9", "--out", s(out), "sample", "--input", s(&graph), "--steps", "3000", "--burn-in", "1000", "--thin", "100", "--chains", "3"]);
    }
    assert_eq!(fs::read(a.join("trace.txt")).unwrap(), fs::read(b.join("trace.txt")).unwrap());
    let e = read_trace(fs::read(a.join("trace.txt")).unwrap().as_slice()).unwrap();
    assert_eq!(e.len(), 60);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let graph = ring_graph(dir.path());
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("# run settings\ninput = {}\nsteps=2000\nburn_in=1000\nthin=250\nchains=2\nseed=4\n", s(&graph))).unwrap();
    let out = dir.path().join("cfg");
    ok(&["--config", s(&cfg), "--out", s(&out), "sample", "--thin", "500"]);
    let e = read_trace(fs::read(out.join("trace.txt")).unwrap().as_slice()).unwrap();
    assert_eq!(e.len(), 4);
    fs::write(&cfg, "steps=many\n").unwrap();
    let bad = blockkit(&["--config", s(&cfg), "--out", s(&out), "sample", "--input", s(&graph)]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn analyze_identical_records_gives_zero_one_matrix() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.txt"), "a b\nb c\nc d\n").unwrap();
    let graph = blockkit::graph::load_edge_list("a b\nb c\nc d\n".as_bytes()).unwrap();
    let header = blockkit::formats::trace_header(&graph.fingerprint());
    fs::write(dir.path().join("t.txt"), format!("{header}\n0 1 -3.5 2 0 0 1 1\n0 2 -3.5 2 1 1 0 0\n")).unwrap();
    ok(&[
        "--out", s(dir.path()), "analyze", "--input", s(&dir.path().join("g.txt")), "--trace", s(&dir.path().join("t.txt")),
        "--meet-top", "2",
    ]);
    let csv = fs::read_to_string(dir.path().join("comembership.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "node,a,b,c,d");
    assert_eq!(lines[1], "a,1.000000,1.000000,0.000000,0.000000");
    assert_eq!(lines[3], "c,0.000000,0.000000,1.000000,1.000000");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("histograms.json")).unwrap()).unwrap();
    assert_eq!(json["all"]["masses"].as_array().unwrap().len(), 50);
    assert_eq!(fs::read_to_string(dir.path().join("meet.txt")).unwrap(), "a 0\nb 0\nc 1\nd 1\n");
}

#[test]
fn hash_mismatch_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let graph = ring_graph(dir.path());
    ok(&["--out", s(dir.path()), "sample", "--input", s(&graph), "--steps", "2000", "--burn-in", "1000", "--thin", "500"]);
    let other = dir.path().join("other.txt");
    fs::write(&other, fs::read_to_string(&graph).unwrap() + "0 5\n").unwrap();
    for cmd in ["analyze", "blocks"] {
        let out = blockkit(&["--out", s(dir.path()), cmd, "--input", s(&other)]);
        assert_eq!(out.status.code(), Some(1), "{cmd}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("fingerprint"));
    }
}

#[test]
fn blocks_writes_curve_with_zero_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let graph = ring_graph(dir.path());
    ok(&["--seed", "3", "--out", s(dir.path()), "sample", "--input", s(&graph), "--steps", "40000", "--burn-in", "10000", "--thin", "300", "--chains", "4"]);
    let stdout = ok(&["--out", s(dir.path()), "blocks", "--input", s(&graph), "--svg"]);
    assert!(stdout.contains("top1"));
    let curve = fs::read_to_string(dir.path().join("rmi_curve.csv")).unwrap();
    let rows: Vec<&str> = curve.lines().collect();
    assert_eq!(rows[0], "q,mean_rmi,merged_a,merged_b");
    assert_eq!(rows.len(), 13);
    assert!(rows[1].starts_with("12,0,"));
    assert!(rows[12].starts_with("1,0,"));
    let (fp, blocks, _) = read_blocks(fs::read(dir.path().join("blocks.txt")).unwrap().as_slice()).unwrap();
    assert_eq!(fp.n, 12);
    assert!(blocks.block_count() >= 1);
    assert!(fs::read_to_string(dir.path().join("misfits.csv")).unwrap().starts_with("division,"));
    assert!(fs::read_to_string(dir.path().join("rmi_curve.svg")).unwrap().starts_with("<svg"));
}
