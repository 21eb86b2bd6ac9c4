use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hypfill::bounds::BoundReport;
use hypfill::brooks_makover::Aggregates;
use hypfill::fill_graph::{EmbeddedGraph, GraphJson};

fn hypfill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypfill")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn bounds_matches_golden() {
    let out = hypfill(&["bounds", "--g", "2"]);
    assert!(out.status.success());
    let golden = include_str!("golden/bounds_g2.json");
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
    let r: BoundReport = serde_json::from_str(golden).unwrap();
    // 12 acosh(√2 cos(π/12)), evaluated independently.
    let direct = 12.0 * (2f64.sqrt() * (std::f64::consts::PI / 12.0).cos()).acosh();
    assert!((r.exact_min - direct).abs() < 1e-12);
}

#[test]
fn bounds_reads_lengths() {
    let path = scratch("lengths.csv");
    std::fs::write(&path, "0.5, 0.25\n").unwrap();
    let out = hypfill(&["bounds", "--g", "3", "--lengths", path.to_str().unwrap()]);
    assert!(out.status.success());
    let r: BoundReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!((r.r - 3.0 * 2f64.ln()).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(hypfill(&["selftest"]).status.code(), Some(0));
    assert_eq!(hypfill(&["bounds", "--g", "1"]).status.code(), Some(2));
    assert_eq!(hypfill(&["bm-sample", "--n", "4", "--samples", "2"]).status.code(), Some(2));
    assert_eq!(hypfill(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(hypfill(&["shorten", "--surface", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(hypfill(&["shorten", "--surface", &fixture("genus3_deg7.json")]).status.code(), Some(2));
    assert_eq!(hypfill(&["--help"]).status.code(), Some(0));
}

#[test]
fn selftest_reports_each_check() {
    let out = hypfill(&["selftest"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 7);
    assert!(text.lines().all(|l| l.starts_with("ok ")), "{text}");
}

#[test]
fn bm_sample_csv_and_summary_parse() {
    let csv_path = scratch("bm.csv");
    let summary = scratch("bm.json");
    let out = hypfill(&[
        "bm-sample",
        "--n",
        "8",
        "--samples",
        "50",
        "--seed",
        "3",
        "--out",
        csv_path.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(header.get(2), Some("N"));
    let mut genus_total = 0.0;
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let g: usize = rec[4].parse().unwrap();
        let cusps: usize = rec[3].parse().unwrap();
        // 16 triangles: 24 edges, so V - 24 + 16 = 2 - 2g.
        assert_eq!(cusps as i64 - 8, 2 - 2 * g as i64);
        genus_total += g as f64;
        rows += 1;
    }
    assert_eq!(rows, 50);
    let agg: Aggregates = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(agg.samples, 50);
    assert!((agg.mean_genus - genus_total / 50.0).abs() < 1e-12);
}

#[test]
fn shorten_then_dual_and_certify() {
    let graph = scratch("g2.json");
    let out = hypfill(&["shorten", "--surface", &fixture("genus2_deg8.json"), "--out", graph.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let j: GraphJson = serde_json::from_str(&std::fs::read_to_string(&graph).unwrap()).unwrap();
    let g = EmbeddedGraph::from_json(&j).unwrap();
    assert!((0..g.vertex_count()).all(|v| g.degree(v) == 3));

    let out = hypfill(&["dual", "--graph", graph.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ratio = v["sandwich"]["ratio"].as_f64().unwrap();
    assert!(ratio > 1.0 && ratio < 2.0);

    let out = hypfill(&["certify", "--graph", graph.to_str().unwrap(), "--oracle-depth", "2"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "certified-minimal-position");
    assert_eq!(v["oracle"]["result"], "none");
}
