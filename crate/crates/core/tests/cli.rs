use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cobridge::planted::{generate_planted, PlantedConfig};

fn cobridge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cobridge"))
        .args(args)
        .output()
        .expect("spawn cobridge")
}

fn fixture(dir: &Path) {
    generate_planted(&PlantedConfig {
        blocks: 3,
        left_per_block: 15,
        right_per_block: 30,
        p_in: 0.3,
        p_out: 0.01,
        seed: 4,
    })
    .unwrap()
    .write_fixture(dir)
    .unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ingest(dir: &Path, out: &Path) -> Output {
    cobridge(&[
        "ingest",
        "--edges",
        s(&dir.join("edges.tsv")),
        "--left-meta",
        s(&dir.join("left.tsv")),
        "--right-meta",
        s(&dir.join("right.tsv")),
        "--out",
        s(out),
    ])
}

#[test]
fn pipeline_writes_report_with_nmi_section() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    let out = tmp.path().join("run");
    let o = cobridge(&[
        "pipeline",
        "--edges",
        s(&tmp.path().join("edges.tsv")),
        "--left-meta",
        s(&tmp.path().join("left.tsv")),
        "--right-meta",
        s(&tmp.path().join("right.tsv")),
        "--seed",
        "42",
        "--runs-bipartite",
        "50",
        "--runs-articles",
        "10",
        "--runs-concepts",
        "10",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("bridge_report.json")).unwrap()).unwrap();
    let nmi = &report["nmi"];
    assert_eq!(nmi["normalization"], "arithmetic");
    assert!(nmi["bipartite_vs_category"].as_f64().unwrap() > 0.9);
    let v = cobridge(&["verify", "--out", s(&out)]);
    assert!(v.status.success());
}

#[test]
fn stepwise_cluster_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    let out = tmp.path().join("run");
    assert!(ingest(tmp.path(), &out).status.success());
    let args = [
        "cluster",
        "--network",
        "bipartite",
        "--runs",
        "1000",
        "--seed",
        "7",
        "--out",
        s(&out),
    ];
    assert!(cobridge(&args).status.success());
    let first = fs::read(out.join("partition.bipartite.tsv")).unwrap();
    assert!(cobridge(&args).status.success());
    assert_eq!(
        first,
        fs::read(out.join("partition.bipartite.tsv")).unwrap()
    );

    for network in ["articles", "concepts"] {
        let o = cobridge(&[
            "cluster",
            "--network",
            network,
            "--runs",
            "5",
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = cobridge(&["bridge", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("bridge_report.json").exists());
    assert!(cobridge(&["verify", "--out", s(&out)]).status.success());
}

#[test]
fn project_threshold_contract() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    let out = tmp.path().join("run");
    assert!(ingest(tmp.path(), &out).status.success());
    let o = cobridge(&[
        "project",
        "--mode",
        "articles",
        "--threshold",
        "0.05",
        "--graphml",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("articles.edges.tsv")).unwrap();
    assert!(!text.is_empty());
    for line in text.lines() {
        let w: f64 = line.rsplit('\t').next().unwrap().parse().unwrap();
        assert!(w > 0.05, "{line}");
    }
    assert!(out.join("articles.graphml").exists());
}

#[test]
fn ingest_prints_summary_json() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    let out = tmp.path().join("run");
    let o = ingest(tmp.path(), &out);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["stats"]["n_articles"], 45);
    assert_eq!(json["summary"]["dropped_invalid"], 0);
}

#[test]
fn missing_input_exits_with_stage_name() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = cobridge(&[
        "ingest",
        "--edges",
        s(&tmp.path().join("nope.tsv")),
        "--left-meta",
        "x",
        "--right-meta",
        "y",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ingest"));

    let o = cobridge(&["bridge", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bridge"));
}

#[test]
fn verify_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    let out = tmp.path().join("run");
    assert!(ingest(tmp.path(), &out).status.success());
    assert!(cobridge(&["verify", "--out", s(&out)]).status.success());
    fs::write(out.join("graph.edges.tsv"), "a0\tk0\n").unwrap();
    let o = cobridge(&["verify", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("MISMATCH\tgraph.edges.tsv"));
}
