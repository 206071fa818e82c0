mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use legaldmn::analytics::REPORT_FILES;

fn legaldmn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_legaldmn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn model(name: &str) -> String {
    common::mini_corpus_dir()
        .join("models")
        .join(format!("{name}.dmn"))
        .display()
        .to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(legaldmn(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(legaldmn(&[]).status.code(), Some(1));
    assert_eq!(legaldmn(&["validate"]).status.code(), Some(1));
    assert_eq!(legaldmn(&["--help"]).status.code(), Some(0));
    let o = legaldmn(&["generate", "x", "--out", "y"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("--stub"));
}

#[test]
fn validate_well_formed_and_broken_models() {
    let o = legaldmn(&["validate", &model("Outcome - GeluidProdWindturbine")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.dmn");
    fs::write(&bad, "<definitions><decision id='x'>").unwrap();
    assert_eq!(legaldmn(&["validate", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(legaldmn(&["validate", "/nonexistent/model.dmn"]).status.code(), Some(2));
}

#[test]
fn exec_strict_names_the_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let cases = dir.path().join("cases.jsonl");
    fs::write(
        &cases,
        "{\"in_electricity\": true, \"in_rotor\": true, \"in_farm\": false}\n",
    )
    .unwrap();
    let m = model("Outcome - GeluidProdWindturbine");
    let o = legaldmn(&["exec", &m, cases.to_str().unwrap(), "--strict"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("in_north_sea"), "{}", stderr(&o));

    let o = legaldmn(&["exec", &m, cases.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(line["case"], 0);
    assert!(line["result"]["output_value"].is_boolean());
}

#[test]
fn exec_emits_one_document_per_case() {
    let dir = tempfile::tempdir().unwrap();
    let cases = dir.path().join("cases.jsonl");
    fs::write(
        &cases,
        concat!(
            "{\"in_electricity\": true, \"in_rotor\": true, \"in_farm\": false, \"in_north_sea\": false}\n",
            "{\"in_electricity\": false, \"in_rotor\": true, \"in_farm\": false, \"in_north_sea\": false}\n",
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    let m = model("Outcome - GeluidProdWindturbine");
    let o = legaldmn(&[
        "exec",
        &m,
        cases.to_str().unwrap(),
        "--strict",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("Outcome - GeluidProdWindturbine.results.jsonl")).unwrap();
    let docs: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(docs.len(), 2);
    assert_eq!(docs[0]["result"]["output_value"], true);
    assert_eq!(docs[1]["result"]["output_value"], false);
}

#[test]
fn gen_cases_then_equivalence_with_self() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let m = model("Requirements - AlarminstallatieHebben");
    let o = legaldmn(&["gen-cases", &m, "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cases = dir.path().join("Requirements - AlarminstallatieHebben.cases.jsonl");
    assert_eq!(fs::read_to_string(&cases).unwrap().lines().count(), 36);

    let o = legaldmn(&["equivalence", &m, &m, cases.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = fs::read_to_string(dir.path().join("equivalence_summary.csv")).unwrap();
    assert_eq!(
        summary.lines().nth(1).unwrap(),
        "Requirements - AlarminstallatieHebben,36,36,1.000000,true"
    );
    let verdicts = fs::read_to_string(
        dir.path()
            .join("Requirements - AlarminstallatieHebben.equivalence.jsonl"),
    )
    .unwrap();
    assert_eq!(verdicts.lines().count(), 36);

    let o = legaldmn(&["gen-cases", &m, "--max-cases", "10", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simplify_writes_model_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("Requirements - AlarminstallatieHebben");
    let o = legaldmn(&["simplify", &m, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let simplified = dir.path().join("Requirements - AlarminstallatieHebben.simplified.json");
    let o = legaldmn(&["validate", simplified.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(
        &fs::read(
            dir.path()
                .join("Requirements - AlarminstallatieHebben.simplify_report.json"),
        )
        .unwrap(),
    )
    .unwrap();
    assert!(!report["report"]["removed_node_ids"].as_array().unwrap().is_empty());
    assert!(report["chains"]["ur_nodes"].as_u64().unwrap() > 0);
}

#[test]
fn stats_and_kernel_emit_csv_rows() {
    let o = legaldmn(&["stats", common::mini_corpus_dir().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("model_id,metric,value"));
    assert_eq!(text.lines().count(), 1 + 6 * legaldmn::structeval::METRIC_NAMES.len());
    assert!(text.contains("Outcome - GeluidProdWindturbine,nodes,"));

    let a = model("Outcome - GeluidProdWindturbine");
    let b = model("Outcome - LozenIndustrieel");
    let o = legaldmn(&["kernel", &a, &a, &b]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Outcome - GeluidProdWindturbine,sp,1\n"));
    assert!(text.contains("Outcome - GeluidProdWindturbine,graphlet,1\n"));
    assert_eq!(text.lines().count(), 5);
    let o = legaldmn(&["kernel", &a, &b, "--undirected"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn ingest_writes_manifest_and_compact_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let o = legaldmn(&[
        "ingest",
        common::mini_corpus_dir().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.as_object().unwrap().len(), 6);
    let compact = dir.path().join("compact/Outcome - GeluidProdWindturbine.json");
    assert_eq!(
        legaldmn(&["validate", compact.to_str().unwrap()]).status.code(),
        Some(0)
    );
}

fn read_tree(root: &Path, rel: &str) -> Vec<u8> {
    fs::read(root.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn reproduce_stub_then_analyze_and_report_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rep");
    let o = legaldmn(&[
        "reproduce",
        "--stub",
        "--seed",
        "3",
        "--runs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in REPORT_FILES {
        assert!(out.join("report").join(f).is_file(), "{f}");
    }
    let config: serde_json::Value = serde_json::from_slice(&read_tree(&out, "config.json")).unwrap();
    assert_eq!(config["seed"], 3);

    let corpus = common::mini_corpus_dir();
    let records = out.join("runs");
    let rep = dir.path().join("report-again");
    let o = legaldmn(&[
        "report",
        corpus.to_str().unwrap(),
        "--records",
        records.to_str().unwrap(),
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in REPORT_FILES {
        assert_eq!(read_tree(&out.join("report"), f), read_tree(&rep, f), "{f}");
    }
    let an = dir.path().join("an");
    let o = legaldmn(&[
        "analyze",
        corpus.to_str().unwrap(),
        "--records",
        records.to_str().unwrap(),
        "--out",
        an.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read_tree(&out, "analysis.json"), read_tree(&an, "analysis.json"));

    let gen = dir.path().join("gen");
    let o = legaldmn(&[
        "generate",
        corpus.to_str().unwrap(),
        "--stub",
        "--seed",
        "3",
        "--runs",
        "2",
        "--conditions",
        "text,text+io",
        "--out",
        gen.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(gen.join("runs.jsonl")).unwrap().lines().count(),
        6 * 2 * 2
    );
}

#[test]
fn inputs_are_not_modified() {
    let m = model("Outcome - LozenIndustrieel");
    let before = fs::read(&m).unwrap();
    let dir = tempfile::tempdir().unwrap();
    legaldmn(&["simplify", &m, "--out", dir.path().to_str().unwrap()]);
    legaldmn(&["gen-cases", &m, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(fs::read(&m).unwrap(), before);
}
