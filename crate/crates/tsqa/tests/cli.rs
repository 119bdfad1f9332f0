use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn tsqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsqa"))
        .args(args)
        .env_remove("TSQA_ADAPTER_CMD")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_reports_counts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixtures().join("table1.csv");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out = tsqa(&["ingest", path(&csv), "--out", path(&a)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // One most-common sentence per non-subject column; none is numeric.
    assert_eq!(
        stdout(&out).trim(),
        "1 table, 12 triples, 3 row sentences, 4 aggregation sentences"
    );
    assert!(tsqa(&["ingest", path(&csv), "--out", path(&b)])
        .status
        .success());
    for f in ["store.json", "index.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let again = tsqa(&["ingest", path(&csv), "--out", path(&a)]);
    assert!(again.status.success());
    assert_eq!(
        fs::read(a.join("store.json")).unwrap(),
        fs::read(b.join("store.json")).unwrap()
    );
}

#[test]
fn ingest_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = tsqa(&[
        "ingest",
        path(dir.path()),
        "--out",
        path(&dir.path().join("store")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no tables found"));
    assert!(out.stdout.is_empty());
}

#[test]
fn ingest_reports_ragged_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "a,b,c,d\n1,2,3\n").unwrap();
    let out = tsqa(&[
        "ingest",
        path(dir.path()),
        "--out",
        path(&dir.path().join("s")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad") && err.contains("row 1"), "{err}");
}

#[test]
fn ask_from_store() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    assert!(tsqa(&[
        "ingest",
        path(&fixtures().join("table1.csv")),
        "--out",
        path(&store)
    ])
    .status
    .success());
    let args = [
        "ask",
        "What is the data type of Paper 3?",
        "--table",
        "table1",
        "--bundle",
        path(&store),
        "--reader",
        "lexical",
    ];
    let out = tsqa(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let first: Vec<&str> = text.lines().next().unwrap().split('\t').collect();
    assert_eq!(first[0], "1");
    assert_eq!(first[2], "Quoted text");
    assert_eq!(first[3], "row 3 column \"Data type\"");
    assert_eq!(stdout(&tsqa(&args)), text);
}

#[test]
fn ask_unknown_table() {
    let out = tsqa(&[
        "ask",
        "What?",
        "--table",
        "nope",
        "--bundle",
        path(&fixtures().join("mini-orkgqa")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown table"));
}

#[test]
fn ask_single_cell_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("one.csv");
    fs::write(&csv, "Name,Colour\nWidget,Blue\n").unwrap();
    let out = tsqa(&[
        "ask",
        "What is the colour of Widget?",
        "--table",
        "one",
        "--bundle",
        path(&csv),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    for line in text.lines() {
        let answer = line.split('\t').nth(2).unwrap();
        assert!(["Blue", "Widget"].contains(&answer), "{answer}");
    }
}

#[test]
fn ask_external_without_command() {
    let out = tsqa(&[
        "ask",
        "What?",
        "--table",
        "t1",
        "--bundle",
        path(&fixtures().join("mini-orkgqa")),
        "--reader",
        "external",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("adapter"));
}

#[test]
fn ask_external_unlaunchable_adapter() {
    let out = tsqa(&[
        "ask",
        "What?",
        "--table",
        "t1",
        "--bundle",
        path(&fixtures().join("mini-orkgqa")),
        "--reader",
        "external",
        "--adapter-cmd",
        "/nonexistent/reader --model x",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("reader unavailable"));
}

fn bench(extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let bundle = fixtures().join("mini-orkgqa");
    let mut args = vec![
        "bench",
        "--bundle",
        path(&bundle),
        "--out",
        path(dir.path()),
    ];
    args.extend_from_slice(extra);
    let out = tsqa(&args);
    (out, dir)
}

#[test]
fn bench_grid_shape() {
    let (out, dir) = bench(&[
        "--systems",
        "random,lucene,lexical",
        "--k",
        "1,3,5,10",
        "--format",
        "csv,json,svg",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 2 + 3 * 4);
    let all: Vec<&str> = lines.filter(|l| l.starts_with("all,")).collect();
    let systems: Vec<&str> = all.iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(systems, ["random", "lucene", "lexical"]);
    assert!(dir.path().join("report.json").is_file());
    assert!(fs::read_to_string(dir.path().join("report.svg"))
        .unwrap()
        .starts_with("<svg"));
    assert!(stdout(&out).starts_with("qtype"));
}

#[test]
fn bench_qtype_filter() {
    let (out, dir) = bench(&["--systems", "lexical,random", "--qtype", "aggregation"]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let qtypes: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(qtypes, ["all", "all", "aggregation", "aggregation"]);
}

#[test]
fn bench_seed_is_reproducible() {
    let (_, a) = bench(&["--systems", "random", "--seed", "7"]);
    let (_, b) = bench(&["--systems", "random", "--seed", "7"]);
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("report.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn bench_unknown_system_lists_valid_ones() {
    let (out, _) = bench(&["--systems", "lexical,oracle"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("oracle") && err.contains("lexical, external, random, lucene"),
        "{err}"
    );
}

#[test]
fn bench_unknown_format() {
    let (out, _) = bench(&["--format", "xlsx"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("xlsx"));
}

#[test]
fn bench_tabmcq() {
    let dir = tempfile::tempdir().unwrap();
    let out = tsqa(&[
        "bench",
        "--dataset",
        "tabmcq",
        "--bundle",
        path(&fixtures().join("tabmcq-sample")),
        "--systems",
        "lexical",
        "--out",
        path(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("normal"));
}
