use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use finex_core::io::load_index;
use finex_core::model::fixture;
use serde_json::Value;
use tempfile::TempDir;

fn finex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finex"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn fixture_matrix(dir: &TempDir) -> PathBuf {
    let values = fixture::matrix();
    let n = fixture::NAMES.len();
    let text: String = values
        .chunks(n)
        .map(|row| row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    write(dir, "fixture.csv", &text)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn build_fixture(dir: &TempDir, name: &str) -> (PathBuf, PathBuf) {
    let input = fixture_matrix(dir);
    let out = dir.path().join(name);
    let o = finex(&[
        "build",
        "--input",
        s(&input),
        "--data",
        "matrix",
        "--metric",
        "matrix",
        "--epsilon",
        "1.0",
        "--minpts",
        "4",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (input, out)
}

#[test]
fn build_fixture_index() {
    let dir = TempDir::new().unwrap();
    let (_, out) = build_fixture(&dir, "a.fnx");
    let index = load_index(&out, Some(&fixture::dataset())).unwrap();
    let finite = index
        .ordering()
        .entries()
        .iter()
        .filter(|e| e.core_distance.is_finite())
        .count();
    assert_eq!(finite, 6);
    let (_, again) = build_fixture(&dir, "b.fnx");
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn build_prints_summary() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "sets.txt", "1 2\n2 1\n3\n1 2 3\n");
    let out = dir.path().join("sets.fnx");
    let o = finex(&[
        "--json",
        "build",
        "--input",
        s(&input),
        "--data",
        "sets",
        "--metric",
        "jaccard",
        "--epsilon",
        "0.5",
        "--minpts",
        "2",
        "--out",
        s(&out),
    ]);
    let v = json(&o);
    assert_eq!(v["records"], 4);
    assert_eq!(v["n"], 3);
    assert!((v["dedup_ratio"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    let text = finex(&[
        "build",
        "--input",
        s(&input),
        "--data",
        "sets",
        "--metric",
        "jaccard",
        "--epsilon",
        "0.5",
        "--minpts",
        "2",
        "--out",
        s(&out),
    ]);
    assert!(stdout(&text).contains("n = 3"));
}

#[test]
fn seeded_builds_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = fixture_matrix(&dir);
    let mut images = Vec::new();
    for name in ["x.fnx", "y.fnx"] {
        let out = dir.path().join(name);
        let o = finex(&[
            "build",
            "--input",
            s(&input),
            "--data",
            "matrix",
            "--metric",
            "matrix",
            "--epsilon",
            "1",
            "--minpts",
            "4",
            "--seed",
            "17",
            "--out",
            s(&out),
        ]);
        assert!(o.status.success());
        images.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(images[0], images[1]);
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let input = fixture_matrix(&dir);
    let out = dir.path().join("x.fnx");
    let base = ["build", "--input", s(&input), "--out", s(&out), "--minpts", "4"];
    let cases: [&[&str]; 4] = [
        &["--data", "matrix", "--metric", "matrix", "--epsilon", "-1"],
        &["--data", "vectors", "--metric", "jaccard", "--epsilon", "1"],
        &[
            "--data",
            "matrix",
            "--metric",
            "matrix",
            "--epsilon",
            "1",
            "--backend",
            "kd-tree",
        ],
        &["--data", "matrix", "--metric", "matrix"],
    ];
    for extra in cases {
        let args: Vec<&str> = base.iter().chain(extra.iter()).copied().collect();
        assert_eq!(finex(&args).status.code(), Some(2), "{extra:?}");
    }
}

#[test]
fn data_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.txt", "1 2\na b\n");
    let out = dir.path().join("x.fnx");
    let o = finex(&[
        "build",
        "--input",
        s(&bad),
        "--data",
        "sets",
        "--metric",
        "jaccard",
        "--epsilon",
        "0.5",
        "--minpts",
        "2",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    // querying with a dataset the index was not built from
    let (_, index) = build_fixture(&dir, "fixture.fnx");
    let mut other = fixture::matrix();
    other[1] = 1.5;
    other[11] = 1.5;
    let text: String = other
        .chunks(11)
        .map(|r| r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    let other = write(&dir, "other.csv", &text);
    let labels = dir.path().join("l.csv");
    let o = finex(&[
        "query",
        "--index",
        s(&index),
        "--input",
        s(&other),
        "--epsilon-star",
        "0.5",
        "--out",
        s(&labels),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn epsilon_star_queries() {
    let dir = TempDir::new().unwrap();
    let (input, index) = build_fixture(&dir, "fixture.fnx");
    let labels = dir.path().join("labels.csv");
    let o = finex(&[
        "--json",
        "query",
        "--index",
        s(&index),
        "--input",
        s(&input),
        "--epsilon-star",
        "0.75",
        "--out",
        s(&labels),
    ]);
    let v = json(&o);
    assert_eq!(v["clusters"], 2);
    assert_eq!(v["noise_objects"], 1);
    assert_eq!(v["candidates_added"], 1);
    let csv = std::fs::read_to_string(&labels).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "object_id,cluster_id,is_core");
    assert_eq!(rows.len(), 12);
    assert!(rows.contains(&"1,-1,false"));

    let o = finex(&[
        "--json",
        "query",
        "--index",
        s(&index),
        "--input",
        s(&input),
        "--epsilon-star",
        "0.75",
        "--approx",
        "--out",
        s(&labels),
    ]);
    let v = json(&o);
    assert_eq!(v["clusters"], 2);
    assert_eq!(v["noise_objects"], 2);
    assert_eq!(v["distance_computations"], 0);
}

#[test]
fn minpts_star_queries() {
    let dir = TempDir::new().unwrap();
    let (input, index) = build_fixture(&dir, "fixture.fnx");
    let labels = dir.path().join("labels.csv");
    let o = finex(&[
        "--json",
        "query",
        "--index",
        s(&index),
        "--input",
        s(&input),
        "--minpts-star",
        "5",
        "--out",
        s(&labels),
    ]);
    assert_eq!(json(&o)["clusters"], 2);
    let o = finex(&[
        "query",
        "--index",
        s(&index),
        "--input",
        s(&input),
        "--minpts-star",
        "5",
        "--out",
        s(&labels),
    ]);
    assert!(stdout(&o).contains("2 clusters"));
}

#[test]
fn contract_violations_exit_4() {
    let dir = TempDir::new().unwrap();
    let (input, index) = build_fixture(&dir, "fixture.fnx");
    let labels = dir.path().join("labels.csv");
    for flag in [["--minpts-star", "3"], ["--epsilon-star", "1.5"]] {
        let o = finex(&[
            "query",
            "--index",
            s(&index),
            "--input",
            s(&input),
            flag[0],
            flag[1],
            "--out",
            s(&labels),
        ]);
        assert_eq!(o.status.code(), Some(4), "{flag:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("MinPts = 4") || err.contains("epsilon = 1"), "{err}");
    }
    let o = finex(&[
        "query",
        "--index",
        s(&index),
        "--input",
        s(&input),
        "--minpts-star",
        "5",
        "--epsilon-star",
        "0.5",
        "--out",
        s(&labels),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = finex(&[
        "query",
        "--index",
        s(&index),
        "--input",
        s(&input),
        "--minpts-star",
        "5",
        "--approx",
        "--out",
        s(&labels),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_fixture() {
    let dir = TempDir::new().unwrap();
    let input = fixture_matrix(&dir);
    let o = finex(&[
        "--json",
        "compare",
        "--input",
        s(&input),
        "--data",
        "matrix",
        "--metric",
        "matrix",
        "--epsilon",
        "1",
        "--minpts",
        "4",
        "--epsilon-stars",
        "0.75,1.0",
    ]);
    let v = json(&o);
    let rows = v.as_array().unwrap();
    assert_eq!(rows[0]["finex_recall"].as_f64().unwrap(), 5.0 / 6.0);
    assert_eq!(rows[0]["optics_recall"].as_f64().unwrap(), 2.0 / 6.0);
    assert_eq!(rows[0]["query_exact"], true);
    assert_eq!(rows[1]["finex_recall"].as_f64().unwrap(), 1.0);
    for r in rows {
        assert!(r["finex_recall"].as_f64() >= r["optics_recall"].as_f64());
    }
    let o = finex(&[
        "compare",
        "--input",
        s(&input),
        "--data",
        "matrix",
        "--metric",
        "matrix",
        "--epsilon",
        "1",
        "--minpts",
        "4",
        "--epsilon-stars",
        "0.5,1.2",
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn vectors_round_trip() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "v.csv", "x,y\n0,0\n0,1\n1,0\n10,10\n10,11\n50,50\n");
    let index = dir.path().join("v.fnx");
    let o = finex(&[
        "--json",
        "build",
        "--input",
        s(&input),
        "--header",
        "--standardize",
        "--data",
        "vectors",
        "--metric",
        "euclidean",
        "--epsilon",
        "0.5",
        "--minpts",
        "2",
        "--out",
        s(&index),
    ]);
    assert_eq!(json(&o)["n"], 6);
    let labels = dir.path().join("l.csv");
    // the query must load the data the same way
    let o = finex(&[
        "query",
        "--index",
        s(&index),
        "--input",
        s(&input),
        "--header",
        "--epsilon-star",
        "0.3",
        "--out",
        s(&labels),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = finex(&[
        "--json",
        "query",
        "--index",
        s(&index),
        "--input",
        s(&input),
        "--header",
        "--standardize",
        "--epsilon-star",
        "0.3",
        "--out",
        s(&labels),
    ]);
    assert!(json(&o)["clusters"].as_u64().unwrap() >= 1);
}

#[test]
fn serve_answers_http() {
    let dir = TempDir::new().unwrap();
    let (input, index) = build_fixture(&dir, "fixture.fnx");
    let mut child = Command::new(env!("CARGO_BIN_EXE_finex"))
        .args([
            "serve",
            "--index",
            s(&index),
            "--input",
            s(&input),
            "--port",
            "0",
            "--with-baselines",
        ])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut err = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    err.read_line(&mut line).unwrap();
    let addr = line
        .split("http://")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .to_string();
    line.clear();
    err.read_line(&mut line).unwrap();
    assert!(line.contains("index loaded"), "{line}");

    let get = |path: &str| {
        let mut stream = TcpStream::connect(&addr).unwrap();
        write!(
            stream,
            "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n"
        )
        .unwrap();
        let mut response = String::new();
        stream.read_to_string(&mut response).unwrap();
        response
    };
    let meta = get("/api/meta");
    assert!(meta.starts_with("HTTP/1.1 200"), "{meta}");
    assert!(meta.contains("\"core_count\":6"));
    let compare = get("/api/compare?epsilon_star=0.75");
    assert!(compare.starts_with("HTTP/1.1 200"), "{compare}");
    child.kill().unwrap();
    child.wait().unwrap();
}
