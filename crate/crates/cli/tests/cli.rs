use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("../../fixtures");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn epcount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epcount"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn count_engines_agree() {
    let (q, s) = (fixture("nested.query"), fixture("path_loop.structure"));
    for engine in ["brute", "ep"] {
        let o = epcount(&["count", &q, &s, "--engine", engine]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stdout(&o).trim(), "24");
    }
    let o = epcount(&["count", &fixture("path.query"), &s, "--engine", "pp"]);
    let brute = epcount(&["count", &fixture("path.query"), &s, "--engine", "brute"]);
    assert_eq!(stdout(&o), stdout(&brute));
}

#[test]
fn expand_prints_two_weighted_terms() {
    let o = epcount(&["expand", &fixture("three_paths.query")]);
    assert!(o.status.success());
    let out = stdout(&o);
    let coefficients: Vec<&str> = out.lines().map(|l| l.split(' ').next().unwrap()).collect();
    assert_eq!(coefficients, ["3", "-2"]);
}

#[test]
fn expand_with_sentences_needs_plus() {
    let o = epcount(&["expand", &fixture("paths_with_sentence.query")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--plus"));
    let o = epcount(&["expand", "--plus", &fixture("paths_with_sentence.query")]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l.starts_with("S ")));
}

#[test]
fn renamed_edges_are_counting_equivalent() {
    let o = epcount(&[
        "equiv",
        &fixture("edge_xy.query"),
        &fixture("edge_wz.query"),
        "--mode",
        "counting",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "equivalent (renaming witness: x↔w, y↔z)");
}

#[test]
fn witness_structure_is_printed_and_parses() {
    let o = epcount(&[
        "equiv",
        &fixture("edge_xy.query"),
        &fixture("path.query"),
        "--mode",
        "counting",
        "--witness",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("not equivalent"));
    let body: String = out.lines().skip(1).map(|l| format!("{l}\n")).collect();
    let sig = epcount_core::parse_formula(&std::fs::read_to_string(fixture("path.query")).unwrap())
        .unwrap()
        .signature()
        .clone();
    epcount_core::parse_structure(&body, &sig).expect("witness parses");
}

#[test]
fn logical_mode_rejects_different_liberal_sets() {
    let o = epcount(&[
        "equiv",
        &fixture("edge_xy.query"),
        &fixture("edge_wz.query"),
        "--mode",
        "logical",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn normalize_and_core() {
    let o = epcount(&["normalize", &fixture("paths_with_sentence.query")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).matches(" | ").count(), 3);
    let o = epcount(&["core", &fixture("loop.query")]);
    assert_eq!(stdout(&o).trim(), "lib(x): E(x,x)");
}

#[test]
fn classify_reports_first_case() {
    let o = epcount(&["classify", &fixture("three_paths.query"), "--width", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("case 1 (width threshold 1)"));
}

#[test]
fn distinguish_separates_every_query() {
    let o = epcount(&[
        "--json",
        "distinguish",
        &fixture("edge_xy.query"),
        &fixture("path.query"),
        &fixture("loop.query"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let counts = doc["counts"].as_object().unwrap();
    let mut values: Vec<&str> = counts.values().map(|v| v.as_str().unwrap()).collect();
    values.sort();
    values.dedup();
    assert_eq!(values.len(), 3);
}

#[test]
fn oracle_demo_recovers_term_counts() {
    let (q, s) = (fixture("nested.query"), fixture("path_loop.structure"));
    let o = epcount(&["oracle-demo", &q, &s, "--direction", "pp2ep"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut recovered: Vec<String> = stdout(&o)
        .lines()
        .filter_map(|l| l.trim().strip_prefix("recovered ").map(str::to_string))
        .collect();
    recovered.sort();
    assert_eq!(recovered, ["12", "16", "4"]);
    let o = epcount(&["oracle-demo", &q, &s, "--direction", "ep2pp"]);
    assert!(stdout(&o).ends_with("count 24\n"));
}

#[test]
fn json_count_is_a_decimal_string() {
    let o = epcount(&[
        "--json",
        "count",
        &fixture("nested.query"),
        &fixture("path_loop.structure"),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["count"], "24");
}

#[test]
fn selftest_passes() {
    let o = epcount(&["selftest", "--seed", "3", "--cases", "8"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(
        stdout(&o)
            .lines()
            .filter(|l| l.starts_with("[PASS]"))
            .count(),
        8
    );
}

#[test]
fn errors_carry_file_and_position() {
    let dir = std::env::temp_dir().join(format!("epcount-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.query");
    std::fs::write(&bad, "sig E/2\nquery q lib(x): E(x,\n").unwrap();
    let o = epcount(&[
        "count",
        bad.to_str().unwrap(),
        &fixture("path_loop.structure"),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.query:3:1:"), "{}", stderr(&o));
    let o = epcount(&["count", "missing.query", &fixture("path_loop.structure")]);
    assert_eq!(o.status.code(), Some(2));
    let o = epcount(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}
