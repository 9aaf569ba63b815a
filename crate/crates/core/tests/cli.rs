mod common;

use std::path::Path;
use std::process::{Command, Output};

use clpslice_core::cli::{SliceReport, StatsTable};

const COUNTEREXAMPLE: &str = "p(B) :- {B=A+1}, q(A,B).\nq(-2,B).\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clpslice")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn example(name: &str) -> String {
    common::corpus_dir().join(name).display().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn dynamic_slice_marks_the_listing() {
    let o = run(&["slice", &example("example1.clp"), "-g", "p(X,Y,Z)", "--at", "n0/1/3", "--mode", "dynamic"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("p(X,Y,[[Z]]) :- {X-Y=1}, q(X,Y), r([[Z]])."), "{out}");
    assert!(out.contains("r([[42]])."));
    assert!(out.contains("q(U,V) :- {U+V=3}."));
    assert!(out.contains("store: {Z=Z#1, Z#1=42}"));
}

#[test]
fn files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("s.dot");
    let json = dir.path().join("s.json");
    let o = run(&[
        "slice",
        &example("example1.clp"),
        "-g",
        "p(X,Y,Z)",
        "--at",
        "n0/1/3",
        "--dot",
        dot.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dot = std::fs::read_to_string(dot).unwrap();
    assert!(dot.starts_with("digraph"));
    let report: SliceReport = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(report.criterion, "n0/1/3");
    assert_eq!(report.tree_positions.len(), 4);
    assert_eq!(report.slice_store, ["Z=Z#1", "Z#1=42"]);
    assert!(report.annotation_used);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["slice", &example("example1.clp"), "-g", "p(X,Y,Z)"]).status.code(), Some(1));
    let o = run(&["slice", &example("example1.clp"), "-g", "p(X,Y,Z)", "--at", "n9/0/1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("does not exist"));
    let o = run(&["slice", &example("example1.clp"), "-g", "p(X,Y,Z)", "--at", "n0/1/3", "--undirected", "--raw-annotation"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["tree", "/nonexistent/file.clp", "-g", "p"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn no_solution_exits_two() {
    let o = run(&["tree", &example("example1.clp"), "-g", "p(1,2,Z)"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let looping = write(dir.path(), "loop.clp", "p :- p.\n");
    let o = run(&["tree", &looping, "-g", "p", "--depth", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("depth limit"), "{}", stderr(&o));
}

#[test]
fn oracle_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "cx.clp", COUNTEREXAMPLE);
    let raw = run(&["slice", &p, "-g", "p(X)", "--at", "n2/0/2", "--raw-annotation", "--oracle-domain", "-5..5"]);
    assert_eq!(raw.status.code(), Some(3));
    assert!(stdout(&raw).contains("store: {B#1=B#2}"));
    assert!(stdout(&raw).contains("FAILED"));
    let refined = run(&["slice", &p, "-g", "p(X)", "--at", "n2/0/2", "--oracle-domain", "-5..5"]);
    assert_eq!(refined.status.code(), Some(0), "{}", stderr(&refined));
    assert!(stdout(&refined).contains("passed"));
}

#[test]
fn static_and_tree_commands() {
    let o = run(&["static", &example("example1.clp"), "-g", "p(X,Y,Z)", "--at", "0/0/3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("  1  q(U,V) :- {U+V=3}.\n"), "{out}");
    assert!(out.contains("  2  r([[42]]).\n"));
    let o = run(&["tree", &example("example1.clp"), "-g", "p(X,Y,Z)"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("n0")));
    assert!(out.contains("n3 <- n1/3"), "{out}");
    assert!(out.contains("n0/1/3\tZ"));
}

#[test]
fn stats_table() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.goals", "% nothing\n\n");
    let o = run(&["stats", &example("example1.clp"), &empty]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
    assert!(stdout(&o).starts_with("GOAL"));

    let goals = write(dir.path(), "g.goals", "p(1,2,Z)\np(X,Y,Z)\n");
    let json = dir.path().join("t.json");
    let o = run(&["stats", &example("example1.clp"), &goals, "--json", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains("FAILED"));
    let table: StatsTable = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert!(table.rows[0].failure.is_some());
    let row = &table.rows[1];
    assert_eq!((row.tree_nodes, row.tree_argpos, row.slices), (4, 12, 12));
    assert!(row.avg_argpos_pct < row.avg_argpos_pct_undirected);
}
