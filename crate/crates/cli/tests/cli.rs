//! End-to-end runs of the `stm` binary on temporary files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TYPED: &str = "\
problem smti
types 4
type 1 side=m count=3 prefs=(2 3) 4
type 2 side=w count=2 prefs=1
type 3 side=w count=2 prefs=1
type 4 side=w count=3 prefs=1
";

const ONE_TOP: &str = "\
problem smti
types 2
type 1 side=m count=2 prefs=2
type 2 side=w count=2 prefs=1
except agent=m1 cand=w2 place=top
";

const HRC: &str = "\
problem hrc
types 4
type 1 side=r count=0 prefs=3 4
type 2 side=r count=0 prefs=3 4
type 3 side=h count=1 cap=1 prefs=(1 2)
type 4 side=h count=1 cap=1 prefs=(1 2)
couple types=(1,2) count=1 prefs=(3,4)
";

fn stm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_typed_max_size() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "t.txt", TYPED);
    let o = stm(&["solve", s(&f), "--objective", "max-size"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("size 3\n"), "{out}");
    assert!(out.contains("blocking_pairs 0\n"));
    assert!(out.contains("# solver flow"));
}

#[test]
fn solve_output_checks_back_as_stable() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "t.txt", TYPED);
    let m = write(&dir, "m.txt", &stdout(&stm(&["solve", s(&f)])));
    let o = stm(&["check", s(&f), s(&m)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# stable true"));
}

#[test]
fn check_flags_blocking_pairs() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "t.txt", TYPED);
    let m = write(&dir, "m.txt", "");
    let o = stm(&["check", s(&f), s(&m)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("# blocks m1 w1"));
}

#[test]
fn check_rejects_capacity_violation() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "t.txt", TYPED);
    let m = write(&dir, "m.txt", "pair m1 w1\npair m1 w2\n");
    assert_eq!(stm(&["check", s(&f), s(&m)]).status.code(), Some(4));
}

#[test]
fn quality_objectives_and_json() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "t.txt", TYPED);
    let o = stm(&["--format", "json", "solve", s(&f), "--objective", "exact-bp:2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["optimum"], 2);
    assert_eq!(v["blocking"]["blocking_pairs"].as_array().unwrap().len(), 2);
    let o = stm(&["solve", s(&f), "--objective", "min-ba", "--max-size"]);
    assert!(stdout(&o).contains("blocking_agents 0\n"));
    let o = stm(&["solve", s(&f), "--objective", "exact-bp:99"]);
    assert_eq!(o.status.code(), Some(2));
    let o = stm(&["solve", s(&f), "--objective", "fastest"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn exceptions_and_couples_dispatch() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "x.txt", ONE_TOP);
    let o = stm(&["solve", s(&f)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# solver matching"));
    assert!(stdout(&o).contains("size 2\n"));
    let f = write(&dir, "h.txt", HRC);
    let o = stm(&["solve", s(&f)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("size 2\n"));
}

#[test]
fn clique_gadget_round_trip() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "k3.txt", "3 3\n0 1\n1 2\n0 2\n");
    let o = stm(&["reduce", "clique", "--graph", s(&g), "--r", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let gadget = write(&dir, "gadget.txt", &stdout(&o));
    assert!(stdout(&o).contains("# edge 0 (0,1) -> m1"));
    let o = stm(&["solve", s(&gadget)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# solver oracle"));
    assert!(stdout(&o).contains("size 6\n"));
    let o = stm(&["oracle", "com", s(&gadget)]);
    assert!(stdout(&o).starts_with("complete_stable true"));
}

#[test]
fn two_exception_model_beyond_cap_is_unsupported() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "k4.txt", "4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
    let gadget = write(
        &dir,
        "gadget.txt",
        &stdout(&stm(&["reduce", "clique", "--graph", s(&g), "--r", "3"])),
    );
    let o = stm(&["solve", s(&gadget)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("oracle only"));
}

#[test]
fn bad_graph_and_missing_file_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "bad.txt", "2 1\n0 0\n");
    assert_eq!(
        stm(&["reduce", "clique", "--graph", s(&g), "--r", "1"]).status.code(),
        Some(4)
    );
    assert_eq!(stm(&["solve", "/nonexistent/file"]).status.code(), Some(4));
}

#[test]
fn gen_is_deterministic() {
    let a = stm(&["gen", "--seed", "7", "--model", "1top", "--exception", "0"]);
    let b = stm(&["gen", "--seed", "7", "--model", "1top", "--exception", "0"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(!stdout(&a).contains("except"));
    let h = stm(&["gen", "--seed", "3", "--kind", "hrc", "--model", "hrc", "--couples", "1"]);
    assert!(stdout(&h).contains("couple types="));
}

#[test]
fn oracle_and_ip_subcommands() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "t.txt", TYPED);
    let o = stm(&["oracle", "max-stable", s(&f)]);
    assert!(stdout(&o).contains("size 3\n"));
    let o = stm(&["oracle", "count", s(&f)]);
    assert!(stdout(&o).contains("stable 24"));
    let p = write(&dir, "p.ip", "max\nvar x 0 2\nvar y 0 2\nobj x + y\nst x + y <= 3\n");
    let o = stm(&["--jobs", "1", "ip", "--file", s(&p)]);
    assert!(stdout(&o).starts_with("value 3\n"));
    let p = write(&dir, "q.ip", "min\nvar x 0 1\nst x >= 2\n");
    assert_eq!(stm(&["ip", "--file", s(&p)]).status.code(), Some(2));
}
