//! The `htcc` executable: exit codes, diagnostics and output files.

mod common;

use std::path::Path;
use std::process::{Command, Output};

fn htcc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htcc"))
        .args(args)
        .env("HTCC_COLOR", "never")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn corpus(name: &str) -> String {
    common::corpus_path(name).to_str().unwrap().to_string()
}

#[test]
fn compile_writes_next_to_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "add3.hs", &common::corpus_source("add3"));
    let o = htcc(&["compile", &src]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = std::fs::read_to_string(dir.path().join("add3.hcc")).unwrap();
    assert_eq!(out, std::fs::read_to_string(common::golden_path("add3")).unwrap());
}

#[test]
fn compile_to_stdout_and_named_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = htcc(&["compile", &corpus("or"), "--target", "generic", "-o", "-"]);
    assert!(o.status.success());
    assert!(!stdout(&o).contains("set clock"));
    let target = dir.path().join("x.hcc");
    let o = htcc(&["compile", &corpus("or"), "--target", "de2-70", "-o", target.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(&target).unwrap().contains("external\"AD15\""));
}

#[test]
fn type_errors_exit_3_with_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "bad.hs", "f :: Int -> (Int, Int)\nf x = x + 1\n");
    let o = htcc(&["compile", &src]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.starts_with(&format!("error: {src}:2:")), "{err}");
    assert!(!dir.path().join("bad.hcc").exists());
}

#[test]
fn syntax_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "bad.hs", "f :: Int -> Int\nf x = (x + \n");
    let o = htcc(&["compile", &src]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.hs:"));
    assert!(!dir.path().join("bad.hcc").exists());
}

#[test]
fn refine_errors_exit_4_and_leave_no_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "full.hs", &common::corpus_source("xtea_full"));
    let o = htcc(&["compile", &src]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("bound"), "{}", stderr(&o));
    assert!(std::fs::read_dir(dir.path()).unwrap().count() == 1);
}

#[test]
fn usage_and_io_errors_exit_1() {
    assert_eq!(htcc(&["compile", "/nonexistent/x.hs"]).status.code(), Some(1));
    assert_eq!(htcc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(htcc(&["compile", &corpus("vector_add3"), "--vec-len", "x"]).status.code(), Some(1));
}

#[test]
fn run_prints_hex_results() {
    let o = htcc(&["run", &corpus("add3"), "--args", "5"]);
    assert_eq!(stdout(&o), "0x00000008\n");
    let o = htcc(&["run", &corpus("mul_zip"), "--args", "[1,2,3],[4,5,6]"]);
    assert_eq!(stdout(&o), "[0x00000004, 0x0000000A, 0x00000012]\n");
}

#[test]
fn run_division_by_zero_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "d.hs", "d :: Int -> Int -> Int\nd a b = a / b\n");
    let o = htcc(&["run", &src, "--args", "1,0"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("division by zero"));
}

#[test]
fn simulate_reports_outputs_cycles_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.txt");
    let o = htcc(&["simulate", &corpus("add3"), "--inputs", "INPUT0=5", "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("OUTPUT0 = 0x00000008"));
    assert!(out.contains("status: completed"));
    assert!(out.contains("cycles: 2"));
    let t = std::fs::read_to_string(trace).unwrap();
    assert!(t.starts_with("cycle 0: main/PRODUCE send main/item0 0x00000005\n"), "{t}");
}

#[test]
fn simulate_accepts_entry_arguments() {
    let o = htcc(&["simulate", &corpus("xtea_full"), "--unroll", "2", "--args", "0,(1,2),3,4,5,6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = htcc(&["run", &corpus("xtea_full"), "--args", "2,0,(1,2),3,4,5,6"]);
    let want = stdout(&run);
    assert!(stdout(&o).contains(&format!("result = {}", want.trim())));
}

#[test]
fn simulate_timeout_exits_5() {
    let o = htcc(&["simulate", &corpus("add3"), "--inputs", "INPUT0=5", "--max-cycles", "1"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("timeout"), "{}", stderr(&o));
}

#[test]
fn check_passes_and_prints_json() {
    let o = htcc(&["check", &corpus("or"), "--cases", "200", "--seed", "3", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["cases_run"], 200);
    assert_eq!(v["mismatch_count"], 0);
    assert_eq!(v["seed"], 3);
}

#[test]
fn emit_dumps_each_stage() {
    let add3 = corpus("add3");
    let tokens = stdout(&htcc(&["emit", &add3, "--kind", "tokens"]));
    assert!(tokens.contains("add3"));
    let ast = stdout(&htcc(&["emit", &add3, "--kind", "ast"]));
    assert!(!ast.is_empty());
    let types = stdout(&htcc(&["emit", &add3, "--kind", "types"]));
    assert!(types.contains("add3"));
    let net = stdout(&htcc(&["emit", &add3, "--kind", "net"]));
    assert!(net.contains("call STORE(item1, OUTPUT0)"));
}
