//! The `art9` binary end to end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

fn art9(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_art9")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    format!("{FIXTURES}/{name}")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// The state digest lines, up to and including `retired:`.
fn digest(out: &str) -> Vec<&str> {
    let mut lines = Vec::new();
    for l in out.lines() {
        lines.push(l);
        if l.starts_with("retired:") {
            return lines;
        }
    }
    panic!("no digest in {out}");
}

#[test]
fn asm_disasm_asm_is_stable() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("a.tmem");
    let o = art9(&["asm", &fixture("gemm4.s"), "-o", s(&first)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let listing = dir.path().join("a.s");
    let o = art9(&["disasm", s(&first), "-o", s(&listing)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let second = dir.path().join("b.tmem");
    let o = art9(&["asm", s(&listing), "-o", s(&second)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn asm_to_stdout() {
    let o = art9(&["asm", &fixture("bubble_sort.s")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 31);
}

#[test]
fn both_modes_reach_the_same_state() {
    let f = art9(&["run", &fixture("sobel8.s")]);
    let p = art9(&["run", &fixture("sobel8.s"), "--mode", "pipeline"]);
    assert!(f.status.success() && p.status.success());
    let (fo, po) = (stdout(&f), stdout(&p));
    assert_eq!(digest(&fo), digest(&po));
    assert!(po.contains("cycles: 2730"), "{po}");
    assert!(po.contains("load_use_stalls:"));
}

#[test]
fn assembled_image_runs_like_source() {
    let dir = TempDir::new().unwrap();
    let img = dir.path().join("b.tmem");
    assert!(art9(&["asm", &fixture("bubble_sort.s"), "-o", s(&img)]).status.success());
    let a = art9(&["run", s(&img)]);
    let b = art9(&["run", &fixture("bubble_sort.s")]);
    assert_eq!(digest(&stdout(&a)), digest(&stdout(&b)));
}

#[test]
fn iterations_give_per_iteration_figures() {
    let o = art9(&["run", &fixture("bubble_sort.s"), "--mode", "pipeline", "--iterations", "1"]);
    let out = stdout(&o);
    assert!(out.contains("cycles_per_iteration: 907"), "{out}");
    assert!(out.contains("dmips_per_mhz:"));
}

#[test]
fn timeout_is_a_domain_error() {
    let o = art9(&["run", &fixture("gemm4.s"), "--mode", "pipeline", "--max-cycles", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("timeout"));
}

#[test]
fn illegal_instruction_is_a_domain_error() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.s", "NOP\n.word 0t+0++00000\n");
    let o = art9(&["run", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("illegal instruction"));
}

#[test]
fn bad_assembly_is_a_domain_error() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.s", "ADDI T1, 14\n");
    let o = art9(&["asm", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn missing_file_and_bad_flags_are_usage_errors() {
    assert_eq!(art9(&["run", "/nonexistent/x.s"]).status.code(), Some(2));
    assert_eq!(art9(&["run"]).status.code(), Some(2));
    assert_eq!(art9(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(art9(&["run", &fixture("gemm4.s"), "--trace", "t.csv"]).status.code(), Some(2));
}

#[test]
fn help_succeeds() {
    let o = art9(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("transpile"));
}

#[test]
fn trace_is_csv() {
    let dir = TempDir::new().unwrap();
    let t = dir.path().join("t.csv");
    let o = art9(&["run", &fixture("bubble_sort.s"), "--mode", "pipeline", "--trace", s(&t)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&t).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("cycle,IF,ID,EX,MEM,WB,pc"));
    assert_eq!(lines.count(), 907);
}

#[test]
fn data_file_seeds_memory() {
    let dir = TempDir::new().unwrap();
    // TDM index 9842 is balanced address 1.
    let data = write(&dir, "d.tmem", "base 9842\n0000000+-\n");
    let prog = write(&dir, "p.s", "LOAD T3, T0, 1\nHALT\n");
    let o = art9(&["run", s(&prog), "--data", s(&data)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("T3: 0000000+- (2)"), "{}", stdout(&o));
}

#[test]
fn transpile_writes_assembly_and_image() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("g.s");
    let img = dir.path().join("g.tmem");
    let o = art9(&["transpile", &fixture("gemm4.rv.s"), "-o", s(&out), "--image", s(&img)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stdout(&o).is_empty());
    let image = fs::read_to_string(&img).unwrap();
    assert_eq!(image.lines().count(), 105);
    let run = art9(&["run", s(&out)]);
    assert!(run.status.success());
    assert_eq!(digest(&stdout(&run)), digest(&stdout(&art9(&["run", s(&img)]))));
}

#[test]
fn transpile_rejects_unsupported_input() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "m.s", "mul a0, a1, a2\n");
    assert_eq!(art9(&["transpile", s(&p)]).status.code(), Some(1));
}

#[test]
fn estimate_from_netlist() {
    let o = art9(&[
        "estimate",
        "--tech",
        &fixture("cntfet32-art9.tech"),
        "--netlist",
        &fixture("cntfet32-art9.struct"),
        "--cycles-per-iter",
        "1342",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("total_gates: 652"), "{out}");
    assert!(out.contains("critical_delay_ps: 3215"), "{out}");
    assert!(out.trim_end().lines().last().unwrap().starts_with("dmips_per_watt:"));
}

#[test]
fn estimate_from_figures() {
    let o = art9(&["estimate", "--freq-mhz", "150", "--power-w", "1.1", "--dmips-per-mhz", "0.42"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("dmips_per_watt:"));
    let o = art9(&["estimate", "--freq-mhz", "150", "--dmips-per-mhz", "0.42"]);
    assert_eq!(o.status.code(), Some(2));
    let o = art9(&["estimate", "--tech", &fixture("cntfet32-art9.tech"), "--dmips-per-mhz", "0.42"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_prints_every_fixture() {
    let o = art9(&["bench"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 7);
    for name in ["bubble_sort", "gemm4", "sobel8", "sobel8.rv"] {
        assert!(out.contains(name));
    }
}
