//! The fixture programs compute what they claim, checked against plain Rust.

use art9::bench::{run_both, BENCH_LIMIT};
use art9::fixtures::FIXTURES;
use art9_core::isa::assemble;
use art9_core::sim::MachineState;
use art9_core::transpiler::{transpile, TranspileOptions};
use art9_core::{ProgramImage, Word9};

fn fixture(name: &str) -> &'static art9::fixtures::Fixture {
    FIXTURES.iter().find(|f| f.name == name).expect("known fixture")
}

fn finish(image: &ProgramImage) -> MachineState {
    let runs = run_both(image, BENCH_LIMIT).expect("runs to completion");
    assert!(runs.agree(), "pipelined and functional final states differ");
    assert!(runs.functional.halted);
    runs.functional
}

fn art(name: &str) -> MachineState {
    finish(&assemble(fixture(name).art9).expect("assembles"))
}

fn rv(name: &str) -> MachineState {
    let t = transpile(fixture(name).rv32i, &TranspileOptions::default()).expect("transpiles");
    finish(&t.image)
}

fn read(st: &MachineState, addr: i32, n: usize) -> Vec<i32> {
    (0..n as i32).map(|i| st.tdm.read(Word9::from_balanced(addr + i)).balanced()).collect()
}

/// The value of the low three trits of `v`.
fn low3(v: i32) -> i32 {
    (v + 13).rem_euclid(27) - 13
}

fn wrap(v: i32) -> i32 {
    Word9::from_balanced(v).balanced()
}

fn sorted(mut v: Vec<i32>) -> Vec<i32> {
    v.sort_unstable();
    v
}

fn matmul4(a: &[i32], b: &[i32]) -> Vec<i32> {
    let mut c = vec![0; 16];
    for i in 0..4 {
        for j in 0..4 {
            c[i * 4 + j] = (0..4).map(|k| a[i * 4 + k] * b[k * 4 + j]).sum();
        }
    }
    c
}

/// |gx| + |gy| over the 6x6 interior of an 8x8 image, row major.
fn sobel(p: &[i32]) -> Vec<i32> {
    let at = |r: usize, c: usize| p[r * 8 + c];
    let mut out = Vec::new();
    for r in 1..7 {
        for c in 1..7 {
            let gx = at(r - 1, c + 1) + 2 * at(r, c + 1) + at(r + 1, c + 1)
                - at(r - 1, c - 1)
                - 2 * at(r, c - 1)
                - at(r + 1, c - 1);
            let gy = at(r + 1, c - 1) + 2 * at(r + 1, c) + at(r + 1, c + 1)
                - at(r - 1, c - 1)
                - 2 * at(r - 1, c)
                - at(r - 1, c + 1);
            out.push(gx.abs() + gy.abs());
        }
    }
    out
}

/// A wrapping counter stepped before each store, keeping the low three trits.
fn art_series(seed: i32, step: i32, n: usize) -> Vec<i32> {
    (1..=n as i32).map(|k| low3(seed + k * step)).collect()
}

/// A counter stored before each step, folded back by 13 past `top`.
fn rv_series(mut v: i32, top: i32, n: usize) -> Vec<i32> {
    let mut out = Vec::new();
    for _ in 0..n {
        out.push(v);
        v += 5;
        if v > top {
            v -= 13;
        }
    }
    out
}

#[test]
fn art9_bubble_sort_sorts_its_input() {
    let st = art("bubble_sort");
    let input: Vec<i32> = (0..12).map(|k| wrap(1232 + k * 4122)).collect();
    assert_eq!(read(&st, 100, 12), sorted(input));
}

#[test]
fn rv_bubble_sort_sorts_its_input() {
    let st = rv("bubble_sort");
    let mut v = 1232;
    let mut input = Vec::new();
    for _ in 0..12 {
        input.push(v);
        v += 4122;
        if v >= 5000 {
            v -= 9000;
        }
    }
    assert_eq!(read(&st, 100, 12), sorted(input));
}

#[test]
fn art9_gemm_multiplies() {
    let st = art("gemm4");
    let ab = art_series(776, 2750, 32);
    assert_eq!(read(&st, 30, 32), ab);
    assert_eq!(read(&st, 62, 16), matmul4(&ab[..16], &ab[16..]));
}

#[test]
fn rv_gemm_multiplies() {
    let st = rv("gemm4");
    let ab = rv_series(3, 6, 32);
    assert_eq!(read(&st, 100, 32), ab);
    assert_eq!(read(&st, 132, 16), matmul4(&ab[..16], &ab[16..]));
}

#[test]
fn art9_sobel_matches() {
    let st = art("sobel8");
    let img = art_series(577, 1651, 64);
    assert_eq!(read(&st, -100, 64), img);
    assert_eq!(read(&st, 10, 36), sobel(&img));
}

#[test]
fn rv_sobel_matches() {
    let st = rv("sobel8");
    let img = rv_series(4, 12, 64);
    assert_eq!(read(&st, 200, 64), img);
    assert_eq!(read(&st, 300, 36), sobel(&img));
}
