//! The core library used the way a downstream tool would.

use art9_core::isa::{assemble, decode, disassemble};
use art9_core::sim::{run_functional, run_pipelined, MachineState, MemoryKind};
use art9_core::techmodel::{dmips_per_mhz, efficiency};
use art9_core::transpiler::{transpile, TranspileOptions};
use art9_core::{ProgramImage, Reg, Word9};

fn boot(image: &ProgramImage) -> MachineState {
    let mut st = MachineState::new();
    st.load_image(image, MemoryKind::Tim).unwrap();
    st
}

/// Sum of 1..=n, counting down.
const SUM: &str = "\
        LI   T1, 20
        LUI  T2, 0
loop:   ADD  T2, T1
        ADDI T1, -1
        MV   T8, T1
        COMP T8, T0
        BNE  T8, 0, loop
        STORE T2, T0, 7
        HALT
";

#[test]
fn assemble_run_both_modes() {
    let image = assemble(SUM).unwrap();
    let mut f = boot(&image);
    let mut p = f.clone();
    run_functional(&mut f, 10_000).unwrap();
    let stats = run_pipelined(&mut p, 10_000, false).unwrap();
    assert_eq!(f, p);
    assert_eq!(f.reg(Reg::T2).balanced(), 210);
    assert_eq!(f.tdm.read(Word9::from_balanced(7)).balanced(), 210);
    assert_eq!(stats.cycles, f.retired + 4 + stats.stalls() + stats.branch_squashes);
}

#[test]
fn disassembly_reassembles() {
    let image = assemble(SUM).unwrap();
    let again = assemble(&disassemble(&image)).unwrap();
    // Labels are not recoverable, only the words.
    assert_eq!(image.words, again.words);
    for w in &image.words {
        decode(*w).unwrap();
    }
}

#[test]
fn transpiled_rv_program_computes() {
    let src = "\
        li   a0, 0
        li   a1, 1
        li   a2, 11
loop:   add  a0, a0, a1
        addi a1, a1, 1
        bne  a1, a2, loop
        sw   a0, 400(zero)
";
    let t = transpile(src, &TranspileOptions::default()).unwrap();
    let mut st = boot(&t.image);
    run_functional(&mut st, 100_000).unwrap();
    assert!(st.halted);
    assert_eq!(st.tdm.read(Word9::from_balanced(100)).balanced(), 55);
}

#[test]
fn efficiency_chain() {
    let d = dmips_per_mhz(1342.0).unwrap();
    let e = efficiency(d, 150.0, 1.09).unwrap();
    assert!((e - 150.0 * d / 1.09).abs() < 1e-9);
}
