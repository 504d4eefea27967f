//! Random program generators shared by the integration tests.
#![allow(dead_code)]

use art9_core::isa::{encode, Format, Instruction, Opcode, Operands};
use art9_core::transpiler::{run_reference, RvState};
use art9_core::transpiler::parse_rv32i;
use art9_core::{ProgramImage, Reg, Trit};
use rand::Rng;

pub fn image_of(program: &[Instruction]) -> ProgramImage {
    let words = program.iter().map(|i| encode(i).expect("generated in range")).collect();
    ProgramImage::new(0, words)
}

fn reg(rng: &mut impl Rng) -> u8 {
    rng.gen_range(0..9)
}

fn imm_for(rng: &mut impl Rng, op: Opcode) -> i32 {
    let (lo, hi) = op.imm_range().expect("has an immediate");
    if rng.gen_bool(0.15) {
        if rng.gen_bool(0.5) { lo } else { hi }
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// A random register-register or register-immediate instruction with no
/// memory access and no control transfer.
pub fn random_alu(rng: &mut impl Rng) -> Instruction {
    let alu: Vec<Opcode> = Opcode::ALL
        .into_iter()
        .filter(|o| matches!(o.format(), Format::R | Format::I))
        .collect();
    let op = alu[rng.gen_range(0..alu.len())];
    let imm = if op.imm_width().is_some() { imm_for(rng, op) } else { 0 };
    Instruction::from_operands(op, Operands { ta: reg(rng), tb: reg(rng), b: 0, imm })
}

/// A straight-line body of `n` ALU instructions.
pub fn straight_line(rng: &mut impl Rng, n: usize) -> Vec<Instruction> {
    (0..n).map(|_| random_alu(rng)).collect()
}

/// A random program that always halts: control transfers only go forward,
/// never into the middle of a materialized JALR target, and the last word
/// is the halt idiom.
pub fn guarded_program(rng: &mut impl Rng, len: usize) -> Vec<Instruction> {
    let mut prog: Vec<Instruction> = Vec::with_capacity(len + 3);
    // Indices that must not be jumped to: the LI and JALR of a group.
    let mut inside = Vec::new();
    while prog.len() < len {
        let here = prog.len();
        match rng.gen_range(0..10) {
            0..=4 => prog.push(random_alu(rng)),
            5 | 6 => {
                let op = if rng.gen_bool(0.5) { Opcode::Load } else { Opcode::Store };
                let imm = imm_for(rng, op);
                prog.push(Instruction::from_operands(op, Operands { ta: reg(rng), tb: reg(rng), b: 0, imm }));
            }
            7 | 8 => {
                let cond = Reg::new(reg(rng)).unwrap();
                let b = Trit::ALL[rng.gen_range(0..3)];
                // Offsets are filled in once the layout is known.
                prog.push(if rng.gen_bool(0.5) {
                    Instruction::Beq { cond, b, offset: 0 }
                } else {
                    Instruction::Bne { cond, b, offset: 0 }
                });
            }
            9 if rng.gen_bool(0.5) => {
                // LUI/LI then JALR; the target is patched in later.
                let tb = Reg::new(reg(rng)).unwrap();
                prog.push(Instruction::i(Opcode::Lui, tb, 0));
                prog.push(Instruction::i(Opcode::Li, tb, 0));
                prog.push(Instruction::Jalr { ta: Reg::new(reg(rng)).unwrap(), tb, imm: 0 });
                inside.extend([here + 1, here + 2]);
            }
            _ => prog.push(Instruction::Jal { ta: Reg::new(reg(rng)).unwrap(), offset: 0 }),
        }
    }
    let halt = prog.len();
    prog.push(Instruction::HALT);
    let pick = |rng: &mut dyn rand::RngCore, from: usize, reach: usize| {
        let targets: Vec<usize> = (from + 1..=halt.min(from + reach)).filter(|t| !inside.contains(t)).collect();
        targets[rng.gen_range(0..targets.len())]
    };
    for i in 0..halt {
        match prog[i] {
            Instruction::Beq { cond, b, .. } => {
                prog[i] = Instruction::Beq { cond, b, offset: (pick(rng, i, 40) - i) as i16 };
            }
            Instruction::Bne { cond, b, .. } => {
                prog[i] = Instruction::Bne { cond, b, offset: (pick(rng, i, 40) - i) as i16 };
            }
            Instruction::Jal { ta, .. } => {
                prog[i] = Instruction::Jal { ta, offset: (pick(rng, i, 121) - i) as i16 };
            }
            Instruction::Jalr { tb, .. } => {
                let v = pick(rng, i, halt) as i32 - 9841;
                let hi = (v as f64 / 243.0).round() as i16;
                let lo = (v - hi as i32 * 243) as i16;
                prog[i - 2] = Instruction::i(Opcode::Lui, tb, hi);
                prog[i - 1] = Instruction::i(Opcode::Li, tb, lo);
            }
            _ => {}
        }
    }
    prog
}

/// Random straight-line RV-32I source over the supported subset. Returns
/// `None` when the reference run leaves the nine-trit value range.
pub fn random_rv_program(rng: &mut impl Rng, len: usize) -> Option<(String, RvState)> {
    let regs = ["x5", "x6", "x7", "x8", "x9", "x10", "x11", "x12", "x13", "x14", "x15"];
    let r = |rng: &mut _| regs[Rng::gen_range(rng, 0..regs.len())];
    let mut lines = Vec::new();
    for reg in regs.iter().take(4) {
        lines.push(format!("li {reg}, {}", rng.gen_range(-3000..=3000)));
    }
    for _ in 0..len {
        let (d, a, b) = (r(rng), r(rng), r(rng));
        let line = match rng.gen_range(0..14) {
            0 => format!("add {d}, {a}, {b}"),
            1 => format!("sub {d}, {a}, {b}"),
            2 => format!("addi {d}, {a}, {}", rng.gen_range(-2048..=2047)),
            3 => format!("li {d}, {}", rng.gen_range(-9841..=9841)),
            4 => format!("lui {d}, {}", rng.gen_range(-2..=2)),
            5 => format!("slli {d}, {a}, {}", rng.gen_range(0..4)),
            6 => format!("srli {d}, {a}, {}", rng.gen_range(0..32)),
            7 => format!("and {d}, {a}, {b}"),
            8 => format!("or {d}, {a}, {b}"),
            9 => format!("xor {d}, {a}, {b}"),
            10 => format!("andi {d}, {a}, {}", rng.gen_range(-2048..=2047)),
            11 => format!("xori {d}, {a}, {}", rng.gen_range(-2048..=2047)),
            12 => format!("sw {a}, {}(x0)", 4 * rng.gen_range(20..500)),
            _ => {
                if rng.gen_bool(0.5) {
                    format!("lw {d}, {}(x0)", 4 * rng.gen_range(20..500))
                } else {
                    format!("sw {a}, {}(sp)", -4 * rng.gen_range(0..100))
                }
            }
        };
        lines.push(line);
    }
    let src = lines.join("\n");
    let program = parse_rv32i(&src).expect("generated source parses");
    let reference = run_reference(&program, art9_core::transpiler::DEFAULT_STACK_TOP, 100_000).ok()?;
    reference.in_range.then_some((src, reference))
}
