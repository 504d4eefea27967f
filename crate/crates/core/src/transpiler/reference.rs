//! Minimal evaluator for the supported RV-32I subset, used as the oracle for
//! differential tests of the transpiler.
//!
//! It follows the same word-addressed dialect the transpiler assumes: a
//! `lw`/`sw` byte offset is divided by 4 and added to the base register to
//! give a word address, and link registers hold instruction indices.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use core::fmt;

use super::rv::{RvOp, RvProgram, RvTarget};
use super::{RESERVED_HIGH, RESERVED_LOW};
use super::regalloc::{Loc, RegMap};
use crate::sim::MachineState;
use crate::ternary::{Word9, WORD_MAX};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefError {
    Timeout { limit: u64 },
    /// `lw`/`sw` byte offset not a multiple of 4.
    Misaligned { index: usize },
    /// Jump to an index outside the program.
    BadJump { index: usize, target: i64 },
}

impl fmt::Display for RefError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefError::Timeout { limit } => write!(f, "no halt within {limit} steps"),
            RefError::Misaligned { index } => write!(f, "instruction {index}: misaligned word offset"),
            RefError::BadJump { index, target } => write!(f, "instruction {index}: jump to {target}"),
        }
    }
}

impl core::error::Error for RefError {}

/// Final state of a reference run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RvState {
    pub regs: [i32; 32],
    /// Word address to value, for every word ever stored.
    pub mem: BTreeMap<i32, i32>,
    pub steps: u64,
    /// False once any register or memory value left the nine-trit range, or
    /// a memory access touched the reserved low window. Results of such a
    /// run are outside the transpiler's contract.
    pub in_range: bool,
}

fn fits(v: i32) -> bool {
    (-WORD_MAX..=WORD_MAX).contains(&v)
}

/// Runs `program` from instruction 0 with `sp` set to `stack_top`. Halts on
/// a transfer to itself or on falling off the end.
pub fn run_reference(program: &RvProgram, stack_top: i32, max_steps: u64) -> Result<RvState, RefError> {
    let labels = program.label_index();
    let code = &program.instructions;
    let mut st = RvState { in_range: true, ..RvState::default() };
    st.regs[2] = stack_top;
    let mut pc = 0usize;
    while pc < code.len() {
        if st.steps >= max_steps {
            return Err(RefError::Timeout { limit: max_steps });
        }
        st.steps += 1;
        let ins = &code[pc];
        let r = st.regs;
        let (a, b) = (r[ins.rs1 as usize], r[ins.rs2 as usize]);
        let target_of = |t: &Option<RvTarget>| match t {
            Some(RvTarget::Label(l)) => labels[l.as_str()],
            _ => pc,
        };
        let mut next = pc + 1;
        let mut write = None;
        match ins.op {
            RvOp::Add => write = Some(a.wrapping_add(b)),
            RvOp::Sub => write = Some(a.wrapping_sub(b)),
            RvOp::And => write = Some(a & b),
            RvOp::Or => write = Some(a | b),
            RvOp::Xor => write = Some(a ^ b),
            RvOp::Addi => write = Some(a.wrapping_add(ins.imm)),
            RvOp::Andi => write = Some(a & ins.imm),
            RvOp::Xori => write = Some(a ^ ins.imm),
            RvOp::Slli => write = Some(a.wrapping_shl(ins.imm as u32)),
            RvOp::Srli => write = Some(((a as u32) >> ins.imm) as i32),
            RvOp::Lui => write = Some(ins.imm.wrapping_shl(12)),
            RvOp::Li => write = Some(ins.imm),
            RvOp::Lw | RvOp::Sw => {
                if ins.imm % 4 != 0 {
                    return Err(RefError::Misaligned { index: pc });
                }
                let addr = a.wrapping_add(ins.imm / 4);
                if !fits(addr) || (RESERVED_LOW as i32..=RESERVED_HIGH as i32).contains(&addr) {
                    st.in_range = false;
                }
                if ins.op == RvOp::Lw {
                    write = Some(st.mem.get(&addr).copied().unwrap_or(0));
                } else {
                    st.in_range &= fits(b);
                    st.mem.insert(addr, b);
                }
            }
            RvOp::Beq | RvOp::Bne | RvOp::Blt | RvOp::Bge => {
                let taken = match ins.op {
                    RvOp::Beq => a == b,
                    RvOp::Bne => a != b,
                    RvOp::Blt => a < b,
                    _ => a >= b,
                };
                if taken {
                    let t = target_of(&ins.target);
                    if t == pc {
                        break;
                    }
                    next = t;
                }
            }
            RvOp::Jal => {
                write = Some(pc as i32 + 1);
                let t = target_of(&ins.target);
                if t == pc {
                    if ins.rd != 0 {
                        st.regs[ins.rd as usize] = pc as i32 + 1;
                    }
                    break;
                }
                next = t;
            }
            RvOp::Jalr => {
                write = Some(pc as i32 + 1);
                let t = a as i64 + ins.imm as i64;
                if t < 0 || t > code.len() as i64 {
                    return Err(RefError::BadJump { index: pc, target: t });
                }
                if t as usize == pc {
                    if ins.rd != 0 {
                        st.regs[ins.rd as usize] = pc as i32 + 1;
                    }
                    break;
                }
                next = t as usize;
            }
        }
        if let (Some(v), Some(rd)) = (write, ins.dest()) {
            if rd != 0 {
                st.in_range &= fits(v);
                st.regs[rd as usize] = v;
            }
        }
        pc = next;
    }
    Ok(st)
}

/// Checks the designated outputs of a transpiled run against the reference:
/// every allocated register except `x0` and `ra` (which holds a link
/// address in different units), and every memory word the reference
/// stored. Values compare modulo 3^9.
pub fn compare_outputs(reference: &RvState, art: &MachineState, map: &RegMap) -> Result<(), String> {
    for (rv, loc) in map.iter() {
        if rv <= 1 {
            continue;
        }
        let got = match loc {
            Loc::Reg(t) => art.reg(t),
            Loc::Spill(slot) => art.tdm.read(Word9::from_balanced(slot as i32)),
        };
        let want = Word9::from_balanced(reference.regs[rv as usize]);
        if got != want {
            return Err(format!("x{rv}: reference {} art {}", want.balanced(), got.balanced()));
        }
    }
    for (&addr, &v) in &reference.mem {
        let got = art.tdm.read(Word9::from_balanced(addr));
        if got != Word9::from_balanced(v) {
            return Err(format!("mem[{addr}]: reference {v} art {}", got.balanced()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transpiler::parse_rv32i;

    fn run(src: &str) -> RvState {
        run_reference(&parse_rv32i(src).unwrap(), 9000, 10_000).unwrap()
    }

    #[test]
    fn arithmetic_and_memory() {
        let st = run("li x5, 7\naddi x6, x5, -10\nsw x6, 400(x0)\nlw x7, 400(x0)\nsub x8, x5, x7\nj .");
        assert_eq!((st.regs[5], st.regs[6], st.regs[7], st.regs[8]), (7, -3, -3, 10));
        assert_eq!(st.mem[&100], -3);
        assert!(st.in_range);
        assert_eq!(st.regs[2], 9000);
    }

    #[test]
    fn loop_counts() {
        let st = run("li x5, 10\nli x6, 0\nloop: add x6, x6, x5\naddi x5, x5, -1\nbne x5, x0, loop");
        assert_eq!(st.regs[6], 55);
    }

    #[test]
    fn bit_ops_and_range_flag() {
        let st = run("li x5, -6\nli x6, 3\nand x7, x5, x6\nor x8, x5, x6\nxor x9, x5, x6\nsrli x10, x6, 1\nslli x11, x6, 2");
        assert_eq!((st.regs[7], st.regs[8], st.regs[9], st.regs[10], st.regs[11]), (2, -5, -7, 1, 12));
        assert!(st.in_range);
        assert!(!run("li x5, -1\nsrli x5, x5, 1").in_range);
        assert!(!run("sw x0, 8(x0)").in_range);
    }

    #[test]
    fn calls_return() {
        let st = run("jal f\nli x6, 1\nj .\nf: li x5, 2\nret");
        assert_eq!((st.regs[5], st.regs[6]), (2, 1));
    }

    #[test]
    fn timeout_and_misaligned() {
        let p = parse_rv32i("l: j l2\nl2: j l").unwrap();
        assert_eq!(run_reference(&p, 0, 50), Err(RefError::Timeout { limit: 50 }));
        let p = parse_rv32i("lw x5, 2(x0)").unwrap();
        assert_eq!(run_reference(&p, 0, 50), Err(RefError::Misaligned { index: 0 }));
    }
}
