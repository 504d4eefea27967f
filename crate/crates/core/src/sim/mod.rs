//! Architectural state and the two execution models: a functional
//! interpreter that retires one instruction per step, and a cycle-level
//! five-stage pipeline ([`pipeline`]) that must reach the same final state.
//!
//! Conventions shared by both models:
//! - reset PC is the word with unsigned index 0 (`---------`);
//! - TIM and TDM hold 3^9 words each, addressed by the unsigned view of a
//!   word; unwritten cells and registers read as zero;
//! - a control transfer whose target is its own address halts the machine.

pub mod pipeline;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use pipeline::{run_pipelined, write_trace_csv, CycleRecord, PipelineStats, Slot};

use crate::isa::{decode, Instruction, Opcode, ProgramImage, Reg};
use crate::ternary::{InvertKind, LogicKind, ShiftDir, Trit, Word9, WORD_STATES};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimError {
    IllegalInstruction { pc: Word9, word: Word9 },
    /// The cycle or instruction budget ran out before the program halted.
    Timeout { limit: u64 },
    ImageOverflow { base: u16, len: usize },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::IllegalInstruction { pc, word } => write!(
                f,
                "illegal instruction {word} at pc {pc} (index {})",
                pc.unsigned()
            ),
            SimError::Timeout { limit } => write!(f, "timeout after {limit} without halting"),
            SimError::ImageOverflow { base, len } => write!(
                f,
                "image of {len} words at base {base} overflows the {WORD_STATES}-word memory"
            ),
        }
    }
}

impl core::error::Error for SimError {}

/// A 3^9-word memory addressed by the unsigned view of a word.
#[derive(Clone, PartialEq, Eq)]
pub struct Memory(Vec<Word9>);

impl Memory {
    pub fn new() -> Memory {
        Memory(vec![Word9::ZERO; WORD_STATES as usize])
    }

    #[inline]
    pub fn read(&self, addr: Word9) -> Word9 {
        self.0[addr.unsigned() as usize]
    }

    #[inline]
    pub fn write(&mut self, addr: Word9, value: Word9) {
        self.0[addr.unsigned() as usize] = value;
    }

    pub fn at(&self, index: u16) -> Word9 {
        self.0[index as usize]
    }

    pub fn words(&self) -> &[Word9] {
        &self.0
    }
}

impl Default for Memory {
    fn default() -> Memory {
        Memory::new()
    }
}

impl fmt::Debug for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let used = self.0.iter().filter(|w| **w != Word9::ZERO).count();
        write!(f, "Memory({used} non-zero words)")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemoryKind {
    Tim,
    Tdm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineState {
    pub pc: Word9,
    pub trf: [Word9; Reg::COUNT],
    pub tim: Memory,
    pub tdm: Memory,
    pub halted: bool,
    pub retired: u64,
}

impl Default for MachineState {
    fn default() -> Self {
        MachineState::new()
    }
}

impl MachineState {
    /// Cold state: zeroed registers and memories, PC at index 0.
    pub fn new() -> MachineState {
        MachineState {
            pc: Word9::MIN,
            trf: [Word9::ZERO; Reg::COUNT],
            tim: Memory::new(),
            tdm: Memory::new(),
            halted: false,
            retired: 0,
        }
    }

    /// Copies `image` into the chosen memory at its base and resets the PC.
    pub fn load_image(&mut self, image: &ProgramImage, target: MemoryKind) -> Result<(), SimError> {
        if !image.fits() {
            return Err(SimError::ImageOverflow {
                base: image.base,
                len: image.words.len(),
            });
        }
        let mem = match target {
            MemoryKind::Tim => &mut self.tim,
            MemoryKind::Tdm => &mut self.tdm,
        };
        let start = image.base as usize;
        mem.0[start..start + image.words.len()].copy_from_slice(&image.words);
        self.pc = Word9::MIN;
        Ok(())
    }

    #[inline]
    pub fn reg(&self, r: Reg) -> Word9 {
        self.trf[r.index()]
    }

    #[inline]
    pub fn set_reg(&mut self, r: Reg, v: Word9) {
        self.trf[r.index()] = v;
    }

    /// Executes one instruction.
    pub fn step(&mut self) -> Result<(), SimError> {
        debug_assert!(!self.halted, "step on a halted machine");
        let pc = self.pc;
        let word = self.tim.read(pc);
        let ins = decode(word).map_err(|_| SimError::IllegalInstruction { pc, word })?;
        let next = pc.wrapping_add(Word9::ONE);
        let mut target = None;
        match ins {
            Instruction::R { ta, .. } | Instruction::I { ta, .. } => {
                let (a, b) = self.operand_pair(&ins);
                let v = alu(&ins, a, b).expect("register-writing instruction");
                self.set_reg(ta, v);
            }
            Instruction::Beq { cond, b, offset } | Instruction::Bne { cond, b, offset } => {
                if branch_taken(&ins, self.reg(cond), b) {
                    target = Some(pc.wrapping_add(Word9::from_balanced(offset as i32)));
                }
            }
            Instruction::Jal { ta, offset } => {
                target = Some(pc.wrapping_add(Word9::from_balanced(offset as i32)));
                self.set_reg(ta, next);
            }
            Instruction::Jalr { ta, tb, imm } => {
                target = Some(effective_address(self.reg(tb), imm));
                self.set_reg(ta, next);
            }
            Instruction::Load { ta, tb, imm } => {
                let v = self.tdm.read(effective_address(self.reg(tb), imm));
                self.set_reg(ta, v);
            }
            Instruction::Store { ta, tb, imm } => {
                let addr = effective_address(self.reg(tb), imm);
                self.tdm.write(addr, self.reg(ta));
            }
        }
        self.retired += 1;
        match target {
            Some(t) => {
                if t == pc {
                    self.halted = true;
                }
                self.pc = t;
            }
            None => self.pc = next,
        }
        Ok(())
    }

    fn operand_pair(&self, ins: &Instruction) -> (Word9, Word9) {
        match *ins {
            Instruction::R { ta, tb, .. } => (self.reg(ta), self.reg(tb)),
            Instruction::I { ta, .. } => (self.reg(ta), Word9::ZERO),
            _ => (Word9::ZERO, Word9::ZERO),
        }
    }
}

/// Runs until halt. Fails with [`SimError::Timeout`] once `max_instructions`
/// have retired without halting; the state is left as it stood.
pub fn run_functional(state: &mut MachineState, max_instructions: u64) -> Result<u64, SimError> {
    while !state.halted {
        if state.retired >= max_instructions {
            return Err(SimError::Timeout { limit: max_instructions });
        }
        state.step()?;
    }
    Ok(state.retired)
}

/// Result of a register-writing R- or I-type instruction, given the current
/// values of `TRF[Ta]` and `TRF[Tb]`. `None` for every other format.
pub(crate) fn alu(ins: &Instruction, a: Word9, b: Word9) -> Option<Word9> {
    let v = match *ins {
        Instruction::R { op, .. } => match op {
            Opcode::Mv => b,
            Opcode::Pti => b.invert(InvertKind::Pti),
            Opcode::Nti => b.invert(InvertKind::Nti),
            Opcode::Sti => b.invert(InvertKind::Sti),
            Opcode::And => a.logic(LogicKind::And, b),
            Opcode::Or => a.logic(LogicKind::Or, b),
            Opcode::Xor => a.logic(LogicKind::Xor, b),
            Opcode::Add => a.wrapping_add(b),
            Opcode::Sub => a.wrapping_sub(b),
            Opcode::Sr => a.shift(b.field(1, 0), ShiftDir::Right),
            Opcode::Sl => a.shift(b.field(1, 0), ShiftDir::Left),
            Opcode::Comp => Word9::from(a.compare(b)),
            _ => unreachable!("non R-type opcode {op}"),
        },
        Instruction::I { op, imm, .. } => {
            let imm = imm as i32;
            match op {
                Opcode::Andi => a.logic(LogicKind::And, Word9::from_balanced(imm)),
                Opcode::Addi => a.wrapping_add(Word9::from_balanced(imm)),
                Opcode::Sri => a.shift(imm, ShiftDir::Right),
                Opcode::Sli => a.shift(imm, ShiftDir::Left),
                Opcode::Lui => Word9::from_balanced(imm * 243),
                Opcode::Li => Word9::from_balanced(a.field(8, 5) * 243 + imm),
                _ => unreachable!("non I-type opcode {op}"),
            }
        }
        _ => return None,
    };
    Some(v)
}

pub(crate) fn branch_taken(ins: &Instruction, cond: Word9, b: Trit) -> bool {
    let lst = cond.trit(0);
    match ins {
        Instruction::Beq { .. } => lst == b,
        Instruction::Bne { .. } => lst != b,
        _ => false,
    }
}

#[inline]
pub(crate) fn effective_address(base: Word9, imm: i16) -> Word9 {
    base.wrapping_add(Word9::from_balanced(imm as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::assemble;

    fn boot(src: &str) -> MachineState {
        let mut st = MachineState::new();
        st.load_image(&assemble(src).unwrap(), MemoryKind::Tim).unwrap();
        st
    }

    #[test]
    fn load_image_defaults() {
        let mut st = MachineState::new();
        st.load_image(&ProgramImage::default(), MemoryKind::Tim).unwrap();
        assert!(st.tim.words().iter().all(|w| *w == Word9::ZERO));
        assert_eq!(st.pc.to_string(), "---------");

        let words = vec![Word9::ONE, Word9::MAX, Word9::MIN];
        st.load_image(&ProgramImage::new(0, words.clone()), MemoryKind::Tim).unwrap();
        assert_eq!(&st.tim.words()[..3], &words[..]);
        assert_eq!(st.tim.at(3), Word9::ZERO);

        let err = st
            .load_image(&ProgramImage::new(19682, vec![Word9::ONE; 2]), MemoryKind::Tdm)
            .unwrap_err();
        assert_eq!(err, SimError::ImageOverflow { base: 19682, len: 2 });
        st.load_image(&ProgramImage::new(19682, vec![Word9::ONE]), MemoryKind::Tdm).unwrap();
    }

    #[test]
    fn nop_only_advances_pc() {
        let mut st = boot("NOP\nHALT");
        let before = st.clone();
        st.step().unwrap();
        assert_eq!(st.trf, before.trf);
        assert_eq!(st.pc, before.pc.wrapping_add(Word9::ONE));
        assert_eq!(st.retired, 1);
        assert!(!st.halted);
    }

    #[test]
    fn comp_writes_lst_only() {
        let mut st = boot("COMP T3, T5");
        st.set_reg(Reg::T3, Word9::from_balanced(7));
        st.set_reg(Reg::T5, Word9::from_balanced(2));
        st.step().unwrap();
        assert_eq!(st.reg(Reg::T3).to_string(), "00000000+");
    }

    #[test]
    fn lui_li_build_constant() {
        let mut st = boot("LUI T2, 4\nLI T2, 28\nHALT");
        st.set_reg(Reg::T2, Word9::from_balanced(-5000));
        run_functional(&mut st, 10).unwrap();
        assert_eq!(st.reg(Reg::T2).balanced(), 1000);
    }

    #[test]
    fn li_keeps_upper_trits() {
        let mut st = boot("LI T1, -121\nHALT");
        st.set_reg(Reg::T1, Word9::from_balanced(3 * 243 + 17));
        run_functional(&mut st, 10).unwrap();
        assert_eq!(st.reg(Reg::T1).balanced(), 3 * 243 - 121);
    }

    #[test]
    fn halt_is_a_self_jump() {
        let mut st = boot("NOP\nNOP\nJAL T4, 0");
        assert_eq!(run_functional(&mut st, 100), Ok(3));
        assert!(st.halted);
        assert_eq!(st.pc.unsigned(), 2);
        // JAL still writes its link.
        assert_eq!(st.reg(Reg::T4).unsigned(), 3);
        assert_eq!(run_functional(&mut boot("HALT"), 100), Ok(1));
    }

    #[test]
    fn timeout_on_endless_loop() {
        let mut st = boot("top: NOP\nJAL T4, top");
        assert_eq!(run_functional(&mut st, 100), Err(SimError::Timeout { limit: 100 }));
        assert_eq!(st.retired, 100);
    }

    #[test]
    fn illegal_instruction_traps() {
        let mut st = boot("NOP\n.word 0t+0++00000");
        let err = run_functional(&mut st, 100).unwrap_err();
        assert_eq!(
            err,
            SimError::IllegalInstruction {
                pc: Word9::from_unsigned(1),
                word: "+0++00000".parse().unwrap()
            }
        );
    }

    #[test]
    fn memory_and_branches() {
        let src = "\
    LUI T1, 0
    LI T1, 5          ; counter
    LUI T2, 0
    LI T2, 100        ; pointer
loop: STORE T1, T2, 0
    ADDI T2, 1
    ADDI T1, -1
    BNE T1, 0, loop   ; LST of a small counter is zero only at multiples of 3
    LOAD T3, T2, -1
    HALT
";
        let mut st = boot(src);
        run_functional(&mut st, 1000).unwrap();
        // Loop stops once T1 = 3: stores 5, 4 at 100, 101.
        let at = |a: i32| st.tdm.read(Word9::from_balanced(a)).balanced();
        assert_eq!((at(100), at(101), at(102)), (5, 4, 0));
        assert_eq!(st.reg(Reg::T1).balanced(), 3);
        assert_eq!(st.reg(Reg::T3).balanced(), 4);
    }

    #[test]
    fn jalr_reads_base_before_linking() {
        // T1 holds the address of index 3; JALR T1, T1 jumps there and links.
        let mut st = boot("LUI T1, -40\nLI T1, -121\nJALR T1, T1, 3\nHALT");
        // -40*243 - 121 = -9841 = index 0, plus 3.
        run_functional(&mut st, 10).unwrap();
        assert_eq!(st.pc.unsigned(), 3);
        assert_eq!(st.reg(Reg::T1).unsigned(), 3);
    }

    #[test]
    fn shifts_use_low_two_trits_of_tb() {
        let mut st = boot("SL T1, T2\nSR T3, T4\nHALT");
        st.set_reg(Reg::T1, Word9::ONE);
        st.set_reg(Reg::T2, Word9::from_balanced(9 + 2)); // [1:0] = 2
        st.set_reg(Reg::T3, Word9::from_balanced(100));
        st.set_reg(Reg::T4, Word9::from_balanced(-1)); // negative: shifts left
        run_functional(&mut st, 10).unwrap();
        assert_eq!(st.reg(Reg::T1).balanced(), 9);
        assert_eq!(st.reg(Reg::T3).balanced(), 300);
    }
}
