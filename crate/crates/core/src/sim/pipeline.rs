//! Cycle-level model of the five-stage in-order pipeline.
//!
//! Stages are IF, ID, EX, MEM, WB with one instruction per stage. Values
//! really flow through the pipeline latches, so forwarding and hazard logic
//! are exercised rather than assumed:
//!
//! - EX operands come from the EX/MEM latch, then the MEM/WB latch, then the
//!   register file. The register file is write-first, so a WB in cycle `c`
//!   is visible to a read in the same cycle.
//! - Branches and jumps resolve in ID. Their register operand (branch
//!   condition, JALR base) may come from the result being computed in EX
//!   this cycle, from the EX/MEM latch, or from the register file.
//! - A taken transfer squashes the one instruction fetched behind it.
//! - A LOAD followed at distance 1 by an EX consumer stalls one cycle. A LOAD
//!   feeding an ID consumer stalls two cycles at distance 1 and one cycle at
//!   distance 2.
//!
//! Every cycle either retires an instruction in WB or carries exactly one
//! bubble or squash, so `cycles = retired + 4 + stalls + squashes`.

use alloc::vec::Vec;
use core::fmt;

use super::{alu, branch_taken, effective_address, MachineState, SimError};
use crate::isa::{decode, Instruction, Reg};
use crate::ternary::Word9;

/// What a pipeline stage holds during one cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    /// Nothing has entered yet, or fetch has stopped after a halt.
    Idle,
    /// A stall bubble inserted by the hazard detection unit.
    Bubble,
    /// A wrong-path instruction cancelled by a taken transfer.
    Squash,
    /// The instruction at this TIM index.
    Instr(u16),
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Idle => f.write_str("-"),
            Slot::Bubble => f.write_str("BUBBLE"),
            Slot::Squash => f.write_str("SQUASH"),
            Slot::Instr(i) => write!(f, "{i}"),
        }
    }
}

/// Stage occupancy for one cycle, in IF, ID, EX, MEM, WB order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CycleRecord {
    pub cycle: u64,
    pub stages: [Slot; 5],
    /// The fetch PC during this cycle.
    pub pc: Word9,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PipelineStats {
    pub cycles: u64,
    pub retired: u64,
    pub load_use_stalls: u64,
    pub branch_squashes: u64,
    /// Stalls of ID-stage consumers (branch condition, JALR base) waiting on
    /// a LOAD.
    pub branch_value_stalls: u64,
    pub trace: Vec<CycleRecord>,
}

impl PipelineStats {
    pub fn stalls(&self) -> u64 {
        self.load_use_stalls + self.branch_value_stalls
    }

    pub fn ipc(&self) -> f64 {
        if self.cycles == 0 {
            0.0
        } else {
            self.retired as f64 / self.cycles as f64
        }
    }

    /// True when the single-issue cycle accounting balances.
    pub fn identity_holds(&self) -> bool {
        self.cycles == self.retired + 4 + self.stalls() + self.branch_squashes
    }
}

/// A latch between stages.
#[derive(Clone, Copy, Debug)]
enum Latch<T> {
    Idle,
    Bubble,
    Squash,
    Full(T),
}

impl<T> Latch<T> {
    fn slot(&self, index: impl Fn(&T) -> u16) -> Slot {
        match self {
            Latch::Idle => Slot::Idle,
            Latch::Bubble => Slot::Bubble,
            Latch::Squash => Slot::Squash,
            Latch::Full(x) => Slot::Instr(index(x)),
        }
    }

    fn full(&self) -> Option<&T> {
        match self {
            Latch::Full(x) => Some(x),
            _ => None,
        }
    }

    /// Carries a non-instruction marker down the pipe.
    fn marker<U>(&self) -> Latch<U> {
        match self {
            Latch::Bubble => Latch::Bubble,
            Latch::Squash => Latch::Squash,
            _ => Latch::Idle,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Fetched {
    pc: Word9,
    word: Word9,
}

/// An instruction past decode. `value` holds the JAL/JALR link once ID has
/// run, the ALU result or effective address after EX, and the loaded word
/// after MEM.
#[derive(Clone, Copy, Debug)]
struct InFlight {
    pc: Word9,
    ins: Instruction,
    value: Word9,
    store_value: Word9,
    halts: bool,
}

impl InFlight {
    fn writes(&self, r: Reg) -> bool {
        self.ins.dest() == Some(r)
    }

    fn is_load(&self) -> bool {
        matches!(self.ins, Instruction::Load { .. })
    }
}

fn index_of(pc: Word9) -> u16 {
    pc.unsigned()
}

/// Registers an instruction reads in ID rather than EX.
fn id_source(ins: &Instruction) -> Option<Reg> {
    match *ins {
        Instruction::Beq { cond, .. } | Instruction::Bne { cond, .. } => Some(cond),
        Instruction::Jalr { tb, .. } => Some(tb),
        _ => None,
    }
}

enum Hazard {
    LoadUse,
    BranchValue,
}

fn detect_hazard(ins: &Instruction, in_ex: Option<&InFlight>, in_mem: Option<&InFlight>) -> Option<Hazard> {
    let load_writes = |p: Option<&InFlight>, r: Reg| p.is_some_and(|p| p.is_load() && p.writes(r));
    if let Some(r) = id_source(ins) {
        if load_writes(in_ex, r) || load_writes(in_mem, r) {
            return Some(Hazard::BranchValue);
        }
        return None;
    }
    let (srcs, _) = ins.sources();
    if srcs.iter().flatten().any(|r| load_writes(in_ex, *r)) {
        return Some(Hazard::LoadUse);
    }
    None
}

/// Runs the program in `state` through the pipeline until the halting
/// instruction leaves WB. Fails with [`SimError::Timeout`] if that has not
/// happened within `max_cycles` cycles. Set `record_trace` to keep one
/// [`CycleRecord`] per cycle.
pub fn run_pipelined(
    state: &mut MachineState,
    max_cycles: u64,
    record_trace: bool,
) -> Result<PipelineStats, SimError> {
    let mut stats = PipelineStats::default();
    let mut if_id: Latch<Fetched> = Latch::Idle;
    let mut id_ex: Latch<InFlight> = Latch::Idle;
    let mut ex_mem: Latch<InFlight> = Latch::Idle;
    let mut mem_wb: Latch<InFlight> = Latch::Idle;
    let mut fetching = !state.halted;
    let mut trap: Option<SimError> = None;
    let mut pc = state.pc;

    if state.halted {
        return Ok(stats);
    }

    loop {
        if stats.cycles >= max_cycles {
            state.pc = pc;
            return Err(SimError::Timeout { limit: max_cycles });
        }
        stats.cycles += 1;

        if record_trace {
            let at = |x: &InFlight| index_of(x.pc);
            stats.trace.push(CycleRecord {
                cycle: stats.cycles,
                stages: [
                    if fetching { Slot::Instr(index_of(pc)) } else { Slot::Idle },
                    if_id.slot(|f| index_of(f.pc)),
                    id_ex.slot(at),
                    ex_mem.slot(at),
                    mem_wb.slot(at),
                ],
                pc,
            });
        }

        // WB: write-first register file.
        let mut finished = false;
        if let Latch::Full(x) = mem_wb {
            if let Some(r) = x.ins.dest() {
                state.set_reg(r, x.value);
            }
            stats.retired += 1;
            state.retired += 1;
            if x.halts {
                state.halted = true;
                state.pc = x.pc;
                finished = true;
            }
        }
        if finished {
            return Ok(stats);
        }

        // MEM
        let next_mem_wb = match ex_mem {
            Latch::Full(mut x) => {
                match x.ins {
                    Instruction::Load { .. } => x.value = state.tdm.read(x.value),
                    Instruction::Store { .. } => state.tdm.write(x.value, x.store_value),
                    _ => {}
                }
                Latch::Full(x)
            }
            other => other.marker(),
        };

        // EX, with forwarding from EX/MEM and MEM/WB.
        let forward_ex = |r: Reg, state: &MachineState| -> Word9 {
            if let Some(p) = ex_mem.full().filter(|p| p.writes(r)) {
                debug_assert!(!p.is_load(), "load-use hazard not stalled");
                return p.value;
            }
            if let Some(p) = mem_wb.full().filter(|p| p.writes(r)) {
                return p.value;
            }
            state.reg(r)
        };
        let next_ex_mem = match id_ex {
            Latch::Full(mut x) => {
                // Registers the instruction does not read (the destination
                // of MV, the inverters and LUI) are not fetched.
                let operand = |r: Reg| if x.ins.reads(r) { forward_ex(r, state) } else { Word9::ZERO };
                match x.ins {
                    Instruction::R { ta, tb, .. } => {
                        x.value = alu(&x.ins, operand(ta), operand(tb)).expect("R-type result");
                    }
                    Instruction::I { ta, .. } => {
                        x.value = alu(&x.ins, operand(ta), Word9::ZERO).expect("I-type result");
                    }
                    Instruction::Load { tb, imm, .. } => {
                        x.value = effective_address(forward_ex(tb, state), imm);
                    }
                    Instruction::Store { ta, tb, imm } => {
                        x.value = effective_address(forward_ex(tb, state), imm);
                        x.store_value = forward_ex(ta, state);
                    }
                    // Control transfers finished in ID; JAL/JALR carry their link.
                    _ => {}
                }
                Latch::Full(x)
            }
            other => other.marker(),
        };

        // ID: hazard detection and control resolution.
        let mut redirect: Option<Word9> = None;
        let mut stall = false;
        let next_id_ex = match if_id {
            Latch::Full(f) => match decode(f.word) {
                Err(_) => {
                    trap = Some(SimError::IllegalInstruction { pc: f.pc, word: f.word });
                    fetching = false;
                    Latch::Idle
                }
                Ok(ins) => match detect_hazard(&ins, id_ex.full(), ex_mem.full()) {
                    Some(h) => {
                        match h {
                            Hazard::LoadUse => stats.load_use_stalls += 1,
                            Hazard::BranchValue => stats.branch_value_stalls += 1,
                        }
                        stall = true;
                        Latch::Bubble
                    }
                    None => {
                        // ID operand: this cycle's EX result, then EX/MEM,
                        // then the (already written-back) register file.
                        let forward_id = |r: Reg| -> Word9 {
                            if let Some(p) = next_ex_mem.full().filter(|p| p.writes(r)) {
                                return p.value;
                            }
                            if let Some(p) = ex_mem.full().filter(|p| p.writes(r)) {
                                return p.value;
                            }
                            state.reg(r)
                        };
                        let link = f.pc.wrapping_add(Word9::ONE);
                        let relative = |off: i16| f.pc.wrapping_add(Word9::from_balanced(off as i32));
                        let (target, value) = match ins {
                            Instruction::Beq { cond, b, offset } | Instruction::Bne { cond, b, offset } => {
                                let taken = branch_taken(&ins, forward_id(cond), b);
                                (taken.then(|| relative(offset)), Word9::ZERO)
                            }
                            Instruction::Jal { offset, .. } => (Some(relative(offset)), link),
                            Instruction::Jalr { tb, imm, .. } => {
                                (Some(effective_address(forward_id(tb), imm)), link)
                            }
                            _ => (None, Word9::ZERO),
                        };
                        let halts = target == Some(f.pc);
                        if halts {
                            fetching = false;
                        } else if let Some(t) = target {
                            redirect = Some(t);
                        }
                        Latch::Full(InFlight {
                            pc: f.pc,
                            ins,
                            value,
                            store_value: Word9::ZERO,
                            halts,
                        })
                    }
                },
            },
            other => other.marker(),
        };

        // IF
        let next_if_id = if stall {
            if_id
        } else if let Some(t) = redirect {
            stats.branch_squashes += 1;
            pc = t;
            Latch::Squash
        } else if fetching {
            let fetched = Fetched { pc, word: state.tim.read(pc) };
            pc = pc.wrapping_add(Word9::ONE);
            Latch::Full(fetched)
        } else {
            Latch::Idle
        };

        mem_wb = next_mem_wb;
        ex_mem = next_ex_mem;
        id_ex = next_id_ex;
        if_id = next_if_id;

        if let Some(err) = &trap {
            // Drain older instructions so the state matches the functional
            // model at the trap point.
            let drained = matches!(
                (&id_ex, &ex_mem, &mem_wb),
                (Latch::Idle | Latch::Bubble | Latch::Squash, Latch::Idle | Latch::Bubble | Latch::Squash, Latch::Idle | Latch::Bubble | Latch::Squash)
            );
            if drained {
                if let SimError::IllegalInstruction { pc: at, .. } = err {
                    state.pc = *at;
                }
                return Err(err.clone());
            }
        }
    }
}

/// Writes the per-cycle trace as CSV: `cycle,IF,ID,EX,MEM,WB,pc`.
pub fn write_trace_csv(stats: &PipelineStats, out: &mut impl fmt::Write) -> fmt::Result {
    writeln!(out, "cycle,IF,ID,EX,MEM,WB,pc")?;
    for rec in &stats.trace {
        write!(out, "{}", rec.cycle)?;
        for s in rec.stages {
            write!(out, ",{s}")?;
        }
        writeln!(out, ",{}", rec.pc)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::assemble;
    use crate::sim::{run_functional, MemoryKind};
    use alloc::string::String;

    fn boot(src: &str) -> MachineState {
        let mut st = MachineState::new();
        st.load_image(&assemble(src).unwrap(), MemoryKind::Tim).unwrap();
        st
    }

    #[test]
    fn load_then_overwrite_is_not_a_hazard() {
        // MV, the inverters and LUI only write their first register.
        for second in ["MV T1, T2", "STI T1, T2", "LUI T1, 3"] {
            let (st, s) = both(&format!("LOAD T1, T0, 5\n{second}\nHALT"));
            assert_eq!(s.load_use_stalls, 0, "{second}");
            assert!(s.identity_holds());
            assert!(st.halted);
        }
    }

    fn both(src: &str) -> (MachineState, PipelineStats) {
        let mut f = boot(src);
        run_functional(&mut f, 100_000).unwrap();
        let mut p = boot(src);
        let stats = run_pipelined(&mut p, 1_000_000, true).unwrap();
        assert_eq!(p, f, "pipelined state differs from functional");
        assert!(stats.identity_holds(), "{stats:?}");
        (p, stats)
    }

    #[test]
    fn straight_line_takes_retired_plus_four() {
        let mut src = String::new();
        for i in 0..10 {
            src.push_str(&alloc::format!("ADDI T{}, {}\n", i % 8, i));
        }
        src.push_str("HALT\n");
        let (_, s) = both(&src);
        assert_eq!((s.retired, s.cycles), (11, 15));
        assert_eq!(s.stalls() + s.branch_squashes, 0);
    }

    #[test]
    fn load_use_stalls_once() {
        let (st, s) = both("LUI T3, 1\nSTORE T3, T0, 5\nLOAD T1, T0, 5\nADD T2, T1\nHALT");
        assert_eq!(s.load_use_stalls, 1);
        assert_eq!(s.branch_value_stalls + s.branch_squashes, 0);
        assert_eq!(st.reg(Reg::T2).balanced(), 243);
        // The stall shows as exactly one EX bubble.
        let bubbles = s.trace.iter().filter(|r| r.stages[2] == Slot::Bubble).count();
        assert_eq!(bubbles, 1);
    }

    #[test]
    fn load_at_distance_two_does_not_stall_ex_consumer() {
        let (_, s) = both("LOAD T1, T0, 5\nNOP\nADD T2, T1\nHALT");
        assert_eq!(s.stalls(), 0);
    }

    #[test]
    fn comp_then_branch_needs_no_stall() {
        let (_, s) = both("ADDI T3, 4\nCOMP T8, T3\nBEQ T8, -, skip\nADDI T1, 1\nskip: HALT");
        assert_eq!(s.stalls(), 0);
        assert_eq!(s.branch_squashes, 1);
        let squashed = s.trace.iter().filter(|r| r.stages[1] == Slot::Squash).count();
        assert_eq!(squashed, 1);
    }

    #[test]
    fn untaken_branch_costs_nothing() {
        let (st, s) = both("BEQ T0, +, 2\nADDI T1, 1\nHALT");
        assert_eq!(s.branch_squashes, 0);
        assert_eq!(s.cycles, s.retired + 4);
        assert_eq!(st.reg(Reg::T1), Word9::ONE);
    }

    #[test]
    fn load_feeding_branch_stalls_two_then_one() {
        let (_, near) = both("LOAD T1, T0, 0\nBEQ T1, 0, 2\nNOP\nHALT");
        assert_eq!((near.branch_value_stalls, near.load_use_stalls), (2, 0));
        let (_, far) = both("LOAD T1, T0, 0\nNOP\nBEQ T1, 0, 2\nNOP\nHALT");
        assert_eq!(far.branch_value_stalls, 1);
        let (_, jalr) = both("LOAD T1, T0, 0\nLUI T2, -40\nLI T2, -118\nJALR T3, T2, 1\nNOP\nHALT");
        assert_eq!(jalr.branch_value_stalls, 0);
    }

    #[test]
    fn single_instruction_fills_pipeline() {
        let (_, s) = both("HALT");
        assert_eq!(s.cycles, 5);
        assert_eq!(s.trace.len(), 5);
        for (stage, rec) in s.trace.iter().enumerate() {
            assert_eq!(rec.stages[stage], Slot::Instr(0));
        }
    }

    #[test]
    fn loop_matches_functional() {
        let src = "\
    LUI T1, 0
    LI T1, 20
    LUI T2, 0
    LI T2, 40
loop: STORE T1, T2, 0
    LOAD T3, T2, 0
    ADD T5, T3
    ADDI T2, 1
    ADDI T1, -1
    MV T8, T1
    COMP T8, T0
    BNE T8, 0, loop
    HALT
";
        let (st, s) = both(src);
        assert_eq!(st.reg(Reg::T5).balanced(), (1..=20).sum::<i32>());
        assert_eq!(s.load_use_stalls, 20);
        assert_eq!(s.branch_squashes, 19);
    }

    #[test]
    fn trace_csv_shape() {
        let mut st = boot("HALT");
        let stats = run_pipelined(&mut st, 100, true).unwrap();
        let mut csv = String::new();
        write_trace_csv(&stats, &mut csv).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "cycle,IF,ID,EX,MEM,WB,pc");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1], "1,0,-,-,-,-,---------");
        assert_eq!(lines[5], "5,-,-,-,-,0,--------0");
    }

    #[test]
    fn timeout_and_trap() {
        let mut st = boot("top: JAL T4, top\n");
        // A self-jump halts; use a two-instruction loop instead.
        let _ = run_pipelined(&mut st, 100, false).unwrap();
        let mut st = boot("top: NOP\nJAL T4, top");
        assert_eq!(run_pipelined(&mut st, 10, false), Err(SimError::Timeout { limit: 10 }));

        let src = "ADDI T1, 3\nADDI T1, 3\n.word 0t+0++00000";
        let mut f = boot(src);
        let ef = run_functional(&mut f, 100).unwrap_err();
        let mut p = boot(src);
        let ep = run_pipelined(&mut p, 100, false).unwrap_err();
        assert_eq!(ef, ep);
        assert_eq!(f, p);
    }
}
