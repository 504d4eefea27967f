//! Instruction mapping, operand staging and the bitwise runtime routine.

use alloc::vec;
use alloc::vec::Vec;

use super::regalloc::{Loc, RegMap};
use super::rv::{RvInstruction, RvOp, RvTarget};
use super::{
    LabelId, Op, TranspileError, Unit, ARG_A, ARG_B, BORROW_SAVE, COUNT, LINK, MODE, RESULT, ROUTINE_SAVE,
};
use crate::isa::{Instruction, Opcode, Reg};
use crate::ternary::{Trit, WORD_MAX};

/// Balanced split `v = hi × 243 + lo` with `lo` in ±121 and `hi` in ±40.
fn split(v: i64) -> Option<(i16, i16)> {
    if v.unsigned_abs() > WORD_MAX as u64 {
        return None;
    }
    let lo = (v + 121).rem_euclid(243) - 121;
    Some((((v - lo) / 243) as i16, lo as i16))
}

/// `[LUI dest, hi; LI dest, lo]`, leaving `dest = v` whatever it held.
pub fn materialize_constant(v: i32, dest: Reg) -> Result<[Instruction; 2], TranspileError> {
    let (hi, lo) = split(v as i64).ok_or(TranspileError::ConstantOutOfRange { line: 0, value: v as i64 })?;
    Ok([Instruction::i(Opcode::Lui, dest, hi), Instruction::i(Opcode::Li, dest, lo)])
}

/// Lowers one instruction on its own, into a fresh unit. The bitwise runtime
/// routine it may call is not included.
pub fn map_instruction(rv: &RvInstruction, regmap: &RegMap) -> Result<Unit, TranspileError> {
    let mut unit = Unit::new();
    let mut rt = Runtime::default();
    lower_instruction(&mut unit, &mut rt, rv, regmap)?;
    Ok(unit)
}

#[derive(Clone, Copy)]
enum Item {
    Op(Op),
    Place(LabelId),
}

fn ins(i: Instruction) -> Item {
    Item::Op(Op::Ins(i))
}

fn r(op: Opcode, ta: Reg, tb: Reg) -> Item {
    ins(Instruction::r(op, ta, tb))
}

fn imm(op: Opcode, ta: Reg, v: i16) -> Item {
    ins(Instruction::i(op, ta, v))
}

fn load(ta: Reg, tb: Reg, v: i16) -> Item {
    ins(Instruction::Load { ta, tb, imm: v })
}

fn store(ta: Reg, tb: Reg, v: i16) -> Item {
    ins(Instruction::Store { ta, tb, imm: v })
}

fn mv(out: &mut Vec<Item>, d: Reg, s: Reg) {
    if d != s {
        out.push(r(Opcode::Mv, d, s));
    }
}

fn constant(out: &mut Vec<Item>, v: i64, d: Reg, line: usize) -> Result<(), TranspileError> {
    let (hi, lo) = split(v).ok_or(TranspileError::ConstantOutOfRange { line, value: v })?;
    out.push(imm(Opcode::Lui, d, hi));
    out.push(imm(Opcode::Li, d, lo));
    Ok(())
}

/// Whether the core sequence needs T8 while staged operands are live, in
/// which case staging must borrow other registers.
fn uses_scratch(rv: &RvInstruction) -> bool {
    match rv.op {
        RvOp::Addi => rv.rs1 != 0 && rv.imm.abs() > 26,
        RvOp::Lw | RvOp::Sw => !(-13..=13).contains(&(rv.imm / 4)),
        RvOp::Beq | RvOp::Bne | RvOp::Blt | RvOp::Bge => true,
        RvOp::Srli => rv.imm >= 19,
        _ => false,
    }
}

const ALLOCATABLE: [Reg; 5] = [Reg::T3, Reg::T4, Reg::T5, Reg::T6, Reg::T7];

/// Appends the lowering of `rv` to `unit`. Spilled operands are loaded into
/// staging registers (T8 first, then borrowed T3..T7 saved around the
/// sequence) and a spilled destination is stored back afterwards.
pub(crate) fn lower_instruction(
    unit: &mut Unit,
    rt: &mut Runtime,
    rv: &RvInstruction,
    map: &RegMap,
) -> Result<(), TranspileError> {
    let line = rv.line;
    let loc = |x: u8| map.get(x).expect("every named register is allocated");
    let control = rv.op.is_branch() || matches!(rv.op, RvOp::Jal | RvOp::Jalr);
    if !control && rv.dest() == Some(0) {
        return Ok(());
    }
    let dest = if control { None } else { rv.dest() };
    if matches!(rv.op, RvOp::Jal | RvOp::Jalr) && rv.rd != 0 {
        if let Loc::Spill(_) = loc(rv.rd) {
            return Err(TranspileError::Unsupported { line, what: "link register without a register home" });
        }
    }

    let mut operands: Vec<u8> = rv.sources();
    operands.extend(dest);
    let mut spilled: Vec<(u8, i16)> = Vec::new();
    let mut in_regs: Vec<Reg> = Vec::new();
    for &x in &operands {
        match loc(x) {
            Loc::Spill(slot) if !spilled.iter().any(|(y, _)| *y == x) => spilled.push((x, slot)),
            Loc::Spill(_) => {}
            Loc::Reg(t) => in_regs.push(t),
        }
    }
    let mut pool: Vec<Reg> = Vec::new();
    if !uses_scratch(rv) {
        pool.push(Reg::T8);
    }
    pool.extend(ALLOCATABLE.iter().copied().filter(|t| !in_regs.contains(t)));
    let stage: Vec<(u8, i16, Reg)> = spilled.iter().zip(&pool).map(|(&(x, s), &t)| (x, s, t)).collect();
    let borrowed: Vec<Reg> = stage.iter().map(|s| s.2).filter(|&t| t != Reg::T8).collect();
    let phys = |x: u8| match loc(x) {
        Loc::Reg(t) => t,
        Loc::Spill(_) => stage.iter().find(|s| s.0 == x).expect("staged").2,
    };

    let mut out = Vec::new();
    for (k, &t) in borrowed.iter().enumerate() {
        out.push(store(t, Reg::T0, BORROW_SAVE[k]));
    }
    for &(x, slot, t) in &stage {
        if rv.sources().contains(&x) {
            out.push(load(t, Reg::T0, slot));
        }
    }
    let (d, a, b) = (phys(rv.rd), phys(rv.rs1), phys(rv.rs2));
    let fin = core(unit, rt, rv, d, a, b, &mut out)?;
    if let Some(dx) = dest {
        if let Some(&(_, slot, t)) = stage.iter().find(|s| s.0 == dx) {
            out.push(store(t, Reg::T0, slot));
        }
    }
    for (k, &t) in borrowed.iter().enumerate() {
        out.push(load(t, Reg::T0, BORROW_SAVE[k]));
    }

    for item in out {
        match item {
            Item::Op(op) => unit.push(op),
            Item::Place(l) => unit.place(l),
        }
    }
    if let Some((op, here)) = fin {
        if let Some(l) = here {
            unit.place(l);
        }
        unit.push(op);
    }
    Ok(())
}

/// Final transfer of a sequence, with the label to define on it when the
/// transfer targets itself.
type Final = Option<(Op, Option<LabelId>)>;

fn target(unit: &mut Unit, t: &Option<RvTarget>) -> (LabelId, Option<LabelId>) {
    match t {
        Some(RvTarget::Label(name)) => (unit.label(name), None),
        _ => {
            let l = unit.fresh("self");
            (l, Some(l))
        }
    }
}

/// The sequence proper, over physical registers `d`, `a` = rs1, `b` = rs2.
fn core(
    unit: &mut Unit,
    rt: &mut Runtime,
    rv: &RvInstruction,
    d: Reg,
    a: Reg,
    b: Reg,
    out: &mut Vec<Item>,
) -> Result<Final, TranspileError> {
    let line = rv.line;
    let k = rv.imm;
    match rv.op {
        RvOp::Add => {
            if d == a {
                out.push(r(Opcode::Add, d, b));
            } else if d == b {
                out.push(r(Opcode::Add, d, a));
            } else {
                out.push(r(Opcode::Mv, d, a));
                out.push(r(Opcode::Add, d, b));
            }
        }
        RvOp::Sub => {
            if a == b {
                out.push(r(Opcode::Mv, d, Reg::T0));
            } else if d == a {
                out.push(r(Opcode::Sub, d, b));
            } else if d == b {
                out.push(r(Opcode::Sti, d, d));
                out.push(r(Opcode::Add, d, a));
            } else {
                out.push(r(Opcode::Mv, d, a));
                out.push(r(Opcode::Sub, d, b));
            }
        }
        RvOp::And | RvOp::Or | RvOp::Xor => {
            let kind = match rv.op {
                RvOp::And => Routine::And,
                RvOp::Or => Routine::Or,
                _ => Routine::Xor,
            };
            if a == b {
                match kind {
                    Routine::Xor => out.push(r(Opcode::Mv, d, Reg::T0)),
                    _ => mv(out, d, a),
                }
            } else if a == Reg::T0 || b == Reg::T0 {
                let other = if a == Reg::T0 { b } else { a };
                match kind {
                    Routine::And => out.push(r(Opcode::Mv, d, Reg::T0)),
                    _ => mv(out, d, other),
                }
            } else {
                out.push(store(a, Reg::T0, ARG_A));
                out.push(store(b, Reg::T0, ARG_B));
                call(unit, rt, kind, d, out);
            }
        }
        RvOp::Addi => {
            if k == 0 {
                mv(out, d, a);
            } else if a == Reg::T0 && k.abs() > 13 {
                constant(out, k as i64, d, line)?;
            } else {
                mv(out, d, a);
                if k.abs() <= 26 {
                    let first = k.clamp(-13, 13);
                    out.push(imm(Opcode::Addi, d, first as i16));
                    if k != first {
                        out.push(imm(Opcode::Addi, d, (k - first) as i16));
                    }
                } else {
                    constant(out, k as i64, Reg::T8, line)?;
                    out.push(r(Opcode::Add, d, Reg::T8));
                }
            }
        }
        RvOp::Andi | RvOp::Xori => {
            let and = rv.op == RvOp::Andi;
            if a == Reg::T0 {
                if and {
                    out.push(r(Opcode::Mv, d, Reg::T0));
                } else {
                    constant(out, k as i64, d, line)?;
                }
            } else if and && k == 0 {
                out.push(r(Opcode::Mv, d, Reg::T0));
            } else if (and && k == -1) || (!and && k == 0) {
                mv(out, d, a);
            } else {
                out.push(store(a, Reg::T0, ARG_A));
                constant(out, k as i64, Reg::T8, line)?;
                out.push(store(Reg::T8, Reg::T0, ARG_B));
                call(unit, rt, if and { Routine::And } else { Routine::Xor }, d, out);
            }
        }
        RvOp::Slli => {
            // A result inside the word range with k ≥ 18 must be 0.
            if a == Reg::T0 || k >= 18 {
                out.push(r(Opcode::Mv, d, Reg::T0));
            } else {
                mv(out, d, a);
                for _ in 0..k {
                    out.push(r(Opcode::Add, d, d));
                }
            }
        }
        RvOp::Srli => {
            if k == 0 {
                mv(out, d, a);
            } else if a == Reg::T0 || (15..19).contains(&k) {
                // Non-negative inputs shift to 0; negative ones leave the range.
                out.push(r(Opcode::Mv, d, Reg::T0));
            } else if k >= 19 {
                // Negative inputs give the in-range constant 2^(32-k) - 1.
                let skip = unit.fresh("srl");
                out.push(r(Opcode::Mv, Reg::T8, a));
                out.push(r(Opcode::Comp, Reg::T8, Reg::T0));
                out.push(r(Opcode::Mv, d, Reg::T0));
                out.push(Item::Op(Op::Branch { eq: false, cond: Reg::T8, b: Trit::Neg, target: skip }));
                constant(out, (1i64 << (32 - k)) - 1, d, line)?;
                out.push(Item::Place(skip));
            } else {
                out.push(store(a, Reg::T0, ARG_A));
                constant(out, 15 - k as i64, Reg::T8, line)?;
                out.push(store(Reg::T8, Reg::T0, ARG_B));
                call(unit, rt, Routine::Srl, d, out);
            }
        }
        RvOp::Lui => constant(out, (k as i64) << 12, d, line)?,
        RvOp::Li => constant(out, k as i64, d, line)?,
        RvOp::Lw | RvOp::Sw => {
            if k % 4 != 0 {
                return Err(TranspileError::Misaligned { line, offset: k });
            }
            let w = k / 4;
            let (base, off) = if (-13..=13).contains(&w) {
                (a, w as i16)
            } else {
                constant(out, w as i64, Reg::T8, line)?;
                out.push(r(Opcode::Add, Reg::T8, a));
                (Reg::T8, 0)
            };
            out.push(match rv.op {
                RvOp::Lw => load(d, base, off),
                _ => store(b, base, off),
            });
        }
        RvOp::Beq | RvOp::Bne | RvOp::Blt | RvOp::Bge => {
            mv(out, Reg::T8, a);
            out.push(r(Opcode::Comp, Reg::T8, b));
            let (eq, trit) = match rv.op {
                RvOp::Beq => (true, Trit::Zero),
                RvOp::Bne => (false, Trit::Zero),
                RvOp::Blt => (true, Trit::Neg),
                _ => (false, Trit::Neg),
            };
            let (t, here) = target(unit, &rv.target);
            return Ok(Some((Op::Branch { eq, cond: Reg::T8, b: trit, target: t }, here)));
        }
        RvOp::Jal => {
            let link = if rv.rd == 0 { Reg::T8 } else { d };
            let (t, here) = target(unit, &rv.target);
            return Ok(Some((Op::Jump { link, target: t }, here)));
        }
        RvOp::Jalr => {
            if k != 0 {
                return Err(TranspileError::Unsupported { line, what: "jalr with a nonzero offset" });
            }
            let link = if rv.rd == 0 { Reg::T8 } else { d };
            return Ok(Some((Op::Ins(Instruction::Jalr { ta: link, tb: a, imm: 0 }), None)));
        }
    }
    Ok(None)
}

fn call(unit: &mut Unit, rt: &mut Runtime, kind: Routine, d: Reg, out: &mut Vec<Item>) {
    let entry = rt.entry(unit, kind);
    out.push(Item::Op(Op::Jump { link: Reg::T8, target: entry }));
    out.push(load(d, Reg::T0, RESULT));
}

/// Entry points of the bitwise runtime routine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Routine {
    And,
    Or,
    Xor,
    /// Logical right shift; ARG_B holds the count of result bits.
    Srl,
}

/// Tracks which routine entries the program calls.
#[derive(Default)]
pub(crate) struct Runtime {
    entries: [Option<LabelId>; 4],
}

impl Runtime {
    fn entry(&mut self, unit: &mut Unit, kind: Routine) -> LabelId {
        let hint = match kind {
            Routine::And => "rt_and",
            Routine::Or => "rt_or",
            Routine::Xor => "rt_xor",
            Routine::Srl => "rt_srl",
        };
        *self.entries[kind as usize].get_or_insert_with(|| unit.fresh(hint))
    }

    /// Appends the routine after the program if anything calls it.
    ///
    /// Operands are 15-bit two's complement values (every nine-trit value
    /// fits). Each is split into its top two bits `t` (0..=3) and a 13-bit
    /// remainder `l`, so no intermediate leaves the word range. A loop then
    /// takes bits from the top, accumulating `r = 2r + (bit_a & bit_b)`.
    /// When both operands are negative the sign bit of the AND is set and
    /// `r - 2^15` (congruent to `r + 6598` modulo 3^9) is the signed value.
    /// OR and XOR follow as `a + b - and` and `a + b - 2·and`. The shift
    /// entry ANDs with -1 and stops after the requested number of bits.
    pub(crate) fn append(mut self, unit: &mut Unit) {
        if self.entries.iter().all(Option::is_none) {
            return;
        }
        let [and, or, xor, srl] =
            [Routine::And, Routine::Or, Routine::Xor, Routine::Srl].map(|k| self.entry(unit, k));
        let mut l = |h: &str| unit.fresh(h);
        let (set_mode, common, lp, nobit) = (l("rt_mode"), l("rt_common"), l("rt_loop"), l("rt_nobit"));
        let (fix_done, or_done, done) = (l("rt_post"), l("rt_or_done"), l("rt_done"));
        let split_labels = [[l("rt_pos"), l("rt_split")], [l("rt_pos"), l("rt_split")]];
        let shift_labels = [[l("rt_nc"), l("rt_nw")], [l("rt_nc"), l("rt_nw")]];

        let (t8, t0) = (Reg::T8, Reg::T0);
        let always = |target| Item::Op(Op::Branch { eq: true, cond: Reg::T0, b: Trit::Zero, target });
        let br = |eq, cond, b, target| Item::Op(Op::Branch { eq, cond, b, target });
        let c8192 = [imm(Opcode::Lui, t8, 34), imm(Opcode::Li, t8, -70)];
        let c4096 = [imm(Opcode::Lui, t8, 17), imm(Opcode::Li, t8, -35)];

        let mut o: Vec<Item> = vec![Item::Place(and)];
        o.push(store(t8, t0, LINK));
        o.push(r(Opcode::Mv, t8, t0));
        o.push(always(set_mode));
        o.push(Item::Place(or));
        o.push(store(t8, t0, LINK));
        o.extend([imm(Opcode::Lui, t8, 0), imm(Opcode::Li, t8, 1)]);
        o.push(always(set_mode));
        o.push(Item::Place(xor));
        o.push(store(t8, t0, LINK));
        o.extend([imm(Opcode::Lui, t8, 0), imm(Opcode::Li, t8, -1)]);
        o.push(Item::Place(set_mode));
        o.push(store(t8, t0, MODE));
        o.extend([imm(Opcode::Lui, t8, 0), imm(Opcode::Li, t8, 15)]);
        o.push(store(t8, t0, COUNT));
        o.push(always(common));
        o.push(Item::Place(srl));
        o.push(store(t8, t0, LINK));
        o.push(store(t0, t0, MODE));
        o.push(load(t8, t0, ARG_B));
        o.push(store(t8, t0, COUNT));
        o.extend([imm(Opcode::Lui, t8, 0), imm(Opcode::Li, t8, -1)]);
        o.push(store(t8, t0, ARG_B));

        o.push(Item::Place(common));
        for (k, reg) in [Reg::T3, Reg::T4, Reg::T5, Reg::T6, Reg::T7].into_iter().enumerate() {
            o.push(store(reg, t0, ROUTINE_SAVE[k]));
        }
        o.push(load(Reg::T3, t0, ARG_A));
        o.push(load(Reg::T4, t0, ARG_B));
        // (remainder, top bits) = (T3, T5) for A and (T4, T6) for B.
        for (k, (x, t)) in [(Reg::T3, Reg::T5), (Reg::T4, Reg::T6)].into_iter().enumerate() {
            let [pos, fin] = split_labels[k];
            o.push(r(Opcode::Mv, t, t0));
            o.push(r(Opcode::Mv, t8, x));
            o.push(r(Opcode::Comp, t8, t0));
            o.push(br(false, t8, Trit::Neg, pos));
            o.extend(c8192);
            o.push(r(Opcode::Add, x, t8));
            o.push(imm(Opcode::Addi, t, 3));
            o.push(r(Opcode::Mv, t8, x));
            o.push(r(Opcode::Comp, t8, t0));
            o.push(br(false, t8, Trit::Neg, fin));
            o.extend(c8192);
            o.push(r(Opcode::Add, x, t8));
            o.push(imm(Opcode::Addi, t, -1));
            o.push(always(fin));
            o.push(Item::Place(pos));
            o.extend(c8192);
            o.push(r(Opcode::Comp, t8, x));
            o.push(br(true, t8, Trit::Pos, fin));
            o.extend(c8192);
            o.push(r(Opcode::Sub, x, t8));
            o.push(imm(Opcode::Addi, t, 1));
            o.push(Item::Place(fin));
        }
        o.push(r(Opcode::Mv, Reg::T7, t0));

        o.push(Item::Place(lp));
        o.push(r(Opcode::Add, Reg::T7, Reg::T7));
        for t in [Reg::T5, Reg::T6] {
            o.push(r(Opcode::Mv, t8, t));
            o.push(imm(Opcode::Addi, t8, -2));
            o.push(r(Opcode::Comp, t8, t0));
            o.push(br(true, t8, Trit::Neg, nobit));
        }
        o.push(imm(Opcode::Addi, Reg::T7, 1));
        o.push(Item::Place(nobit));
        for (k, (x, t)) in [(Reg::T3, Reg::T5), (Reg::T4, Reg::T6)].into_iter().enumerate() {
            let [nc, nw] = shift_labels[k];
            o.push(r(Opcode::Add, t, t));
            o.extend(c4096);
            o.push(r(Opcode::Comp, t8, x));
            o.push(br(true, t8, Trit::Pos, nc));
            o.extend(c4096);
            o.push(r(Opcode::Sub, x, t8));
            o.push(imm(Opcode::Addi, t, 1));
            o.push(Item::Place(nc));
            o.push(r(Opcode::Add, x, x));
            o.push(r(Opcode::Mv, t8, t));
            o.push(imm(Opcode::Addi, t8, -4));
            o.push(r(Opcode::Comp, t8, t0));
            o.push(br(true, t8, Trit::Neg, nw));
            o.push(imm(Opcode::Addi, t, -4));
            o.push(Item::Place(nw));
        }
        o.push(load(t8, t0, COUNT));
        o.push(imm(Opcode::Addi, t8, -1));
        o.push(store(t8, t0, COUNT));
        o.push(r(Opcode::Comp, t8, t0));
        o.push(br(false, t8, Trit::Zero, lp));

        for slot in [ARG_A, ARG_B] {
            o.push(load(t8, t0, slot));
            o.push(r(Opcode::Comp, t8, t0));
            o.push(br(false, t8, Trit::Neg, fix_done));
        }
        o.extend([imm(Opcode::Lui, t8, 27), imm(Opcode::Li, t8, 37)]);
        o.push(r(Opcode::Add, Reg::T7, t8));
        o.push(Item::Place(fix_done));

        o.push(load(t8, t0, MODE));
        o.push(br(true, t8, Trit::Zero, done));
        o.push(load(Reg::T3, t0, ARG_A));
        o.push(load(Reg::T4, t0, ARG_B));
        o.push(r(Opcode::Add, Reg::T3, Reg::T4));
        o.push(r(Opcode::Sub, Reg::T3, Reg::T7));
        o.push(br(true, t8, Trit::Pos, or_done));
        o.push(r(Opcode::Sub, Reg::T3, Reg::T7));
        o.push(Item::Place(or_done));
        o.push(r(Opcode::Mv, Reg::T7, Reg::T3));
        o.push(Item::Place(done));
        o.push(store(Reg::T7, t0, RESULT));
        for (k, reg) in [Reg::T3, Reg::T4, Reg::T5, Reg::T6, Reg::T7].into_iter().enumerate() {
            o.push(load(reg, t0, ROUTINE_SAVE[k]));
        }
        o.push(load(t8, t0, LINK));
        o.push(ins(Instruction::Jalr { ta: t8, tb: t8, imm: 0 }));

        unit.fixed = true;
        for item in o {
            match item {
                Item::Op(op) => unit.push(op),
                Item::Place(l) => unit.place(l),
            }
        }
        unit.fixed = false;
    }
}
