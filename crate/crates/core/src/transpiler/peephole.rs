//! Redundancy elimination.

use super::{Line, Op, Unit};
use crate::isa::{Instruction, Opcode, Reg};

/// Removes instructions that cannot change the result, to a fixpoint:
///
/// * `MV a, a`;
/// * a repeat of an earlier MV/LUI/LI in the same block when nothing in
///   between wrote its destination or source;
/// * `ADDI a, 0` and shifts by 0;
/// * `MV T8, x; MV y, T8` becomes `MV y, x` when T8 is dead afterwards.
///
/// Labels on a removed line move to the next line. Lines of the runtime
/// routine are left alone. Returns the number of instructions removed.
pub fn eliminate_redundancy(unit: &mut Unit) -> usize {
    let mut removed = 0;
    loop {
        let before = removed;
        let mut i = 0;
        while i < unit.lines.len() {
            if unit.lines[i].fixed {
                i += 1;
                continue;
            }
            if is_identity(&unit.lines[i].op) {
                remove(unit, i);
                removed += 1;
                continue;
            }
            removed += drop_repeats(unit, i);
            if collapse_scratch_move(unit, i) {
                removed += 1;
            }
            i += 1;
        }
        if removed == before {
            return removed;
        }
    }
}

fn is_identity(op: &Op) -> bool {
    match *op {
        Op::Ins(Instruction::R { op: Opcode::Mv, ta, tb }) => ta == tb,
        Op::Ins(Instruction::I { op: Opcode::Addi | Opcode::Sri | Opcode::Sli, imm: 0, .. }) => true,
        _ => false,
    }
}

/// Deletes line `i`, handing its labels to the following line.
fn remove(unit: &mut Unit, i: usize) {
    let line = unit.lines.remove(i);
    assert!(i < unit.lines.len(), "the last line is always a transfer");
    let next = &mut unit.lines[i].labels;
    let mut labels = line.labels;
    labels.append(next);
    *next = labels;
}

fn idempotent(op: &Op) -> Option<Instruction> {
    match *op {
        Op::Ins(i @ Instruction::R { op: Opcode::Mv, .. }) => Some(i),
        Op::Ins(i @ Instruction::I { op: Opcode::Lui | Opcode::Li, .. }) => Some(i),
        _ => None,
    }
}

/// Removes later copies of the idempotent group at line `i` within its
/// block. A group is one MV/LUI/LI, or a LUI and LI pair loading the same
/// register (a materialized constant).
fn drop_repeats(unit: &mut Unit, i: usize) -> usize {
    let Some(first) = idempotent(&unit.lines[i].op) else {
        return 0;
    };
    let dest = first.dest().expect("writes a register");
    let src = match first {
        Instruction::R { tb, .. } => Some(tb),
        _ => None,
    };
    let mut group = alloc::vec![Op::Ins(first)];
    if let (Instruction::I { op: Opcode::Lui, .. }, Some(next)) = (first, unit.lines.get(i + 1)) {
        if let Op::Ins(li @ Instruction::I { op: Opcode::Li, ta, .. }) = next.op {
            if ta == dest && next.labels.is_empty() && !next.fixed {
                group.push(Op::Ins(li));
            }
        }
    }
    let n = group.len();
    let mut removed = 0;
    let mut j = i + n;
    while j < unit.lines.len() {
        let plain = |line: &Line| line.labels.is_empty() && !line.fixed && !line.op.is_control();
        if !plain(&unit.lines[j]) {
            break;
        }
        let window = &unit.lines[j..(j + n).min(unit.lines.len())];
        if window.len() == n && window.iter().all(plain) && window.iter().map(|l| l.op).eq(group.iter().copied()) {
            for _ in 0..n {
                remove(unit, j);
            }
            removed += n;
            continue;
        }
        let op = unit.lines[j].op;
        if op.writes(dest) || src.is_some_and(|s| op.writes(s)) {
            break;
        }
        j += 1;
    }
    removed
}

/// `MV T8, x; MV y, T8` at `i` with T8 dead afterwards becomes `MV y, x`.
fn collapse_scratch_move(unit: &mut Unit, i: usize) -> bool {
    let Some(next) = unit.lines.get(i + 1) else {
        return false;
    };
    let (Op::Ins(Instruction::R { op: Opcode::Mv, ta: t, tb: x }), Op::Ins(Instruction::R { op: Opcode::Mv, ta: y, tb: t2 })) =
        (unit.lines[i].op, next.op)
    else {
        return false;
    };
    if t != Reg::T8 || t2 != Reg::T8 || x == Reg::T8 || !next.labels.is_empty() || next.fixed {
        return false;
    }
    if !scratch_dead_after(unit, i + 2) {
        return false;
    }
    unit.lines[i + 1].op = Op::Ins(Instruction::r(Opcode::Mv, y, x));
    remove(unit, i);
    true
}

/// True when every path from line `from` overwrites T8 before reading it.
/// Labels and transfers end the scan conservatively.
fn scratch_dead_after(unit: &Unit, from: usize) -> bool {
    for line in &unit.lines[from..] {
        if !line.labels.is_empty() || line.op.reads(Reg::T8) {
            return false;
        }
        if line.op.writes(Reg::T8) {
            return true;
        }
        if line.op.is_control() {
            return false;
        }
    }
    true
}
