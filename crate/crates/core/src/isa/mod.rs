//! The 24-instruction ART-9 ISA: decoded instruction model, trit-level
//! encoding, assembler and disassembler.
//!
//! Every instruction is one 9-trit word. The opcode is a prefix-free ternary
//! codeword occupying the most significant trits; operand fields follow in
//! the order `Ta, Tb, B, imm`, each written most significant trit first.
//!
//! | length | codewords |
//! |--------|-----------|
//! | 2 | `--` LI, `-0` BEQ, `-+` BNE, `0-` JAL, `00` JALR, `0+` LOAD, `+-` STORE |
//! | 3 | `+0-` LUI |
//! | 4 | `+00-` ANDI, `+000` ADDI |
//! | 5 | `+00+-` SRI, `+00+0` SLI, `++xyz` R-type functions |
//!
//! Codes starting `+0+`, `+00++` and the unused `++` leaves are reserved.

mod asm;
mod encoding;

pub use asm::{assemble, disassemble, AsmError, AsmErrorKind};
pub use asm::disassemble_word;
pub use encoding::{decode, encode, kraft_sum, DecodeError, EncodeError, OPCODE_TABLE};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ternary::{balanced_limit, Trit, Word9, WORD_STATES};

/// A general-purpose ternary register, `T0`..`T8`.
///
/// Encoded as the 2-trit pattern whose unsigned value is the index, so
/// `--` is T0, `00` is T4 and `++` is T8.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reg(u8);

impl Reg {
    pub const T0: Reg = Reg(0);
    pub const T1: Reg = Reg(1);
    pub const T2: Reg = Reg(2);
    pub const T3: Reg = Reg(3);
    pub const T4: Reg = Reg(4);
    pub const T5: Reg = Reg(5);
    pub const T6: Reg = Reg(6);
    pub const T7: Reg = Reg(7);
    pub const T8: Reg = Reg(8);

    pub const COUNT: usize = 9;

    pub const fn new(index: u8) -> Option<Reg> {
        if index < 9 {
            Some(Reg(index))
        } else {
            None
        }
    }

    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = Reg> {
        (0..9).map(Reg)
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

/// Instruction class from the ISA table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Format {
    R,
    I,
    B,
    M,
}

/// The 24 mnemonics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    Mv,
    Pti,
    Nti,
    Sti,
    And,
    Or,
    Xor,
    Add,
    Sub,
    Sr,
    Sl,
    Comp,
    Andi,
    Addi,
    Sri,
    Sli,
    Lui,
    Li,
    Beq,
    Bne,
    Jal,
    Jalr,
    Load,
    Store,
}

/// One operand slot of an encoded instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Ta,
    Tb,
    B,
    Imm(usize),
}

impl Field {
    pub const fn width(self) -> usize {
        match self {
            Field::Ta | Field::Tb => 2,
            Field::B => 1,
            Field::Imm(w) => w,
        }
    }
}

impl Opcode {
    pub const ALL: [Opcode; 24] = [
        Opcode::Mv,
        Opcode::Pti,
        Opcode::Nti,
        Opcode::Sti,
        Opcode::And,
        Opcode::Or,
        Opcode::Xor,
        Opcode::Add,
        Opcode::Sub,
        Opcode::Sr,
        Opcode::Sl,
        Opcode::Comp,
        Opcode::Andi,
        Opcode::Addi,
        Opcode::Sri,
        Opcode::Sli,
        Opcode::Lui,
        Opcode::Li,
        Opcode::Beq,
        Opcode::Bne,
        Opcode::Jal,
        Opcode::Jalr,
        Opcode::Load,
        Opcode::Store,
    ];

    pub const fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Mv => "MV",
            Opcode::Pti => "PTI",
            Opcode::Nti => "NTI",
            Opcode::Sti => "STI",
            Opcode::And => "AND",
            Opcode::Or => "OR",
            Opcode::Xor => "XOR",
            Opcode::Add => "ADD",
            Opcode::Sub => "SUB",
            Opcode::Sr => "SR",
            Opcode::Sl => "SL",
            Opcode::Comp => "COMP",
            Opcode::Andi => "ANDI",
            Opcode::Addi => "ADDI",
            Opcode::Sri => "SRI",
            Opcode::Sli => "SLI",
            Opcode::Lui => "LUI",
            Opcode::Li => "LI",
            Opcode::Beq => "BEQ",
            Opcode::Bne => "BNE",
            Opcode::Jal => "JAL",
            Opcode::Jalr => "JALR",
            Opcode::Load => "LOAD",
            Opcode::Store => "STORE",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Opcode> {
        Opcode::ALL
            .iter()
            .copied()
            .find(|op| op.mnemonic().eq_ignore_ascii_case(s))
    }

    pub const fn format(self) -> Format {
        match self {
            Opcode::Mv
            | Opcode::Pti
            | Opcode::Nti
            | Opcode::Sti
            | Opcode::And
            | Opcode::Or
            | Opcode::Xor
            | Opcode::Add
            | Opcode::Sub
            | Opcode::Sr
            | Opcode::Sl
            | Opcode::Comp => Format::R,
            Opcode::Andi
            | Opcode::Addi
            | Opcode::Sri
            | Opcode::Sli
            | Opcode::Lui
            | Opcode::Li => Format::I,
            Opcode::Beq | Opcode::Bne | Opcode::Jal | Opcode::Jalr => Format::B,
            Opcode::Load | Opcode::Store => Format::M,
        }
    }

    /// Operand fields in encoding order.
    pub const fn fields(self) -> &'static [Field] {
        match self.format() {
            Format::R => &[Field::Ta, Field::Tb],
            _ => match self {
                Opcode::Andi | Opcode::Addi => &[Field::Ta, Field::Imm(3)],
                Opcode::Sri | Opcode::Sli => &[Field::Ta, Field::Imm(2)],
                Opcode::Lui => &[Field::Ta, Field::Imm(4)],
                Opcode::Li => &[Field::Ta, Field::Imm(5)],
                Opcode::Beq | Opcode::Bne => &[Field::Ta, Field::B, Field::Imm(4)],
                Opcode::Jal => &[Field::Ta, Field::Imm(5)],
                _ => &[Field::Ta, Field::Tb, Field::Imm(3)],
            },
        }
    }

    /// Width in trits of the immediate field, if any.
    pub fn imm_width(self) -> Option<usize> {
        self.fields().iter().find_map(|f| match f {
            Field::Imm(w) => Some(*w),
            _ => None,
        })
    }

    /// Inclusive balanced range of the immediate field.
    pub fn imm_range(self) -> Option<(i32, i32)> {
        self.imm_width().map(|w| {
            let m = balanced_limit(w);
            (-m, m)
        })
    }

    /// PC-relative control transfers, whose immediate is an offset.
    pub const fn is_relative_branch(self) -> bool {
        matches!(self, Opcode::Beq | Opcode::Bne | Opcode::Jal)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// A decoded instruction.
///
/// Field presence follows the opcode's format exactly; immediates hold
/// balanced values within the range of their trit width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    /// Register-register: `TRF[Ta] = f(TRF[Ta], TRF[Tb])` or `f(TRF[Tb])`.
    R { op: Opcode, ta: Reg, tb: Reg },
    /// Register-immediate (ANDI, ADDI, SRI, SLI, LUI, LI).
    I { op: Opcode, ta: Reg, imm: i16 },
    /// `PC += offset` when `TRF[cond][0] == b`.
    Beq { cond: Reg, b: Trit, offset: i16 },
    /// `PC += offset` when `TRF[cond][0] != b`.
    Bne { cond: Reg, b: Trit, offset: i16 },
    Jal { ta: Reg, offset: i16 },
    Jalr { ta: Reg, tb: Reg, imm: i16 },
    Load { ta: Reg, tb: Reg, imm: i16 },
    Store { ta: Reg, tb: Reg, imm: i16 },
}

/// Raw operand values, used while packing and unpacking fields.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Operands {
    pub ta: u8,
    pub tb: u8,
    pub b: i8,
    pub imm: i32,
}

impl Instruction {
    /// The canonical no-op, `ADDI T4, 0`.
    pub const NOP: Instruction = Instruction::I {
        op: Opcode::Addi,
        ta: Reg::T4,
        imm: 0,
    };

    /// The halt idiom, a self-jump `JAL T4, 0`.
    pub const HALT: Instruction = Instruction::Jal {
        ta: Reg::T4,
        offset: 0,
    };

    pub fn r(op: Opcode, ta: Reg, tb: Reg) -> Instruction {
        debug_assert_eq!(op.format(), Format::R);
        Instruction::R { op, ta, tb }
    }

    pub fn i(op: Opcode, ta: Reg, imm: i16) -> Instruction {
        debug_assert_eq!(op.format(), Format::I);
        Instruction::I { op, ta, imm }
    }

    pub fn opcode(&self) -> Opcode {
        match *self {
            Instruction::R { op, .. } | Instruction::I { op, .. } => op,
            Instruction::Beq { .. } => Opcode::Beq,
            Instruction::Bne { .. } => Opcode::Bne,
            Instruction::Jal { .. } => Opcode::Jal,
            Instruction::Jalr { .. } => Opcode::Jalr,
            Instruction::Load { .. } => Opcode::Load,
            Instruction::Store { .. } => Opcode::Store,
        }
    }

    pub fn operands(&self) -> Operands {
        let reg = |r: Reg| r.0;
        match *self {
            Instruction::R { ta, tb, .. } => Operands {
                ta: reg(ta),
                tb: reg(tb),
                ..Operands::default()
            },
            Instruction::I { ta, imm, .. } | Instruction::Jal { ta, offset: imm } => Operands {
                ta: reg(ta),
                imm: imm as i32,
                ..Operands::default()
            },
            Instruction::Beq { cond, b, offset } | Instruction::Bne { cond, b, offset } => {
                Operands {
                    ta: reg(cond),
                    b: b.value(),
                    imm: offset as i32,
                    ..Operands::default()
                }
            }
            Instruction::Jalr { ta, tb, imm }
            | Instruction::Load { ta, tb, imm }
            | Instruction::Store { ta, tb, imm } => Operands {
                ta: reg(ta),
                tb: reg(tb),
                imm: imm as i32,
                b: 0,
            },
        }
    }

    /// Builds an instruction from raw operands, ignoring fields the opcode
    /// does not have. Register indices and the branch trit must be valid.
    pub fn from_operands(op: Opcode, ops: Operands) -> Instruction {
        let ta = Reg::new(ops.ta).expect("register index");
        let tb = Reg::new(ops.tb).expect("register index");
        let imm = ops.imm as i16;
        match op {
            Opcode::Beq | Opcode::Bne => {
                let b = Trit::from_i8(ops.b).expect("branch trit");
                if op == Opcode::Beq {
                    Instruction::Beq { cond: ta, b, offset: imm }
                } else {
                    Instruction::Bne { cond: ta, b, offset: imm }
                }
            }
            Opcode::Jal => Instruction::Jal { ta, offset: imm },
            Opcode::Jalr => Instruction::Jalr { ta, tb, imm },
            Opcode::Load => Instruction::Load { ta, tb, imm },
            Opcode::Store => Instruction::Store { ta, tb, imm },
            _ => match op.format() {
                Format::R => Instruction::R { op, ta, tb },
                _ => Instruction::I { op, ta, imm },
            },
        }
    }

    /// The immediate or offset, if the format has one.
    pub fn imm(&self) -> Option<i32> {
        self.opcode().imm_width().map(|_| self.operands().imm)
    }

    /// Register written by this instruction.
    pub fn dest(&self) -> Option<Reg> {
        match *self {
            Instruction::R { ta, .. }
            | Instruction::I { ta, .. }
            | Instruction::Jal { ta, .. }
            | Instruction::Jalr { ta, .. }
            | Instruction::Load { ta, .. } => Some(ta),
            Instruction::Beq { .. } | Instruction::Bne { .. } | Instruction::Store { .. } => None,
        }
    }

    /// Registers read by this instruction (at most two, duplicates possible).
    pub fn sources(&self) -> ([Option<Reg>; 2], usize) {
        let srcs: [Option<Reg>; 2] = match *self {
            Instruction::R { op, ta, tb } => match op {
                Opcode::Mv | Opcode::Pti | Opcode::Nti | Opcode::Sti => [Some(tb), None],
                _ => [Some(ta), Some(tb)],
            },
            Instruction::I { op, ta, .. } => match op {
                Opcode::Lui => [None, None],
                _ => [Some(ta), None],
            },
            Instruction::Beq { cond, .. } | Instruction::Bne { cond, .. } => [Some(cond), None],
            Instruction::Jal { .. } => [None, None],
            Instruction::Jalr { tb, .. } | Instruction::Load { tb, .. } => [Some(tb), None],
            Instruction::Store { ta, tb, .. } => [Some(ta), Some(tb)],
        };
        let n = srcs.iter().filter(|s| s.is_some()).count();
        (srcs, n)
    }

    pub fn reads(&self, r: Reg) -> bool {
        self.sources().0.contains(&Some(r))
    }

    pub fn is_control(&self) -> bool {
        self.opcode().format() == Format::B
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = self.opcode();
        write!(f, "{}", op.mnemonic())?;
        let ops = self.operands();
        let mut sep = " ";
        for field in op.fields() {
            f.write_str(sep)?;
            sep = ", ";
            match field {
                Field::Ta => write!(f, "T{}", ops.ta)?,
                Field::Tb => write!(f, "T{}", ops.tb)?,
                Field::B => write!(f, "{}", Trit::from_i8(ops.b).expect("branch trit"))?,
                Field::Imm(_) => write!(f, "{}", ops.imm)?,
            }
        }
        Ok(())
    }
}

/// Words destined for TIM or TDM, starting at memory index `base`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProgramImage {
    pub base: u16,
    pub words: Vec<Word9>,
    /// Label to memory index, filled in by the assembler.
    pub symbols: BTreeMap<String, u16>,
}

impl ProgramImage {
    pub fn new(base: u16, words: Vec<Word9>) -> ProgramImage {
        ProgramImage {
            base,
            words,
            symbols: BTreeMap::new(),
        }
    }

    /// True when every word fits below the end of the 3^9-word space.
    pub fn fits(&self) -> bool {
        self.base as i64 + self.words.len() as i64 <= WORD_STATES as i64
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
