//! RV-32I subset to ART-9 transpiler.
//!
//! The pipeline is parse, allocate registers, map each instruction to an
//! ART-9 sequence, eliminate redundancy, retarget branches and emit
//! assembly text that [`crate::isa::assemble`] accepts.
//!
//! Conventions of the generated code:
//!
//! * `x0` lives in `T0`, which the prologue zeroes and nothing writes again.
//!   `ra` is `T1`, `sp` is `T2` and `T8` is scratch for lowering sequences.
//!   Other registers get `T3`..`T7` by descending use count, then spill.
//! * Data memory is word addressed. `lw`/`sw` byte offsets are divided by
//!   4, so `lw a0, 8(s0)` reads word `s0 + 2`.
//! * Balanced addresses `RESERVED_LOW..=RESERVED_HIGH` form a window that
//!   generated code reaches through `T0` with a single LOAD/STORE. It holds
//!   spill slots and the state of the bitwise runtime routine, so RV
//!   programs must not touch it.
//! * `and`/`or`/`xor`/`andi`/`xori`/`srli` keep their two's complement
//!   meaning through a shared runtime routine appended after the program;
//!   the native ternary logic instructions compute something else.
//! * The program halts with `JAL T8, 0`, a transfer to itself.

mod lower;
mod peephole;
mod regalloc;
mod retarget;
mod rv;

#[cfg(any(test, feature = "reference"))]
mod reference;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use crate::isa::{assemble, AsmError, Instruction, Opcode, ProgramImage, Reg};
use crate::ternary::{Trit, WORD_MAX, WORD_STATES};

pub use lower::{map_instruction, materialize_constant};
pub use peephole::eliminate_redundancy;
pub use regalloc::{allocate_registers, Loc, RegMap};
pub use retarget::retarget_branches;
pub use rv::{abi_name, parse_rv32i, RvInstruction, RvOp, RvParseError, RvParseErrorKind, RvProgram, RvTarget};

#[cfg(any(test, feature = "reference"))]
pub use reference::{compare_outputs, run_reference, RefError, RvState};

/// Lowest balanced address of the reserved window.
pub const RESERVED_LOW: i16 = -13;
/// Highest balanced address of the reserved window.
pub const RESERVED_HIGH: i16 = 13;
/// Default address of the first spill slot; later slots count down.
pub const DEFAULT_SPILL_BASE: i16 = 13;
/// Lowest address a spill slot may take.
pub const SPILL_FLOOR: i16 = 1;
/// Default initial stack pointer.
pub const DEFAULT_STACK_TOP: i32 = 9000;

// Runtime routine state and save areas inside the reserved window.
pub(crate) const ARG_A: i16 = -13;
pub(crate) const ARG_B: i16 = -12;
pub(crate) const COUNT: i16 = -11;
pub(crate) const MODE: i16 = -10;
pub(crate) const RESULT: i16 = -9;
pub(crate) const LINK: i16 = -8;
/// Where the runtime routine saves T3..T7.
pub(crate) const ROUTINE_SAVE: [i16; 5] = [-7, -6, -5, -4, -3];
/// Where a lowering sequence saves registers it borrows for staging.
pub(crate) const BORROW_SAVE: [i16; 3] = [-2, -1, 0];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranspileOptions {
    /// Initial `sp`.
    pub stack_top: i32,
    /// Address of the first spill slot, in `SPILL_FLOOR..=RESERVED_HIGH`.
    pub spill_base: i16,
    /// Run the redundancy elimination pass.
    pub peephole: bool,
}

impl Default for TranspileOptions {
    fn default() -> Self {
        TranspileOptions {
            stack_top: DEFAULT_STACK_TOP,
            spill_base: DEFAULT_SPILL_BASE,
            peephole: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TranspileError {
    Parse(RvParseError),
    /// Constant outside the nine-trit range.
    ConstantOutOfRange { line: usize, value: i64 },
    /// `lw`/`sw` byte offset not a multiple of 4.
    Misaligned { line: usize, offset: i32 },
    /// Operand form the subset does not cover.
    Unsupported { line: usize, what: &'static str },
    /// More live RV registers than registers plus spill slots.
    TooManyRegisters { needed: usize, available: usize },
    BadOption(&'static str),
    ProgramTooLarge { words: usize },
    /// Generated text failed to assemble; a transpiler bug.
    Internal(AsmError),
}

impl fmt::Display for TranspileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranspileError::Parse(e) => write!(f, "{e}"),
            TranspileError::ConstantOutOfRange { line, value } => {
                write!(f, "line {line}: constant {value} outside ±{WORD_MAX}")
            }
            TranspileError::Misaligned { line, offset } => {
                write!(f, "line {line}: byte offset {offset} is not a multiple of 4")
            }
            TranspileError::Unsupported { line, what } => write!(f, "line {line}: unsupported {what}"),
            TranspileError::TooManyRegisters { needed, available } => {
                write!(f, "{needed} registers need homes but only {available} exist")
            }
            TranspileError::BadOption(what) => write!(f, "invalid option: {what}"),
            TranspileError::ProgramTooLarge { words } => {
                write!(f, "program of {words} words exceeds instruction memory")
            }
            TranspileError::Internal(e) => write!(f, "generated code failed to assemble: {e}"),
        }
    }
}

impl core::error::Error for TranspileError {}

impl From<RvParseError> for TranspileError {
    fn from(e: RvParseError) -> Self {
        TranspileError::Parse(e)
    }
}

/// Index into [`Unit`]'s label table.
pub type LabelId = usize;

/// One output operation. Transfers name labels until emission.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Ins(Instruction),
    /// BEQ (`eq`) or BNE on the least significant trit of `cond`.
    Branch { eq: bool, cond: Reg, b: Trit, target: LabelId },
    /// JAL.
    Jump { link: Reg, target: LabelId },
    /// Absolute transfer through T8: LUI, LI, JALR.
    FarJump { link: Reg, target: LabelId },
}

impl Op {
    /// Instruction words this op occupies.
    pub fn size(&self) -> usize {
        match self {
            Op::FarJump { .. } => 3,
            _ => 1,
        }
    }

    pub fn is_control(&self) -> bool {
        match self {
            Op::Ins(i) => i.is_control(),
            _ => true,
        }
    }

    pub fn reads(&self, r: Reg) -> bool {
        match self {
            Op::Ins(i) => i.reads(r),
            Op::Branch { cond, .. } => *cond == r,
            Op::Jump { .. } | Op::FarJump { .. } => false,
        }
    }

    pub fn writes(&self, r: Reg) -> bool {
        match self {
            Op::Ins(i) => i.dest() == Some(r),
            Op::Branch { .. } => false,
            Op::Jump { link, .. } => *link == r,
            Op::FarJump { link, .. } => *link == r || r == Reg::T8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Line {
    /// Labels defined at this line.
    pub labels: Vec<LabelId>,
    pub op: Op,
    /// Part of the runtime routine; left alone by redundancy elimination.
    pub fixed: bool,
}

/// Output program under construction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Unit {
    pub lines: Vec<Line>,
    names: Vec<String>,
    by_name: BTreeMap<String, LabelId>,
    pending: Vec<LabelId>,
    fixed: bool,
}

impl Unit {
    pub fn new() -> Unit {
        Unit::default()
    }

    /// The label with this name, created on first use.
    pub fn label(&mut self, name: &str) -> LabelId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), id);
        id
    }

    /// A new label whose name starts with `hint` and collides with nothing
    /// defined so far.
    pub fn fresh(&mut self, hint: &str) -> LabelId {
        let mut n = self.names.len();
        loop {
            let name = format!("__{hint}{n}");
            if !self.by_name.contains_key(&name) {
                return self.label(&name);
            }
            n += 1;
        }
    }

    pub fn name(&self, id: LabelId) -> &str {
        &self.names[id]
    }

    /// Defines `id` at the next pushed op.
    pub fn place(&mut self, id: LabelId) {
        self.pending.push(id);
    }

    pub fn push(&mut self, op: Op) {
        let labels = core::mem::take(&mut self.pending);
        self.lines.push(Line { labels, op, fixed: self.fixed });
    }

    pub fn push_ins(&mut self, ins: Instruction) {
        self.push(Op::Ins(ins));
    }

    /// Instruction words in the unit.
    pub fn words(&self) -> usize {
        self.lines.iter().map(|l| l.op.size()).sum()
    }

    /// Label to line index.
    pub fn label_lines(&self) -> Vec<Option<usize>> {
        let mut at = alloc::vec![None; self.names.len()];
        for (i, line) in self.lines.iter().enumerate() {
            for &l in &line.labels {
                at[l] = Some(i);
            }
        }
        at
    }

    /// Line index to first word address.
    pub fn addresses(&self) -> Vec<usize> {
        let mut addr = Vec::with_capacity(self.lines.len() + 1);
        let mut a = 0;
        for line in &self.lines {
            addr.push(a);
            a += line.op.size();
        }
        addr.push(a);
        addr
    }

    /// Assembly text for the unit.
    pub fn emit(&self) -> String {
        let addr = self.addresses();
        let at = self.label_lines();
        let target_addr = |l: LabelId| addr[at[l].expect("every referenced label is placed")];
        let mut out = String::new();
        for line in &self.lines {
            for &l in &line.labels {
                let _ = writeln!(out, "{}:", self.names[l]);
            }
            match line.op {
                Op::Ins(i) => {
                    let _ = writeln!(out, "    {i}");
                }
                Op::Branch { eq, cond, b, target } => {
                    let m = if eq { "BEQ" } else { "BNE" };
                    let _ = writeln!(out, "    {m} {cond}, {b}, {}", self.names[target]);
                }
                Op::Jump { link, target } => {
                    let _ = writeln!(out, "    JAL {link}, {}", self.names[target]);
                }
                Op::FarJump { link, target } => {
                    let balanced = target_addr(target) as i32 - WORD_MAX;
                    let [hi, lo] = materialize_constant(balanced, Reg::T8).expect("address in range");
                    let _ = writeln!(out, "    {hi}\n    {li}", li = lo);
                    let _ = writeln!(
                        out,
                        "    {}",
                        Instruction::Jalr { ta: link, tb: Reg::T8, imm: 0 }
                    );
                }
            }
        }
        out
    }
}

/// Counters reported with every transpilation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TranspileStats {
    pub input_instructions: usize,
    pub output_instructions: usize,
    pub removed_by_peephole: usize,
    pub spills: usize,
    /// Trit cells needed to store the output, 9 per instruction.
    pub memory_cells: usize,
}

impl fmt::Display for TranspileStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input_instructions: {}", self.input_instructions)?;
        writeln!(f, "output_instructions: {}", self.output_instructions)?;
        writeln!(f, "removed_by_peephole: {}", self.removed_by_peephole)?;
        writeln!(f, "spills: {}", self.spills)?;
        write!(f, "memory_cells: {}", self.memory_cells)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranspileOutput {
    pub asm: String,
    pub image: ProgramImage,
    pub regmap: RegMap,
    pub stats: TranspileStats,
}

/// Parses and transpiles RV-32I assembly text.
pub fn transpile(source: &str, opts: &TranspileOptions) -> Result<TranspileOutput, TranspileError> {
    transpile_program(&parse_rv32i(source)?, opts)
}

/// Transpiles an already parsed program.
pub fn transpile_program(program: &RvProgram, opts: &TranspileOptions) -> Result<TranspileOutput, TranspileError> {
    if !(SPILL_FLOOR..=RESERVED_HIGH).contains(&opts.spill_base) {
        return Err(TranspileError::BadOption("spill base outside the reserved window"));
    }
    if opts.stack_top.unsigned_abs() > WORD_MAX as u32 {
        return Err(TranspileError::BadOption("stack top outside the word range"));
    }
    let regmap = allocate_registers(program, opts.spill_base)?;

    let mut unit = Unit::new();
    for ins in &program.instructions {
        for l in &ins.labels {
            unit.label(l);
        }
    }
    for l in &program.trailing_labels {
        unit.label(l);
    }

    unit.push_ins(Instruction::i(Opcode::Lui, Reg::T0, 0));
    for i in materialize_constant(opts.stack_top, Reg::T2).expect("checked above") {
        unit.push_ins(i);
    }
    let mut runtime = lower::Runtime::default();
    for ins in &program.instructions {
        for l in &ins.labels {
            let id = unit.label(l);
            unit.place(id);
        }
        lower::lower_instruction(&mut unit, &mut runtime, ins, &regmap)?;
    }
    for l in &program.trailing_labels {
        let id = unit.label(l);
        unit.place(id);
    }
    unit.push_ins(Instruction::Jal { ta: Reg::T8, offset: 0 });
    runtime.append(&mut unit);

    let removed = if opts.peephole { eliminate_redundancy(&mut unit) } else { 0 };
    retarget_branches(&mut unit)?;

    let asm = unit.emit();
    let image = assemble(&asm).map_err(TranspileError::Internal)?;
    let n = image.len();
    Ok(TranspileOutput {
        asm,
        image,
        stats: TranspileStats {
            input_instructions: program.instructions.len(),
            output_instructions: n,
            removed_by_peephole: removed,
            spills: regmap.spills(),
            memory_cells: 9 * n,
        },
        regmap,
    })
}

/// Largest program the instruction memory holds.
pub(crate) const TIM_WORDS: usize = WORD_STATES as usize;
