//! RV-32I subset: instruction model and assembly-text parser.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Supported mnemonics after pseudo-instruction expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RvOp {
    Add,
    Sub,
    And,
    Or,
    Xor,
    Addi,
    Andi,
    Xori,
    Slli,
    Srli,
    Lui,
    Lw,
    Sw,
    Beq,
    Bne,
    Blt,
    Bge,
    Jal,
    Jalr,
    /// `li rd, imm`, kept whole so any in-range constant lowers to one
    /// materialization.
    Li,
}

impl RvOp {
    pub fn mnemonic(self) -> &'static str {
        match self {
            RvOp::Add => "add",
            RvOp::Sub => "sub",
            RvOp::And => "and",
            RvOp::Or => "or",
            RvOp::Xor => "xor",
            RvOp::Addi => "addi",
            RvOp::Andi => "andi",
            RvOp::Xori => "xori",
            RvOp::Slli => "slli",
            RvOp::Srli => "srli",
            RvOp::Lui => "lui",
            RvOp::Lw => "lw",
            RvOp::Sw => "sw",
            RvOp::Beq => "beq",
            RvOp::Bne => "bne",
            RvOp::Blt => "blt",
            RvOp::Bge => "bge",
            RvOp::Jal => "jal",
            RvOp::Jalr => "jalr",
            RvOp::Li => "li",
        }
    }

    pub fn is_branch(self) -> bool {
        matches!(self, RvOp::Beq | RvOp::Bne | RvOp::Blt | RvOp::Bge)
    }
}

/// Control-transfer destination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RvTarget {
    Label(String),
    /// `.`, the instruction itself. `j .` is the halt idiom.
    Here,
}

/// One parsed instruction. Unused register fields are 0; `imm` is in the
/// units written in the source (bytes for `lw`/`sw`/`jalr`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RvInstruction {
    pub op: RvOp,
    pub rd: u8,
    pub rs1: u8,
    pub rs2: u8,
    pub imm: i32,
    pub target: Option<RvTarget>,
    /// Labels defined immediately before this instruction.
    pub labels: Vec<String>,
    /// 1-based source line.
    pub line: usize,
}

impl RvInstruction {
    fn new(op: RvOp, line: usize) -> RvInstruction {
        RvInstruction {
            op,
            rd: 0,
            rs1: 0,
            rs2: 0,
            imm: 0,
            target: None,
            labels: Vec::new(),
            line,
        }
    }

    /// Register written, if any (x0 included).
    pub fn dest(&self) -> Option<u8> {
        match self.op {
            RvOp::Sw | RvOp::Beq | RvOp::Bne | RvOp::Blt | RvOp::Bge => None,
            _ => Some(self.rd),
        }
    }

    /// Registers read, in operand order.
    pub fn sources(&self) -> Vec<u8> {
        match self.op {
            RvOp::Add | RvOp::Sub | RvOp::And | RvOp::Or | RvOp::Xor => alloc::vec![self.rs1, self.rs2],
            RvOp::Sw | RvOp::Beq | RvOp::Bne | RvOp::Blt | RvOp::Bge => alloc::vec![self.rs1, self.rs2],
            RvOp::Addi | RvOp::Andi | RvOp::Xori | RvOp::Slli | RvOp::Srli | RvOp::Lw | RvOp::Jalr => {
                alloc::vec![self.rs1]
            }
            RvOp::Lui | RvOp::Li | RvOp::Jal => Vec::new(),
        }
    }
}

impl fmt::Display for RvInstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.op.mnemonic();
        let target = match &self.target {
            Some(RvTarget::Label(l)) => l.as_str(),
            _ => ".",
        };
        match self.op {
            RvOp::Add | RvOp::Sub | RvOp::And | RvOp::Or | RvOp::Xor => {
                write!(f, "{m} x{}, x{}, x{}", self.rd, self.rs1, self.rs2)
            }
            RvOp::Addi | RvOp::Andi | RvOp::Xori | RvOp::Slli | RvOp::Srli => {
                write!(f, "{m} x{}, x{}, {}", self.rd, self.rs1, self.imm)
            }
            RvOp::Lui | RvOp::Li => write!(f, "{m} x{}, {}", self.rd, self.imm),
            RvOp::Lw | RvOp::Jalr => write!(f, "{m} x{}, {}(x{})", self.rd, self.imm, self.rs1),
            RvOp::Sw => write!(f, "{m} x{}, {}(x{})", self.rs2, self.imm, self.rs1),
            RvOp::Beq | RvOp::Bne | RvOp::Blt | RvOp::Bge => {
                write!(f, "{m} x{}, x{}, {target}", self.rs1, self.rs2)
            }
            RvOp::Jal => write!(f, "{m} x{}, {target}", self.rd),
        }
    }
}

/// A parsed source file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RvProgram {
    pub instructions: Vec<RvInstruction>,
    /// Labels after the last instruction.
    pub trailing_labels: Vec<String>,
}

impl RvProgram {
    /// Label name to instruction index (the trailing position is `len`).
    pub fn label_index(&self) -> BTreeMap<&str, usize> {
        let mut map = BTreeMap::new();
        for (i, ins) in self.instructions.iter().enumerate() {
            for l in &ins.labels {
                map.insert(l.as_str(), i);
            }
        }
        for l in &self.trailing_labels {
            map.insert(l.as_str(), self.instructions.len());
        }
        map
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RvParseErrorKind {
    Unsupported(String),
    UnknownDirective(String),
    BadRegister(String),
    BadImmediate(String),
    BadOperand(String),
    OperandCount { mnemonic: String, expected: usize, found: usize },
    BadLabel(String),
    DuplicateLabel(String),
    UndefinedLabel(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RvParseError {
    pub line: usize,
    pub kind: RvParseErrorKind,
}

impl fmt::Display for RvParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        match &self.kind {
            RvParseErrorKind::Unsupported(m) => write!(f, "unsupported instruction `{m}`"),
            RvParseErrorKind::UnknownDirective(d) => write!(f, "unknown directive `{d}`"),
            RvParseErrorKind::BadRegister(r) => write!(f, "invalid register `{r}`"),
            RvParseErrorKind::BadImmediate(s) => write!(f, "invalid immediate `{s}`"),
            RvParseErrorKind::BadOperand(s) => write!(f, "invalid operand `{s}`"),
            RvParseErrorKind::OperandCount { mnemonic, expected, found } => {
                write!(f, "`{mnemonic}` expects {expected} operands, found {found}")
            }
            RvParseErrorKind::BadLabel(l) => write!(f, "invalid label `{l}`"),
            RvParseErrorKind::DuplicateLabel(l) => write!(f, "label `{l}` defined twice"),
            RvParseErrorKind::UndefinedLabel(l) => write!(f, "undefined label `{l}`"),
        }
    }
}

impl core::error::Error for RvParseError {}

/// Directives that carry no meaning for a single text section.
const IGNORED_DIRECTIVES: &[&str] = &[
    ".text", ".globl", ".global", ".align", ".p2align", ".section", ".type", ".size", ".file", ".option",
    ".attribute", ".ident",
];

const ABI_NAMES: [&str; 32] = [
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7",
    "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6",
];

/// ABI name of a register number.
pub fn abi_name(reg: u8) -> &'static str {
    ABI_NAMES[reg as usize]
}

fn parse_reg(s: &str) -> Result<u8, RvParseErrorKind> {
    let bad = || RvParseErrorKind::BadRegister(s.to_string());
    let s = s.trim();
    if let Some(n) = s.strip_prefix('x') {
        if let Ok(v) = n.parse::<u8>() {
            if v < 32 && (n.len() == 1 || !n.starts_with('0')) {
                return Ok(v);
            }
        }
        return Err(bad());
    }
    if s == "fp" {
        return Ok(8);
    }
    ABI_NAMES.iter().position(|n| *n == s).map(|i| i as u8).ok_or_else(bad)
}

fn parse_imm(s: &str) -> Result<i32, RvParseErrorKind> {
    let bad = || RvParseErrorKind::BadImmediate(s.to_string());
    let t = s.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let v: i64 = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        i64::from_str_radix(hex, 16).map_err(|_| bad())?
    } else if let Some(bin) = body.strip_prefix("0b") {
        i64::from_str_radix(bin, 2).map_err(|_| bad())?
    } else {
        body.parse::<i64>().map_err(|_| bad())?
    };
    let v = if neg { -v } else { v };
    // Accept anything expressible as a 32-bit pattern.
    if !(i32::MIN as i64..=u32::MAX as i64).contains(&v) {
        return Err(bad());
    }
    Ok(v as u32 as i32)
}

fn check_range(s: &str, v: i32, lo: i32, hi: i32) -> Result<i32, RvParseErrorKind> {
    if (lo..=hi).contains(&v) {
        Ok(v)
    } else {
        Err(RvParseErrorKind::BadImmediate(s.to_string()))
    }
}

fn is_label(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '.')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$')
}

fn parse_target(s: &str) -> Result<RvTarget, RvParseErrorKind> {
    let s = s.trim();
    if s == "." {
        Ok(RvTarget::Here)
    } else if is_label(s) {
        Ok(RvTarget::Label(s.to_string()))
    } else {
        Err(RvParseErrorKind::BadLabel(s.to_string()))
    }
}

/// `off(reg)`; a bare `(reg)` means offset 0.
fn parse_mem(s: &str) -> Result<(i32, u8), RvParseErrorKind> {
    let bad = || RvParseErrorKind::BadOperand(s.to_string());
    let s = s.trim();
    let open = s.find('(').ok_or_else(bad)?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let off = s[..open].trim();
    let off = if off.is_empty() { 0 } else { check_range(off, parse_imm(off)?, -2048, 2047)? };
    Ok((off, parse_reg(inner)?))
}

fn strip_comment(line: &str) -> &str {
    let cut = [line.find('#'), line.find("//")].into_iter().flatten().min();
    match cut {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_instruction(mnemonic: &str, ops: &[&str], line: usize) -> Result<RvInstruction, RvParseErrorKind> {
    let count = |n: usize| -> Result<(), RvParseErrorKind> {
        if ops.len() == n {
            Ok(())
        } else {
            Err(RvParseErrorKind::OperandCount {
                mnemonic: mnemonic.to_string(),
                expected: n,
                found: ops.len(),
            })
        }
    };
    let r3 = |op: RvOp| -> Result<RvInstruction, RvParseErrorKind> {
        count(3)?;
        let mut ins = RvInstruction::new(op, line);
        ins.rd = parse_reg(ops[0])?;
        ins.rs1 = parse_reg(ops[1])?;
        ins.rs2 = parse_reg(ops[2])?;
        Ok(ins)
    };
    let i3 = |op: RvOp, lo: i32, hi: i32| -> Result<RvInstruction, RvParseErrorKind> {
        count(3)?;
        let mut ins = RvInstruction::new(op, line);
        ins.rd = parse_reg(ops[0])?;
        ins.rs1 = parse_reg(ops[1])?;
        ins.imm = check_range(ops[2], parse_imm(ops[2])?, lo, hi)?;
        Ok(ins)
    };
    let branch = |op: RvOp| -> Result<RvInstruction, RvParseErrorKind> {
        count(3)?;
        let mut ins = RvInstruction::new(op, line);
        ins.rs1 = parse_reg(ops[0])?;
        ins.rs2 = parse_reg(ops[1])?;
        ins.target = Some(parse_target(ops[2])?);
        Ok(ins)
    };
    let ins = match mnemonic {
        "add" => r3(RvOp::Add)?,
        "sub" => r3(RvOp::Sub)?,
        "and" => r3(RvOp::And)?,
        "or" => r3(RvOp::Or)?,
        "xor" => r3(RvOp::Xor)?,
        "addi" => i3(RvOp::Addi, -2048, 2047)?,
        "andi" => i3(RvOp::Andi, -2048, 2047)?,
        "xori" => i3(RvOp::Xori, -2048, 2047)?,
        "slli" => i3(RvOp::Slli, 0, 31)?,
        "srli" => i3(RvOp::Srli, 0, 31)?,
        "lui" => {
            count(2)?;
            let mut ins = RvInstruction::new(RvOp::Lui, line);
            ins.rd = parse_reg(ops[0])?;
            let raw = parse_imm(ops[1])?;
            // 20-bit field, written either signed or as the unsigned pattern.
            let v = match raw {
                -0x80000..=0x7ffff => raw,
                0x80000..=0xfffff => raw - 0x100000,
                _ => return Err(RvParseErrorKind::BadImmediate(ops[1].to_string())),
            };
            ins.imm = v;
            ins
        }
        "lw" => {
            count(2)?;
            let mut ins = RvInstruction::new(RvOp::Lw, line);
            ins.rd = parse_reg(ops[0])?;
            (ins.imm, ins.rs1) = parse_mem(ops[1])?;
            ins
        }
        "sw" => {
            count(2)?;
            let mut ins = RvInstruction::new(RvOp::Sw, line);
            ins.rs2 = parse_reg(ops[0])?;
            (ins.imm, ins.rs1) = parse_mem(ops[1])?;
            ins
        }
        "beq" => branch(RvOp::Beq)?,
        "bne" => branch(RvOp::Bne)?,
        "blt" => branch(RvOp::Blt)?,
        "bge" => branch(RvOp::Bge)?,
        "jal" => {
            let mut ins = RvInstruction::new(RvOp::Jal, line);
            match ops.len() {
                1 => {
                    ins.rd = 1;
                    ins.target = Some(parse_target(ops[0])?);
                }
                _ => {
                    count(2)?;
                    ins.rd = parse_reg(ops[0])?;
                    ins.target = Some(parse_target(ops[1])?);
                }
            }
            ins
        }
        "jalr" => {
            let mut ins = RvInstruction::new(RvOp::Jalr, line);
            match ops.len() {
                1 => {
                    ins.rd = 1;
                    ins.rs1 = parse_reg(ops[0])?;
                }
                2 => {
                    ins.rd = parse_reg(ops[0])?;
                    (ins.imm, ins.rs1) = parse_mem(ops[1])?;
                }
                _ => {
                    count(3)?;
                    ins.rd = parse_reg(ops[0])?;
                    ins.rs1 = parse_reg(ops[1])?;
                    ins.imm = check_range(ops[2], parse_imm(ops[2])?, -2048, 2047)?;
                }
            }
            ins
        }
        "li" => {
            count(2)?;
            let mut ins = RvInstruction::new(RvOp::Li, line);
            ins.rd = parse_reg(ops[0])?;
            ins.imm = parse_imm(ops[1])?;
            ins
        }
        "mv" => {
            count(2)?;
            let mut ins = RvInstruction::new(RvOp::Addi, line);
            ins.rd = parse_reg(ops[0])?;
            ins.rs1 = parse_reg(ops[1])?;
            ins
        }
        "j" => {
            count(1)?;
            let mut ins = RvInstruction::new(RvOp::Jal, line);
            ins.target = Some(parse_target(ops[0])?);
            ins
        }
        "nop" => {
            count(0)?;
            RvInstruction::new(RvOp::Addi, line)
        }
        "ret" => {
            count(0)?;
            let mut ins = RvInstruction::new(RvOp::Jalr, line);
            ins.rs1 = 1;
            ins
        }
        other => return Err(RvParseErrorKind::Unsupported(other.to_string())),
    };
    Ok(ins)
}

/// Parses RV-32I assembly text restricted to the supported subset.
///
/// Accepts `label:` definitions (several per line allowed), `#` and `//`
/// comments, register numbers or ABI names, and decimal, hex or binary
/// immediates. Every branch target must resolve.
pub fn parse_rv32i(source: &str) -> Result<RvProgram, RvParseError> {
    let mut program = RvProgram::default();
    let mut pending: Vec<String> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let err = |kind| RvParseError { line, kind };
        let mut rest = strip_comment(raw).trim();
        while let Some(colon) = rest.find(':') {
            let name = rest[..colon].trim();
            if !is_label(name) {
                return Err(err(RvParseErrorKind::BadLabel(name.to_string())));
            }
            if seen.insert(name.to_string(), line).is_some() {
                return Err(err(RvParseErrorKind::DuplicateLabel(name.to_string())));
            }
            pending.push(name.to_string());
            rest = rest[colon + 1..].trim();
        }
        if rest.is_empty() {
            continue;
        }
        let (mnemonic, operands) = match rest.find(char::is_whitespace) {
            Some(sp) => (&rest[..sp], rest[sp..].trim()),
            None => (rest, ""),
        };
        let mnemonic = mnemonic.to_ascii_lowercase();
        if mnemonic.starts_with('.') {
            if IGNORED_DIRECTIVES.contains(&mnemonic.as_str()) {
                continue;
            }
            return Err(err(RvParseErrorKind::UnknownDirective(mnemonic)));
        }
        let ops: Vec<&str> = if operands.is_empty() {
            Vec::new()
        } else {
            operands.split(',').map(str::trim).collect()
        };
        let mut ins = parse_instruction(&mnemonic, &ops, line).map_err(err)?;
        ins.labels = core::mem::take(&mut pending);
        program.instructions.push(ins);
    }
    program.trailing_labels = pending;

    for ins in &program.instructions {
        if let Some(RvTarget::Label(l)) = &ins.target {
            if !seen.contains_key(l) {
                return Err(RvParseError {
                    line: ins.line,
                    kind: RvParseErrorKind::UndefinedLabel(l.to_owned()),
                });
            }
        }
    }
    Ok(program)
}
