//! Two-pass assembler and disassembler.
//!
//! Grammar, one statement per line:
//!
//! ```text
//! [label:]... [MNEMONIC operand, operand, ...] [; comment | # comment]
//! [label:]... .word <value>
//! ```
//!
//! Registers are `T0`..`T8`, immediates are signed decimals or `0t` trit
//! literals, the branch trit of BEQ/BNE is one of `-`, `0`, `+`, and the
//! target of BEQ/BNE/JAL is a label or a decimal offset relative to the
//! branch itself. `NOP` and `HALT` expand to `ADDI T4, 0` and `JAL T4, 0`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write;

use super::{decode, encode, Field, Instruction, Opcode, Operands, ProgramImage, Reg};
use crate::ternary::{parse_trit_literal, Trit, Word9, WORD_MAX, WORD_STATES};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AsmErrorKind {
    UnknownMnemonic(String),
    DuplicateLabel(String),
    UndefinedLabel(String),
    BadLabel(String),
    OperandCount { expected: usize, found: usize },
    BadRegister(String),
    BadTrit(String),
    BadImmediate(String),
    ImmediateOutOfRange { op: Opcode, value: i32, min: i32, max: i32 },
    OffsetOutOfRange { op: Opcode, offset: i32, limit: i32 },
    ProgramTooLarge(usize),
}

/// An assembly error at a 1-based source line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AsmError {
    pub line: usize,
    pub kind: AsmErrorKind,
}

impl fmt::Display for AsmErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AsmErrorKind::UnknownMnemonic(m) => write!(f, "unknown mnemonic `{m}`"),
            AsmErrorKind::DuplicateLabel(l) => write!(f, "duplicate label `{l}`"),
            AsmErrorKind::UndefinedLabel(l) => write!(f, "undefined label `{l}`"),
            AsmErrorKind::BadLabel(l) => write!(f, "invalid label `{l}`"),
            AsmErrorKind::OperandCount { expected, found } => {
                write!(f, "expected {expected} operands, found {found}")
            }
            AsmErrorKind::BadRegister(r) => write!(f, "invalid register `{r}`"),
            AsmErrorKind::BadTrit(t) => write!(f, "invalid branch trit `{t}`"),
            AsmErrorKind::BadImmediate(s) => write!(f, "invalid immediate `{s}`"),
            AsmErrorKind::ImmediateOutOfRange { op, value, min, max } => {
                write!(f, "{op} immediate {value} outside [{min}, {max}]")
            }
            AsmErrorKind::OffsetOutOfRange { op, offset, limit } => {
                write!(f, "{op} branch offset {offset} exceeds ±{limit}")
            }
            AsmErrorKind::ProgramTooLarge(n) => {
                write!(f, "program of {n} words exceeds instruction memory")
            }
        }
    }
}

impl fmt::Display for AsmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.kind)
    }
}

impl core::error::Error for AsmError {}

enum Body<'a> {
    Ins { mnemonic: &'a str, operands: Vec<&'a str> },
    Word(&'a str),
}

struct Stmt<'a> {
    line: usize,
    body: Body<'a>,
}

fn strip_comment(line: &str) -> &str {
    let end = line.find([';', '#']).unwrap_or(line.len());
    &line[..end]
}

fn is_label(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '.')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$')
}

fn parse_number(s: &str) -> Option<i32> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let v = if let Some(lit) = body.strip_prefix("0t") {
        parse_trit_literal(lit).ok()?
    } else if !body.is_empty() && body.bytes().all(|b| b.is_ascii_digit()) {
        body.parse::<i32>().ok()?
    } else {
        return None;
    };
    Some(if neg { -v } else { v })
}

fn parse_reg(s: &str) -> Result<Reg, AsmErrorKind> {
    let bad = || AsmErrorKind::BadRegister(s.to_string());
    let idx = s
        .strip_prefix(['T', 't'])
        .ok_or_else(bad)?
        .parse::<u8>()
        .map_err(|_| bad())?;
    Reg::new(idx).ok_or_else(bad)
}

fn parse_trit(s: &str) -> Result<Trit, AsmErrorKind> {
    let t = match s {
        "-" | "-1" => Some(Trit::Neg),
        "0" => Some(Trit::Zero),
        "+" | "1" | "+1" => Some(Trit::Pos),
        _ => None,
    };
    t.ok_or_else(|| AsmErrorKind::BadTrit(s.to_string()))
}

fn split_statements(source: &str) -> Result<(Vec<Stmt<'_>>, BTreeMap<String, (usize, usize)>), AsmError> {
    let mut stmts = Vec::new();
    // label -> (statement index, defining line)
    let mut labels: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let mut rest = strip_comment(raw).trim();
        while let Some(colon) = rest.find(':') {
            let name = rest[..colon].trim();
            if !is_label(name) {
                return Err(AsmError { line, kind: AsmErrorKind::BadLabel(name.to_string()) });
            }
            if labels.insert(name.to_string(), (stmts.len(), line)).is_some() {
                return Err(AsmError {
                    line,
                    kind: AsmErrorKind::DuplicateLabel(name.to_string()),
                });
            }
            rest = rest[colon + 1..].trim();
        }
        if rest.is_empty() {
            continue;
        }
        let (head, tail) = match rest.find(char::is_whitespace) {
            Some(p) => (&rest[..p], rest[p..].trim()),
            None => (rest, ""),
        };
        let body = if head.eq_ignore_ascii_case(".word") {
            Body::Word(tail)
        } else {
            let operands = if tail.is_empty() {
                Vec::new()
            } else {
                tail.split(',').map(str::trim).collect()
            };
            Body::Ins { mnemonic: head, operands }
        };
        stmts.push(Stmt { line, body });
    }
    Ok((stmts, labels))
}

fn expand_pseudo(mnemonic: &str) -> Option<Instruction> {
    if mnemonic.eq_ignore_ascii_case("NOP") {
        Some(Instruction::NOP)
    } else if mnemonic.eq_ignore_ascii_case("HALT") {
        Some(Instruction::HALT)
    } else {
        None
    }
}

/// Assembles source text into a TIM image based at index 0.
pub fn assemble(source: &str) -> Result<ProgramImage, AsmError> {
    let (stmts, labels) = split_statements(source)?;
    if stmts.len() > WORD_STATES as usize {
        return Err(AsmError {
            line: stmts.last().map_or(0, |s| s.line),
            kind: AsmErrorKind::ProgramTooLarge(stmts.len()),
        });
    }
    let mut words = Vec::with_capacity(stmts.len());
    for (index, stmt) in stmts.iter().enumerate() {
        let at = |kind| AsmError { line: stmt.line, kind };
        let word = match &stmt.body {
            Body::Word(value) => {
                let v = parse_number(value)
                    .filter(|v| v.abs() <= WORD_MAX)
                    .ok_or_else(|| at(AsmErrorKind::BadImmediate(value.to_string())))?;
                Word9::from_balanced(v)
            }
            Body::Ins { mnemonic, operands } => {
                let ins = match expand_pseudo(mnemonic) {
                    Some(ins) if operands.is_empty() => ins,
                    Some(_) => {
                        return Err(at(AsmErrorKind::OperandCount {
                            expected: 0,
                            found: operands.len(),
                        }))
                    }
                    None => {
                        let op = Opcode::from_mnemonic(mnemonic)
                            .ok_or_else(|| at(AsmErrorKind::UnknownMnemonic(mnemonic.to_string())))?;
                        parse_operands(op, operands, index, &labels).map_err(at)?
                    }
                };
                encode(&ins).map_err(|e| match e {
                    super::EncodeError::ImmediateOutOfRange { op, value, min, max } => {
                        at(AsmErrorKind::ImmediateOutOfRange { op, value, min, max })
                    }
                })?
            }
        };
        words.push(word);
    }
    let mut image = ProgramImage::new(0, words);
    image.symbols = labels
        .into_iter()
        .map(|(name, (idx, _))| (name, idx as u16))
        .collect();
    Ok(image)
}

fn parse_operands(
    op: Opcode,
    operands: &[&str],
    index: usize,
    labels: &BTreeMap<String, (usize, usize)>,
) -> Result<Instruction, AsmErrorKind> {
    let fields = op.fields();
    if operands.len() != fields.len() {
        return Err(AsmErrorKind::OperandCount {
            expected: fields.len(),
            found: operands.len(),
        });
    }
    let mut ops = Operands::default();
    for (field, text) in fields.iter().zip(operands) {
        match *field {
            Field::Ta => ops.ta = parse_reg(text)?.index() as u8,
            Field::Tb => ops.tb = parse_reg(text)?.index() as u8,
            Field::B => ops.b = parse_trit(text)?.value(),
            Field::Imm(_) => {
                let (min, max) = op.imm_range().expect("immediate field");
                let value = match parse_number(text) {
                    Some(v) => v,
                    None if op.is_relative_branch() && is_label(text) => {
                        let (target, _) = labels
                            .get(*text)
                            .ok_or_else(|| AsmErrorKind::UndefinedLabel(text.to_string()))?;
                        *target as i32 - index as i32
                    }
                    None => return Err(AsmErrorKind::BadImmediate(text.to_string())),
                };
                if !(min..=max).contains(&value) {
                    return Err(if op.is_relative_branch() {
                        AsmErrorKind::OffsetOutOfRange { op, offset: value, limit: max }
                    } else {
                        AsmErrorKind::ImmediateOutOfRange { op, value, min, max }
                    });
                }
                ops.imm = value;
            }
        }
    }
    Ok(Instruction::from_operands(op, ops))
}

/// One line per word: the canonical instruction syntax, or a `.word`
/// directive for words that do not decode.
pub fn disassemble(image: &ProgramImage) -> String {
    let mut out = String::new();
    for word in &image.words {
        match decode(*word) {
            Ok(ins) => writeln!(out, "{ins}"),
            Err(_) => writeln!(out, ".word 0t{word}"),
        }
        .expect("writing to a String");
    }
    out
}

/// Formats a single word the way [`disassemble`] does.
pub fn disassemble_word(word: Word9) -> String {
    match decode(word) {
        Ok(ins) => ins.to_string(),
        Err(_) => format!(".word 0t{word}"),
    }
}
