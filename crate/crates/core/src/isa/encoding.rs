//! Trit-level instruction encoding and decoding.

use core::fmt;

use super::{Field, Instruction, Opcode, Operands};
use crate::ternary::{balanced_limit, pow3, Trit, Word9, WORD_TRITS};

/// Opcode codewords, most significant trit first.
pub const OPCODE_TABLE: [(Opcode, &str); 24] = [
    (Opcode::Li, "--"),
    (Opcode::Beq, "-0"),
    (Opcode::Bne, "-+"),
    (Opcode::Jal, "0-"),
    (Opcode::Jalr, "00"),
    (Opcode::Load, "0+"),
    (Opcode::Store, "+-"),
    (Opcode::Lui, "+0-"),
    (Opcode::Andi, "+00-"),
    (Opcode::Addi, "+000"),
    (Opcode::Sri, "+00+-"),
    (Opcode::Sli, "+00+0"),
    (Opcode::Mv, "++---"),
    (Opcode::Pti, "++--0"),
    (Opcode::Nti, "++--+"),
    (Opcode::Sti, "++-0-"),
    (Opcode::And, "++-00"),
    (Opcode::Or, "++-0+"),
    (Opcode::Xor, "++-+-"),
    (Opcode::Add, "++-+0"),
    (Opcode::Sub, "++-++"),
    (Opcode::Sr, "++0--"),
    (Opcode::Sl, "++0-0"),
    (Opcode::Comp, "++0-+"),
];

/// Ternary Kraft sum of the opcode table as an exact fraction
/// `(numerator, 3^5)`.
pub fn kraft_sum() -> (i32, i32) {
    let den = pow3(5);
    let num = OPCODE_TABLE
        .iter()
        .map(|(_, code)| pow3(5 - code.len()))
        .sum();
    (num, den)
}

fn codeword(op: Opcode) -> &'static str {
    OPCODE_TABLE
        .iter()
        .find(|(o, _)| *o == op)
        .map(|(_, c)| *c)
        .expect("every opcode has a codeword")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EncodeError {
    ImmediateOutOfRange {
        op: Opcode,
        value: i32,
        min: i32,
        max: i32,
    },
}

impl fmt::Display for EncodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncodeError::ImmediateOutOfRange { op, value, min, max } => write!(
                f,
                "{op} immediate {value} outside [{min}, {max}]"
            ),
        }
    }
}

impl core::error::Error for EncodeError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeError {
    IllegalInstruction(Word9),
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeError::IllegalInstruction(w) => write!(f, "illegal instruction {w}"),
        }
    }
}

impl core::error::Error for DecodeError {}

/// Writes trits most significant first into `out` starting at `pos` (a
/// trit index counting down from 8).
struct TritWriter {
    trits: [Trit; WORD_TRITS],
    pos: usize,
}

impl TritWriter {
    fn push(&mut self, t: Trit) {
        self.pos -= 1;
        self.trits[self.pos] = t;
    }

    fn push_value(&mut self, value: i32, width: usize) {
        let digits = Word9::from_balanced(value).trits();
        for i in (0..width).rev() {
            self.push(digits[i]);
        }
    }
}

pub fn encode(ins: &Instruction) -> Result<Word9, EncodeError> {
    let op = ins.opcode();
    let ops = ins.operands();
    let mut w = TritWriter {
        trits: [Trit::Zero; WORD_TRITS],
        pos: WORD_TRITS,
    };
    for c in codeword(op).chars() {
        w.push(Trit::from_char(c).expect("codeword trit"));
    }
    for field in op.fields() {
        match *field {
            // Register index is the unsigned 2-trit value.
            Field::Ta => w.push_value(ops.ta as i32 - 4, 2),
            Field::Tb => w.push_value(ops.tb as i32 - 4, 2),
            Field::B => w.push_value(ops.b as i32, 1),
            Field::Imm(width) => {
                let m = balanced_limit(width);
                if !(-m..=m).contains(&ops.imm) {
                    return Err(EncodeError::ImmediateOutOfRange {
                        op,
                        value: ops.imm,
                        min: -m,
                        max: m,
                    });
                }
                w.push_value(ops.imm, width);
            }
        }
    }
    debug_assert_eq!(w.pos, 0);
    Ok(Word9::from_trits(w.trits))
}

pub fn decode(word: Word9) -> Result<Instruction, DecodeError> {
    let trits = word.trits();
    // Longest codeword is 5 trits; compare the leading trits of the word.
    let op = OPCODE_TABLE
        .iter()
        .find(|(_, code)| {
            code.chars()
                .enumerate()
                .all(|(i, c)| trits[WORD_TRITS - 1 - i].to_char() == c)
        })
        .map(|(op, _)| *op)
        .ok_or(DecodeError::IllegalInstruction(word))?;
    let mut pos = WORD_TRITS - codeword(op).len();
    let mut take = |width: usize| {
        let v = trits[pos - width..pos]
            .iter()
            .rev()
            .fold(0i32, |acc, t| acc * 3 + t.value() as i32);
        pos -= width;
        v
    };
    let mut ops = Operands::default();
    for field in op.fields() {
        match *field {
            Field::Ta => ops.ta = (take(2) + 4) as u8,
            Field::Tb => ops.tb = (take(2) + 4) as u8,
            Field::B => ops.b = take(1) as i8,
            Field::Imm(width) => ops.imm = take(width),
        }
    }
    Ok(Instruction::from_operands(op, ops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::Reg;
    use proptest::prelude::*;

    fn w(s: &str) -> Word9 {
        s.parse().unwrap()
    }

    #[test]
    fn encode_examples() {
        let add = Instruction::r(Opcode::Add, Reg::T5, Reg::T2);
        assert_eq!(encode(&add).unwrap(), w("++-+00+-+"));
        assert_eq!(encode(&Instruction::NOP).unwrap(), w("+00000000"));
        assert_eq!(encode(&Instruction::HALT).unwrap(), w("0-0000000"));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(
            decode(w("++-+00+-+")).unwrap(),
            Instruction::r(Opcode::Add, Reg::T5, Reg::T2)
        );
        assert_eq!(decode(w("+00000000")).unwrap(), Instruction::NOP);
        assert_eq!(
            decode(w("+0++00000")),
            Err(DecodeError::IllegalInstruction(w("+0++00000")))
        );
    }

    #[test]
    fn reserved_regions_are_illegal() {
        for prefix in ["+0+", "+00++", "++0+", "+++", "++00"] {
            let word = w(&alloc::format!("{prefix:0<9}"));
            assert!(decode(word).is_err(), "{prefix}");
        }
    }

    #[test]
    fn immediate_range_is_enforced() {
        let ok = Instruction::i(Opcode::Addi, Reg::T1, 13);
        assert!(encode(&ok).is_ok());
        let bad = Instruction::i(Opcode::Addi, Reg::T1, 14);
        assert_eq!(
            encode(&bad),
            Err(EncodeError::ImmediateOutOfRange {
                op: Opcode::Addi,
                value: 14,
                min: -13,
                max: 13
            })
        );
        let far = Instruction::Jal { ta: Reg::T1, offset: -122 };
        assert!(encode(&far).is_err());
    }

    #[test]
    fn table_is_prefix_free() {
        for (a, ca) in OPCODE_TABLE {
            for (b, cb) in OPCODE_TABLE {
                if a != b {
                    assert!(!cb.starts_with(ca), "{ca} prefixes {cb}");
                }
            }
        }
        assert_eq!(kraft_sum(), (218, 243));
    }

    #[test]
    fn register_field_patterns() {
        // T0 = `--`, T4 = `00`, T8 = `++` in the Ta slot of MV (trits 3..2).
        for (reg, pat) in [(Reg::T0, "--"), (Reg::T4, "00"), (Reg::T8, "++")] {
            let word = encode(&Instruction::r(Opcode::Mv, reg, Reg::T4)).unwrap();
            assert_eq!(&word.to_string()[5..7], pat);
        }
    }

    proptest! {
        #[test]
        fn decode_then_encode_is_identity_on_legal_words(v in -9841i32..=9841) {
            let word = Word9::from_balanced(v);
            if let Ok(ins) = decode(word) {
                prop_assert_eq!(encode(&ins).unwrap(), word);
            }
        }
    }
}
