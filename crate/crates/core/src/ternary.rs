//! Balanced-ternary trits and 9-trit words.
//!
//! A [`Word9`] is the universal datum of the machine: instructions, data and
//! addresses are all nine balanced trits. Arithmetic wraps modulo 3^9 and
//! never reports overflow.

use core::fmt;
use core::str::FromStr;

/// Number of trits in a machine word.
pub const WORD_TRITS: usize = 9;
/// 3^9, the number of distinct words.
pub const WORD_STATES: i32 = 19683;
/// Largest balanced value of a word, (3^9 - 1) / 2.
pub const WORD_MAX: i32 = 9841;
/// Smallest balanced value of a word.
pub const WORD_MIN: i32 = -WORD_MAX;

const POW3: [i32; 10] = [1, 3, 9, 27, 81, 243, 729, 2187, 6561, 19683];

/// Returns 3^k for k in 0..=9.
#[inline]
pub const fn pow3(k: usize) -> i32 {
    POW3[k]
}

/// Largest magnitude representable by `width` balanced trits.
#[inline]
pub const fn balanced_limit(width: usize) -> i32 {
    (POW3[width] - 1) / 2
}

/// A single balanced ternary digit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(i8)]
pub enum Trit {
    Neg = -1,
    Zero = 0,
    Pos = 1,
}

impl Trit {
    pub const ALL: [Trit; 3] = [Trit::Neg, Trit::Zero, Trit::Pos];

    #[inline]
    pub const fn value(self) -> i8 {
        self as i8
    }

    /// Builds a trit from an integer in {-1, 0, 1}.
    pub const fn from_i8(v: i8) -> Option<Trit> {
        match v {
            -1 => Some(Trit::Neg),
            0 => Some(Trit::Zero),
            1 => Some(Trit::Pos),
            _ => None,
        }
    }

    /// The sign of `v` as a trit.
    #[inline]
    pub const fn sign_of(v: i32) -> Trit {
        if v < 0 {
            Trit::Neg
        } else if v > 0 {
            Trit::Pos
        } else {
            Trit::Zero
        }
    }

    pub const fn from_char(c: char) -> Option<Trit> {
        match c {
            '-' => Some(Trit::Neg),
            '0' => Some(Trit::Zero),
            '+' => Some(Trit::Pos),
            _ => None,
        }
    }

    pub const fn to_char(self) -> char {
        match self {
            Trit::Neg => '-',
            Trit::Zero => '0',
            Trit::Pos => '+',
        }
    }

    pub fn invert(self, kind: InvertKind) -> Trit {
        match (kind, self) {
            (InvertKind::Sti, t) => -t,
            (InvertKind::Nti, Trit::Neg) => Trit::Pos,
            (InvertKind::Nti, _) => Trit::Neg,
            (InvertKind::Pti, Trit::Pos) => Trit::Neg,
            (InvertKind::Pti, _) => Trit::Pos,
        }
    }

    pub fn logic(self, kind: LogicKind, other: Trit) -> Trit {
        match kind {
            LogicKind::And => self.min(other),
            LogicKind::Or => self.max(other),
            LogicKind::Xor => {
                let sum = (self.value() + other.value() + 4) % 3 - 1;
                Trit::from_i8(sum).expect("residue is balanced")
            }
        }
    }
}

impl core::ops::Neg for Trit {
    type Output = Trit;

    fn neg(self) -> Trit {
        match self {
            Trit::Neg => Trit::Pos,
            Trit::Zero => Trit::Zero,
            Trit::Pos => Trit::Neg,
        }
    }
}

impl fmt::Display for Trit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// The one-input inverters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InvertKind {
    /// Standard inverter, `x -> -x`.
    Sti,
    /// Negative inverter: `-` maps to `+`, everything else to `-`.
    Nti,
    /// Positive inverter: `+` maps to `-`, everything else to `+`.
    Pti,
}

/// The two-input tritwise functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LogicKind {
    /// Tritwise minimum.
    And,
    /// Tritwise maximum.
    Or,
    /// Tritwise sum modulo 3, balanced representative.
    Xor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShiftDir {
    Left,
    Right,
}

/// A 9-trit balanced word.
///
/// Stored as its balanced value, which is always in `[-9841, 9841]`; every
/// one of the 3^9 trit patterns corresponds to exactly one value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Word9(i16);

impl Word9 {
    pub const ZERO: Word9 = Word9(0);
    pub const ONE: Word9 = Word9(1);
    pub const MIN: Word9 = Word9(WORD_MIN as i16);
    pub const MAX: Word9 = Word9(WORD_MAX as i16);

    /// Encodes any integer, wrapping modulo 3^9 into the balanced range.
    #[inline]
    pub const fn from_balanced(v: i32) -> Word9 {
        let r = (v + WORD_MAX).rem_euclid(WORD_STATES) - WORD_MAX;
        Word9(r as i16)
    }

    /// Encodes an unsigned view value, wrapping modulo 3^9.
    #[inline]
    pub const fn from_unsigned(u: i32) -> Word9 {
        Word9::from_balanced(u - WORD_MAX)
    }

    /// `Σ w[k]·3^k`.
    #[inline]
    pub const fn balanced(self) -> i32 {
        self.0 as i32
    }

    /// `Σ (w[k]+1)·3^k`, the level-monotone unsigned view used for register
    /// indices and memory addresses.
    #[inline]
    pub const fn unsigned(self) -> u16 {
        (self.0 as i32 + WORD_MAX) as u16
    }

    /// Trits, index 0 least significant.
    pub fn trits(self) -> [Trit; WORD_TRITS] {
        let mut out = [Trit::Zero; WORD_TRITS];
        let mut v = self.0 as i32;
        for t in out.iter_mut() {
            let r = (v + 1).rem_euclid(3) - 1;
            *t = Trit::from_i8(r as i8).expect("balanced residue");
            v = (v - r) / 3;
        }
        out
    }

    pub fn from_trits(trits: [Trit; WORD_TRITS]) -> Word9 {
        let v = trits
            .iter()
            .rev()
            .fold(0i32, |acc, t| acc * 3 + t.value() as i32);
        Word9(v as i16)
    }

    /// The trit at index `i` (0 = LST).
    pub fn trit(self, i: usize) -> Trit {
        assert!(i < WORD_TRITS, "trit index {i} out of range");
        self.trits()[i]
    }

    /// Balanced value of the slice `[hi:lo]`, both ends inclusive.
    pub fn field(self, hi: usize, lo: usize) -> i32 {
        assert!(lo <= hi && hi < WORD_TRITS, "bad slice [{hi}:{lo}]");
        let trits = self.trits();
        trits[lo..=hi]
            .iter()
            .rev()
            .fold(0, |acc, t| acc * 3 + t.value() as i32)
    }

    fn map(self, f: impl Fn(Trit) -> Trit) -> Word9 {
        let mut trits = self.trits();
        for t in trits.iter_mut() {
            *t = f(*t);
        }
        Word9::from_trits(trits)
    }

    pub fn invert(self, kind: InvertKind) -> Word9 {
        match kind {
            InvertKind::Sti => Word9(-self.0),
            _ => self.map(|t| t.invert(kind)),
        }
    }

    pub fn logic(self, kind: LogicKind, other: Word9) -> Word9 {
        let a = self.trits();
        let b = other.trits();
        let mut out = [Trit::Zero; WORD_TRITS];
        for i in 0..WORD_TRITS {
            out[i] = a[i].logic(kind, b[i]);
        }
        Word9::from_trits(out)
    }

    #[inline]
    pub const fn wrapping_add(self, other: Word9) -> Word9 {
        Word9::from_balanced(self.0 as i32 + other.0 as i32)
    }

    #[inline]
    pub const fn wrapping_sub(self, other: Word9) -> Word9 {
        Word9::from_balanced(self.0 as i32 - other.0 as i32)
    }

    /// Negation is the standard inversion of every trit, and is exact.
    #[inline]
    pub const fn negate(self) -> Word9 {
        Word9(-self.0)
    }

    /// Shifts by `amount` trit positions, zero-filling. A negative amount
    /// shifts the opposite way.
    ///
    /// # Panics
    ///
    /// If `amount` is outside the 2-trit balanced range `[-4, 4]`.
    pub fn shift(self, amount: i32, dir: ShiftDir) -> Word9 {
        assert!(
            (-4..=4).contains(&amount),
            "shift amount {amount} outside [-4, 4]"
        );
        let (dir, s) = match (dir, amount < 0) {
            (d, false) => (d, amount as usize),
            (ShiftDir::Left, true) => (ShiftDir::Right, (-amount) as usize),
            (ShiftDir::Right, true) => (ShiftDir::Left, (-amount) as usize),
        };
        let src = self.trits();
        let mut out = [Trit::Zero; WORD_TRITS];
        for (i, t) in src.iter().enumerate() {
            let dst = match dir {
                ShiftDir::Left => i.checked_add(s),
                ShiftDir::Right => i.checked_sub(s),
            };
            if let Some(d) = dst.filter(|d| *d < WORD_TRITS) {
                out[d] = *t;
            }
        }
        Word9::from_trits(out)
    }

    /// `sign(self - other)` as a trit.
    #[inline]
    pub fn compare(self, other: Word9) -> Trit {
        Trit::sign_of(self.0 as i32 - other.0 as i32)
    }
}

impl From<Trit> for Word9 {
    fn from(t: Trit) -> Word9 {
        Word9(t.value() as i16)
    }
}

impl fmt::Display for Word9 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in self.trits().iter().rev() {
            write!(f, "{}", t.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word9 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word9({self}={})", self.0)
    }
}

/// Error parsing a trit literal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TritParseError {
    Empty,
    TooLong(usize),
    BadChar(char),
}

impl fmt::Display for TritParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TritParseError::Empty => write!(f, "empty trit literal"),
            TritParseError::TooLong(n) => write!(f, "trit literal has {n} trits, at most 9 allowed"),
            TritParseError::BadChar(c) => write!(f, "invalid trit character {c:?}"),
        }
    }
}

impl core::error::Error for TritParseError {}

/// Parses up to nine trit characters, most significant first, into their
/// balanced value.
pub fn parse_trit_literal(s: &str) -> Result<i32, TritParseError> {
    if s.is_empty() {
        return Err(TritParseError::Empty);
    }
    let n = s.chars().count();
    if n > WORD_TRITS {
        return Err(TritParseError::TooLong(n));
    }
    s.chars().try_fold(0i32, |acc, c| {
        let t = Trit::from_char(c).ok_or(TritParseError::BadChar(c))?;
        Ok(acc * 3 + t.value() as i32)
    })
}

impl FromStr for Word9 {
    type Err = TritParseError;

    /// Parses exactly the canonical 9-character form.
    fn from_str(s: &str) -> Result<Word9, TritParseError> {
        let n = s.chars().count();
        if n != WORD_TRITS {
            return Err(if n == 0 {
                TritParseError::Empty
            } else {
                TritParseError::TooLong(n)
            });
        }
        parse_trit_literal(s).map(Word9::from_balanced)
    }
}
