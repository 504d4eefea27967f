//! Static use-count register allocation with spill slots.

use alloc::vec::Vec;

use super::rv::RvProgram;
use super::{TranspileError, SPILL_FLOOR};
use crate::isa::Reg;

/// Home of an RV register in the generated code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loc {
    Reg(Reg),
    /// Data memory word at this balanced address, reached through T0.
    Spill(i16),
}

/// RV register number to home. Registers the program never names have none,
/// except the pinned `x0`, `ra` and `sp`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegMap {
    locs: [Option<Loc>; 32],
}

const ALLOCATABLE: [Reg; 5] = [Reg::T3, Reg::T4, Reg::T5, Reg::T6, Reg::T7];

impl RegMap {
    pub fn get(&self, rv: u8) -> Option<Loc> {
        self.locs[rv as usize]
    }

    pub fn spills(&self) -> usize {
        self.locs.iter().filter(|l| matches!(l, Some(Loc::Spill(_)))).count()
    }

    /// `(rv register, home)` pairs in register order.
    pub fn iter(&self) -> impl Iterator<Item = (u8, Loc)> + '_ {
        self.locs
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|l| (i as u8, l)))
    }
}

/// Pins `x0`→T0, `ra`→T1, `sp`→T2, then gives T3..T7 to the remaining
/// registers by descending static use count (ties to the lower number) and
/// spills the rest to slots `spill_base`, `spill_base - 1`, … down to
/// [`SPILL_FLOOR`].
pub fn allocate_registers(program: &RvProgram, spill_base: i16) -> Result<RegMap, TranspileError> {
    let mut uses = [0usize; 32];
    for ins in &program.instructions {
        for r in ins.sources().into_iter().chain(ins.dest()) {
            uses[r as usize] += 1;
        }
    }
    let mut locs = [None; 32];
    locs[0] = Some(Loc::Reg(Reg::T0));
    locs[1] = Some(Loc::Reg(Reg::T1));
    locs[2] = Some(Loc::Reg(Reg::T2));

    let mut rest: Vec<u8> = (3..32u8).filter(|&r| uses[r as usize] > 0).collect();
    rest.sort_by_key(|&r| (core::cmp::Reverse(uses[r as usize]), r));
    let slots = (spill_base - SPILL_FLOOR + 1).max(0) as usize;
    if rest.len() > ALLOCATABLE.len() + slots {
        return Err(TranspileError::TooManyRegisters {
            needed: rest.len(),
            available: ALLOCATABLE.len() + slots,
        });
    }
    for (k, r) in rest.into_iter().enumerate() {
        locs[r as usize] = Some(match ALLOCATABLE.get(k) {
            Some(&t) => Loc::Reg(t),
            None => Loc::Spill(spill_base - (k - ALLOCATABLE.len()) as i16),
        });
    }
    Ok(RegMap { locs })
}
