//! Printable summary of a final machine state.

use std::fmt::Write as _;

use art9_core::sim::MachineState;
use art9_core::Reg;
use sha2::{Digest, Sha256};

/// SHA-256 over the TDM contents, one balanced value per word as two
/// little-endian bytes.
pub fn tdm_hash(state: &MachineState) -> String {
    let mut h = Sha256::new();
    for w in state.tdm.words() {
        h.update(w.balanced().to_le_bytes());
    }
    format!("{:x}", h.finalize())
}

/// `key: value` lines for pc, registers, TDM hash and retired count. Two
/// runs that end in the same architectural state print the same digest.
pub fn state_digest(state: &MachineState) -> String {
    let mut out = String::new();
    writeln!(out, "pc: {} ({})", state.pc, state.pc.unsigned()).unwrap();
    for r in Reg::all() {
        let v = state.reg(r);
        writeln!(out, "{r}: {v} ({})", v.balanced()).unwrap();
    }
    writeln!(out, "tdm_sha256: {}", tdm_hash(state)).unwrap();
    writeln!(out, "retired: {}", state.retired).unwrap();
    out
}
