//! Toolchain core for the ART-9 nine-trit balanced-ternary RISC processor.
//!
//! Everything here is pure computation over in-memory values: balanced-ternary
//! words, the 24-instruction ISA with its assembler and disassembler, the
//! functional and cycle-accurate pipeline simulators, the RV-32I transpiler
//! and the performance estimator arithmetic. File formats and the command
//! line live in the companion `art9` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod isa;
pub mod sim;
pub mod techmodel;
pub mod ternary;
pub mod transpiler;

pub use isa::{Instruction, Opcode, ProgramImage, Reg};
pub use ternary::{Trit, Word9};
