//! File formats, fixtures and the command-line front end for the ART-9
//! toolchain. The computation itself lives in `art9-core`.

pub mod bench;
pub mod cli;
pub mod digest;
pub mod fixtures;
pub mod formats;
