//! Batch runs of the fixture benchmarks in both simulator modes.

use std::fmt::Write as _;
use std::thread;

use art9_core::isa::{assemble, AsmError};
use art9_core::sim::{run_functional, run_pipelined, MachineState, MemoryKind, PipelineStats, SimError};
use art9_core::techmodel::code_size_cells;
use art9_core::transpiler::{transpile, TranspileError, TranspileOptions};
use art9_core::ProgramImage;
use thiserror::Error;

use crate::fixtures::FIXTURES;

/// Cycle and instruction budget for one benchmark run.
pub const BENCH_LIMIT: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{name}: {source}")]
    Asm { name: String, source: AsmError },
    #[error("{name}: {source}")]
    Transpile { name: String, source: TranspileError },
    #[error("{name}: {source}")]
    Sim { name: String, source: SimError },
    #[error("{name}: pipelined and functional final states differ")]
    Mismatch { name: String },
}

/// A program ready to run.
#[derive(Clone, Debug)]
pub struct Workload {
    pub name: String,
    pub image: ProgramImage,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub name: String,
    pub instructions: usize,
    pub memory_cells: u64,
    pub retired: u64,
    pub cycles: u64,
    pub stalls: u64,
    pub squashes: u64,
    pub ipc: f64,
}

/// The hand-written ART-9 fixtures followed by the transpiled RV-32I ones,
/// the latter suffixed `.rv`.
pub fn fixture_workloads() -> Result<Vec<Workload>, BenchError> {
    let mut out = Vec::new();
    for f in FIXTURES {
        let image = assemble(f.art9).map_err(|source| BenchError::Asm { name: f.name.into(), source })?;
        out.push(Workload { name: f.name.into(), image });
    }
    for f in FIXTURES {
        let name = format!("{}.rv", f.name);
        let t = transpile(f.rv32i, &TranspileOptions::default())
            .map_err(|source| BenchError::Transpile { name: name.clone(), source })?;
        out.push(Workload { name, image: t.image });
    }
    Ok(out)
}

/// Final states of both simulator modes for one image.
#[derive(Clone, Debug)]
pub struct BothRuns {
    pub functional: MachineState,
    pub pipelined: MachineState,
    pub stats: PipelineStats,
}

impl BothRuns {
    pub fn agree(&self) -> bool {
        self.functional == self.pipelined
    }
}

/// Runs `image` in both modes from the same cold state.
pub fn run_both(image: &ProgramImage, limit: u64) -> Result<BothRuns, SimError> {
    let mut functional = MachineState::new();
    functional.load_image(image, MemoryKind::Tim)?;
    let mut pipelined = functional.clone();
    run_functional(&mut functional, limit)?;
    let stats = run_pipelined(&mut pipelined, limit, false)?;
    Ok(BothRuns { functional, pipelined, stats })
}

fn bench_one(w: &Workload) -> Result<BenchRow, BenchError> {
    let runs = run_both(&w.image, BENCH_LIMIT).map_err(|source| BenchError::Sim { name: w.name.clone(), source })?;
    if !runs.agree() {
        return Err(BenchError::Mismatch { name: w.name.clone() });
    }
    let stats = &runs.stats;
    Ok(BenchRow {
        name: w.name.clone(),
        instructions: w.image.len(),
        memory_cells: code_size_cells(w.image.len() as u64, 0).trits,
        retired: runs.functional.retired,
        cycles: stats.cycles,
        stalls: stats.stalls(),
        squashes: stats.branch_squashes,
        ipc: stats.ipc(),
    })
}

/// Runs every workload on its own thread. Rows come back in input order.
pub fn run_bench(workloads: &[Workload]) -> Vec<Result<BenchRow, BenchError>> {
    thread::scope(|s| {
        let handles: Vec<_> = workloads.iter().map(|w| s.spawn(move || bench_one(w))).collect();
        handles.into_iter().map(|h| h.join().expect("bench thread panicked")).collect()
    })
}

pub fn format_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<16} {:>12} {:>12} {:>10} {:>10} {:>8} {:>8} {:>6}",
        "name", "instructions", "memory_cells", "retired", "cycles", "stalls", "squashes", "ipc"
    )
    .unwrap();
    for r in rows {
        writeln!(
            out,
            "{:<16} {:>12} {:>12} {:>10} {:>10} {:>8} {:>8} {:>6.3}",
            r.name, r.instructions, r.memory_cells, r.retired, r.cycles, r.stalls, r.squashes, r.ipc
        )
        .unwrap();
    }
    out
}
